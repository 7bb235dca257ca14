// Runs the decay scenario end to end and writes its CSV and SVG files under
// the system temp directory.

use kpp_carleman::harness::{run_experiment, Scenario};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("kpp-carleman-example");
    for scenario in [Scenario::Decay, Scenario::Simulate] {
        let artifacts = run_experiment(&scenario.config(), scenario, &dir.join(scenario.name()))?;
        for line in &artifacts.summary {
            println!("{line}");
        }
        for f in &artifacts.files {
            println!("  wrote {}", f.display());
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
