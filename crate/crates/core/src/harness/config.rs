use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pde::FisherKppProblem;
use crate::solvers::SolverKind;

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "KPP_CARLEMAN_OUT";

/// `gamma = "auto"` (`γ = ‖u_in‖/R`), `gamma = "none"` (γ = 1) or a number.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GammaRepr", into = "GammaRepr")]
pub enum GammaPolicy {
    Auto,
    Fixed(f64),
}

#[derive(Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum GammaRepr {
    Value(f64),
    Name(String),
}

impl TryFrom<GammaRepr> for GammaPolicy {
    type Error = String;

    fn try_from(r: GammaRepr) -> std::result::Result<Self, String> {
        match r {
            GammaRepr::Value(v) => Ok(GammaPolicy::Fixed(v)),
            GammaRepr::Name(s) => s.parse(),
        }
    }
}

impl From<GammaPolicy> for GammaRepr {
    fn from(g: GammaPolicy) -> Self {
        match g {
            GammaPolicy::Auto => GammaRepr::Name("auto".into()),
            GammaPolicy::Fixed(v) => GammaRepr::Value(v),
        }
    }
}

impl std::str::FromStr for GammaPolicy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "auto" => Ok(GammaPolicy::Auto),
            "none" => Ok(GammaPolicy::Fixed(1.0)),
            other => other
                .parse::<f64>()
                .map(GammaPolicy::Fixed)
                .map_err(|_| format!("gamma must be \"auto\", \"none\" or a number, got {other:?}")),
        }
    }
}

impl GammaPolicy {
    pub fn value(&self) -> Option<f64> {
        match self {
            GammaPolicy::Auto => None,
            GammaPolicy::Fixed(g) => Some(*g),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CarlemanConfig {
    /// Interior grid points.
    pub n: usize,
    /// Truncation order `N`.
    pub order: usize,
    pub gamma: GammaPolicy,
    /// Retries with `n + 1` after a resonance failure.
    pub resonance_retries: usize,
}

impl Default for CarlemanConfig {
    fn default() -> Self {
        Self {
            n: 8,
            order: 3,
            gamma: GammaPolicy::Auto,
            resonance_retries: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub kind: SolverKind,
    /// Euler / Taylor steps, or stepped-Chebyshev sub-steps.
    pub steps: usize,
    /// Taylor order `K`.
    pub taylor_order: usize,
    /// Fixed Chebyshev order for the stepped propagator; `0` picks the order from `eps`.
    pub chebyshev_order: usize,
    pub eps: f64,
    /// Collocation degree `r`.
    pub collocation_order: usize,
    /// Collocation intervals; `0` uses `⌈‖A‖T/2⌉`.
    pub intervals: usize,
    /// Points on the error-vs-time grid.
    pub samples: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            kind: SolverKind::Euler,
            steps: 5000,
            taylor_order: 4,
            chebyshev_order: 0,
            eps: 1e-8,
            collocation_order: 12,
            intervals: 0,
            samples: 100,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Empty means `$KPP_CARLEMAN_OUT`, else `./out`.
    pub dir: PathBuf,
    pub svg: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::new(),
            svg: true,
        }
    }
}

/// Full run description, readable from TOML.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub problem: FisherKppProblem,
    pub carleman: CarlemanConfig,
    pub solver: SolverConfig,
    pub output: OutputConfig,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            problem: FisherKppProblem::desk(),
            carleman: CarlemanConfig::default(),
            solver: SolverConfig::default(),
            output: OutputConfig::default(),
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let c: RunConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.problem.validate().map_err(|e| Error::Config(e.to_string()))?;
        let c = &self.carleman;
        if c.n == 0 || c.order == 0 {
            return Err(Error::Config("n and N must be at least 1".into()));
        }
        if let GammaPolicy::Fixed(g) = c.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::Config(format!("gamma must be positive and finite, got {g}")));
            }
        }
        let s = &self.solver;
        if s.kind == SolverKind::Reference {
            return Err(Error::Config("solver kind must be a Carleman propagator".into()));
        }
        if !(s.eps > 0.0 && s.eps < 1.0) {
            return Err(Error::Config("eps must lie in (0, 1)".into()));
        }
        if s.steps == 0 || s.taylor_order == 0 || s.collocation_order == 0 || s.samples == 0 {
            return Err(Error::Config("steps, orders and samples must be positive".into()));
        }
        Ok(())
    }

    /// Configured directory, else `$KPP_CARLEMAN_OUT`, else `./out`.
    pub fn output_dir(&self) -> PathBuf {
        if !self.output.dir.as_os_str().is_empty() {
            return self.output.dir.clone();
        }
        default_output_dir()
    }
}

pub fn default_output_dir() -> PathBuf {
    std::env::var_os(OUTPUT_DIR_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("out"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pde::Profile;

    #[test]
    fn defaults_are_desk_problem() {
        let c = RunConfig::default();
        assert_eq!(c.problem, FisherKppProblem::desk());
        assert_eq!(c.carleman.order, 3);
        c.validate().unwrap();
    }

    #[test]
    fn toml_round_trip() {
        let mut c = RunConfig::default();
        c.carleman.gamma = GammaPolicy::Fixed(1.25);
        c.problem.profile = Profile::Gaussian {
            amplitude: 0.2,
            center: 0.5,
            width: 0.1,
        };
        c.solver.kind = SolverKind::Taylor;
        let s = c.to_toml_string().unwrap();
        assert_eq!(RunConfig::from_toml_str(&s).unwrap(), c);
    }

    #[test]
    fn partial_config() {
        let c = RunConfig::from_toml_str(
            "[carleman]\nn = 4\ngamma = \"auto\"\n[solver]\nkind = \"matexp\"\neps = 1e-6\n",
        )
        .unwrap();
        assert_eq!(c.carleman.n, 4);
        assert_eq!(c.carleman.gamma, GammaPolicy::Auto);
        assert_eq!(c.solver.kind, SolverKind::Matexp);
        assert_eq!(c.problem.diffusion, 0.2);
        let g = RunConfig::from_toml_str("[carleman]\ngamma = \"none\"\n").unwrap();
        assert_eq!(g.carleman.gamma, GammaPolicy::Fixed(1.0));
    }

    #[test]
    fn rejects_bad_config() {
        for s in [
            "[carleman]\nn = 0\n",
            "[carleman]\ngamma = -1.0\n",
            "[carleman]\ngamma = \"sometimes\"\n",
            "[solver]\neps = 2.0\n",
            "[solver]\nkind = \"reference\"\n",
            "[problem]\nhorizon = -1.0\n",
            "bogus = 1\n",
        ] {
            let err = RunConfig::from_toml_str(s).unwrap_err();
            assert!(matches!(err, Error::Config(_)), "{s}");
            assert_eq!(err.exit_code(), 2);
        }
    }
}
