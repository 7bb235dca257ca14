macro_rules! example {
    ($module:ident, $file:literal, $test:ident) => {
        mod $module {
            include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/", $file));
        }

        #[test]
        fn $test() {
            $module::run_example().expect(concat!($file, " should run"));
        }
    };
}

example!(no_resonance, "no_resonance_table.rs", no_resonance_table_runs);
example!(diagonalize, "diagonalize_carleman.rs", diagonalize_carleman_runs);
example!(chebyshev, "chebyshev_matexp.rs", chebyshev_matexp_runs);
example!(collocation, "spectral_collocation.rs", spectral_collocation_runs);
example!(stepping, "euler_taylor.rs", euler_taylor_runs);
example!(measurement, "measurement.rs", measurement_runs);
example!(resources, "resource_estimate.rs", resource_estimate_runs);
example!(reference, "fisher_kpp_reference.rs", fisher_kpp_reference_runs);
example!(higher, "higher_degree.rs", higher_degree_runs);
