//! Fixtures shared by the benchmarks.

use sfcsim::{builtin_case, NetworkSolver, Scenario, SimConfig};

/// Builtin case with its default configuration.
pub fn case(n: usize) -> (Scenario, SimConfig) {
    let sc = builtin_case(n).expect("builtin case");
    let cfg = sc.config;
    (sc, cfg)
}

/// Network solver at the pre-fault operating point of `case`.
pub fn prefault_solver(n: usize) -> (NetworkSolver, sfcsim::Phasor) {
    let (sc, _) = case(n);
    let lf = sc.loadflow().expect("load flow");
    let feeder = lf.feeder(&sc.feeder_template().expect("feeder"));
    (NetworkSolver::new(&feeder).expect("solver"), lf.e_inv0)
}
