//! Fish extinction as upstream salinity rises past the feasibility edge of
//! the coexistence state.

use pzf::attractor::{classify_attractor, AnalysisConfig, ModelSetup, ScanParameter};
use pzf::equilibria::{boundary_equilibrium, interior_equilibrium};
use pzf::integrate::{integrate, IntegratorConfig};
use pzf::model::State;
use pzf::stability::classify_equilibrium;

fn main() {
    let s0 = State::new(1.0, 1.0, 1.0);
    for s_u in [8.23, 8.30, 8.40, 8.51] {
        let p = ModelSetup::default().with(ScanParameter::Su, s_u).effective().unwrap();
        let interior = match interior_equilibrium(&p) {
            Ok(e) => format!("F* = {:.4}", e.state.f),
            Err(why) => why.to_string(),
        };
        let b = boundary_equilibrium(&p).unwrap();
        let fish_free = classify_equilibrium(&p, &b).unwrap().classification;
        let traj = integrate(&p, s0, &IntegratorConfig::rk4(0.01, 1000.0)).unwrap();
        let f_at = |t: f64| traj.states[traj.times.partition_point(|x| *x < t)].f;
        let kind = classify_attractor(&p, s0, &AnalysisConfig::with_horizon(4000.0, 2000.0)).unwrap().kind;
        println!(
            "sU = {s_u:.2}: {interior}; fish-free state {fish_free:?}; F(500) = {:.2e}, F(1000) = {:.2e}; {:?}",
            f_at(500.0),
            f_at(1000.0),
            kind
        );
    }
}
