//! Integrates the baseline system and writes a CSV time series.
//!
//! `cargo run --release --example simulate -- out.csv`

use std::path::PathBuf;

use pzf::integrate::{integrate, IntegratorConfig};
use pzf::model::{EffectiveParameters, State};
use pzf::report::write_timeseries_csv;

fn main() {
    let path =
        std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("pzf_timeseries.csv"));
    let p = EffectiveParameters::baseline();
    let cfg = IntegratorConfig { sample_every: 100, ..IntegratorConfig::rk4(0.01, 1000.0) };
    let traj = integrate(&p, State::new(1.0, 1.0, 1.0), &cfg).expect("baseline run");

    for (t, s) in traj.times.iter().zip(&traj.states).step_by(10) {
        println!("t = {t:7.1}  P = {:.5}  Z = {:.5}  F = {:.5}", s.p, s.z, s.f);
    }
    write_timeseries_csv(&traj, &path).unwrap();
    println!("{} samples written to {}", traj.len(), path.display());
}
