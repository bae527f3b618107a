//! Steady states of the baseline estuary and how they move with salinity.

use pzf::equilibria::{all_equilibria, interior_equilibrium};
use pzf::model::{derive_effective, DilutionMode, RawParameters};

fn main() {
    let raw = RawParameters::baseline();
    let derived = derive_effective(&raw, DilutionMode::Downstream).expect("baseline is valid");
    println!("delta = {:.6}, gS = {:.6}", derived.provenance.delta.unwrap(), derived.params.g_s);

    for e in all_equilibria(&derived.params) {
        println!(
            "{:<9?} P = {:>9.5}  Z = {:>9.5}  F = {:>9.5}  feasible = {:<5}  residual = {:.1e}",
            e.kind, e.state.p, e.state.z, e.state.f, e.feasible, e.residual
        );
    }

    println!("\nupstream salinity sweep (interior state):");
    for i in 0..=12 {
        let s_u = 6.0 + 0.25 * i as f64;
        let p = derive_effective(&RawParameters { s_u, ..raw.clone() }, DilutionMode::Downstream).unwrap().params;
        match interior_equilibrium(&p) {
            Ok(e) => println!("  sU = {s_u:5.2}  ({:.4}, {:.4}, {:.4})", e.state.p, e.state.z, e.state.f),
            Err(why) => println!("  sU = {s_u:5.2}  none: {why}"),
        }
    }
}
