//! Routh–Hurwitz coefficients and eigenvalues at each steady state.

use pzf::equilibria::all_equilibria;
use pzf::model::EffectiveParameters;
use pzf::stability::classify_equilibrium;

fn main() {
    let p = EffectiveParameters::baseline();
    for e in all_equilibria(&p) {
        let r = classify_equilibrium(&p, &e).expect("closed-form states have tiny residuals");
        println!("{:?} at ({:.4}, {:.4}, {:.4})", e.kind, e.state.p, e.state.z, e.state.f);
        println!("  D1 = {:.6e}  D2 = {:.6e}  D3 = {:.6e}  D1 D2 - D3 = {:.6e}", r.d1, r.d2, r.d3, r.margin);
        for l in r.eigenvalues {
            println!("  lambda = {:+.6} {:+.6}i", l.re, l.im);
        }
        println!("  -> {:?}", r.classification);
    }
}
