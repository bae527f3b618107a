//! Absorbing bound, the `mu` certificate and the time-averaged Lozinskii
//! measure along a baseline trajectory.

use pzf::equilibria::interior_equilibrium;
use pzf::global::{absorbing_bound, lozinskii_average, mu_certificate, weighted_total, BoundMode};
use pzf::integrate::{integrate, IntegratorConfig};
use pzf::model::{EffectiveParameters, State};

fn main() {
    let p = EffectiveParameters::baseline();
    let e = interior_equilibrium(&p).unwrap().state;
    let total = weighted_total(&p, &e);
    for mode in [BoundMode::Paper, BoundMode::Corrected] {
        let b = absorbing_bound(&p, mode);
        let verdict = if total <= b.rho { "contains" } else { "excludes" };
        println!("{mode:?}: v = {}, rho = {:.6}, {verdict} the coexistence state (aP+Z+F = {total:.4})", b.v, b.rho);
    }

    let rho = absorbing_bound(&p, BoundMode::Corrected).rho;
    let c = mu_certificate(&p, rho);
    println!("mu = {:.6} (holds: {})", c.mu, c.holds);

    let traj = integrate(&p, State::new(1.0, 1.0, 1.0), &IntegratorConfig::rk4(0.01, 500.0)).unwrap();
    let worst = traj.states.iter().map(|s| weighted_total(&p, s)).fold(0.0, f64::max);
    println!("max aP+Z+F along a 500-day run: {worst:.4}");
    let avg = lozinskii_average(&p, &traj).unwrap();
    println!(
        "mean Lozinskii measure {:.6}, inside 1 < x kP < 2 for {:.1}% of samples",
        avg.mean,
        100.0 * avg.window_fraction
    );
}
