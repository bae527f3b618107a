//! Largest Lyapunov exponent on three regimes: the baseline focus, a limit
//! cycle and the chaotic tri-trophic benchmark.

use pzf::attractor::{classify_attractor, AnalysisConfig};
use pzf::model::{EffectiveParameters, State};

fn main() {
    let hp = EffectiveParameters::hastings_powell();
    let cycle = EffectiveParameters { k_z: 1.0 / 2.2, g_s: 5.0 / 2.2, ..hp };
    let cases = [
        ("baseline", EffectiveParameters::baseline(), State::new(1.0, 1.0, 1.0), 4000.0, 2000.0, 0.01),
        ("limit cycle", cycle, State::new(0.8, 0.2, 9.0), 4000.0, 1000.0, 0.05),
        ("benchmark chaos", hp, State::new(0.8, 0.2, 9.0), 10000.0, 1000.0, 0.05),
    ];
    for (name, p, s0, t_end, transient, dt) in cases {
        let mut cfg = AnalysisConfig::with_horizon(t_end, transient);
        cfg.integrator.dt = dt;
        let s = classify_attractor(&p, s0, &cfg).unwrap();
        println!(
            "{name:<16} lambda1 = {:+.5}/day  converged = {:<5}  kind = {:?}",
            s.lambda1, s.lyapunov.converged, s.kind
        );
    }
}
