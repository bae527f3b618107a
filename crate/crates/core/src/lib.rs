//! Salinity-coupled phytoplankton–zooplankton–fish food chain.
//!
//! The grazing rate of zooplankton on phytoplankton is scaled by a dilution
//! factor computed from upstream and downstream salinity. The crate covers
//! the usual path through such a model:
//!
//! - [`model`]: parameters, the vector field and its Jacobian
//! - [`equilibria`]: closed-form steady states
//! - [`stability`]: characteristic cubic, Routh–Hurwitz, eigenvalues
//! - [`global`]: absorbing bound, the `mu` certificate, Lozinskii measure
//! - [`integrate`]: RK4 and Dormand–Prince integration, tangent frames
//! - [`attractor`]: peaks, periods, Lyapunov exponents, scans, Hopf search
//! - [`config`], [`report`], [`cli`]: configuration files, outputs, the `pzf` binary
//!
//! Runnable examples live in `examples/`:
//!
//! ```text
//! cargo run --release --example equilibria
//! cargo run --release --example local_stability
//! cargo run --release --example global_stability
//! cargo run --release --example simulate
//! cargo run --release --example lyapunov_chaos
//! cargo run --release --example bifurcation_scan
//! cargo run --release --example hopf_search
//! cargo run --release --example salinity_collapse
//! ```
//!
//! ```
//! use pzf::equilibria::interior_equilibrium;
//! use pzf::model::EffectiveParameters;
//!
//! let p = EffectiveParameters::baseline();
//! let e = interior_equilibrium(&p).unwrap();
//! assert!((e.state.z - 8.9557).abs() < 1e-3);
//! ```

// Negated float comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attractor;
pub mod cli;
pub mod config;
pub mod equilibria;
pub mod global;
pub mod integrate;
pub mod model;
pub mod report;
pub mod stability;
