//! Attractor classification over upstream salinity, printed as a table and
//! written as CSV for plotting a bifurcation diagram.

use pzf::attractor::{bifurcation_scan, AnalysisConfig, Execution, ModelSetup, ScanOutcome, ScanParameter};
use pzf::model::State;
use pzf::report::scan_csv;

fn main() {
    let cfg = AnalysisConfig::with_horizon(2000.0, 1000.0);
    let scan = bifurcation_scan(
        &ModelSetup::default(),
        ScanParameter::Su,
        5.0,
        8.5,
        15,
        State::new(1.0, 1.0, 1.0),
        &cfg,
        Execution::Parallel,
    )
    .unwrap();
    for (v, row) in scan.values.iter().zip(&scan.summaries) {
        match row {
            ScanOutcome::Ok(s) => println!(
                "sU = {v:.3}  {:<12}  lambda1 = {:+.5}  Z peaks: {}",
                s.kind.label(),
                s.lambda1,
                s.peak_values.len()
            ),
            ScanOutcome::Failed { error } => println!("sU = {v:.3}  failed: {error}"),
        }
    }
    let path = std::env::temp_dir().join("pzf_scan.csv");
    std::fs::write(&path, scan_csv(&scan)).unwrap();
    println!("table written to {}", path.display());
}
