//! Looks for a Hopf point of the coexistence state in upstream salinity
//! under each dilution convention, and in fish mortality.

use pzf::attractor::{hopf_locate, ModelSetup, ScanParameter};
use pzf::model::{DilutionMode, RawParameters};

fn main() {
    for mode in DilutionMode::ALL {
        let setup = ModelSetup { raw: RawParameters::baseline(), mode };
        match hopf_locate(&setup, ScanParameter::Su, 5.0, 8.23, 1e-6) {
            Ok(h) => println!("{mode:<10} sU* = {:.6}", h.value),
            Err(e) => println!("{mode:<10} {e}"),
        }
    }

    let setup = ModelSetup::default();
    match hopf_locate(&setup, ScanParameter::M3, 0.05, 0.324, 1e-8) {
        Ok(h) => println!("m3* = {:.8}, eigenvalues {:?}", h.value, h.eigenvalues),
        Err(e) => println!("m3: {e}"),
    }
}
