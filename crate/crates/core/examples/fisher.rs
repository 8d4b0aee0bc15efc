//! Photon-counting Fisher information against the quantum Fisher information
//! of Fock and coherent probes.
//!
//! ```bash
//! cargo run --release -p multiport --example fisher
//! ```

use std::f64::consts::PI;

use multiport::devices::{InterferometerSpec, SplitterKind};
use multiport::estimation::fisher::{cfi, compare_probes};
use multiport::fock::FockState;

fn main() -> multiport::Result<()> {
    for kind in [SplitterKind::Tritter, SplitterKind::Quarter] {
        let spec = InterferometerSpec::mach_zehnder(kind);
        let input = FockState::ones(kind.modes());
        let cmp = compare_probes(&spec, &input, spec.phase_mode())?;
        println!("{kind}: H_fock = {:.6}", cmp.fock);
        for c in [&cmp.equal_total_photons, &cmp.equal_phase_mode_photons] {
            println!(
                "  coherent, {} (<n> = {:.3}): with reference {:.6}, phase-averaged {:.6}",
                c.normalization, c.mean_photons, c.with_reference, c.phase_averaged
            );
        }
        println!("  {:>8} {:>10}", "phi/pi", "I_phi");
        for k in 0..=12 {
            let phi = k as f64 * PI / 6.0;
            println!("  {:8.4} {:10.6}", phi / PI, cfi(&spec, &input, phi)?);
        }
    }
    Ok(())
}
