//! Output fringes of the tritter and quarter interferometers, their Fourier
//! content and the comparison with the closed forms.
//!
//! ```bash
//! cargo run --release -p multiport --example fringes
//! ```

use std::f64::consts::PI;

use multiport::devices::{InterferometerSpec, SplitterKind};
use multiport::fock::FockState;
use multiport::fringes::{closed_form_check, fringe_scan, outcome_classes, PhaseGrid};

fn main() -> multiport::Result<()> {
    for kind in [SplitterKind::Tritter, SplitterKind::Quarter] {
        let spec = InterferometerSpec::mach_zehnder(kind);
        let m = kind.modes();
        let input = FockState::ones(m);
        println!("{kind}, input {input}");
        for (pattern, _) in outcome_classes(m, m) {
            let fringe = fringe_scan(&spec, &input, &pattern, &PhaseGrid::period(12))?;
            let harmonics: Vec<String> = fringe
                .fourier
                .iter()
                .filter(|h| h.amplitude > 1e-12)
                .map(|h| format!("A{}={:.5}", h.k, h.amplitude))
                .collect();
            println!(
                "  {:<12} P(pi/3) = {:.6}  {}  closed-form deviation {:.1e}",
                pattern.to_string(),
                fringe.samples[2].1,
                harmonics.join(" "),
                closed_form_check(&pattern, &spec)?
            );
        }
    }
    let spec = InterferometerSpec::mach_zehnder(SplitterKind::Tritter);
    let p = fringe_scan(
        &spec,
        &FockState::ones(3),
        &FockState::new(vec![2, 1, 0]),
        &PhaseGrid::new(PI / 3.0, PI / 3.0 + 1e-9, 1),
    )?;
    println!("P_210(pi/3) = {:.12} (8/81 = {:.12})", p.samples[0].1, 8.0 / 81.0);
    Ok(())
}
