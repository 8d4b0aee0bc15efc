//! N-fold visibilities of the Fock fringes against the classical bound.
//!
//! ```bash
//! cargo run --release -p multiport --example visibility
//! ```

use std::time::Instant;

use multiport::classical::{classical_visibility_bound, BoundSearch};
use multiport::devices::{InterferometerSpec, SplitterKind};
use multiport::fock::FockState;
use multiport::fringes::{fringe_scan, n_fold_visibility, outcome_classes, PhaseGrid};

fn main() -> multiport::Result<()> {
    for kind in [SplitterKind::Tritter, SplitterKind::Quarter] {
        let spec = InterferometerSpec::mach_zehnder(kind);
        let m = kind.modes();
        let input = FockState::ones(m);
        println!("{kind} interferometer, input {input}");
        for (pattern, members) in outcome_classes(m, m) {
            let started = Instant::now();
            let fringe = fringe_scan(&spec, &input, &pattern, &PhaseGrid::period(64))?;
            let bound = classical_visibility_bound(&spec, &pattern, &BoundSearch::default())?;
            let report = n_fold_visibility(&fringe)?.with_bound(bound.gamma);
            println!(
                "  {:<12} V = {:.6}  Gamma = {:.6}  nonclassical = {:<5}  ({} outcomes, {:.1?})",
                pattern.to_string(),
                report.n_fold_visibility,
                bound.gamma,
                report.nonclassical.unwrap_or(false),
                members.len(),
                started.elapsed()
            );
        }
    }
    Ok(())
}
