//! Output states of a single splitter fed one photon per mode, with the
//! weight of each index-permutation class.
//!
//! ```bash
//! cargo run -p multiport --example output_states
//! ```

use multiport::devices::SplitterKind;
use multiport::fock::{evolve_fock, FockState};
use multiport::fringes::outcome_classes;

fn main() -> multiport::Result<()> {
    for kind in [SplitterKind::Tritter, SplitterKind::Quarter] {
        let m = kind.modes();
        let input = FockState::ones(m);
        let out = evolve_fock(&kind.unitary(), &input)?;
        println!("{kind}: {input} ->");
        for (pattern, members) in outcome_classes(m, m) {
            let weight: f64 = members.iter().map(|s| out.probability(s)).sum();
            let amp = out.amplitude(&members[0]);
            println!(
                "  {:<12} weight {:.6}  (per member {:.6}, amplitude {:+.4}{:+.4}i)",
                pattern.to_string(),
                weight,
                amp.norm_sqr(),
                amp.re,
                amp.im
            );
        }
        println!("  norm {:.15}", out.norm_sqr());
    }
    Ok(())
}
