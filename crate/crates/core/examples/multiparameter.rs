//! Two-phase estimation: quantum Fisher matrices, weak commutativity and
//! Cramér-Rao bounds for Fock and coherent probes.
//!
//! ```bash
//! cargo run --release -p multiport --example multiparameter
//! ```

use multiport::devices::{InterferometerSpec, SplitterKind};
use multiport::fock::FockState;
use multiport::multiparameter::{
    bounds, compare_multiparameter, qfim_sld, weak_commutativity, QfiMatrix,
};

fn show(name: &str, h: &QfiMatrix) {
    let rows: Vec<String> = h
        .entries
        .iter()
        .map(|r| format!("[{}]", r.iter().map(|x| format!("{x:8.4}")).collect::<Vec<_>>().join(" ")))
        .collect();
    println!("  {name:<24} {}", rows.join(" "));
}

fn main() -> multiport::Result<()> {
    for kind in [SplitterKind::Tritter, SplitterKind::Quarter] {
        let m = kind.modes();
        let modes = [m - 2, m - 1];
        let spec = InterferometerSpec::multi_phase(kind, &modes)?;
        let input = FockState::ones(m);
        let lambda = [0.3, -0.7];
        let cmp = compare_multiparameter(&spec, &input, &modes)?;
        println!("{kind}, phases on modes {} and {}", modes[0] + 1, modes[1] + 1);
        show("Fock", &cmp.fock);
        show("Fock (SLD)", &qfim_sld(&spec, &input, &modes, &lambda)?);
        show("coherent, reference", &cmp.coherent_reference);
        show("coherent, phase-averaged", &cmp.coherent_averaged);
        println!(
            "  weak commutativity residual {:.1e}",
            weak_commutativity(&spec, &input, &modes, &lambda)?
        );
        println!(
            "  effective QFI: Fock {:?}, coherent (ii) {:?}",
            cmp.fock_effective, cmp.coherent_averaged_effective
        );
        let b = bounds(&cmp.fock, 10_000)?;
        println!(
            "  M = 1e4: per-phase bounds {:?}, summed variance >= {:.3e}",
            b.per_parameter, b.total_variance
        );
    }
    Ok(())
}
