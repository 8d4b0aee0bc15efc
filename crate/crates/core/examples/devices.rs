//! Device matrices of the tritter and quarter splitters and their
//! Mach-Zehnder compositions.
//!
//! ```bash
//! cargo run -p multiport --example devices
//! ```

use std::f64::consts::PI;

use multiport::devices::{quarter, tritter, InterferometerSpec, MatrixExport, SplitterKind};

fn print(name: &str, u: &multiport::fock::ModeUnitary) {
    println!("{name} (unitarity residual {:.1e})", u.unitarity_residual());
    for i in 0..u.dimension() {
        let row: Vec<String> = (0..u.dimension())
            .map(|j| {
                let z = u.entry(i, j);
                format!("{:+.4}{:+.4}i", z.re, z.im)
            })
            .collect();
        println!("  [{}]", row.join("  "));
    }
}

fn main() -> multiport::Result<()> {
    let t = tritter();
    let q = quarter();
    print("tritter", &t);
    print("quarter", &q);
    print("quarter * quarter", &q.then(&q)?);

    for kind in [SplitterKind::Tritter, SplitterKind::Quarter] {
        let spec = InterferometerSpec::mach_zehnder(kind);
        print(&format!("{kind} Mach-Zehnder at phi = pi/2"), &spec.at(PI / 2.0, 0.0));
    }

    // Matrices serialize as row-major [re, im] pairs.
    let export = MatrixExport::new("tritter", &t);
    println!("{}", serde_json::to_string(&export)?);
    Ok(())
}
