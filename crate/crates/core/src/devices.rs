//! Canonical multiport splitters and the generalized Mach-Zehnder sandwich.
//!
//! Phase shifts use the sign convention `U_phi = exp(-i n_k phi)`, i.e. the
//! phase-shifter matrix carries `e^{-i phi}` on its mode. Mode indices are
//! 0-based in this API; user-facing interfaces (CLI, reports) print them
//! 1-based.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::ModeUnitary;

/// Symmetric tritter, `(1/sqrt 3) [[1, w, w], [w, 1, w], [w, w, 1]]`, `w = e^{i 2 pi / 3}`.
pub fn tritter() -> ModeUnitary {
    let s = 1.0 / 3f64.sqrt();
    let one = Complex64::new(s, 0.0);
    let w = Complex64::from_polar(s, 2.0 * PI / 3.0);
    let m = DMatrix::from_fn(3, 3, |i, j| if i == j { one } else { w });
    ModeUnitary::new(m).expect("tritter is unitary")
}

/// Symmetric real quarter: `1/2` on the diagonal, `-1/2` elsewhere. Involutory.
pub fn quarter() -> ModeUnitary {
    let m = DMatrix::from_fn(4, 4, |i, j| Complex64::new(if i == j { 0.5 } else { -0.5 }, 0.0));
    ModeUnitary::new(m).expect("quarter is unitary")
}

/// Diagonal phase shifter with `e^{-i phase}` on `mode`.
pub fn phase_shifter(mode_count: usize, mode: usize, phase: f64) -> Result<ModeUnitary> {
    phase_layer(mode_count, &[(mode, phase)])
}

/// Diagonal phase layer; phases on the same mode add.
pub fn phase_layer(mode_count: usize, phases: &[(usize, f64)]) -> Result<ModeUnitary> {
    let mut diag = vec![0.0; mode_count];
    for &(mode, phase) in phases {
        if mode >= mode_count {
            return Err(Error::ModeOutOfRange {
                index: mode,
                modes: mode_count,
            });
        }
        diag[mode] += phase;
    }
    let mut m = DMatrix::<Complex64>::identity(mode_count, mode_count);
    for (k, phase) in diag.into_iter().enumerate() {
        m[(k, k)] = Complex64::from_polar(1.0, -phase);
    }
    Ok(ModeUnitary::new_unchecked(m))
}

/// `then * first`: the network that applies `first`, then `then`.
pub fn compose(first: &ModeUnitary, then: &ModeUnitary) -> Result<ModeUnitary> {
    first.then(then)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitterKind {
    Tritter,
    Quarter,
}

impl SplitterKind {
    pub fn modes(self) -> usize {
        match self {
            SplitterKind::Tritter => 3,
            SplitterKind::Quarter => 4,
        }
    }

    pub fn unitary(self) -> ModeUnitary {
        match self {
            SplitterKind::Tritter => tritter(),
            SplitterKind::Quarter => quarter(),
        }
    }
}

impl fmt::Display for SplitterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitterKind::Tritter => "tritter",
            SplitterKind::Quarter => "quarter",
        })
    }
}

impl std::str::FromStr for SplitterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tritter" => Ok(SplitterKind::Tritter),
            "quarter" => Ok(SplitterKind::Quarter),
            other => Err(Error::Parse(format!("unknown device {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseRole {
    /// The phase being estimated.
    Unknown,
    /// Controlled phase added by the experimenter.
    Feedback,
}

impl PhaseRole {
    fn name(self) -> &'static str {
        match self {
            PhaseRole::Unknown => "unknown",
            PhaseRole::Feedback => "feedback",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PhaseSlot {
    pub mode: usize,
    pub role: PhaseRole,
}

/// `U_splitter * U_phases * U_splitter` with phases on selected internal modes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterferometerSpec {
    splitter: SplitterKind,
    slots: Vec<PhaseSlot>,
}

impl InterferometerSpec {
    pub fn new(splitter: SplitterKind, slots: Vec<PhaseSlot>) -> Result<Self> {
        let modes = splitter.modes();
        for (i, slot) in slots.iter().enumerate() {
            if slot.mode >= modes {
                return Err(Error::ModeOutOfRange {
                    index: slot.mode,
                    modes,
                });
            }
            if slots[..i].contains(slot) {
                return Err(Error::DuplicateMode(slot.mode));
            }
        }
        Ok(InterferometerSpec { splitter, slots })
    }

    /// Unknown phase and feedback phase both on the last mode: the single-phase
    /// interferometers of the tritter (mode 3) and quarter (mode 4).
    pub fn mach_zehnder(splitter: SplitterKind) -> Self {
        let mode = splitter.modes() - 1;
        InterferometerSpec {
            splitter,
            slots: vec![
                PhaseSlot {
                    mode,
                    role: PhaseRole::Unknown,
                },
                PhaseSlot {
                    mode,
                    role: PhaseRole::Feedback,
                },
            ],
        }
    }

    /// Unknown phases on the given modes; the remaining modes are the reference.
    pub fn multi_phase(splitter: SplitterKind, modes: &[usize]) -> Result<Self> {
        let slots = modes
            .iter()
            .map(|&mode| PhaseSlot {
                mode,
                role: PhaseRole::Unknown,
            })
            .collect();
        InterferometerSpec::new(splitter, slots)
    }

    pub fn splitter(&self) -> SplitterKind {
        self.splitter
    }

    pub fn modes(&self) -> usize {
        self.splitter.modes()
    }

    pub fn slots(&self) -> &[PhaseSlot] {
        &self.slots
    }

    /// Mode carrying the (first) unknown phase.
    pub fn phase_mode(&self) -> usize {
        self.slots
            .iter()
            .find(|s| s.role == PhaseRole::Unknown)
            .or(self.slots.first())
            .map_or(self.modes() - 1, |s| s.mode)
    }

    /// Builds the full network; every declared slot needs a value.
    pub fn build(&self, phases: &HashMap<PhaseSlot, f64>) -> Result<ModeUnitary> {
        let mut layer = Vec::with_capacity(self.slots.len());
        for slot in &self.slots {
            let phase = phases.get(slot).ok_or(Error::MissingPhase {
                mode: slot.mode,
                role: slot.role.name(),
            })?;
            layer.push((slot.mode, *phase));
        }
        self.sandwich(&layer)
    }

    /// Network with total phase `phi + psi` on [`phase_mode`](Self::phase_mode).
    pub fn at(&self, phi: f64, psi: f64) -> ModeUnitary {
        self.sandwich(&[(self.phase_mode(), phi + psi)])
            .expect("phase mode is in range")
    }

    /// Network with the given `(mode, phase)` list as the middle layer.
    pub fn sandwich(&self, phases: &[(usize, f64)]) -> Result<ModeUnitary> {
        let splitter = self.splitter.unitary();
        let layer = phase_layer(self.modes(), phases)?;
        splitter.then(&layer)?.then(&splitter)
    }
}

/// Row-major `[re, im]` pairs, for exporting device matrices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixExport {
    pub name: String,
    pub dimension: usize,
    pub entries: Vec<Vec<[f64; 2]>>,
    pub unitarity_residual: f64,
}

impl MatrixExport {
    pub fn new(name: &str, unitary: &ModeUnitary) -> Self {
        let n = unitary.dimension();
        MatrixExport {
            name: name.to_string(),
            dimension: n,
            entries: (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| {
                            let z = unitary.entry(i, j);
                            [z.re, z.im]
                        })
                        .collect()
                })
                .collect(),
            unitarity_residual: unitary.unitarity_residual(),
        }
    }

    pub fn to_unitary(&self) -> Result<ModeUnitary> {
        let n = self.dimension;
        let m = DMatrix::from_fn(n, n, |i, j| {
            let [re, im] = self.entries[i][j];
            Complex64::new(re, im)
        });
        ModeUnitary::new(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_dev(a: &ModeUnitary, b: &ModeUnitary) -> f64 {
        (a.matrix() - b.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn tritter_entries() {
        let t = tritter();
        let s = 1.0 / 3f64.sqrt();
        assert!((t.entry(0, 0) - Complex64::new(s, 0.0)).norm() < 1e-15);
        assert!((t.entry(0, 1) - Complex64::from_polar(s, 2.0 * PI / 3.0)).norm() < 1e-15);
        assert!(t.unitarity_residual() < 1e-15);
    }

    #[test]
    fn quarter_is_involution() {
        let q = quarter();
        assert_eq!(q.entry(0, 0), Complex64::new(0.5, 0.0));
        assert_eq!(q.entry(0, 1), Complex64::new(-0.5, 0.0));
        let qq = compose(&q, &q).unwrap();
        assert!(max_dev(&qq, &ModeUnitary::identity(4)) < 1e-14);
        for i in 0..4 {
            let norm: f64 = (0..4).map(|j| q.entry(i, j).norm_sqr()).sum();
            assert!((norm - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn phase_shifter_values() {
        let p = phase_shifter(3, 2, 0.0).unwrap();
        assert!(max_dev(&p, &ModeUnitary::identity(3)) < 1e-15);
        let p = phase_shifter(3, 2, PI).unwrap();
        assert!((p.entry(2, 2) - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
        let p = phase_shifter(4, 3, PI / 2.0).unwrap();
        assert!((p.entry(3, 3) - Complex64::new(0.0, -1.0)).norm() < 1e-15);
        assert!(matches!(
            phase_shifter(3, 3, 0.0),
            Err(Error::ModeOutOfRange { .. })
        ));
    }

    #[test]
    fn compose_identity_and_mismatch() {
        let t = tritter();
        assert!(max_dev(&compose(&ModeUnitary::identity(3), &t).unwrap(), &t) < 1e-15);
        assert!(compose(&t, &quarter()).is_err());
    }

    #[test]
    fn zero_phase_interferometers() {
        let t = tritter();
        let tt = compose(&t, &t).unwrap();
        let spec = InterferometerSpec::mach_zehnder(SplitterKind::Tritter);
        assert!(max_dev(&spec.at(0.0, 0.0), &tt) < 1e-15);
        let spec = InterferometerSpec::mach_zehnder(SplitterKind::Quarter);
        assert!(max_dev(&spec.at(0.0, 0.0), &ModeUnitary::identity(4)) < 1e-14);
    }

    #[test]
    fn build_requires_every_slot() {
        let spec = InterferometerSpec::mach_zehnder(SplitterKind::Tritter);
        let mut phases = HashMap::new();
        phases.insert(spec.slots()[0], 0.4);
        assert!(matches!(spec.build(&phases), Err(Error::MissingPhase { .. })));
        phases.insert(spec.slots()[1], 0.3);
        let built = spec.build(&phases).unwrap();
        assert!(max_dev(&built, &spec.at(0.7, 0.0)) < 1e-14);
    }

    #[test]
    fn spec_validation() {
        assert!(InterferometerSpec::multi_phase(SplitterKind::Tritter, &[1, 1]).is_err());
        assert!(InterferometerSpec::multi_phase(SplitterKind::Tritter, &[3]).is_err());
        assert!(InterferometerSpec::multi_phase(SplitterKind::Quarter, &[2, 3]).is_ok());
    }

    #[test]
    fn export_round_trip() {
        let e = MatrixExport::new("tritter", &tritter());
        let json = serde_json::to_string(&e).unwrap();
        let back: MatrixExport = serde_json::from_str(&json).unwrap();
        assert!(max_dev(&back.to_unitary().unwrap(), &tritter()) < 1e-15);
    }
}
