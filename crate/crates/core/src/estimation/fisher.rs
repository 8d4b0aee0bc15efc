//! Quantum and classical Fisher information of the interferometer probes.
//!
//! The probe is the state right after the first splitter; the phase shift
//! `exp(-i n_k phi)` is generated by the photon-number operator of the phase
//! mode. For a pure probe `H = 4 Var(n_k)`, independent of `phi`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::devices::InterferometerSpec;
use crate::error::{Error, Result};
use crate::fock::{evolve_fock, CoherentState, FockState, StateVector};
use crate::fringes::FringeModel;

/// Probabilities below this are treated as zeros of the fringe.
pub const ZERO_PROBABILITY: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeKind {
    Fock,
    CoherentWithReference,
    CoherentPhaseAveraged,
}

/// State after the first splitter.
pub fn fock_probe(spec: &InterferometerSpec, input: &FockState) -> Result<StateVector> {
    if input.modes() != spec.modes() {
        return Err(Error::ModeMismatch {
            expected: spec.modes(),
            actual: input.modes(),
        });
    }
    evolve_fock(&spec.splitter().unitary(), input)
}

fn occupation_variance(state: &StateVector, mode: usize) -> f64 {
    let mean = state.occupation_moment(|s| s.occupation(mode) as f64);
    let second = state.occupation_moment(|s| (s.occupation(mode) as f64).powi(2));
    second - mean * mean
}

/// `4 Var(n_mode)` on the Fock probe.
pub fn qfi_fock(spec: &InterferometerSpec, input: &FockState, phase_mode: usize) -> Result<f64> {
    check_mode(spec, phase_mode)?;
    Ok(4.0 * occupation_variance(&fock_probe(spec, input)?, phase_mode))
}

fn check_mode(spec: &InterferometerSpec, mode: usize) -> Result<()> {
    if mode >= spec.modes() {
        return Err(Error::ModeOutOfRange {
            index: mode,
            modes: spec.modes(),
        });
    }
    Ok(())
}

/// QFI of a coherent probe.
///
/// With a phase reference the probe is the pure coherent state `|beta>`,
/// `beta = S alpha`, and `H = 4 |beta_k|^2`. Without one, averaging over a
/// common phase leaves `sum_N p_N |psi_N><psi_N|` over fixed-photon sectors;
/// the generator preserves each sector, so `H = sum_N p_N 4 Var_{psi_N}(n_k)`.
pub fn qfi_coherent(
    spec: &InterferometerSpec,
    input: &CoherentState,
    phase_mode: usize,
    reference: bool,
) -> Result<f64> {
    check_mode(spec, phase_mode)?;
    if input.modes() != spec.modes() {
        return Err(Error::ModeMismatch {
            expected: spec.modes(),
            actual: input.modes(),
        });
    }
    let tail = input.tail_mass();
    if tail >= crate::fock::TRUNCATION_TAIL {
        return Err(Error::Truncation {
            truncation: input.truncation(),
            tail,
        });
    }
    let probe = input.transformed(&spec.splitter().unitary());
    if reference {
        return Ok(4.0 * probe.alphas()[phase_mode].norm_sqr());
    }
    let weights = probe.photon_number_weights();
    let mut h = 0.0;
    for (n, p) in weights.into_iter().enumerate() {
        if let Some(sector) = probe.sector(n) {
            h += p * 4.0 * occupation_variance(&sector, phase_mode);
        }
    }
    Ok(h)
}

/// QFI of a density matrix under a diagonal generator, from its eigenbasis:
/// `H = 2 sum_{ij} (l_i - l_j)^2 / (l_i + l_j) |<i|G|j>|^2`.
pub fn qfi_mixed(rho: &DMatrix<Complex64>, generator: &[f64]) -> f64 {
    let eig = rho.clone().symmetric_eigen();
    let vecs = &eig.eigenvectors;
    let n = rho.nrows();
    // <i|G|j> with G diagonal in the original basis.
    let g = DMatrix::from_fn(n, n, |i, j| {
        (0..n)
            .map(|k| vecs[(k, i)].conj() * generator[k] * vecs[(k, j)])
            .sum::<Complex64>()
    });
    let mut h = 0.0;
    for i in 0..n {
        for j in 0..n {
            let (li, lj) = (eig.eigenvalues[i].max(0.0), eig.eigenvalues[j].max(0.0));
            if li + lj > 1e-12 {
                h += 2.0 * (li - lj).powi(2) / (li + lj) * g[(i, j)].norm_sqr();
            }
        }
    }
    h
}

/// `|psi><psi|`.
pub fn density_matrix(state: &StateVector) -> DMatrix<Complex64> {
    let a = state.amplitudes();
    DMatrix::from_fn(a.len(), a.len(), |i, j| a[i] * a[j].conj())
}

/// Photon-counting Fisher information `sum_x (dp_x)^2 / p_x` at total phase `x`.
///
/// Derivatives come from the exact cosine series. Where `p_x` vanishes the
/// fringe has a double zero and the term tends to `2 p_x''`.
pub fn cfi_photon_counting(model: &FringeModel, x: f64) -> f64 {
    (0..model.outcomes().len())
        .map(|i| {
            let (p, dp, d2p) = model.series(i).eval(x);
            if p < ZERO_PROBABILITY {
                if d2p > 0.0 {
                    2.0 * d2p
                } else {
                    0.0
                }
            } else {
                dp * dp / p
            }
        })
        .sum()
}

/// Fisher information at `phi` for a Fock input (no feedback phase).
pub fn cfi(spec: &InterferometerSpec, input: &FockState, phi: f64) -> Result<f64> {
    Ok(cfi_photon_counting(&FringeModel::new(spec, input)?, phi))
}

/// Coherent-probe QFIs under one normalization convention.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoherentQfi {
    pub normalization: String,
    pub mean_photons: f64,
    pub phase_mode_photons: f64,
    pub with_reference: f64,
    pub phase_averaged: f64,
}

/// Fock probe against balanced coherent probes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeComparison {
    pub input: FockState,
    pub phase_mode: usize,
    pub fock: f64,
    pub fock_phase_mode_photons: f64,
    pub equal_total_photons: CoherentQfi,
    pub equal_phase_mode_photons: CoherentQfi,
}

/// Compares `H^F` with `H^{C,(i)}` and `H^{C,(ii)}` for a balanced coherent
/// input (equal real amplitudes), normalized either to the same total photon
/// number or to the same mean photon number on the phase mode.
pub fn compare_probes(
    spec: &InterferometerSpec,
    input: &FockState,
    phase_mode: usize,
) -> Result<ProbeComparison> {
    let probe = fock_probe(spec, input)?;
    let fock_phase = probe.occupation_moment(|s| s.occupation(phase_mode) as f64);
    let m = spec.modes();
    let coherent = |normalization: &str, mean: f64| -> Result<CoherentQfi> {
        let c = CoherentState::balanced(m, mean);
        let on_mode = c
            .transformed(&spec.splitter().unitary())
            .alphas()[phase_mode]
            .norm_sqr();
        Ok(CoherentQfi {
            normalization: normalization.to_string(),
            mean_photons: mean,
            phase_mode_photons: on_mode,
            with_reference: qfi_coherent(spec, &c, phase_mode, true)?,
            phase_averaged: qfi_coherent(spec, &c, phase_mode, false)?,
        })
    };
    let total = input.photons() as f64;
    let unit = CoherentState::balanced(m, 1.0)
        .transformed(&spec.splitter().unitary())
        .alphas()[phase_mode]
        .norm_sqr();
    Ok(ProbeComparison {
        input: input.clone(),
        phase_mode,
        fock: qfi_fock(spec, input, phase_mode)?,
        fock_phase_mode_photons: fock_phase,
        equal_total_photons: coherent("equal_total_photons", total)?,
        equal_phase_mode_photons: coherent("equal_phase_mode_photons", fock_phase / unit)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::devices::SplitterKind;
    use std::f64::consts::PI;

    fn mz(kind: SplitterKind) -> InterferometerSpec {
        InterferometerSpec::mach_zehnder(kind)
    }

    #[test]
    fn fock_qfi_values() {
        let h = qfi_fock(&mz(SplitterKind::Tritter), &FockState::ones(3), 2).unwrap();
        assert!((h - 16.0 / 3.0).abs() < 1e-10);
        let h = qfi_fock(&mz(SplitterKind::Quarter), &FockState::ones(4), 3).unwrap();
        assert!((h - 6.0).abs() < 1e-10);
    }

    #[test]
    fn single_photon_qfi_is_bernoulli_variance() {
        // Occupation of mode 3 is Bernoulli(1/3): 4 (1/3 - 1/9).
        let h = qfi_fock(&mz(SplitterKind::Tritter), &FockState::single(3, 0), 2).unwrap();
        assert!((h - 8.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn variance_formula_matches_eigen_oracle() {
        for (kind, input) in [
            (SplitterKind::Tritter, vec![1, 1, 1]),
            (SplitterKind::Tritter, vec![2, 1, 0]),
            (SplitterKind::Quarter, vec![1, 1, 1, 1]),
            (SplitterKind::Quarter, vec![2, 0, 1, 0]),
        ] {
            let spec = mz(kind);
            let input = FockState::new(input);
            let mode = spec.phase_mode();
            let probe = fock_probe(&spec, &input).unwrap();
            let g: Vec<f64> = probe
                .basis()
                .states()
                .iter()
                .map(|s| s.occupation(mode) as f64)
                .collect();
            let oracle = qfi_mixed(&density_matrix(&probe), &g);
            let h = qfi_fock(&spec, &input, mode).unwrap();
            assert!((h - oracle).abs() < 1e-9, "{h} vs {oracle}");
        }
    }

    #[test]
    fn coherent_qfi() {
        let spec = mz(SplitterKind::Tritter);
        let vac = CoherentState::balanced(3, 0.0);
        assert_eq!(qfi_coherent(&spec, &vac, 2, true).unwrap(), 0.0);
        assert!(qfi_coherent(&spec, &vac, 2, false).unwrap().abs() < 1e-15);

        // Balanced |alpha|^2 = 1 per mode lands |beta_k|^2 = 1 on every mode.
        let c = CoherentState::balanced(3, 3.0);
        let with_ref = qfi_coherent(&spec, &c, 2, true).unwrap();
        assert!((with_ref - 4.0).abs() < 1e-12);
        // Sector occupations are Binomial(N, 1/3): 4 <N> q (1 - q) = 8/3.
        let averaged = qfi_coherent(&spec, &c, 2, false).unwrap();
        assert!((averaged - 8.0 / 3.0).abs() < 1e-7, "{averaged}");
        assert!(averaged < with_ref);
    }

    #[test]
    fn fisher_at_working_points() {
        let spec = mz(SplitterKind::Tritter);
        let model = FringeModel::new(&spec, &FockState::ones(3)).unwrap();
        for phi in [0.0, 2.0 * PI / 3.0, 4.0 * PI / 3.0] {
            let i = cfi_photon_counting(&model, phi);
            assert!((i - 16.0 / 3.0).abs() < 1e-8, "phi={phi}: {i}");
        }
        let spec = mz(SplitterKind::Quarter);
        let model = FringeModel::new(&spec, &FockState::ones(4)).unwrap();
        for phi in [0.0, PI] {
            let i = cfi_photon_counting(&model, phi);
            assert!((i - 6.0).abs() < 1e-8, "phi={phi}: {i}");
        }
    }

    #[test]
    fn comparison_normalizations() {
        let spec = mz(SplitterKind::Tritter);
        let c = compare_probes(&spec, &FockState::ones(3), 2).unwrap();
        assert!((c.fock_phase_mode_photons - 1.0).abs() < 1e-12);
        assert!((c.equal_phase_mode_photons.phase_mode_photons - 1.0).abs() < 1e-12);
        assert!(c.fock > c.equal_total_photons.with_reference);
        assert!(c.equal_total_photons.with_reference > c.equal_total_photons.phase_averaged);
    }
}
