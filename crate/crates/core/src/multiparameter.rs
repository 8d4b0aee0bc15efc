//! Simultaneous estimation of several phases.
//!
//! Each phase `lambda_mu` is generated by the photon-number operator of its
//! mode, `U_lambda = exp(-i sum_mu lambda_mu n_mu)`. The generators are diagonal
//! in the Fock basis, so they commute and the quantum Fisher information
//! matrix of a pure probe is `4 Cov(n_mu, n_nu)`, independent of `lambda`.
//! The first mode serves as the phase reference and should not be listed.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::devices::InterferometerSpec;
use crate::error::{Error, Result};
use crate::estimation::fisher::{density_matrix, fock_probe};
use crate::fock::{CoherentState, FockBasis, FockState, StateVector, TRUNCATION_TAIL};

/// Smallest eigenvalue accepted by [`bounds`].
pub const SINGULAR_EIGENVALUE: f64 = 1e-10;

/// Photon-number generators on a fixed-photon-number basis.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorSet {
    modes: Vec<usize>,
    /// `diagonals[mu][i]` is the occupation of mode `modes[mu]` in basis state `i`.
    diagonals: Vec<Vec<f64>>,
}

impl GeneratorSet {
    pub fn new(basis: &FockBasis, modes: &[usize]) -> Result<Self> {
        for (i, &m) in modes.iter().enumerate() {
            if m >= basis.mode_count() {
                return Err(Error::ModeOutOfRange {
                    index: m,
                    modes: basis.mode_count(),
                });
            }
            if modes[..i].contains(&m) {
                return Err(Error::DuplicateMode(m));
            }
        }
        let diagonals = modes
            .iter()
            .map(|&m| {
                basis
                    .states()
                    .iter()
                    .map(|s| s.occupation(m) as f64)
                    .collect()
            })
            .collect();
        Ok(GeneratorSet {
            modes: modes.to_vec(),
            diagonals,
        })
    }

    pub fn modes(&self) -> &[usize] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn diagonal(&self, mu: usize) -> &[f64] {
        &self.diagonals[mu]
    }

    pub fn matrix(&self, mu: usize) -> DMatrix<Complex64> {
        DMatrix::from_diagonal(&DVector::from_iterator(
            self.diagonals[mu].len(),
            self.diagonals[mu].iter().map(|&g| Complex64::new(g, 0.0)),
        ))
    }

    /// Largest entry of any commutator `[G_mu, G_nu]`.
    pub fn max_commutator(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for a in 0..self.len() {
            for b in a + 1..self.len() {
                let (ga, gb) = (self.matrix(a), self.matrix(b));
                let c = &ga * &gb - &gb * &ga;
                worst = worst.max(c.iter().map(|z| z.norm()).fold(0.0, f64::max));
            }
        }
        worst
    }

    /// `exp(-i sum_mu lambda_mu G_mu)` as a diagonal of phases.
    pub fn evolution(&self, lambda: &[f64]) -> Vec<Complex64> {
        let dim = self.diagonals.first().map_or(0, |d| d.len());
        (0..dim)
            .map(|i| {
                let phase: f64 = lambda
                    .iter()
                    .zip(&self.diagonals)
                    .map(|(l, g)| l * g[i])
                    .sum();
                Complex64::from_polar(1.0, -phase)
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QfiMatrix {
    pub modes: Vec<usize>,
    pub entries: Vec<Vec<f64>>,
    /// Set when the probe carries no photons and the matrix vanishes.
    pub degenerate: bool,
}

impl QfiMatrix {
    fn from_matrix(modes: &[usize], h: &DMatrix<f64>, degenerate: bool) -> Self {
        QfiMatrix {
            modes: modes.to_vec(),
            entries: (0..h.nrows())
                .map(|i| (0..h.ncols()).map(|j| h[(i, j)]).collect())
                .collect(),
            degenerate,
        }
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.entries.len();
        DMatrix::from_fn(n, n, |i, j| self.entries[i][j])
    }

    pub fn dimension(&self) -> usize {
        self.entries.len()
    }

    pub fn asymmetry(&self) -> f64 {
        let h = self.matrix();
        (&h - h.transpose()).abs().max()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = self.matrix();
        let sym = (&h + h.transpose()) * 0.5;
        sym.symmetric_eigenvalues().min()
    }
}

fn covariance_qfim(state: &StateVector, generators: &GeneratorSet) -> DMatrix<f64> {
    let p = state.probabilities();
    let k = generators.len();
    let means: Vec<f64> = (0..k)
        .map(|mu| p.iter().zip(generators.diagonal(mu)).map(|(p, g)| p * g).sum())
        .collect();
    DMatrix::from_fn(k, k, |a, b| {
        let second: f64 = p
            .iter()
            .zip(generators.diagonal(a).iter().zip(generators.diagonal(b)))
            .map(|(p, (ga, gb))| p * ga * gb)
            .sum();
        4.0 * (second - means[a] * means[b])
    })
}

fn check_spec_modes(spec: &InterferometerSpec, input_modes: usize) -> Result<()> {
    if input_modes != spec.modes() {
        return Err(Error::ModeMismatch {
            expected: spec.modes(),
            actual: input_modes,
        });
    }
    Ok(())
}

/// QFIM of the Fock probe, `4 Cov(n_mu, n_nu)`.
pub fn qfim_pure(
    spec: &InterferometerSpec,
    input: &FockState,
    phase_modes: &[usize],
) -> Result<QfiMatrix> {
    let probe = fock_probe(spec, input)?;
    let generators = GeneratorSet::new(probe.basis(), phase_modes)?;
    let h = covariance_qfim(&probe, &generators);
    Ok(QfiMatrix::from_matrix(phase_modes, &h, input.photons() == 0))
}

/// The pure probe after the phase evolution, `U_lambda |psi_0>`.
pub fn evolved_probe(
    spec: &InterferometerSpec,
    input: &FockState,
    generators: &GeneratorSet,
    lambda: &[f64],
) -> Result<StateVector> {
    let probe = fock_probe(spec, input)?;
    let phases = generators.evolution(lambda);
    let amps = probe
        .amplitudes()
        .iter()
        .zip(&phases)
        .map(|(a, u)| a * u)
        .collect();
    StateVector::new(probe.basis().clone(), amps)
}

/// Symmetric logarithmic derivative of a pure probe.
#[derive(Clone, Debug, PartialEq)]
pub struct SldOperator {
    pub parameter: usize,
    pub matrix: DMatrix<Complex64>,
}

impl SldOperator {
    pub fn hermiticity_residual(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

/// `L_mu = U_lambda L_0mu U_lambda^dagger` with
/// `L_0mu = 2 (-i G_mu rho_0 + i rho_0 G_mu)`.
pub fn sld_pure(
    spec: &InterferometerSpec,
    input: &FockState,
    phase_modes: &[usize],
    mu: usize,
    lambda: &[f64],
) -> Result<SldOperator> {
    let probe = fock_probe(spec, input)?;
    let generators = GeneratorSet::new(probe.basis(), phase_modes)?;
    if mu >= generators.len() {
        return Err(Error::ModeOutOfRange {
            index: mu,
            modes: generators.len(),
        });
    }
    let rho0 = density_matrix(&probe);
    let g = generators.matrix(mu);
    let i = Complex64::i();
    let l0 = (&g * &rho0 * (-i) + &rho0 * &g * i) * Complex64::new(2.0, 0.0);
    let u = DMatrix::from_diagonal(&DVector::from_vec(generators.evolution(lambda)));
    Ok(SldOperator {
        parameter: mu,
        matrix: &u * l0 * u.adjoint(),
    })
}

fn all_slds(
    spec: &InterferometerSpec,
    input: &FockState,
    phase_modes: &[usize],
    lambda: &[f64],
) -> Result<(DMatrix<Complex64>, Vec<SldOperator>)> {
    let probe = fock_probe(spec, input)?;
    let generators = GeneratorSet::new(probe.basis(), phase_modes)?;
    let rho = density_matrix(&evolved_probe(spec, input, &generators, lambda)?);
    let slds = (0..phase_modes.len())
        .map(|mu| sld_pure(spec, input, phase_modes, mu, lambda))
        .collect::<Result<_>>()?;
    Ok((rho, slds))
}

/// `H_{mu nu} = Tr[rho (L_mu L_nu + L_nu L_mu) / 2]`.
pub fn qfim_sld(
    spec: &InterferometerSpec,
    input: &FockState,
    phase_modes: &[usize],
    lambda: &[f64],
) -> Result<QfiMatrix> {
    let (rho, slds) = all_slds(spec, input, phase_modes, lambda)?;
    let k = slds.len();
    let h = DMatrix::from_fn(k, k, |a, b| {
        let (la, lb) = (&slds[a].matrix, &slds[b].matrix);
        let anti = (la * lb + lb * la) * Complex64::new(0.5, 0.0);
        (&rho * anti).trace().re
    });
    Ok(QfiMatrix::from_matrix(phase_modes, &h, input.photons() == 0))
}

/// Largest `|Tr[rho [L_mu, L_nu]]|` over all pairs; zero is necessary for the
/// multiparameter bound to be attainable.
pub fn weak_commutativity(
    spec: &InterferometerSpec,
    input: &FockState,
    phase_modes: &[usize],
    lambda: &[f64],
) -> Result<f64> {
    let (rho, slds) = all_slds(spec, input, phase_modes, lambda)?;
    let mut worst: f64 = 0.0;
    for a in 0..slds.len() {
        for b in a..slds.len() {
            let (la, lb) = (&slds[a].matrix, &slds[b].matrix);
            let c = la * lb - lb * la;
            worst = worst.max((&rho * c).trace().norm());
        }
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub measurements: u64,
    pub inverse: Vec<Vec<f64>>,
    /// `sqrt((H^{-1})_{mu mu} / M)`.
    pub per_parameter: Vec<f64>,
    /// `Tr[H^{-1}] / M`, a bound on the summed variances.
    pub total_variance: f64,
    /// `1 / (H^{-1})_{mu mu}`.
    pub effective_qfi: Vec<f64>,
}

/// Cramér-Rao bounds for `M` repetitions.
pub fn bounds(h: &QfiMatrix, measurements: u64) -> Result<Bounds> {
    let m = h.matrix();
    let sym = (&m + m.transpose()) * 0.5;
    let eig = sym.clone().symmetric_eigen();
    let (imin, &lmin) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .ok_or(Error::SingularFisher {
            direction: Vec::new(),
            eigenvalue: 0.0,
        })?;
    if lmin <= SINGULAR_EIGENVALUE {
        return Err(Error::SingularFisher {
            direction: eig.eigenvectors.column(imin).iter().copied().collect(),
            eigenvalue: lmin,
        });
    }
    let inv = sym.try_inverse().ok_or(Error::SingularFisher {
        direction: eig.eigenvectors.column(imin).iter().copied().collect(),
        eigenvalue: lmin,
    })?;
    let k = inv.nrows();
    let mf = measurements as f64;
    Ok(Bounds {
        measurements,
        inverse: (0..k).map(|i| (0..k).map(|j| inv[(i, j)]).collect()).collect(),
        per_parameter: (0..k).map(|i| (inv[(i, i)] / mf).sqrt()).collect(),
        total_variance: inv.trace() / mf,
        effective_qfi: (0..k).map(|i| 1.0 / inv[(i, i)]).collect(),
    })
}

/// QFIM of a coherent probe.
///
/// With a reference the modes of `|beta>` are independent Poissonian and the
/// matrix is `4 diag(|beta_mu|^2)`. Without one, each fixed-photon sector of
/// the phase-averaged state contributes `p_N 4 Cov_{psi_N}`.
pub fn qfim_coherent(
    spec: &InterferometerSpec,
    input: &CoherentState,
    phase_modes: &[usize],
    reference: bool,
) -> Result<QfiMatrix> {
    check_spec_modes(spec, input.modes())?;
    let tail = input.tail_mass();
    if tail >= TRUNCATION_TAIL {
        return Err(Error::Truncation {
            truncation: input.truncation(),
            tail,
        });
    }
    let k = phase_modes.len();
    // Validates the mode list.
    GeneratorSet::new(&crate::fock::enumerate_basis(spec.modes(), 0), phase_modes)?;
    let probe = input.transformed(&spec.splitter().unitary());
    let degenerate = input.mean_photons() == 0.0;
    if reference {
        let h = DMatrix::from_fn(k, k, |a, b| {
            if a == b {
                4.0 * probe.alphas()[phase_modes[a]].norm_sqr()
            } else {
                0.0
            }
        });
        return Ok(QfiMatrix::from_matrix(phase_modes, &h, degenerate));
    }
    let mut h = DMatrix::zeros(k, k);
    for (n, p) in probe.photon_number_weights().into_iter().enumerate() {
        if let Some(sector) = probe.sector(n) {
            let generators = GeneratorSet::new(sector.basis(), phase_modes)?;
            h += covariance_qfim(&sector, &generators) * p;
        }
    }
    Ok(QfiMatrix::from_matrix(phase_modes, &h, degenerate))
}

/// Effective QFIs `1 / (H^{-1})_{mu mu}` of the Fock probe against balanced
/// coherent probes with the same mean photon number.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiparameterComparison {
    pub modes: Vec<usize>,
    pub mean_photons: f64,
    pub fock: QfiMatrix,
    pub coherent_reference: QfiMatrix,
    pub coherent_averaged: QfiMatrix,
    pub fock_effective: Vec<f64>,
    pub coherent_reference_effective: Vec<f64>,
    pub coherent_averaged_effective: Vec<f64>,
}

pub fn compare_multiparameter(
    spec: &InterferometerSpec,
    input: &FockState,
    phase_modes: &[usize],
) -> Result<MultiparameterComparison> {
    let mean = input.photons() as f64;
    let coherent = CoherentState::balanced(spec.modes(), mean);
    let fock = qfim_pure(spec, input, phase_modes)?;
    let with_ref = qfim_coherent(spec, &coherent, phase_modes, true)?;
    let averaged = qfim_coherent(spec, &coherent, phase_modes, false)?;
    let effective = |h: &QfiMatrix| bounds(h, 1).map(|b| b.effective_qfi);
    Ok(MultiparameterComparison {
        modes: phase_modes.to_vec(),
        mean_photons: mean,
        fock_effective: effective(&fock)?,
        coherent_reference_effective: effective(&with_ref)?,
        coherent_averaged_effective: effective(&averaged)?,
        fock,
        coherent_reference: with_ref,
        coherent_averaged: averaged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::devices::SplitterKind;
    use crate::estimation::fisher::qfi_fock;

    fn mz(kind: SplitterKind) -> InterferometerSpec {
        InterferometerSpec::mach_zehnder(kind)
    }

    fn close(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> bool {
        (a - b).abs().max() < tol
    }

    // Brute-force 4 Cov over the probe populations, written out directly.
    fn covariance_oracle(spec: &InterferometerSpec, input: &FockState, modes: &[usize]) -> DMatrix<f64> {
        let probe = fock_probe(spec, input).unwrap();
        let states = probe.basis().states();
        let p = probe.probabilities();
        let mean = |m: usize| -> f64 {
            states.iter().zip(&p).map(|(s, p)| s.occupation(m) as f64 * p).sum()
        };
        DMatrix::from_fn(modes.len(), modes.len(), |a, b| {
            let (ma, mb) = (modes[a], modes[b]);
            let joint: f64 = states
                .iter()
                .zip(&p)
                .map(|(s, p)| (s.occupation(ma) * s.occupation(mb)) as f64 * p)
                .sum();
            4.0 * (joint - mean(ma) * mean(mb))
        })
    }

    #[test]
    fn tritter_two_phase_matrix() {
        let spec = mz(SplitterKind::Tritter);
        let input = FockState::ones(3);
        let h = qfim_pure(&spec, &input, &[1, 2]).unwrap();
        let m = h.matrix();
        assert!((m[(0, 0)] - 16.0 / 3.0).abs() < 1e-10);
        assert!((m[(1, 1)] - 16.0 / 3.0).abs() < 1e-10);
        assert!(close(&m, &covariance_oracle(&spec, &input, &[1, 2]), 1e-12));
        assert!((m[(0, 1)] + 8.0 / 3.0).abs() < 1e-10, "{}", m[(0, 1)]);
    }

    #[test]
    fn quarter_two_phase_matrix() {
        let spec = mz(SplitterKind::Quarter);
        let input = FockState::ones(4);
        let m = qfim_pure(&spec, &input, &[2, 3]).unwrap().matrix();
        assert!((m[(0, 0)] - 6.0).abs() < 1e-10);
        assert!((m[(1, 1)] - 6.0).abs() < 1e-10);
        assert!(close(&m, &covariance_oracle(&spec, &input, &[2, 3]), 1e-12));
    }

    #[test]
    fn single_mode_reduces_to_scalar() {
        let spec = mz(SplitterKind::Tritter);
        let h = qfim_pure(&spec, &FockState::ones(3), &[2]).unwrap();
        let scalar = qfi_fock(&spec, &FockState::ones(3), 2).unwrap();
        assert!((h.entries[0][0] - scalar).abs() < 1e-12);
    }

    #[test]
    fn vacuum_probe_is_flagged() {
        let h = qfim_pure(&mz(SplitterKind::Tritter), &FockState::vacuum(3), &[1, 2]).unwrap();
        assert!(h.degenerate);
        assert!(h.matrix().abs().max() < 1e-15);
    }

    #[test]
    fn sld_matches_finite_difference() {
        let spec = mz(SplitterKind::Tritter);
        let input = FockState::ones(3);
        let modes = [1, 2];
        let probe = fock_probe(&spec, &input).unwrap();
        let gens = GeneratorSet::new(probe.basis(), &modes).unwrap();
        let lambda = [0.4, -1.1];
        let rho = density_matrix(&evolved_probe(&spec, &input, &gens, &lambda).unwrap());
        let step = 1e-5;
        for mu in 0..2 {
            let shifted = |s: f64| {
                let mut l = lambda;
                l[mu] += s;
                density_matrix(&evolved_probe(&spec, &input, &gens, &l).unwrap())
            };
            let drho = (shifted(step) - shifted(-step)) / Complex64::new(2.0 * step, 0.0);
            let l = sld_pure(&spec, &input, &modes, mu, &lambda).unwrap();
            assert!(l.hermiticity_residual() < 1e-12);
            let sym = (&l.matrix * &rho + &rho * &l.matrix) * Complex64::new(0.5, 0.0);
            let err = (sym - drho).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(err < 1e-8, "mu={mu}: {err}");
        }
    }

    #[test]
    fn sld_expectation_vanishes_and_zero_generator() {
        let spec = mz(SplitterKind::Tritter);
        let input = FockState::ones(3);
        let probe = fock_probe(&spec, &input).unwrap();
        let l = sld_pure(&spec, &input, &[1, 2], 0, &[0.0, 0.0]).unwrap();
        let rho = density_matrix(&probe);
        assert!((&rho * &l.matrix).trace().norm() < 1e-12);

        // Mode 2 of |0,0,0> after the splitter carries nothing: G acts as zero.
        let vac = FockState::vacuum(3);
        let l = sld_pure(&spec, &vac, &[1], 0, &[0.3]).unwrap();
        assert!(l.matrix.iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn sld_trace_matches_covariance() {
        for (kind, input, modes) in [
            (SplitterKind::Tritter, FockState::ones(3), vec![1, 2]),
            (SplitterKind::Tritter, FockState::new(vec![2, 0, 1]), vec![0, 2]),
            (SplitterKind::Quarter, FockState::ones(4), vec![1, 2, 3]),
        ] {
            let spec = mz(kind);
            let a = qfim_pure(&spec, &input, &modes).unwrap().matrix();
            let b = qfim_sld(&spec, &input, &modes, &vec![0.7; modes.len()]).unwrap().matrix();
            assert!(close(&a, &b, 1e-9));
        }
    }

    #[test]
    fn weak_commutativity_holds() {
        let t = weak_commutativity(&mz(SplitterKind::Tritter), &FockState::ones(3), &[1, 2], &[0.3, 1.9]);
        assert!(t.unwrap() < 1e-10);
        let q = weak_commutativity(&mz(SplitterKind::Quarter), &FockState::ones(4), &[2, 3], &[0.0, 0.5]);
        assert!(q.unwrap() < 1e-10);
        let single = weak_commutativity(&mz(SplitterKind::Tritter), &FockState::ones(3), &[2], &[0.3]);
        assert_eq!(single.unwrap(), 0.0);
    }

    #[test]
    fn bounds_diagonal_and_correlated() {
        let h = QfiMatrix::from_matrix(&[1, 2], &DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 4.0]), false);
        let b = bounds(&h, 100).unwrap();
        assert!((b.per_parameter[0] - (400.0f64).powf(-0.5)).abs() < 1e-15);
        assert!((b.total_variance - 2.0 / 400.0).abs() < 1e-15);

        let (hh, c) = (4.0, 1.5);
        let h = QfiMatrix::from_matrix(&[1, 2], &DMatrix::from_row_slice(2, 2, &[hh, c, c, hh]), false);
        let b = bounds(&h, 1).unwrap();
        for e in b.effective_qfi {
            assert!((e - (hh - c * c / hh)).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_matrix_names_direction() {
        let h = QfiMatrix::from_matrix(&[1, 2], &DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]), false);
        match bounds(&h, 10) {
            Err(Error::SingularFisher { direction, eigenvalue }) => {
                assert!(eigenvalue.abs() < 1e-12);
                assert!((direction[0] + direction[1]).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn coherent_qfim() {
        let spec = mz(SplitterKind::Tritter);
        let vac = CoherentState::balanced(3, 0.0);
        let h = qfim_coherent(&spec, &vac, &[1, 2], false).unwrap();
        assert!(h.degenerate && h.matrix().abs().max() < 1e-15);

        let c = CoherentState::balanced(3, 3.0);
        let r = qfim_coherent(&spec, &c, &[1, 2], true).unwrap().matrix();
        assert!(close(&r, &DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 4.0]), 1e-12));

        // Multinomial sectors with cell probability 1/3: 4 <N> (q d_ab - q^2).
        let a = qfim_coherent(&spec, &c, &[1, 2], false).unwrap().matrix();
        let expected = DMatrix::from_row_slice(2, 2, &[8.0 / 3.0, -4.0 / 3.0, -4.0 / 3.0, 8.0 / 3.0]);
        assert!(close(&a, &expected, 1e-7), "{a}");
    }

    #[test]
    fn fock_beats_phase_averaged_coherent() {
        for (kind, input, modes) in [
            (SplitterKind::Tritter, FockState::ones(3), vec![1, 2]),
            (SplitterKind::Quarter, FockState::ones(4), vec![2, 3]),
        ] {
            let c = compare_multiparameter(&mz(kind), &input, &modes).unwrap();
            for (f, a) in c.fock_effective.iter().zip(&c.coherent_averaged_effective) {
                assert!(f > a, "{kind}: {f} vs {a}");
            }
        }
    }
}
