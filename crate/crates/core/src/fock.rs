//! Fock-space linear algebra for linear-optical networks.
//!
//! A network on `m` modes is a [`ModeUnitary`] acting on creation operators,
//! `a_j^dagger -> sum_i U_ij b_i^dagger`. The amplitude between Fock states `s`
//! (input) and `t` (output) is `perm(U[t, s]) / sqrt(prod s_j! prod t_i!)`,
//! where `U[t, s]` repeats row `i` `t_i` times and column `j` `s_j` times.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::permanent::permanent;

/// Absolute tolerance for "is zero" / "is one" checks on complex quantities.
pub const TOLERANCE: f64 = 1e-10;

/// Unitarity tolerance enforced by [`ModeUnitary::new`].
pub const UNITARITY_TOLERANCE: f64 = 1e-12;

/// Occupation numbers over `m` modes, e.g. `|1,1,1>`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FockState(Vec<usize>);

impl FockState {
    pub fn new(occupations: impl Into<Vec<usize>>) -> Self {
        FockState(occupations.into())
    }

    /// The vacuum on `modes` modes.
    pub fn vacuum(modes: usize) -> Self {
        FockState(vec![0; modes])
    }

    /// One photon in `mode`, vacuum elsewhere.
    pub fn single(modes: usize, mode: usize) -> Self {
        let mut occ = vec![0; modes];
        occ[mode] = 1;
        FockState(occ)
    }

    /// One photon in every mode.
    pub fn ones(modes: usize) -> Self {
        FockState(vec![1; modes])
    }

    pub fn modes(&self) -> usize {
        self.0.len()
    }

    pub fn photons(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn occupations(&self) -> &[usize] {
        &self.0
    }

    pub fn occupation(&self, mode: usize) -> usize {
        self.0[mode]
    }

    /// `prod_j n_j!`
    pub fn factorial_product(&self) -> f64 {
        self.0.iter().map(|&n| factorial(n)).product()
    }

    /// Occupations sorted in descending order; labels the index-permutation class.
    pub fn pattern(&self) -> FockState {
        let mut occ = self.0.clone();
        occ.sort_unstable_by(|a, b| b.cmp(a));
        FockState(occ)
    }

    /// Mode labels with repetition: mode `j` appears `n_j` times.
    fn mode_list(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .flat_map(|(j, &n)| std::iter::repeat_n(j, n))
            .collect()
    }
}

impl fmt::Display for FockState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|")?;
        for (i, n) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{n}")?;
        }
        write!(f, "\u{27e9}")
    }
}

impl FromStr for FockState {
    type Err = Error;

    /// Parses comma-separated occupations such as `1,1,1`.
    fn from_str(s: &str) -> Result<Self> {
        let occ = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|e| Error::Parse(format!("occupation {t:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if occ.is_empty() {
            return Err(Error::Parse("empty occupation list".into()));
        }
        Ok(FockState(occ))
    }
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// All Fock states with fixed mode count and photon number.
///
/// States are ordered lexicographically descending, so `(N,0,..,0)` is first
/// and `(0,..,0,N)` last.
#[derive(Clone, Debug)]
pub struct FockBasis {
    mode_count: usize,
    photon_number: usize,
    states: Vec<FockState>,
    index: HashMap<FockState, usize>,
}

impl FockBasis {
    pub fn mode_count(&self) -> usize {
        self.mode_count
    }

    pub fn photon_number(&self) -> usize {
        self.photon_number
    }

    pub fn states(&self) -> &[FockState] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn index_of(&self, state: &FockState) -> Option<usize> {
        self.index.get(state).copied()
    }
}

impl PartialEq for FockBasis {
    fn eq(&self, other: &Self) -> bool {
        self.mode_count == other.mode_count && self.photon_number == other.photon_number
    }
}

/// Enumerates every composition of `photon_number` into `mode_count` parts.
///
/// # Panics
/// If `mode_count` is zero.
pub fn enumerate_basis(mode_count: usize, photon_number: usize) -> FockBasis {
    assert!(mode_count >= 1, "a Fock basis needs at least one mode");
    let mut states = Vec::new();
    let mut current = vec![0; mode_count];
    compositions(&mut current, 0, photon_number, &mut states);
    let index = states
        .iter()
        .enumerate()
        .map(|(i, s)| (s.clone(), i))
        .collect();
    FockBasis {
        mode_count,
        photon_number,
        states,
        index,
    }
}

fn compositions(current: &mut [usize], mode: usize, remaining: usize, out: &mut Vec<FockState>) {
    if mode + 1 == current.len() {
        current[mode] = remaining;
        out.push(FockState(current.to_vec()));
        return;
    }
    for n in (0..=remaining).rev() {
        current[mode] = n;
        compositions(current, mode + 1, remaining - n, out);
    }
    current[mode] = 0;
}

/// Complex amplitudes over a fixed-(m, N) Fock basis.
#[derive(Clone, Debug)]
pub struct StateVector {
    basis: Arc<FockBasis>,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn new(basis: Arc<FockBasis>, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != basis.len() {
            return Err(Error::ModeMismatch {
                expected: basis.len(),
                actual: amplitudes.len(),
            });
        }
        Ok(StateVector { basis, amplitudes })
    }

    /// The basis vector `|state>` in its own (m, N) sector.
    pub fn from_fock(state: &FockState) -> Self {
        let basis = Arc::new(enumerate_basis(state.modes(), state.photons()));
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); basis.len()];
        amplitudes[basis.index_of(state).expect("state lies in its own basis")] =
            Complex64::new(1.0, 0.0);
        StateVector { basis, amplitudes }
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, state: &FockState) -> Complex64 {
        self.basis
            .index_of(state)
            .map_or(Complex64::new(0.0, 0.0), |i| self.amplitudes[i])
    }

    pub fn probability(&self, state: &FockState) -> f64 {
        self.amplitude(state).norm_sqr()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `<n_mode>` and `<n_mode n_other>` style moments of occupation numbers.
    pub fn occupation_moment(&self, f: impl Fn(&FockState) -> f64) -> f64 {
        self.basis
            .states()
            .iter()
            .zip(&self.amplitudes)
            .map(|(s, a)| a.norm_sqr() * f(s))
            .sum()
    }
}

/// An `m x m` unitary acting on mode creation operators.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeUnitary {
    matrix: DMatrix<Complex64>,
}

impl ModeUnitary {
    /// Wraps `matrix` after checking `max |U^dagger U - I| < 1e-12`.
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        let (rows, cols) = matrix.shape();
        if rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        let residual = unitarity_residual(&matrix);
        if residual >= UNITARITY_TOLERANCE {
            return Err(Error::NotUnitary { residual });
        }
        Ok(ModeUnitary { matrix })
    }

    /// Skips the unitarity check. Used to inject faults in self-checks.
    pub fn new_unchecked(matrix: DMatrix<Complex64>) -> Self {
        ModeUnitary { matrix }
    }

    pub fn identity(modes: usize) -> Self {
        ModeUnitary {
            matrix: DMatrix::identity(modes, modes),
        }
    }

    pub fn dimension(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[(row, col)]
    }

    /// `max |U^dagger U - I|` entrywise.
    pub fn unitarity_residual(&self) -> f64 {
        unitarity_residual(&self.matrix)
    }

    /// Applies `self` first and `then` second: returns `then * self`.
    pub fn then(&self, then: &ModeUnitary) -> Result<ModeUnitary> {
        if self.dimension() != then.dimension() {
            return Err(Error::ModeMismatch {
                expected: self.dimension(),
                actual: then.dimension(),
            });
        }
        Ok(ModeUnitary {
            matrix: &then.matrix * &self.matrix,
        })
    }

    /// Transforms coherent amplitudes, `beta = U alpha`.
    pub fn apply_amplitudes(&self, alphas: &[Complex64]) -> Vec<Complex64> {
        (0..self.dimension())
            .map(|i| (0..self.dimension()).map(|j| self.matrix[(i, j)] * alphas[j]).sum())
            .collect()
    }

    /// Swaps columns `a` and `b` (relabels two input modes).
    pub fn permute_inputs(&self, a: usize, b: usize) -> ModeUnitary {
        let mut matrix = self.matrix.clone();
        matrix.swap_columns(a, b);
        ModeUnitary { matrix }
    }
}

pub(crate) fn unitarity_residual(matrix: &DMatrix<Complex64>) -> f64 {
    let n = matrix.nrows();
    let product = matrix.adjoint() * matrix;
    let identity = DMatrix::<Complex64>::identity(n, n);
    (product - identity)
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// `<output| U |input>` for Fock states.
pub fn transition_amplitude(
    unitary: &ModeUnitary,
    input: &FockState,
    output: &FockState,
) -> Result<Complex64> {
    let m = unitary.dimension();
    for s in [input, output] {
        if s.modes() != m {
            return Err(Error::ModeMismatch {
                expected: m,
                actual: s.modes(),
            });
        }
    }
    if input.photons() != output.photons() {
        return Err(Error::PhotonNumberMismatch {
            input: input.photons(),
            output: output.photons(),
        });
    }
    let rows = output.mode_list();
    let cols = input.mode_list();
    let n = rows.len();
    let sub = DMatrix::from_fn(n, n, |r, c| unitary.matrix[(rows[r], cols[c])]);
    let norm = (input.factorial_product() * output.factorial_product()).sqrt();
    Ok(permanent(&sub)? / norm)
}

/// Evolves a state vector through a network.
pub fn evolve(unitary: &ModeUnitary, state: &StateVector) -> Result<StateVector> {
    let basis = state.basis();
    if unitary.dimension() != basis.mode_count() {
        return Err(Error::ModeMismatch {
            expected: basis.mode_count(),
            actual: unitary.dimension(),
        });
    }
    let mut out = vec![Complex64::new(0.0, 0.0); basis.len()];
    for (input, &amp) in basis.states().iter().zip(state.amplitudes()) {
        if amp.norm_sqr() == 0.0 {
            continue;
        }
        for (slot, output) in out.iter_mut().zip(basis.states()) {
            *slot += transition_amplitude(unitary, input, output)? * amp;
        }
    }
    StateVector::new(Arc::clone(basis), out)
}

/// Evolves a single Fock state.
pub fn evolve_fock(unitary: &ModeUnitary, input: &FockState) -> Result<StateVector> {
    evolve(unitary, &StateVector::from_fock(input))
}

/// Largest tail mass tolerated when truncating a coherent state.
pub const TRUNCATION_TAIL: f64 = 1e-8;

/// Multimode coherent state `|alpha_1, ..., alpha_m>` with a total-photon cutoff.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoherentState {
    alphas: Vec<Complex64>,
    truncation: usize,
}

impl CoherentState {
    /// Chooses the smallest cutoff whose Poisson tail mass is below `1e-8`.
    pub fn new(alphas: Vec<Complex64>) -> Self {
        let mean = mean_photons(&alphas);
        let mut truncation = 0;
        while poisson_tail(mean, truncation) >= TRUNCATION_TAIL {
            truncation += 1;
        }
        CoherentState { alphas, truncation }
    }

    /// Uses an explicit cutoff, rejecting it if the tail mass is too large.
    pub fn with_truncation(alphas: Vec<Complex64>, truncation: usize) -> Result<Self> {
        let tail = poisson_tail(mean_photons(&alphas), truncation);
        if tail >= TRUNCATION_TAIL {
            return Err(Error::Truncation { truncation, tail });
        }
        Ok(CoherentState { alphas, truncation })
    }

    /// Equal real amplitudes with total mean photon number `mean`.
    pub fn balanced(modes: usize, mean: f64) -> Self {
        let a = (mean / modes as f64).sqrt();
        CoherentState::new(vec![Complex64::new(a, 0.0); modes])
    }

    /// Amplitudes `|alpha_i| e^{i theta_i}`.
    pub fn from_polar(moduli: &[f64], phases: &[f64]) -> Self {
        CoherentState::new(
            moduli
                .iter()
                .zip(phases)
                .map(|(&r, &t)| Complex64::from_polar(r, t))
                .collect(),
        )
    }

    pub fn alphas(&self) -> &[Complex64] {
        &self.alphas
    }

    pub fn modes(&self) -> usize {
        self.alphas.len()
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn mean_photons(&self) -> f64 {
        mean_photons(&self.alphas)
    }

    /// Probability mass beyond the cutoff.
    pub fn tail_mass(&self) -> f64 {
        poisson_tail(self.mean_photons(), self.truncation)
    }

    /// Same state after a network: amplitudes become `U alpha`.
    pub fn transformed(&self, unitary: &ModeUnitary) -> CoherentState {
        CoherentState {
            alphas: unitary.apply_amplitudes(&self.alphas),
            truncation: self.truncation,
        }
    }

    /// Total photon number distribution `p_N`, `N = 0..=truncation`.
    pub fn photon_number_weights(&self) -> Vec<f64> {
        let mean = self.mean_photons();
        (0..=self.truncation).map(|n| poisson(mean, n)).collect()
    }

    /// Normalized projection onto the `N`-photon sector, or `None` if empty.
    ///
    /// The unnormalized amplitude of `|n>` is `prod_j alpha_j^{n_j} / sqrt(n_j!)`.
    pub fn sector(&self, photons: usize) -> Option<StateVector> {
        let basis = Arc::new(enumerate_basis(self.modes(), photons));
        let amps: Vec<Complex64> = basis
            .states()
            .iter()
            .map(|s| {
                let mut a = Complex64::new(1.0, 0.0);
                for (alpha, &n) in self.alphas.iter().zip(s.occupations()) {
                    a *= alpha.powu(n as u32);
                }
                a / s.factorial_product().sqrt()
            })
            .collect();
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return None;
        }
        let amps = amps.into_iter().map(|a| a / norm).collect();
        Some(StateVector::new(basis, amps).expect("sizes match"))
    }
}

fn mean_photons(alphas: &[Complex64]) -> f64 {
    alphas.iter().map(|a| a.norm_sqr()).sum()
}

pub(crate) fn poisson(mean: f64, n: usize) -> f64 {
    if mean == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    (n as f64 * mean.ln() - mean - ln_factorial(n)).exp()
}

fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// `P(N > cutoff)` for a Poisson variable, summed term by term.
pub(crate) fn poisson_tail(mean: f64, cutoff: usize) -> f64 {
    if mean == 0.0 {
        return 0.0;
    }
    let mut tail = 0.0;
    let mut n = cutoff + 1;
    loop {
        let term = poisson(mean, n);
        tail += term;
        if n as f64 > mean && term < 1e-20 * tail.max(1e-300) {
            break;
        }
        if n > cutoff + 10_000 {
            break;
        }
        n += 1;
    }
    tail
}

/// Photon-counting probability for a coherent input: independent Poissonian
/// output modes with means `|beta_j|^2`, `beta = U alpha`.
pub fn coherent_output_probability(
    unitary: &ModeUnitary,
    input: &CoherentState,
    outcome: &FockState,
) -> Result<f64> {
    let m = unitary.dimension();
    for actual in [input.modes(), outcome.modes()] {
        if actual != m {
            return Err(Error::ModeMismatch {
                expected: m,
                actual,
            });
        }
    }
    let betas = unitary.apply_amplitudes(input.alphas());
    Ok(betas
        .iter()
        .zip(outcome.occupations())
        .map(|(b, &n)| poisson(b.norm_sqr(), n))
        .product())
}
