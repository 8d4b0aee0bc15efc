//! Output-probability fringes versus phase and their Fourier decomposition.
//!
//! For an `N`-photon input the amplitude of every output pattern is a
//! polynomial of degree `N` in `e^{-i phi}`, so each fringe is a finite cosine
//! series `P(phi) = sum_{k<=N} A_k cos(k phi - delta_k)`. The coefficients are
//! extracted with a uniform-grid DFT, which is exact for such series.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::devices::{InterferometerSpec, SplitterKind};
use crate::error::{Error, Result};
use crate::fock::{enumerate_basis, transition_amplitude, FockBasis, FockState, StateVector};

/// Grid size of the DFT used for Fourier extraction.
pub const FOURIER_POINTS: usize = 720;

/// Uniform half-open grid `[start, stop)` with `count` points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseGrid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl PhaseGrid {
    pub fn new(start: f64, stop: f64, count: usize) -> Self {
        PhaseGrid { start, stop, count }
    }

    /// `count` points over one period `[0, 2 pi)`.
    pub fn period(count: usize) -> Self {
        PhaseGrid::new(0.0, TAU, count)
    }

    pub fn step(&self) -> f64 {
        (self.stop - self.start) / self.count as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step()
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(move |i| self.point(i))
    }
}

impl std::str::FromStr for PhaseGrid {
    type Err = Error;

    /// Parses `start:stop:count`; angles accept `pi` forms such as `2pi` or `-pi/3`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::Parse(format!("grid {s:?} is not start:stop:count")));
        }
        let count = parts[2]
            .trim()
            .parse::<usize>()
            .map_err(|e| Error::Parse(format!("grid count {:?}: {e}", parts[2])))?;
        if count == 0 {
            return Err(Error::Parse("grid needs at least one point".into()));
        }
        Ok(PhaseGrid::new(parse_angle(parts[0])?, parse_angle(parts[1])?, count))
    }
}

/// Parses a float, optionally written as a multiple/fraction of `pi`.
pub fn parse_angle(s: &str) -> Result<f64> {
    let t = s.trim();
    let bad = || Error::Parse(format!("angle {s:?}"));
    if let Some(pos) = t.find("pi") {
        let (coef, rest) = t.split_at(pos);
        let rest = &rest[2..];
        let coef = coef.trim_end_matches('*');
        let scale = match coef {
            "" | "+" => 1.0,
            "-" => -1.0,
            c => c.parse::<f64>().map_err(|_| bad())?,
        };
        let div = match rest.strip_prefix('/') {
            Some(d) => d.parse::<f64>().map_err(|_| bad())?,
            None if rest.is_empty() => 1.0,
            None => return Err(bad()),
        };
        Ok(scale * PI / div)
    } else {
        t.parse::<f64>().map_err(|_| bad())
    }
}

/// One harmonic `A_k cos(k phi - delta_k)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Harmonic {
    pub k: usize,
    pub amplitude: f64,
    pub phase: f64,
}

/// Finite cosine series, stored as `P(x) = Re sum_k c_k e^{i k x}` with
/// `c_0 = A_0` and `c_k = A_k e^{-i delta_k}`.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierSeries {
    coeffs: Vec<Complex64>,
}

impl FourierSeries {
    /// DFT of samples on the uniform grid `2 pi j / K`, keeping `k <= max_harmonic`.
    pub fn from_period_samples(samples: &[f64], max_harmonic: usize) -> Self {
        let n = samples.len();
        let kmax = max_harmonic.min((n - 1) / 2);
        let coeffs = (0..=kmax)
            .map(|k| {
                let c: Complex64 = samples
                    .iter()
                    .enumerate()
                    .map(|(j, &p)| p * Complex64::from_polar(1.0, -TAU * ((k * j) % n) as f64 / n as f64))
                    .sum::<Complex64>()
                    / n as f64;
                if k == 0 {
                    Complex64::new(c.re, 0.0)
                } else {
                    2.0 * c
                }
            })
            .collect();
        FourierSeries { coeffs }
    }

    pub fn from_harmonics(harmonics: &[Harmonic]) -> Self {
        let kmax = harmonics.iter().map(|h| h.k).max().unwrap_or(0);
        let mut coeffs = vec![Complex64::new(0.0, 0.0); kmax + 1];
        for h in harmonics {
            coeffs[h.k] += Complex64::from_polar(h.amplitude, -h.phase);
        }
        FourierSeries { coeffs }
    }

    pub fn max_harmonic(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// `A_k >= 0` and `delta_k` in `[0, 2 pi)`.
    pub fn harmonic(&self, k: usize) -> Harmonic {
        let c = self.coeffs.get(k).copied().unwrap_or_default();
        if k == 0 {
            // Negative constant terms absorb a phase of pi.
            return Harmonic {
                k,
                amplitude: c.re.abs(),
                phase: if c.re < 0.0 { PI } else { 0.0 },
            };
        }
        let amplitude = c.norm();
        let phase = if amplitude == 0.0 {
            0.0
        } else {
            (-c.arg()).rem_euclid(TAU)
        };
        Harmonic {
            k,
            amplitude,
            phase,
        }
    }

    pub fn harmonics(&self) -> Vec<Harmonic> {
        (0..self.coeffs.len()).map(|k| self.harmonic(k)).collect()
    }

    /// Drops harmonics above `k`.
    pub fn truncated(&self, k: usize) -> Self {
        FourierSeries {
            coeffs: self.coeffs[..=k.min(self.max_harmonic())].to_vec(),
        }
    }

    /// Value and first two derivatives at `x`.
    pub fn eval(&self, x: f64) -> (f64, f64, f64) {
        let z = Complex64::from_polar(1.0, x);
        let mut zk = Complex64::new(1.0, 0.0);
        let (mut p, mut dp, mut d2p) = (0.0, 0.0, 0.0);
        for (k, c) in self.coeffs.iter().enumerate() {
            let term = c * zk;
            let kf = k as f64;
            p += term.re;
            dp -= kf * term.im;
            d2p -= kf * kf * term.re;
            zk *= z;
        }
        (p, dp, d2p)
    }

    pub fn value(&self, x: f64) -> f64 {
        self.eval(x).0
    }

    /// Value given precomputed `e^{i k x}`, `k = 0..`; `powers` must be long enough.
    pub fn value_from_powers(&self, powers: &[Complex64]) -> f64 {
        self.coeffs.iter().zip(powers).map(|(c, z)| (c * z).re).sum()
    }
}

/// Sampled fringe of one output pattern plus its Fourier expansion.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FringePattern {
    pub outcome: FockState,
    pub samples: Vec<(f64, f64)>,
    pub fourier: Vec<Harmonic>,
}

impl FringePattern {
    pub fn series(&self) -> FourierSeries {
        FourierSeries::from_harmonics(&self.fourier)
    }

    /// Max deviation between the samples and the Fourier reconstruction.
    pub fn reconstruction_error(&self) -> f64 {
        let s = self.series();
        self.samples
            .iter()
            .map(|&(phi, p)| (s.value(phi) - p).abs())
            .fold(0.0, f64::max)
    }
}

/// Exact output distribution of a Fock input through the interferometer at
/// total phase `phi` on the phase mode.
pub fn output_distribution(
    spec: &InterferometerSpec,
    input: &FockState,
    phi: f64,
) -> Result<StateVector> {
    if input.modes() != spec.modes() {
        return Err(Error::ModeMismatch {
            expected: spec.modes(),
            actual: input.modes(),
        });
    }
    crate::fock::evolve_fock(&spec.at(phi, 0.0), input)
}

/// Fourier model of every output fringe for one input state.
///
/// Probabilities are functions of the total phase `x = phi + psi` on the phase
/// mode; the series keep harmonics up to the photon number.
#[derive(Clone, Debug)]
pub struct FringeModel {
    input: FockState,
    basis: Arc<FockBasis>,
    series: Vec<FourierSeries>,
    residual_harmonics: Vec<f64>,
}

impl FringeModel {
    pub fn new(spec: &InterferometerSpec, input: &FockState) -> Result<Self> {
        let n = input.photons();
        let basis = Arc::new(enumerate_basis(spec.modes(), n));
        let grid = PhaseGrid::period(FOURIER_POINTS);
        let mut columns = vec![Vec::with_capacity(FOURIER_POINTS); basis.len()];
        for phi in grid.points() {
            let u = spec.at(phi, 0.0);
            for (col, out) in columns.iter_mut().zip(basis.states()) {
                col.push(transition_amplitude(&u, input, out)?.norm_sqr());
            }
        }
        let limit = 2 * n + 2;
        let full: Vec<FourierSeries> = columns
            .iter()
            .map(|c| FourierSeries::from_period_samples(c, limit))
            .collect();
        let residual_harmonics = full
            .iter()
            .map(|s| {
                (n + 1..=s.max_harmonic())
                    .map(|k| s.harmonic(k).amplitude)
                    .fold(0.0, f64::max)
            })
            .collect();
        Ok(FringeModel {
            input: input.clone(),
            basis,
            series: full.iter().map(|s| s.truncated(n)).collect(),
            residual_harmonics,
        })
    }

    pub fn input(&self) -> &FockState {
        &self.input
    }

    pub fn outcomes(&self) -> &[FockState] {
        self.basis.states()
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn index_of(&self, outcome: &FockState) -> Result<usize> {
        if outcome.photons() != self.input.photons() {
            return Err(Error::PhotonNumberMismatch {
                input: self.input.photons(),
                output: outcome.photons(),
            });
        }
        self.basis.index_of(outcome).ok_or(Error::ModeMismatch {
            expected: self.basis.mode_count(),
            actual: outcome.modes(),
        })
    }

    pub fn series(&self, index: usize) -> &FourierSeries {
        &self.series[index]
    }

    /// Largest `A_k`, `k > N`, seen in the DFT of each outcome.
    pub fn residual_harmonics(&self) -> &[f64] {
        &self.residual_harmonics
    }

    pub fn probability(&self, index: usize, x: f64) -> f64 {
        self.series[index].value(x)
    }

    /// Outcome probabilities at total phase `x`, clamped at zero.
    pub fn distribution(&self, x: f64) -> Vec<f64> {
        self.series.iter().map(|s| s.value(x).max(0.0)).collect()
    }
}

/// Samples one output fringe on `grid` and extracts its Fourier coefficients.
pub fn fringe_scan(
    spec: &InterferometerSpec,
    input: &FockState,
    outcome: &FockState,
    grid: &PhaseGrid,
) -> Result<FringePattern> {
    if input.photons() != outcome.photons() {
        return Err(Error::PhotonNumberMismatch {
            input: input.photons(),
            output: outcome.photons(),
        });
    }
    let samples = grid
        .points()
        .map(|phi| {
            let u = spec.at(phi, 0.0);
            Ok((phi, transition_amplitude(&u, input, outcome)?.norm_sqr()))
        })
        .collect::<Result<Vec<_>>>()?;
    let period: Vec<f64> = PhaseGrid::period(FOURIER_POINTS)
        .points()
        .map(|phi| {
            transition_amplitude(&spec.at(phi, 0.0), input, outcome).map(|a| a.norm_sqr())
        })
        .collect::<Result<_>>()?;
    let series = FourierSeries::from_period_samples(&period, 2 * input.photons() + 2);
    Ok(FringePattern {
        outcome: outcome.clone(),
        samples,
        fourier: series.harmonics(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VisibilityReport {
    pub outcome: FockState,
    pub n_fold_visibility: f64,
    pub classical_bound: Option<f64>,
    pub nonclassical: Option<bool>,
}

impl VisibilityReport {
    pub fn with_bound(mut self, gamma: f64) -> Self {
        self.classical_bound = Some(gamma);
        self.nonclassical = Some(self.n_fold_visibility > gamma);
        self
    }
}

/// `V = |A_N / A_0|`, `N` the outcome's photon number.
pub fn n_fold_visibility(pattern: &FringePattern) -> Result<VisibilityReport> {
    let n = pattern.outcome.photons();
    if n == 0 {
        return Err(Error::VacuumOutcome);
    }
    let series = pattern.series();
    let a0 = series.harmonic(0).amplitude;
    if a0 <= 1e-15 {
        return Err(Error::DegeneratePattern);
    }
    Ok(VisibilityReport {
        outcome: pattern.outcome.clone(),
        n_fold_visibility: series.harmonic(n).amplitude / a0,
        classical_bound: None,
        nonclassical: None,
    })
}

/// Tabulated fringes of the `|1,1,1>` tritter and `|1,1,1,1>` quarter
/// interferometers, keyed by the sorted outcome pattern.
pub fn closed_form(kind: SplitterKind, pattern: &FockState) -> Option<fn(f64) -> f64> {
    let occ = pattern.pattern();
    let f: fn(f64) -> f64 = match (kind, occ.occupations()) {
        (SplitterKind::Tritter, [1, 1, 1]) => |p| {
            (29.0 - 24.0 * (p + PI / 3.0).cos() - 12.0 * (2.0 * p - PI / 3.0).cos()
                + 16.0 * (3.0 * p).cos())
                / 81.0
        },
        (SplitterKind::Tritter, [2, 1, 0]) => |p| 4.0 / 81.0 * (1.0 - (3.0 * p).cos()),
        (SplitterKind::Tritter, [3, 0, 0]) => |p| {
            (28.0 - 24.0 * (p - 2.0 * PI / 3.0).cos() + 12.0 * (2.0 * p - PI / 3.0).cos()
                + 8.0 * (3.0 * p).cos())
                / 243.0
        },
        (SplitterKind::Quarter, [1, 1, 1, 1]) => |p| {
            (167.0
                + 168.0 * p.cos()
                + 108.0 * (2.0 * p).cos()
                + 24.0 * (3.0 * p).cos()
                + 45.0 * (4.0 * p).cos())
                / 512.0
        },
        (SplitterKind::Quarter, [2, 2, 0, 0]) => {
            |p| (47.0 + 60.0 * p.cos() + 21.0 * (2.0 * p).cos()) * (p / 2.0).sin().powi(4) / 128.0
        }
        (SplitterKind::Quarter, [3, 1, 0, 0]) => |p| 3.0 * p.sin().powi(4) / 128.0,
        (SplitterKind::Quarter, [4, 0, 0, 0]) => {
            |p| 3.0 * (5.0 + 3.0 * p.cos()) * (p / 2.0).sin().powi(6) / 64.0
        }
        (SplitterKind::Quarter, [2, 1, 1, 0]) => {
            |p| (17.0 + 15.0 * (2.0 * p).cos()) * p.sin().powi(2) / 256.0
        }
        _ => return None,
    };
    Some(f)
}

/// Max deviation between the simulated fringe (input one photon per mode) and
/// its tabulated closed form over a 720-point period grid.
pub fn closed_form_check(outcome: &FockState, spec: &InterferometerSpec) -> Result<f64> {
    let formula = closed_form(spec.splitter(), outcome)
        .filter(|_| outcome.modes() == spec.modes())
        .ok_or_else(|| Error::Untabulated(outcome.to_string()))?;
    let input = FockState::ones(spec.modes());
    let mut worst: f64 = 0.0;
    for phi in PhaseGrid::period(FOURIER_POINTS).points() {
        let p = transition_amplitude(&spec.at(phi, 0.0), &input, outcome)?.norm_sqr();
        worst = worst.max((p - formula(phi)).abs());
    }
    Ok(worst)
}

/// Every output pattern of the `N`-photon sector, grouped by sorted pattern.
pub fn outcome_classes(modes: usize, photons: usize) -> Vec<(FockState, Vec<FockState>)> {
    let mut classes: Vec<(FockState, Vec<FockState>)> = Vec::new();
    for s in enumerate_basis(modes, photons).states() {
        let key = s.pattern();
        match classes.iter_mut().find(|(k, _)| *k == key) {
            Some((_, members)) => members.push(s.clone()),
            None => classes.push((key, vec![s.clone()])),
        }
    }
    classes
}
