//! Grid posterior over the phase interval `[-pi/3, 5pi/3)`.
//!
//! Weights live in the log domain; normalization subtracts the maximum before
//! exponentiating, so tens of thousands of shots do not underflow.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::devices::InterferometerSpec;
use crate::error::{Error, Result};
use crate::fock::{transition_amplitude, FockState};
use crate::fringes::{FringeModel, PhaseGrid};

/// Lower end of the phase interval. The interval is centred on `2 pi / 3`,
/// the symmetry point of the tritter fringes.
pub const OMEGA_START: f64 = -PI / 3.0;

/// Default posterior resolution.
pub const GRID_SIZE: usize = 4096;

/// Wraps `phi` into `[-pi/3, 5pi/3)`.
pub fn wrap_to_omega(phi: f64) -> f64 {
    OMEGA_START + (phi - OMEGA_START).rem_euclid(TAU)
}

/// Single-shot probability of `outcome` with unknown phase `phi` and feedback `psi`.
pub fn likelihood(
    spec: &InterferometerSpec,
    input: &FockState,
    psi: f64,
    outcome: &FockState,
    phi: f64,
) -> Result<f64> {
    Ok(transition_amplitude(&spec.at(phi, psi), input, outcome)?.norm_sqr())
}

#[derive(Clone, Debug)]
pub struct Posterior {
    grid: PhaseGrid,
    log_weights: Vec<f64>,
    normalized: bool,
}

impl Posterior {
    /// Uniform prior over the phase interval.
    pub fn uniform(size: usize) -> Result<Self> {
        if size < 1024 || !size.is_power_of_two() {
            return Err(Error::GridSize(size));
        }
        let grid = PhaseGrid::new(OMEGA_START, OMEGA_START + TAU, size);
        let mut post = Posterior {
            grid,
            log_weights: vec![0.0; size],
            normalized: false,
        };
        post.normalize()?;
        Ok(post)
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.log_weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_weights.is_empty()
    }

    pub fn phase(&self, i: usize) -> f64 {
        self.grid.point(i)
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Adds `log L(phi_i)` pointwise.
    pub fn add_log_likelihood(&mut self, log_likelihood: impl Fn(f64) -> f64) {
        for (i, w) in self.log_weights.iter_mut().enumerate() {
            *w += log_likelihood(self.grid.point(i));
        }
        self.normalized = false;
    }

    /// Adds `sum_j counts_j log p_j(phi + psi)` for repeated shots.
    pub fn add_counts(&mut self, model: &FringeModel, psi: f64, counts: &[u64]) {
        let observed: Vec<(usize, f64)> = counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(j, &c)| (j, c as f64))
            .collect();
        if observed.is_empty() {
            return;
        }
        let kmax = model.input().photons();
        let mut powers = vec![Complex64::new(1.0, 0.0); kmax + 1];
        for (i, w) in self.log_weights.iter_mut().enumerate() {
            let z = Complex64::from_polar(1.0, self.grid.point(i) + psi);
            for k in 1..=kmax {
                powers[k] = powers[k - 1] * z;
            }
            for &(j, c) in &observed {
                let p = model.series(j).value_from_powers(&powers).max(0.0);
                *w += c * p.ln();
            }
        }
        self.normalized = false;
    }

    /// Rescales so the Riemann sum of the density is one.
    pub fn normalize(&mut self) -> Result<()> {
        let max = self
            .log_weights
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(Error::ImpossibleOutcome);
        }
        let z: f64 = self.log_weights.iter().map(|w| (w - max).exp()).sum::<f64>() * self.grid.step();
        let shift = max + z.ln();
        for w in &mut self.log_weights {
            *w -= shift;
        }
        self.normalized = true;
        Ok(())
    }

    /// Normalized density values on the grid.
    pub fn density(&self) -> Vec<f64> {
        let mut copy = self.clone();
        if !copy.normalized {
            copy.normalize().expect("posterior has support");
        }
        copy.log_weights.iter().map(|w| w.exp()).collect()
    }

    pub fn argmax(&self) -> usize {
        argmax_in(&self.log_weights, 0..self.len())
    }

    /// Probability mass in the `2 * half_width + 1` cells centred on `center`.
    pub fn window_mass(&self, center: usize, half_width: usize) -> f64 {
        let n = self.len();
        let density = self.density();
        (0..=2 * half_width)
            .map(|o| density[(center + n + o - half_width) % n])
            .sum::<f64>()
            * self.grid.step()
    }

    /// Probability mass of the grid cells in `range`.
    pub fn range_mass(&self, range: std::ops::Range<usize>) -> f64 {
        self.density()[range].iter().sum::<f64>() * self.grid.step()
    }

    /// Riemann-sum integral of the density; one after normalization.
    pub fn total_mass(&self) -> f64 {
        self.density().iter().sum::<f64>() * self.grid.step()
    }
}

pub(crate) fn argmax_in(values: &[f64], range: std::ops::Range<usize>) -> usize {
    let mut best = range.start;
    for i in range {
        if values[i] > values[best] {
            best = i;
        }
    }
    best
}

/// One Bayesian update with a single observed outcome.
pub fn bayes_update(
    posterior: &Posterior,
    model: &FringeModel,
    psi: f64,
    outcome: &FockState,
) -> Result<Posterior> {
    let j = model.index_of(outcome)?;
    let mut counts = vec![0; model.outcomes().len()];
    counts[j] = 1;
    let mut next = posterior.clone();
    next.add_counts(model, psi, &counts);
    next.normalize()?;
    Ok(next)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub variance: f64,
}

impl Estimate {
    pub fn sigma(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// Posterior mean and variance, as linear moments over the phase interval.
pub fn estimate(posterior: &Posterior) -> Estimate {
    let density = posterior.density();
    let dx = posterior.grid().step();
    let mean: f64 = density
        .iter()
        .enumerate()
        .map(|(i, p)| posterior.phase(i) * p)
        .sum::<f64>()
        * dx;
    let variance = density
        .iter()
        .enumerate()
        .map(|(i, p)| (posterior.phase(i) - mean).powi(2) * p)
        .sum::<f64>()
        * dx;
    Estimate { mean, variance }
}
