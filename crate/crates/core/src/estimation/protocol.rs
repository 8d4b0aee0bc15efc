//! Three-step adaptive phase estimation on the tritter interferometer.
//!
//! Steps I and II use single photons to locate the phase up to the mirror
//! ambiguity `phi <-> 4pi/3 - phi` and then break it. Step III sends
//! `|1,1,1>` with a feedback phase that moves the total phase to a point where
//! the Fisher information reaches the quantum bound.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::devices::{InterferometerSpec, SplitterKind};
use crate::error::{Error, Result};
use crate::fock::FockState;
use crate::fringes::FringeModel;

use super::bayes::{argmax_in, estimate, Estimate, Posterior, GRID_SIZE, OMEGA_START};
use super::fisher::{cfi_photon_counting, qfi_fock};

/// Centre of the mirror symmetry `phi <-> 4pi/3 - phi` shared by the
/// single-photon and `|1,1,1>` fringes.
pub const MIRROR_CENTER: f64 = 2.0 * PI / 3.0;

/// Default step-III working point, `2pi/3 + 0.35`. At exactly `2pi/3` the
/// `|1,1,1>` likelihood is symmetric about the rough estimate and the
/// posterior splits into two equal peaks; `I / H = 0.963` here.
pub const WORKING_POINT: f64 = MIRROR_CENTER + 0.35;

/// Working point of the re-centring block, `2pi/3 + 0.6`.
pub const RECENTRE_POINT: f64 = MIRROR_CENTER + 0.6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolMode {
    Adaptive,
    /// All shots with `|1,1,1>` and no feedback.
    Nonadaptive,
}

impl std::fmt::Display for ProtocolMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ProtocolMode::Adaptive => "adaptive",
            ProtocolMode::Nonadaptive => "nonadaptive",
        })
    }
}

impl std::str::FromStr for ProtocolMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adaptive" => Ok(ProtocolMode::Adaptive),
            "nonadaptive" | "non-adaptive" => Ok(ProtocolMode::Nonadaptive),
            other => Err(Error::Parse(format!("unknown protocol mode `{other}`"))),
        }
    }
}

/// How step II decides between the two mirror candidates of step I.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateRule {
    /// Posterior mass in `2 * half_width + 1` cells around each candidate.
    Window { half_width: usize },
    /// Posterior mass of each half of the interval, split at the mirror centre.
    HalfMass,
}

/// Optional first block of step III, run further from the symmetric point,
/// after which the feedback is re-centred on the posterior maximum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Recentre {
    pub shots: u64,
    pub working_point: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub measurements: u64,
    pub step1: u64,
    pub step2: u64,
    pub step2_feedback: f64,
    /// Total phase `phi + psi` aimed at in step III.
    pub target_working_point: f64,
    pub seed: u64,
    pub grid_size: usize,
    pub candidate_rule: CandidateRule,
    pub recentre: Option<Recentre>,
}

impl ProtocolConfig {
    pub fn new(measurements: u64, seed: u64) -> Result<Self> {
        if measurements < 9 {
            return Err(Error::Protocol(format!(
                "need at least 9 measurements, got {measurements}"
            )));
        }
        let root = (measurements as f64).sqrt().floor() as u64;
        Ok(ProtocolConfig {
            measurements,
            step1: root,
            step2: root,
            step2_feedback: PI / 4.0,
            target_working_point: WORKING_POINT,
            seed,
            grid_size: GRID_SIZE,
            candidate_rule: CandidateRule::HalfMass,
            recentre: Some(Recentre {
                shots: root,
                working_point: RECENTRE_POINT,
            }),
        })
    }

    /// Step-III shots, including any re-centring block.
    pub fn step3(&self) -> u64 {
        self.measurements - self.step1 - self.step2
    }

    /// Steps I-III exactly as three blocks, with the working point at `2pi/3`.
    pub fn three_step(mut self) -> Self {
        self.recentre = None;
        self.target_working_point = MIRROR_CENTER;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.measurements < 9 {
            return Err(Error::Protocol(format!(
                "need at least 9 measurements, got {}",
                self.measurements
            )));
        }
        let extra = self.recentre.map_or(0, |r| r.shots);
        if self.step1 + self.step2 + extra > self.measurements {
            return Err(Error::Protocol(
                "steps I and II use more shots than available".into(),
            ));
        }
        if self.grid_size < 1024 || !self.grid_size.is_power_of_two() {
            return Err(Error::GridSize(self.grid_size));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepTally {
    pub input: FockState,
    pub feedback: f64,
    pub shots: u64,
    /// Only outcomes that occurred.
    pub counts: Vec<(FockState, u64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub true_phase: f64,
    pub estimate: f64,
    pub sigma: f64,
    /// Rough estimate fed back in step III; absent without feedback.
    pub rough_estimate: Option<f64>,
    pub steps: Vec<StepTally>,
}

/// Shared, read-only state for many trials.
pub struct Protocol {
    config: ProtocolConfig,
    single: FringeModel,
    triple: FringeModel,
}

impl Protocol {
    pub fn new(config: ProtocolConfig) -> Result<Self> {
        config.validate()?;
        let spec = InterferometerSpec::mach_zehnder(SplitterKind::Tritter);
        Ok(Protocol {
            single: FringeModel::new(&spec, &FockState::single(3, 0))?,
            triple: FringeModel::new(&spec, &FockState::ones(3))?,
            config,
        })
    }

    pub fn config(&self) -> &ProtocolConfig {
        &self.config
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        rng.set_stream(stream);
        rng
    }

    /// Draws `shots` outcomes at total phase `phi + psi` and folds them into `post`.
    fn measure(
        &self,
        rng: &mut ChaCha8Rng,
        post: &mut Posterior,
        model: &FringeModel,
        phi: f64,
        psi: f64,
        shots: u64,
    ) -> StepTally {
        let counts = sample_counts(rng, &model.distribution(phi + psi), shots);
        post.add_counts(model, psi, &counts);
        StepTally {
            input: model.input().clone(),
            feedback: psi,
            shots,
            counts: model
                .outcomes()
                .iter()
                .zip(&counts)
                .filter(|(_, &c)| c > 0)
                .map(|(o, &c)| (o.clone(), c))
                .collect(),
        }
    }

    pub fn run(&self, true_phase: f64, stream: u64) -> Result<TrialResult> {
        let cfg = &self.config;
        let mut rng = self.rng(stream);
        let mut post = Posterior::uniform(cfg.grid_size)?;
        let n = post.len();

        let s1 = self.measure(&mut rng, &mut post, &self.single, true_phase, 0.0, cfg.step1);
        post.normalize()?;
        let first = post.argmax();
        let mirror = (n - first) % n;

        let s2 = self.measure(
            &mut rng,
            &mut post,
            &self.single,
            true_phase,
            cfg.step2_feedback,
            cfg.step2,
        );
        post.normalize()?;
        let half = choose_half(&post, first, mirror, cfg.candidate_rule);
        let rough = post.phase(argmax_in(post.log_weights(), half));

        let mut steps = vec![s1, s2];
        let mut rough = rough;
        let mut remaining = cfg.step3();
        if let Some(r) = cfg.recentre {
            let psi = r.working_point - rough;
            steps.push(self.measure(&mut rng, &mut post, &self.triple, true_phase, psi, r.shots));
            post.normalize()?;
            rough = post.phase(post.argmax());
            remaining -= r.shots;
        }
        let psi = cfg.target_working_point - rough;
        steps.push(self.measure(&mut rng, &mut post, &self.triple, true_phase, psi, remaining));
        post.normalize()?;
        let Estimate { mean, variance } = estimate(&post);
        Ok(TrialResult {
            true_phase,
            estimate: mean,
            sigma: variance.sqrt(),
            rough_estimate: Some(rough),
            steps,
        })
    }

    /// All shots with `|1,1,1>` at zero feedback. The posterior cannot tell
    /// `phi` from its mirror image, so the estimate and the true phase are
    /// both folded onto `[-pi/3, 2pi/3]`.
    pub fn run_nonadaptive(&self, true_phase: f64, stream: u64) -> Result<TrialResult> {
        let cfg = &self.config;
        let mut rng = self.rng(stream);
        let mut post = Posterior::uniform(cfg.grid_size)?;
        let s = self.measure(
            &mut rng,
            &mut post,
            &self.triple,
            true_phase,
            0.0,
            cfg.measurements,
        );
        post.normalize()?;
        let Estimate { mean, variance } = folded_estimate(&post);
        Ok(TrialResult {
            true_phase: fold(true_phase),
            estimate: mean,
            sigma: variance.sqrt(),
            rough_estimate: None,
            steps: vec![s],
        })
    }

    pub fn run_mode(&self, mode: ProtocolMode, true_phase: f64, stream: u64) -> Result<TrialResult> {
        match mode {
            ProtocolMode::Adaptive => self.run(true_phase, stream),
            ProtocolMode::Nonadaptive => self.run_nonadaptive(true_phase, stream),
        }
    }
}

/// Convenience wrapper for a single trial on stream 0.
pub fn run_protocol(config: &ProtocolConfig, true_phase: f64) -> Result<TrialResult> {
    Protocol::new(config.clone())?.run(true_phase, 0)
}

/// Inverse-CDF sampling of `shots` outcomes; returns counts per outcome.
pub fn sample_counts(rng: &mut impl Rng, probabilities: &[f64], shots: u64) -> Vec<u64> {
    let mut cdf = Vec::with_capacity(probabilities.len());
    let mut acc = 0.0;
    for p in probabilities {
        acc += p.max(0.0);
        cdf.push(acc);
    }
    let mut counts = vec![0; probabilities.len()];
    for _ in 0..shots {
        let u = rng.gen::<f64>() * acc;
        let j = cdf.partition_point(|&c| c <= u).min(counts.len() - 1);
        counts[j] += 1;
    }
    counts
}

/// Step-II decision: the half of the interval, split at the mirror centre,
/// that holds the phase. Ties go to the half of the first candidate.
pub fn choose_half(
    post: &Posterior,
    first: usize,
    mirror: usize,
    rule: CandidateRule,
) -> std::ops::Range<usize> {
    let n = post.len();
    let (keep, other) = (half_domain(first, n), half_domain(mirror, n));
    let (a, b) = match rule {
        CandidateRule::Window { half_width } => (
            post.window_mass(first, half_width),
            post.window_mass(mirror, half_width),
        ),
        CandidateRule::HalfMass => {
            let lower = 0..n / 2 + 1;
            let upper = n / 2..n;
            let (l, u) = (post.range_mass(lower.clone()), post.range_mass(upper.clone()));
            return if u > l { upper } else { lower };
        }
    };
    if b > a {
        other
    } else {
        keep
    }
}

/// Grid range of the half of the interval, split at the mirror centre, that
/// contains `index`.
fn half_domain(index: usize, n: usize) -> std::ops::Range<usize> {
    if index <= n / 2 {
        0..n / 2 + 1
    } else {
        n / 2..n
    }
}

/// Maps `phi` in the interval onto `[-pi/3, 2pi/3]` using the mirror symmetry.
pub fn fold(phi: f64) -> f64 {
    if phi > MIRROR_CENTER {
        2.0 * MIRROR_CENTER - phi
    } else {
        phi
    }
}

fn folded_estimate(post: &Posterior) -> Estimate {
    let density = post.density();
    let dx = post.grid().step();
    let x: Vec<f64> = (0..post.len()).map(|i| fold(post.phase(i))).collect();
    let mean: f64 = x.iter().zip(&density).map(|(x, p)| x * p).sum::<f64>() * dx;
    let variance = x
        .iter()
        .zip(&density)
        .map(|(x, p)| (x - mean).powi(2) * p)
        .sum::<f64>()
        * dx;
    Estimate { mean, variance }
}

/// The `count` phase values at the cell midpoints of the interval.
pub fn phase_points(count: usize) -> Vec<f64> {
    (0..count)
        .map(|k| OMEGA_START + (k as f64 + 0.5) * TAU / count as f64)
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub rms: f64,
    pub bias: f64,
    /// Standard error of the bias.
    pub bias_se: f64,
    pub mean_sigma: f64,
}

impl ErrorStats {
    pub fn from_trials(trials: &[TrialResult]) -> Self {
        let n = trials.len() as f64;
        let errors: Vec<f64> = trials.iter().map(|t| t.estimate - t.true_phase).collect();
        let bias = errors.iter().sum::<f64>() / n;
        let rms = (errors.iter().map(|e| e * e).sum::<f64>() / n).sqrt();
        let spread = errors.iter().map(|e| (e - bias).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        ErrorStats {
            rms,
            bias,
            bias_se: (spread / n).sqrt(),
            mean_sigma: trials.iter().map(|t| t.sigma).sum::<f64>() / n,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloRow {
    pub phi: f64,
    pub adaptive: Option<ErrorStats>,
    pub nonadaptive: Option<ErrorStats>,
    /// `(M H)^{-1/2}`.
    pub qcr: f64,
    /// `(M I_phi)^{-1/2}` for `|1,1,1>` without feedback; `None` where `I_phi = 0`.
    pub cr: Option<f64>,
    /// `1 / sqrt(3 M)`.
    pub sql: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloTable {
    pub config: ProtocolConfig,
    pub trials: usize,
    pub rows: Vec<MonteCarloRow>,
}

impl MonteCarloTable {
    /// Bias pooled over all rows of `mode` and its standard error.
    pub fn pooled_bias(&self, mode: ProtocolMode) -> Option<(f64, f64)> {
        let stats: Vec<&ErrorStats> = self
            .rows
            .iter()
            .filter_map(|r| match mode {
                ProtocolMode::Adaptive => r.adaptive.as_ref(),
                ProtocolMode::Nonadaptive => r.nonadaptive.as_ref(),
            })
            .collect();
        if stats.is_empty() {
            return None;
        }
        let k = stats.len() as f64;
        let bias = stats.iter().map(|s| s.bias).sum::<f64>() / k;
        let var = stats.iter().map(|s| s.bias_se.powi(2)).sum::<f64>() / (k * k);
        Some((bias, var.sqrt()))
    }
}

/// Runs `trials` seeded trials at each phase for each requested mode. Trial
/// `t` at phase index `k` draws from stream `2 * (k * trials + t)`, plus one
/// for the non-adaptive control.
pub fn monte_carlo(
    config: &ProtocolConfig,
    phases: &[f64],
    trials: usize,
    modes: &[ProtocolMode],
) -> Result<MonteCarloTable> {
    if trials == 0 {
        return Err(Error::Protocol("need at least one trial".into()));
    }
    let protocol = Protocol::new(config.clone())?;
    let spec = InterferometerSpec::mach_zehnder(SplitterKind::Tritter);
    let h = qfi_fock(&spec, &FockState::ones(3), spec.phase_mode())?;
    let m = config.measurements as f64;
    let mut rows = Vec::with_capacity(phases.len());
    for (k, &phi) in phases.iter().enumerate() {
        let run = |mode: ProtocolMode, offset: u64| -> Result<Vec<TrialResult>> {
            (0..trials)
                .into_par_iter()
                .map(|t| {
                    let stream = 2 * (k * trials + t) as u64 + offset;
                    protocol.run_mode(mode, phi, stream)
                })
                .collect()
        };
        let stats = |mode: ProtocolMode, offset: u64| -> Result<Option<ErrorStats>> {
            if modes.contains(&mode) {
                Ok(Some(ErrorStats::from_trials(&run(mode, offset)?)))
            } else {
                Ok(None)
            }
        };
        let adaptive = stats(ProtocolMode::Adaptive, 0)?;
        let nonadaptive = stats(ProtocolMode::Nonadaptive, 1)?;
        let info = cfi_photon_counting(&protocol.triple, phi);
        rows.push(MonteCarloRow {
            phi,
            adaptive,
            nonadaptive,
            qcr: (m * h).powf(-0.5),
            cr: (info > 0.0).then(|| (m * info).powf(-0.5)),
            sql: (3.0 * m).powf(-0.5),
        });
    }
    Ok(MonteCarloTable {
        config: config.clone(),
        trials,
        rows,
    })
}
