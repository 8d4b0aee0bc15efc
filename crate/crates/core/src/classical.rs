//! Classical bound on N-fold fringe visibility.
//!
//! Coherent inputs `|alpha_1, ..., alpha_m>` stay coherent through the
//! interferometer, so every output mode is Poissonian with mean `|beta_j|^2`.
//! The total mean photon number is conserved, which makes the exponential
//! factors phase independent: the fringe of pattern `n` is proportional to
//! `prod_j |beta_j(phi)|^{2 n_j}` with `beta_j(phi) = c_j + d_j e^{-i phi}`.
//! The bound `Gamma` is the largest `|A_N / A_0|` over all coherent inputs,
//! found by a fixed grid search followed by compass-search refinement.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::devices::InterferometerSpec;
use crate::error::{Error, Result};
use crate::fock::FockState;

/// Largest mode count supported by the fixed-size evaluator.
const MAX_MODES: usize = 4;

type Column = [Complex64; MAX_MODES];

const ZERO: Column = [Complex64::new(0.0, 0.0); MAX_MODES];

/// Visibility of the `N`-th harmonic of a coherent-input fringe.
///
/// With `z = e^{-i phi}` each factor `|c_j + d_j z|^2` is a Laurent polynomial
/// of degree one, so the top coefficient of the fringe is
/// `prod_j (conj(c_j) d_j)^{n_j}` and the constant term is exact on `N + 1`
/// equally spaced points.
#[derive(Clone, Debug)]
pub struct CoherentVisibility {
    modes: usize,
    outcome: FockState,
    /// Photon counts of the occupied output modes.
    counts: Vec<i32>,
    /// `c = C alpha` is the part of the occupied output fields that bypasses
    /// the phase, `d = D alpha` the part that passes through it. Indexed by
    /// input mode, then by occupied output mode.
    c_map: Vec<Column>,
    d_map: Vec<Column>,
    /// `e^{-i phi_k}` on the `N + 1` sample points.
    rotors: Vec<Complex64>,
}

impl CoherentVisibility {
    pub fn new(spec: &InterferometerSpec, outcome: &FockState) -> Result<Self> {
        let m = spec.modes();
        if outcome.modes() != m {
            return Err(Error::ModeMismatch {
                expected: m,
                actual: outcome.modes(),
            });
        }
        if m > MAX_MODES {
            return Err(Error::ModeOutOfRange {
                index: m,
                modes: MAX_MODES,
            });
        }
        let n = outcome.photons();
        if n == 0 {
            return Err(Error::VacuumOutcome);
        }
        let occupied: Vec<usize> = (0..m).filter(|&j| outcome.occupation(j) > 0).collect();
        let s = spec.splitter().unitary();
        let k = spec.phase_mode();
        let mut c_map = vec![ZERO; m];
        let mut d_map = vec![ZERO; m];
        for l in 0..m {
            for (i, &j) in occupied.iter().enumerate() {
                d_map[l][i] = s.entry(j, k) * s.entry(k, l);
                c_map[l][i] = (0..m)
                    .filter(|&q| q != k)
                    .map(|q| s.entry(j, q) * s.entry(q, l))
                    .sum();
            }
        }
        let points = n + 1;
        Ok(CoherentVisibility {
            modes: m,
            outcome: outcome.clone(),
            counts: occupied.iter().map(|&j| outcome.occupation(j) as i32).collect(),
            c_map,
            d_map,
            rotors: (0..points)
                .map(|p| Complex64::from_polar(1.0, -TAU * p as f64 / points as f64))
                .collect(),
        })
    }

    pub fn outcome(&self) -> &FockState {
        &self.outcome
    }

    /// `|A_N / A_0|` for input amplitudes `alphas`; zero for a vanishing fringe.
    pub fn visibility(&self, alphas: &[Complex64]) -> f64 {
        let mut c = ZERO;
        let mut d = ZERO;
        for (l, a) in alphas.iter().enumerate().take(self.modes) {
            for i in 0..self.counts.len() {
                c[i] += self.c_map[l][i] * a;
                d[i] += self.d_map[l][i] * a;
            }
        }
        self.ratio(&c, &d)
    }

    fn ratio(&self, c: &Column, d: &Column) -> f64 {
        self.ratio_above(c, d, 0.0).unwrap_or(0.0)
    }

    /// As [`ratio`](Self::ratio), but gives up with `None` once
    /// the partial sum of `A_0` shows the value is below `floor`.
    fn ratio_above(&self, c: &Column, d: &Column, floor: f64) -> Option<f64> {
        let mut top = 1.0;
        for (i, &n) in self.counts.iter().enumerate() {
            top *= (c[i].norm() * d[i].norm()).powi(n);
        }
        // The terms of A_0 are nonnegative; the margin keeps ties exact.
        let limit = if floor > 0.0 {
            2.0 * top / floor * self.rotors.len() as f64 * (1.0 + 1e-9)
        } else {
            f64::INFINITY
        };
        let mut a0 = 0.0;
        for z in &self.rotors {
            let mut p = 1.0;
            for (i, &n) in self.counts.iter().enumerate() {
                p *= (c[i] + d[i] * z).norm_sqr().powi(n);
            }
            a0 += p;
            if a0 > limit {
                return None;
            }
        }
        a0 /= self.rotors.len() as f64;
        if a0 <= f64::MIN_POSITIVE {
            return Some(0.0);
        }
        Some(2.0 * top / a0)
    }

    /// Visibility at search coordinates `[|alpha_1|..|alpha_m|, theta_2..theta_m]`.
    pub fn at(&self, x: &[f64]) -> f64 {
        self.visibility(&coords_to_alphas(x, self.modes))
    }
}

/// Contributions of every grid value of `alpha_l` to `c` and `d`.
struct GridTable {
    n_mod: usize,
    n_phase: usize,
    /// Indexed by `(l, modulus index, phase index)`.
    c: Vec<Column>,
    d: Vec<Column>,
}

impl GridTable {
    fn new(eval: &CoherentVisibility, search: &BoundSearch, n_mod: usize, n_phase: usize) -> Self {
        let m = eval.modes;
        let mut c = Vec::with_capacity(m * n_mod * n_phase);
        let mut d = Vec::with_capacity(m * n_mod * n_phase);
        for l in 0..m {
            for r in 0..n_mod {
                for t in 0..n_phase {
                    let a = Complex64::from_polar(
                        r as f64 * search.modulus_step,
                        t as f64 * search.phase_step,
                    );
                    c.push(eval.c_map[l].map(|x| x * a));
                    d.push(eval.d_map[l].map(|x| x * a));
                }
            }
        }
        GridTable { n_mod, n_phase, c, d }
    }

    fn slot(&self, l: usize, r: usize, t: usize) -> usize {
        (l * self.n_mod + r) * self.n_phase + t
    }

    /// Grid index of moduli `r` and phases `t` (`t[0]` is ignored).
    fn index(&self, m: usize, r: &[usize], t: &[usize]) -> usize {
        let mut idx = 0;
        for l in (1..m).rev() {
            idx = idx * self.n_phase + t[l];
        }
        for l in (0..m).rev() {
            idx = idx * self.n_mod + r[l];
        }
        idx
    }

    /// Scans every grid point whose first `m - 1` input amplitudes are fixed by
    /// `head`, varying the last one.
    fn scan_head(
        &self,
        eval: &CoherentVisibility,
        mut head: usize,
        top: &mut Vec<(f64, usize)>,
        keep: usize,
    ) {
        let m = eval.modes;
        let occ = eval.counts.len();
        let mut r = [0; MAX_MODES];
        let mut t = [0; MAX_MODES];
        for slot in r.iter_mut().take(m - 1) {
            *slot = head % self.n_mod;
            head /= self.n_mod;
        }
        for slot in t.iter_mut().take(m - 1).skip(1) {
            *slot = head % self.n_phase;
            head /= self.n_phase;
        }
        let mut pc = ZERO;
        let mut pd = ZERO;
        for l in 0..m - 1 {
            let at = self.slot(l, r[l], t[l]);
            for i in 0..occ {
                pc[i] += self.c[at][i];
                pd[i] += self.d[at][i];
            }
        }
        let last = m - 1;
        let phases = if last == 0 { 1 } else { self.n_phase };
        for rl in 0..self.n_mod {
            for tl in 0..phases {
                let at = self.slot(last, rl, tl);
                let mut c = pc;
                let mut d = pd;
                for i in 0..occ {
                    c[i] += self.c[at][i];
                    d[i] += self.d[at][i];
                }
                r[last] = rl;
                t[last] = tl;
                let floor = if top.len() == keep { top[keep - 1].0 } else { 0.0 };
                if let Some(v) = eval.ratio_above(&c, &d, floor) {
                    push_top(top, (v, self.index(m, &r, &t)), keep);
                }
            }
        }
    }

    fn heads(&self, m: usize) -> usize {
        self.n_mod.pow(m as u32 - 1) * self.n_phase.pow(m.saturating_sub(2) as u32)
    }
}

/// `theta_1` is fixed to zero: a global phase does not change any fringe.
pub fn coords_to_alphas(x: &[f64], modes: usize) -> Vec<Complex64> {
    (0..modes)
        .map(|i| {
            let theta = if i == 0 { 0.0 } else { x[modes + i - 1] };
            Complex64::from_polar(x[i], theta)
        })
        .collect()
}

/// Search budget for [`classical_visibility_bound`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundSearch {
    pub modulus_max: f64,
    pub modulus_step: f64,
    pub phase_step: f64,
    pub restarts: usize,
    pub final_step: f64,
}

impl Default for BoundSearch {
    fn default() -> Self {
        BoundSearch {
            modulus_max: 3.0,
            modulus_step: 0.25,
            phase_step: std::f64::consts::PI / 8.0,
            restarts: 20,
            final_step: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Restart {
    pub start: Vec<f64>,
    pub start_value: f64,
    pub end: Vec<f64>,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicalBound {
    pub outcome: FockState,
    pub gamma: f64,
    pub argmax: Vec<f64>,
    pub restarts: Vec<Restart>,
}

impl ClassicalBound {
    /// Bound using only the first `count` restarts.
    pub fn gamma_after(&self, count: usize) -> f64 {
        self.restarts
            .iter()
            .take(count)
            .map(|r| r.value)
            .fold(0.0, f64::max)
    }
}

/// Maximizes the `N`-fold visibility of `outcome` over coherent inputs.
///
/// Deterministic: the grid is fixed, ties are broken by grid index and the
/// refinement has no random component.
pub fn classical_visibility_bound(
    spec: &InterferometerSpec,
    outcome: &FockState,
    search: &BoundSearch,
) -> Result<ClassicalBound> {
    let eval = CoherentVisibility::new(spec, outcome)?;
    let m = spec.modes();
    let n_mod = (search.modulus_max / search.modulus_step).round() as usize + 1;
    let n_phase = (TAU / search.phase_step).round() as usize;

    let decode = |mut idx: usize| -> Vec<f64> {
        let mut x = vec![0.0; 2 * m - 1];
        for slot in x.iter_mut().take(m) {
            *slot = (idx % n_mod) as f64 * search.modulus_step;
            idx /= n_mod;
        }
        for slot in x.iter_mut().skip(m) {
            *slot = (idx % n_phase) as f64 * search.phase_step;
            idx /= n_phase;
        }
        x
    };

    let table = GridTable::new(&eval, search, n_mod, n_phase);
    let keep = search.restarts.max(1);
    let best: Vec<(f64, usize)> = (0..table.heads(m))
        .into_par_iter()
        .fold(Vec::new, |mut top, head| {
            table.scan_head(&eval, head, &mut top, keep);
            top
        })
        .reduce(Vec::new, |mut a, b| {
            for item in b {
                push_top(&mut a, item, keep);
            }
            a
        });

    let restarts: Vec<Restart> = best
        .par_iter()
        .take(search.restarts)
        .map(|&(v, idx)| {
            let start = decode(idx);
            let (end, value) = compass_search(&eval, &start, v, search);
            Restart {
                start,
                start_value: v,
                end,
                value,
            }
        })
        .collect();

    let (gamma, argmax) = restarts
        .iter()
        .map(|r| (r.value, r.end.clone()))
        .chain(best.first().map(|&(v, idx)| (v, decode(idx))))
        .fold((0.0, Vec::new()), |acc, cand| if cand.0 > acc.0 { cand } else { acc });

    Ok(ClassicalBound {
        outcome: outcome.clone(),
        gamma,
        argmax,
        restarts,
    })
}

fn better(a: (f64, usize), b: (f64, usize)) -> bool {
    a.0 > b.0 || (a.0 == b.0 && a.1 < b.1)
}

fn push_top(top: &mut Vec<(f64, usize)>, item: (f64, usize), keep: usize) {
    if top.len() == keep && !better(item, top[keep - 1]) {
        return;
    }
    let pos = top.iter().position(|&t| better(item, t)).unwrap_or(top.len());
    top.insert(pos, item);
    top.truncate(keep);
}

/// Coordinate compass search: moves to the best improving neighbour, halves
/// the step when none improves.
fn compass_search(
    eval: &CoherentVisibility,
    start: &[f64],
    start_value: f64,
    search: &BoundSearch,
) -> (Vec<f64>, f64) {
    let m = eval.modes;
    let mut x = start.to_vec();
    let mut value = start_value;
    let mut scale = 0.5;
    let mut iterations = 0;
    while scale * search.modulus_step >= search.final_step && iterations < 200_000 {
        iterations += 1;
        let mut best: Option<(Vec<f64>, f64)> = None;
        for i in 0..x.len() {
            let step = scale
                * if i < m {
                    search.modulus_step
                } else {
                    search.phase_step
                };
            for dir in [1.0, -1.0] {
                let mut y = x.clone();
                y[i] += dir * step;
                if i < m {
                    y[i] = y[i].clamp(0.0, search.modulus_max);
                }
                let v = eval.at(&y);
                if v > best.as_ref().map_or(value, |b| b.1) {
                    best = Some((y, v));
                }
            }
        }
        match best {
            Some((y, v)) => {
                x = y;
                value = v;
            }
            None => scale *= 0.5,
        }
    }
    (x, value)
}
