use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::output::{Cell, Report, Table};
use super::{
    Command, DevicesCheckArgs, FisherArgs, FringesArgs, ModeSelection, MultiparamArgs,
    ProtocolArgs, VisibilityArgs, GOLDEN_DIR_ENV,
};
use crate::classical::{classical_visibility_bound, BoundSearch};
use crate::devices::{self, InterferometerSpec, SplitterKind};
use crate::error::{Error, Result};
use crate::estimation::fisher::{cfi_photon_counting, qfi_coherent, qfi_fock};
use crate::estimation::protocol::{
    monte_carlo, phase_points, ErrorStats, ProtocolConfig, ProtocolMode,
};
use crate::fock::{enumerate_basis, CoherentState, FockState, ModeUnitary};
use crate::fringes::{
    closed_form, fringe_scan, n_fold_visibility, outcome_classes, output_distribution,
    FringeModel, PhaseGrid,
};
use crate::multiparameter::{
    bounds, qfim_coherent, qfim_pure, qfim_sld, weak_commutativity, QfiMatrix,
};

const RESIDUAL_LIMIT: f64 = 1e-10;
const CLOSED_FORM_LIMIT: f64 = 1e-9;
/// Points where the Fisher information reaches the QFI are reported at this tolerance.
const SATURATION_TOLERANCE: f64 = 1e-8;

pub(super) fn dispatch(command: &Command) -> Result<Report> {
    match command {
        Command::DevicesCheck(a) => devices_check(a),
        Command::Fringes(a) => fringes(a),
        Command::Visibility(a) => visibility(a),
        Command::Fisher(a) => fisher(a),
        Command::Protocol(a) => protocol(a),
        Command::Multiparam(a) => multiparam(a),
    }
}

/// `3_0_0` for `|3,0,0>`; usable in column names.
fn label(state: &FockState) -> String {
    state
        .occupations()
        .iter()
        .map(|n| n.to_string())
        .collect::<Vec<_>>()
        .join("_")
}

fn resolve_input(device: SplitterKind, input: &Option<FockState>) -> Result<FockState> {
    let m = device.modes();
    let input = input.clone().unwrap_or_else(|| FockState::ones(m));
    if input.modes() != m {
        return Err(Error::ModeMismatch {
            expected: m,
            actual: input.modes(),
        });
    }
    if input.photons() == 0 {
        return Err(Error::Parse("input carries no photons".into()));
    }
    Ok(input)
}

/// Converts 1-based mode labels, rejecting out-of-range and repeated entries.
fn zero_based(modes: &[usize], count: usize) -> Result<Vec<usize>> {
    let mut out = Vec::with_capacity(modes.len());
    for &k in modes {
        if k == 0 || k > count {
            return Err(Error::Parse(format!("mode {k} is outside 1..={count}")));
        }
        if out.contains(&(k - 1)) {
            return Err(Error::DuplicateMode(k));
        }
        out.push(k - 1);
    }
    Ok(out)
}

fn max_abs_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn devices_check(a: &DevicesCheckArgs) -> Result<Report> {
    let mut tritter = devices::tritter();
    if a.corrupt {
        let mut m = tritter.matrix().clone();
        m[(0, 0)] += Complex64::new(1e-6, 0.0);
        tritter = ModeUnitary::new_unchecked(m);
    }
    let quarter = devices::quarter();

    let s = 1.0 / 3f64.sqrt();
    let omega = Complex64::from_polar(1.0, 2.0 * PI / 3.0);
    let tritter_ref = DMatrix::from_fn(3, 3, |i, j| {
        if i == j {
            Complex64::new(s, 0.0)
        } else {
            omega * s
        }
    });
    let quarter_ref = DMatrix::from_fn(4, 4, |i, j| Complex64::new(if i == j { 0.5 } else { -0.5 }, 0.0));
    let q = quarter.matrix();
    let involution = max_abs_diff(&(q * q), &DMatrix::identity(4, 4));

    let checks = [
        ("tritter_unitarity", tritter.unitarity_residual()),
        ("quarter_unitarity", quarter.unitarity_residual()),
        ("quarter_involution", involution),
        ("tritter_reference", max_abs_diff(tritter.matrix(), &tritter_ref)),
        ("quarter_reference", max_abs_diff(q, &quarter_ref)),
    ];
    let mut report = Report::default();
    let mut table = Table::new("residuals", &["check", "residual", "limit", "pass"]);
    let mut failed = Vec::new();
    for (name, r) in checks {
        let pass = r <= RESIDUAL_LIMIT;
        if !pass {
            failed.push(name);
        }
        table.push(vec![name.into(), r.into(), RESIDUAL_LIMIT.into(), pass.into()]);
        report.set(name, r);
    }
    report.tables.push(table);

    let mut entries = Table::new("tritter_entries", &["row", "col", "re", "im", "abs2", "arg_over_2pi_3"]);
    for i in 0..3 {
        for j in 0..3 {
            let z = tritter.entry(i, j);
            entries.push(vec![
                (i + 1).into(),
                (j + 1).into(),
                z.re.into(),
                z.im.into(),
                z.norm_sqr().into(),
                (z.arg() / (2.0 * PI / 3.0)).into(),
            ]);
        }
    }
    report.tables.push(entries);
    report.set("pass", failed.is_empty());
    if !failed.is_empty() {
        report.failure = Some(format!("residual above {RESIDUAL_LIMIT:e}: {}", failed.join(", ")));
    }
    Ok(report)
}

fn fringes(a: &FringesArgs) -> Result<Report> {
    let spec = InterferometerSpec::mach_zehnder(a.device);
    let m = spec.modes();
    let input = resolve_input(a.device, &a.input)?;
    let all = a.outcome.trim() == "all";
    let outcomes: Vec<FockState> = if all {
        enumerate_basis(m, input.photons()).states().to_vec()
    } else {
        let o: FockState = a.outcome.parse()?;
        if o.modes() != m {
            return Err(Error::ModeMismatch {
                expected: m,
                actual: o.modes(),
            });
        }
        if o.photons() != input.photons() {
            return Err(Error::PhotonNumberMismatch {
                input: input.photons(),
                output: o.photons(),
            });
        }
        vec![o]
    };

    let mut columns = vec!["phi".to_string()];
    columns.extend(outcomes.iter().map(|o| format!("p_{}", label(o))));
    if all {
        columns.push("total".into());
    }
    let mut table = Table::with_columns("fringes", columns);
    let mut values: Vec<Vec<f64>> = vec![Vec::with_capacity(a.grid.count); outcomes.len()];
    for phi in a.grid.points() {
        let state = output_distribution(&spec, &input, phi)?;
        let mut row: Vec<Cell> = vec![phi.into()];
        let mut total = 0.0;
        for (k, o) in outcomes.iter().enumerate() {
            let p = state.probability(o);
            values[k].push(p);
            total += p;
            row.push(p.into());
        }
        if all {
            row.push(total.into());
        }
        table.push(row);
    }

    let mut report = Report::default();
    report.set("device", a.device);
    report.set("input", &input);
    let mut maxima = BTreeMap::new();
    for (o, v) in outcomes.iter().zip(&values) {
        let (i, p) = v
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &p)| if p > best.1 { (i, p) } else { best });
        maxima.insert(label(o), json!({ "max": p, "phi": a.grid.point(i) }));
    }
    report.set("maxima", maxima);

    if a.check_closed_form {
        if input != FockState::ones(m) {
            return Err(Error::Untabulated(format!(
                "input {input}; closed forms are tabulated for one photon per mode"
            )));
        }
        let mut deviations = BTreeMap::new();
        let mut worst: f64 = 0.0;
        for (o, v) in outcomes.iter().zip(&values) {
            let f = closed_form(a.device, o).ok_or_else(|| Error::Untabulated(o.to_string()))?;
            let d = a
                .grid
                .points()
                .zip(v)
                .map(|(phi, p)| (p - f(phi)).abs())
                .fold(0.0, f64::max);
            worst = worst.max(d);
            deviations.insert(label(o), d);
        }
        report.set("closed_form_deviation", deviations);
        report.set("closed_form_max_deviation", worst);
        if worst > CLOSED_FORM_LIMIT {
            report.failure = Some(format!(
                "closed-form deviation {worst:e} exceeds {CLOSED_FORM_LIMIT:e}"
            ));
        }
    }
    report.tables.push(table);
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct GammaGolden {
    gamma: f64,
    argmax: Vec<f64>,
}

/// On-disk cache of classical bounds for one device and search setting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct GammaCache {
    device: SplitterKind,
    search: BoundSearch,
    bounds: BTreeMap<String, GammaGolden>,
}

fn cache_path(dir: &Path, device: SplitterKind) -> PathBuf {
    dir.join(format!("gamma_{device}.json"))
}

fn load_cache(path: &Path, device: SplitterKind, search: &BoundSearch) -> Option<GammaCache> {
    let text = std::fs::read_to_string(path).ok()?;
    let cache: GammaCache = serde_json::from_str(&text).ok()?;
    (cache.device == device && cache.search == *search).then_some(cache)
}

fn visibility(a: &VisibilityArgs) -> Result<Report> {
    let spec = InterferometerSpec::mach_zehnder(a.device);
    let m = spec.modes();
    let input = resolve_input(a.device, &a.input)?;
    let n = input.photons();
    let search = BoundSearch::default();
    let dir = a
        .golden_dir
        .clone()
        .or_else(|| std::env::var_os(GOLDEN_DIR_ENV).map(PathBuf::from));
    let path = dir.as_deref().map(|d| cache_path(d, a.device));
    let mut cache = path
        .as_deref()
        .filter(|_| !a.refresh)
        .and_then(|p| load_cache(p, a.device, &search))
        .unwrap_or(GammaCache {
            device: a.device,
            search: search.clone(),
            bounds: BTreeMap::new(),
        });
    let mut computed = false;

    let period = PhaseGrid::period(1);
    let v_of = |outcome: &FockState| -> Result<Option<(f64, f64, f64)>> {
        let pattern = fringe_scan(&spec, &input, outcome, &period)?;
        match n_fold_visibility(&pattern) {
            Ok(r) => {
                let series = pattern.series();
                Ok(Some((
                    r.n_fold_visibility,
                    series.harmonic(0).amplitude,
                    series.harmonic(n).amplitude,
                )))
            }
            Err(Error::DegeneratePattern) => Ok(None),
            Err(e) => Err(e),
        }
    };

    let mut table = Table::new(
        "visibility",
        &["outcome", "members", "A_0", "A_N", "V", "gamma", "nonclassical", "member_spread"],
    );
    let mut flagged = Vec::new();
    let classes = outcome_classes(m, n);
    for (pattern, members) in &classes {
        let key = label(pattern);
        let gamma = match cache.bounds.get(&key) {
            Some(g) => g.gamma,
            None => {
                let b = classical_visibility_bound(&spec, pattern, &search)?;
                computed = true;
                cache.bounds.insert(
                    key.clone(),
                    GammaGolden {
                        gamma: b.gamma,
                        argmax: b.argmax.clone(),
                    },
                );
                b.gamma
            }
        };
        let rep = v_of(pattern)?;
        let mut spread: f64 = 0.0;
        if let Some((v, _, _)) = rep {
            for member in members {
                if let Some((vm, _, _)) = v_of(member)? {
                    spread = spread.max((vm - v).abs());
                }
            }
        }
        let nonclassical = rep.map(|(v, _, _)| v > gamma);
        if nonclassical == Some(true) {
            flagged.push(key.clone());
        }
        table.push(vec![
            key.into(),
            members.len().into(),
            rep.map(|r| r.1).into(),
            rep.map(|r| r.2).into(),
            rep.map(|r| r.0).into(),
            gamma.into(),
            nonclassical.map_or(Cell::Missing, Cell::Bool),
            spread.into(),
        ]);
    }

    if let Some(p) = path.filter(|_| computed || a.refresh) {
        if let Some(parent) = p.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&p, serde_json::to_string_pretty(&cache)? + "\n")?;
    }

    let mut report = Report::default();
    report.set("device", a.device);
    report.set("input", &input);
    report.set("classes", classes.len());
    report.set("nonclassical", flagged);
    report.set("search", &search);
    report.tables.push(table);
    Ok(report)
}

fn fisher(a: &FisherArgs) -> Result<Report> {
    let m = a.device.modes();
    let input = resolve_input(a.device, &a.input)?;
    let mode = zero_based(&[a.phase_mode.unwrap_or(m)], m)?[0];
    let spec = InterferometerSpec::multi_phase(a.device, &[mode])?;
    let model = FringeModel::new(&spec, &input)?;
    let mean = input.photons() as f64;
    let coherent = CoherentState::balanced(m, mean);

    let h_fock = qfi_fock(&spec, &input, mode)?;
    let h_i = if a.probe.with_reference() {
        Some(qfi_coherent(&spec, &coherent, mode, true)?)
    } else {
        None
    };
    let h_ii = if a.probe.phase_averaged() {
        Some(qfi_coherent(&spec, &coherent, mode, false)?)
    } else {
        None
    };

    let mut columns = vec!["phi"];
    if a.probe.fock() {
        columns.extend(["I", "H_fock"]);
    }
    if h_i.is_some() {
        columns.push("H_C_i");
    }
    if h_ii.is_some() {
        columns.push("H_C_ii");
    }
    let mut table = Table::new("fisher", &columns);
    let mut best = (f64::NEG_INFINITY, Vec::new());
    let mut saturated = Vec::new();
    for phi in a.grid.points() {
        let mut row: Vec<Cell> = vec![phi.into()];
        if a.probe.fock() {
            let info = cfi_photon_counting(&model, phi);
            if info > best.0 + SATURATION_TOLERANCE {
                best = (info, vec![phi]);
            } else if (info - best.0).abs() <= SATURATION_TOLERANCE {
                best.1.push(phi);
            }
            if (info - h_fock).abs() <= SATURATION_TOLERANCE {
                saturated.push(phi);
            }
            row.extend([info.into(), h_fock.into()]);
        }
        if let Some(h) = h_i {
            row.push(h.into());
        }
        if let Some(h) = h_ii {
            row.push(h.into());
        }
        table.push(row);
    }

    let mut report = Report::default();
    report.set("device", a.device);
    report.set("input", &input);
    report.set("phase_mode", mode + 1);
    report.set("coherent_mean_photons", mean);
    if a.probe.fock() {
        report.set("H_fock", h_fock);
        report.set("I_max", best.0);
        report.set("I_max_phi", best.1);
        report.set("I_equals_H_phi", saturated);
    }
    report.set("H_C_i", h_i);
    report.set("H_C_ii", h_ii);
    report.tables.push(table);
    Ok(report)
}

fn stats_cells(s: Option<&ErrorStats>) -> Vec<Cell> {
    match s {
        Some(s) => vec![s.rms.into(), s.bias.into(), s.bias_se.into(), s.mean_sigma.into()],
        None => vec![Cell::Missing; 4],
    }
}

fn protocol(a: &ProtocolArgs) -> Result<Report> {
    let measurements = if a.full { 100_000 } else { a.measurements };
    let mut config = ProtocolConfig::new(measurements, a.seed)?;
    if a.three_step {
        config = config.three_step();
    }
    let phases = match &a.grid {
        Some(g) => g.points().collect(),
        None if a.phases == 0 => return Err(Error::Parse("need at least one phase".into())),
        None => phase_points(a.phases),
    };
    let modes: Vec<ProtocolMode> = match a.mode {
        ModeSelection::Adaptive => vec![ProtocolMode::Adaptive],
        ModeSelection::Nonadaptive => vec![ProtocolMode::Nonadaptive],
        ModeSelection::Both => vec![ProtocolMode::Adaptive, ProtocolMode::Nonadaptive],
    };
    let result = monte_carlo(&config, &phases, a.trials, &modes)?;

    let mut columns: Vec<String> = ["phi", "qcr", "cr", "sql"].map(String::from).to_vec();
    for mode in &modes {
        for s in ["rms", "bias", "bias_se", "mean_sigma"] {
            columns.push(format!("{s}_{mode}"));
        }
    }
    let mut table = Table::with_columns("protocol", columns);
    for r in &result.rows {
        let mut row: Vec<Cell> = vec![r.phi.into(), r.qcr.into(), r.cr.into(), r.sql.into()];
        if r.adaptive.is_some() {
            row.extend(stats_cells(r.adaptive.as_ref()));
        }
        if r.nonadaptive.is_some() {
            row.extend(stats_cells(r.nonadaptive.as_ref()));
        }
        table.push(row);
    }

    let mut report = Report::default();
    report.set("protocol", &config);
    report.set("trials", a.trials);
    report.set("phases", phases.len());
    let band = |rms: f64, bound: f64| (rms / bound - 1.0).abs() <= 0.15;
    if modes.contains(&ProtocolMode::Adaptive) {
        let rows = || result.rows.iter().filter_map(|r| r.adaptive.as_ref().map(|s| (r, s)));
        let within = rows().filter(|(r, s)| band(s.rms, r.qcr)).count();
        let below = rows().all(|(r, s)| s.rms < r.sql);
        let (bias, se) = result.pooled_bias(ProtocolMode::Adaptive).unwrap_or((0.0, 0.0));
        report.set(
            "adaptive",
            json!({
                "within_15pct_of_qcr": within,
                "below_sql_everywhere": below,
                "pooled_bias": bias,
                "pooled_bias_se": se,
            }),
        );
    }
    if modes.contains(&ProtocolMode::Nonadaptive) {
        let rows: Vec<_> = result
            .rows
            .iter()
            .filter_map(|r| Some((r.cr?, r.nonadaptive.as_ref()?)))
            .collect();
        let within = rows.iter().filter(|(cr, s)| band(s.rms, *cr)).count();
        let (bias, se) = result.pooled_bias(ProtocolMode::Nonadaptive).unwrap_or((0.0, 0.0));
        report.set(
            "nonadaptive",
            json!({
                "within_15pct_of_cr": within,
                "pooled_bias": bias,
                "pooled_bias_se": se,
            }),
        );
    }
    report.tables.push(table);
    Ok(report)
}

fn qfim_rows(table: &mut Table, probe: &str, h: &QfiMatrix) {
    for (i, row) in h.entries.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            table.push(vec![
                probe.into(),
                (h.modes[i] + 1).into(),
                (h.modes[j] + 1).into(),
                v.into(),
            ]);
        }
    }
}

/// Bounds of `h`, or a description of the singular direction.
fn bound_rows(table: &mut Table, probe: &str, h: &QfiMatrix, measurements: u64) -> Result<Value> {
    match bounds(h, measurements) {
        Ok(b) => {
            for (k, mode) in h.modes.iter().enumerate() {
                table.push(vec![
                    probe.into(),
                    (mode + 1).into(),
                    b.effective_qfi[k].into(),
                    b.per_parameter[k].into(),
                ]);
            }
            Ok(json!({
                "effective_qfi": b.effective_qfi,
                "total_variance": b.total_variance,
                "min_eigenvalue": h.min_eigenvalue(),
                "asymmetry": h.asymmetry(),
            }))
        }
        Err(Error::SingularFisher {
            direction,
            eigenvalue,
        }) => Ok(json!({
            "singular": true,
            "direction": direction,
            "min_eigenvalue": eigenvalue,
        })),
        Err(e) => Err(e),
    }
}

fn multiparam(a: &MultiparamArgs) -> Result<Report> {
    let m = a.device.modes();
    let input = resolve_input(a.device, &a.input)?;
    let labels = a.modes.clone().unwrap_or_else(|| vec![m - 1, m]);
    let modes = zero_based(&labels, m)?;
    if modes.is_empty() {
        return Err(Error::Parse("need at least one phase mode".into()));
    }
    let lambda = a.lambda.clone().unwrap_or_else(|| vec![0.0; modes.len()]);
    if lambda.len() != modes.len() {
        return Err(Error::Parse(format!(
            "{} phase values for {} modes",
            lambda.len(),
            modes.len()
        )));
    }
    let spec = InterferometerSpec::multi_phase(a.device, &modes)?;
    let mean = input.photons() as f64;
    let coherent = CoherentState::balanced(m, mean);

    let mut qfim = Table::new("qfim", &["probe", "mode_a", "mode_b", "value"]);
    let mut bound_table = Table::new("bounds", &["probe", "mode", "effective_qfi", "bound"]);
    let mut report = Report::default();
    report.set("device", a.device);
    report.set("input", &input);
    report.set("modes", &labels);
    report.set("lambda", &lambda);
    report.set("measurements", a.measurements);
    report.set("coherent_mean_photons", mean);

    let mut effective: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    let mut record = |name: &'static str, h: &QfiMatrix, report: &mut Report| -> Result<()> {
        qfim_rows(&mut qfim, name, h);
        let b = bound_rows(&mut bound_table, name, h, a.measurements)?;
        if let Some(e) = b.get("effective_qfi").and_then(|v| serde_json::from_value(v.clone()).ok()) {
            effective.insert(name, e);
        }
        report.set(name, b);
        Ok(())
    };

    if a.probe.fock() {
        let cov = qfim_pure(&spec, &input, &modes)?;
        let sld = qfim_sld(&spec, &input, &modes, &lambda)?;
        let agreement = cov
            .entries
            .iter()
            .flatten()
            .zip(sld.entries.iter().flatten())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        report.set("fock_covariance_vs_sld", agreement);
        report.set(
            "weak_commutativity_residual",
            weak_commutativity(&spec, &input, &modes, &lambda)?,
        );
        record("fock", &cov, &mut report)?;
    }
    if a.probe.with_reference() {
        let h = qfim_coherent(&spec, &coherent, &modes, true)?;
        record("coherent_with_reference", &h, &mut report)?;
    }
    if a.probe.phase_averaged() {
        let h = qfim_coherent(&spec, &coherent, &modes, false)?;
        record("coherent_phase_averaged", &h, &mut report)?;
    }
    if let (Some(f), Some(c)) = (effective.get("fock"), effective.get("coherent_phase_averaged")) {
        let ordered = f.iter().zip(c).all(|(f, c)| f > c);
        report.set("fock_exceeds_phase_averaged_coherent", ordered);
    }
    report.tables.push(qfim);
    report.tables.push(bound_table);
    Ok(report)
}
