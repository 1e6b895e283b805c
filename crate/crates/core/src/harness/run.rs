//! The experiment runner, its records and the cross-pipeline check.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fourier::{make_pw_observable, PWObservable};
use crate::geometry::{ExampleName, Family, GroupoidModel, Resolution};
use crate::poisson::{exact_bracket, BracketDescriptor, Sign};

use super::catalog::lookup;
use super::config::ExperimentConfig;
use super::defects::{classical_sup, dirac_defect, quantized_norm, selfadjoint_defect, vonneumann_defect, Setting};
use super::fit::{order_fit, OrderFit};
use super::svg::{Plot, Series};

/// Column order of the records CSV.
pub const RECORD_COLUMNS: [&str; 12] = [
    "example",
    "f_id",
    "g_id",
    "sign",
    "hbar",
    "dirac_defect",
    "vn_defect",
    "sa_defect",
    "reduced_norm",
    "classical_norm",
    "trunc_mass",
    "wall_ms",
];

/// Dual-grid spacing used for classical sup norms.
const CLASSICAL_DUAL_STEP: f64 = 0.02;

/// The grid of an example refined so that one unit of `ħ` spans
/// `points_per_hbar` grid steps.
pub fn rung_model(name: ExampleName, hbar: f64, points_per_hbar: f64, window: f64) -> Result<GroupoidModel> {
    if !(hbar > 0.0) {
        return Err(Error::InvalidHbar(hbar));
    }
    let step = hbar / points_per_hbar;
    let res = match name {
        ExampleName::PairFlatLine | ExampleName::TransfLineTranslation | ExampleName::TransfLineTrivial => {
            let k = (window / step).ceil().max(1.0) as usize;
            Resolution::new(2 * k + 1, k as f64 * step)
        }
        ExampleName::PairCircleMetric | ExampleName::TransfCircleRotation | ExampleName::GroupU1 => {
            let n = ((2.0 * PI / step).ceil() as usize).max(16);
            Resolution::new(n + n % 2, window)
        }
        ExampleName::GroupAffine => {
            let probe = GroupoidModel::new(name, Resolution::new(8, window))?;
            let grid = probe.affine_grid.expect("affine grid");
            let span = (grid.theta_hi / grid.theta_lo).ln();
            Resolution::new(((span / step).ceil() as usize + 1).max(8), window)
        }
    };
    GroupoidModel::new(name, res)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecordRow {
    pub example: String,
    pub f_id: String,
    pub g_id: String,
    pub sign: Sign,
    pub hbar: f64,
    pub dirac_defect: f64,
    pub vn_defect: f64,
    pub sa_defect: f64,
    /// `‖Q_ħ(f)‖`.
    pub reduced_norm: f64,
    /// `‖f‖_∞`.
    pub classical_norm: f64,
    pub trunc_mass: f64,
    pub wall_ms: Option<f64>,
}

/// Fits and ladder checks of one `(f, g)` pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairSummary {
    pub f_id: String,
    pub g_id: String,
    pub dirac_fit: Option<FitSummary>,
    pub vn_fit: Option<FitSummary>,
    pub dirac_decreasing: bool,
    pub vn_decreasing: bool,
    /// Largest `D(ħ_{k+1}) / D(ħ_k)` along the ladder.
    pub dirac_max_ratio: f64,
    pub vn_max_ratio: f64,
    pub max_sa_defect: f64,
    pub max_trunc_mass: f64,
    /// `(ħ, ‖Q_ħ(f)‖)` with the classical value at `ħ = 0` last.
    pub norm_scan: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitSummary {
    /// `None` marks an identically zero ladder.
    pub order: Option<f64>,
    pub residual: f64,
}

impl From<OrderFit> for FitSummary {
    fn from(f: OrderFit) -> Self {
        Self {
            order: (!f.is_exact_zero()).then_some(f.order),
            residual: f.residual,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub config: ExperimentConfig,
    pub sign: Sign,
    pub rows: Vec<RecordRow>,
    pub summaries: Vec<PairSummary>,
}

struct Rung {
    model: GroupoidModel,
    observables: BTreeMap<String, PWObservable>,
}

fn build_rungs(config: &ExperimentConfig, name: ExampleName) -> Result<Vec<Rung>> {
    config
        .ladder
        .par_iter()
        .map(|&hbar| {
            let model = rung_model(name, hbar, config.points_per_hbar, config.window_for(name))?;
            let observables = config
                .observables
                .iter()
                .map(|id| Ok((id.clone(), make_pw_observable(&model, &lookup(&model, id)?, config.fiber_spacing)?)))
                .collect::<Result<_>>()?;
            Ok(Rung { model, observables })
        })
        .collect()
}

fn run_cell(config: &ExperimentConfig, sign: Sign, rung: &Rung, hbar: f64, f_id: &str, g_id: &str) -> Result<RecordRow> {
    let start = Instant::now();
    let kappa = config.cutoff_for(&rung.model)?;
    let s = Setting { model: &rung.model, hbar, sign, kappa: &kappa, seed: config.seed };
    let (f, g) = (&rung.observables[f_id], &rung.observables[g_id]);
    let dirac = dirac_defect(&s, f, g)?;
    let vn = vonneumann_defect(&s, f, g)?;
    let sa = selfadjoint_defect(&s, f)?.max(selfadjoint_defect(&s, g)?);
    let reduced_norm = quantized_norm(&s, f)?;
    let classical_norm = classical_sup(&rung.model, f, CLASSICAL_DUAL_STEP)?;
    let trunc_mass = [dirac.truncation_mass, vn.truncation_mass, f.truncation_mass, g.truncation_mass]
        .into_iter()
        .fold(0.0, f64::max);
    Ok(RecordRow {
        example: rung.model.name.to_string(),
        f_id: f_id.to_string(),
        g_id: g_id.to_string(),
        sign,
        hbar,
        dirac_defect: dirac.value,
        vn_defect: vn.value,
        sa_defect: sa,
        reduced_norm,
        classical_norm,
        trunc_mass,
        wall_ms: config.record_wall_time.then(|| start.elapsed().as_secs_f64() * 1e3),
    })
}

fn ladder_checks(values: &[f64]) -> (bool, f64) {
    let decreasing = values.windows(2).all(|w| w[1] < w[0]);
    let ratio = values
        .windows(2)
        .map(|w| if w[0] == 0.0 { if w[1] == 0.0 { 0.0 } else { f64::INFINITY } } else { w[1] / w[0] })
        .fold(0.0, f64::max);
    (decreasing, ratio)
}

fn try_fit(ladder: &[f64], values: &[f64]) -> Option<FitSummary> {
    order_fit(ladder, values).ok().map(FitSummary::from)
}

fn summarize(ladder: &[f64], f_id: &str, g_id: &str, rows: &[RecordRow]) -> PairSummary {
    let dirac: Vec<f64> = rows.iter().map(|r| r.dirac_defect).collect();
    let vn: Vec<f64> = rows.iter().map(|r| r.vn_defect).collect();
    let (dirac_decreasing, dirac_max_ratio) = ladder_checks(&dirac);
    let (vn_decreasing, vn_max_ratio) = ladder_checks(&vn);
    let mut norm_scan: Vec<(f64, f64)> = rows.iter().map(|r| (r.hbar, r.reduced_norm)).collect();
    norm_scan.push((0.0, rows.last().map_or(0.0, |r| r.classical_norm)));
    PairSummary {
        f_id: f_id.to_string(),
        g_id: g_id.to_string(),
        dirac_fit: try_fit(ladder, &dirac),
        vn_fit: try_fit(ladder, &vn),
        dirac_decreasing,
        vn_decreasing,
        dirac_max_ratio,
        vn_max_ratio,
        max_sa_defect: rows.iter().map(|r| r.sa_defect).fold(0.0, f64::max),
        max_trunc_mass: rows.iter().map(|r| r.trunc_mass).fold(0.0, f64::max),
        norm_scan,
    }
}

/// Reject pairs whose product or bracket leaves the representable class
/// before anything is computed.
fn check_pairs(config: &ExperimentConfig, name: ExampleName, sign: Sign) -> Result<()> {
    let probe = rung_model(name, config.ladder[0], config.points_per_hbar, config.window_for(name))?;
    let desc = BracketDescriptor::for_model(&probe, sign);
    for (f_id, g_id) in config.resolved_pairs() {
        let (f, g) = (lookup(&probe, &f_id)?, lookup(&probe, &g_id)?);
        let reject = |e: Error| Error::InvalidConfig(format!("pair ({f_id}, {g_id}): {e}"));
        f.product(&g).map_err(reject)?;
        exact_bracket(&desc, &f, &g).map_err(reject)?;
    }
    Ok(())
}

/// Run every `(pair, ħ)` cell of the configuration. Nothing is written.
pub fn compute_experiment(config: &ExperimentConfig) -> Result<ExperimentRecord> {
    config.validate()?;
    let name = config.example_name()?;
    let sign = config.sign_for(name);
    check_pairs(config, name, sign)?;
    let rungs = build_rungs(config, name)?;
    let pairs = config.resolved_pairs();
    let cells: Vec<(usize, usize)> = (0..pairs.len())
        .flat_map(|p| (0..config.ladder.len()).map(move |k| (p, k)))
        .collect();
    let rows: Vec<RecordRow> = cells
        .par_iter()
        .map(|&(p, k)| run_cell(config, sign, &rungs[k], config.ladder[k], &pairs[p].0, &pairs[p].1))
        .collect::<Result<_>>()?;
    let rungs_per_pair = config.ladder.len();
    let summaries = pairs
        .iter()
        .zip(rows.chunks(rungs_per_pair))
        .map(|((f, g), chunk)| summarize(&config.ladder, f, g, chunk))
        .collect();
    Ok(ExperimentRecord { config: config.clone(), sign, rows, summaries })
}

fn fmt(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:e}")
    }
}

fn fmt_order(fit: &Option<FitSummary>) -> String {
    match fit {
        None => String::new(),
        Some(FitSummary { order: None, .. }) => "inf".into(),
        Some(FitSummary { order: Some(o), .. }) => fmt(*o),
    }
}

impl ExperimentRecord {
    /// The records CSV: one row per cell, then one `hbar = fit` summary row
    /// per pair holding the fitted Dirac and von Neumann orders.
    pub fn records_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(RECORD_COLUMNS)?;
        for r in &self.rows {
            w.write_record([
                r.example.clone(),
                r.f_id.clone(),
                r.g_id.clone(),
                r.sign.to_string(),
                fmt(r.hbar),
                fmt(r.dirac_defect),
                fmt(r.vn_defect),
                fmt(r.sa_defect),
                fmt(r.reduced_norm),
                fmt(r.classical_norm),
                fmt(r.trunc_mass),
                r.wall_ms.map(|t| format!("{t:.3}")).unwrap_or_default(),
            ])?;
        }
        for s in &self.summaries {
            w.write_record([
                self.config.example.clone(),
                s.f_id.clone(),
                s.g_id.clone(),
                self.sign.to_string(),
                "fit".into(),
                fmt_order(&s.dirac_fit),
                fmt_order(&s.vn_fit),
                fmt(s.max_sa_defect),
                String::new(),
                String::new(),
                fmt(s.max_trunc_mass),
                String::new(),
            ])?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }

    pub fn manifest_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Manifest<'a> {
            artifact: &'static str,
            version: &'static str,
            seed: u64,
            sign: Sign,
            config: &'a ExperimentConfig,
            summaries: &'a [PairSummary],
        }
        let m = Manifest {
            artifact: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            seed: self.config.seed,
            sign: self.sign,
            config: &self.config,
            summaries: &self.summaries,
        };
        Ok(serde_json::to_string_pretty(&m)? + "\n")
    }
}

fn plot_stem(f: &str, g: &str) -> String {
    format!("{f}__{g}")
}

fn write_scan_files(out: &Path, record: &ExperimentRecord, svg: bool) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for (s, rows) in record.summaries.iter().zip(record.rows.chunks(record.config.ladder.len())) {
        let stem = plot_stem(&s.f_id, &s.g_id);
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["hbar", "dirac_defect", "vn_defect"])?;
        for r in rows {
            w.write_record([fmt(r.hbar), fmt(r.dirac_defect), fmt(r.vn_defect)])?;
        }
        let path = out.join(format!("defects_{stem}.csv"));
        fs::write(&path, w.into_inner().map_err(|e| Error::Io(e.into_error()))?)?;
        written.push(path);

        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["hbar", "norm"])?;
        for &(h, n) in &s.norm_scan {
            w.write_record([fmt(h), fmt(n)])?;
        }
        let path = out.join(format!("norms_{stem}.csv"));
        fs::write(&path, w.into_inner().map_err(|e| Error::Io(e.into_error()))?)?;
        written.push(path);

        if svg {
            for (name, plot) in [("defects", defect_plot(&record.config.example, rows)), ("norms", norm_plot(&record.config.example, rows))] {
                let path = out.join(format!("{name}_{stem}.svg"));
                fs::write(&path, plot.render())?;
                written.push(path);
            }
        }
    }
    Ok(written)
}

fn defect_plot(example: &str, rows: &[RecordRow]) -> Plot {
    let (f, g) = rows.first().map_or(("", ""), |r| (r.f_id.as_str(), r.g_id.as_str()));
    Plot {
        title: format!("{example}: defects of {f}, {g}"),
        x_label: "ħ".into(),
        y_label: "defect".into(),
        log_x: true,
        log_y: true,
        series: vec![
            Series { label: "Dirac".into(), points: rows.iter().map(|r| (r.hbar, r.dirac_defect)).collect() },
            Series { label: "von Neumann".into(), points: rows.iter().map(|r| (r.hbar, r.vn_defect)).collect() },
        ],
    }
}

fn norm_plot(example: &str, rows: &[RecordRow]) -> Plot {
    let f = rows.first().map_or("", |r| r.f_id.as_str());
    let mut quantum: Vec<(f64, f64)> = rows.iter().map(|r| (r.hbar, r.reduced_norm)).collect();
    if let Some(last) = rows.last() {
        quantum.push((0.0, last.classical_norm));
    }
    Plot {
        title: format!("{example}: ‖Q_ħ({f})‖"),
        x_label: "ħ".into(),
        y_label: "norm".into(),
        log_x: false,
        log_y: false,
        series: vec![
            Series { label: "‖Q_ħ(f)‖".into(), points: quantum },
            Series { label: "‖f‖∞".into(), points: rows.iter().map(|r| (r.hbar, r.classical_norm)).collect() },
        ],
    }
}

/// Run the experiment and write `records.csv`, `manifest.json` and the
/// plot-data files into `out` (or the configured directory).
pub fn run_experiment(config: &ExperimentConfig, out: Option<&Path>) -> Result<ExperimentRecord> {
    let out = out
        .map(Path::to_path_buf)
        .or_else(|| config.out.clone())
        .ok_or_else(|| Error::InvalidConfig("no output directory given".into()))?;
    let record = compute_experiment(config)?;
    fs::create_dir_all(&out)?;
    fs::write(out.join("records.csv"), record.records_csv()?)?;
    fs::write(out.join("manifest.json"), record.manifest_json()?)?;
    write_scan_files(&out, &record, config.svg)?;
    Ok(record)
}

/// Render SVG plots from an existing records CSV.
pub fn plot_records(records: &Path, out: &Path) -> Result<Vec<PathBuf>> {
    let mut reader = csv::Reader::from_path(records)?;
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != RECORD_COLUMNS {
        return Err(Error::InvalidConfig(format!("{} is not a records CSV", records.display())));
    }
    let parse = |s: &str| -> Result<f64> {
        s.parse::<f64>().map_err(|_| Error::InvalidConfig(format!("bad number `{s}` in records")))
    };
    let mut groups: BTreeMap<(String, String, String), Vec<RecordRow>> = BTreeMap::new();
    for rec in reader.records() {
        let rec = rec?;
        if &rec[4] == "fit" {
            continue;
        }
        let row = RecordRow {
            example: rec[0].to_string(),
            f_id: rec[1].to_string(),
            g_id: rec[2].to_string(),
            sign: rec[3].parse()?,
            hbar: parse(&rec[4])?,
            dirac_defect: parse(&rec[5])?,
            vn_defect: parse(&rec[6])?,
            sa_defect: parse(&rec[7])?,
            reduced_norm: parse(&rec[8])?,
            classical_norm: parse(&rec[9])?,
            trunc_mass: parse(&rec[10])?,
            wall_ms: rec[11].parse().ok(),
        };
        groups.entry((row.example.clone(), row.f_id.clone(), row.g_id.clone())).or_default().push(row);
    }
    fs::create_dir_all(out)?;
    let mut written = Vec::new();
    for ((example, f, g), rows) in &groups {
        for (name, plot) in [("defects", defect_plot(example, rows)), ("norms", norm_plot(example, rows))] {
            let path = out.join(format!("{name}_{example}_{}.svg", plot_stem(f, g)));
            fs::write(&path, plot.render())?;
            written.push(path);
        }
    }
    Ok(written)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrosscheckRow {
    pub f_id: String,
    pub hbar: f64,
    pub pair_norm: f64,
    pub transformation_norm: f64,
    pub relative_difference: f64,
}

/// `‖Q_ħ(f)‖` through the pair groupoid (sign −) and through the translation
/// action groupoid (sign +) on the same lattice.
pub fn crosscheck(config: &ExperimentConfig) -> Result<Vec<CrosscheckRow>> {
    config.validate()?;
    let name = config.example_name()?;
    if !matches!(name, ExampleName::PairFlatLine | ExampleName::TransfLineTranslation) {
        return Err(Error::InvalidConfig(format!(
            "the cross-check compares pair-flat-line with transf-line-translation, not {name}"
        )));
    }
    let cells: Vec<(usize, usize)> = (0..config.observables.len())
        .flat_map(|o| (0..config.ladder.len()).map(move |k| (o, k)))
        .collect();
    cells
        .par_iter()
        .map(|&(o, k)| {
            let (id, hbar) = (&config.observables[o], config.ladder[k]);
            let mut norms = [0.0; 2];
            for (slot, example) in [ExampleName::PairFlatLine, ExampleName::TransfLineTranslation].into_iter().enumerate() {
                let model = rung_model(example, hbar, config.points_per_hbar, config.window_for(example))?;
                let f = make_pw_observable(&model, &lookup(&model, id)?, config.fiber_spacing)?;
                let kappa = config.cutoff_for(&model)?;
                let sign = if example.family() == Family::Pair { Sign::Minus } else { Sign::Plus };
                let s = Setting { model: &model, hbar, sign, kappa: &kappa, seed: config.seed };
                norms[slot] = quantized_norm(&s, &f)?;
            }
            let scale = norms[0].abs().max(norms[1].abs());
            Ok(CrosscheckRow {
                f_id: id.clone(),
                hbar,
                pair_norm: norms[0],
                transformation_norm: norms[1],
                relative_difference: if scale == 0.0 { 0.0 } else { (norms[0] - norms[1]).abs() / scale },
            })
        })
        .collect()
}
