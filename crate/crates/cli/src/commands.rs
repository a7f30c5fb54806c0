use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use tartar::cones::{bootstrap, BootstrapReport, BootstrapStep};
use tartar::laminate::{
    analytic_energy_estimate, build_with, Axis, FrameLabel, LaminateSpec, Label,
};
use tartar::scaling::{
    fit_points, fixed_order_envelope, sweep as run_sweep, windowed_power_slope, Fit, SweepRecord,
    M_CAP, P_MAX,
};
use tartar::{total_energy, DiagMatrix, EnergyBreakdown, Error, PhaseField};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::output::{num, opt_num, write_atomic, write_csv, write_json, write_jsonl};
use crate::plot::{line_plot, Series};
use crate::verify::{self, VerifyReport};

fn write_config(cfg: &RunConfig) -> CliResult<()> {
    write_atomic(&cfg.out.join("config.toml"), cfg.normalized().as_bytes())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FirstOrder {
    pub first: DiagMatrix,
    pub second: DiagMatrix,
    pub first_label: String,
    pub second_label: String,
    pub lambda: f64,
    pub axis: Axis,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BuildSummary {
    pub n: usize,
    pub m: usize,
    pub r: f64,
    pub datum: DiagMatrix,
    pub eps: f64,
    pub frames: FrameLabel,
    pub first_order: FirstOrder,
    pub energy: EnergyBreakdown,
    pub interface_edges: usize,
    pub geometric_interface_edges: usize,
    pub active_volume: f64,
    pub cutoff_volume: f64,
    /// Unit-constant bookkeeping estimate for `F = 0`.
    pub estimate: EnergyBreakdown,
}

/// Builds the laminate and writes `phasefield.txt`, `rectangles.csv` and
/// `summary.json`.
pub fn build(cfg: &RunConfig) -> CliResult<BuildSummary> {
    let b = &cfg.build;
    let datum = b.datum();
    let spec = LaminateSpec::new(b.m, b.r, datum, b.n)?;
    let (field, state) = build_with(&spec, b.frames)?;
    let energy = total_energy(&field, &datum, b.eps)?;
    let split = state.first_order;
    let summary = BuildSummary {
        n: b.n,
        m: b.m,
        r: b.r,
        datum,
        eps: b.eps,
        frames: b.frames,
        first_order: FirstOrder {
            first: split.first,
            second: split.second,
            first_label: Label::of(split.first).to_string(),
            second_label: Label::of(split.second).to_string(),
            lambda: split.lambda,
            axis: split.axis,
        },
        energy,
        interface_edges: tartar::energy::interface_edges(&field),
        geometric_interface_edges: state.interface_edges(),
        active_volume: state.active_volume(),
        cutoff_volume: state.cutoff_volume(),
        estimate: analytic_energy_estimate(b.m, b.r, b.eps),
    };
    write_config(cfg)?;
    write_atomic(&cfg.out.join("phasefield.txt"), field.to_text().as_bytes())?;
    let mut rects = Vec::new();
    let csv_path = cfg.out.join("rectangles.csv");
    state.write_csv(&mut rects).map_err(CliError::io(&csv_path))?;
    write_atomic(&csv_path, &rects)?;
    write_json(&cfg.out.join("summary.json"), &summary)?;
    Ok(summary)
}

pub fn read_field(path: &Path) -> CliResult<PhaseField> {
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    Ok(PhaseField::from_text(&text)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergySummary {
    pub field: PathBuf,
    pub n: usize,
    pub datum: DiagMatrix,
    pub eps: f64,
    pub energy: EnergyBreakdown,
}

/// Evaluates a dumped phase field; writes `energy.json`.
pub fn energy(cfg: &RunConfig) -> CliResult<EnergySummary> {
    let path = cfg
        .energy
        .field
        .clone()
        .unwrap_or_else(|| cfg.out.join("phasefield.txt"));
    let field = read_field(&path)?;
    let datum = cfg
        .energy
        .f
        .map(|[a, b]| DiagMatrix::new(a, b))
        .unwrap_or_else(|| field.mean_matrix());
    let summary = EnergySummary {
        n: field.grid().n(),
        energy: total_energy(&field, &datum, cfg.energy.eps)?,
        field: path,
        datum,
        eps: cfg.energy.eps,
    };
    write_config(cfg)?;
    write_json(&cfg.out.join("energy.json"), &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitSummary {
    #[serde(flatten)]
    pub fit: Fit,
    pub n_points: usize,
    /// Power-law slope over `eps` in `[2^-60, 2^-40]`, when covered.
    pub tail_power_slope: Option<f64>,
}

fn summarize_fit(points: &[(f64, f64)]) -> CliResult<FitSummary> {
    let fit = fit_points(points)?;
    let recs: Vec<SweepRecord> = points
        .iter()
        .map(|&(eps, e)| SweepRecord { eps, m_opt: 0, r_opt: 0.0, e_surrogate: e, e_grid: None, n_grid: None })
        .collect();
    let tail = windowed_power_slope(&recs, 0.5f64.powi(60), 0.5f64.powi(40)).ok();
    Ok(FitSummary {
        fit,
        n_points: points.len(),
        tail_power_slope: tail,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub records: usize,
    pub validated: usize,
    pub grid_ratio_min: Option<f64>,
    pub grid_ratio_max: Option<f64>,
    /// True if any optimum sits on the edge of the search box.
    pub binding: bool,
    pub synthetic_c: Option<f64>,
    pub fit: FitSummary,
}

pub const SWEEP_HEADER: [&str; 6] = ["eps", "m_opt", "r_opt", "E_surrogate", "E_grid", "n_grid"];

/// Optimizes every `eps`, validates on grids where feasible, fits, and
/// writes `sweep.csv`, `fit.json`, `sweep.json` and `sweep.svg`.
pub fn sweep(cfg: &RunConfig) -> CliResult<SweepSummary> {
    let s = &cfg.sweep;
    let eps = s.eps_list();
    if eps.len() < 8 {
        return Err(Error::InsufficientData { need: 8, got: eps.len() }.into());
    }
    let n_cap = (s.n_cap > 0 && s.synthetic_c.is_none()).then_some(s.n_cap);
    let mut records = run_sweep(&eps, n_cap)?;
    if let Some(c) = s.synthetic_c {
        for r in &mut records {
            r.e_surrogate = (-c * (-r.eps.ln()).sqrt()).exp();
        }
    }
    let points: Vec<(f64, f64)> = records.iter().map(|r| (r.eps, r.e_surrogate)).collect();
    let fit = summarize_fit(&points)?;
    let ratios: Vec<f64> = records
        .iter()
        .filter_map(|r| r.e_grid.map(|g| g / r.e_surrogate))
        .collect();
    let summary = SweepSummary {
        records: records.len(),
        validated: ratios.len(),
        grid_ratio_min: ratios.iter().copied().reduce(f64::min),
        grid_ratio_max: ratios.iter().copied().reduce(f64::max),
        binding: records.iter().any(|r| r.m_opt == M_CAP || r.r_opt == 0.5f64.powi(P_MAX as i32)),
        synthetic_c: s.synthetic_c,
        fit,
    };

    let rows: Vec<Vec<String>> = records
        .iter()
        .map(|r| {
            vec![
                num(r.eps),
                r.m_opt.to_string(),
                num(r.r_opt),
                num(r.e_surrogate),
                opt_num(r.e_grid),
                r.n_grid.map(|n| n.to_string()).unwrap_or_default(),
            ]
        })
        .collect();

    let root_log = |e: f64| (-e.ln()).sqrt();
    let mut series = vec![Series {
        name: if s.synthetic_c.is_some() { "synthetic".into() } else { "E*".into() },
        points: records.iter().map(|r| (root_log(r.eps), r.e_surrogate.ln())).collect(),
        emphasis: true,
    }];
    if s.synthetic_c.is_none() {
        let env = fixed_order_envelope(&s.envelope_orders, &eps)?;
        for (i, &m) in s.envelope_orders.iter().enumerate() {
            let chunk = &env[i * eps.len()..(i + 1) * eps.len()];
            series.push(Series {
                name: format!("m={m}"),
                points: chunk.iter().map(|p| (root_log(p.eps), p.energy.ln())).collect(),
                emphasis: false,
            });
        }
    }

    write_config(cfg)?;
    write_csv(&cfg.out.join("sweep.csv"), &SWEEP_HEADER, &rows)?;
    write_json(&cfg.out.join("fit.json"), &summary.fit)?;
    write_json(&cfg.out.join("sweep.json"), &summary)?;
    let svg = line_plot(&series, "|ln eps|^(1/2)", "ln E");
    write_atomic(&cfg.out.join("sweep.svg"), svg.as_bytes())?;
    Ok(summary)
}

/// Fits a column of an existing sweep CSV; writes `fit.json`.
pub fn fit(cfg: &RunConfig) -> CliResult<FitSummary> {
    let path = cfg.fit.input.clone().unwrap_or_else(|| cfg.out.join("sweep.csv"));
    let mut reader = csv::Reader::from_path(&path)?;
    let headers = reader.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Config(format!("{}: no column `{name}`", path.display())))
    };
    let (eps_col, e_col) = (find("eps")?, find(&cfg.fit.column)?);
    let mut points = Vec::new();
    for row in reader.records() {
        let row = row?;
        let cell = |i: usize| row.get(i).unwrap_or("").trim().to_string();
        let (eps, e) = (cell(eps_col), cell(e_col));
        if eps.is_empty() || e.is_empty() {
            continue;
        }
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::Parse(format!("{}: `{s}` is not a number", path.display())))
        };
        points.push((parse(&eps)?, parse(&e)?));
    }
    let summary = summarize_fit(&points)?;
    write_config(cfg)?;
    write_json(&cfg.out.join("fit.json"), &summary)?;
    Ok(summary)
}

pub const BOOTSTRAP_HEADER: [&str; 10] = [
    "m", "m_e", "m_o", "mu_me", "mu_mo", "residual_f1", "residual_f2", "bound", "ln_bound",
    "amplification_ok",
];

fn step_row(s: &BootstrapStep) -> Vec<String> {
    vec![
        s.m.to_string(),
        s.m_e.to_string(),
        s.m_o.to_string(),
        num(s.mu_me),
        num(s.mu_mo),
        num(s.residual_f1),
        num(s.residual_f2),
        num(s.bound),
        num(s.ln_bound),
        s.amplification_ok.to_string(),
    ]
}

/// Runs the cone chain on a dumped field or an inline laminate; writes
/// `bootstrap.jsonl` (one step per line), `bootstrap.csv` and
/// `bootstrap.json`.
pub fn bootstrap_cmd(cfg: &RunConfig) -> CliResult<BootstrapReport> {
    let b = &cfg.bootstrap;
    let field = match (&b.field, &b.laminate) {
        (Some(path), _) => read_field(path)?,
        (None, Some(l)) => {
            let spec = LaminateSpec::new(l.m, l.r, DiagMatrix::ZERO, l.n)?;
            build_with(&spec, FrameLabel::Parent)?.0
        }
        (None, None) => {
            return Err(CliError::MissingInput(
                "bootstrap needs `bootstrap.field` or `bootstrap.laminate`".into(),
            ))
        }
    };
    let report = bootstrap(&field, &b.params()?)?;
    write_config(cfg)?;
    write_jsonl(&cfg.out.join("bootstrap.jsonl"), &report.steps)?;
    let rows: Vec<Vec<String>> = report.steps.iter().map(step_row).collect();
    write_csv(&cfg.out.join("bootstrap.csv"), &BOOTSTRAP_HEADER, &rows)?;
    write_json(&cfg.out.join("bootstrap.json"), &report)?;
    Ok(report)
}

/// Runs every property suite and writes `verify.json`. Fails after
/// writing when any property fails.
pub fn verify_cmd(cfg: &RunConfig) -> CliResult<VerifyReport> {
    let report = verify::run(&cfg.verify, cfg.seed)?;
    write_config(cfg)?;
    write_json(&cfg.out.join("verify.json"), &report)?;
    match report.failed() {
        0 => Ok(report),
        failed => Err(CliError::VerifyFailed {
            failed,
            total: report.properties.len(),
        }),
    }
}
