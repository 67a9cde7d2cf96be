use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::ValueEnum;
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::report::Report;
use crate::ddp::{check_gain_readings, solve_ddp, DdpOptions};
use crate::error::{Error, Result};
use crate::model::{linearize, ChainCartParams, EquilibriumConfig, LinearModel};
use crate::sim::{difference_experiment, simulate_linear, DifferenceSeries, Trajectory};

/// Shortest decimal that parses back to the same `f64`; exponent form for
/// very small or very large magnitudes.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn create_dir(out: &Path) -> Result<()> {
    fs::create_dir_all(out).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("cannot create {}: {e}", out.display()),
        ))
    })
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    let file = fs::File::create(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("cannot write {}: {e}", path.display()),
        ))
    })?;
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(file))
}

pub fn write_matrix_csv(path: &Path, header: &[String], m: &DMatrix<f64>) -> Result<()> {
    if header.len() != m.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "{} header names for {} columns",
            header.len(),
            m.ncols()
        )));
    }
    let mut w = csv_writer(path)?;
    w.write_record(header)?;
    for row in m.row_iter() {
        w.write_record(row.iter().map(|&x| fmt_f64(x)))?;
    }
    w.flush()?;
    Ok(())
}

fn pair(prefix: &str) -> Vec<String> {
    vec![format!("{prefix}.x"), format!("{prefix}.y")]
}

fn model_of(cfg: &RunConfig) -> Result<LinearModel> {
    linearize(&cfg.params, cfg.equilibrium())
}

/// Writes `A.csv`, `B.csv`, `E.csv`, `H.csv` and `layout.csv` into `out`.
pub fn cmd_linearize(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let model = model_of(cfg)?;
    create_dir(out)?;
    let states = model.layout.column_names();
    let files = [
        ("A.csv", &model.a, states.clone()),
        ("B.csv", &model.b, pair("u")),
        ("E.csv", &model.e, pair("w")),
        ("H.csv", &model.h, states),
    ];
    let mut written = Vec::new();
    for (name, m, header) in files {
        let path = out.join(name);
        write_matrix_csv(&path, &header, m)?;
        written.push(path);
    }
    let path = out.join("layout.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["index", "block", "component"])?;
    for (i, (block, k)) in model.layout.labels().into_iter().enumerate() {
        let comp = if k == 0 { "x" } else { "y" };
        w.write_record([i.to_string(), block, comp.to_string()])?;
    }
    w.flush()?;
    written.push(path);
    Ok(written)
}

/// Runs the solver and writes `report.json` into `out` when given.
pub fn cmd_solve(cfg: &RunConfig, out: Option<&Path>, timing: bool) -> Result<Report> {
    let start = Instant::now();
    let model = model_of(cfg)?;
    let sol = solve_ddp(&model, &cfg.ddp_options())?;
    let elapsed = start.elapsed().as_secs_f64();
    let mut report = Report::new(model.n, cfg.equilibrium().signs(), &sol);
    if model.n == 4 {
        report.block_gain_checks = check_gain_readings(&model, &sol.v_star)?;
    }
    if timing {
        report.wall_time_s = Some(elapsed);
    }
    if let Some(dir) = out {
        create_dir(dir)?;
        fs::write(dir.join("report.json"), report.to_json()? + "\n")?;
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feedback {
    Friend,
    None,
    Both,
}

/// Files and data produced by [`cmd_simulate`].
#[derive(Debug, Clone)]
pub struct SimulateOutput {
    pub trajectory: Trajectory,
    pub difference: Option<DifferenceSeries>,
    pub files: Vec<PathBuf>,
}

pub fn write_trajectory_csv(path: &Path, traj: &Trajectory, model: &LinearModel) -> Result<()> {
    let mut header = vec!["t".to_string()];
    header.extend(model.layout.column_names());
    header.extend(pair("y"));
    let mut w = csv_writer(path)?;
    w.write_record(&header)?;
    for k in 0..traj.len() {
        let mut rec = vec![fmt_f64(traj.times[k])];
        rec.extend(traj.states[k].iter().map(|&x| fmt_f64(x)));
        rec.extend(traj.outputs[k].iter().map(|&x| fmt_f64(x)));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_difference_csv(path: &Path, diff: &DifferenceSeries) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record([
        "t",
        "with_feedback.x",
        "with_feedback.y",
        "without_feedback.x",
        "without_feedback.y",
    ])?;
    for k in 0..diff.times.len() {
        let (a, b) = (diff.with_feedback[k], diff.without_feedback[k]);
        w.write_record([diff.times[k], a[0], a[1], b[0], b[1]].map(fmt_f64))?;
    }
    w.flush()?;
    Ok(())
}

/// Linear run from `x0 = 0` under the configured signal. Writes
/// `trajectory.csv` (with the friend unless `feedback` is `none`) and, for
/// `both`, `difference.csv`.
pub fn cmd_simulate(cfg: &RunConfig, feedback: Feedback, out: &Path) -> Result<SimulateOutput> {
    let model = model_of(cfg)?;
    let zero = DMatrix::zeros(model.b.ncols(), model.dim());
    let friend = if feedback == Feedback::None {
        zero
    } else {
        let sol = solve_ddp(&model, &cfg.ddp_options())?;
        if !sol.decouplable {
            return Err(Error::Precondition(format!(
                "no decoupling friend: containment residual {:e}, chain residual {:e}",
                sol.containment_residual, sol.chain_residual
            )));
        }
        sol.friend
    };
    let x0 = nalgebra::DVector::zeros(model.dim());
    let trajectory = simulate_linear(&model, &friend, &cfg.signal, &x0, cfg.t_end, cfg.dt)?;
    let difference = if feedback == Feedback::Both {
        Some(difference_experiment(&model, &friend, &cfg.signal, cfg.t_end, cfg.dt)?)
    } else {
        None
    };
    create_dir(out)?;
    let mut files = vec![out.join("trajectory.csv")];
    write_trajectory_csv(&files[0], &trajectory, &model)?;
    if let Some(d) = &difference {
        let path = out.join("difference.csv");
        write_difference_csv(&path, d)?;
        files.push(path);
    }
    Ok(SimulateOutput {
        trajectory,
        difference,
        files,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquilibriumKind {
    Hanging,
    Inverted,
    Alternating,
}

impl EquilibriumKind {
    pub fn build(self, n: usize) -> EquilibriumConfig {
        match self {
            EquilibriumKind::Hanging => EquilibriumConfig::hanging(n),
            EquilibriumKind::Inverted => EquilibriumConfig::inverted(n),
            EquilibriumKind::Alternating => EquilibriumConfig::alternating(n),
        }
    }

    pub fn all() -> [EquilibriumKind; 3] {
        [
            EquilibriumKind::Hanging,
            EquilibriumKind::Inverted,
            EquilibriumKind::Alternating,
        ]
    }
}

pub const SWEEP_MAX_N: usize = 12;

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub n_min: usize,
    pub n_max: usize,
    pub equilibria: Vec<EquilibriumKind>,
    /// Source of masses and lengths, truncated to each `n`; unit
    /// parameters when absent.
    pub params: Option<ChainCartParams>,
    pub options: DdpOptions,
    pub timing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub signs: String,
    pub decouplable: bool,
    pub dim_v_star: Option<usize>,
    pub iterations: Option<usize>,
    pub containment_residual: Option<f64>,
    pub invariance_residual: Option<f64>,
    pub chain_residual: Option<f64>,
    pub error: Option<String>,
    pub time_s: Option<f64>,
}

fn sweep_row(n: usize, eq: &EquilibriumConfig, spec: &SweepSpec) -> SweepRow {
    let start = Instant::now();
    let mut row = SweepRow {
        n,
        signs: eq.describe(),
        decouplable: false,
        dim_v_star: None,
        iterations: None,
        containment_residual: None,
        invariance_residual: None,
        chain_residual: None,
        error: None,
        time_s: None,
    };
    let params = match &spec.params {
        Some(p) => p.truncated(n),
        None => Ok(ChainCartParams::unit(n)),
    };
    let outcome = params
        .and_then(|p| linearize(&p, eq))
        .and_then(|m| solve_ddp(&m, &spec.options));
    match outcome {
        Ok(sol) => {
            row.decouplable = sol.decouplable;
            row.dim_v_star = Some(sol.v_star.dim());
            row.iterations = Some(sol.iterations);
            row.containment_residual = Some(sol.containment_residual);
            row.invariance_residual = Some(sol.invariance_residual);
            row.chain_residual = Some(sol.chain_residual);
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    if spec.timing {
        row.time_s = Some(start.elapsed().as_secs_f64());
    }
    row
}

/// One row per `(n, sign tuple)`, ordered by `n` then tuple; rows are
/// solved in parallel.
pub fn cmd_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    if !(1 <= spec.n_min && spec.n_min <= spec.n_max && spec.n_max <= SWEEP_MAX_N) {
        return Err(Error::Precondition(format!(
            "sweep range must satisfy 1 <= n_min <= n_max <= {SWEEP_MAX_N}, got {}..{}",
            spec.n_min, spec.n_max
        )));
    }
    if spec.equilibria.is_empty() {
        return Err(Error::Precondition("no equilibria selected".into()));
    }
    let mut cases: Vec<(usize, EquilibriumConfig)> = (spec.n_min..=spec.n_max)
        .flat_map(|n| spec.equilibria.iter().map(move |k| (n, k.build(n))))
        .collect();
    cases.sort();
    cases.dedup();
    Ok(cases
        .par_iter()
        .map(|(n, eq)| sweep_row(*n, eq, spec))
        .collect())
}

pub fn write_sweep_csv<W: std::io::Write>(out: W, rows: &[SweepRow], timing: bool) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(out);
    let mut header = vec![
        "n",
        "signs",
        "decouplable",
        "dim_v_star",
        "iterations",
        "containment_residual",
        "invariance_residual",
        "chain_residual",
        "error",
    ];
    if timing {
        header.push("time_s");
    }
    w.write_record(&header)?;
    let opt_f = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
    let opt_u = |x: Option<usize>| x.map(|v| v.to_string()).unwrap_or_default();
    for r in rows {
        let mut rec = vec![
            r.n.to_string(),
            r.signs.clone(),
            r.decouplable.to_string(),
            opt_u(r.dim_v_star),
            opt_u(r.iterations),
            opt_f(r.containment_residual),
            opt_f(r.invariance_residual),
            opt_f(r.chain_residual),
            r.error.clone().unwrap_or_default(),
        ];
        if timing {
            rec.push(opt_f(r.time_s));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
