//! Sweeps over all alignment pairs and the per-length benchmark table.
//!
//! Every pair is evaluated independently, so sweeps run on a rayon pool of the
//! configured size while rows come back in `(l, r)` order. Timings are
//! wall-clock around the prediction and the solve alone, summed per pair.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::csv::format_value;
use crate::nlpredict::{solve_nl_best_effort, SolverOptions};
use crate::trajectory::{
    alignment_problem, predict_alignment_cost, relative_error, simulate_pair, AlignmentPair,
    SimConfig, SimulatedPair, Trajectory,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Predict,
    Solve,
    #[default]
    Both,
}

impl Mode {
    fn predicts(self) -> bool {
        matches!(self, Mode::Predict | Mode::Both)
    }

    fn solves(self) -> bool {
        matches!(self, Mode::Solve | Mode::Both)
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "predict" => Ok(Mode::Predict),
            "solve" => Ok(Mode::Solve),
            "both" => Ok(Mode::Both),
            other => Err(Error::InvalidArgument(format!(
                "mode must be predict, solve or both, got {other:?}"
            ))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Predict => "predict",
            Mode::Solve => "solve",
            Mode::Both => "both",
        })
    }
}

/// Everything that determines a run. Missing JSON fields take the defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub n_poses: usize,
    pub trans_noise_std: f64,
    pub rot_noise_std: f64,
    pub seed: u64,
    pub mode: Mode,
    pub out: Option<std::path::PathBuf>,
    /// Worker threads for sweeps; `None` uses every available core.
    pub jobs: Option<usize>,
    /// When false, timing columns are left empty so outputs are byte-identical
    /// across runs.
    pub timing: bool,
    pub max_turn: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let sim = SimConfig::default();
        Self {
            n_poses: sim.n_poses,
            trans_noise_std: sim.trans_noise_std,
            rot_noise_std: sim.rot_noise_std,
            seed: sim.seed,
            mode: Mode::Both,
            out: None,
            jobs: None,
            timing: true,
            max_turn: sim.max_turn,
        }
    }
}

impl RunConfig {
    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            n_poses: self.n_poses,
            trans_noise_std: self.trans_noise_std,
            rot_noise_std: self.rot_noise_std,
            seed: self.seed,
            max_turn: self.max_turn,
            ..SimConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.sim_config().validate()?;
        if self.jobs == Some(0) {
            return Err(Error::InvalidArgument("jobs must be at least 1".into()));
        }
        Ok(())
    }

    pub fn simulate(&self) -> Result<SimulatedPair> {
        self.validate()?;
        simulate_pair(&self.sim_config())
    }
}

/// One `(l, r)` entry of a sweep. Fields a mode does not compute stay `None`;
/// a failed pair carries its error and nothing else.
#[derive(Debug, Clone, PartialEq)]
pub struct GridRow {
    pub pair: AlignmentPair,
    pub delta_f: Option<f64>,
    pub f_real: Option<f64>,
    pub rel_error: Option<f64>,
    pub t_predict: Option<f64>,
    pub t_solve: Option<f64>,
    pub converged: Option<bool>,
    pub error: Option<Error>,
}

impl GridRow {
    fn empty(pair: AlignmentPair) -> Self {
        Self {
            pair,
            delta_f: None,
            f_real: None,
            rel_error: None,
            t_predict: None,
            t_solve: None,
            converged: None,
            error: None,
        }
    }
}

pub const GRID_HEADER: &str = "l,r,delta_f,f_real,rel_error,t_predict,t_solve,converged,error";

fn opt_value(v: Option<f64>) -> String {
    v.map(format_value).unwrap_or_default()
}

fn opt_seconds(v: Option<f64>) -> String {
    v.map(|s| format!("{s:.6}")).unwrap_or_default()
}

impl GridRow {
    pub fn to_csv(&self) -> String {
        let error = self
            .error
            .as_ref()
            .map(|e| format!("{}: {}", e.kind(), e).replace([',', '\n'], ";"))
            .unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.pair.l,
            self.pair.r,
            opt_value(self.delta_f),
            opt_value(self.f_real),
            opt_value(self.rel_error),
            opt_seconds(self.t_predict),
            opt_seconds(self.t_solve),
            self.converged.map(|c| c.to_string()).unwrap_or_default(),
            error
        )
    }
}

/// Evaluates one pair in the given mode. Errors are stored in the row.
pub fn evaluate_pair(
    a: &Trajectory,
    b: &Trajectory,
    pair: AlignmentPair,
    mode: Mode,
    timing: bool,
) -> GridRow {
    let mut row = GridRow::empty(pair);
    let result = (|| -> Result<()> {
        if mode.predicts() {
            let start = Instant::now();
            let df = predict_alignment_cost(a, b, pair)?;
            let elapsed = start.elapsed().as_secs_f64();
            row.delta_f = Some(df);
            row.t_predict = timing.then_some(elapsed);
        }
        if mode.solves() {
            let start = Instant::now();
            let problem = alignment_problem(a, b, pair)?;
            let sol = solve_nl_best_effort(&problem, problem.x_tilde(), &SolverOptions::default())?;
            let elapsed = start.elapsed().as_secs_f64();
            row.f_real = Some(sol.f_star);
            row.converged = Some(sol.diagnostics.converged);
            row.t_solve = timing.then_some(elapsed);
        }
        if let (Some(df), Some(f)) = (row.delta_f, row.f_real) {
            row.rel_error = Some(relative_error(df, f));
        }
        Ok(())
    })();
    if let Err(e) = result {
        row = GridRow::empty(pair);
        row.error = Some(e);
    }
    row
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SweepSummary {
    pub pairs: usize,
    pub failures: usize,
    pub not_converged: usize,
    pub max_rel_error: Option<f64>,
    pub median_rel_error: Option<f64>,
    pub total_predict: f64,
    pub total_solve: f64,
}

pub const SUMMARY_HEADER: &str =
    "pairs,failures,not_converged,max_rel_error,median_rel_error,total_predict,total_solve";

impl SweepSummary {
    pub fn to_csv(&self, timing: bool) -> String {
        let seconds = |v: f64| if timing { format!("{v:.6}") } else { String::new() };
        format!(
            "{},{},{},{},{},{},{}",
            self.pairs,
            self.failures,
            self.not_converged,
            opt_value(self.max_rel_error),
            opt_value(self.median_rel_error),
            seconds(self.total_predict),
            seconds(self.total_solve)
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub rows: Vec<GridRow>,
    pub summary: SweepSummary,
}

impl Sweep {
    /// Relative errors of the rows that have one, in row order.
    pub fn rel_errors(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.rel_error).collect()
    }

    pub fn grid_csv(&self) -> String {
        let mut out = String::from(GRID_HEADER);
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.to_csv());
            out.push('\n');
        }
        out
    }
}

fn with_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        None => Ok(f()),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}"))),
    }
}

/// Evaluates every `(l, r)` pair, `l` over A's poses and `r` over B's.
pub fn sweep(
    a: &Trajectory,
    b: &Trajectory,
    mode: Mode,
    jobs: Option<usize>,
    timing: bool,
) -> Result<Sweep> {
    let pairs: Vec<AlignmentPair> = (1..=a.num_poses())
        .flat_map(|l| (1..=b.num_poses()).map(move |r| AlignmentPair::new(l, r)))
        .collect();
    let rows: Vec<GridRow> = with_pool(jobs, || {
        pairs
            .par_iter()
            .map(|&pair| evaluate_pair(a, b, pair, mode, timing))
            .collect()
    })?;
    let mut errors: Vec<f64> = rows.iter().filter_map(|r| r.rel_error).collect();
    errors.sort_by(f64::total_cmp);
    let summary = SweepSummary {
        pairs: rows.len(),
        failures: rows.iter().filter(|r| r.error.is_some()).count(),
        not_converged: rows.iter().filter(|r| r.converged == Some(false)).count(),
        max_rel_error: errors.last().copied(),
        median_rel_error: (!errors.is_empty()).then(|| quantile(&errors, 0.5)),
        total_predict: rows.iter().filter_map(|r| r.t_predict).sum(),
        total_solve: rows.iter().filter_map(|r| r.t_solve).sum(),
    };
    Ok(Sweep { rows, summary })
}

/// Linear-interpolation quantile of sorted, non-empty data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Five-number summary plus tail statistics of a relative-error sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorDistribution {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub p95: f64,
    pub max: f64,
    /// Points above `q3 + 1.5·IQR`.
    pub outliers: usize,
}

impl ErrorDistribution {
    pub fn from_samples(samples: &[f64]) -> Option<Self> {
        if samples.is_empty() {
            return None;
        }
        let mut s = samples.to_vec();
        s.sort_by(f64::total_cmp);
        let q1 = quantile(&s, 0.25);
        let q3 = quantile(&s, 0.75);
        let fence = q3 + 1.5 * (q3 - q1);
        Some(Self {
            min: s[0],
            q1,
            median: quantile(&s, 0.5),
            q3,
            p95: quantile(&s, 0.95),
            max: *s.last().unwrap(),
            outliers: s.iter().filter(|&&v| v > fence).count(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub n_poses: usize,
    pub summary: SweepSummary,
    pub errors: Option<ErrorDistribution>,
}

impl BenchRow {
    pub fn avg_predict(&self) -> f64 {
        self.summary.total_predict / self.summary.pairs.max(1) as f64
    }

    pub fn avg_solve(&self) -> f64 {
        self.summary.total_solve / self.summary.pairs.max(1) as f64
    }

    /// Solve time over prediction time.
    pub fn speedup(&self) -> f64 {
        self.summary.total_solve / self.summary.total_predict
    }
}

pub const BENCH_HEADER: &str = "n_poses,pairs,failures,not_converged,total_predict,total_solve,\
avg_predict,avg_solve,speedup,rel_min,rel_q1,rel_median,rel_q3,rel_p95,rel_max,rel_outliers";

impl BenchRow {
    pub fn to_csv(&self, timing: bool) -> String {
        let seconds = |v: f64| if timing { format!("{v:.6}") } else { String::new() };
        let ratio = if timing { format!("{:.3}", self.speedup()) } else { String::new() };
        let dist = match &self.errors {
            Some(d) => format!(
                "{},{},{},{},{},{},{}",
                format_value(d.min),
                format_value(d.q1),
                format_value(d.median),
                format_value(d.q3),
                format_value(d.p95),
                format_value(d.max),
                d.outliers
            ),
            None => ",,,,,,".into(),
        };
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.n_poses,
            self.summary.pairs,
            self.summary.failures,
            self.summary.not_converged,
            seconds(self.summary.total_predict),
            seconds(self.summary.total_solve),
            seconds(self.avg_predict()),
            seconds(self.avg_solve()),
            ratio,
            dist
        )
    }
}

/// Full sweeps in both modes for each trajectory length, simulated from `base`
/// with only the length changed.
pub fn bench(lengths: &[usize], base: &RunConfig) -> Result<Vec<BenchRow>> {
    if lengths.is_empty() {
        return Err(Error::InvalidArgument(
            "bench needs at least one trajectory length, e.g. --lengths 20,50".into(),
        ));
    }
    lengths
        .iter()
        .map(|&n| {
            let cfg = RunConfig {
                n_poses: n,
                ..base.clone()
            };
            let sim = cfg.simulate()?;
            let s = sweep(&sim.a, &sim.b, Mode::Both, cfg.jobs, cfg.timing)?;
            Ok(BenchRow {
                n_poses: n,
                errors: ErrorDistribution::from_samples(&s.rel_errors()),
                summary: s.summary,
            })
        })
        .collect()
}

pub fn bench_csv(rows: &[BenchRow], timing: bool) -> String {
    let mut out = String::from(BENCH_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.to_csv(timing));
        out.push('\n');
    }
    out
}
