//! `ofc`: simulate trajectory pairs, predict and solve alignment costs, sweep
//! every pair and benchmark across trajectory lengths.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ofc_core::bench::{
    bench, bench_csv, evaluate_pair, sweep, Mode, RunConfig, GRID_HEADER, SUMMARY_HEADER,
};
use ofc_core::error::Error;
use ofc_core::trajectory::{read_trajectory, write_trajectory, AlignmentPair, Trajectory};

#[derive(Parser)]
#[command(name = "ofc", version, about = "Trajectory alignment cost prediction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a simulated trajectory pair and its noise-free version to a directory.
    Simulate(Common),
    /// Predict the alignment cost of one pose pair.
    Predict(PairArgs),
    /// Solve the alignment of one pose pair.
    Solve(PairArgs),
    /// Evaluate every pose pair and write the grid.
    Sweep(SweepArgs),
    /// Full sweeps at several trajectory lengths with timing and error statistics.
    Bench(BenchArgs),
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; flags given on the command line take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Poses per simulated trajectory.
    #[arg(long)]
    poses: Option<usize>,
    #[arg(long)]
    trans_noise: Option<f64>,
    #[arg(long)]
    rot_noise: Option<f64>,
    #[arg(long)]
    max_turn: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output path: a directory for `simulate`, a CSV file otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
    /// Leave timing columns empty so output is reproducible byte for byte.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args)]
struct Inputs {
    /// Trajectory files to use instead of simulating; both must be given.
    #[arg(long, requires = "traj_b")]
    traj_a: Option<PathBuf>,
    #[arg(long, requires = "traj_a")]
    traj_b: Option<PathBuf>,
}

#[derive(Args)]
struct PairArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    inputs: Inputs,
    /// 1-based pose indices `l,r` into A and B.
    #[arg(long, value_parser = parse_pair)]
    pair: AlignmentPair,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated trajectory lengths.
    #[arg(long, value_delimiter = ',', required = true)]
    lengths: Vec<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Predict,
    Solve,
    Both,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Predict => Mode::Predict,
            ModeArg::Solve => Mode::Solve,
            ModeArg::Both => Mode::Both,
        }
    }
}

fn parse_pair(s: &str) -> Result<AlignmentPair, String> {
    let (l, r) = s
        .split_once(',')
        .ok_or_else(|| format!("expected `l,r`, got {s:?}"))?;
    let index = |v: &str| {
        v.trim()
            .parse::<usize>()
            .map_err(|e| format!("bad index {v:?}: {e}"))
    };
    Ok(AlignmentPair::new(index(l)?, index(r)?))
}

impl Common {
    fn resolve(&self) -> Result<RunConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
                serde_json::from_str(&text).map_err(|e| Error::Parse {
                    line: e.line(),
                    msg: format!("{}: {e}", path.display()),
                })?
            }
            None => RunConfig::default(),
        };
        if let Some(v) = self.poses {
            cfg.n_poses = v;
        }
        if let Some(v) = self.trans_noise {
            cfg.trans_noise_std = v;
        }
        if let Some(v) = self.rot_noise {
            cfg.rot_noise_std = v;
        }
        if let Some(v) = self.max_turn {
            cfg.max_turn = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = &self.out {
            cfg.out = Some(v.clone());
        }
        if let Some(v) = self.jobs {
            cfg.jobs = Some(v);
        }
        if self.no_timing {
            cfg.timing = false;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl Inputs {
    fn load(&self, cfg: &RunConfig) -> Result<(Trajectory, Trajectory), Error> {
        match (&self.traj_a, &self.traj_b) {
            (Some(a), Some(b)) => Ok((read_trajectory(a)?, read_trajectory(b)?)),
            _ => {
                let sim = cfg.simulate()?;
                Ok((sim.a, sim.b))
            }
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Error> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run_pair(args: &PairArgs, mode: Mode) -> Result<(), Error> {
    let cfg = args.common.resolve()?;
    let (a, b) = args.inputs.load(&cfg)?;
    let row = evaluate_pair(&a, &b, args.pair, mode, cfg.timing);
    if let Some(e) = row.error {
        return Err(e);
    }
    emit(cfg.out.as_deref(), &format!("{GRID_HEADER}\n{}\n", row.to_csv()))
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Simulate(common) => {
            let cfg = common.resolve()?;
            let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("."));
            fs::create_dir_all(&dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
            let sim = cfg.simulate()?;
            for (name, t) in [
                ("a.csv", &sim.a),
                ("b.csv", &sim.b),
                ("a_true.csv", &sim.a_true),
                ("b_true.csv", &sim.b_true),
            ] {
                write_trajectory(&dir.join(name), t)?;
            }
            Ok(())
        }
        Command::Predict(args) => run_pair(&args, Mode::Predict),
        Command::Solve(args) => run_pair(&args, Mode::Solve),
        Command::Sweep(args) => {
            let mut cfg = args.common.resolve()?;
            if let Some(m) = args.mode {
                cfg.mode = m.into();
            }
            let (a, b) = args.inputs.load(&cfg)?;
            let s = sweep(&a, &b, cfg.mode, cfg.jobs, cfg.timing)?;
            let summary = format!("{SUMMARY_HEADER}\n{}\n", s.summary.to_csv(cfg.timing));
            emit(cfg.out.as_deref(), &s.grid_csv())?;
            if cfg.out.is_some() {
                print!("{summary}");
            } else {
                eprint!("{summary}");
            }
            Ok(())
        }
        Command::Bench(args) => {
            let cfg = args.common.resolve()?;
            let rows = bench(&args.lengths, &cfg)?;
            emit(cfg.out.as_deref(), &bench_csv(&rows, cfg.timing))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("error,invalid_argument,{first}");
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error,{},{}", e.kind(), e.to_string().replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}
