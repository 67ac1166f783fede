use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use ordered_kmedian::format::{read_instance, write_instance};
use ordered_kmedian::gen::{generate, MetricKind, WeightShape};
use ordered_kmedian::instance::rectangular_weights;
use ordered_kmedian::oracle::{brute_force_opt, DEFAULT_ORACLE_BUDGET};
use ordered_kmedian::reductions::DEFAULT_ENUMERATION_CAP;
use ordered_kmedian::rounding::ClusteringMode;
use ordered_kmedian::solvers::{empirical_stats, prepare, SolverConfig, Variant};
use ordered_kmedian::{Error, Instance};

#[derive(Parser)]
#[command(name = "okm", version, about = "Ordered k-median LP rounding")]
struct Cli {
    /// -v for per-guess logs, -vv for every rounding step
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a random instance
    Gen(GenArgs),
    /// Parse an instance and check the metric
    Validate { path: PathBuf },
    /// Run one of the rounding algorithms
    Solve(SolveArgs),
    /// Exact optimum by enumeration
    Oracle {
        path: PathBuf,
        /// Optimize the sum of the ell largest costs instead
        #[arg(long)]
        ell: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_ORACLE_BUDGET)]
        budget: u64,
    },
    /// Compare a variant with the oracle on every instance in a directory
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Euclidean,
    RandomMetric,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    /// rect:<ell>, geom:<ratio> or file:<path>
    #[arg(long, default_value = "geom:0.5")]
    weights: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Rect,
    Multi,
    Bucketed,
    Poly,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Dedicated,
    Oblivious,
}

#[derive(Args, Clone)]
struct VariantArgs {
    #[arg(long, value_enum)]
    variant: VariantArg,
    /// Rectangle width for --variant rect (default: read off the weights)
    #[arg(long)]
    ell: Option<usize>,
    #[arg(long)]
    eps: Option<f64>,
    /// Clustering for --variant rect
    #[arg(long, value_enum, default_value = "dedicated")]
    mode: ModeArg,
    #[arg(long, default_value_t = 16)]
    seeds_per_guess: usize,
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    cap: u64,
}

#[derive(Args)]
struct SolveArgs {
    path: PathBuf,
    #[command(flatten)]
    variant: VariantArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Independent master seeds; statistics are added when above 1
    #[arg(long, default_value_t = 1)]
    trials: usize,
    /// JSON report file
    #[arg(long)]
    report: Option<PathBuf>,
    /// Directory receiving every distinct LP
    #[arg(long)]
    lp_dump: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    dir: PathBuf,
    #[command(flatten)]
    variant: VariantArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(long, default_value_t = DEFAULT_ORACLE_BUDGET)]
    budget: u64,
    /// JSON table (default: bench.json in the corpus directory)
    #[arg(long)]
    report: Option<PathBuf>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Infeasible | Error::CapExceeded { .. } => 3,
        Error::Io(_)
        | Error::Parse { .. }
        | Error::InvalidInstance(_)
        | Error::NonMetric(_)
        | Error::IndexOutOfRange { .. }
        | Error::WrongSolutionSize { .. }
        | Error::ShapeMismatch { .. } => 4,
        Error::InvalidArgument(_) | Error::WidthOutOfRange { .. } => 2,
        Error::Solver(_) | Error::Consistency(_) => 1,
    }
}

fn parse_shape(s: &str) -> Result<WeightShape, Error> {
    let bad = || Error::InvalidArgument(format!("weight shape `{s}` is not rect:<ell>, geom:<ratio> or file:<path>"));
    let (kind, arg) = s.split_once(':').ok_or_else(bad)?;
    match kind {
        "rect" => Ok(WeightShape::Rect(arg.parse().map_err(|_| bad())?)),
        "geom" => Ok(WeightShape::Geom(arg.parse().map_err(|_| bad())?)),
        "file" => WeightShape::read_custom(Path::new(arg)),
        _ => Err(bad()),
    }
}

fn config(args: &VariantArgs, inst: &Instance) -> Result<SolverConfig, Error> {
    let need_eps = || {
        args.eps
            .ok_or_else(|| Error::InvalidArgument("this variant needs --eps".into()))
    };
    let variant = match args.variant {
        VariantArg::Rect => {
            let ell = match args.ell {
                Some(l) => l,
                None => inst.rectangle_width().ok_or_else(|| {
                    Error::InvalidArgument("weights are not rectangular; pass --ell".into())
                })?,
            };
            let mode = match args.mode {
                ModeArg::Dedicated => ClusteringMode::Dedicated { threshold: 0.0 },
                ModeArg::Oblivious => ClusteringMode::Oblivious,
            };
            Variant::Rectangular { ell, mode }
        }
        VariantArg::Multi => Variant::MultiRect,
        VariantArg::Bucketed => Variant::BucketedQuasipoly { eps: need_eps()? },
        VariantArg::Poly => Variant::Poly { eps: need_eps()? },
    };
    let mut cfg = SolverConfig::new(variant).with_seeds(args.seeds_per_guess);
    cfg.cap = args.cap;
    Ok(cfg)
}

#[derive(Serialize)]
struct TrialSummary {
    trials: usize,
    mean: f64,
    min: f64,
    max: f64,
}

fn cmd_gen(a: GenArgs) -> Result<(), Error> {
    let kind = match a.kind {
        Kind::Euclidean => MetricKind::Euclidean,
        Kind::RandomMetric => MetricKind::RandomMetric,
    };
    let inst = generate(kind, a.m, a.n, a.k, &parse_shape(&a.weights)?, a.seed)?;
    write_instance(&a.out, &inst)?;
    println!("wrote {}", a.out.display());
    Ok(())
}

fn cmd_validate(path: &Path) -> Result<(), Error> {
    let inst = read_instance(path)?;
    println!("ok m {} n {} k {} metric {}", inst.m(), inst.n(), inst.k(), inst.is_metric());
    Ok(())
}

fn cmd_solve(a: SolveArgs) -> Result<(), Error> {
    let inst = read_instance(&a.path)?;
    let mut cfg = config(&a.variant, &inst)?;
    cfg.lp_dump = a.lp_dump.clone();
    if a.trials == 0 {
        return Err(Error::InvalidArgument("--trials must be at least 1".into()));
    }
    let run = prepare(&inst, &cfg)?;
    let report = run.run(a.seed)?;
    print!("{}", report.to_text());
    let mut json = serde_json::to_value(&report).expect("report serializes");
    if a.trials > 1 {
        let mut costs = vec![report.best_cost];
        for t in 1..a.trials {
            costs.push(run.run(a.seed + t as u64)?.best_cost);
        }
        let s = TrialSummary {
            trials: a.trials,
            mean: costs.iter().sum::<f64>() / a.trials as f64,
            min: costs.iter().copied().fold(f64::INFINITY, f64::min),
            max: costs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        };
        println!("trials {}\nmean_cost {}\nmin_cost {}\nmax_cost {}", s.trials, s.mean, s.min, s.max);
        json["trials"] = serde_json::to_value(&s).expect("summary serializes");
    }
    if let Some(p) = &a.report {
        std::fs::write(p, serde_json::to_string_pretty(&json).expect("json"))?;
    }
    Ok(())
}

fn cmd_oracle(path: &Path, ell: Option<usize>, budget: u64) -> Result<(), Error> {
    let mut inst = read_instance(path)?;
    if let Some(l) = ell {
        if l == 0 || l > inst.n() {
            return Err(Error::WidthOutOfRange { ell: l, n: inst.n() });
        }
        inst = inst.with_weights(rectangular_weights(inst.n(), l))?;
    }
    let (sol, cost) = brute_force_opt(&inst, budget)?;
    println!("opt_cost {cost}\nopt_solution {sol}");
    Ok(())
}

#[derive(Serialize)]
struct BenchRow {
    instance: String,
    opt: f64,
    best: f64,
    mean: f64,
    ratio: f64,
    structure_violations: usize,
}

#[derive(Serialize)]
struct BenchTable {
    variant: String,
    trials: usize,
    rows: Vec<BenchRow>,
    failures: Vec<(String, String)>,
    max_ratio: f64,
}

fn cmd_bench(a: BenchArgs) -> Result<(), Error> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(&a.dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "txt" || x == "okm"))
        .collect();
    files.sort();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut variant = String::new();
    let mut out = String::new();
    let _ = writeln!(out, "{:<24} {:>12} {:>12} {:>12} {:>8}", "instance", "opt", "best", "mean", "ratio");
    for f in &files {
        let name = f.file_name().unwrap_or_default().to_string_lossy().into_owned();
        let row = read_instance(f).and_then(|inst| {
            let mut cfg = config(&a.variant, &inst)?;
            cfg.oracle_budget = a.budget;
            variant = cfg.variant.name();
            empirical_stats(&inst, &cfg, a.trials, a.seed, None)
        });
        match row {
            Ok(s) => {
                let _ = writeln!(out, "{:<24} {:>12.6} {:>12.6} {:>12.6} {:>8.4}", name, s.opt, s.min, s.mean, s.mean_ratio);
                rows.push(BenchRow {
                    instance: name,
                    opt: s.opt,
                    best: s.min,
                    mean: s.mean,
                    ratio: s.mean_ratio,
                    structure_violations: s.structure.total(),
                });
            }
            Err(e) => {
                let _ = writeln!(out, "{name:<24} failed: {e}");
                failures.push((name, e.to_string()));
            }
        }
    }
    let max_ratio = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let _ = writeln!(out, "{:<24} {:>51.4}", format!("max over {}", rows.len()), max_ratio);
    print!("{out}");
    let table = BenchTable {
        variant,
        trials: a.trials,
        rows,
        failures,
        max_ratio,
    };
    let path = a.report.unwrap_or_else(|| a.dir.join("bench.json"));
    std::fs::write(path, serde_json::to_string_pretty(&table).expect("json"))?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Validate { path } => cmd_validate(&path),
        Command::Solve(a) => cmd_solve(a),
        Command::Oracle { path, ell, budget } => cmd_oracle(&path, ell, budget),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
