//! Guess loops around LP solving and rounding for the four variants.
//!
//! Every variant first enumerates guesses (a reduced cost matrix, forbidden
//! pairs and a clustering mode), solves each distinct LP once and prepares a
//! [`RoundingPlan`]. A run then draws `seeds_per_guess` samples per guess and
//! keeps the cheapest solution under the original metric and weights.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::path::PathBuf;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::{Instance, SolutionSet};
use crate::lp::{build_lp, normalize, solve_lp, ForbiddenPairs, FractionalSolution};
use crate::oracle::{brute_force_opt, DEFAULT_ORACLE_BUDGET};
use crate::reductions::{
    bucket_weights, bucketed_cost, build_buckets, expand_guess, multi_rect_cost, threshold_candidates,
    threshold_cost, threshold_tuple_candidates, weight_guess_candidates, ReducedCostMatrix, WeightGrid,
    DEFAULT_ENUMERATION_CAP,
};
use crate::rounding::{trial_rng, ClusteringMode, RoundingPlan, StructureAudit};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Variant {
    Rectangular { ell: usize, mode: ClusteringMode },
    MultiRect,
    BucketedQuasipoly { eps: f64 },
    Poly { eps: f64 },
}

impl Variant {
    pub fn name(&self) -> String {
        match *self {
            Variant::Rectangular { ell, mode } => {
                let m = match mode {
                    ClusteringMode::Oblivious => "oblivious",
                    ClusteringMode::Dedicated { .. } => "dedicated",
                };
                format!("rect(ell={ell},{m})")
            }
            Variant::MultiRect => "multi".into(),
            Variant::BucketedQuasipoly { eps } => format!("bucketed(eps={eps})"),
            Variant::Poly { eps } => format!("poly(eps={eps})"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub variant: Variant,
    pub seeds_per_guess: usize,
    /// Bound on enumerated guesses (threshold tuples, weight vectors).
    pub cap: u64,
    pub oracle_budget: u64,
    /// Write every distinct LP here in LP text format.
    pub lp_dump: Option<PathBuf>,
}

impl SolverConfig {
    pub fn new(variant: Variant) -> Self {
        Self {
            variant,
            seeds_per_guess: 16,
            cap: DEFAULT_ENUMERATION_CAP,
            oracle_budget: DEFAULT_ORACLE_BUDGET,
            lp_dump: None,
        }
    }

    pub fn with_seeds(mut self, seeds: usize) -> Self {
        self.seeds_per_guess = seeds;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.seeds_per_guess == 0 {
            return Err(Error::InvalidArgument("seeds per guess must be at least 1".into()));
        }
        match self.variant {
            Variant::BucketedQuasipoly { eps } | Variant::Poly { eps } if !(eps > 0.0) => {
                Err(Error::InvalidArgument(format!("eps = {eps} must be positive")))
            }
            _ => Ok(()),
        }
    }
}

/// What a run minimizes on the original instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Objective {
    Rect(usize),
    Ordered,
}

impl Objective {
    fn eval(&self, inst: &Instance, open: &[usize]) -> f64 {
        match *self {
            Objective::Rect(ell) => inst.rect_cost_of(open, ell),
            Objective::Ordered => inst.ordered_cost_of(open, inst.weights()),
        }
    }
}

/// One enumerated guess before LP solving.
struct Guess {
    descriptor: String,
    reduced: ReducedCostMatrix,
    forbidden: ForbiddenPairs,
    mode: ClusteringMode,
}

#[derive(Debug, Clone)]
pub struct PreparedGuess {
    pub descriptor: String,
    pub lp_objective: f64,
    pub plan: RoundingPlan,
}

/// Enumeration counters of a prepared variant.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct GuessStats {
    pub enumerated: usize,
    pub distinct_lps: usize,
    pub infeasible: usize,
}

/// All guesses of one variant on one instance, ready for sampling.
#[derive(Debug, Clone)]
pub struct PreparedRun {
    variant: Variant,
    objective: Objective,
    inst: Instance,
    guesses: Vec<PreparedGuess>,
    stats: GuessStats,
    audit: StructureAudit,
    seeds_per_guess: usize,
}

type LpKey = (Vec<u64>, ForbiddenPairs);

struct Preparer<'a> {
    work: &'a Instance,
    cfg: &'a SolverConfig,
    cache: HashMap<LpKey, Option<FractionalSolution>>,
    seen: HashSet<(LpKey, u64)>,
    guesses: Vec<PreparedGuess>,
    stats: GuessStats,
    audit: StructureAudit,
}

impl<'a> Preparer<'a> {
    fn new(work: &'a Instance, cfg: &'a SolverConfig) -> Self {
        Self {
            work,
            cfg,
            cache: HashMap::new(),
            seen: HashSet::new(),
            guesses: Vec::new(),
            stats: GuessStats::default(),
            audit: StructureAudit::default(),
        }
    }

    fn add(&mut self, g: Guess) -> Result<()> {
        self.stats.enumerated += 1;
        let key: LpKey = (
            g.reduced.values().as_slice().iter().map(|v| v.to_bits()).collect(),
            g.forbidden.clone(),
        );
        let mode_bits = match g.mode {
            ClusteringMode::Oblivious => u64::MAX,
            ClusteringMode::Dedicated { threshold } => threshold.to_bits(),
        };
        if !self.seen.insert((key.clone(), mode_bits)) {
            return Ok(());
        }
        if !self.cache.contains_key(&key) {
            let sol = self.solve(&g)?;
            self.cache.insert(key.clone(), sol);
        }
        let Some(sol) = &self.cache[&key] else {
            return Ok(());
        };
        let plan = RoundingPlan::new(sol, self.work, g.mode)?;
        self.audit.add(&plan.audit());
        log::debug!("guess {}: lp = {}", g.descriptor, sol.objective);
        self.guesses.push(PreparedGuess {
            descriptor: g.descriptor,
            lp_objective: sol.objective,
            plan,
        });
        Ok(())
    }

    fn solve(&mut self, g: &Guess) -> Result<Option<FractionalSolution>> {
        let p = build_lp(self.work, &g.reduced, &g.forbidden)?;
        self.stats.distinct_lps += 1;
        if let Some(dir) = &self.cfg.lp_dump {
            std::fs::create_dir_all(dir)?;
            let path = dir.join(format!("lp_{:05}.lp", self.stats.distinct_lps - 1));
            std::fs::write(path, p.to_lp_text())?;
        }
        match solve_lp(&p) {
            Ok(sol) => Ok(Some(normalize(&sol, self.work)?)),
            Err(Error::Infeasible) => {
                self.stats.infeasible += 1;
                log::debug!("guess {} infeasible", g.descriptor);
                Ok(None)
            }
            Err(e) => Err(e),
        }
    }

    fn finish(self, variant: Variant, objective: Objective, inst: &Instance) -> Result<PreparedRun> {
        if self.guesses.is_empty() {
            return Err(Error::Infeasible);
        }
        Ok(PreparedRun {
            variant,
            objective,
            inst: inst.clone(),
            guesses: self.guesses,
            stats: self.stats,
            audit: self.audit,
            seeds_per_guess: self.cfg.seeds_per_guess,
        })
    }
}

fn fmt_tuple(ts: &[f64]) -> String {
    let parts: Vec<String> = ts.iter().map(|t| format!("{t}")).collect();
    parts.join(",")
}

fn prepare_rectangular(inst: &Instance, ell: usize, mode: ClusteringMode, cfg: &SolverConfig) -> Result<PreparedRun> {
    if ell == 0 || ell > inst.n() {
        return Err(Error::WidthOutOfRange { ell, n: inst.n() });
    }
    let mut p = Preparer::new(inst, cfg);
    let none = ForbiddenPairs::none(inst.m(), inst.n());
    for t in threshold_candidates(inst) {
        let mode = match mode {
            ClusteringMode::Oblivious => ClusteringMode::Oblivious,
            ClusteringMode::Dedicated { .. } => ClusteringMode::Dedicated { threshold: t },
        };
        p.add(Guess {
            descriptor: format!("T={t}"),
            reduced: threshold_cost(inst.costs(), t),
            forbidden: none.clone(),
            mode,
        })?;
    }
    p.finish(cfg.variant, Objective::Rect(ell), inst)
}

/// Multi-rectangle guesses on the perturbed `work` instance; results are
/// scored on `eval`.
fn prepare_multi_rect(work: &Instance, eval: &Instance, cfg: &SolverConfig) -> Result<PreparedRun> {
    let levels: Vec<f64> = work.weight_levels().iter().map(|&(w, _)| w).collect();
    let mut p = Preparer::new(work, cfg);
    let none = ForbiddenPairs::none(work.m(), work.n());
    for ts in threshold_tuple_candidates(work, levels.len(), cfg.cap)? {
        p.add(Guess {
            descriptor: format!("T=({})", fmt_tuple(&ts)),
            reduced: multi_rect_cost(work.costs(), &ts, &levels)?,
            forbidden: none.clone(),
            mode: ClusteringMode::Oblivious,
        })?;
    }
    p.finish(cfg.variant, Objective::Ordered, eval)
}

fn prepare_poly(inst: &Instance, eps: f64, cfg: &SolverConfig) -> Result<PreparedRun> {
    let work = inst.perturb_distances();
    let (m, n) = (work.m(), work.n());
    let costs = work.costs().as_slice();
    // some client is farther than c_max from every facility below this
    let floor = (0..n)
        .map(|j| (0..m).map(|i| work.cost(i, j)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    let grid = WeightGrid::for_clients(n, eps);
    let mut p = Preparer::new(&work, cfg);
    let mut total = 0u64;
    for c_max in threshold_candidates(&work) {
        if c_max <= 0.0 || c_max < floor {
            continue;
        }
        let buckets = build_buckets(c_max, eps, n, costs)?;
        let occupied = buckets.occupied(costs);
        for partial in weight_guess_candidates(occupied.len(), grid, cfg.cap)? {
            total += 1;
            if total > cfg.cap {
                return Err(Error::CapExceeded {
                    what: "distance-class guesses",
                    count: total as u128,
                    cap: cfg.cap,
                });
            }
            let guess = expand_guess(&occupied, &partial, buckets.num_classes());
            let (reduced, forbidden) = bucketed_cost(work.costs(), &buckets, &guess)?;
            p.add(Guess {
                descriptor: format!("c_max={c_max} w=({})", fmt_tuple(partial.values())),
                reduced,
                forbidden,
                mode: ClusteringMode::Oblivious,
            })?;
        }
    }
    p.finish(cfg.variant, Objective::Ordered, inst)
}

/// Enumerates and solves every guess of `cfg.variant`.
pub fn prepare(inst: &Instance, cfg: &SolverConfig) -> Result<PreparedRun> {
    cfg.validate()?;
    match cfg.variant {
        Variant::Rectangular { ell, mode } => prepare_rectangular(inst, ell, mode, cfg),
        Variant::MultiRect => prepare_multi_rect(&inst.perturb_distances(), inst, cfg),
        Variant::BucketedQuasipoly { eps } => {
            let star = inst.with_weights(bucket_weights(inst.weights(), eps, inst.n()))?;
            prepare_multi_rect(&star.perturb_distances(), inst, cfg)
        }
        Variant::Poly { eps } => prepare_poly(inst, eps, cfg),
    }
}

/// Outcome of one run of a variant under one master seed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub variant: String,
    pub master_seed: u64,
    pub k: usize,
    pub best_cost: f64,
    pub best_solution: Vec<usize>,
    pub best_guess: String,
    pub best_guess_index: usize,
    pub best_seed: usize,
    pub best_lp_objective: f64,
    pub guesses: GuessStats,
    pub samples: usize,
    pub structure: StructureAudit,
}

impl RunReport {
    pub fn solution(&self) -> SolutionSet {
        SolutionSet::from_unchecked(self.best_solution.clone())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let open: Vec<String> = self.best_solution.iter().map(|i| i.to_string()).collect();
        let _ = writeln!(s, "variant {}", self.variant);
        let _ = writeln!(s, "master_seed {}", self.master_seed);
        let _ = writeln!(s, "k {}", self.k);
        let _ = writeln!(s, "best_cost {}", self.best_cost);
        let _ = writeln!(s, "best_solution {}", open.join(" "));
        let _ = writeln!(s, "best_guess {}", self.best_guess);
        let _ = writeln!(s, "best_seed {}", self.best_seed);
        let _ = writeln!(s, "best_lp_objective {}", self.best_lp_objective);
        let _ = writeln!(s, "guesses_enumerated {}", self.guesses.enumerated);
        let _ = writeln!(s, "distinct_lps {}", self.guesses.distinct_lps);
        let _ = writeln!(s, "infeasible_lps {}", self.guesses.infeasible);
        let _ = writeln!(s, "samples {}", self.samples);
        let _ = writeln!(s, "structure_violations {}", self.structure.total());
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

impl PreparedRun {
    pub fn guesses(&self) -> &[PreparedGuess] {
        &self.guesses
    }

    pub fn stats(&self) -> GuessStats {
        self.stats
    }

    pub fn audit(&self) -> StructureAudit {
        self.audit
    }

    pub fn objective(&self) -> Objective {
        self.objective
    }

    /// Samples every guess; the cheapest solution wins, ties going to the
    /// earlier guess and then the smaller seed.
    pub fn run(&self, master_seed: u64) -> Result<RunReport> {
        let mut best: Option<(f64, usize, usize, SolutionSet)> = None;
        for (g, guess) in self.guesses.iter().enumerate() {
            for s in 0..self.seeds_per_guess {
                let mut rng = trial_rng(master_seed, ((g as u64) << 20) | s as u64);
                let sol = guess.plan.sample(&mut rng)?;
                let cost = self.objective.eval(&self.inst, sol.facilities());
                if best.as_ref().is_none_or(|b| cost < b.0) {
                    best = Some((cost, g, s, sol));
                }
            }
        }
        let (best_cost, gi, seed, sol) = best.expect("at least one guess");
        Ok(RunReport {
            variant: self.variant.name(),
            master_seed,
            k: self.inst.k(),
            best_cost,
            best_solution: sol.facilities().to_vec(),
            best_guess: self.guesses[gi].descriptor.clone(),
            best_guess_index: gi,
            best_seed: seed,
            best_lp_objective: self.guesses[gi].lp_objective,
            guesses: self.stats,
            samples: self.guesses.len() * self.seeds_per_guess,
            structure: self.audit,
        })
    }
}

pub fn solve(inst: &Instance, cfg: &SolverConfig, master_seed: u64) -> Result<RunReport> {
    prepare(inst, cfg)?.run(master_seed)
}

pub fn solve_rectangular(
    inst: &Instance,
    ell: usize,
    mode: ClusteringMode,
    cfg: &SolverConfig,
    master_seed: u64,
) -> Result<RunReport> {
    let cfg = SolverConfig {
        variant: Variant::Rectangular { ell, mode },
        ..cfg.clone()
    };
    solve(inst, &cfg, master_seed)
}

pub fn solve_multi_rect(inst: &Instance, cfg: &SolverConfig, master_seed: u64) -> Result<RunReport> {
    let cfg = SolverConfig {
        variant: Variant::MultiRect,
        ..cfg.clone()
    };
    solve(inst, &cfg, master_seed)
}

pub fn solve_bucketed_quasipoly(inst: &Instance, eps: f64, cfg: &SolverConfig, master_seed: u64) -> Result<RunReport> {
    let cfg = SolverConfig {
        variant: Variant::BucketedQuasipoly { eps },
        ..cfg.clone()
    };
    solve(inst, &cfg, master_seed)
}

pub fn solve_poly(inst: &Instance, eps: f64, cfg: &SolverConfig, master_seed: u64) -> Result<RunReport> {
    let cfg = SolverConfig {
        variant: Variant::Poly { eps },
        ..cfg.clone()
    };
    solve(inst, &cfg, master_seed)
}

/// Best-guess cost over independent master seeds, against the oracle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalStats {
    pub variant: String,
    pub trials: usize,
    pub opt: f64,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub std_dev: f64,
    pub mean_ratio: f64,
    pub max_ratio: f64,
    pub structure: StructureAudit,
}

/// Ratio of `cost` to `opt`, taking `0/0` as 1.
pub fn ratio(cost: f64, opt: f64) -> f64 {
    if opt > 0.0 {
        cost / opt
    } else if cost <= 1e-12 {
        1.0
    } else {
        f64::INFINITY
    }
}

/// Runs the variant under master seeds `first_seed .. first_seed + trials`.
/// `opt` is the optimum of the variant's objective; it is computed by the
/// oracle when absent.
pub fn empirical_stats(
    inst: &Instance,
    cfg: &SolverConfig,
    trials: usize,
    first_seed: u64,
    opt: Option<f64>,
) -> Result<EmpiricalStats> {
    if trials == 0 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    let run = prepare(inst, cfg)?;
    let opt = match opt {
        Some(v) => v,
        None => match run.objective() {
            Objective::Ordered => brute_force_opt(inst, cfg.oracle_budget)?.1,
            Objective::Rect(ell) => {
                let rect = inst.with_weights(crate::instance::rectangular_weights(inst.n(), ell))?;
                brute_force_opt(&rect, cfg.oracle_budget)?.1
            }
        },
    };
    let mut costs = Vec::with_capacity(trials);
    for t in 0..trials {
        costs.push(run.run(first_seed + t as u64)?.best_cost);
    }
    let mean = costs.iter().sum::<f64>() / trials as f64;
    let var = costs.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / trials as f64;
    let min = costs.iter().copied().fold(f64::INFINITY, f64::min);
    let max = costs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(EmpiricalStats {
        variant: cfg.variant.name(),
        trials,
        opt,
        mean,
        min,
        max,
        std_dev: var.sqrt(),
        mean_ratio: ratio(mean, opt),
        max_ratio: ratio(max, opt),
        structure: run.audit(),
    })
}
