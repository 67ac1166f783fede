//! Acceptance suite: one PASS/FAIL line per criterion.

use std::process::{Command, ExitCode};
use std::time::Instant;

use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ordered_kmedian::gen::{generate, MetricKind, WeightShape};
use ordered_kmedian::instance::rectangular_weights;
use ordered_kmedian::lp::{build_lp, normalize, solve_lp, ForbiddenPairs, FractionalSolution};
use ordered_kmedian::oracle::brute_force_opt;
use ordered_kmedian::reductions::{
    bucket_weights, bucketed_cost, build_buckets, distinct_count, threshold_cost, WeightGrid, WeightGuess,
};
use ordered_kmedian::rounding::{trial_rng, ClusteringMode, RoundingPlan, StructureAudit};
use ordered_kmedian::solvers::{empirical_stats, ratio, solve, SolverConfig, Variant};
use ordered_kmedian::{Instance, Matrix};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Instance `idx` of a corpus: alternating Euclidean and shortest-path
/// metrics with sizes drawn from the given ranges.
fn corpus_instance(idx: u64, salt: u64, m_max: usize, n_max: usize, k: usize, mut shape: impl FnMut(usize) -> WeightShape) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(salt * 1000 + idx);
    let m = rng.gen_range(k.max(3)..=m_max);
    let n = rng.gen_range(4..=n_max);
    let kind = if idx % 2 == 0 { MetricKind::Euclidean } else { MetricKind::RandomMetric };
    generate(kind, m, n, k, &shape(n), salt * 7919 + idx).unwrap()
}

/// Sort-and-dot written independently of the library.
fn reference_ordered_cost(costs: &Matrix, open: &[usize], w: &[f64]) -> f64 {
    let mut c: Vec<f64> = (0..costs.cols())
        .map(|j| {
            let mut best = f64::MAX;
            for &i in open {
                if costs[(i, j)] < best {
                    best = costs[(i, j)];
                }
            }
            best
        })
        .collect();
    c.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut total = 0.0;
    for j in 0..c.len() {
        total += c[j] * w[j];
    }
    total
}

fn connection_sorted(inst: &Instance, open: &[usize]) -> Vec<f64> {
    let mut c = inst.connection_costs(open);
    c.sort_by(|a, b| b.partial_cmp(a).unwrap());
    c
}

fn criterion_1() -> Outcome {
    let mut worst = 0.0f64;
    let mut subsets = 0;
    for idx in 0..50 {
        let mut rng = ChaCha8Rng::seed_from_u64(idx);
        let k = rng.gen_range(1..=3);
        let inst = corpus_instance(idx, 1, 8, 10, k, |n| {
            let mut w: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
            w.sort_by(|a, b| b.partial_cmp(a).unwrap());
            WeightShape::Custom(w)
        });
        for open in (0..inst.m()).combinations(inst.k()) {
            let lib = inst.ordered_cost_of(&open, inst.weights());
            let reference = reference_ordered_cost(inst.costs(), &open, inst.weights());
            worst = worst.max((lib - reference).abs());
            subsets += 1;
        }
    }
    outcome(worst <= 1e-9, format!("50 instances, {subsets} subsets, max deviation {worst:.2e}"))
}

/// Shared corpus of criteria 2 and 3.
fn rect_corpus() -> Vec<(Instance, usize, f64)> {
    (0..20)
        .map(|idx| {
            let k = 2 + (idx % 2) as usize;
            let inst = corpus_instance(idx, 2, 8, 10, k, |_| WeightShape::Rect(1));
            let n = inst.n();
            let ell = [1, n.div_ceil(2), n][idx as usize % 3];
            let inst = inst.with_weights(rectangular_weights(n, ell)).unwrap();
            let opt = brute_force_opt(&inst, 1_000_000).unwrap().1;
            (inst, ell, opt)
        })
        .collect()
}

fn rect_guarantee(corpus: &[(Instance, usize, f64)], mode: ClusteringMode, bound: f64, audit: &mut StructureAudit) -> Outcome {
    let mut max_mean = 0.0f64;
    let mut max_best = 0.0f64;
    let mut ok = true;
    for (idx, (inst, ell, opt)) in corpus.iter().enumerate() {
        let cfg = SolverConfig::new(Variant::Rectangular { ell: *ell, mode });
        let s = empirical_stats(inst, &cfg, 100, 1000 * idx as u64, Some(*opt)).unwrap();
        audit.add(&s.structure);
        max_mean = max_mean.max(s.mean_ratio);
        max_best = max_best.max(s.max_ratio);
        if s.mean_ratio > bound || s.max_ratio > bound {
            ok = false;
        }
    }
    outcome(
        ok,
        format!("20 instances x 100 seeds, max mean ratio {max_mean:.4}, max realized ratio {max_best:.4} (bound {bound})"),
    )
}

fn criterion_4(audit: &mut StructureAudit) -> Outcome {
    let mut max_multi = 0.0f64;
    let mut max_poly = 0.0f64;
    let poly_bound = 38.0 * 1.5f64.powi(3);
    let mut ok = true;
    for idx in 0..10u64 {
        let r = 2 + (idx % 2) as usize;
        let inst = corpus_instance(idx, 4, 5, 6, 2, |n| {
            let levels = [1.0, 0.5, 0.2];
            let w: Vec<f64> = (0..n).map(|j| levels[(j * r / n).min(r - 1)]).collect();
            WeightShape::Custom(w)
        });
        assert_eq!(inst.weight_levels().len(), r);
        let opt = brute_force_opt(&inst, 1_000_000).unwrap().1;
        let multi = empirical_stats(&inst, &SolverConfig::new(Variant::MultiRect), 20, idx, Some(opt)).unwrap();
        let poly = empirical_stats(&inst, &SolverConfig::new(Variant::Poly { eps: 0.5 }), 5, idx, Some(opt)).unwrap();
        audit.add(&multi.structure);
        audit.add(&poly.structure);
        max_multi = max_multi.max(multi.mean_ratio);
        max_poly = max_poly.max(poly.mean_ratio);
        if multi.mean_ratio > 38.0 || poly.mean_ratio > poly_bound {
            ok = false;
        }
    }
    outcome(
        ok,
        format!("10 instances, multi max mean ratio {max_multi:.4} (bound 38), poly max mean ratio {max_poly:.4} (bound {poly_bound:.1})"),
    )
}

/// Canonical LP solutions with at most 8 copies, several fractional
/// openings and at least one matched pair, taken from fixed small instances.
fn marginal_cases() -> Vec<(Instance, FractionalSolution, ClusteringMode)> {
    let mut out = Vec::new();
    let mut idx = 0;
    while out.len() < 5 {
        idx += 1;
        let inst = corpus_instance(idx, 5, 6, 8, 3, |n| WeightShape::Rect(n.div_ceil(2)));
        for t in ordered_kmedian::reductions::threshold_candidates(&inst) {
            let lp = build_lp(&inst, &threshold_cost(inst.costs(), t), &ForbiddenPairs::none(inst.m(), inst.n())).unwrap();
            let sol = normalize(&solve_lp(&lp).unwrap(), &inst).unwrap();
            let fractional = sol.y.iter().filter(|&&y| y < 1.0 - 1e-9).count();
            let mode = ClusteringMode::Dedicated { threshold: t };
            let plan = RoundingPlan::new(&sol, &inst, mode).unwrap();
            if sol.num_facilities() <= 8 && fractional >= 3 && !plan.structure().matching.is_empty() {
                out.push((inst.clone(), sol, mode));
                break;
            }
        }
    }
    out
}

fn criterion_5() -> Outcome {
    const N: u64 = 100_000;
    let mut worst_z = 0.0f64;
    let mut pair_violations = 0u64;
    let mut size_violations = 0u64;
    let mut pairs_seen = 0;
    let mut band_misses = 0;
    for (case, (inst, sol, mode)) in marginal_cases().into_iter().enumerate() {
        let plan = RoundingPlan::new(&sol, &inst, mode).unwrap();
        let cs = plan.structure().clone();
        pairs_seen += cs.matching.len();
        let mf = sol.num_facilities();
        let mut freq = vec![0u64; mf];
        let mut bundle_freq = vec![0u64; cs.bundles.len()];
        for t in 0..N {
            let open = plan.sample_copies(&mut trial_rng(case as u64, t)).unwrap();
            if open.len() != inst.k() {
                size_violations += 1;
            }
            let mut is_open = vec![false; mf];
            for &i in &open {
                is_open[i] = true;
                freq[i] += 1;
            }
            let bundle_open: Vec<bool> = cs.bundles.iter().map(|b| b.iter().any(|&i| is_open[i])).collect();
            for (b, &o) in bundle_open.iter().enumerate() {
                bundle_freq[b] += o as u64;
            }
            for &(a, b) in &cs.matching {
                if !bundle_open[a] && !bundle_open[b] {
                    pair_violations += 1;
                }
            }
        }
        let mut check = |p_hat: f64, p: f64| {
            let sd = (p * (1.0 - p) / N as f64).sqrt();
            let dev = (p_hat - p).abs();
            if dev > 4.0 * sd + 1e-12 {
                band_misses += 1;
            }
            if sd > 0.0 {
                worst_z = worst_z.max(dev / sd);
            }
        };
        for i in 0..mf {
            check(freq[i] as f64 / N as f64, sol.y[i]);
        }
        for b in 0..cs.bundles.len() {
            check(bundle_freq[b] as f64 / N as f64, cs.volume(&sol, b).min(1.0));
        }
    }
    outcome(
        band_misses == 0 && pair_violations == 0 && size_violations == 0,
        format!(
            "5 solutions x {N} trials, worst deviation {worst_z:.2} sd, {band_misses} outside 4 sd, \
             {pairs_seen} matched pairs with {pair_violations} empty, {size_violations} size violations"
        ),
    )
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst = 0.0f64;
    let mut insts = Vec::new();
    for idx in 0..10 {
        insts.push(corpus_instance(idx, 7, 8, 10, 3, |n| WeightShape::Rect(n)));
    }
    for _ in 0..10_000 {
        let inst = &insts[rng.gen_range(0..insts.len())];
        let n = inst.n();
        let palette = [1.0, 0.8, 0.5, 0.3, 0.1, 0.0];
        let mut w: Vec<f64> = (0..n).map(|_| palette[rng.gen_range(0..palette.len())]).collect();
        w.sort_by(|a, b| b.partial_cmp(a).unwrap());
        w[0] = 1.0;
        let inst = inst.with_weights(w).unwrap();
        let open: Vec<usize> = (0..inst.m()).collect::<Vec<_>>().into_iter().filter(|_| rng.gen_bool(0.5)).collect();
        let open = if open.is_empty() { vec![0] } else { open };
        let direct = inst.ordered_cost_of(&open, inst.weights());
        let levels = inst.weight_levels();
        let mut pieces = 0.0;
        for r in 0..levels.len() {
            let next = levels.get(r + 1).map_or(0.0, |l| l.0);
            pieces += (levels[r].0 - next) * inst.rect_cost_of(&open, levels[r].1);
        }
        worst = worst.max((direct - pieces).abs());
    }
    let mut lb_ok = 0;
    for idx in 0..20 {
        let inst = corpus_instance(idx, 17, 7, 9, 2, |n| {
            let w: Vec<f64> = (0..n).map(|j| 0.8f64.powi(j as i32 / 2)).collect();
            WeightShape::Custom(w)
        });
        let (opt_set, opt) = brute_force_opt(&inst, 1_000_000).unwrap();
        let sorted = connection_sorted(&inst, opt_set.facilities());
        let levels = inst.weight_levels();
        let mut bound = 0.0;
        for r in 0..levels.len() {
            let next = levels.get(r + 1).map_or(0.0, |l| l.0);
            let t = sorted[levels[r].1 - 1];
            bound += (levels[r].0 - next) * levels[r].1 as f64 * t;
        }
        if bound <= opt + 1e-6 {
            lb_ok += 1;
        }
    }
    outcome(
        worst <= 1e-9 && lb_ok == 20,
        format!("10000 pairs, max decomposition error {worst:.2e}; lower bound holds on {lb_ok}/20"),
    )
}

fn criterion_8() -> Outcome {
    let mut worst = 0.0f64;
    let mut ok = true;
    let mut checked = 0;
    let mut max_distinct = 0;
    for idx in 0..10 {
        let mut rng = ChaCha8Rng::seed_from_u64(800 + idx);
        let inst = corpus_instance(idx, 8, 8, 10, 3, |n| {
            let mut w: Vec<f64> = (0..n).map(|_| rng.gen::<f64>().powi(3)).collect();
            w.sort_by(|a, b| b.partial_cmp(a).unwrap());
            WeightShape::Custom(w)
        });
        let n = inst.n();
        for eps in [0.25, 1.0] {
            let star_w = bucket_weights(inst.weights(), eps, n);
            let bound = 2.0 * (n as f64).ln() / (1.0 + eps).ln() + 5.0;
            let d = distinct_count(&star_w);
            max_distinct = max_distinct.max(d);
            if d as f64 > bound {
                ok = false;
            }
            for open in (0..inst.m()).combinations(inst.k()) {
                let cost = reference_ordered_cost(inst.costs(), &open, inst.weights());
                let low = reference_ordered_cost(inst.costs(), &open, &star_w);
                if !(low <= cost + 1e-9 && cost <= (1.0 + eps) * low + 1e-9) {
                    ok = false;
                }
                if low > 0.0 {
                    worst = worst.max(cost / low);
                }
                checked += 1;
            }
        }
    }
    outcome(
        ok,
        format!("{checked} (instance, eps, W) checks, max cost ratio {worst:.4}, max distinct weights {max_distinct}"),
    )
}

/// Average weight per distance class of the optimum, rounded up to the grid.
fn dominating_guess(inst: &Instance, open: &[usize], c_max: f64, eps: f64) -> (WeightGuess, ordered_kmedian::reductions::DistanceBuckets) {
    let buckets = build_buckets(c_max, eps, inst.n(), inst.costs().as_slice()).unwrap();
    let sorted = connection_sorted(inst, open);
    let grid = WeightGrid::for_clients(inst.n(), eps);
    let mut guess = Vec::with_capacity(buckets.num_classes());
    let mut carry = 1.0;
    for s in 0..buckets.num_classes() {
        let ws: Vec<f64> = sorted
            .iter()
            .zip(inst.weights())
            .filter(|(c, _)| buckets.class_of(**c) == Some(s))
            .map(|(_, w)| *w)
            .collect();
        let avg = if ws.is_empty() {
            carry
        } else {
            carry = ws.iter().copied().fold(f64::INFINITY, f64::min);
            ws.iter().sum::<f64>() / ws.len() as f64
        };
        guess.push(grid.round_up(avg));
    }
    (WeightGuess(guess), buckets)
}

fn criterion_9() -> Outcome {
    let mut rect_ok = 0;
    let mut bucket_ok = 0;
    let mut worst_rect = 0.0f64;
    let mut worst_bucket = 0.0f64;
    let eps = 0.5;
    for idx in 0..20 {
        let inst = corpus_instance(idx, 9, 8, 10, 2, |n| {
            let w: Vec<f64> = (0..n).map(|j| 0.7f64.powi(j as i32)).collect();
            WeightShape::Custom(w)
        });
        let n = inst.n();
        let ell = 1 + idx as usize % n;
        let rect = inst.with_weights(rectangular_weights(n, ell)).unwrap();
        let (w_star, rect_opt) = brute_force_opt(&rect, 1_000_000).unwrap();
        let t = connection_sorted(&rect, w_star.facilities())[ell - 1];
        let none = ForbiddenPairs::none(inst.m(), n);
        let lp = solve_lp(&build_lp(&rect, &threshold_cost(rect.costs(), t), &none).unwrap()).unwrap();
        worst_rect = worst_rect.max(lp.objective - rect_opt);
        if lp.objective <= rect_opt + 1e-6 {
            rect_ok += 1;
        }

        let (opt_set, opt) = brute_force_opt(&inst, 1_000_000).unwrap();
        let c_max = connection_sorted(&inst, opt_set.facilities())[0];
        let (guess, buckets) = dominating_guess(&inst, opt_set.facilities(), c_max, eps);
        let (reduced, forbidden) = bucketed_cost(inst.costs(), &buckets, &guess).unwrap();
        let lp = solve_lp(&build_lp(&inst, &reduced, &forbidden).unwrap()).unwrap();
        let bound = (1.0 + eps) * (1.0 + eps) * opt;
        worst_bucket = worst_bucket.max(ratio(lp.objective, opt));
        if lp.objective <= bound + 1e-6 {
            bucket_ok += 1;
        }
    }
    outcome(
        rect_ok == 20 && bucket_ok == 20,
        format!(
            "threshold LP bound holds on {rect_ok}/20 (max excess {worst_rect:.2e}); \
             bucketed LP bound holds on {bucket_ok}/20 (max LP/OPT {worst_bucket:.4}, bound 2.25)"
        ),
    )
}

fn criterion_10() -> Outcome {
    let inst = corpus_instance(3, 10, 6, 7, 2, |n| {
        let w: Vec<f64> = (0..n).map(|j| [1.0, 0.6, 0.3][j * 3 / n]).collect();
        WeightShape::Custom(w)
    });
    let geometric = inst.with_weights(WeightShape::Geom(0.5).weights(inst.n()).unwrap()).unwrap();
    let mut same = true;
    for (v, on) in [
        (Variant::Rectangular { ell: 3, mode: ClusteringMode::Dedicated { threshold: 0.0 } }, &inst),
        (Variant::Rectangular { ell: 3, mode: ClusteringMode::Oblivious }, &inst),
        (Variant::MultiRect, &inst),
        (Variant::BucketedQuasipoly { eps: 1.0 }, &geometric),
        (Variant::Poly { eps: 1.0 }, &inst),
    ] {
        let cfg = SolverConfig::new(v);
        let a = solve(on, &cfg, 2024).unwrap();
        let b = solve(on, &cfg, 2024).unwrap();
        same &= a.to_json() == b.to_json() && a.to_text() == b.to_text();
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("inst.txt");
    ordered_kmedian::format::write_instance(&path, &inst).unwrap();
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_okm"))
            .args(["solve", path.to_str().unwrap(), "--variant", "poly", "--eps", "1", "--seed", "5", "--trials", "3"])
            .output()
            .unwrap()
    };
    let (a, b) = (run(), run());
    let cli_same = a.status.success() && a.stdout == b.stdout && !a.stdout.is_empty();
    outcome(same && cli_same, format!("5 variants in process, CLI stdout identical: {cli_same}"))
}

fn main() -> ExitCode {
    let mut all = true;
    let mut report = |n: usize, name: &str, start: Instant, o: Outcome| {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] criterion {n:>2} {name}: {} ({:.1}s)", o.detail, start.elapsed().as_secs_f64());
        all &= o.pass;
    };

    let t = Instant::now();
    report(1, "oracle equivalence", t, criterion_1());

    let mut audit = StructureAudit::default();
    let t = Instant::now();
    let corpus = rect_corpus();
    let c2 = rect_guarantee(&corpus, ClusteringMode::Dedicated { threshold: 0.0 }, 15.0, &mut audit);
    report(2, "rectangular, dedicated clustering", t, c2);
    let t = Instant::now();
    let c3 = rect_guarantee(&corpus, ClusteringMode::Oblivious, 38.0, &mut audit);
    report(3, "rectangular, oblivious clustering", t, c3);
    let t = Instant::now();
    report(4, "general weights", t, criterion_4(&mut audit));

    let t = Instant::now();
    report(5, "dependent rounding marginals", t, criterion_5());

    let t = Instant::now();
    let c6 = outcome(
        audit.total() == 0,
        format!(
            "runs of criteria 2-4: center spread {}, assignment {}, volume {}, overlap {}, laminarity {}",
            audit.center_spread, audit.assignment, audit.volume, audit.overlap, audit.laminar
        ),
    );
    report(6, "structural invariants", t, c6);

    let t = Instant::now();
    report(7, "decomposition and lower bound", t, criterion_7());
    let t = Instant::now();
    report(8, "weight bucketing", t, criterion_8());
    let t = Instant::now();
    report(9, "LP lower bounds", t, criterion_9());
    let t = Instant::now();
    report(10, "determinism", t, criterion_10());

    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
