//! Clustering, bundling, matching and dependent rounding of a canonical
//! fractional solution.

mod dependent;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::instance::{cmp_f64, Instance, SolutionSet};
use crate::lp::{FractionalSolution, FEASIBILITY_TOLERANCE};

pub use dependent::{LaminarForest, LaminarNode, NodeKind};

/// Private stream `stream` of master seed `seed`.
pub fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClusteringMode {
    /// Order and delete by `c_av`.
    Oblivious,
    /// Order by `c_av^T`, delete when `c_jj' <= 4 c_av^T(j') + 4T`.
    Dedicated { threshold: f64 },
}

impl ClusteringMode {
    pub fn threshold(&self) -> f64 {
        match *self {
            ClusteringMode::Oblivious => 0.0,
            ClusteringMode::Dedicated { threshold } => threshold,
        }
    }
}

/// `c_av^T(j) = sum_i x_ij c^T_ij`; `T = 0` gives `c_av`.
pub fn average_costs(sol: &FractionalSolution, inst: &Instance, t: f64) -> Vec<f64> {
    sol.average_costs(inst, |c| if c >= t { c } else { 0.0 })
}

fn require_canonical(sol: &FractionalSolution) -> Result<()> {
    if sol.canonical {
        Ok(())
    } else {
        Err(Error::InvalidArgument("rounding needs a canonical fractional solution".into()))
    }
}

fn cluster(inst: &Instance, cav: &[f64], t: f64) -> Vec<usize> {
    let n = cav.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| cmp_f64(&cav[a], &cav[b]).then(a.cmp(&b)));
    let mut removed = vec![false; n];
    let mut centers = Vec::new();
    for &j in &order {
        if removed[j] {
            continue;
        }
        centers.push(j);
        for j2 in 0..n {
            if !removed[j2] && inst.client_distance(j, j2) <= 4.0 * cav[j2] + 4.0 * t {
                removed[j2] = true;
            }
        }
        removed[j] = true;
    }
    centers
}

pub fn oblivious_clustering(sol: &FractionalSolution, inst: &Instance) -> Result<Vec<usize>> {
    require_canonical(sol)?;
    Ok(cluster(inst, &average_costs(sol, inst, 0.0), 0.0))
}

pub fn dedicated_clustering(sol: &FractionalSolution, inst: &Instance, t: f64) -> Result<Vec<usize>> {
    require_canonical(sol)?;
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("threshold {t} must be >= 0")));
    }
    Ok(cluster(inst, &average_costs(sol, inst, t), t))
}

pub fn clustering(sol: &FractionalSolution, inst: &Instance, mode: ClusteringMode) -> Result<Vec<usize>> {
    match mode {
        ClusteringMode::Oblivious => oblivious_clustering(sol, inst),
        ClusteringMode::Dedicated { threshold } => dedicated_clustering(sol, inst, threshold),
    }
}

/// Centers with their radii, bundles and matching. Bundles hold indices of
/// the solution's facilities (copies, after normalization); `matching` and
/// `unmatched` hold positions in `centers`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterStructure {
    pub centers: Vec<usize>,
    pub radius: Vec<f64>,
    pub bundles: Vec<Vec<usize>>,
    pub matching: Vec<(usize, usize)>,
    pub unmatched: Option<usize>,
}

impl ClusterStructure {
    pub fn volume(&self, sol: &FractionalSolution, pos: usize) -> f64 {
        self.bundles[pos].iter().map(|&i| sol.y[i]).sum()
    }

    pub fn laminar_forest(&self, num_facilities: usize) -> LaminarForest {
        LaminarForest::new(&self.bundles, &self.matching, num_facilities)
    }
}

/// Radii and bundles for `centers`; the matching is left empty.
pub fn build_bundles(centers: &[usize], sol: &FractionalSolution, inst: &Instance) -> Result<ClusterStructure> {
    require_canonical(sol)?;
    if centers.is_empty() {
        return Err(Error::InvalidArgument("no cluster centers".into()));
    }
    let radius: Vec<f64> = centers
        .iter()
        .map(|&j| {
            centers
                .iter()
                .filter(|&&j2| j2 != j)
                .map(|&j2| inst.client_distance(j, j2))
                .fold(f64::INFINITY, f64::min)
                / 2.0
        })
        .collect();
    let bundles: Vec<Vec<usize>> = centers
        .iter()
        .zip(&radius)
        .map(|(&j, &r)| {
            (0..sol.num_facilities())
                .filter(|&i| sol.x[(i, j)] > 0.0 && sol.cost(inst, i, j) < r)
                .collect()
        })
        .collect();
    let cs = ClusterStructure {
        centers: centers.to_vec(),
        radius,
        bundles,
        matching: Vec::new(),
        unmatched: None,
    };
    for pos in 0..centers.len() {
        let vol = cs.volume(sol, pos);
        if vol < 0.5 - FEASIBILITY_TOLERANCE || vol > 1.0 + FEASIBILITY_TOLERANCE {
            return Err(Error::Consistency(format!(
                "bundle of center {} has volume {vol}",
                centers[pos]
            )));
        }
    }
    Ok(cs)
}

/// Repeatedly matches the closest unmatched pair (ties by position pair).
/// Returns the pairs and the leftover, both as positions in `centers`.
pub fn greedy_matching(centers: &[usize], inst: &Instance) -> (Vec<(usize, usize)>, Option<usize>) {
    let c = centers.len();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(c * c.saturating_sub(1) / 2);
    for a in 0..c {
        for b in a + 1..c {
            pairs.push((inst.client_distance(centers[a], centers[b]), a, b));
        }
    }
    pairs.sort_by(|p, q| cmp_f64(&p.0, &q.0).then((p.1, p.2).cmp(&(q.1, q.2))));
    let mut used = vec![false; c];
    let mut matching = Vec::new();
    for (_, a, b) in pairs {
        if !used[a] && !used[b] {
            used[a] = true;
            used[b] = true;
            matching.push((a, b));
        }
    }
    let unmatched = (0..c).find(|&p| !used[p]);
    (matching, unmatched)
}

/// Clustering, bundles and matching for one solution.
pub fn cluster_structure(sol: &FractionalSolution, inst: &Instance, mode: ClusteringMode) -> Result<ClusterStructure> {
    let centers = clustering(sol, inst, mode)?;
    let mut cs = build_bundles(&centers, sol, inst)?;
    let (matching, unmatched) = greedy_matching(&cs.centers, inst);
    cs.matching = matching;
    cs.unmatched = unmatched;
    Ok(cs)
}

/// Counts of structural violations found by [`audit_structure`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize)]
pub struct StructureAudit {
    pub center_spread: usize,
    pub assignment: usize,
    pub volume: usize,
    pub overlap: usize,
    pub laminar: usize,
}

impl StructureAudit {
    pub fn total(&self) -> usize {
        self.center_spread + self.assignment + self.volume + self.overlap + self.laminar
    }

    pub fn add(&mut self, o: &StructureAudit) {
        self.center_spread += o.center_spread;
        self.assignment += o.assignment;
        self.volume += o.volume;
        self.overlap += o.overlap;
        self.laminar += o.laminar;
    }
}

/// Checks center spread and assignment for the clustering, volumes and
/// disjointness for the bundles, and laminarity of the rounding family.
pub fn audit_structure(
    sol: &FractionalSolution,
    inst: &Instance,
    mode: ClusteringMode,
    cs: &ClusterStructure,
) -> StructureAudit {
    let t = mode.threshold();
    let cav = average_costs(sol, inst, t);
    let mut audit = StructureAudit::default();
    let centers = &cs.centers;
    for (a, &j) in centers.iter().enumerate() {
        for &j2 in &centers[a + 1..] {
            if !(inst.client_distance(j, j2) > 4.0 * cav[j].max(cav[j2]) + 4.0 * t) {
                audit.center_spread += 1;
            }
        }
    }
    let slack = 1e-9 * inst.max_cost().max(1.0);
    for j in 0..inst.n() {
        if centers.contains(&j) {
            continue;
        }
        let covered = centers.iter().any(|&c| {
            cav[c] <= cav[j] && inst.client_distance(j, c) <= 4.0 * cav[j] + 4.0 * t + slack
        });
        if !covered {
            audit.assignment += 1;
        }
    }
    for pos in 0..centers.len() {
        if cs.volume(sol, pos) < 0.5 - FEASIBILITY_TOLERANCE {
            audit.volume += 1;
        }
    }
    let mut owner = vec![usize::MAX; sol.num_facilities()];
    for (pos, b) in cs.bundles.iter().enumerate() {
        for &i in b {
            if owner[i] != usize::MAX && owner[i] != pos {
                audit.overlap += 1;
            }
            owner[i] = pos;
        }
    }
    if !cs.laminar_forest(sol.num_facilities()).is_laminar() {
        audit.laminar += 1;
    }
    audit
}

/// Rounds with the laminar family of `cs`; the result holds indices of the
/// solution's facilities.
pub fn dependent_round(sol: &FractionalSolution, cs: &ClusterStructure, seed: u64) -> Result<SolutionSet> {
    let mut rng = trial_rng(seed, 0);
    let mut values = sol.y.clone();
    cs.laminar_forest(sol.num_facilities()).round(&mut values, &mut rng)?;
    Ok(SolutionSet::from_unchecked(
        (0..values.len()).filter(|&i| values[i] == 1.0).collect(),
    ))
}

/// Everything needed to draw rounded solutions repeatedly from one
/// fractional solution.
#[derive(Debug, Clone)]
pub struct RoundingPlan {
    structure: ClusterStructure,
    forest: LaminarForest,
    audit: StructureAudit,
    y: Vec<f64>,
    origin: Vec<usize>,
    fill_order: Vec<usize>,
    k: usize,
}

impl RoundingPlan {
    pub fn new(sol: &FractionalSolution, inst: &Instance, mode: ClusteringMode) -> Result<Self> {
        let structure = cluster_structure(sol, inst, mode)?;
        let audit = audit_structure(sol, inst, mode, &structure);
        let forest = structure.laminar_forest(sol.num_facilities());
        let openings = sol.original_openings(inst.m());
        let mut fill_order: Vec<usize> = (0..inst.m()).collect();
        fill_order.sort_by(|&a, &b| cmp_f64(&openings[b], &openings[a]).then(a.cmp(&b)));
        Ok(Self {
            structure,
            forest,
            audit,
            y: sol.y.clone(),
            origin: sol.origin.clone(),
            fill_order,
            k: inst.k(),
        })
    }

    pub fn structure(&self) -> &ClusterStructure {
        &self.structure
    }

    pub fn audit(&self) -> StructureAudit {
        self.audit
    }

    /// Opened copies before mapping back to input facilities.
    pub fn sample_copies<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<usize>> {
        let mut values = self.y.clone();
        self.forest.round(&mut values, rng)?;
        Ok((0..values.len()).filter(|&i| values[i] == 1.0).collect())
    }

    /// A solution of exactly `k` input facilities.
    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Result<SolutionSet> {
        let copies = self.sample_copies(rng)?;
        if copies.len() != self.k {
            return Err(Error::Consistency(format!(
                "dependent rounding opened {} copies for k = {}",
                copies.len(),
                self.k
            )));
        }
        let mut open: Vec<usize> = copies.iter().map(|&c| self.origin[c]).collect();
        open.sort_unstable();
        open.dedup();
        for &i in &self.fill_order {
            if open.len() >= self.k {
                break;
            }
            if !open.contains(&i) {
                open.push(i);
            }
        }
        Ok(SolutionSet::from_unchecked(open))
    }
}

/// Clustering, bundling, matching and dependent rounding in one call.
pub fn round_pipeline(
    sol: &FractionalSolution,
    inst: &Instance,
    mode: ClusteringMode,
    seed: u64,
) -> Result<SolutionSet> {
    RoundingPlan::new(sol, inst, mode)?.sample(&mut trial_rng(seed, 0))
}
