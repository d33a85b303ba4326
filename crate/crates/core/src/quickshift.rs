//! Quick Shift forests.
//!
//! Every point is linked to a denser point within `c * h`, or becomes a root.
//! "Denser" is the total order (higher density, then lower id), so exactly
//! equal densities still link towards the lowest id and duplicated points end
//! up in one tree. Edges always decrease `(-density, id)` lexicographically,
//! which makes the graph acyclic.

use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::geometry::{sq_dist, Dataset, SeedSpec};
use crate::kde::{exact_all, DensityEstimate, KernelSpec};
use crate::lsh::{denser, LshIndex, LshParams};
use crate::registry::{EstimatorFactory, NeighborFactory, Registry};

pub const DEFAULT_APPROX: f64 = 1.5;
pub const DEFAULT_EPSILON: f64 = 0.1;

/// Optional overrides of the default index sizing.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LshOverrides {
    pub tables: Option<usize>,
    pub concat: Option<usize>,
    pub bucket_width: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuickShiftConfig {
    /// Kernel bandwidth and neighbour radius `h`.
    pub bandwidth: f64,
    /// Approximation factor `c`; edges are at most `c * h` long.
    pub approx: f64,
    pub epsilon: f64,
    /// Density floor of the hashing estimator; `None` means `1/n`.
    pub mu: Option<f64>,
    /// Registered density estimator name.
    pub estimator: String,
    /// Registered neighbour search name.
    pub neighbors: String,
    pub seed: SeedSpec,
    pub lsh: LshOverrides,
}

impl QuickShiftConfig {
    pub fn new(bandwidth: f64) -> Self {
        Self {
            bandwidth,
            approx: DEFAULT_APPROX,
            epsilon: DEFAULT_EPSILON,
            mu: None,
            estimator: "hbe".to_string(),
            neighbors: "lsh".to_string(),
            seed: SeedSpec::default(),
            lsh: LshOverrides::default(),
        }
    }

    pub fn with_estimator(mut self, name: &str) -> Self {
        self.estimator = name.to_string();
        self
    }

    pub fn with_neighbors(mut self, name: &str) -> Self {
        self.neighbors = name.to_string();
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = SeedSpec::new(seed);
        self
    }

    pub fn with_approx(mut self, approx: f64) -> Self {
        self.approx = approx;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    /// Longest admissible edge, `c * h`.
    pub fn edge_bound(&self) -> f64 {
        self.approx * self.bandwidth
    }

    pub fn kernel(&self) -> Result<KernelSpec> {
        KernelSpec::new(self.bandwidth)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth > 0.0 && self.bandwidth.is_finite()) {
            return Err(invalid(
                "bandwidth",
                format!("must be positive, got {}", self.bandwidth),
            ));
        }
        if !(self.approx > 1.0 && self.approx.is_finite()) {
            return Err(invalid("approx", format!("must exceed 1, got {}", self.approx)));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(invalid("epsilon", format!("must lie in (0, 1), got {}", self.epsilon)));
        }
        Ok(())
    }

    /// Index parameters: default sizing for `n` points with any overrides applied.
    pub fn lsh_params(&self, n: usize) -> LshParams {
        let seed = self.seed.child("lsh", 0);
        let mut p = match self.lsh.bucket_width {
            Some(w) => LshParams::sized_with(n, self.bandwidth, self.approx, w, seed),
            None => LshParams::sized_for(n, self.bandwidth, self.approx, seed),
        };
        if let Some(l) = self.lsh.tables {
            p.tables = l;
        }
        if let Some(k) = self.lsh.concat {
            p.concat = k;
        }
        p
    }
}

/// Source of the denser-neighbour candidate for each point.
pub trait NeighborSearch: Send + Sync {
    fn name(&self) -> &'static str;

    /// Called once with the final densities before any candidate query.
    fn register(&mut self, densities: &[f64]) -> Result<()>;

    /// Densest visible point within the edge bound, excluding `i` itself.
    fn candidate(&self, data: &Dataset, densities: &[f64], i: usize) -> Result<Option<usize>>;

    fn lsh_params(&self) -> Option<LshParams> {
        None
    }
}

/// Candidates from the per-bucket density maxima of an [`LshIndex`].
pub struct LshNeighbors {
    index: LshIndex,
}

impl LshNeighbors {
    pub fn build(data: &Dataset, cfg: &QuickShiftConfig) -> Result<Self> {
        Ok(Self {
            index: LshIndex::build(data, cfg.lsh_params(data.len()))?,
        })
    }

    pub fn index(&self) -> &LshIndex {
        &self.index
    }
}

impl NeighborSearch for LshNeighbors {
    fn name(&self) -> &'static str {
        "lsh"
    }

    fn register(&mut self, densities: &[f64]) -> Result<()> {
        self.index.register_densities(densities)
    }

    fn candidate(&self, data: &Dataset, _densities: &[f64], i: usize) -> Result<Option<usize>> {
        self.index.argmax_density_neighbor(data, i)
    }

    fn lsh_params(&self) -> Option<LshParams> {
        Some(*self.index.params())
    }
}

/// Full scan of the exact ball of radius `tau`.
#[derive(Debug, Clone, Copy)]
pub struct ExactBall {
    tau: f64,
}

impl ExactBall {
    pub fn new(tau: f64) -> Self {
        Self { tau }
    }
}

impl NeighborSearch for ExactBall {
    fn name(&self) -> &'static str {
        "exact-ball"
    }

    fn register(&mut self, _densities: &[f64]) -> Result<()> {
        Ok(())
    }

    fn candidate(&self, data: &Dataset, densities: &[f64], i: usize) -> Result<Option<usize>> {
        Ok(ball_argmax(data, densities, i, self.tau * self.tau))
    }
}

fn ball_argmax(data: &Dataset, densities: &[f64], i: usize, limit: f64) -> Option<usize> {
    let x = data.point(i);
    let mut best: Option<usize> = None;
    for j in 0..data.len() {
        if j == i || sq_dist(x, data.point(j)) > limit {
            continue;
        }
        if best.is_none_or(|b| denser(densities, j, b)) {
            best = Some(j);
        }
    }
    best
}

/// Directed forest over point ids; roots are the estimated modes.
#[derive(Debug, Clone, PartialEq)]
pub struct QuickShiftForest {
    pub parent: Vec<Option<usize>>,
    pub densities: DensityEstimate,
    /// Edge-length bound the forest was built with.
    pub edge_bound: f64,
}

impl QuickShiftForest {
    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn roots(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.parent[i].is_none()).collect()
    }
}

/// Wall-clock time spent in each pipeline stage.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StageTimings {
    pub build: Duration,
    pub kde: Duration,
    pub graph: Duration,
    pub label: Duration,
}

impl StageTimings {
    pub fn total(&self) -> Duration {
        self.build + self.kde + self.graph + self.label
    }
}

/// Output of a full clustering run.
#[derive(Debug, Clone)]
pub struct QuickShiftRun {
    pub forest: QuickShiftForest,
    pub labels: ClusterLabels,
    pub timings: StageTimings,
    pub lsh: Option<LshParams>,
}

/// Quick Shift with strategies resolved from registries by name.
#[derive(Clone)]
pub struct QuickShift {
    estimators: Registry<EstimatorFactory>,
    neighbors: Registry<NeighborFactory>,
}

impl Default for QuickShift {
    fn default() -> Self {
        Self {
            estimators: Registry::estimators(),
            neighbors: Registry::neighbor_searches(),
        }
    }
}

impl QuickShift {
    pub fn new(estimators: Registry<EstimatorFactory>, neighbors: Registry<NeighborFactory>) -> Self {
        Self { estimators, neighbors }
    }

    pub fn estimators(&self) -> &Registry<EstimatorFactory> {
        &self.estimators
    }

    pub fn neighbor_searches(&self) -> &Registry<NeighborFactory> {
        &self.neighbors
    }

    pub fn run(&self, data: &Dataset, cfg: &QuickShiftConfig) -> Result<QuickShiftRun> {
        cfg.validate()?;
        let kernel = cfg.kernel()?;
        let estimator = self.estimators.get(&cfg.estimator)?(cfg);
        let neighbor_factory = self.neighbors.get(&cfg.neighbors)?;

        let started = Instant::now();
        let mut search = neighbor_factory(data, cfg)?;
        let build = started.elapsed();

        let started = Instant::now();
        let densities = estimator.estimate(data, kernel, cfg.seed.child("kde", 0))?;
        let kde = started.elapsed();

        let started = Instant::now();
        search.register(&densities.values)?;
        let values = &densities.values;
        let parent = (0..data.len())
            .into_par_iter()
            .map(|i| Ok(search.candidate(data, values, i)?.filter(|&j| denser(values, j, i))))
            .collect::<Result<Vec<_>>>()?;
        let graph = started.elapsed();

        let forest = QuickShiftForest {
            parent,
            densities,
            edge_bound: cfg.edge_bound(),
        };
        let started = Instant::now();
        let labels = extract_labels(&forest)?;
        let label = started.elapsed();

        Ok(QuickShiftRun {
            forest,
            labels,
            timings: StageTimings {
                build,
                kde,
                graph,
                label,
            },
            lsh: search.lsh_params(),
        })
    }
}

/// Quick Shift over an LSH index with the configured density estimator.
pub fn lsh_quickshift(data: &Dataset, cfg: &QuickShiftConfig) -> Result<QuickShiftForest> {
    Ok(QuickShift::default().run(data, cfg)?.forest)
}

/// Quadratic reference: exact densities, exact `tau`-ball argmax.
pub fn exact_quickshift(data: &Dataset, h: f64, tau: f64) -> Result<QuickShiftForest> {
    Ok(exact_quickshift_timed(data, h, tau)?.0)
}

/// [`exact_quickshift`] with the density and linking stages timed.
pub fn exact_quickshift_timed(data: &Dataset, h: f64, tau: f64) -> Result<(QuickShiftForest, StageTimings)> {
    let kernel = KernelSpec::new(h)?;
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(invalid("tau", format!("must be positive, got {tau}")));
    }
    let started = Instant::now();
    let densities = exact_all(data, kernel, SeedSpec::default());
    let kde = started.elapsed();

    let started = Instant::now();
    let values = &densities.values;
    let limit = tau * tau;
    let parent = (0..data.len())
        .into_par_iter()
        .map(|i| ball_argmax(data, values, i, limit).filter(|&j| denser(values, j, i)))
        .collect();
    let graph = started.elapsed();

    let forest = QuickShiftForest {
        parent,
        densities,
        edge_bound: tau,
    };
    let timings = StageTimings {
        kde,
        graph,
        ..StageTimings::default()
    };
    Ok((forest, timings))
}

/// Root id of every point plus the number of distinct roots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterLabels {
    pub label: Vec<usize>,
    pub num_clusters: usize,
}

/// Follows parent chains to their roots, memoising along the way.
pub fn extract_labels(forest: &QuickShiftForest) -> Result<ClusterLabels> {
    const UNSEEN: usize = usize::MAX;
    const ON_PATH: usize = usize::MAX - 1;
    let n = forest.len();
    let mut label = vec![UNSEEN; n];
    let mut path = Vec::new();
    for start in 0..n {
        let mut cur = start;
        while label[cur] == UNSEEN {
            label[cur] = ON_PATH;
            path.push(cur);
            match forest.parent[cur] {
                Some(p) if p >= n => return Err(Error::Invariant(format!("parent {p} of {cur} out of range"))),
                Some(p) => cur = p,
                None => {
                    label[cur] = cur;
                    break;
                }
            }
        }
        if label[cur] == ON_PATH {
            return Err(Error::Invariant(format!("cycle through point {cur}")));
        }
        let root = label[cur];
        for id in path.drain(..) {
            label[id] = root;
        }
    }
    let num_clusters = forest.parent.iter().filter(|p| p.is_none()).count();
    Ok(ClusterLabels { label, num_clusters })
}

/// Roots of a forest with their coordinates and densities.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSet {
    pub ids: Vec<usize>,
    pub coords: Vec<Vec<f64>>,
    pub densities: Vec<f64>,
}

impl ModeSet {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Permutation of the modes by descending density, ties by id.
    pub fn order_by_density(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| {
            self.densities[b]
                .total_cmp(&self.densities[a])
                .then(self.ids[a].cmp(&self.ids[b]))
        });
        order
    }

    /// Coordinates of the `k` densest modes.
    pub fn top_coords(&self, k: usize) -> Vec<Vec<f64>> {
        self.order_by_density()
            .into_iter()
            .take(k)
            .map(|m| self.coords[m].clone())
            .collect()
    }
}

/// All roots in ascending id order.
pub fn extract_modes(forest: &QuickShiftForest, data: &Dataset) -> ModeSet {
    let ids = forest.roots();
    let coords = ids.iter().map(|&i| data.point(i).to_vec()).collect();
    let densities = ids.iter().map(|&i| forest.densities.values[i]).collect();
    ModeSet { ids, coords, densities }
}

/// True when no point of `region_a` shares a root with a point of `region_b`.
pub fn check_separation(labels: &ClusterLabels, region_a: &[usize], region_b: &[usize]) -> Result<bool> {
    let roots_a: std::collections::HashSet<usize> = region_a.iter().map(|&i| labels.label[i]).collect();
    let set_a: std::collections::HashSet<usize> = region_a.iter().copied().collect();
    if let Some(&shared) = region_b.iter().find(|i| set_a.contains(i)) {
        return Err(invalid("regions", format!("point {shared} appears in both regions")));
    }
    Ok(!region_b.iter().any(|&i| roots_a.contains(&labels.label[i])))
}

/// A broken forest property found by [`verify_forest`].
#[derive(Debug, Clone, PartialEq)]
pub enum ForestViolation {
    SelfLoop(usize),
    Cycle(usize),
    NotDenser { child: usize, parent: usize },
    EdgeTooLong { child: usize, parent: usize, length: f64 },
}

/// Exhaustive check of the forest invariants against the data.
pub fn verify_forest(data: &Dataset, forest: &QuickShiftForest) -> Vec<ForestViolation> {
    let mut out = Vec::new();
    let dens = &forest.densities.values;
    let limit = forest.edge_bound * forest.edge_bound;
    for (i, p) in forest.parent.iter().enumerate() {
        let Some(j) = *p else { continue };
        if j == i {
            out.push(ForestViolation::SelfLoop(i));
            continue;
        }
        if !denser(dens, j, i) {
            out.push(ForestViolation::NotDenser { child: i, parent: j });
        }
        let d2 = sq_dist(data.point(i), data.point(j));
        if d2 > limit {
            out.push(ForestViolation::EdgeTooLong {
                child: i,
                parent: j,
                length: d2.sqrt(),
            });
        }
    }
    // chains longer than n steps must revisit a node
    let n = forest.len();
    for start in 0..n {
        let mut cur = start;
        let mut steps = 0;
        while let Some(p) = forest.parent[cur] {
            steps += 1;
            if steps > n || p == cur {
                out.push(ForestViolation::Cycle(start));
                break;
            }
            cur = p;
        }
    }
    out
}
