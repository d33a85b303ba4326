//! Gaussian kernel density estimation.
//!
//! [`exact_kde`] is the quadratic baseline. [`HbeEstimator`] is a hashing-based
//! estimator: each repetition hashes the query with a p-stable hash, samples a
//! uniform point `y` from the query's bucket and returns
//! `(|B| / n) * k(q, y) / P[y collides with q]`, which is unbiased for the
//! kernel density. Repetitions are combined with a median of means.
//!
//! All densities use the unnormalised form `K_X(q) = (1/n) sum_y k(q, y)`;
//! comparisons between points are unaffected by the `h^-d` normaliser.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::geometry::{sq_dist, Dataset, SeedSpec};
use crate::lsh::{PStableHash, Partition};

/// Gaussian kernel `exp(-|x - y|^2 / sigma^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    sigma: f64,
}

impl KernelSpec {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(invalid("sigma", format!("bandwidth must be positive, got {sigma}")));
        }
        Ok(Self { sigma })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    #[inline]
    pub(crate) fn eval_sq(&self, sq: f64) -> f64 {
        (-sq / (self.sigma * self.sigma)).exp()
    }
}

pub fn gaussian_kernel(x: &[f64], y: &[f64], spec: KernelSpec) -> Result<f64> {
    Ok(spec.eval_sq(crate::geometry::squared_euclidean(x, y)?))
}

/// Mean kernel value between `q` and every point of `data`.
pub fn exact_kde(data: &Dataset, q: &[f64], spec: KernelSpec) -> Result<f64> {
    data.check_query(q)?;
    Ok(exact_kde_unchecked(data, q, spec))
}

fn exact_kde_unchecked(data: &Dataset, q: &[f64], spec: KernelSpec) -> f64 {
    let sum: f64 = data.points().map(|y| spec.eval_sq(sq_dist(q, y))).sum();
    sum / data.len() as f64
}

/// Which estimator produced a set of densities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimatorKind {
    Exact,
    Hbe,
}

impl EstimatorKind {
    pub fn name(&self) -> &'static str {
        match self {
            EstimatorKind::Exact => "exact",
            EstimatorKind::Hbe => "hbe",
        }
    }
}

impl std::str::FromStr for EstimatorKind {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(EstimatorKind::Exact),
            "hbe" => Ok(EstimatorKind::Hbe),
            other => Err(crate::error::Error::UnknownStrategy(other.to_string())),
        }
    }
}

/// Per-point density values plus how they were obtained.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityEstimate {
    pub values: Vec<f64>,
    pub estimator: EstimatorKind,
    pub epsilon: f64,
    pub seed: u64,
}

/// Sampling budget of the hashing-based estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HbeParams {
    pub epsilon: f64,
    /// Density floor below which no relative-error guarantee is claimed.
    pub mu: f64,
    /// Samples averaged per group.
    pub means: usize,
    /// Groups whose means are combined by a median. Always odd.
    pub medians: usize,
    /// Projections concatenated per hash.
    pub concat: usize,
    /// Bucket width as a multiple of the kernel bandwidth.
    pub width_factor: f64,
}

pub const DEFAULT_MEDIANS: usize = 9;
/// Per-sample relative standard deviation the budget cap is sized for.
pub const MEANS_SCALE: f64 = 4.0;
pub const DEFAULT_HBE_CONCAT: usize = 2;
pub const DEFAULT_HBE_WIDTH_FACTOR: f64 = 2.0;

impl HbeParams {
    /// `means = ceil(3 / (eps^2 sqrt(mu)))`, capped at `n` and at
    /// `ceil(MEANS_SCALE / eps^2)` so the per-query cost does not grow with `n`.
    /// `mu` defaults to `1/n` (`1/2` for a single point).
    pub fn new(epsilon: f64, mu: Option<f64>, n: usize) -> Result<Self> {
        let mu = mu.unwrap_or(1.0 / n.max(2) as f64);
        check_unit("epsilon", epsilon)?;
        check_unit("mu", mu)?;
        let raw = (3.0 / (epsilon * epsilon * mu.sqrt())).ceil() as usize;
        let cap = (MEANS_SCALE / (epsilon * epsilon)).ceil() as usize;
        let means = raw.min(n).min(cap).max(1);
        Ok(Self {
            epsilon,
            mu,
            means,
            medians: DEFAULT_MEDIANS,
            concat: DEFAULT_HBE_CONCAT,
            width_factor: DEFAULT_HBE_WIDTH_FACTOR,
        })
    }

    pub fn validate(&self) -> Result<()> {
        check_unit("epsilon", self.epsilon)?;
        check_unit("mu", self.mu)?;
        if self.means == 0 {
            return Err(invalid("means", "need at least one sample per group"));
        }
        if self.medians == 0 || self.medians.is_multiple_of(2) {
            return Err(invalid("medians", format!("must be odd, got {}", self.medians)));
        }
        if self.concat == 0 {
            return Err(invalid("concat", "need at least one projection"));
        }
        if !(self.width_factor > 0.0 && self.width_factor.is_finite()) {
            return Err(invalid("width_factor", "must be positive"));
        }
        Ok(())
    }

    pub fn repetitions(&self) -> usize {
        self.means * self.medians
    }
}

fn check_unit(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("must lie in (0, 1), got {v}")))
    }
}

/// Hashing-based KDE with `means * medians` independent hash partitions.
#[derive(Debug, Clone)]
pub struct HbeEstimator {
    kernel: KernelSpec,
    params: HbeParams,
    seed: SeedSpec,
    tables: Vec<(PStableHash, Partition)>,
}

fn table_hash(dim: usize, kernel: KernelSpec, params: &HbeParams, seed: SeedSpec, t: usize) -> PStableHash {
    let mut rng = seed.rng("hbe-table", t as u64);
    PStableHash::sample(dim, params.concat, params.width_factor * kernel.sigma(), &mut rng)
}

impl HbeEstimator {
    pub fn build(data: &Dataset, kernel: KernelSpec, params: HbeParams, seed: SeedSpec) -> Result<Self> {
        params.validate()?;
        let tables = (0..params.repetitions())
            .into_par_iter()
            .map(|t| {
                let hash = table_hash(data.dim(), kernel, &params, seed, t);
                let part = Partition::build(&hash, data);
                (hash, part)
            })
            .collect();
        Ok(Self {
            kernel,
            params,
            seed,
            tables,
        })
    }

    pub fn params(&self) -> &HbeParams {
        &self.params
    }

    pub fn tables(&self) -> &[(PStableHash, Partition)] {
        &self.tables
    }

    /// One importance-sampling draw from table `t`.
    pub fn single_sample<R: Rng + ?Sized>(&self, data: &Dataset, q: &[f64], t: usize, rng: &mut R) -> f64 {
        let (hash, part) = &self.tables[t];
        match part.bucket_of_key(hash.key(q)) {
            Some(b) => sample_bucket(data, q, part.bucket(b), hash, self.kernel, rng),
            None => 0.0,
        }
    }

    /// Median-of-means estimate using `rng` for the in-bucket draws.
    pub fn estimate_with<R: Rng + ?Sized>(&self, data: &Dataset, q: &[f64], rng: &mut R) -> Result<f64> {
        data.check_query(q)?;
        let mut sums = vec![0.0; self.params.medians];
        for t in 0..self.tables.len() {
            sums[t / self.params.means] += self.single_sample(data, q, t, rng);
        }
        Ok(median_of_sums(sums, self.params.means))
    }

    /// Estimate for query number `stream`; the stream index picks the
    /// in-bucket sampling sequence.
    pub fn estimate(&self, data: &Dataset, q: &[f64], stream: u64) -> Result<f64> {
        let mut rng = self.seed.rng("hbe-q", stream);
        self.estimate_with(data, q, &mut rng)
    }
}

#[inline]
fn sample_bucket<R: Rng + ?Sized>(
    data: &Dataset,
    q: &[f64],
    bucket: &[u32],
    hash: &PStableHash,
    kernel: KernelSpec,
    rng: &mut R,
) -> f64 {
    let y = bucket[rng.random_range(0..bucket.len())] as usize;
    let sq = sq_dist(q, data.point(y));
    let p = hash.collision_probability(sq.sqrt());
    let value = bucket.len() as f64 / data.len() as f64 * kernel.eval_sq(sq) / p;
    value.max(0.0)
}

fn median_of_sums(mut sums: Vec<f64>, means: usize) -> f64 {
    for s in &mut sums {
        *s /= means as f64;
    }
    sums.sort_by(f64::total_cmp);
    sums[sums.len() / 2]
}

/// Densities at every data point with the requested estimator.
///
/// The hashing path streams over tables so that only one partition is alive
/// at a time; point `i` draws from its own stream `derive(seed, "hbe-q", i)`,
/// which makes the output identical to calling [`HbeEstimator::estimate`]
/// with `stream = i`, whatever the thread count.
pub fn estimate_all(
    data: &Dataset,
    kernel: KernelSpec,
    kind: EstimatorKind,
    epsilon: f64,
    mu: Option<f64>,
    seed: SeedSpec,
) -> Result<DensityEstimate> {
    match kind {
        EstimatorKind::Exact => Ok(exact_all(data, kernel, seed)),
        EstimatorKind::Hbe => {
            let params = HbeParams::new(epsilon, mu, data.len())?;
            hbe_all(data, kernel, params, seed)
        }
    }
}

pub fn exact_all(data: &Dataset, kernel: KernelSpec, seed: SeedSpec) -> DensityEstimate {
    let values = (0..data.len())
        .into_par_iter()
        .map(|i| exact_kde_unchecked(data, data.point(i), kernel))
        .collect();
    DensityEstimate {
        values,
        estimator: EstimatorKind::Exact,
        epsilon: 0.0,
        seed: seed.master_seed,
    }
}

pub fn hbe_all(data: &Dataset, kernel: KernelSpec, params: HbeParams, seed: SeedSpec) -> Result<DensityEstimate> {
    params.validate()?;
    let n = data.len();
    let mut states: Vec<(ChaCha8Rng, Vec<f64>)> = (0..n)
        .map(|i| (seed.rng("hbe-q", i as u64), vec![0.0; params.medians]))
        .collect();
    for t in 0..params.repetitions() {
        let hash = table_hash(data.dim(), kernel, &params, seed, t);
        let part = Partition::build(&hash, data);
        let group = t / params.means;
        states.par_iter_mut().enumerate().for_each(|(i, (rng, sums))| {
            let bucket = part.bucket(part.bucket_of_point(i));
            sums[group] += sample_bucket(data, data.point(i), bucket, &hash, kernel, rng);
        });
    }
    let values = states
        .into_iter()
        .map(|(_, sums)| median_of_sums(sums, params.means))
        .collect();
    Ok(DensityEstimate {
        values,
        estimator: EstimatorKind::Hbe,
        epsilon: params.epsilon,
        seed: seed.master_seed,
    })
}

/// A density estimator selectable by name.
pub trait DensityEstimator: Send + Sync {
    fn name(&self) -> &'static str;

    fn estimate(&self, data: &Dataset, kernel: KernelSpec, seed: SeedSpec) -> Result<DensityEstimate>;
}

/// Quadratic exact KDE.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactEstimator;

impl DensityEstimator for ExactEstimator {
    fn name(&self) -> &'static str {
        "exact"
    }

    fn estimate(&self, data: &Dataset, kernel: KernelSpec, seed: SeedSpec) -> Result<DensityEstimate> {
        Ok(exact_all(data, kernel, seed))
    }
}

/// Hashing-based estimator with budget derived from `epsilon` and `mu`.
#[derive(Debug, Clone, Copy)]
pub struct HashingEstimator {
    pub epsilon: f64,
    pub mu: Option<f64>,
}

impl DensityEstimator for HashingEstimator {
    fn name(&self) -> &'static str {
        "hbe"
    }

    fn estimate(&self, data: &Dataset, kernel: KernelSpec, seed: SeedSpec) -> Result<DensityEstimate> {
        let params = HbeParams::new(self.epsilon, self.mu, data.len())?;
        hbe_all(data, kernel, params, seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    const E_M1: f64 = 0.367_879_441_171_442_3;
    const E_M4: f64 = 0.018_315_638_888_734_18;

    fn spec(sigma: f64) -> KernelSpec {
        KernelSpec::new(sigma).unwrap()
    }

    #[test]
    fn kernel_values() {
        let s = spec(2.0);
        assert_eq!(gaussian_kernel(&[1.0, 1.0], &[1.0, 1.0], s).unwrap(), 1.0);
        assert!((gaussian_kernel(&[0.0, 0.0], &[2.0, 0.0], s).unwrap() - E_M1).abs() < 1e-15);
        assert!((gaussian_kernel(&[0.0, 0.0], &[0.0, 4.0], s).unwrap() - E_M4).abs() < 1e-15);
        assert!(gaussian_kernel(&[0.0], &[0.0, 1.0], s).is_err());
    }

    #[test]
    fn kernel_spec_rejects_bad_sigma() {
        assert!(KernelSpec::new(0.0).is_err());
        assert!(KernelSpec::new(-1.0).is_err());
        assert!(KernelSpec::new(f64::NAN).is_err());
    }

    #[test]
    fn exact_kde_small_cases() {
        let s = spec(1.0);
        let single = Dataset::from_rows(&[[0.3, 0.4]]).unwrap();
        assert_eq!(exact_kde(&single, &[0.3, 0.4], s).unwrap(), 1.0);
        let pair = Dataset::from_rows(&[[0.0, 0.0], [1.0, 0.0]]).unwrap();
        let v = exact_kde(&pair, &[0.0, 0.0], s).unwrap();
        assert!((v - 0.683_939_720_585_721).abs() < 1e-12);
    }

    #[test]
    fn exact_kde_matches_double_loop() {
        let mut rng = SeedSpec::new(1).rng("kde", 0);
        let rows: Vec<Vec<f64>> = (0..100)
            .map(|_| (0..3).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let data = Dataset::from_rows(&rows).unwrap();
        let s = spec(0.8);
        for q in rows.iter().take(20) {
            let mut acc = 0.0;
            for row in &rows {
                let mut d2 = 0.0;
                for k in 0..3 {
                    d2 += (q[k] - row[k]).powi(2);
                }
                acc += (-d2 / 0.64).exp();
            }
            let expected = acc / 100.0;
            let got = exact_kde(&data, q, s).unwrap();
            assert!(((got - expected) / expected).abs() < 1e-12);
        }
    }

    #[test]
    fn duplicate_of_query_never_lowers_density() {
        let mut rng = SeedSpec::new(2).rng("kde", 0);
        let mut rows: Vec<Vec<f64>> = (0..50)
            .map(|_| vec![rng.sample(StandardNormal), rng.sample(StandardNormal)])
            .collect();
        let q = rows[7].clone();
        let before = exact_kde(&Dataset::from_rows(&rows).unwrap(), &q, spec(0.5)).unwrap();
        rows.push(q.clone());
        let after = exact_kde(&Dataset::from_rows(&rows).unwrap(), &q, spec(0.5)).unwrap();
        assert!(after >= before);
    }

    #[test]
    fn hbe_params_budget() {
        let p = HbeParams::new(0.2, Some(0.01), 2000).unwrap();
        assert_eq!(p.means, 100);
        let wide_mu = HbeParams::new(0.5, Some(0.9), 2000).unwrap();
        assert_eq!(wide_mu.means, 13);
        assert_eq!(p.medians, 9);
        let small = HbeParams::new(0.2, Some(0.01), 40).unwrap();
        assert_eq!(small.means, 40);
        let default_mu = HbeParams::new(0.5, None, 100).unwrap();
        assert_eq!(default_mu.mu, 0.01);
        assert!(HbeParams::new(0.0, None, 10).is_err());
        assert!(HbeParams::new(0.5, Some(1.0), 10).is_err());
        let mut even = p;
        even.medians = 4;
        assert!(even.validate().is_err());
    }

    #[test]
    fn hbe_singleton_is_exact() {
        let data = Dataset::from_rows(&[[1.0, -1.0]]).unwrap();
        let est = HbeEstimator::build(
            &data,
            spec(0.5),
            HbeParams::new(0.3, None, 1).unwrap(),
            SeedSpec::new(4),
        )
        .unwrap();
        for (_, part) in est.tables() {
            assert_eq!(part.num_buckets(), 1);
        }
        assert_eq!(est.estimate(&data, &[1.0, -1.0], 0).unwrap(), 1.0);
        let all = estimate_all(&data, spec(0.5), EstimatorKind::Hbe, 0.3, None, SeedSpec::new(4)).unwrap();
        assert_eq!(all.values, vec![1.0]);
        let exact = estimate_all(&data, spec(0.5), EstimatorKind::Exact, 0.3, None, SeedSpec::new(4)).unwrap();
        assert_eq!(exact.values, vec![1.0]);
    }

    fn cloud(n: usize, seed: u64) -> Dataset {
        let mut rng = SeedSpec::new(seed).rng("cloud", 0);
        let rows: Vec<[f64; 2]> = (0..n)
            .map(|_| [rng.sample(StandardNormal), rng.sample(StandardNormal)])
            .collect();
        Dataset::from_rows(&rows).unwrap()
    }

    #[test]
    fn hbe_build_is_deterministic() {
        let data = cloud(200, 5);
        let params = HbeParams::new(0.3, Some(0.05), 200).unwrap();
        let a = HbeEstimator::build(&data, spec(0.5), params, SeedSpec::new(9)).unwrap();
        let b = HbeEstimator::build(&data, spec(0.5), params, SeedSpec::new(9)).unwrap();
        assert_eq!(a.tables(), b.tables());
    }

    #[test]
    fn streaming_matches_stored_tables() {
        let data = cloud(150, 6);
        let kernel = spec(0.6);
        let mut params = HbeParams::new(0.3, Some(0.05), 150).unwrap();
        params.means = 7;
        let seed = SeedSpec::new(12);
        let est = HbeEstimator::build(&data, kernel, params, seed).unwrap();
        let streamed = hbe_all(&data, kernel, params, seed).unwrap();
        for i in 0..data.len() {
            assert_eq!(
                streamed.values[i],
                est.estimate(&data, data.point(i), i as u64).unwrap()
            );
        }
    }

    #[test]
    fn exact_mode_is_pointwise_exact_kde() {
        let data = cloud(80, 7);
        let kernel = spec(0.4);
        let all = estimate_all(&data, kernel, EstimatorKind::Exact, 0.1, None, SeedSpec::new(0)).unwrap();
        for i in 0..data.len() {
            assert_eq!(all.values[i], exact_kde(&data, data.point(i), kernel).unwrap());
        }
    }

    #[test]
    fn single_sample_is_unbiased() {
        let mut rng = SeedSpec::new(13).rng("uniform", 0);
        let rows: Vec<[f64; 2]> = (0..1000)
            .map(|_| [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)])
            .collect();
        let data = Dataset::from_rows(&rows).unwrap();
        let kernel = spec(0.2);
        let q = [0.5, 0.5];
        let truth = exact_kde(&data, &q, kernel).unwrap();
        let mut params = HbeParams::new(0.5, Some(0.5), 1000).unwrap();
        params.means = 100;
        params.medians = 1;
        let est = HbeEstimator::build(&data, kernel, params, SeedSpec::new(14)).unwrap();
        let mut draw_rng = SeedSpec::new(14).rng("draw", 0);
        let samples: Vec<f64> = (0..100)
            .map(|t| est.single_sample(&data, &q, t, &mut draw_rng))
            .collect();
        let mean = samples.iter().sum::<f64>() / 100.0;
        let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / 99.0;
        let se = (var / 100.0).sqrt();
        assert!((mean - truth).abs() <= 3.0 * se, "mean {mean} truth {truth} se {se}");
    }

    #[test]
    fn estimator_trait_objects() {
        let data = cloud(60, 8);
        let kernel = spec(0.5);
        let estimators: Vec<Box<dyn DensityEstimator>> = vec![
            Box::new(ExactEstimator),
            Box::new(HashingEstimator { epsilon: 0.3, mu: None }),
        ];
        for e in estimators {
            let d = e.estimate(&data, kernel, SeedSpec::new(3)).unwrap();
            assert_eq!(d.values.len(), 60);
            assert!(d.values.iter().all(|v| v.is_finite() && *v >= 0.0));
            assert_eq!(d.estimator.name(), e.name());
        }
    }
}
