//! Name-keyed registries of interchangeable pipeline strategies.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::geometry::Dataset;
use crate::kde::{DensityEstimator, ExactEstimator, HashingEstimator};
use crate::quickshift::{ExactBall, LshNeighbors, NeighborSearch, QuickShiftConfig};

pub type EstimatorFactory = fn(&QuickShiftConfig) -> Box<dyn DensityEstimator>;
pub type NeighborFactory = fn(&Dataset, &QuickShiftConfig) -> Result<Box<dyn NeighborSearch>>;

#[derive(Clone)]
pub struct Registry<F> {
    entries: BTreeMap<String, F>,
}

impl<F> Default for Registry<F> {
    fn default() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }
}

impl<F> Registry<F> {
    pub fn register(&mut self, name: impl Into<String>, factory: F) -> Option<F> {
        self.entries.insert(name.into(), factory)
    }

    pub fn get(&self, name: &str) -> Result<&F> {
        self.entries
            .get(name)
            .ok_or_else(|| Error::UnknownStrategy(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }
}

impl Registry<EstimatorFactory> {
    /// `exact` and `hbe`.
    pub fn estimators() -> Self {
        let mut r = Self::default();
        r.register("exact", (|_| Box::new(ExactEstimator)) as EstimatorFactory);
        r.register(
            "hbe",
            (|cfg| {
                Box::new(HashingEstimator {
                    epsilon: cfg.epsilon,
                    mu: cfg.mu,
                })
            }) as EstimatorFactory,
        );
        r
    }
}

impl Registry<NeighborFactory> {
    /// `lsh` and the quadratic `exact-ball` scan.
    pub fn neighbor_searches() -> Self {
        let mut r = Self::default();
        r.register(
            "lsh",
            (|data, cfg| Ok(Box::new(LshNeighbors::build(data, cfg)?) as Box<dyn NeighborSearch>)) as NeighborFactory,
        );
        r.register(
            "exact-ball",
            (|_, cfg| Ok(Box::new(ExactBall::new(cfg.edge_bound())) as Box<dyn NeighborSearch>)) as NeighborFactory,
        );
        r
    }
}
