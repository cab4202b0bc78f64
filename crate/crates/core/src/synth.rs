//! Seeded synthetic ranking data.
//!
//! Labels are allocated to match the requested class proportions exactly (up
//! to rounding) and then shuffled across queries. The first few features are
//! informative: class `c` draws from `[c, c + 0.8)` plus Gaussian noise, so
//! with zero noise the classes are perfectly separable. The remaining
//! features are uniform distractors.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::data::{Dataset, ParsedLine, MAX_LABEL};
use crate::error::{Error, Result};

/// Share of relevant documents per grade 1..=4, with grade 1 at 48% and
/// grade 4 at 2.5%.
pub const RELEVANT_GRADE_SHARES: [f64; 4] = [0.48, 0.295, 0.2, 0.025];

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub queries: usize,
    pub docs_per_query: usize,
    pub classes: usize,
    /// Class proportions, one per class. Empty means uniform.
    pub skew: Vec<f64>,
    /// Standard deviation of the noise added to informative features.
    pub noise: f64,
    pub num_features: usize,
    pub informative: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            queries: 5,
            docs_per_query: 40,
            classes: 2,
            skew: Vec::new(),
            noise: 0.0,
            num_features: 5,
            informative: 2,
            seed: 42,
        }
    }
}

/// Five-class proportions: `non_relevant` for grade 0, the rest split by
/// [`RELEVANT_GRADE_SHARES`].
pub fn graded_skew(non_relevant: f64) -> Vec<f64> {
    let mut skew = vec![non_relevant];
    skew.extend(
        RELEVANT_GRADE_SHARES
            .iter()
            .map(|s| s * (1.0 - non_relevant)),
    );
    skew
}

impl SynthConfig {
    pub fn proportions(&self) -> Result<Vec<f64>> {
        if self.classes < 2 || self.classes > (MAX_LABEL + 1) as usize {
            return Err(Error::InvalidConfig(format!(
                "classes must be in 2..={}, got {}",
                MAX_LABEL + 1,
                self.classes
            )));
        }
        if self.skew.is_empty() {
            return Ok(vec![1.0 / self.classes as f64; self.classes]);
        }
        if self.skew.len() != self.classes {
            return Err(Error::InvalidConfig(format!(
                "skew has {} entries for {} classes",
                self.skew.len(),
                self.classes
            )));
        }
        if self.skew.iter().any(|&p| p < 0.0 || !p.is_finite()) {
            return Err(Error::InvalidConfig(
                "skew entries must be non-negative".into(),
            ));
        }
        let total: f64 = self.skew.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidConfig("skew sums to zero".into()));
        }
        Ok(self.skew.iter().map(|p| p / total).collect())
    }

    fn validate(&self) -> Result<()> {
        if self.queries == 0 || self.docs_per_query == 0 {
            return Err(Error::InvalidConfig(
                "queries and docs per query must be positive".into(),
            ));
        }
        if self.num_features == 0 {
            return Err(Error::InvalidConfig("need at least one feature".into()));
        }
        if self.noise.is_nan() || self.noise < 0.0 {
            return Err(Error::InvalidConfig("noise must be non-negative".into()));
        }
        Ok(())
    }
}

/// Largest-remainder allocation of `total` items to `shares`.
fn allocate(total: usize, shares: &[f64]) -> Vec<usize> {
    let raw: Vec<f64> = shares.iter().map(|p| p * total as f64).collect();
    let mut counts: Vec<usize> = raw.iter().map(|r| r.floor() as usize).collect();
    let mut left = total - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..shares.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = raw[a] - raw[a].floor();
        let fb = raw[b] - raw[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &c in order.iter().cycle() {
        if left == 0 {
            break;
        }
        counts[c] += 1;
        left -= 1;
    }
    counts
}

pub fn generate(config: &SynthConfig) -> Result<Dataset> {
    config.validate()?;
    let shares = config.proportions()?;
    let total = config.queries * config.docs_per_query;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut labels: Vec<u32> = allocate(total, &shares)
        .into_iter()
        .enumerate()
        .flat_map(|(c, n)| std::iter::repeat_n(c as u32, n))
        .collect();
    labels.shuffle(&mut rng);

    let noise = Normal::new(0.0, config.noise).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let informative = config.informative.min(config.num_features);
    let mut lines = Vec::with_capacity(total);
    for (i, &label) in labels.iter().enumerate() {
        let features = (0..config.num_features)
            .map(|f| {
                let v = if f < informative {
                    label as f64 + 0.8 * rng.random::<f64>() + noise.sample(&mut rng)
                } else {
                    rng.random::<f64>()
                };
                (f, v)
            })
            .collect();
        lines.push(ParsedLine {
            label,
            query_id: (i / config.docs_per_query + 1).to_string(),
            features,
        });
    }
    Dataset::from_parsed(lines)
}
