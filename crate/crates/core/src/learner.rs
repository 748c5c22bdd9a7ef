//! Sign-based structure learning for MTP₂ Gaussian models.
//!
//! Starting from the complete graph, the learner sweeps levels `ℓ = 0, 1, …`.
//! At level `ℓ` it visits every ordered pair `(i, j)` that is still adjacent
//! and where `i` has at least `ℓ` neighbours besides `j`. For every subset
//! `S` of those neighbours with `|S| = ℓ` and every witness `k ∉ S ∪ {i, j}`
//! it draws a fresh batch of `M = ⌊N^γ⌋` rows and computes the empirical
//! partial correlation `ρ̂_{ij | S ∪ {k}}` on it. The first strictly negative
//! value deletes `i-j` and ends the work on that pair. The run stops at the
//! first level where no adjacent ordered pair qualifies.
//!
//! Visit order is fixed: ordered pairs lexicographically, subsets in
//! lexicographic combination order over the sorted neighbour list, witnesses
//! ascending. Neighbour lists are read when a pair is visited, so deletions
//! earlier in a sweep shrink later candidate sets.

use rand::seq::index;
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::{stream, Domain};
use crate::stat::{empirical_covariance, partial_correlation, ObservationMatrix};

/// Rate-optimal batch exponent.
pub const DEFAULT_GAMMA: f64 = 7.0 / 9.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SingularPolicy {
    /// Count the test as non-informative and keep the edge.
    #[default]
    Skip,
    Error,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnerConfig {
    pub gamma: f64,
    pub seed: u64,
    /// Highest level to sweep; `None` runs until the stopping rule fires.
    pub max_level: Option<usize>,
    pub centered: bool,
    pub singular_policy: SingularPolicy,
    /// Widens the accepted `gamma` range from `(3/4, 1)` to `(0, 1)`.
    pub unsafe_gamma: bool,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            gamma: DEFAULT_GAMMA,
            seed: 0,
            max_level: None,
            centered: false,
            singular_policy: SingularPolicy::Skip,
            unsafe_gamma: false,
        }
    }
}

impl LearnerConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        validate_gamma(self.gamma, self.unsafe_gamma)
    }
}

pub fn validate_gamma(gamma: f64, unsafe_gamma: bool) -> Result<()> {
    let (lo, hi) = if unsafe_gamma { (0.0, 1.0) } else { (0.75, 1.0) };
    if gamma > lo && gamma < hi {
        Ok(())
    } else if unsafe_gamma {
        Err(Error::invalid(format!("gamma {gamma} must lie in (0, 1)")))
    } else {
        Err(Error::invalid(format!(
            "gamma {gamma} must lie in (0.75, 1); pass the unsafe-gamma override to widen to (0, 1)"
        )))
    }
}

/// `⌊N^γ⌋`, capped at `N`. Values within `1e-9` (relative) of an integer
/// snap to it so exact powers such as `1024^0.8 = 256` are not lost to
/// rounding in `powf`.
pub fn batch_size(n: usize, gamma: f64) -> usize {
    let x = (n as f64).powf(gamma);
    let nearest = x.round();
    let m = if (x - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest
    } else {
        x.floor()
    };
    (m as usize).min(n)
}

/// Row indices of one batch, sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchDraw {
    indices: Vec<usize>,
}

impl BatchDraw {
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn m(&self) -> usize {
        self.indices.len()
    }
}

/// Draws `⌊n^γ⌋` distinct rows uniformly without replacement from the batch
/// stream of `seed` at `position`. `level` sets the minimum batch size
/// `level + 4`.
pub fn draw_batch(n: usize, gamma: f64, seed: u64, position: u64, level: usize) -> Result<BatchDraw> {
    draw_from(
        &stream(seed, Domain::Batch, 0),
        n,
        batch_size(n, gamma),
        position,
        level,
    )
}

fn draw_from(base: &ChaCha20Rng, n: usize, m: usize, position: u64, level: usize) -> Result<BatchDraw> {
    let required = (level + 4).max(2);
    if m < required {
        return Err(Error::BatchTooSmall {
            level,
            batch: m,
            required,
        });
    }
    let mut rng = base.clone();
    rng.set_stream(position);
    let mut indices = index::sample(&mut rng, n, m).into_vec();
    indices.sort_unstable();
    Ok(BatchDraw { indices })
}

/// Empirical partial correlation of `i, j` given `cond` on the batch rows.
pub fn ci_test(
    data: &ObservationMatrix,
    batch: &BatchDraw,
    i: usize,
    j: usize,
    cond: &[usize],
    centered: bool,
) -> Result<f64> {
    if cond.len() + 2 > batch.m().saturating_sub(1) {
        return Err(Error::invalid(format!(
            "testing {} variables needs a batch larger than {}",
            cond.len() + 2,
            batch.m()
        )));
    }
    let mut columns = Vec::with_capacity(cond.len() + 2);
    columns.push(i);
    columns.push(j);
    columns.extend_from_slice(cond);
    let cov = empirical_covariance(data, &columns, batch.indices(), centered)?;
    partial_correlation(&cov, i, j, cond)
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LearnRecord {
    pub tests_run: u64,
    pub edges_deleted_per_level: Vec<usize>,
    pub singular_skips: u64,
    /// First level that was not swept.
    pub final_level: usize,
}

fn has_eligible_pair(g: &Graph, level: usize) -> bool {
    // |adj_i \ {j}| = deg(i) - 1 for any neighbour j
    (0..g.p()).any(|i| g.degree(i) > level)
}

pub fn learn_structure(data: &ObservationMatrix, config: &LearnerConfig) -> Result<(Graph, LearnRecord)> {
    config.validate()?;
    let n = data.n_rows();
    let p = data.n_cols();
    if n < 2 {
        return Err(Error::invalid("structure learning needs at least two observations"));
    }
    let m = batch_size(n, config.gamma);
    let base = stream(config.seed, Domain::Batch, 0);

    let mut graph = Graph::complete(p)?;
    let mut record = LearnRecord::default();
    let mut level = 0;
    let mut cond = Vec::with_capacity(p);
    loop {
        if config.max_level.is_some_and(|cap| level > cap) || !has_eligible_pair(&graph, level) {
            break;
        }
        let mut deleted = 0;
        for i in 0..p {
            for j in 0..p {
                if i == j || !graph.has_edge(i, j) {
                    continue;
                }
                let candidates: Vec<usize> = graph.neighbors(i).iter().copied().filter(|&v| v != j).collect();
                if candidates.len() < level {
                    continue;
                }
                let mut subsets = Combinations::new(candidates.len(), level);
                'pair: while let Some(picks) = subsets.next_combination() {
                    for k in 0..p {
                        if k == i || k == j || picks.iter().any(|&a| candidates[a] == k) {
                            continue;
                        }
                        let batch = draw_from(&base, n, m, record.tests_run, level)?;
                        record.tests_run += 1;
                        cond.clear();
                        cond.extend(picks.iter().map(|&a| candidates[a]));
                        cond.push(k);
                        match ci_test(data, &batch, i, j, &cond, config.centered) {
                            Ok(rho) if rho < 0.0 => {
                                graph.remove_edge(i, j);
                                deleted += 1;
                                break 'pair;
                            }
                            Ok(_) => {}
                            Err(Error::Singular { .. }) if config.singular_policy == SingularPolicy::Skip => {
                                record.singular_skips += 1;
                            }
                            Err(e) => return Err(e),
                        }
                    }
                }
            }
        }
        record.edges_deleted_per_level.push(deleted);
        level += 1;
    }
    record.final_level = level;
    Ok((graph, record))
}

/// Lexicographic `r`-combinations of `0..n`.
struct Combinations {
    n: usize,
    picks: Vec<usize>,
    started: bool,
}

impl Combinations {
    fn new(n: usize, r: usize) -> Self {
        Self {
            n,
            picks: (0..r).collect(),
            started: false,
        }
    }

    fn next_combination(&mut self) -> Option<&[usize]> {
        let r = self.picks.len();
        if r > self.n {
            return None;
        }
        if !self.started {
            self.started = true;
            return Some(&self.picks);
        }
        let mut pos = r;
        while pos > 0 {
            pos -= 1;
            if self.picks[pos] < self.n - r + pos {
                self.picks[pos] += 1;
                for q in (pos + 1)..r {
                    self.picks[q] = self.picks[q - 1] + 1;
                }
                return Some(&self.picks);
            }
        }
        None
    }
}
