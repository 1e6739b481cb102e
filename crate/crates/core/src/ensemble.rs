//! Wishart Orthogonal Ensemble baselines and a one-factor synthetic
//! generator.
//!
//! WOE correlation matrices (Pearson correlations of i.i.d. Gaussian
//! return panels) are the maximal-disorder reference: their
//! eigen-entropy tracks `ln N`. The one-factor generator
//! `r_i(t) = b f(t) + sqrt(1 - b^2) eps_i(t)` produces a tunable mean
//! correlation of about `b^2` and drives the scaling tests.
//!
//! Randomness is drawn from per-replicate ChaCha streams keyed by
//! `(seed, replicate_index)`, so replicates are independent,
//! parallel-safe and bit-reproducible regardless of thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::corrlab::correlation_matrix;
use crate::matrix::{compensated_sum, RectMatrix, SquareMatrix};
use crate::phase::eigen_entropy;
use crate::spectral::{abs_power, perron_centrality};

#[derive(Debug, Error)]
pub enum EnsembleError {
    #[error("ensemble needs n_assets >= 2, n_obs >= 2 and replicates >= 1")]
    BadSpec,
    #[error("factor loading must lie in [0, 1), got {0}")]
    BadLoading(f64),
    #[error("replicate index {index} is out of range for {replicates} replicates")]
    ReplicateOutOfRange { index: usize, replicates: usize },
}

/// Size and reproducibility parameters of an ensemble run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EnsembleSpec {
    pub n_assets: usize,
    pub n_obs: usize,
    pub replicates: usize,
    pub seed: u64,
}

impl EnsembleSpec {
    pub fn new(
        n_assets: usize,
        n_obs: usize,
        replicates: usize,
        seed: u64,
    ) -> Result<Self, EnsembleError> {
        if n_assets < 2 || n_obs < 2 || replicates < 1 {
            return Err(EnsembleError::BadSpec);
        }
        Ok(Self { n_assets, n_obs, replicates, seed })
    }

    /// Square WOE by default: `n_obs = n_assets` (Q = 1).
    pub fn square(n_assets: usize, replicates: usize, seed: u64) -> Result<Self, EnsembleError> {
        Self::new(n_assets, n_assets, replicates, seed)
    }
}

/// Deterministic per-replicate stream: one ChaCha generator per
/// `(seed, replicate_index)` pair.
fn replicate_rng(seed: u64, replicate_index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate_index as u64);
    rng
}

fn standard_normal_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> RectMatrix {
    let mut m = RectMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m.set(i, j, rng.sample::<f64, _>(StandardNormal));
        }
    }
    m
}

/// One WOE draw: the Pearson correlation matrix of `n_assets` i.i.d.
/// standard Gaussian return rows of length `n_obs`.
pub fn woe_sample(spec: &EnsembleSpec, replicate_index: usize) -> SquareMatrix {
    let mut rng = replicate_rng(spec.seed, replicate_index);
    let returns = standard_normal_matrix(&mut rng, spec.n_assets, spec.n_obs);
    correlation_matrix(&returns).0
}

/// One one-factor draw: `r_i(t) = b f(t) + sqrt(1-b^2) eps_i(t)` with
/// independent standard Gaussians, then the Pearson correlation of the
/// sample. Expected off-diagonal correlation is `b^2`.
pub fn one_factor_sample(
    n_assets: usize,
    n_obs: usize,
    loading: f64,
    seed: u64,
    replicate_index: usize,
) -> Result<SquareMatrix, EnsembleError> {
    Ok(correlation_matrix(&one_factor_returns(n_assets, n_obs, loading, seed, replicate_index)?).0)
}

/// The raw one-factor return rows behind [`one_factor_sample`]; the
/// synthetic-panel builders reuse them.
pub fn one_factor_returns(
    n_assets: usize,
    n_obs: usize,
    loading: f64,
    seed: u64,
    replicate_index: usize,
) -> Result<RectMatrix, EnsembleError> {
    if !(0.0..1.0).contains(&loading) {
        return Err(EnsembleError::BadLoading(loading));
    }
    let mut rng = replicate_rng(seed, replicate_index);
    let factor: Vec<f64> = (0..n_obs).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let resid = (1.0 - loading * loading).sqrt();
    let mut m = RectMatrix::zeros(n_assets, n_obs);
    for i in 0..n_assets {
        for (t, &f) in factor.iter().enumerate() {
            let eps: f64 = rng.sample(StandardNormal);
            m.set(i, t, loading * f + resid * eps);
        }
    }
    Ok(m)
}

/// Ensemble-averaged disorder reference.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselineReport {
    pub n_assets: usize,
    pub n_obs: usize,
    pub replicates: usize,
    pub seed: u64,
    pub n_power: u32,
    pub mean_h: f64,
    pub std_h: f64,
    /// Eigen-centralities sorted descending per replicate, then averaged
    /// rank-wise.
    pub mean_centralities: Vec<f64>,
}

/// Entropy of one sampled correlation matrix under the `|c|^n` transform.
pub fn sample_entropy(corr: &SquareMatrix, n_power: u32) -> f64 {
    let a = abs_power(corr, n_power);
    let c = perron_centrality(&a).expect("sampled correlation matrices are nonzero");
    eigen_entropy(&c)
}

/// Mean and spread of the eigen-entropy over `R` WOE replicates plus
/// the rank-averaged sorted centrality curve. Replicates run in
/// parallel; the reduction order is fixed, so the report is
/// bit-identical for a fixed spec regardless of thread count.
pub fn baseline(spec: &EnsembleSpec, n_power: u32) -> BaselineReport {
    let per_replicate: Vec<(f64, Vec<f64>)> = (0..spec.replicates)
        .into_par_iter()
        .map(|r| {
            let corr = woe_sample(spec, r);
            let a = abs_power(&corr, n_power);
            let c = perron_centrality(&a).expect("WOE correlation matrices are nonzero");
            let h = eigen_entropy(&c);
            let mut sorted = c.scores().to_vec();
            sorted.sort_by(|x, y| y.partial_cmp(x).expect("centralities are finite"));
            (h, sorted)
        })
        .collect();

    let r = spec.replicates as f64;
    let mean_h = compensated_sum(per_replicate.iter().map(|(h, _)| *h)) / r;
    let var = compensated_sum(per_replicate.iter().map(|(h, _)| {
        let d = h - mean_h;
        d * d
    })) / r;
    let mut mean_centralities = vec![0.0f64; spec.n_assets];
    for k in 0..spec.n_assets {
        mean_centralities[k] =
            compensated_sum(per_replicate.iter().map(|(_, p)| p[k])) / r;
    }
    BaselineReport {
        n_assets: spec.n_assets,
        n_obs: spec.n_obs,
        replicates: spec.replicates,
        seed: spec.seed,
        n_power,
        mean_h,
        std_h: var.sqrt(),
        mean_centralities,
    }
}

impl BaselineReport {
    /// CSV of the mean sorted-centrality curve: `rank,mean_centrality`.
    pub fn centrality_csv(&self) -> String {
        let mut out = String::from("rank,mean_centrality\n");
        for (k, p) in self.mean_centralities.iter().enumerate() {
            out.push_str(&format!("{},{}\n", k + 1, p));
        }
        out
    }
}
