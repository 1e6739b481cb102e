//! Symmetric eigendecomposition, the elementwise `|c|^n` transform,
//! Perron eigen-centrality and the market / group / random mode split.
//!
//! The eigensolver is a cyclic Jacobi sweep: rotations annihilate one
//! off-diagonal pair at a time and the accumulated rotations are the
//! eigenvectors. Convergence is declared when the off-diagonal Frobenius
//! norm falls below `1e-12` times the Frobenius norm of the input, with
//! a budget of 100 sweeps. Eigenvalues are reported in descending order
//! under a deterministic sign convention (each eigenvector's
//! largest-magnitude entry is non-negative), so repeated decompositions
//! of the same matrix are bit-identical.
//!
//! When the top eigenvalue is degenerate (identity-like or reducible
//! input), the leading eigenvector is chosen as the normalized
//! projection of the uniform vector onto the top eigenspace. This keeps
//! the market mode of a structureless matrix structureless instead of
//! picking an arbitrary coordinate direction, and it matches the
//! uniform fixed point of the power iteration below.

use thiserror::Error;

use crate::matrix::{compensated_sum, SquareMatrix};

/// Maximum tolerated `|a_ij - a_ji|` before an input is rejected.
pub const SYMMETRY_TOL: f64 = 1e-10;
/// Off-diagonal Frobenius target, relative to the input norm.
pub const JACOBI_TOL: f64 = 1e-12;
/// Jacobi sweep budget.
pub const JACOBI_MAX_SWEEPS: usize = 100;
/// Power-iteration budget.
pub const POWER_MAX_ITERATIONS: usize = 10_000;
/// Relative max-norm tolerance between successive power iterates.
pub const POWER_TOL: f64 = 1e-13;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("matrix is not symmetric: |a_ij - a_ji| reaches {0:.3e}")]
    NotSymmetric(f64),
    #[error("Jacobi sweeps did not converge within {0} sweeps")]
    NoConvergence(usize),
    #[error("matrix has a negative entry at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize },
    #[error("matrix is identically zero")]
    ZeroMatrix,
    #[error("group count {n_group} must lie in [2, {max}]")]
    BadGroupCount { n_group: usize, max: usize },
}

/// Full eigensystem of a symmetric matrix: eigenvalues descending,
/// eigenvectors orthonormal and paired with the eigenvalues.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    /// Row `k` is the eigenvector for `eigenvalues[k]`.
    eigenvectors: Vec<Vec<f64>>,
}

impl SpectralDecomposition {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvector(&self, k: usize) -> &[f64] {
        &self.eigenvectors[k]
    }

    /// `sum_{k in range} lambda_k v_k v_k^T`.
    pub fn reconstruct_range(&self, range: std::ops::Range<usize>) -> SquareMatrix {
        let mut m = SquareMatrix::zeros(self.n());
        for k in range {
            m.add_scaled_outer(self.eigenvalues[k], &self.eigenvectors[k]);
        }
        m
    }
}

pub fn symmetric_eigen(a: &SquareMatrix) -> Result<SpectralDecomposition, SpectralError> {
    let n = a.n();
    let asym = a.max_asymmetry();
    if asym > SYMMETRY_TOL {
        return Err(SpectralError::NotSymmetric(asym));
    }

    // Work on an exactly-symmetrized copy.
    let mut m = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..n {
            m[i * n + j] = 0.5 * (a.get(i, j) + a.get(j, i));
        }
    }
    // Rotations accumulate into vt, stored with eigenvectors as rows so
    // the inner loops stay contiguous.
    let mut vt = vec![0.0f64; n * n];
    for i in 0..n {
        vt[i * n + i] = 1.0;
    }

    let norm = a.frobenius_norm();
    let stop = JACOBI_TOL * norm;
    let mut converged = n < 2;
    for _sweep in 0..JACOBI_MAX_SWEEPS {
        if converged {
            break;
        }
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                let v = m[i * n + j];
                off += 2.0 * v * v;
            }
        }
        if off.sqrt() <= stop {
            converged = true;
            break;
        }
        for p in 0..(n - 1) {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = 0.5 * (aqq - app) / apq;
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);
                let h = t * apq;

                m[p * n + p] = app - h;
                m[q * n + q] = aqq + h;
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;
                for j in 0..p {
                    let g = m[j * n + p];
                    let hh = m[j * n + q];
                    m[j * n + p] = g - s * (hh + g * tau);
                    m[j * n + q] = hh + s * (g - hh * tau);
                    m[p * n + j] = m[j * n + p];
                    m[q * n + j] = m[j * n + q];
                }
                for j in (p + 1)..q {
                    let g = m[p * n + j];
                    let hh = m[j * n + q];
                    m[p * n + j] = g - s * (hh + g * tau);
                    m[j * n + q] = hh + s * (g - hh * tau);
                    m[j * n + p] = m[p * n + j];
                    m[q * n + j] = m[j * n + q];
                }
                for j in (q + 1)..n {
                    let g = m[p * n + j];
                    let hh = m[q * n + j];
                    m[p * n + j] = g - s * (hh + g * tau);
                    m[q * n + j] = hh + s * (g - hh * tau);
                    m[j * n + p] = m[p * n + j];
                    m[j * n + q] = m[q * n + j];
                }
                // rotate the eigenvector rows
                let (head, tail) = vt.split_at_mut(q * n);
                let row_p = &mut head[p * n..p * n + n];
                let row_q = &mut tail[..n];
                for j in 0..n {
                    let g = row_p[j];
                    let hh = row_q[j];
                    row_p[j] = g - s * (hh + g * tau);
                    row_q[j] = hh + s * (g - hh * tau);
                }
            }
        }
    }
    if !converged {
        return Err(SpectralError::NoConvergence(JACOBI_MAX_SWEEPS));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        m[j * n + j]
            .partial_cmp(&m[i * n + i])
            .expect("eigenvalues of a real symmetric matrix are finite")
            .then(i.cmp(&j))
    });
    let eigenvalues: Vec<f64> = order.iter().map(|&k| m[k * n + k]).collect();
    let mut eigenvectors: Vec<Vec<f64>> =
        order.iter().map(|&k| vt[k * n..(k + 1) * n].to_vec()).collect();

    align_degenerate_top(&eigenvalues, &mut eigenvectors);
    for v in &mut eigenvectors {
        apply_sign_convention(v);
    }
    Ok(SpectralDecomposition { eigenvalues, eigenvectors })
}

/// If the top eigenvalue is degenerate, rotate the top eigenspace basis
/// so its first vector is the normalized projection of the uniform
/// vector. Identity-like inputs then get a structureless leading mode.
fn align_degenerate_top(eigenvalues: &[f64], eigenvectors: &mut [Vec<f64>]) {
    let n = eigenvalues.len();
    if n < 2 {
        return;
    }
    let top = eigenvalues[0];
    let tol = 1e-12 * top.abs().max(1.0);
    let k = eigenvalues.iter().take_while(|&&l| top - l <= tol).count();
    if k < 2 {
        return;
    }

    let u = 1.0 / (n as f64).sqrt();
    let mut w = vec![0.0f64; n];
    for v in eigenvectors.iter().take(k) {
        let overlap: f64 = v.iter().map(|&x| x * u).sum();
        for (wi, &vi) in w.iter_mut().zip(v.iter()) {
            *wi += overlap * vi;
        }
    }
    let wnorm = w.iter().map(|&x| x * x).sum::<f64>().sqrt();
    if wnorm <= 1e-8 {
        return; // uniform vector is orthogonal to the top eigenspace
    }
    for wi in &mut w {
        *wi /= wnorm;
    }

    // Re-orthonormalize within the eigenspace, keeping w first.
    let mut basis: Vec<Vec<f64>> = vec![w];
    for old in eigenvectors.iter().take(k) {
        if basis.len() == k {
            break;
        }
        let mut cand = old.clone();
        for b in &basis {
            let dot: f64 = b.iter().zip(&cand).map(|(&x, &y)| x * y).sum();
            for (ci, &bi) in cand.iter_mut().zip(b.iter()) {
                *ci -= dot * bi;
            }
        }
        let norm = cand.iter().map(|&x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            for ci in &mut cand {
                *ci /= norm;
            }
            basis.push(cand);
        }
    }
    if basis.len() == k {
        for (slot, vec) in eigenvectors.iter_mut().take(k).zip(basis) {
            *slot = vec;
        }
    }
}

/// Largest-magnitude entry made non-negative; first index wins ties.
fn apply_sign_convention(v: &mut [f64]) {
    let mut best = 0usize;
    let mut best_abs = 0.0f64;
    for (i, &x) in v.iter().enumerate() {
        if x.abs() > best_abs {
            best_abs = x.abs();
            best = i;
        }
    }
    if v[best] < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

/// Elementwise `|c|^n`.
pub fn abs_power(c: &SquareMatrix, n_power: u32) -> SquareMatrix {
    debug_assert!(n_power >= 1);
    c.map(|v| v.abs().powi(n_power as i32))
}

/// Perron eigen-centrality: non-negative entries summing to one.
#[derive(Debug, Clone)]
pub struct CentralityVector {
    p: Vec<f64>,
    converged: bool,
    iterations: usize,
}

impl CentralityVector {
    pub fn scores(&self) -> &[f64] {
        &self.p
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Uniform centrality over `n` nodes; the degenerate-spectrum policy.
    pub fn uniform(n: usize) -> Self {
        Self { p: vec![1.0 / n as f64; n], converged: true, iterations: 0 }
    }

    pub(crate) fn from_scores(mut p: Vec<f64>, converged: bool, iterations: usize) -> Self {
        let sum = compensated_sum(p.iter().copied());
        if sum > 0.0 {
            for x in &mut p {
                *x /= sum;
            }
        }
        Self { p, converged, iterations }
    }
}

/// Power iteration for the Perron vector of a non-negative symmetric
/// matrix, started from the uniform vector. The uniform start makes the
/// degenerate spectrum (identity-like, reducible) a fixed point, so such
/// inputs deterministically yield uniform centrality. On budget
/// exhaustion the full eigensolver provides the answer; only if that
/// also fails is the best iterate returned with `converged = false`.
pub fn perron_centrality(a: &SquareMatrix) -> Result<CentralityVector, SpectralError> {
    let n = a.n();
    let asym = a.max_asymmetry();
    if asym > SYMMETRY_TOL {
        return Err(SpectralError::NotSymmetric(asym));
    }
    for i in 0..n {
        for j in 0..n {
            if a.get(i, j) < 0.0 {
                return Err(SpectralError::NegativeEntry { row: i, col: j });
            }
        }
    }
    if a.max_abs() == 0.0 {
        return Err(SpectralError::ZeroMatrix);
    }

    let mut x = vec![1.0 / n as f64; n];
    let mut y = vec![0.0f64; n];
    let mut prev_delta = f64::INFINITY;
    for iter in 1..=POWER_MAX_ITERATIONS {
        a.matvec(&x, &mut y);
        let s: f64 = y.iter().sum();
        if s <= 0.0 {
            return Err(SpectralError::ZeroMatrix);
        }
        let inv = 1.0 / s;
        let mut delta = 0.0f64;
        let mut scale = 0.0f64;
        for (xi, yi) in x.iter_mut().zip(y.iter()) {
            let next = yi * inv;
            delta = delta.max((next - *xi).abs());
            scale = scale.max(next.abs());
            *xi = next;
        }
        if delta <= POWER_TOL * scale {
            // Geometric error estimate guards slow spectral gaps: the
            // distance to the fixed point is ~ delta * r / (1 - r).
            let r = if prev_delta.is_finite() && prev_delta > 0.0 {
                (delta / prev_delta).clamp(0.0, 1.0 - 1e-9)
            } else {
                0.0
            };
            if delta * r / (1.0 - r) <= 10.0 * POWER_TOL * scale {
                return Ok(CentralityVector::from_scores(x, true, iter));
            }
        }
        prev_delta = delta;
    }

    match symmetric_eigen(a) {
        Ok(d) => {
            let p: Vec<f64> = d.eigenvector(0).iter().map(|&v| v.abs()).collect();
            Ok(CentralityVector::from_scores(p, true, POWER_MAX_ITERATIONS))
        }
        Err(_) => Ok(CentralityVector::from_scores(x, false, POWER_MAX_ITERATIONS)),
    }
}

/// Rank-one market mode `lambda_1 v_1 v_1^T`.
pub fn market_mode(d: &SpectralDecomposition) -> SquareMatrix {
    d.reconstruct_range(0..1)
}

/// Eigencomponent split of a correlation matrix. `group_random` always
/// holds components `2..N`; `group` and `random` are present when a
/// group count was requested.
#[derive(Debug, Clone)]
pub struct ModeSplit {
    pub market: SquareMatrix,
    pub group_random: SquareMatrix,
    pub group: Option<SquareMatrix>,
    pub random: Option<SquareMatrix>,
    pub n_group: Option<usize>,
}

/// Splits the eigensystem into market and group-random modes, and
/// additionally into group (components `2..=n_group`) and random
/// (components `n_group+1..=N`) when `n_group` is given. All components
/// are built from eigenvector outer products, so their sum reconstructs
/// the original matrix only as accurately as the decomposition itself.
pub fn mode_split(
    d: &SpectralDecomposition,
    n_group: Option<usize>,
) -> Result<ModeSplit, SpectralError> {
    let n = d.n();
    let market = market_mode(d);
    let group_random = d.reconstruct_range(1..n);
    let (group, random) = match n_group {
        None => (None, None),
        Some(g) => {
            if g < 2 || g > n.saturating_sub(1) {
                return Err(SpectralError::BadGroupCount { n_group: g, max: n.saturating_sub(1) });
            }
            (Some(d.reconstruct_range(1..g)), Some(d.reconstruct_range(g..n)))
        }
    };
    Ok(ModeSplit { market, group_random, group, random, n_group })
}

/// Upper Marchenko-Pastur edge `sigma^2 (1 + 1/sqrt(Q))^2` with
/// `Q = M/N`.
pub fn marchenko_pastur_upper(sigma: f64, q: f64) -> f64 {
    assert!(sigma > 0.0 && q > 0.0, "marchenko_pastur_upper needs positive sigma and Q");
    let edge = 1.0 + 1.0 / q.sqrt();
    sigma * sigma * edge * edge
}
