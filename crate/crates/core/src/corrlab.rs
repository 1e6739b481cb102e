//! Rolling-epoch Pearson correlation matrices and the mean market
//! correlation.
//!
//! An epoch is one window of `M` return days ending at day `tau`,
//! stepped by `shift` days. Variances use the population convention
//! (divide by `M`); the normalization cancels in the Pearson ratio but
//! is fixed here for any path that exposes raw covariances. A ticker
//! whose window is constant (common with zero-filled data) gets zero
//! off-diagonal correlations, a unit diagonal, and an entry in
//! `degenerate_tickers`.

use chrono::NaiveDate;
use rayon::prelude::*;
use thiserror::Error;

use crate::ingest::ReturnPanel;
use crate::matrix::{compensated_sum, RectMatrix, SquareMatrix};

#[derive(Debug, Error)]
pub enum CorrError {
    #[error("window {window} ending at index {end_index} does not fit a panel of {len} days")]
    WindowOutOfRange { window: usize, end_index: usize, len: usize },
    #[error("window {window} is larger than the return panel ({len} days)")]
    WindowTooLarge { window: usize, len: usize },
    #[error("window must be at least 2 days, got {0}")]
    WindowTooSmall(usize),
    #[error("shift must be at least 1 day")]
    ZeroShift,
}

/// One rolling window's correlation matrix together with its end date,
/// mean market correlation and any zero-variance tickers.
#[derive(Debug, Clone)]
pub struct Epoch {
    pub end_index: usize,
    pub end_date: NaiveDate,
    pub window: usize,
    pub corr: SquareMatrix,
    pub mu: f64,
    pub degenerate_tickers: Vec<usize>,
}

/// Pearson correlation of the rows of `returns` over columns
/// `[start, start + window)`. Returns the matrix and the indices of
/// zero-variance rows.
pub fn window_correlation(
    returns: &RectMatrix,
    start: usize,
    window: usize,
) -> (SquareMatrix, Vec<usize>) {
    let n = returns.rows();
    let m = window;
    let inv_m = 1.0 / m as f64;

    // Center each row and scale by sqrt(M) * sigma so the correlation is
    // a plain dot product of the prepared rows.
    let mut prepared = RectMatrix::zeros(n, m);
    let mut degenerate = Vec::new();
    for i in 0..n {
        let row = &returns.row(i)[start..start + m];
        let mean = compensated_sum(row.iter().copied()) * inv_m;
        let mut ss = 0.0;
        for (k, &v) in row.iter().enumerate() {
            let d = v - mean;
            prepared.set(i, k, d);
            ss += d * d;
        }
        let norm = ss.sqrt();
        if norm == 0.0 {
            degenerate.push(i);
        } else {
            let inv = 1.0 / norm;
            for k in 0..m {
                prepared.set(i, k, prepared.get(i, k) * inv);
            }
        }
    }

    let mut corr = SquareMatrix::identity(n);
    for i in 0..n {
        if degenerate.contains(&i) {
            continue;
        }
        let ri = prepared.row(i);
        for j in (i + 1)..n {
            if degenerate.contains(&j) {
                continue;
            }
            let rj = prepared.row(j);
            let mut dot = 0.0;
            for k in 0..m {
                dot += ri[k] * rj[k];
            }
            let c = dot.clamp(-1.0, 1.0);
            corr.set(i, j, c);
            corr.set(j, i, c);
        }
    }
    (corr, degenerate)
}

/// Correlation over the full width of a return matrix; used by the
/// ensemble samplers.
pub fn correlation_matrix(returns: &RectMatrix) -> (SquareMatrix, Vec<usize>) {
    window_correlation(returns, 0, returns.cols())
}

pub fn epoch_correlation(
    panel: &ReturnPanel,
    end_index: usize,
    window: usize,
) -> Result<Epoch, CorrError> {
    if window < 2 {
        return Err(CorrError::WindowTooSmall(window));
    }
    let len = panel.n_days();
    if end_index >= len || end_index + 1 < window {
        return Err(CorrError::WindowOutOfRange { window, end_index, len });
    }
    let start = end_index + 1 - window;
    let (corr, degenerate_tickers) = window_correlation(panel.matrix(), start, window);
    let mu = mean_correlation(&corr);
    Ok(Epoch {
        end_index,
        end_date: panel.dates()[end_index],
        window,
        corr,
        mu,
        degenerate_tickers,
    })
}

/// All epochs ending at `window-1, window-1+shift, window-1+2*shift, ...`,
/// in end-date order. Epochs are independent and evaluated in parallel;
/// the output order and every byte of the result are deterministic.
pub fn rolling_epochs(
    panel: &ReturnPanel,
    window: usize,
    shift: usize,
) -> Result<Vec<Epoch>, CorrError> {
    if window < 2 {
        return Err(CorrError::WindowTooSmall(window));
    }
    if shift == 0 {
        return Err(CorrError::ZeroShift);
    }
    let len = panel.n_days();
    if window > len {
        return Err(CorrError::WindowTooLarge { window, len });
    }
    let count = (len - window) / shift + 1;
    let ends: Vec<usize> = (0..count).map(|k| window - 1 + k * shift).collect();
    ends.into_par_iter()
        .map(|end| epoch_correlation(panel, end, window))
        .collect()
}

/// Arithmetic mean of the `N(N-1)` off-diagonal entries.
pub fn mean_correlation(corr: &SquareMatrix) -> f64 {
    let n = corr.n();
    debug_assert!(n >= 2);
    let mut sum = 0.0;
    let mut comp = 0.0;
    for i in 0..n {
        let row = corr.row(i);
        for (j, &v) in row.iter().enumerate() {
            if i != j {
                let y = v - comp;
                let t = sum + y;
                comp = (t - sum) - y;
                sum = t;
            }
        }
    }
    sum / (n * (n - 1)) as f64
}
