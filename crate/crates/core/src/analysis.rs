//! Scaling fit between the relative entropy `H - H_M` and the mean
//! market correlation, the fear-gauge functional, and indicator
//! cross-correlograms.
//!
//! The scaling fit is ordinary least squares in log space:
//! `ln y = ln alpha + b mu` over the points with `y > 0`. Nonpositive
//! values cannot enter a log fit; they are counted, not fabricated,
//! mirroring how the single negative empirical value was ignored when
//! plotted.

use chrono::NaiveDate;
use serde::Serialize;
use thiserror::Error;

use crate::phase::EntropyTriple;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("scaling fit needs at least 3 points with positive y, got {0}")]
    InsufficientPoints(usize),
    #[error("indicator series {0} has non-increasing dates")]
    UnsortedDates(String),
    #[error("cross-correlogram needs at least 2 series")]
    TooFewSeries,
}

/// Result of fitting `y = alpha * exp(b * mu)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingFit {
    pub alpha: f64,
    /// Exponent of `y = alpha * e^{b mu}`; negative for decay.
    pub b: f64,
    /// Adjusted R-squared in log space, with 2 fitted parameters.
    pub r2_adjusted: f64,
    pub n_points: usize,
    /// Points dropped because `y <= 0`.
    pub n_excluded: usize,
}

/// Log-space OLS fit of `(mu, y)` pairs. Points with `y <= 0` are
/// excluded and counted.
pub fn fit_scaling(points: &[(f64, f64)]) -> Result<ScalingFit, AnalysisError> {
    let usable: Vec<(f64, f64)> =
        points.iter().filter(|(_, y)| *y > 0.0).map(|&(x, y)| (x, y.ln())).collect();
    let n_excluded = points.len() - usable.len();
    let n = usable.len();
    if n < 3 {
        return Err(AnalysisError::InsufficientPoints(n));
    }

    let nf = n as f64;
    let mean_x = usable.iter().map(|(x, _)| x).sum::<f64>() / nf;
    let mean_y = usable.iter().map(|(_, y)| y).sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for &(x, y) in &usable {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = mean_y - slope * mean_x;

    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for &(x, y) in &usable {
        let r = y - (intercept + slope * x);
        ss_res += r * r;
        let d = y - mean_y;
        ss_tot += d * d;
    }
    let r2 = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else if ss_res <= 1e-24 {
        1.0
    } else {
        0.0
    };
    let r2_adjusted = 1.0 - (1.0 - r2) * (nf - 1.0) / (nf - 3.0);

    Ok(ScalingFit { alpha: intercept.exp(), b: slope, r2_adjusted, n_points: n, n_excluded })
}

/// The functional `-ln(H - H_M)`: defined only when `H - H_M > 0`.
/// `None` is the undefined marker, recorded instead of fabricated.
pub fn fear_gauge(t: &EntropyTriple) -> Option<f64> {
    let gap = t.h - t.h_m;
    (gap > 0.0).then(|| -gap.ln())
}

/// A named time series with possible date gaps.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorSeries {
    name: String,
    dates: Vec<NaiveDate>,
    values: Vec<f64>,
}

impl IndicatorSeries {
    pub fn new(
        name: impl Into<String>,
        dates: Vec<NaiveDate>,
        values: Vec<f64>,
    ) -> Result<Self, AnalysisError> {
        let name = name.into();
        assert_eq!(dates.len(), values.len());
        if dates.windows(2).any(|w| w[0] >= w[1]) {
            return Err(AnalysisError::UnsortedDates(name));
        }
        Ok(Self { name, dates, values })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    /// Values on the dates both series share, in date order.
    fn common_values(&self, other: &Self) -> (Vec<f64>, Vec<f64>) {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        let (mut i, mut j) = (0usize, 0usize);
        while i < self.len() && j < other.len() {
            match self.dates[i].cmp(&other.dates[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    xs.push(self.values[i]);
                    ys.push(other.values[j]);
                    i += 1;
                    j += 1;
                }
            }
        }
        (xs, ys)
    }
}

fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Pairwise Pearson correlations over common dates. Entries are `None`
/// where a pair shares fewer than 3 dates (or has no spread).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Correlogram {
    pub names: Vec<String>,
    /// Row-major `names.len() x names.len()`; `None` is the undefined
    /// marker.
    pub matrix: Vec<Option<f64>>,
}

impl Correlogram {
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.matrix[i * self.names.len() + j]
    }

    /// CSV with a header row and leading name column; undefined entries
    /// are empty cells.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("indicator");
        for n in &self.names {
            out.push(',');
            out.push_str(n);
        }
        out.push('\n');
        for (i, n) in self.names.iter().enumerate() {
            out.push_str(n);
            for j in 0..self.names.len() {
                out.push(',');
                if let Some(v) = self.get(i, j) {
                    out.push_str(&v.to_string());
                }
            }
            out.push('\n');
        }
        out
    }
}

pub fn cross_correlogram(series: &[IndicatorSeries]) -> Result<Correlogram, AnalysisError> {
    let k = series.len();
    if k < 2 {
        return Err(AnalysisError::TooFewSeries);
    }
    let mut matrix = vec![None; k * k];
    for i in 0..k {
        matrix[i * k + i] = (series[i].len() >= 3).then_some(1.0);
        for j in (i + 1)..k {
            let (xs, ys) = series[i].common_values(&series[j]);
            let r = if xs.len() >= 3 { pearson(&xs, &ys) } else { None };
            matrix[i * k + j] = r;
            matrix[j * k + i] = r;
        }
    }
    Ok(Correlogram { names: series.iter().map(|s| s.name.clone()).collect(), matrix })
}
