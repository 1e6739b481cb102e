//! Eigen-entropies, phase-space coordinates, event classification,
//! rolling standardization and event-window trajectories.
//!
//! Every epoch yields three entropies: `H` from the full correlation
//! matrix, `H_M` from the rank-one market mode and `H_GR` from the
//! composite group-random mode, each computed as the Shannon entropy of
//! the Perron centrality of the `|c|^n`-transformed matrix. The plane
//! `(|H - H_M|, |H - H_GR|)` separates market regimes: crashes hug the
//! first axis, type-1 events the second, anomalies sit at the origin
//! and type-2 events far from both axes.
//!
//! The classifier thresholds are heuristics chosen to reproduce that
//! geometry; they are not measured constants. `r_type2` defaults to 0.9
//! times the 99th-percentile radius of the analyzed series.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corrlab::Epoch;
use crate::spectral::{
    abs_power, market_mode, perron_centrality, symmetric_eigen, CentralityVector, SpectralError,
};
use crate::matrix::SquareMatrix;

/// Matrices whose largest entry magnitude is below this are treated as
/// structureless (uniform centrality). This is the zero-matrix policy
/// for `C_GR` of an exactly rank-one correlation matrix, where the
/// eigensum residual is pure round-off.
pub const ZERO_MATRIX_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum PhaseError {
    #[error("bad thresholds: {0}")]
    BadThresholds(String),
    #[error("standardization window must be at least 2, got {0}")]
    BadWindow(usize),
    #[error("series of length {len} is shorter than the window {window}")]
    SeriesTooShort { len: usize, window: usize },
    #[error("series is empty")]
    EmptySeries,
    #[error("date {0} is not covered by the epoch series")]
    DateNotCovered(NaiveDate),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Shannon entropy of a centrality vector, with `0 ln 0 := 0`.
pub fn eigen_entropy(p: &CentralityVector) -> f64 {
    entropy_of_scores(p.scores())
}

pub fn entropy_of_scores(scores: &[f64]) -> f64 {
    let mut h = 0.0;
    let mut comp = 0.0;
    for &p in scores {
        if p > 0.0 {
            let term = -p * p.ln();
            let y = term - comp;
            let t = h + y;
            comp = (t - h) - y;
            h = t;
        }
    }
    h
}

/// Perron centrality with the zero-matrix policy applied.
pub fn centrality_or_uniform(a: &SquareMatrix) -> Result<CentralityVector, SpectralError> {
    if a.max_abs() <= ZERO_MATRIX_TOL {
        Ok(CentralityVector::uniform(a.n()))
    } else {
        perron_centrality(a)
    }
}

/// The `(H, H_M, H_GR)` coordinates of one epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyTriple {
    pub end_date: NaiveDate,
    pub h: f64,
    pub h_m: f64,
    pub h_gr: f64,
    pub mu: f64,
    pub n_power: u32,
}

/// Computes the entropy triple of an epoch: `H` from `|C|^n`, `H_M`
/// from `|C_M|^n` and `H_GR` from `|C_GR|^n`, with `C_M` and `C_GR`
/// built from the epoch's eigensystem.
pub fn entropy_triple(epoch: &Epoch, n_power: u32) -> Result<EntropyTriple, PhaseError> {
    Ok(entropy_triples_multi(epoch, &[n_power])?.pop().expect("one power in, one triple out"))
}

/// Entropy triples for several powers of the same epoch, sharing a
/// single eigendecomposition of `C`.
pub fn entropy_triples_multi(
    epoch: &Epoch,
    powers: &[u32],
) -> Result<Vec<EntropyTriple>, PhaseError> {
    let c = &epoch.corr;
    let n = c.n();
    let decomp = symmetric_eigen(c)?;
    let market = market_mode(&decomp);
    let group_random = decomp.reconstruct_range(1..n);
    powers
        .iter()
        .map(|&n_power| {
            let h = eigen_entropy(&centrality_or_uniform(&abs_power(c, n_power))?);
            let h_m = eigen_entropy(&centrality_or_uniform(&abs_power(&market, n_power))?);
            let h_gr = eigen_entropy(&centrality_or_uniform(&abs_power(&group_random, n_power))?);
            Ok(EntropyTriple { end_date: epoch.end_date, h, h_m, h_gr, mu: epoch.mu, n_power })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Crash,
    Type1,
    Type2,
    Anomaly,
    Normal,
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Label::Crash => "crash",
            Label::Type1 => "type1",
            Label::Type2 => "type2",
            Label::Anomaly => "anomaly",
            Label::Normal => "normal",
        };
        f.write_str(s)
    }
}

/// Transformed phase-space coordinates of one epoch. `label` is `None`
/// until classification runs.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    pub d_m: f64,
    pub d_gr: f64,
    pub d_mgr: f64,
    pub label: Option<Label>,
}

pub fn phase_coordinates(t: &EntropyTriple) -> PhasePoint {
    PhasePoint {
        d_m: (t.h - t.h_m).abs(),
        d_gr: (t.h - t.h_gr).abs(),
        d_mgr: t.h_m - t.h_gr,
        label: None,
    }
}

/// Classifier configuration. `r_type2 = None` resolves to 0.9 times the
/// observed 99th-percentile radius of the series being classified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassifierConfig {
    pub eps_crash: f64,
    pub eps_type1: f64,
    pub r_anomaly: f64,
    pub r_type2: Option<f64>,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self { eps_crash: 0.05, eps_type1: 0.05, r_anomaly: 0.02, r_type2: None }
    }
}

/// Fully resolved thresholds, all positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    pub eps_crash: f64,
    pub eps_type1: f64,
    pub r_anomaly: f64,
    pub r_type2: f64,
}

impl ClassifierConfig {
    pub fn validate(&self) -> Result<(), PhaseError> {
        if !(self.eps_crash > 0.0 && self.eps_type1 > 0.0 && self.r_anomaly > 0.0) {
            return Err(PhaseError::BadThresholds("all thresholds must be positive".into()));
        }
        if let Some(r) = self.r_type2 {
            if !(r > 0.0) {
                return Err(PhaseError::BadThresholds("r_type2 must be positive".into()));
            }
        }
        if self.r_anomaly >= self.eps_crash.min(self.eps_type1) {
            return Err(PhaseError::BadThresholds(
                "r_anomaly must be smaller than both eps_crash and eps_type1".into(),
            ));
        }
        Ok(())
    }

    /// Resolves `r_type2` against the observed radii of the series.
    pub fn resolve(&self, radii: &[f64]) -> Result<Thresholds, PhaseError> {
        self.validate()?;
        let r_type2 = match self.r_type2 {
            Some(r) => r,
            None => {
                if radii.is_empty() {
                    return Err(PhaseError::EmptySeries);
                }
                0.9 * percentile_nearest_rank(radii, 0.99)
            }
        };
        if !(r_type2 > 0.0) {
            return Err(PhaseError::BadThresholds(
                "resolved r_type2 is not positive; the series radii are degenerate".into(),
            ));
        }
        Ok(Thresholds {
            eps_crash: self.eps_crash,
            eps_type1: self.eps_type1,
            r_anomaly: self.r_anomaly,
            r_type2,
        })
    }
}

/// Nearest-rank percentile: the `ceil(q n)`-th smallest value.
pub fn percentile_nearest_rank(values: &[f64], q: f64) -> f64 {
    debug_assert!(!values.is_empty());
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("radii are finite"));
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Classifies a phase point. Precedence is fixed:
/// anomaly > crash > type1 > type2 > normal.
pub fn classify(point: &PhasePoint, th: &Thresholds) -> Label {
    if point.d_m.max(point.d_gr) < th.r_anomaly {
        Label::Anomaly
    } else if point.d_m < th.eps_crash {
        Label::Crash
    } else if point.d_gr < th.eps_type1 {
        Label::Type1
    } else if point.d_m.hypot(point.d_gr) > th.r_type2 {
        Label::Type2
    } else {
        Label::Normal
    }
}

/// Rolling z-scores of an entropy triple series. `zero_dispersion`
/// marks components whose trailing window had no spread; their z is 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StandardizedTriple {
    pub end_date: NaiveDate,
    pub h: f64,
    pub h_m: f64,
    pub h_gr: f64,
    pub zero_dispersion: [bool; 3],
}

/// Standardizes each entropy component with a trailing window of `w`
/// epochs: `z_t = (x_t - mean) / std` with the population convention
/// (divide by `w`). The first `w - 1` epochs are omitted.
pub fn rolling_standardize(
    series: &[EntropyTriple],
    window: usize,
) -> Result<Vec<StandardizedTriple>, PhaseError> {
    if window < 2 {
        return Err(PhaseError::BadWindow(window));
    }
    if series.len() < window {
        return Err(PhaseError::SeriesTooShort { len: series.len(), window });
    }

    let component = |t: &EntropyTriple, k: usize| match k {
        0 => t.h,
        1 => t.h_m,
        _ => t.h_gr,
    };
    let mut out = Vec::with_capacity(series.len() - window + 1);
    for t in (window - 1)..series.len() {
        let slice = &series[t + 1 - window..=t];
        let mut z = [0.0f64; 3];
        let mut flags = [false; 3];
        for k in 0..3 {
            let mean =
                slice.iter().map(|s| component(s, k)).sum::<f64>() / window as f64;
            let var = slice
                .iter()
                .map(|s| {
                    let d = component(s, k) - mean;
                    d * d
                })
                .sum::<f64>()
                / window as f64;
            let std = var.sqrt();
            if std <= 1e-12 * (1.0 + mean.abs()) {
                flags[k] = true;
            } else {
                z[k] = (component(&series[t], k) - mean) / std;
            }
        }
        out.push(StandardizedTriple {
            end_date: series[t].end_date,
            h: z[0],
            h_m: z[1],
            h_gr: z[2],
            zero_dispersion: flags,
        });
    }
    Ok(out)
}

/// Resolves an event date to the epoch with the largest end date that
/// is not after it. Dates before the first or after the last epoch are
/// not covered.
pub fn resolve_event_index(dates: &[NaiveDate], event_date: NaiveDate) -> Result<usize, PhaseError> {
    if dates.is_empty() {
        return Err(PhaseError::EmptySeries);
    }
    if event_date < dates[0] || event_date > *dates.last().unwrap() {
        return Err(PhaseError::DateNotCovered(event_date));
    }
    Ok(dates.partition_point(|d| *d <= event_date) - 1)
}

/// A trajectory of up to `2k + 1` consecutive frames centered on an
/// event's epoch, truncated at the series boundaries.
#[derive(Debug, Clone, PartialEq)]
pub struct EventWindow {
    pub frames: Vec<StandardizedTriple>,
    /// Index of the event frame within `frames`.
    pub event_offset: usize,
    pub truncated: bool,
}

pub fn event_window(
    series: &[StandardizedTriple],
    event_date: NaiveDate,
    k: usize,
) -> Result<EventWindow, PhaseError> {
    let dates: Vec<NaiveDate> = series.iter().map(|s| s.end_date).collect();
    let center = resolve_event_index(&dates, event_date)?;
    Ok(window_around(series, center, k))
}

/// The `2k + 1` frames around `center`, clipped to the series bounds.
pub fn window_around(series: &[StandardizedTriple], center: usize, k: usize) -> EventWindow {
    let start = center.saturating_sub(k);
    let end = (center + k).min(series.len() - 1);
    EventWindow {
        frames: series[start..=end].to_vec(),
        event_offset: center - start,
        truncated: (end - start) != 2 * k,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::RectMatrix;

    fn date(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    fn triple(h: f64, h_m: f64, h_gr: f64) -> EntropyTriple {
        EntropyTriple { end_date: date("2005-01-03"), h, h_m, h_gr, mu: 0.1, n_power: 2 }
    }

    #[test]
    fn entropy_examples() {
        let uniform = CentralityVector::uniform(194);
        // ln 194 to 30 digits: 5.26785815906332813153395374316
        assert!((eigen_entropy(&uniform) - 5.267858159063328).abs() < 1e-12);
        assert_eq!(entropy_of_scores(&[1.0, 0.0, 0.0]), 0.0);
        // 1.5 ln 2 to 30 digits: 1.03972077083991796412584818219
        assert!((entropy_of_scores(&[0.5, 0.25, 0.25]) - 1.039720770839918).abs() < 1e-14);
    }

    #[test]
    fn entropy_is_bounded_and_maximized_by_uniform() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let n = rng.random_range(2usize..40);
            let mut p: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let s: f64 = p.iter().sum();
            for x in &mut p {
                *x /= s;
            }
            let h = entropy_of_scores(&p);
            let ln_n = (n as f64).ln();
            assert!(h >= 0.0 && h <= ln_n + 1e-12);
            let spread = p.iter().fold(0.0f64, |m, &x| m.max((x - 1.0 / n as f64).abs()));
            if h > ln_n - 1e-12 {
                assert!(spread < 1e-6, "near-maximal entropy implies near-uniform p");
            }
        }
    }

    fn epoch_from_corr(corr: SquareMatrix) -> Epoch {
        let mu = crate::corrlab::mean_correlation(&corr);
        Epoch {
            end_index: 0,
            end_date: date("2005-01-03"),
            window: corr.n(),
            corr,
            mu,
            degenerate_tickers: Vec::new(),
        }
    }

    #[test]
    fn all_ones_epoch_is_crash_like() {
        let n = 16;
        let corr = SquareMatrix::from_raw(n, vec![1.0; n * n]);
        let t = entropy_triple(&epoch_from_corr(corr), 2).unwrap();
        let ln_n = (n as f64).ln();
        assert!((t.h - ln_n).abs() < 1e-12);
        assert!((t.h_m - ln_n).abs() < 1e-12);
        // C_GR is numerically zero; the policy yields ln N
        assert!((t.h_gr - ln_n).abs() < 1e-12);
        let p = phase_coordinates(&t);
        assert!(p.d_m < 1e-12, "rank-one matrix must sit on the crash axis, d_m = {}", p.d_m);
    }

    #[test]
    fn identity_epoch_gives_maximal_entropy() {
        let n = 9;
        let t = entropy_triple(&epoch_from_corr(SquareMatrix::identity(n)), 2).unwrap();
        assert!((t.h - (n as f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn woe_epoch_entropy_is_near_ln_n() {
        let spec = crate::ensemble::EnsembleSpec::new(194, 194, 1, 5).unwrap();
        let c = crate::ensemble::woe_sample(&spec, 0);
        let t = entropy_triple(&epoch_from_corr(c), 2).unwrap();
        let ln_n = 194f64.ln();
        assert!((t.h - ln_n).abs() / ln_n < 0.02, "H = {} vs ln N = {ln_n}", t.h);
    }

    #[test]
    fn phase_coordinate_arithmetic() {
        let p = phase_coordinates(&triple(5.0, 5.0, 5.0));
        assert_eq!((p.d_m, p.d_gr, p.d_mgr), (0.0, 0.0, 0.0));
        let p = phase_coordinates(&triple(5.0, 5.0, 4.2));
        assert!((p.d_m - 0.0).abs() < 1e-12);
        assert!((p.d_gr - 0.8).abs() < 1e-12);
        assert!((p.d_mgr - 0.8).abs() < 1e-12);
        let p = phase_coordinates(&triple(5.1, 4.0, 5.1));
        assert!((p.d_m - 1.1).abs() < 1e-12);
        assert!(p.d_gr.abs() < 1e-12);
        assert!((p.d_mgr + 1.1).abs() < 1e-12);
    }

    fn point(d_m: f64, d_gr: f64) -> PhasePoint {
        PhasePoint { d_m, d_gr, d_mgr: 0.0, label: None }
    }

    #[test]
    fn classification_follows_threshold_arithmetic() {
        let th = ClassifierConfig::default().resolve(&[1.0]).unwrap();
        assert!((th.r_type2 - 0.9).abs() < 1e-15);

        // independent rule arithmetic for a handful of points
        let cases = [
            (0.001, 0.001),
            (0.002, 0.9),
            (0.5, 0.45),
            (0.2, 0.03),
            (0.9, 0.9),
            (0.019, 0.021),
        ];
        for (d_m, d_gr) in cases {
            let expected = if f64::max(d_m, d_gr) < 0.02 {
                Label::Anomaly
            } else if d_m < 0.05 {
                Label::Crash
            } else if d_gr < 0.05 {
                Label::Type1
            } else if (d_m * d_m + d_gr * d_gr).sqrt() > 0.9 {
                Label::Type2
            } else {
                Label::Normal
            };
            assert_eq!(classify(&point(d_m, d_gr), &th), expected, "({d_m}, {d_gr})");
        }
        assert_eq!(classify(&point(0.001, 0.001), &th), Label::Anomaly);
        assert_eq!(classify(&point(0.002, 0.9), &th), Label::Crash);
        assert_eq!(classify(&point(0.5, 0.45), &th), Label::Normal);
    }

    #[test]
    fn classification_only_sees_the_plane() {
        let th = ClassifierConfig::default().resolve(&[1.0]).unwrap();
        let mut a = point(0.3, 0.4);
        a.d_mgr = -2.0;
        let mut b = point(0.3, 0.4);
        b.d_mgr = 7.0;
        assert_eq!(classify(&a, &th), classify(&b, &th));
    }

    #[test]
    fn bad_thresholds_are_rejected() {
        let bad = ClassifierConfig { eps_crash: 0.0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = ClassifierConfig { r_anomaly: 0.05, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = ClassifierConfig { r_type2: Some(-1.0), ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn rolling_standardize_conventions() {
        let series: Vec<EntropyTriple> = [1.0, 2.0, 3.0]
            .iter()
            .enumerate()
            .map(|(i, &h)| EntropyTriple {
                end_date: date("2005-01-03") + chrono::Days::new(i as u64),
                h,
                h_m: h,
                h_gr: 5.0,
                mu: 0.0,
                n_power: 2,
            })
            .collect();
        let z = rolling_standardize(&series, 3).unwrap();
        assert_eq!(z.len(), 1);
        // (3 - 2) / population-std(1,2,3); to 30 digits the z-score is
        // 1.22474487139158904909864203735
        assert!((z[0].h - 1.2247448713915890).abs() < 1e-14);
        // constant component flags zero dispersion
        assert!(z[0].zero_dispersion[2]);
        assert_eq!(z[0].h_gr, 0.0);

        // alternating series, w = 2, population convention: |z| = 1
        let alt: Vec<EntropyTriple> = [-1.0, 1.0, -1.0, 1.0]
            .iter()
            .enumerate()
            .map(|(i, &h)| EntropyTriple {
                end_date: date("2005-01-03") + chrono::Days::new(i as u64),
                h,
                h_m: 0.0,
                h_gr: 0.0,
                mu: 0.0,
                n_power: 2,
            })
            .collect();
        let z = rolling_standardize(&alt, 2).unwrap();
        for frame in &z {
            assert!((frame.h.abs() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn standardization_ignores_constant_offsets() {
        let mk = |offset: f64| -> Vec<EntropyTriple> {
            [4.1, 4.4, 4.0, 4.6, 4.3, 4.8]
                .iter()
                .enumerate()
                .map(|(i, &h)| EntropyTriple {
                    end_date: date("2005-01-03") + chrono::Days::new(i as u64),
                    h: h + offset,
                    h_m: h,
                    h_gr: h,
                    mu: 0.0,
                    n_power: 2,
                })
                .collect()
        };
        let z0 = rolling_standardize(&mk(0.0), 3).unwrap();
        let z1 = rolling_standardize(&mk(17.5), 3).unwrap();
        for (a, b) in z0.iter().zip(&z1) {
            assert!((a.h - b.h).abs() < 1e-9);
        }
    }

    #[test]
    fn rolling_standardize_bounds() {
        let series: Vec<EntropyTriple> =
            (0..3).map(|i| triple(i as f64, 0.0, 0.0)).collect();
        assert!(matches!(rolling_standardize(&series, 1), Err(PhaseError::BadWindow(1))));
        assert!(matches!(
            rolling_standardize(&series, 5),
            Err(PhaseError::SeriesTooShort { .. })
        ));
    }

    fn std_series(n: usize) -> Vec<StandardizedTriple> {
        (0..n)
            .map(|i| StandardizedTriple {
                end_date: date("2005-01-03") + chrono::Days::new(20 * i as u64),
                h: i as f64,
                h_m: 0.0,
                h_gr: 0.0,
                zero_dispersion: [false; 3],
            })
            .collect()
    }

    #[test]
    fn event_windows() {
        let series = std_series(15);
        let mid = series[7].end_date;
        let w = event_window(&series, mid, 3).unwrap();
        assert_eq!(w.frames.len(), 7);
        assert_eq!(w.event_offset, 3);
        assert!(!w.truncated);

        let first = series[0].end_date;
        let w = event_window(&series, first, 3).unwrap();
        assert_eq!(w.frames.len(), 4);
        assert_eq!(w.event_offset, 0);
        assert!(w.truncated);

        // a date between epochs resolves to the last epoch at or before it
        let between = series[4].end_date + chrono::Days::new(7);
        let w = event_window(&series, between, 1).unwrap();
        assert_eq!(w.frames[w.event_offset].end_date, series[4].end_date);

        let early = series[0].end_date - chrono::Days::new(1);
        assert!(matches!(event_window(&series, early, 3), Err(PhaseError::DateNotCovered(_))));
        let late = series[14].end_date + chrono::Days::new(1);
        assert!(matches!(event_window(&series, late, 3), Err(PhaseError::DateNotCovered(_))));
    }

    #[test]
    fn entropy_triple_propagates_through_pipeline_types() {
        // smoke test wiring corrlab -> spectral -> phase on real returns
        let mut m = RectMatrix::zeros(3, 6);
        let data = [
            [0.01, -0.02, 0.005, 0.013, -0.007, 0.002],
            [0.008, -0.019, 0.004, 0.012, -0.004, 0.001],
            [-0.004, 0.016, -0.002, -0.01, 0.006, 0.003],
        ];
        for (i, row) in data.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                m.set(i, j, v);
            }
        }
        let base = date("2005-01-03");
        let dates = (0..6).map(|k| base + chrono::Days::new(k)).collect();
        let panel = crate::ingest::ReturnPanel::from_matrix(
            vec!["A".into(), "B".into(), "C".into()],
            dates,
            m,
            1,
        );
        let epoch = crate::corrlab::epoch_correlation(&panel, 5, 6).unwrap();
        let t = entropy_triple(&epoch, 2).unwrap();
        let ln_n = 3f64.ln();
        for h in [t.h, t.h_m, t.h_gr] {
            assert!(h >= 0.0 && h <= ln_n + 1e-12);
        }
    }
}
