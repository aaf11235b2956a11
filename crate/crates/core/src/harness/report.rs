//! Per-cell accumulators and the CSV error report.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::numeric::KahanSum;

use super::config::ProcessKind;

/// 100 (other - baseline) / baseline.
pub fn percentage_variation(baseline_err: f64, other_err: f64) -> Result<f64> {
    if baseline_err == 0.0 {
        return Err(Error::UndefinedBaseline);
    }
    if !(baseline_err > 0.0 && baseline_err.is_finite()) || other_err.is_nan()
        || other_err < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "errors must be non-negative with a positive baseline, got ({baseline_err}, {other_err})"
        )));
    }
    Ok(100.0 * (other_err - baseline_err) / baseline_err)
}

/// Compensated first and second moments of one per-replicate quantity.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    sum: KahanSum,
    sum_sq: KahanSum,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.sum.add(x);
        self.sum_sq.add(x * x);
    }

    fn merge(&mut self, other: &Moments) {
        self.sum.add(other.sum.value());
        self.sum_sq.add(other.sum_sq.value());
    }

    fn mean(&self, n: u64) -> f64 {
        self.sum.value() / n as f64
    }

    fn std_error(&self, n: u64) -> f64 {
        if n < 2 {
            return 0.0;
        }
        let nf = n as f64;
        let mean = self.sum.value() / nf;
        let var = ((self.sum_sq.value() - nf * mean * mean) / (nf - 1.0)).max(0.0);
        (var / nf).sqrt()
    }
}

/// Running squared errors of one (design point, predictor, prior) cell.
///
/// For a replicate with prediction `p`, realised target `y` and
/// true-parameter conditional mean `c`, it tracks (y - p)^2, (c - p)^2,
/// (y - c)^2 and the cross term 2 (y - c)(c - p), whose sum with the two
/// previous terms is the prediction error.
#[derive(Debug, Clone, Copy, Default)]
pub struct CellAccumulator {
    count: u64,
    pred: Moments,
    est: Moments,
    cond: Moments,
    cross: Moments,
}

impl CellAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, prediction: f64, target: f64, cond_mean: f64) {
        self.count += 1;
        self.pred.push((target - prediction).powi(2));
        self.est.push((cond_mean - prediction).powi(2));
        self.cond.push((target - cond_mean).powi(2));
        self.cross.push(2.0 * (target - cond_mean) * (cond_mean - prediction));
    }

    pub fn merge(&mut self, other: &CellAccumulator) {
        self.count += other.count;
        self.pred.merge(&other.pred);
        self.est.merge(&other.est);
        self.cond.merge(&other.cond);
        self.cross.merge(&other.cross);
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn summary(&self) -> CellSummary {
        let n = self.count.max(1);
        CellSummary {
            pred_err: self.pred.mean(n),
            est_err: self.est.mean(n),
            std_err: self.pred.std_error(self.count),
            est_std_err: self.est.std_error(self.count),
            cond_var: self.cond.mean(n),
            cross_mean: self.cross.mean(n),
            cross_se: self.cross.std_error(self.count),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellSummary {
    pub pred_err: f64,
    pub est_err: f64,
    pub std_err: f64,
    pub est_std_err: f64,
    /// Mean of (Y - E_theta(Y|X))^2 over the replicates.
    pub cond_var: f64,
    pub cross_mean: f64,
    pub cross_se: f64,
}

/// Coordinates of one design point; fields a process does not use are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DesignPoint {
    pub theta: f64,
    pub m: Option<f64>,
    pub delta: Option<f64>,
    pub n: Option<usize>,
    pub s: Option<f64>,
    /// Horizon in time units (OU).
    pub big_h: Option<f64>,
    /// Horizon in time units for Poisson, in steps for sampled OU.
    pub h: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub design: DesignPoint,
    pub predictor: String,
    pub prior_id: String,
    pub prior_params: String,
    pub pred_err: f64,
    pub est_err: f64,
    pub pct_pred: f64,
    pub pct_est: f64,
    pub std_err: f64,
    pub est_std_err: f64,
    pub cond_var: f64,
    pub cross_mean: f64,
    pub cross_se: f64,
}

impl ReportRow {
    /// pred_err - est_err - cond_var; zero in expectation.
    pub fn pythagoras_gap(&self) -> f64 {
        self.pred_err - self.est_err - self.cond_var
    }
}

/// Analytic reference value printed next to a sweep, e.g. the edge of a
/// dominance region.
#[derive(Debug, Clone, PartialEq)]
pub struct Marker {
    pub design: DesignPoint,
    pub predictor: String,
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub process: ProcessKind,
    pub replicates: u64,
    pub master_seed: u64,
    pub rows: Vec<ReportRow>,
    pub markers: Vec<Marker>,
}

pub const CSV_HEADER: &str =
    "process,theta,m,delta,n,S,H,h,predictor,prior_id,prior_params,pred_err,est_err,pct_pred,pct_est,std_err,N,seed";

pub const MARKER_HEADER: &str = "process,theta,m,delta,n,S,H,h,predictor,marker,value";

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn design_fields(d: &DesignPoint) -> String {
    format!(
        "{},{},{},{},{},{},{}",
        d.theta,
        opt(d.m),
        opt(d.delta),
        opt(d.n),
        opt(d.s),
        opt(d.big_h),
        opt(d.h)
    )
}

impl ErrorReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(128 * (self.rows.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                self.process,
                design_fields(&r.design),
                r.predictor,
                r.prior_id,
                r.prior_params,
                r.pred_err,
                r.est_err,
                r.pct_pred,
                r.pct_est,
                r.std_err,
                self.replicates,
                self.master_seed
            );
        }
        out
    }

    pub fn markers_csv(&self) -> String {
        let mut out = String::from(MARKER_HEADER);
        out.push('\n');
        for mk in &self.markers {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                self.process,
                design_fields(&mk.design),
                mk.predictor,
                mk.name,
                mk.value
            );
        }
        out
    }

    /// First row matching the predicate.
    pub fn find(&self, pred: impl Fn(&ReportRow) -> bool) -> Option<&ReportRow> {
        self.rows.iter().find(|r| pred(r))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn percentage_examples() {
        assert_abs_diff_eq!(percentage_variation(0.066, 0.058).unwrap(), -12.12, epsilon = 0.01);
        assert_eq!(percentage_variation(0.3, 0.3).unwrap(), 0.0);
        assert_abs_diff_eq!(percentage_variation(0.050, 0.0658).unwrap(), 31.6, epsilon = 0.1);
        assert_eq!(percentage_variation(0.0, 1.0), Err(Error::UndefinedBaseline));
    }

    #[test]
    fn accumulator_decomposition_is_exact_per_sample() {
        let mut acc = CellAccumulator::new();
        for (p, y, c) in [(1.0, 2.0, 1.5), (0.3, -0.2, 0.1), (4.0, 4.0, 3.0)] {
            acc.push(p, y, c);
        }
        let s = acc.summary();
        assert_abs_diff_eq!(s.pred_err, s.est_err + s.cond_var + s.cross_mean, epsilon = 1e-14);
    }

    #[test]
    fn merge_matches_single_pass() {
        let data: Vec<(f64, f64, f64)> = (0..100).map(|i| (i as f64 * 0.1, (i as f64).sin(), 0.5)).collect();
        let mut whole = CellAccumulator::new();
        let mut a = CellAccumulator::new();
        let mut b = CellAccumulator::new();
        for (i, &(p, y, c)) in data.iter().enumerate() {
            whole.push(p, y, c);
            if i < 37 {
                a.push(p, y, c)
            } else {
                b.push(p, y, c)
            }
        }
        a.merge(&b);
        assert_eq!(a.count(), 100);
        let (x, y) = (a.summary(), whole.summary());
        assert_abs_diff_eq!(x.pred_err, y.pred_err, epsilon = 1e-13);
        assert_abs_diff_eq!(x.std_err, y.std_err, epsilon = 1e-13);
    }

    #[test]
    fn single_replicate_has_zero_std_error() {
        let mut acc = CellAccumulator::new();
        acc.push(1.0, 3.0, 2.0);
        assert_eq!(acc.summary().std_err, 0.0);
        assert_eq!(acc.summary().pred_err, 4.0);
    }
}
