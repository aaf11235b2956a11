//! Predictors of N_{S+h} from N_S for a homogeneous Poisson process.
//!
//! Every predictor here has the form `N_S + theta_estimate * h`, so they
//! differ only in the embedded estimator of the intensity: the unbiased
//! `N_S / S`, the Gamma posterior mean, or the Gamma posterior mode.

use std::fmt;

use statrs::function::gamma::ln_gamma;

use crate::error::{ensure_positive, invalid, Error, Result};
use crate::numeric::KahanSum;

/// Gamma(shape, rate) prior on the intensity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaPrior {
    a: f64,
    b: f64,
}

impl GammaPrior {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        ensure_positive("gamma shape a", a)?;
        ensure_positive("gamma rate b", b)?;
        Ok(Self { a, b })
    }

    pub fn shape(&self) -> f64 {
        self.a
    }

    pub fn rate(&self) -> f64 {
        self.b
    }

    /// Prior mean a/b.
    pub fn mean(&self) -> f64 {
        self.a / self.b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PoissonLabel {
    Up,
    Bp,
    Map,
}

impl PoissonLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            PoissonLabel::Up => "UP",
            PoissonLabel::Bp => "BP",
            PoissonLabel::Map => "MAP",
        }
    }
}

impl fmt::Display for PoissonLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub label: PoissonLabel,
    pub value: f64,
    pub theta_estimate: f64,
}

impl Prediction {
    fn from_estimate(label: PoissonLabel, n_s: u64, theta_estimate: f64, h: f64) -> Self {
        Self {
            label,
            value: n_s as f64 + theta_estimate * h,
            theta_estimate,
        }
    }
}

fn check_window(s: f64, h: f64) -> Result<()> {
    ensure_positive("observation length S", s)?;
    if !(h.is_finite() && h >= 0.0) {
        return Err(invalid(format!("horizon h must be non-negative, got {h}")));
    }
    Ok(())
}

/// Unbiased efficient predictor ((S + h) / S) N_S.
pub fn up_predict(n_s: u64, s: f64, h: f64) -> Result<Prediction> {
    check_window(s, h)?;
    Ok(Prediction::from_estimate(PoissonLabel::Up, n_s, n_s as f64 / s, h))
}

/// Bayesian predictor under a Gamma(a, b) prior: posterior mean (a + N_S)/(b + S).
pub fn bayes_predict(n_s: u64, s: f64, h: f64, prior: &GammaPrior) -> Result<Prediction> {
    check_window(s, h)?;
    let estimate = (prior.a + n_s as f64) / (prior.b + s);
    Ok(Prediction::from_estimate(PoissonLabel::Bp, n_s, estimate, h))
}

/// MAP predictor: posterior mode (N_S + a - 1)/(b + S); requires a >= 1.
///
/// The shape is shifted before it meets the count, so `map_predict` with
/// shape `a` reproduces `bayes_predict` with shape `a - 1` bit for bit.
pub fn map_predict(n_s: u64, s: f64, h: f64, prior: &GammaPrior) -> Result<Prediction> {
    check_window(s, h)?;
    if prior.a < 1.0 {
        return Err(invalid(format!(
            "MAP predictor needs gamma shape a >= 1, got {}",
            prior.a
        )));
    }
    let shifted = prior.a - 1.0;
    let estimate = (shifted + n_s as f64) / (prior.b + s);
    Ok(Prediction::from_estimate(PoissonLabel::Map, n_s, estimate, h))
}

/// A Poisson predictor together with the prior it uses, if any.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PoissonPredictor {
    Unbiased,
    Bayes(GammaPrior),
    Map(GammaPrior),
}

impl PoissonPredictor {
    pub fn label(&self) -> PoissonLabel {
        match self {
            PoissonPredictor::Unbiased => PoissonLabel::Up,
            PoissonPredictor::Bayes(_) => PoissonLabel::Bp,
            PoissonPredictor::Map(_) => PoissonLabel::Map,
        }
    }

    pub fn prior(&self) -> Option<&GammaPrior> {
        match self {
            PoissonPredictor::Unbiased => None,
            PoissonPredictor::Bayes(p) | PoissonPredictor::Map(p) => Some(p),
        }
    }

    pub fn predict(&self, n_s: u64, s: f64, h: f64) -> Result<Prediction> {
        match self {
            PoissonPredictor::Unbiased => up_predict(n_s, s, h),
            PoissonPredictor::Bayes(prior) => bayes_predict(n_s, s, h, prior),
            PoissonPredictor::Map(prior) => map_predict(n_s, s, h, prior),
        }
    }
}

/// Open interval of true intensities on which the Bayes predictor has
/// strictly smaller risk than the unbiased one, for observation length `s`:
/// solutions of (theta - theta0)^2 < (1/S + 2/b) theta.
pub fn dominance_interval_at_s(prior: &GammaPrior, s: f64) -> (f64, f64) {
    let theta0 = prior.mean();
    let inv_s = if s.is_infinite() { 0.0 } else { 1.0 / s };
    let center = theta0 + 0.5 * inv_s + 1.0 / prior.b;
    let root = (center * center - theta0 * theta0).sqrt();
    (center - root, center + root)
}

/// Interval valid for every S: ((a + 1) -+ sqrt(2a + 1)) / b.
pub fn dominance_interval_all_s(prior: &GammaPrior) -> (f64, f64) {
    let center = prior.a + 1.0;
    let root = (2.0 * prior.a + 1.0).sqrt();
    ((center - root) / prior.b, (center + root) / prior.b)
}

/// Range of Gamma shapes `a` (rate `b` fixed) for which the Bayes predictor
/// beats the unbiased one at true intensity `theta`: the roots of
/// (theta - a/b)^2 = (1/S + 2/b) theta in `a`. For the MAP predictor the
/// range is shifted up by one. Roots are returned as is; only a > 0 (Bayes)
/// or a >= 1 (MAP) are admissible shapes.
pub fn dominance_shape_range(theta: f64, b: f64, s: f64, label: PoissonLabel) -> (f64, f64) {
    let half_width = b * ((1.0 / s + 2.0 / b) * theta).sqrt();
    let shift = if label == PoissonLabel::Map { 1.0 } else { 0.0 };
    (b * theta - half_width + shift, b * theta + half_width + shift)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactRisk {
    /// E (p(N_S) - (N_S + theta h))^2
    pub estimation_risk: f64,
    /// estimation risk plus the conditional variance theta h
    pub prediction_risk: f64,
    /// Poisson(theta S) mass beyond the truncation point
    pub tail_mass: f64,
    pub truncation: u64,
}

const TAIL_LIMIT: f64 = 1e-12;

/// Default truncation k <= theta S + 12 sqrt(theta S) + 50.
pub fn default_truncation(theta: f64, s: f64) -> u64 {
    let mean = theta * s;
    (mean + 12.0 * mean.sqrt() + 50.0).ceil() as u64
}

fn ln_poisson_pmf(k: u64, mean: f64) -> f64 {
    if mean == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    -mean + k as f64 * mean.ln() - ln_gamma(k as f64 + 1.0)
}

fn poisson_tail_beyond(truncation: u64, mean: f64) -> f64 {
    let mut tail = KahanSum::new();
    let mut k = truncation + 1;
    loop {
        let term = ln_poisson_pmf(k, mean).exp();
        tail.add(term);
        // past the mode the terms only shrink
        if k as f64 > mean && term <= tail.value() * 1e-18 {
            break;
        }
        k += 1;
    }
    tail.value()
}

/// Risk of a Poisson predictor by direct summation over the law of N_S.
pub fn exact_risk_poisson(
    predictor: &PoissonPredictor,
    theta: f64,
    s: f64,
    h: f64,
    truncation: Option<u64>,
) -> Result<ExactRisk> {
    ensure_positive("theta", theta)?;
    check_window(s, h)?;
    let truncation = truncation.unwrap_or_else(|| default_truncation(theta, s));
    let mean = theta * s;
    let tail_mass = poisson_tail_beyond(truncation, mean);
    if tail_mass > TAIL_LIMIT {
        return Err(Error::TailMass {
            truncation,
            tail_mass,
        });
    }
    let mut risk = KahanSum::new();
    for k in 0..=truncation {
        let weight = ln_poisson_pmf(k, mean).exp();
        if weight == 0.0 {
            continue;
        }
        let target = k as f64 + theta * h;
        let gap = predictor.predict(k, s, h)?.value - target;
        risk.add(weight * gap * gap);
    }
    let estimation_risk = risk.value();
    Ok(ExactRisk {
        estimation_risk,
        prediction_risk: estimation_risk + theta * h,
        tail_mass,
        truncation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn prior(a: f64, b: f64) -> GammaPrior {
        GammaPrior::new(a, b).unwrap()
    }

    #[test]
    fn unbiased_examples() {
        assert_eq!(up_predict(0, 10.0, 1.0).unwrap().value, 0.0);
        let p = up_predict(20, 10.0, 1.0).unwrap();
        assert_abs_diff_eq!(p.value, 22.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.theta_estimate, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(up_predict(15, 15.0, 2.0).unwrap().value, 17.0, epsilon = 1e-12);
        assert!(up_predict(3, 0.0, 1.0).is_err());
    }

    #[test]
    fn bayes_examples() {
        let p = bayes_predict(20, 10.0, 1.0, &prior(1.0, 1.0)).unwrap();
        assert_abs_diff_eq!(p.theta_estimate, 21.0 / 11.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.value, 20.0 + 21.0 / 11.0, epsilon = 1e-12);
        let p = bayes_predict(0, 10.0, 1.0, &prior(1.0, 1.0)).unwrap();
        assert_abs_diff_eq!(p.value, 1.0 / 11.0, epsilon = 1e-12);
        // overwhelming prior: b large with a = b theta0
        let theta0 = 0.7;
        let b = 1e12;
        let p = bayes_predict(20, 10.0, 3.0, &prior(b * theta0, b)).unwrap();
        assert_abs_diff_eq!(p.value, 20.0 + theta0 * 3.0, epsilon = 1e-9);
    }

    #[test]
    fn map_examples() {
        let p = map_predict(20, 10.0, 1.0, &prior(1.0, 1.0)).unwrap();
        assert_abs_diff_eq!(p.theta_estimate, 20.0 / 11.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.value, 20.0 + 20.0 / 11.0, epsilon = 1e-12);
        assert_eq!(map_predict(0, 10.0, 1.0, &prior(1.0, 1.0)).unwrap().value, 0.0);
        assert!(matches!(
            map_predict(3, 10.0, 1.0, &prior(0.5, 1.0)),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn invalid_prior_rejected() {
        assert!(GammaPrior::new(0.0, 1.0).is_err());
        assert!(GammaPrior::new(1.0, -2.0).is_err());
    }

    #[test]
    fn dominance_at_s_example() {
        let (lo, hi) = dominance_interval_at_s(&prior(1.0, 1.0), 20.0);
        // center 2.025, sqrt(2.025^2 - 1)
        let root = (2.025f64 * 2.025 - 1.0).sqrt();
        assert_abs_diff_eq!(root, 1.760_859, epsilon = 1e-6);
        assert_abs_diff_eq!(lo, 2.025 - root, epsilon = 1e-12);
        assert_abs_diff_eq!(hi, 2.025 + root, epsilon = 1e-12);
        assert_abs_diff_eq!(lo, 0.264_14, epsilon = 1e-4);
        assert_abs_diff_eq!(hi, 3.785_86, epsilon = 1e-4);
    }

    #[test]
    fn dominance_all_s_examples() {
        let (lo, hi) = dominance_interval_all_s(&prior(1.0, 1.0));
        assert_abs_diff_eq!(lo, 2.0 - 3f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(hi, 2.0 + 3f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(lo, 0.267_95, epsilon = 1e-5);
        assert_abs_diff_eq!(hi, 3.732_05, epsilon = 1e-5);
        let (lo, hi) = dominance_interval_all_s(&prior(4.0, 1.0));
        assert_abs_diff_eq!(lo, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(hi, 8.0, epsilon = 1e-15);
        // S -> infinity limit of the S-dependent interval
        let p = prior(2.5, 0.8);
        let (a, b) = dominance_interval_at_s(&p, f64::INFINITY);
        let (c, d) = dominance_interval_all_s(&p);
        assert_abs_diff_eq!(a, c, epsilon = 1e-12);
        assert_abs_diff_eq!(b, d, epsilon = 1e-12);
    }

    #[test]
    fn dominance_lower_end_vanishes_with_prior_mean() {
        let (lo, _) = dominance_interval_at_s(&prior(1e-12, 1.0), 10.0);
        assert!(lo.abs() < 1e-9);
    }

    #[test]
    fn shape_range_matches_figure_markers() {
        // theta = 1, b = 1: Bayes wins for a < 1 + sqrt(1/S + 2), MAP for 2 +- sqrt(1/S + 2)
        let s = 20.0;
        let w = (1.0 / s + 2.0f64).sqrt();
        let (_, hi) = dominance_shape_range(1.0, 1.0, s, PoissonLabel::Bp);
        assert_abs_diff_eq!(hi, 1.0 + w, epsilon = 1e-12);
        let (lo, hi) = dominance_shape_range(1.0, 1.0, s, PoissonLabel::Map);
        assert_abs_diff_eq!(lo, 2.0 - w, epsilon = 1e-12);
        assert_abs_diff_eq!(hi, 2.0 + w, epsilon = 1e-12);
    }

    #[test]
    fn exact_risk_unbiased() {
        let r = exact_risk_poisson(&PoissonPredictor::Unbiased, 1.0, 15.0, 1.0, None).unwrap();
        assert_abs_diff_eq!(r.estimation_risk, 1.0 / 15.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.prediction_risk, 1.0 + 1.0 / 15.0, epsilon = 1e-12);
        assert!(r.tail_mass < 1e-12);
        let r = exact_risk_poisson(&PoissonPredictor::Unbiased, 1.0, 15.0, 1e-9, None).unwrap();
        assert!(r.prediction_risk < 1e-8);
    }

    #[test]
    fn exact_risk_bayes_matches_decomposition() {
        // alpha^2 theta h^2 / S + (1 - alpha)^2 h^2 (theta0 - theta)^2
        let bp = PoissonPredictor::Bayes(prior(1.0, 1.0));
        let r = exact_risk_poisson(&bp, 1.0, 15.0, 1.0, None).unwrap();
        let alpha: f64 = 15.0 / 16.0;
        assert_abs_diff_eq!(r.estimation_risk, alpha * alpha / 15.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.estimation_risk / (1.0 / 15.0) - 1.0, -0.121, epsilon = 1e-3);
    }

    #[test]
    fn short_truncation_is_reported() {
        let err = exact_risk_poisson(&PoissonPredictor::Unbiased, 1.0, 15.0, 1.0, Some(10)).unwrap_err();
        match err {
            Error::TailMass { truncation, tail_mass } => {
                assert_eq!(truncation, 10);
                assert!(tail_mass > 0.1);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    proptest! {
        #[test]
        fn bayes_is_mixture_of_unbiased_and_prior(
            n_s in 0u64..500, s in 0.1f64..200.0, h in 0.01f64..20.0,
            a in 0.05f64..20.0, b in 0.05f64..20.0,
        ) {
            let p = prior(a, b);
            let alpha = s / (b + s);
            let mixed = alpha * up_predict(n_s, s, h).unwrap().value
                + (1.0 - alpha) * (n_s as f64 + p.mean() * h);
            let bayes = bayes_predict(n_s, s, h, &p).unwrap().value;
            prop_assert!((bayes - mixed).abs() <= 1e-12 * bayes.abs().max(1.0));
        }

        #[test]
        fn map_is_shifted_bayes(
            n_s in 0u64..500, s in 0.1f64..200.0, h in 0.01f64..20.0,
            a in 1.0f64..20.0, b in 0.05f64..20.0,
        ) {
            let map = map_predict(n_s, s, h, &prior(a, b)).unwrap();
            if a > 1.0 {
                let bayes = bayes_predict(n_s, s, h, &prior(a - 1.0, b)).unwrap();
                prop_assert_eq!(map.value, bayes.value);
            }
            prop_assert_eq!(map.value, n_s as f64 + map.theta_estimate * h);
        }

        #[test]
        fn interval_at_s_contains_all_s_interval(a in 0.05f64..20.0, b in 0.05f64..20.0, s in 0.1f64..1e4) {
            let p = prior(a, b);
            let (lo, hi) = dominance_interval_at_s(&p, s);
            let (lo_all, hi_all) = dominance_interval_all_s(&p);
            prop_assert!(lo <= lo_all + 1e-12 && hi_all <= hi + 1e-12);
        }
    }
}
