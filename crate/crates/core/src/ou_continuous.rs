//! Inference from a continuously observed Ornstein-Uhlenbeck record
//! (approximated by a fine grid): the mean level with known rate, the rate
//! with known mean, and the derived predictors of X_{S+h}.

use crate::error::{ensure_positive, invalid, Error, Result};
use crate::normal::truncated_mean_below;
use crate::process_sim::{trapezoid_integrals, OuPath};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPrior {
    mean: f64,
    variance: f64,
}

impl GaussianPrior {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        if !mean.is_finite() {
            return Err(invalid(format!("prior mean must be finite, got {mean}")));
        }
        ensure_positive("prior variance", variance)?;
        Ok(Self { mean, variance })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    /// Precision 1/variance.
    pub fn precision(&self) -> f64 {
        1.0 / self.variance
    }
}

/// Exponential prior with rate `eta` shifted to start at `theta0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TranslatedExpPrior {
    eta: f64,
    theta0: f64,
}

impl TranslatedExpPrior {
    pub fn new(eta: f64, theta0: f64) -> Result<Self> {
        ensure_positive("eta", eta)?;
        if !(theta0.is_finite() && theta0 >= 0.0) {
            return Err(invalid(format!("theta0 must be non-negative, got {theta0}")));
        }
        Ok(Self { eta, theta0 })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn theta0(&self) -> f64 {
        self.theta0
    }
}

/// Sufficient statistics of a record on [0, S].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuSufficientStats {
    pub x0: f64,
    pub x_end: f64,
    pub s: f64,
    pub int_x: f64,
    pub int_x2: f64,
}

impl OuSufficientStats {
    pub fn new(x0: f64, x_end: f64, s: f64, int_x: f64, int_x2: f64) -> Result<Self> {
        ensure_positive("record length S", s)?;
        if !(int_x2.is_finite() && int_x2 >= 0.0) {
            return Err(invalid(format!("integral of X^2 must be non-negative, got {int_x2}")));
        }
        Ok(Self {
            x0,
            x_end,
            s,
            int_x,
            int_x2,
        })
    }

    /// Statistics of a path, with trapezoid quadrature for the integrals.
    pub fn from_path(path: &OuPath) -> Self {
        Self::from_grid(path.values(), path.step())
    }

    /// Same as [`from_path`](Self::from_path) for a path shifted by `-shift`.
    pub fn from_path_centred(path: &OuPath, shift: f64) -> Self {
        let centred: Vec<f64> = path.values().iter().map(|x| x - shift).collect();
        Self::from_grid(&centred, path.step())
    }

    fn from_grid(values: &[f64], step: f64) -> Self {
        let (int_x, int_x2) = trapezoid_integrals(values, step);
        Self {
            x0: values[0],
            x_end: values[values.len() - 1],
            s: step * (values.len() - 1) as f64,
            int_x,
            int_x2,
        }
    }

    /// Z_S = X_0 + X_S + theta * int_0^S X_t dt.
    pub fn z(&self, theta: f64) -> f64 {
        self.x0 + self.x_end + theta * self.int_x
    }

    /// (S - X_S^2 + X_0^2) / 2, the numerator of the rate MLE.
    fn rate_score(&self) -> f64 {
        0.5 * (self.s - self.x_end * self.x_end + self.x0 * self.x0)
    }
}

/// MLE of the mean level with known rate: Z_S / (2 + theta S).
pub fn mle_m(stats: &OuSufficientStats, theta: f64) -> f64 {
    stats.z(theta) / (2.0 + theta * stats.s)
}

/// Weight of the MLE in the posterior mean of m under a N(m0, u^2) prior.
pub fn bayes_m_weight(stats: &OuSufficientStats, theta: f64, prior: &GaussianPrior) -> f64 {
    1.0 / (1.0 + prior.precision() / (theta * (2.0 + theta * stats.s)))
}

/// Posterior mean of m: (Z_S + m0/(theta u^2)) / (2 + theta S + 1/(theta u^2)).
pub fn bayes_m(stats: &OuSufficientStats, theta: f64, prior: &GaussianPrior) -> f64 {
    let prior_weight = prior.precision() / theta;
    (stats.z(theta) + prior.mean * prior_weight) / (2.0 + theta * stats.s + prior_weight)
}

/// E(X_{S+h} | X_S) with the mean level replaced by an estimate.
pub fn predict_m_known_theta(m_est: f64, x_end: f64, theta: f64, h: f64) -> f64 {
    let decay = (-theta * h).exp();
    m_est * (1.0 - decay) + decay * x_end
}

/// Largest |m - m0| for which the Bayes predictor beats the MLE predictor:
/// sqrt(1/(theta (2 + theta S)) + 2 u^2). Tends to u sqrt(2) as S grows.
pub fn dominance_bound_m(theta: f64, s: f64, u2: f64) -> f64 {
    let sampling = if s.is_infinite() {
        0.0
    } else {
        1.0 / (theta * (2.0 + theta * s))
    };
    (sampling + 2.0 * u2).sqrt()
}

/// Rate MLE with known mean zero; may be negative on atypical records.
pub fn mle_theta(stats: &OuSufficientStats) -> Result<f64> {
    if stats.int_x2 <= 0.0 {
        return Err(Error::DegeneratePath("integral of X^2 is zero"));
    }
    Ok(stats.rate_score() / stats.int_x2)
}

/// Posterior precision and shifted score (alpha, beta) of the rate under a
/// N(theta0, v^2) prior; the posterior is N(beta/alpha, 1/alpha).
pub fn rate_posterior(stats: &OuSufficientStats, prior: &GaussianPrior) -> (f64, f64) {
    let alpha = stats.int_x2 + prior.precision();
    let beta = stats.rate_score() + prior.mean * prior.precision();
    (alpha, beta)
}

pub fn bayes_theta(stats: &OuSufficientStats, prior: &GaussianPrior) -> f64 {
    let (alpha, beta) = rate_posterior(stats, prior);
    beta / alpha
}

/// Posterior mean of e^{-theta h} times X_S: exp(-(2 beta - h) h / (2 alpha)) X_S.
pub fn bayes_predict_theta_unknown(stats: &OuSufficientStats, prior: &GaussianPrior, h: f64) -> f64 {
    let (alpha, beta) = rate_posterior(stats, prior);
    (-(2.0 * beta - h) * h / (2.0 * alpha)).exp() * stats.x_end
}

/// Plug-in of the posterior mode (equal to the mean) into e^{-theta h} X_S.
pub fn map_predict_theta_unknown(stats: &OuSufficientStats, prior: &GaussianPrior, h: f64) -> f64 {
    (-bayes_theta(stats, prior) * h).exp() * stats.x_end
}

/// MLE plug-in predictor e^{-theta_S h} X_S.
pub fn mle_predict_theta_unknown(stats: &OuSufficientStats, h: f64) -> Result<f64> {
    Ok((-mle_theta(stats)? * h).exp() * stats.x_end)
}

/// Parameters (mean, variance) of the Gaussian kernel psi that, restricted
/// to (theta0, inf), is the posterior of the rate under a translated
/// exponential prior.
pub fn translated_exp_kernel(stats: &OuSufficientStats, prior: &TranslatedExpPrior) -> Result<(f64, f64)> {
    if stats.int_x2 <= 0.0 {
        return Err(Error::DegeneratePath("integral of X^2 is zero"));
    }
    let a = stats.x_end * stats.x_end - stats.x0 * stats.x0 - stats.s + 2.0 * prior.eta;
    let b = stats.int_x2;
    Ok((-a / (2.0 * b), 1.0 / b))
}

/// Posterior mean of the rate under a translated exponential prior.
pub fn bayes_theta_translated_exp(stats: &OuSufficientStats, prior: &TranslatedExpPrior) -> Result<f64> {
    let (mean, variance) = translated_exp_kernel(stats, prior)?;
    Ok(truncated_mean_below(mean, variance.sqrt(), prior.theta0))
}
