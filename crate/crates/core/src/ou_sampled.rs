//! Inference from equispaced samples X_0, X_delta, ..., X_{n delta} of an
//! OU process: estimators of the mean level (rate known), estimators of the
//! autoregression coefficient rho = e^{-theta delta} (mean known), their
//! closed-form variances and the h-step predictors built on them.

use crate::error::{ensure_positive, invalid, Error, Result};
use crate::numeric::{compensated_sum, KahanSum};
use crate::ou_continuous::GaussianPrior;
use crate::process_sim::{innovation_variance, OuPath};

/// Sample sums of one path, built in a single compensated pass.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledStats {
    n: usize,
    step: f64,
    x0: f64,
    x_end: f64,
    sum_interior: f64,
    sum_all: f64,
    sum_lag_prod: f64,
    sum_lag_sq: f64,
    values: Vec<f64>,
}

impl SampledStats {
    pub fn from_values(values: &[f64], step: f64) -> Result<Self> {
        ensure_positive("step", step)?;
        if values.len() < 2 {
            return Err(invalid("sampled statistics need at least two values"));
        }
        let n = values.len() - 1;
        let mut lag_prod = KahanSum::new();
        let mut lag_sq = KahanSum::new();
        for w in values.windows(2) {
            lag_prod.add(w[0] * w[1]);
            lag_sq.add(w[0] * w[0]);
        }
        Ok(Self {
            n,
            step,
            x0: values[0],
            x_end: values[n],
            sum_interior: compensated_sum(values[1..n].iter().copied()),
            sum_all: compensated_sum(values[1..].iter().copied()),
            sum_lag_prod: lag_prod.value(),
            sum_lag_sq: lag_sq.value(),
            values: values.to_vec(),
        })
    }

    pub fn from_path(path: &OuPath) -> Self {
        Self::from_values(path.values(), path.step()).expect("OuPath invariants guarantee valid stats")
    }

    /// Statistics of the path shifted by `-shift` (known-mean models).
    pub fn from_path_centred(path: &OuPath, shift: f64) -> Self {
        let centred: Vec<f64> = path.values().iter().map(|x| x - shift).collect();
        Self::from_values(&centred, path.step()).expect("OuPath invariants guarantee valid stats")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn x_end(&self) -> f64 {
        self.x_end
    }

    /// Sum of X_{i delta} for i = 1 .. n-1.
    pub fn sum_interior(&self) -> f64 {
        self.sum_interior
    }

    /// Sum of X_{i delta} for i = 1 .. n.
    pub fn sum_all(&self) -> f64 {
        self.sum_all
    }

    /// Sum of X_{(i-1) delta} X_{i delta}.
    pub fn sum_lag_prod(&self) -> f64 {
        self.sum_lag_prod
    }

    /// Sum of X_{(i-1) delta}^2.
    pub fn sum_lag_sq(&self) -> f64 {
        self.sum_lag_sq
    }

    /// Sample mean of X_delta .. X_{n delta}.
    pub fn sample_mean(&self) -> f64 {
        self.sum_all / self.n as f64
    }

    /// Sum of X_{i delta} - rho X_{(i-1) delta}, straight from the path.
    pub fn sum_increments(&self, rho: f64) -> f64 {
        compensated_sum(self.values.windows(2).map(|w| w[1] - rho * w[0]))
    }
}

fn decay(theta: f64, step: f64) -> (f64, f64) {
    // (rho, 1 - rho) without cancellation for small theta*step
    let one_minus = -(-theta * step).exp_m1();
    (1.0 - one_minus, one_minus)
}

/// Exact-likelihood MLE of m (rate known).
pub fn mle_m_sampled(stats: &SampledStats, theta: f64) -> f64 {
    let (rho, one_minus) = decay(theta, stats.step);
    (stats.x0 + stats.x_end + one_minus * stats.sum_interior) / (stats.n as f64 * one_minus + 1.0 + rho)
}

/// Weight alpha_n of the MLE in the posterior mean of m.
pub fn bayes_m_sampled_weight(n: usize, step: f64, theta: f64, prior: &GaussianPrior) -> f64 {
    let (rho, one_minus) = decay(theta, step);
    let data = n as f64 * one_minus + 1.0 + rho;
    data / (n as f64 * one_minus + (1.0 + rho) * (1.0 + prior.precision() / (2.0 * theta)))
}

/// Posterior mean of m under N(m0, u^2) with the exact likelihood.
pub fn bayes_m_sampled(stats: &SampledStats, theta: f64, prior: &GaussianPrior) -> f64 {
    let (rho, one_minus) = decay(theta, stats.step);
    let prior_term = (1.0 + rho) * prior.precision() / (2.0 * theta);
    let numerator = stats.x0 + stats.x_end + one_minus * stats.sum_interior + prior_term * prior.mean();
    let denominator = stats.n as f64 * one_minus + (1.0 + rho) + prior_term;
    numerator / denominator
}

/// Conditional MLE (X_0 treated as fixed).
pub fn cmle_m(stats: &SampledStats, theta: f64) -> f64 {
    let (rho, one_minus) = decay(theta, stats.step);
    stats.sum_increments(rho) / (one_minus * stats.n as f64)
}

/// Posterior mean of m under the conditional likelihood.
pub fn cmap1_m(stats: &SampledStats, theta: f64, prior: &GaussianPrior) -> f64 {
    let (rho, one_minus) = decay(theta, stats.step);
    let noise_ratio = innovation_variance(theta, stats.step) * prior.precision();
    (one_minus * stats.sum_increments(rho) + prior.mean() * noise_ratio)
        / (one_minus * one_minus * stats.n as f64 + noise_ratio)
}

/// Shrinkage weight beta_n of the sample mean in the CMAP2 estimator.
pub fn cmap2_weight(n: usize, step: f64, theta: f64, prior: &GaussianPrior) -> f64 {
    let (_, one_minus) = decay(theta, step);
    let signal = one_minus * one_minus;
    signal / (signal + innovation_variance(theta, step) * prior.precision() / n as f64)
}

/// Sample mean shrunk toward m0: beta_n Xbar_n + (1 - beta_n) m0.
pub fn cmap2_m(stats: &SampledStats, theta: f64, prior: &GaussianPrior) -> f64 {
    let beta = cmap2_weight(stats.n, stats.step, theta, prior);
    beta * stats.sample_mean() + (1.0 - beta) * prior.mean()
}

/// E (m_n - m)^2 for the exact-likelihood MLE.
pub fn var_mle_m(n: usize, step: f64, theta: f64) -> f64 {
    let (rho, one_minus) = decay(theta, step);
    (1.0 + rho) / (2.0 * theta * (n as f64 * one_minus + 1.0 + rho))
}

/// Var of the sample mean of X_delta .. X_{n delta}.
pub fn var_mean(n: usize, step: f64, theta: f64) -> f64 {
    let (rho, one_minus) = decay(theta, step);
    let nf = n as f64;
    let one_minus_rho_sq = -(-2.0 * theta * step).exp_m1();
    let rho_n_minus_one = (-theta * step * nf).exp_m1();
    (one_minus_rho_sq + 2.0 / nf * rho * rho_n_minus_one) / (2.0 * nf * theta * one_minus * one_minus)
}

/// Bound on (m - m0)^2 below which the Bayes predictor beats the MLE one:
/// 2 u^2 + E (m_n - m)^2.
pub fn dominance_m_sampled(theta: f64, n: usize, step: f64, u2: f64) -> f64 {
    2.0 * u2 + var_mle_m(n, step, theta)
}

/// Least-squares (conditional MLE) estimate of rho, unclamped.
pub fn rho_cmle(stats: &SampledStats) -> Result<f64> {
    if stats.sum_lag_sq <= 0.0 {
        return Err(Error::DegeneratePath("sum of squared lagged values is zero"));
    }
    Ok(stats.sum_lag_prod / stats.sum_lag_sq)
}

/// Noise variance used in the Gaussian posterior of rho.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RhoNoise {
    /// sigma^2 replaced by the step itself.
    #[default]
    Step,
    /// sigma^2_{delta, theta} evaluated at the rate implied by the prior mean.
    Exact,
}

/// Posterior mean of rho under N(rho0, v^2). With `RhoNoise::Step` the
/// correction terms are rho0 delta / v^2 and delta / v^2.
pub fn rho_bayes(stats: &SampledStats, prior: &GaussianPrior, noise: RhoNoise) -> f64 {
    let shrink = rho_prior_strength(stats.step, prior, noise);
    (stats.sum_lag_prod + prior.mean() * shrink) / (stats.sum_lag_sq + shrink)
}

/// delta / v^2 (or sigma^2 / v^2): weight of the prior mean in `rho_bayes`.
pub fn rho_prior_strength(step: f64, prior: &GaussianPrior, noise: RhoNoise) -> f64 {
    let noise_var = match noise {
        RhoNoise::Step => step,
        RhoNoise::Exact => {
            let rho0 = prior.mean();
            if rho0 > 0.0 && rho0 < 1.0 {
                innovation_variance(-rho0.ln() / step, step)
            } else {
                step
            }
        }
    };
    noise_var * prior.precision()
}

/// Clamp a rho estimate into [0, 1].
pub fn clamp_rho(rho: f64) -> f64 {
    rho.clamp(0.0, 1.0)
}

/// m_est (1 - e^{-theta h delta}) + e^{-theta h delta} X_{n delta}.
pub fn predict_sampled_m(m_est: f64, x_end: f64, theta: f64, h_steps: u32, step: f64) -> f64 {
    let decay = (-theta * h_steps as f64 * step).exp();
    m_est * (1.0 - decay) + decay * x_end
}

/// rho_est^h X_{n delta} for the centred (known-mean) model.
pub fn predict_sampled_rho(rho_est: f64, x_end: f64, h_steps: u32) -> f64 {
    rho_est.powi(h_steps as i32) * x_end
}
