//! Exact simulation of homogeneous Poisson and stationary Ornstein-Uhlenbeck
//! paths, and the path functionals consumed by the estimators.
//!
//! Poisson paths are stored as event times so that a single trajectory can be
//! evaluated at any observation time and horizon. OU paths are simulated on a
//! grid through the exact AR(1) transition of the process with unit diffusion,
//! so grid values carry no discretisation error; only the integrals computed
//! from them do.

use crate::error::{ensure_positive, invalid, Error, Result};
use crate::numeric::KahanSum;
use crate::rng::RngStream;

#[derive(Debug, Clone, PartialEq)]
pub struct PoissonPath {
    intensity_true: f64,
    horizon: f64,
    event_times: Vec<f64>,
}

impl PoissonPath {
    /// Builds a path from explicit event times, which must be strictly
    /// increasing, positive and no later than `horizon`.
    pub fn from_event_times(intensity_true: f64, horizon: f64, event_times: Vec<f64>) -> Result<Self> {
        ensure_positive("intensity", intensity_true)?;
        if !(horizon.is_finite() && horizon >= 0.0) {
            return Err(invalid(format!("horizon must be non-negative, got {horizon}")));
        }
        if event_times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("event times must be strictly increasing"));
        }
        if event_times.iter().any(|&t| t <= 0.0 || t > horizon) {
            return Err(invalid("event times must lie in (0, horizon]"));
        }
        Ok(Self {
            intensity_true,
            horizon,
            event_times,
        })
    }

    pub fn intensity_true(&self) -> f64 {
        self.intensity_true
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn event_times(&self) -> &[f64] {
        &self.event_times
    }

    /// Number of events in [0, t].
    pub fn count_at(&self, t: f64) -> Result<u64> {
        if !(t >= 0.0 && t <= self.horizon) {
            return Err(Error::OutOfRange {
                t,
                horizon: self.horizon,
            });
        }
        Ok(self.event_times.partition_point(|&e| e <= t) as u64)
    }
}

/// Cumulative sums of Exponential(theta) gaps, truncated at `horizon`.
pub fn simulate_poisson(theta: f64, horizon: f64, rng: &mut RngStream) -> Result<PoissonPath> {
    ensure_positive("theta", theta)?;
    if !(horizon.is_finite() && horizon >= 0.0) {
        return Err(invalid(format!("horizon must be non-negative, got {horizon}")));
    }
    let mut event_times = Vec::with_capacity((theta * horizon * 1.2) as usize + 8);
    let mut t = 0.0;
    loop {
        t += rng.exponential(theta);
        if t > horizon {
            break;
        }
        event_times.push(t);
    }
    Ok(PoissonPath {
        intensity_true: theta,
        horizon,
        event_times,
    })
}

pub fn count_at(path: &PoissonPath, t: f64) -> Result<u64> {
    path.count_at(t)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OuPath {
    m_true: f64,
    theta_true: f64,
    step: f64,
    values: Vec<f64>,
}

impl OuPath {
    pub fn from_values(m_true: f64, theta_true: f64, step: f64, values: Vec<f64>) -> Result<Self> {
        ensure_positive("theta", theta_true)?;
        ensure_positive("step", step)?;
        if values.len() < 2 {
            return Err(invalid("an OU path needs at least two values"));
        }
        Ok(Self {
            m_true,
            theta_true,
            step,
            values,
        })
    }

    pub fn m_true(&self) -> f64 {
        self.m_true
    }

    pub fn theta_true(&self) -> f64 {
        self.theta_true
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of steps n (values hold X_0 .. X_{n step}).
    pub fn n(&self) -> usize {
        self.values.len() - 1
    }

    pub fn duration(&self) -> f64 {
        self.n() as f64 * self.step
    }

    /// Every `stride`-th value of the first `steps * stride` steps, i.e. the
    /// path seen on a grid of step `stride * self.step` with `steps` steps.
    pub fn subsample(&self, stride: usize, steps: usize) -> Result<OuPath> {
        if stride == 0 || steps == 0 {
            return Err(invalid("stride and steps must be positive"));
        }
        if stride * steps > self.n() {
            return Err(invalid(format!(
                "cannot take {steps} steps of stride {stride} from a path of {} steps",
                self.n()
            )));
        }
        let values = (0..=steps).map(|i| self.values[i * stride]).collect();
        Ok(OuPath {
            m_true: self.m_true,
            theta_true: self.theta_true,
            step: self.step * stride as f64,
            values,
        })
    }
}

/// Variance of the one-step innovation of the OU process sampled at `step`:
/// (1 - e^{-2 theta step}) / (2 theta).
pub fn innovation_variance(theta: f64, step: f64) -> f64 {
    -(-2.0 * theta * step).exp_m1() / (2.0 * theta)
}

/// Stationary OU path on a grid: X_0 ~ N(m, 1/(2 theta)) followed by the exact
/// AR(1) recursion X_k - m = e^{-theta step}(X_{k-1} - m) + eps_k.
pub fn simulate_ou(m: f64, theta: f64, step: f64, n: usize, rng: &mut RngStream) -> Result<OuPath> {
    if !m.is_finite() {
        return Err(invalid(format!("m must be finite, got {m}")));
    }
    ensure_positive("theta", theta)?;
    ensure_positive("step", step)?;
    if n == 0 {
        return Err(invalid("n must be at least 1"));
    }
    let rho = (-theta * step).exp();
    let innovation_sd = innovation_variance(theta, step).sqrt();
    let mut values = Vec::with_capacity(n + 1);
    let mut centred = rng.standard_normal() / (2.0 * theta).sqrt();
    values.push(m + centred);
    for _ in 0..n {
        centred = rho * centred + innovation_sd * rng.standard_normal();
        values.push(m + centred);
    }
    Ok(OuPath {
        m_true: m,
        theta_true: theta,
        step,
        values,
    })
}

/// Trapezoid approximations of the integral of X and of X^2 over the path.
pub fn path_integrals(path: &OuPath) -> (f64, f64) {
    trapezoid_integrals(path.values(), path.step())
}

pub(crate) fn trapezoid_integrals(values: &[f64], step: f64) -> (f64, f64) {
    let mut int_x = KahanSum::new();
    let mut int_x2 = KahanSum::new();
    for w in values.windows(2) {
        int_x.add(0.5 * (w[0] + w[1]));
        int_x2.add(0.5 * (w[0] * w[0] + w[1] * w[1]));
    }
    (step * int_x.value(), step * int_x2.value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn three_events() -> PoissonPath {
        PoissonPath::from_event_times(1.0, 5.0, vec![0.4, 1.2, 3.0]).unwrap()
    }

    #[test]
    fn zero_horizon_gives_no_events() {
        let path = simulate_poisson(1.0, 0.0, &mut RngStream::new(1, 0)).unwrap();
        assert!(path.event_times().is_empty());
    }

    #[test]
    fn rejects_bad_poisson_parameters() {
        let mut rng = RngStream::new(1, 0);
        assert!(matches!(simulate_poisson(0.0, 1.0, &mut rng), Err(Error::InvalidParameter(_))));
        assert!(matches!(simulate_poisson(-1.0, 1.0, &mut rng), Err(Error::InvalidParameter(_))));
        assert!(matches!(simulate_poisson(1.0, -1.0, &mut rng), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn counts() {
        let empty = PoissonPath::from_event_times(1.0, 10.0, vec![]).unwrap();
        assert_eq!(empty.count_at(5.0).unwrap(), 0);
        let path = three_events();
        assert_eq!(count_at(&path, 1.2).unwrap(), 2);
        assert_eq!(count_at(&path, 2.9).unwrap(), 2);
        assert_eq!(count_at(&path, 0.0).unwrap(), 0);
        assert!(matches!(path.count_at(5.5), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn simulated_events_are_ordered_and_in_range() {
        let mut rng = RngStream::new(3, 11);
        let path = simulate_poisson(5.0, 20.0, &mut rng).unwrap();
        let times = path.event_times();
        assert!(times.windows(2).all(|w| w[0] < w[1]));
        assert!(times.iter().all(|&t| t > 0.0 && t <= 20.0));
    }

    #[test]
    fn ou_rejects_bad_parameters() {
        let mut rng = RngStream::new(1, 0);
        assert!(simulate_ou(0.0, 0.0, 0.1, 10, &mut rng).is_err());
        assert!(simulate_ou(0.0, 1.0, 0.0, 10, &mut rng).is_err());
        assert!(simulate_ou(0.0, 1.0, 0.1, 0, &mut rng).is_err());
    }

    #[test]
    fn innovation_variance_value() {
        // (1 - e^{-0.2}) / 2
        assert_abs_diff_eq!(innovation_variance(1.0, 0.1), 0.090_634_623_461_009_1, epsilon = 1e-15);
    }

    #[test]
    fn trapezoid_examples() {
        let constant = OuPath::from_values(0.0, 1.0, 1.0, vec![1.0; 5]).unwrap();
        assert_eq!(path_integrals(&constant), (4.0, 4.0));
        let linear = OuPath::from_values(0.0, 1.0, 1.0, vec![0.0, 1.0, 2.0]).unwrap();
        assert_eq!(path_integrals(&linear), (2.0, 3.0));
    }

    #[test]
    fn trapezoid_converges_on_smooth_function() {
        // x(t) = sin t on [0, 2]
        let mut prev_gap = f64::INFINITY;
        let exact_x2 = 1.0 - (4.0f64).sin() / 4.0;
        let mut prev_err = f64::INFINITY;
        for k in 2..8 {
            let n = 1usize << k;
            let step = 2.0 / n as f64;
            let coarse: Vec<f64> = (0..=n).map(|i| (i as f64 * step).sin()).collect();
            let fine: Vec<f64> = (0..=2 * n).map(|i| (i as f64 * step / 2.0).sin()).collect();
            let (_, i_coarse) = trapezoid_integrals(&coarse, step);
            let (_, i_fine) = trapezoid_integrals(&fine, step / 2.0);
            let gap = (i_coarse - i_fine).abs();
            assert!(gap < prev_gap);
            prev_gap = gap;
            let err = (i_coarse - exact_x2).abs();
            assert!(err < prev_err);
            prev_err = err;
        }
    }

    #[test]
    fn subsample_keeps_grid_points() {
        let path = OuPath::from_values(0.0, 1.0, 0.1, (0..=10).map(f64::from).collect()).unwrap();
        let sub = path.subsample(5, 2).unwrap();
        assert_eq!(sub.values(), &[0.0, 5.0, 10.0]);
        assert_abs_diff_eq!(sub.step(), 0.5);
        assert!(path.subsample(4, 3).is_err());
    }
}
