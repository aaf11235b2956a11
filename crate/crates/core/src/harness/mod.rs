//! Reproducible Monte Carlo experiments.
//!
//! Every replicate draws from its own [`RngStream`] keyed by the master seed
//! and the replicate index. Replicates are processed in fixed-size chunks,
//! each reduced sequentially, and the chunk partials are merged in index
//! order, so reports are bit-identical whatever the number of worker threads.
//! The same simulated paths feed every predictor, prior and design point.

mod config;
mod report;

use rayon::prelude::*;

pub use config::{ConfigEntries, ExperimentConfig, Method, PriorSpec, ProcessKind, DEFAULT_REFINEMENT, DEFAULT_SEED};
pub use report::{
    percentage_variation, CellAccumulator, CellSummary, DesignPoint, ErrorReport, Marker, ReportRow, CSV_HEADER,
    MARKER_HEADER,
};

use crate::error::{Error, Result};
use crate::ou_continuous::{
    bayes_predict_theta_unknown, map_predict_theta_unknown, mle_predict_theta_unknown, GaussianPrior,
    OuSufficientStats,
};
use crate::ou_sampled::{
    bayes_m_sampled, clamp_rho, cmap1_m, cmap2_m, cmle_m, dominance_m_sampled, mle_m_sampled, predict_sampled_m,
    predict_sampled_rho, rho_bayes, rho_cmle, SampledStats,
};
use crate::poisson_predict::{dominance_shape_range, GammaPrior, PoissonLabel, PoissonPredictor};
use crate::process_sim::{simulate_ou, simulate_poisson, trapezoid_integrals};
use crate::rng::RngStream;

use config::steps_of;

/// Replicates per work item.
const CHUNK: u64 = 256;

/// What a custom predictor sees for one replicate at one design point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    /// N_S for Poisson, the last observed value for OU.
    pub last: f64,
    /// Realised future value.
    pub target: f64,
    /// Conditional mean of the target under the true parameters.
    pub cond_mean: f64,
}

/// A named extra predictor evaluated alongside the configured ones.
pub type CustomPredictor<'a> = (&'a str, &'a (dyn Fn(&Observation) -> f64 + Sync));

#[derive(Debug, Clone)]
enum Instance {
    Builtin {
        method: Method,
        prior: Option<(usize, PriorSpec)>,
    },
    Custom(usize),
}

fn instances(config: &ExperimentConfig, n_custom: usize) -> Vec<Instance> {
    let mut out = Vec::new();
    for &method in &config.predictors {
        if method.needs_prior() {
            for (i, p) in config.priors.iter().enumerate() {
                out.push(Instance::Builtin {
                    method,
                    prior: Some((i, *p)),
                });
            }
        } else {
            out.push(Instance::Builtin { method, prior: None });
        }
    }
    out.extend((0..n_custom).map(Instance::Custom));
    out
}

/// Runs `replicate` for every replicate index and merges the per-cell
/// accumulators in index order.
fn run_replicates<F>(n_cells: usize, replicates: u64, replicate: F) -> Result<Vec<CellAccumulator>>
where
    F: Fn(u64, &mut [CellAccumulator]) -> Result<()> + Sync,
{
    let n_chunks = replicates.div_ceil(CHUNK);
    let partials: Vec<Result<Vec<CellAccumulator>>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut cells = vec![CellAccumulator::new(); n_cells];
            for j in c * CHUNK..((c + 1) * CHUNK).min(replicates) {
                replicate(j, &mut cells)?;
            }
            Ok(cells)
        })
        .collect();
    let mut total = vec![CellAccumulator::new(); n_cells];
    for partial in partials {
        for (t, p) in total.iter_mut().zip(partial?.iter()) {
            t.merge(p);
        }
    }
    Ok(total)
}

fn build_report(
    config: &ExperimentConfig,
    designs: &[DesignPoint],
    insts: &[Instance],
    custom: &[CustomPredictor<'_>],
    cells: &[CellAccumulator],
) -> ErrorReport {
    let mut rows = Vec::with_capacity(cells.len());
    for (d, design) in designs.iter().enumerate() {
        let block = &cells[d * insts.len()..(d + 1) * insts.len()];
        let base = insts
            .iter()
            .position(|i| matches!(i, Instance::Builtin { method, .. } if *method == config.baseline))
            .map(|k| block[k].summary());
        for (inst, cell) in insts.iter().zip(block) {
            let s = cell.summary();
            let (predictor, prior_id, prior_params, is_baseline) = match inst {
                Instance::Builtin { method, prior } => (
                    method.to_string(),
                    prior.map_or("none".to_string(), |(i, p)| format!("{}{}", p.family(), i + 1)),
                    prior.map_or(String::new(), |(_, p)| p.params()),
                    *method == config.baseline,
                ),
                Instance::Custom(k) => (custom[*k].0.to_string(), "none".into(), String::new(), false),
            };
            let pct = |b: f64, x: f64| {
                if is_baseline {
                    0.0
                } else {
                    percentage_variation(b, x).unwrap_or(f64::NAN)
                }
            };
            let (pct_pred, pct_est) = match base {
                Some(b) => (pct(b.pred_err, s.pred_err), pct(b.est_err, s.est_err)),
                None => (f64::NAN, f64::NAN),
            };
            rows.push(ReportRow {
                design: *design,
                predictor,
                prior_id,
                prior_params,
                pred_err: s.pred_err,
                est_err: s.est_err,
                pct_pred,
                pct_est,
                std_err: s.std_err,
                est_std_err: s.est_std_err,
                cond_var: s.cond_var,
                cross_mean: s.cross_mean,
                cross_se: s.cross_se,
            });
        }
    }
    ErrorReport {
        process: config.process,
        replicates: config.replicates,
        master_seed: config.master_seed,
        rows,
        markers: Vec::new(),
    }
}

fn check(config: &ExperimentConfig) -> Result<()> {
    let problems = config.violations();
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Error::Config(problems))
    }
}

pub fn run_poisson_experiment(config: &ExperimentConfig) -> Result<ErrorReport> {
    run_poisson_experiment_with(config, &[])
}

/// Poisson experiment with extra predictors evaluated on the same paths.
pub fn run_poisson_experiment_with(config: &ExperimentConfig, custom: &[CustomPredictor<'_>]) -> Result<ErrorReport> {
    if config.process != ProcessKind::Poisson {
        return Err(Error::Config(vec![format!(
            "run_poisson_experiment needs process poisson, got {}",
            config.process
        )]));
    }
    check(config)?;
    let insts = instances(config, custom.len());
    let predictors: Vec<Option<PoissonPredictor>> = insts
        .iter()
        .map(|inst| match inst {
            Instance::Builtin { method, prior } => {
                let gamma = |p: &Option<(usize, PriorSpec)>| -> Result<GammaPrior> { p.expect("prior").1.gamma() };
                Ok(Some(match method {
                    Method::Up => PoissonPredictor::Unbiased,
                    Method::Bp => PoissonPredictor::Bayes(gamma(prior)?),
                    Method::Map => PoissonPredictor::Map(gamma(prior)?),
                    other => unreachable!("validated: {other} is not a Poisson predictor"),
                }))
            }
            Instance::Custom(_) => Ok(None),
        })
        .collect::<Result<_>>()?;

    let mut designs = Vec::new();
    for &theta in &config.theta {
        for &s in &config.s {
            for &h in &config.h {
                designs.push(DesignPoint {
                    theta,
                    s: Some(s),
                    h: Some(h),
                    ..Default::default()
                });
            }
        }
    }
    let horizon = config.s.last().copied().unwrap_or(0.0) + config.h.last().copied().unwrap_or(0.0);
    let per_theta = config.s.len() * config.h.len() * insts.len();

    let cells = run_replicates(designs.len() * insts.len(), config.replicates, |j, cells| {
        for (t, &theta) in config.theta.iter().enumerate() {
            // the same stream for every theta keeps the comparison paired
            let mut rng = RngStream::new(config.master_seed, j);
            let path = simulate_poisson(theta, horizon, &mut rng)?;
            let mut k = t * per_theta;
            for &s in &config.s {
                let n_s = path.count_at(s)?;
                for &h in &config.h {
                    let target = path.count_at(s + h)? as f64;
                    let cond_mean = n_s as f64 + theta * h;
                    let obs = Observation {
                        last: n_s as f64,
                        target,
                        cond_mean,
                    };
                    for (inst, pred) in insts.iter().zip(&predictors) {
                        let p = match (inst, pred) {
                            (_, Some(pred)) => pred.predict(n_s, s, h)?.value,
                            (Instance::Custom(c), None) => (custom[*c].1)(&obs),
                            _ => unreachable!(),
                        };
                        cells[k].push(p, target, cond_mean);
                        k += 1;
                    }
                }
            }
        }
        Ok(())
    })?;
    Ok(build_report(config, &designs, &insts, custom, &cells))
}

pub fn run_ou_experiment(config: &ExperimentConfig) -> Result<ErrorReport> {
    run_ou_experiment_with(config, &[])
}

/// OU experiment with extra predictors evaluated on the same paths.
pub fn run_ou_experiment_with(config: &ExperimentConfig, custom: &[CustomPredictor<'_>]) -> Result<ErrorReport> {
    check(config)?;
    match config.process {
        ProcessKind::OuMeanUnknown | ProcessKind::OuRhoSampled => run_ou_sampled(config, custom),
        ProcessKind::OuRateUnknown => run_ou_rate(config, custom),
        ProcessKind::Poisson => Err(Error::Config(vec![
            "run_ou_experiment needs an OU process, got poisson".into(),
        ])),
    }
}

/// Runs whichever experiment the configured process calls for.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ErrorReport> {
    match config.process {
        ProcessKind::Poisson => run_poisson_experiment(config),
        _ => run_ou_experiment(config),
    }
}

fn normal_priors(insts: &[Instance]) -> Result<Vec<Option<GaussianPrior>>> {
    insts
        .iter()
        .map(|inst| match inst {
            Instance::Builtin { prior: Some((_, p)), .. } => p.normal().map(Some),
            _ => Ok(None),
        })
        .collect()
}

fn run_ou_sampled(config: &ExperimentConfig, custom: &[CustomPredictor<'_>]) -> Result<ErrorReport> {
    let insts = instances(config, custom.len());
    let priors = normal_priors(&insts)?;
    let base = config.base_step().expect("sampled OU has a base step");

    struct Grid {
        stride: usize,
        n: usize,
        h_steps: u32,
        delta: f64,
        big_h: f64,
    }
    let mut grids = Vec::new();
    for &delta in &config.delta {
        for &n in &config.n {
            for &big_h in &config.h {
                grids.push(Grid {
                    stride: steps_of(delta, base),
                    n,
                    h_steps: steps_of(big_h, delta) as u32,
                    delta,
                    big_h,
                });
            }
        }
    }
    let total_steps = grids
        .iter()
        .map(|g| g.stride * (g.n + g.h_steps as usize))
        .max()
        .unwrap_or(1);

    let mut designs = Vec::new();
    for &theta in &config.theta {
        for &m in &config.m {
            for g in &grids {
                designs.push(DesignPoint {
                    theta,
                    m: Some(m),
                    delta: Some(g.delta),
                    n: Some(g.n),
                    s: Some(g.n as f64 * g.delta),
                    big_h: Some(g.big_h),
                    h: Some(g.h_steps as f64),
                });
            }
        }
    }
    let rho_mode = config.process == ProcessKind::OuRhoSampled;

    let cells = run_replicates(designs.len() * insts.len(), config.replicates, |j, cells| {
        let mut k = 0;
        let mut sub = Vec::new();
        for &theta in &config.theta {
            for &m in &config.m {
                let mut rng = RngStream::new(config.master_seed, j);
                let path = simulate_ou(m, theta, base, total_steps, &mut rng)?;
                let values = path.values();
                for g in &grids {
                    let shift = if rho_mode { m } else { 0.0 };
                    sub.clear();
                    sub.extend((0..=g.n).map(|i| values[i * g.stride] - shift));
                    let stats = SampledStats::from_values(&sub, g.delta)?;
                    let target = values[(g.n + g.h_steps as usize) * g.stride];
                    let decay = (-theta * g.big_h).exp();
                    let x_end = stats.x_end() + shift;
                    let cond_mean = m + decay * (x_end - m);
                    let obs = Observation {
                        last: x_end,
                        target,
                        cond_mean,
                    };
                    for (inst, prior) in insts.iter().zip(&priors) {
                        let p = match inst {
                            Instance::Custom(c) => (custom[*c].1)(&obs),
                            Instance::Builtin { method, .. } if rho_mode => {
                                let rho = match method {
                                    Method::Cmle => rho_cmle(&stats)?,
                                    Method::Bayes => {
                                        rho_bayes(&stats, prior.as_ref().expect("prior"), config.rho_noise)
                                    }
                                    other => unreachable!("validated: {other} is not a rho predictor"),
                                };
                                let rho = if config.clamp_rho { clamp_rho(rho) } else { rho };
                                m + predict_sampled_rho(rho, stats.x_end(), g.h_steps)
                            }
                            Instance::Builtin { method, .. } => {
                                let m_est = match method {
                                    Method::Mle => mle_m_sampled(&stats, theta),
                                    Method::Mean => stats.sample_mean(),
                                    Method::Cmle => cmle_m(&stats, theta),
                                    Method::Bayes => bayes_m_sampled(&stats, theta, prior.as_ref().expect("prior")),
                                    Method::Cmap1 => cmap1_m(&stats, theta, prior.as_ref().expect("prior")),
                                    Method::Cmap2 => cmap2_m(&stats, theta, prior.as_ref().expect("prior")),
                                    other => unreachable!("validated: {other} is not a mean-level predictor"),
                                };
                                predict_sampled_m(m_est, x_end, theta, g.h_steps, g.delta)
                            }
                        };
                        cells[k].push(p, target, cond_mean);
                        k += 1;
                    }
                }
            }
        }
        Ok(())
    })?;
    Ok(build_report(config, &designs, &insts, custom, &cells))
}

fn run_ou_rate(config: &ExperimentConfig, custom: &[CustomPredictor<'_>]) -> Result<ErrorReport> {
    let insts = instances(config, custom.len());
    let priors = normal_priors(&insts)?;
    let refinement = config.refinement;
    let s_max = config.s.last().copied().unwrap_or(0.0);
    let h_max = config.h.last().copied().unwrap_or(0.0);

    let mut designs = Vec::new();
    for &theta in &config.theta {
        for &m in &config.m {
            for &delta in &config.delta {
                for &s in &config.s {
                    for &big_h in &config.h {
                        designs.push(DesignPoint {
                            theta,
                            m: Some(m),
                            delta: Some(delta),
                            n: Some(steps_of(s, delta)),
                            s: Some(s),
                            big_h: Some(big_h),
                            h: None,
                        });
                    }
                }
            }
        }
    }

    let cells = run_replicates(designs.len() * insts.len(), config.replicates, |j, cells| {
        let mut k = 0;
        let mut centred = Vec::new();
        for &theta in &config.theta {
            for &m in &config.m {
                for &delta in &config.delta {
                    let fine = delta / refinement as f64;
                    let total = steps_of(s_max, fine) + steps_of(h_max, fine);
                    let mut rng = RngStream::new(config.master_seed, j);
                    let path = simulate_ou(m, theta, fine, total, &mut rng)?;
                    let values = path.values();
                    for &s in &config.s {
                        let ks = steps_of(s, fine);
                        centred.clear();
                        centred.extend(values[..=ks].iter().map(|x| x - m));
                        let (int_x, int_x2) = trapezoid_integrals(&centred, fine);
                        let stats = OuSufficientStats::new(centred[0], centred[ks], s, int_x, int_x2)?;
                        for &big_h in &config.h {
                            let target = values[ks + steps_of(big_h, fine)];
                            let x_end = values[ks];
                            let cond_mean = m + (-theta * big_h).exp() * (x_end - m);
                            let obs = Observation {
                                last: x_end,
                                target,
                                cond_mean,
                            };
                            for (inst, prior) in insts.iter().zip(&priors) {
                                let p = match inst {
                                    Instance::Custom(c) => (custom[*c].1)(&obs),
                                    Instance::Builtin { method, .. } => {
                                        m + match method {
                                            Method::Mle => mle_predict_theta_unknown(&stats, big_h)?,
                                            Method::Bayes => bayes_predict_theta_unknown(
                                                &stats,
                                                prior.as_ref().expect("prior"),
                                                big_h,
                                            ),
                                            Method::Map => map_predict_theta_unknown(
                                                &stats,
                                                prior.as_ref().expect("prior"),
                                                big_h,
                                            ),
                                            other => unreachable!("validated: {other} is not a rate predictor"),
                                        }
                                    }
                                };
                                cells[k].push(p, target, cond_mean);
                                k += 1;
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    })?;
    Ok(build_report(config, &designs, &insts, custom, &cells))
}

/// Replaces the prior list by copies of the first prior with `axis` set to
/// each grid value, runs the experiment on common paths and attaches the
/// analytic dominance markers that apply.
pub fn sweep_prior(config: &ExperimentConfig, axis: &str, grid: &[f64]) -> Result<ErrorReport> {
    let template = match config.priors.first() {
        Some(p) => *p,
        None => return Err(Error::Config(vec!["sweep_prior needs a prior to use as template".into()])),
    };
    if grid.is_empty() {
        return Err(Error::Config(vec!["sweep grid is empty".into()]));
    }
    let mut problems = Vec::new();
    let mut priors = Vec::with_capacity(grid.len());
    for &g in grid {
        match template.with_param(axis, g) {
            Ok(p) => priors.push(p),
            Err(e) => {
                problems.push(e);
                break;
            }
        }
    }
    if !problems.is_empty() {
        return Err(Error::Config(problems));
    }
    let mut swept = config.clone();
    swept.priors = priors;
    let mut report = run_experiment(&swept)?;
    report.markers = sweep_markers(&swept, &template, axis, &report);
    Ok(report)
}

fn sweep_markers(config: &ExperimentConfig, template: &PriorSpec, axis: &str, report: &ErrorReport) -> Vec<Marker> {
    let mut designs: Vec<DesignPoint> = Vec::new();
    for r in &report.rows {
        if designs.last() != Some(&r.design) {
            designs.push(r.design);
        }
    }
    let mut out = Vec::new();
    let mut push = |design: DesignPoint, predictor: &str, name: &str, value: f64| {
        out.push(Marker {
            design,
            predictor: predictor.to_string(),
            name: name.to_string(),
            value,
        })
    };
    match (config.process, template, axis) {
        (ProcessKind::Poisson, PriorSpec::Gamma { b, .. }, "a") => {
            for d in designs {
                let s = d.s.expect("poisson design has S");
                for (method, label) in [(Method::Bp, PoissonLabel::Bp), (Method::Map, PoissonLabel::Map)] {
                    if config.predictors.contains(&method) {
                        let (lo, hi) = dominance_shape_range(d.theta, *b, s, label);
                        push(d, method.as_str(), "dominance_a_lower", lo);
                        push(d, method.as_str(), "dominance_a_upper", hi);
                    }
                }
            }
        }
        (ProcessKind::OuMeanUnknown, PriorSpec::Normal { variance, .. }, "mean" | "m0") => {
            for d in designs {
                let (m, n, delta) = (d.m.unwrap_or(0.0), d.n.unwrap_or(1), d.delta.unwrap_or(1.0));
                let radius = dominance_m_sampled(d.theta, n, delta, *variance).sqrt();
                let limit = (2.0 * variance).sqrt();
                push(d, "BAYES", "dominance_m0_lower", m - radius);
                push(d, "BAYES", "dominance_m0_upper", m + radius);
                push(d, "BAYES", "asymptotic_m0_lower", m - limit);
                push(d, "BAYES", "asymptotic_m0_upper", m + limit);
            }
        }
        _ => {}
    }
    out
}
