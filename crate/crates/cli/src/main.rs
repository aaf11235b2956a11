use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use bayes_predict::harness::{run_experiment, sweep_prior, ConfigEntries, ErrorReport, ExperimentConfig};
use bayes_predict::ou_continuous::{
    bayes_m, bayes_predict_theta_unknown, dominance_bound_m, map_predict_theta_unknown, mle_m,
    mle_predict_theta_unknown, predict_m_known_theta, GaussianPrior, OuSufficientStats,
};
use bayes_predict::ou_sampled::{
    bayes_m_sampled, cmap1_m, cmap2_m, cmle_m, dominance_m_sampled, mle_m_sampled, predict_sampled_m,
    predict_sampled_rho, rho_bayes, rho_cmle, RhoNoise, SampledStats,
};
use bayes_predict::poisson_predict::{
    dominance_interval_all_s, dominance_interval_at_s, dominance_shape_range, GammaPrior, PoissonLabel,
    PoissonPredictor,
};
use bayes_predict::process_sim::{simulate_ou, simulate_poisson};
use bayes_predict::{Error, RngStream};
use clap::{Args, Parser, Subcommand, ValueEnum};

const PRESETS: &[(&str, &str)] = &[
    ("table1", include_str!("../presets/table1.conf")),
    ("table2", include_str!("../presets/table2.conf")),
    ("table3", include_str!("../presets/table3.conf")),
    ("table4", include_str!("../presets/table4.conf")),
    ("table5", include_str!("../presets/table5.conf")),
    ("table6", include_str!("../presets/table6.conf")),
    ("fig5_1", include_str!("../presets/fig5_1.conf")),
    ("fig7_1", include_str!("../presets/fig7_1.conf")),
    ("fig7_2_m", include_str!("../presets/fig7_2_m.conf")),
    ("fig7_2_rho", include_str!("../presets/fig7_2_rho.conf")),
    ("fig7_3", include_str!("../presets/fig7_3.conf")),
];

/// Bayesian and classical predictors for Poisson and Ornstein-Uhlenbeck processes.
#[derive(Parser)]
#[command(name = "bayes-predict", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo experiment and write its error table as CSV.
    Bench(ExperimentArgs),
    /// Run an experiment over a grid of one prior parameter.
    Sweep(SweepArgs),
    /// Simulate one path and print it.
    Simulate {
        #[command(subcommand)]
        process: SimulateCommand,
    },
    /// Evaluate one predictor on given data.
    Predict {
        #[command(subcommand)]
        model: PredictCommand,
    },
    /// Print dominance regions of the Bayesian predictors.
    Dominance {
        #[command(subcommand)]
        model: DominanceCommand,
    },
    /// List the built-in presets, or print one.
    Presets {
        name: Option<String>,
    },
}

#[derive(Args)]
struct ExperimentArgs {
    /// Built-in experiment (see `presets`).
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    preset: Option<String>,
    /// Experiment config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    replicates: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long)]
    workers: Option<usize>,
    /// CSV destination (default: standard output).
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Override a config key; repeat the key to give a list.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// Prior parameter to sweep (overrides `sweep_axis`).
    #[arg(long)]
    axis: Option<String>,
    /// Comma-separated grid (overrides `sweep_grid`).
    #[arg(long, value_delimiter = ',')]
    grid: Vec<f64>,
    /// Where to write the analytic markers as CSV (default: standard error).
    #[arg(long)]
    markers: Option<PathBuf>,
}

#[derive(Subcommand)]
enum SimulateCommand {
    /// Event times of a Poisson process on [0, horizon].
    Poisson {
        #[arg(long)]
        theta: f64,
        #[arg(long)]
        horizon: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        replicate: u64,
    },
    /// Stationary OU path sampled at `step`.
    Ou {
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        m: f64,
        #[arg(long)]
        theta: f64,
        #[arg(long)]
        step: f64,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        replicate: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PoissonChoice {
    Up,
    Bp,
    Map,
}

#[derive(Clone, Copy, ValueEnum)]
enum MeanChoice {
    Mle,
    Mean,
    Cmle,
    Bayes,
    Cmap1,
    Cmap2,
}

#[derive(Clone, Copy, ValueEnum)]
enum ContinuousMeanChoice {
    Mle,
    Bayes,
}

#[derive(Clone, Copy, ValueEnum)]
enum RateChoice {
    Mle,
    Bayes,
    Map,
}

#[derive(Clone, Copy, ValueEnum)]
enum RhoChoice {
    Cmle,
    Bayes,
}

#[derive(Subcommand)]
enum PredictCommand {
    /// Predict N_{S+h} from N_S.
    Poisson {
        #[arg(long)]
        ns: u64,
        #[arg(long)]
        s: f64,
        #[arg(long)]
        h: f64,
        #[arg(long, value_enum)]
        predictor: PoissonChoice,
        #[arg(long)]
        a: Option<f64>,
        #[arg(long)]
        b: Option<f64>,
    },
    /// Continuous record, known rate, unknown mean: predict X_{S+h}.
    OuM {
        #[arg(long, allow_hyphen_values = true)]
        x0: f64,
        #[arg(long, allow_hyphen_values = true)]
        x_end: f64,
        #[arg(long)]
        s: f64,
        /// Integral of X over [0, S].
        #[arg(long, allow_hyphen_values = true)]
        int_x: f64,
        #[arg(long)]
        theta: f64,
        #[arg(long)]
        h: f64,
        #[arg(long, value_enum)]
        predictor: ContinuousMeanChoice,
        #[arg(long, allow_hyphen_values = true)]
        m0: Option<f64>,
        #[arg(long)]
        u2: Option<f64>,
    },
    /// Continuous centred record, unknown rate: predict X_{S+h}.
    OuTheta {
        #[arg(long, allow_hyphen_values = true)]
        x0: f64,
        #[arg(long, allow_hyphen_values = true)]
        x_end: f64,
        #[arg(long)]
        s: f64,
        /// Integral of X^2 over [0, S].
        #[arg(long)]
        int_x2: f64,
        #[arg(long)]
        h: f64,
        #[arg(long, value_enum)]
        predictor: RateChoice,
        #[arg(long, allow_hyphen_values = true)]
        theta0: Option<f64>,
        #[arg(long)]
        v2: Option<f64>,
    },
    /// Equispaced samples, known rate, unknown mean: predict h steps ahead.
    OuSampled {
        /// Comma-separated samples X_0, ..., X_n.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        values: Vec<f64>,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        theta: f64,
        #[arg(long)]
        h_steps: u32,
        #[arg(long, value_enum)]
        predictor: MeanChoice,
        #[arg(long, allow_hyphen_values = true)]
        m0: Option<f64>,
        #[arg(long)]
        u2: Option<f64>,
    },
    /// Equispaced samples, known mean, unknown rho: predict h steps ahead.
    OuRho {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        values: Vec<f64>,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        m: f64,
        #[arg(long)]
        h_steps: u32,
        #[arg(long, value_enum)]
        predictor: RhoChoice,
        #[arg(long)]
        rho0: Option<f64>,
        #[arg(long)]
        v2: Option<f64>,
        /// Use the exact innovation variance in the posterior.
        #[arg(long)]
        exact_noise: bool,
    },
}

#[derive(Subcommand)]
enum DominanceCommand {
    /// Intensities where BP beats UP under Gamma(a, b); every S unless --s is given.
    Poisson {
        #[arg(long)]
        a: f64,
        #[arg(long)]
        b: f64,
        #[arg(long)]
        s: Option<f64>,
    },
    /// Gamma shapes for which BP (or MAP) beats UP at intensity theta.
    PoissonShape {
        #[arg(long)]
        theta: f64,
        #[arg(long)]
        b: f64,
        #[arg(long)]
        s: f64,
        #[arg(long)]
        map: bool,
    },
    /// Prior means m0 for which the Bayes mean-level predictor beats the MLE (continuous record).
    Ou {
        #[arg(long)]
        theta: f64,
        /// Record length; omit for the large-S limit.
        #[arg(long)]
        s: Option<f64>,
        #[arg(long)]
        u2: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        m: f64,
    },
    /// Same as `ou` for n samples at step delta.
    OuSampled {
        #[arg(long)]
        theta: f64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        u2: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        m: f64,
    },
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::InvalidParameter(_) => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn io_failure(e: io::Error) -> Failure {
    Failure::Runtime(e.to_string())
}

fn load_config(args: &ExperimentArgs, extra: &[(String, String)]) -> Result<ExperimentConfig, Failure> {
    let text = match (&args.preset, &args.config) {
        (Some(name), _) => PRESETS
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t.to_string())
            .ok_or_else(|| Failure::Usage(format!("unknown preset `{name}`; try `bayes-predict presets`")))?,
        (None, Some(path)) => fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?,
        (None, None) => return Err(Failure::Usage("give --preset or --config".into())),
    };
    let mut entries = ConfigEntries::parse(&text)?;
    let mut overrides: Vec<(String, String)> = Vec::new();
    for o in &args.overrides {
        match o.split_once('=') {
            Some((k, v)) => overrides.push((k.trim().to_string(), v.trim().to_string())),
            None => return Err(Failure::Usage(format!("--set expects KEY=VALUE, got `{o}`"))),
        }
    }
    if let Some(r) = args.replicates {
        overrides.push(("replicates".into(), r.to_string()));
    }
    if let Some(s) = args.seed {
        overrides.push(("seed".into(), s.to_string()));
    }
    overrides.extend(extra.iter().cloned());
    entries.apply_overrides(overrides.iter().map(|(k, v)| (k.as_str(), v.as_str())));
    Ok(ExperimentConfig::from_entries(&entries)?)
}

fn with_workers<T: Send>(workers: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T, Failure> {
    match workers {
        None => Ok(job()),
        Some(0) => Err(Failure::Usage("--workers must be at least 1".into())),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Failure::Runtime(e.to_string()))?;
            Ok(pool.install(job))
        }
    }
}

fn write_output(path: Option<&PathBuf>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(io_failure),
        None => io::stdout().lock().write_all(text.as_bytes()).map_err(io_failure),
    }
}

fn bench(args: &ExperimentArgs) -> Result<(), Failure> {
    let config = load_config(args, &[])?;
    let report: ErrorReport = with_workers(args.workers, || run_experiment(&config))??;
    write_output(args.output.as_ref(), &report.to_csv())
}

fn sweep(args: &SweepArgs) -> Result<(), Failure> {
    let mut extra = Vec::new();
    if let Some(axis) = &args.axis {
        extra.push(("sweep_axis".to_string(), axis.clone()));
    }
    for g in &args.grid {
        extra.push(("sweep_grid".to_string(), g.to_string()));
    }
    let config = load_config(&args.experiment, &extra)?;
    let axis = config
        .sweep_axis
        .clone()
        .ok_or_else(|| Failure::Usage("no sweep axis: give --axis or set `sweep_axis`".into()))?;
    let report = with_workers(args.experiment.workers, || sweep_prior(&config, &axis, &config.sweep_grid))??;
    write_output(args.experiment.output.as_ref(), &report.to_csv())?;
    match &args.markers {
        Some(path) => fs::write(path, report.markers_csv()).map_err(io_failure),
        None => io::stderr().lock().write_all(report.markers_csv().as_bytes()).map_err(io_failure),
    }
}

fn required(name: &str, value: Option<f64>) -> Result<f64, Failure> {
    value.ok_or_else(|| Failure::Usage(format!("this predictor needs --{name}")))
}

fn gamma(a: Option<f64>, b: Option<f64>) -> Result<GammaPrior, Failure> {
    Ok(GammaPrior::new(required("a", a)?, required("b", b)?)?)
}

fn normal(mean_name: &str, mean: Option<f64>, var_name: &str, var: Option<f64>) -> Result<GaussianPrior, Failure> {
    Ok(GaussianPrior::new(required(mean_name, mean)?, required(var_name, var)?)?)
}

fn predict(cmd: &PredictCommand) -> Result<f64, Failure> {
    Ok(match *cmd {
        PredictCommand::Poisson {
            ns,
            s,
            h,
            predictor,
            a,
            b,
        } => {
            let p = match predictor {
                PoissonChoice::Up => PoissonPredictor::Unbiased,
                PoissonChoice::Bp => PoissonPredictor::Bayes(gamma(a, b)?),
                PoissonChoice::Map => PoissonPredictor::Map(gamma(a, b)?),
            };
            p.predict(ns, s, h)?.value
        }
        PredictCommand::OuM {
            x0,
            x_end,
            s,
            int_x,
            theta,
            h,
            predictor,
            m0,
            u2,
        } => {
            let stats = OuSufficientStats::new(x0, x_end, s, int_x, 0.0)?;
            let m_est = match predictor {
                ContinuousMeanChoice::Mle => mle_m(&stats, theta),
                ContinuousMeanChoice::Bayes => bayes_m(&stats, theta, &normal("m0", m0, "u2", u2)?),
            };
            predict_m_known_theta(m_est, x_end, theta, h)
        }
        PredictCommand::OuTheta {
            x0,
            x_end,
            s,
            int_x2,
            h,
            predictor,
            theta0,
            v2,
        } => {
            let stats = OuSufficientStats::new(x0, x_end, s, 0.0, int_x2)?;
            match predictor {
                RateChoice::Mle => mle_predict_theta_unknown(&stats, h)?,
                RateChoice::Bayes => bayes_predict_theta_unknown(&stats, &normal("theta0", theta0, "v2", v2)?, h),
                RateChoice::Map => map_predict_theta_unknown(&stats, &normal("theta0", theta0, "v2", v2)?, h),
            }
        }
        PredictCommand::OuSampled {
            ref values,
            delta,
            theta,
            h_steps,
            predictor,
            m0,
            u2,
        } => {
            let stats = SampledStats::from_values(values, delta)?;
            let m_est = match predictor {
                MeanChoice::Mle => mle_m_sampled(&stats, theta),
                MeanChoice::Mean => stats.sample_mean(),
                MeanChoice::Cmle => cmle_m(&stats, theta),
                MeanChoice::Bayes => bayes_m_sampled(&stats, theta, &normal("m0", m0, "u2", u2)?),
                MeanChoice::Cmap1 => cmap1_m(&stats, theta, &normal("m0", m0, "u2", u2)?),
                MeanChoice::Cmap2 => cmap2_m(&stats, theta, &normal("m0", m0, "u2", u2)?),
            };
            predict_sampled_m(m_est, stats.x_end(), theta, h_steps, delta)
        }
        PredictCommand::OuRho {
            ref values,
            delta,
            m,
            h_steps,
            predictor,
            rho0,
            v2,
            exact_noise,
        } => {
            let centred: Vec<f64> = values.iter().map(|x| x - m).collect();
            let stats = SampledStats::from_values(&centred, delta)?;
            let rho = match predictor {
                RhoChoice::Cmle => rho_cmle(&stats)?,
                RhoChoice::Bayes => {
                    let noise = if exact_noise { RhoNoise::Exact } else { RhoNoise::Step };
                    rho_bayes(&stats, &normal("rho0", rho0, "v2", v2)?, noise)
                }
            };
            m + predict_sampled_rho(rho, stats.x_end(), h_steps)
        }
    })
}

fn interval((lo, hi): (f64, f64)) -> String {
    format!("({lo:.5}, {hi:.5})")
}

fn dominance(cmd: &DominanceCommand) -> Result<String, Failure> {
    Ok(match *cmd {
        DominanceCommand::Poisson { a, b, s } => {
            let prior = GammaPrior::new(a, b)?;
            match s {
                Some(s) => interval(dominance_interval_at_s(&prior, s)),
                None => interval(dominance_interval_all_s(&prior)),
            }
        }
        DominanceCommand::PoissonShape { theta, b, s, map } => {
            let label = if map { PoissonLabel::Map } else { PoissonLabel::Bp };
            interval(dominance_shape_range(theta, b, s, label))
        }
        DominanceCommand::Ou { theta, s, u2, m } => {
            let r = dominance_bound_m(theta, s.unwrap_or(f64::INFINITY), u2);
            interval((m - r, m + r))
        }
        DominanceCommand::OuSampled { theta, n, delta, u2, m } => {
            let r = dominance_m_sampled(theta, n, delta, u2).sqrt();
            interval((m - r, m + r))
        }
    })
}

fn simulate(cmd: &SimulateCommand) -> Result<String, Failure> {
    let mut out = String::new();
    match *cmd {
        SimulateCommand::Poisson {
            theta,
            horizon,
            seed,
            replicate,
        } => {
            let path = simulate_poisson(theta, horizon, &mut RngStream::new(seed, replicate))?;
            out.push_str("t\n");
            for t in path.event_times() {
                out.push_str(&format!("{t}\n"));
            }
        }
        SimulateCommand::Ou {
            m,
            theta,
            step,
            n,
            seed,
            replicate,
        } => {
            let path = simulate_ou(m, theta, step, n, &mut RngStream::new(seed, replicate))?;
            out.push_str("t,x\n");
            for (i, x) in path.values().iter().enumerate() {
                out.push_str(&format!("{},{x}\n", i as f64 * step));
            }
        }
    }
    Ok(out)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Bench(args) => bench(args),
        Command::Sweep(args) => sweep(args),
        Command::Simulate { process } => write_output(None, &simulate(process)?),
        Command::Predict { model } => write_output(None, &format!("{}\n", predict(model)?)),
        Command::Dominance { model } => write_output(None, &format!("{}\n", dominance(model)?)),
        Command::Presets { name: None } => {
            let names: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
            write_output(None, &format!("{}\n", names.join("\n")))
        }
        Command::Presets { name: Some(name) } => match PRESETS.iter().find(|(n, _)| n == name) {
            Some((_, text)) => write_output(None, text),
            None => Err(Failure::Usage(format!("unknown preset `{name}`"))),
        },
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
