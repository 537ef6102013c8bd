use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use manifold_cs::adversarial::{build_adversarial, build_adversarial_from_cos, verify_tightness};
use manifold_cs::bounds::{
    covering_bound, deterministic_bound, euclidean_to_geodesic, parameter_bound, recovery_bound,
    required_measurements, BoundInputs, BoundReport,
};
use manifold_cs::harness::{
    calibrate_constant, draw_theta, run_embedding_experiment, run_recovery_experiment, with_jobs,
    write_records_to, ExperimentConfig, MeasDim, RecordFormat,
};
use manifold_cs::linops::{make_orthoprojector, measure};
use manifold_cs::manifolds::{
    estimate_characteristics, geodesic_distance, greedy_cover, ManifoldModel, ManifoldShape,
    DEFAULT_GRID_DENSITY,
};
use manifold_cs::recovery::{full_data_optimum, recover_signal};
use manifold_cs::rng::{derive_seed, rng_from_seed, sphere_vector};
use manifold_cs::{Error, Result};

#[derive(Parser, Debug)]
#[command(
    name = "mcs",
    version,
    about = "Compressive measurement, recovery and bound certification for manifold signal models",
    after_help = "Any subcommand also accepts --config <file.json>: a JSON object whose keys are \
                  flag names (e.g. {\"n\": 256, \"eps\": 0.5}). Flags given on the command line win."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Project manifold samples with a random orthoprojector (CSV: theta,y1..yM).
    Embed(EmbedArgs),
    /// Measure one signal, recover it, and report errors against the bounds.
    Recover(RecoverArgs),
    /// Estimate reach, volume and covering regularity of a manifold.
    Estimate(EstimateArgs),
    /// Evaluate a closed-form bound.
    Bounds {
        #[command(subcommand)]
        which: BoundsCommand,
    },
    /// Build the worst-case instance for the deterministic bound and run recovery on it.
    Adversarial(AdversarialArgs),
    /// Seeded Monte Carlo trials; writes one record per trial.
    Montecarlo(MonteCarloArgs),
    /// Find the smallest measurement constant achieving a target embedding rate.
    Calibrate(CalibrateArgs),
    /// Greedy geodesic covering set (CSV: theta,arc).
    Cover(CoverArgs),
}

#[derive(Args, Debug)]
struct Output {
    /// Write to this file instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Six significant digits instead of seventeen.
    #[arg(long, num_args = 0..=1, default_value_t = false, default_missing_value = "true", action = clap::ArgAction::Set)]
    human: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ManifoldKind {
    Circle,
    Pulse,
    Segment,
}

#[derive(Args, Debug)]
struct ManifoldArgs {
    #[arg(long, value_enum)]
    manifold: ManifoldKind,
    /// Ambient dimension N.
    #[arg(long)]
    n: usize,
    /// Circle radius.
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    /// Pulse width σ.
    #[arg(long, default_value_t = 0.05)]
    width: f64,
}

impl ManifoldArgs {
    fn shape(&self) -> ManifoldShape {
        match self.manifold {
            ManifoldKind::Circle => ManifoldShape::Circle {
                radius: self.radius,
            },
            ManifoldKind::Pulse => ManifoldShape::Pulse { width: self.width },
            ManifoldKind::Segment => ManifoldShape::LineSegment,
        }
    }

    fn model(&self) -> Result<ManifoldModel> {
        ManifoldModel::new(self.shape(), self.n)
    }
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct EmbedArgs {
    #[command(flatten)]
    manifold: ManifoldArgs,
    /// Measurement dimension M.
    #[arg(long)]
    m: usize,
    #[arg(long)]
    seed: u64,
    /// Number of parameter samples.
    #[arg(long, default_value_t = 256)]
    points: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct RecoverArgs {
    #[command(flatten)]
    manifold: ManifoldArgs,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    seed: u64,
    /// Generating parameter (drawn from the seed if absent).
    #[arg(long, allow_negative_numbers = true)]
    theta: Option<f64>,
    /// Distance of the signal from the manifold, along a random normal.
    #[arg(long, default_value_t = 0.0)]
    offset: f64,
    /// Norm of the measurement noise.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Embedding distortion ε assumed by the bounds.
    #[arg(long, default_value_t = 0.5)]
    eps: f64,
    #[arg(long, default_value_t = 0.1)]
    rho: f64,
    #[arg(long, default_value_t = DEFAULT_GRID_DENSITY)]
    grid: usize,
    /// Samples for estimating τ, V, R when they are not known exactly.
    #[arg(long, default_value_t = 2000)]
    samples: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct EstimateArgs {
    #[command(flatten)]
    manifold: ManifoldArgs,
    #[arg(long, default_value_t = 2000)]
    samples: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Subcommand, Debug)]
enum BoundsCommand {
    /// Deterministic ratio bound on ‖x − x̂‖/‖x − x*‖.
    Det(DetArgs),
    /// Probabilistic bound on ‖x − x̂‖.
    Recovery(ProbArgs),
    /// Geodesic bound on d(x̂, x*).
    Parameter(ProbArgs),
    /// Measurement count for a given constant.
    Measurements(MeasurementsArgs),
    /// Euclidean to geodesic distance conversion.
    Geodesic(GeodesicArgs),
    /// Upper bound on the geodesic covering number.
    Covering(CoveringArgs),
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct DetArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    eps: f64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct ProbArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    rho: f64,
    #[arg(long)]
    tau: f64,
    #[arg(long)]
    volume: f64,
    #[arg(long)]
    regularity: f64,
    /// Intrinsic dimension K.
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// ‖x − x*‖
    #[arg(long, default_value_t = 0.0)]
    model_error: f64,
    /// ‖n‖
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct MeasurementsArgs {
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    volume: f64,
    #[arg(long)]
    regularity: f64,
    #[arg(long)]
    tau: f64,
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    rho: f64,
    #[arg(long)]
    constant: f64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct GeodesicArgs {
    /// Euclidean distance.
    #[arg(long)]
    e: f64,
    #[arg(long)]
    tau: f64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct CoveringArgs {
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long)]
    volume: f64,
    #[arg(long)]
    regularity: f64,
    /// Covering resolution T.
    #[arg(long)]
    t: f64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct AdversarialArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, conflicts_with = "gamma", required_unless_present = "gamma")]
    cos_gamma: Option<f64>,
    /// Angle γ in radians.
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_GRID_DENSITY)]
    grid: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ExperimentKind {
    Recovery,
    Embedding,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct ExperimentArgs {
    #[command(flatten)]
    manifold: ManifoldArgs,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 0.5)]
    eps: f64,
    #[arg(long, default_value_t = 0.1)]
    rho: f64,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    /// Worker threads (default: all available cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Points on which embedding distortion is measured.
    #[arg(long, default_value_t = 128)]
    embedding_points: usize,
    #[arg(long, default_value_t = 2000)]
    samples: usize,
}

impl ExperimentArgs {
    fn config(&self) -> ExperimentConfig {
        ExperimentConfig {
            manifold: self.manifold.shape(),
            ambient_dim: self.manifold.n,
            epsilon: self.eps,
            rho: self.rho,
            trials: self.trials,
            base_seed: self.seed,
            embedding_points: self.embedding_points,
            characteristic_samples: self.samples,
            ..Default::default()
        }
    }
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct MonteCarloArgs {
    #[arg(value_enum)]
    kind: ExperimentKind,
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// Measurement dimension M.
    #[arg(
        long,
        conflicts_with = "constant",
        required_unless_present = "constant"
    )]
    m: Option<usize>,
    /// Size M from the measurement-count formula with this constant.
    #[arg(long)]
    constant: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0.0)]
    offset: f64,
    #[arg(long, allow_negative_numbers = true)]
    theta: Option<f64>,
    /// Keep the same signal in every trial (false: redraw it per trial).
    #[arg(long, num_args = 0..=1, default_value_t = true, default_missing_value = "true", action = clap::ArgAction::Set)]
    fix_signal: bool,
    #[arg(long, default_value_t = DEFAULT_GRID_DENSITY)]
    grid: usize,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    /// Also write the summary as JSON to this file.
    #[arg(long)]
    summary: Option<PathBuf>,
    #[command(flatten)]
    output: Output,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for RecordFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => RecordFormat::Csv,
            FormatArg::Json => RecordFormat::Json,
        }
    }
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct CalibrateArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// Required lower confidence bound on the embedding success rate.
    #[arg(long, default_value_t = 0.9)]
    target: f64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct CoverArgs {
    #[command(flatten)]
    manifold: ManifoldArgs,
    /// Covering resolution T.
    #[arg(long)]
    t: f64,
    #[command(flatten)]
    output: Output,
}

/// Number formatting for one invocation.
#[derive(Clone, Copy)]
struct Fmt {
    human: bool,
}

impl Fmt {
    fn num(self, x: f64) -> String {
        if !self.human {
            return format!("{x:.16e}");
        }
        if x == 0.0 || !x.is_finite() {
            return format!("{x}");
        }
        let mag = x.abs().log10().floor() as i32;
        if (-4..6).contains(&mag) {
            format!("{x:.*}", (5 - mag) as usize)
        } else {
            format!("{x:.5e}")
        }
    }
}

struct Sink {
    out: Box<dyn Write>,
    path: Option<PathBuf>,
    fmt: Fmt,
}

impl Sink {
    fn open(output: &Output) -> Result<Self> {
        let out: Box<dyn Write> = match &output.out {
            Some(path) => Box::new(BufWriter::new(File::create(path).map_err(|source| {
                Error::Io {
                    path: path.clone(),
                    source,
                }
            })?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        };
        Ok(Sink {
            out,
            path: output.out.clone(),
            fmt: Fmt {
                human: output.human,
            },
        })
    }

    fn io_err(&self, source: io::Error) -> Error {
        Error::Io {
            path: self
                .path
                .clone()
                .unwrap_or_else(|| PathBuf::from("<stdout>")),
            source,
        }
    }

    fn line(&mut self, s: &str) -> Result<()> {
        writeln!(self.out, "{s}").map_err(|e| self.io_err(e))
    }

    fn kv(&mut self, key: &str, x: f64) -> Result<()> {
        let v = self.fmt.num(x);
        self.line(&format!("{key}={v}"))
    }

    fn kv_str(&mut self, key: &str, v: impl std::fmt::Display) -> Result<()> {
        self.line(&format!("{key}={v}"))
    }

    fn finish(mut self) -> Result<()> {
        self.out.flush().map_err(|e| self.io_err(e))
    }
}

fn embed(a: &EmbedArgs) -> Result<()> {
    let model = a.manifold.model()?;
    if a.points == 0 {
        return Err(Error::Config("--points must be at least 1".into()));
    }
    let p = make_orthoprojector(a.m, a.manifold.n, a.seed)?;
    let thetas = model.domain().grid(a.points);
    let ys = p.apply_columns(&model.sample_matrix(&thetas))?;
    let mut sink = Sink::open(&a.output)?;
    let header: Vec<String> = std::iter::once("theta".to_string())
        .chain((1..=a.m).map(|i| format!("y{i}")))
        .collect();
    sink.line(&header.join(","))?;
    for (j, t) in thetas.iter().enumerate() {
        let row: Vec<String> = std::iter::once(*t)
            .chain(ys.column(j).iter().copied())
            .map(|v| sink.fmt.num(v))
            .collect();
        sink.line(&row.join(","))?;
    }
    sink.finish()
}

fn model_with_characteristics(m: ManifoldModel, samples: usize) -> Result<ManifoldModel> {
    if m.known_characteristics().is_some() {
        return Ok(m);
    }
    let est = estimate_characteristics(&m, samples)?;
    Ok(m.with_estimates(&est))
}

fn recover(a: &RecoverArgs) -> Result<()> {
    let model = a.manifold.model()?;
    let (n, m) = (a.manifold.n, a.m);
    for (name, v) in [("--offset", a.offset), ("--noise", a.noise)] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::Config(format!(
                "{name} must be finite and nonnegative"
            )));
        }
    }
    let p = make_orthoprojector(m, n, a.seed)?;
    let mut rng = rng_from_seed(derive_seed(a.seed, 2));
    let theta = match a.theta {
        Some(t) => model.domain().normalize(t)?,
        None => draw_theta(model.domain(), &mut rng),
    };
    let mut x = model.point(theta);
    if a.offset > 0.0 {
        x += model.random_normal(theta, &mut rng) * a.offset;
    }
    let noise = sphere_vector(m, a.noise, &mut rng_from_seed(derive_seed(a.seed, 1)));
    let y = measure(&p, &x, &noise)?;
    let sol = recover_signal(&y, &p, &model, a.grid)?;
    let opt = full_data_optimum(&x, &model, a.grid)?;
    let err_signal = (&x - &sol.x_hat).norm();

    let mut sink = Sink::open(&a.output)?;
    sink.kv("theta_true", theta)?;
    sink.kv("theta_star", opt.theta)?;
    sink.kv("theta_hat", sol.theta_hat)?;
    sink.kv("err_signal", err_signal)?;
    sink.kv("err_model", opt.distance)?;
    sink.kv("err_noise", y.noise_norm)?;
    sink.kv(
        "geo_err",
        geodesic_distance(&model, sol.theta_hat, opt.theta)?,
    )?;
    sink.kv("residual", sol.residual)?;
    sink.kv_str("ambiguous", sol.ambiguous || opt.ambiguous)?;

    let model = model_with_characteristics(model, a.samples)?;
    match model.known_characteristics() {
        Some((tau, volume, regularity)) if tau.is_finite() => {
            let inputs = BoundInputs {
                ambient_dim: n,
                meas_dim: m,
                epsilon: a.eps,
                rho: a.rho,
                tau,
                volume,
                regularity,
                intrinsic_dim: model.intrinsic_dim(),
                model_error: opt.distance,
                noise_norm: y.noise_norm,
            };
            let b3 = recovery_bound(&inputs)?;
            let b4 = parameter_bound(&inputs)?;
            sink.kv("bound3", b3.value)?;
            sink.kv_str("satisfied3", err_signal <= b3.value)?;
            sink.kv("bound4", b4.value)?;
            sink.kv_str("bound4_precondition", b4.precondition_met)?;
        }
        _ => log::warn!("reach of this manifold is unbounded; bounds not evaluated"),
    }
    sink.finish()
}

fn estimate(a: &EstimateArgs) -> Result<()> {
    let model = a.manifold.model()?;
    let est = estimate_characteristics(&model, a.samples)?;
    let mut sink = Sink::open(&a.output)?;
    sink.kv("tau", est.tau)?;
    sink.kv("volume", est.volume)?;
    sink.kv("regularity", est.regularity)?;
    sink.kv("tau_curvature", est.tau_curvature)?;
    sink.kv("tau_self_approach", est.tau_self_approach)?;
    sink.finish()
}

fn prob_inputs(a: &ProbArgs) -> BoundInputs {
    BoundInputs {
        ambient_dim: a.n,
        meas_dim: a.m,
        epsilon: a.eps,
        rho: a.rho,
        tau: a.tau,
        volume: a.volume,
        regularity: a.regularity,
        intrinsic_dim: a.k,
        model_error: a.model_error,
        noise_norm: a.noise,
    }
}

fn write_report(output: &Output, r: &BoundReport) -> Result<()> {
    let mut sink = Sink::open(output)?;
    sink.kv("value", r.value)?;
    sink.kv_str("precondition", r.precondition_met)?;
    for t in &r.terms {
        sink.kv(t.name, t.value)?;
    }
    sink.finish()
}

fn single_value(output: &Output, x: f64) -> Result<()> {
    let mut sink = Sink::open(output)?;
    let v = sink.fmt.num(x);
    sink.line(&v)?;
    sink.finish()
}

fn bounds(which: &BoundsCommand) -> Result<()> {
    match which {
        BoundsCommand::Det(a) => {
            let b = deterministic_bound(a.n, a.m, a.eps)?;
            if b.clamped {
                log::warn!("inner radicand was negative and clamped to zero");
            }
            single_value(&a.output, b.value)
        }
        BoundsCommand::Recovery(a) => write_report(&a.output, &recovery_bound(&prob_inputs(a))?),
        BoundsCommand::Parameter(a) => write_report(&a.output, &parameter_bound(&prob_inputs(a))?),
        BoundsCommand::Measurements(a) => {
            let m = required_measurements(
                a.k,
                a.n,
                a.volume,
                a.regularity,
                a.tau,
                a.eps,
                a.rho,
                a.constant,
            )?;
            let mut sink = Sink::open(&a.output)?;
            sink.line(&m.to_string())?;
            sink.finish()
        }
        BoundsCommand::Geodesic(a) => single_value(&a.output, euclidean_to_geodesic(a.e, a.tau)?),
        BoundsCommand::Covering(a) => {
            single_value(&a.output, covering_bound(a.k, a.volume, a.regularity, a.t)?)
        }
    }
}

fn adversarial(a: &AdversarialArgs) -> Result<()> {
    let inst = match (a.cos_gamma, a.gamma) {
        (Some(c), _) => build_adversarial_from_cos(a.n, c)?,
        (None, Some(g)) => build_adversarial(a.n, g)?,
        (None, None) => unreachable!("clap requires one of --cos-gamma, --gamma"),
    };
    let t = verify_tightness(&inst, a.grid)?;
    let mut sink = Sink::open(&a.output)?;
    sink.kv("achieved", t.achieved)?;
    sink.kv("bound", t.bound)?;
    sink.kv("ratio", t.ratio())?;
    sink.kv("epsilon", inst.epsilon)?;
    sink.kv("theta_hat", t.theta_hat)?;
    sink.kv("theta_star", t.theta_star)?;
    sink.finish()
}

fn write_summary(path: Option<&Path>, summary: &impl serde::Serialize) -> Result<()> {
    let json = serde_json::to_string_pretty(summary).expect("summary serializes");
    log::info!("summary: {json}");
    if let Some(path) = path {
        std::fs::write(path, json + "\n").map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
    }
    Ok(())
}

fn montecarlo(a: &MonteCarloArgs) -> Result<()> {
    let mut cfg = a.experiment.config();
    cfg.meas_dim = match (a.m, a.constant) {
        (Some(m), _) => MeasDim::Fixed(m),
        (None, Some(constant)) => MeasDim::Auto { constant },
        (None, None) => unreachable!("clap requires one of --m, --constant"),
    };
    cfg.noise_norm = a.noise;
    cfg.offset = a.offset;
    cfg.theta = a.theta;
    cfg.fix_signal = a.fix_signal;
    cfg.grid_density = a.grid;
    let format = a.format.into();
    let mut sink = Sink::open(&a.output)?;
    match a.kind {
        ExperimentKind::Recovery => {
            let run = with_jobs(a.experiment.jobs, || run_recovery_experiment(&cfg))??;
            write_records_to(&run.records, &mut sink.out, format).map_err(|e| sink.io_err(e))?;
            write_summary(a.summary.as_deref(), &run.summary)?;
        }
        ExperimentKind::Embedding => {
            let run = with_jobs(a.experiment.jobs, || run_embedding_experiment(&cfg))??;
            write_records_to(&run.records, &mut sink.out, format).map_err(|e| sink.io_err(e))?;
            write_summary(a.summary.as_deref(), &run.summary)?;
        }
    }
    sink.finish()
}

fn calibrate(a: &CalibrateArgs) -> Result<()> {
    let cfg = a.experiment.config();
    let c = with_jobs(a.experiment.jobs, || calibrate_constant(&cfg, a.target))??;
    let mut sink = Sink::open(&a.output)?;
    sink.kv("constant", c.constant)?;
    sink.kv_str("meas_dim", c.meas_dim)?;
    sink.kv("success_rate", c.success_rate)?;
    sink.kv("wilson_lower", c.wilson_lower)?;
    sink.kv("rate_per_constant", c.rate_per_constant)?;
    sink.finish()
}

fn cover(a: &CoverArgs) -> Result<()> {
    let model = a.manifold.model()?;
    let c = greedy_cover(&model, a.t)?;
    log::info!("{} anchors at resolution {}", c.len(), a.t);
    let mut sink = Sink::open(&a.output)?;
    sink.line("theta,arc")?;
    for (t, s) in c.anchors.iter().zip(&c.anchor_arcs) {
        let row = format!("{},{}", sink.fmt.num(*t), sink.fmt.num(*s));
        sink.line(&row)?;
    }
    sink.finish()
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Embed(a) => embed(a),
        Command::Recover(a) => recover(a),
        Command::Estimate(a) => estimate(a),
        Command::Bounds { which } => bounds(which),
        Command::Adversarial(a) => adversarial(a),
        Command::Montecarlo(a) => montecarlo(a),
        Command::Calibrate(a) => calibrate(a),
        Command::Cover(a) => cover(a),
    }
}

/// Turns a JSON object into `--key=value` tokens.
fn config_tokens(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let obj = value
        .as_object()
        .ok_or_else(|| Error::Config(format!("{}: expected a JSON object", path.display())))?;
    obj.iter()
        .map(|(k, v)| {
            let flag = k.replace('_', "-");
            let v = match v {
                serde_json::Value::String(s) => s.clone(),
                serde_json::Value::Number(n) => n.to_string(),
                serde_json::Value::Bool(b) => b.to_string(),
                _ => {
                    return Err(Error::Config(format!(
                        "{}: value of {k:?} must be a string, number or boolean",
                        path.display()
                    )))
                }
            };
            Ok(format!("--{flag}={v}"))
        })
        .collect()
}

/// Removes `--config <path>` from the arguments and splices the file's
/// settings in right after the subcommand words, ahead of any explicit flags
/// so that those override them.
fn expand_config(args: Vec<String>) -> Result<Vec<String>> {
    let mut rest = Vec::with_capacity(args.len());
    let mut config = None;
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            let path = it
                .next()
                .ok_or_else(|| Error::Config("--config needs a file path".into()))?;
            config = Some(PathBuf::from(path));
        } else if let Some(path) = a.strip_prefix("--config=") {
            config = Some(PathBuf::from(path));
        } else {
            rest.push(a);
        }
    }
    let Some(path) = config else {
        return Ok(rest);
    };
    let tokens = config_tokens(&path)?;
    let at = 1 + rest
        .iter()
        .skip(1)
        .take_while(|a| !a.starts_with('-'))
        .count();
    rest.splice(at..at, tokens);
    Ok(rest)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .target(env_logger::Target::Stderr)
        .init();

    let args = match expand_config(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        // downstream consumer (e.g. `head`) closed the pipe
        Err(Error::Io { source, .. }) if source.kind() == io::ErrorKind::BrokenPipe => {
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
