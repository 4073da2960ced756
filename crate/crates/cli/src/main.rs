//! `depthreg`: halfspace depth, trimmed regions and the Monte Carlo harness
//! from the command line.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand};
use depth_regions::asymptotics::{hausdorff_rate_checked, lil_constant, ConstantValue};
use depth_regions::distributions::{check_alpha, ModelDistribution, PlanarModel};
use depth_regions::empirical::{
    emp_depth, emp_region, emp_region_cutting_plane, emp_region_grid_with_bound, sup_deviation, WeightedSample,
};
use depth_regions::experiments::{
    medians_by_n, persist, run_inclusion, run_lil_metric, run_mz, run_slln, stream_rng, to_bytes, ExperimentConfig,
    ExperimentKind, OutputFormat, RegionMode, TrajectoryRecord, WeightLaw,
};
use depth_regions::geometry::{hausdorff_distance, ConvexRegion, Point};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "depthreg", version, about = "Weighted halfspace depth and depth trimmed regions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Depth of a point under a reference distribution or a sample.
    Depth(DepthArgs),
    /// Population trimmed region as JSON.
    Region(RegionArgs),
    /// Empirical trimmed region of a sample as JSON.
    EmpRegion(EmpRegionArgs),
    /// Hausdorff distance between two regions stored as JSON.
    Hausdorff(HausdorffArgs),
    /// Largest halfplane deviation between a sample and a distribution.
    Deviation(DeviationArgs),
    /// Limsup constant of the normalized Hausdorff distance.
    Constants(ConstantsArgs),
    /// Rate of change of the trimmed region in the level.
    Rate(RateArgs),
    /// Run a Monte Carlo experiment and persist its trajectories.
    Experiment(ExperimentArgs),
}

/// A sample given by file, or drawn from `--dist`.
#[derive(Args)]
struct SampleArgs {
    /// CSV file with header `x,y,w`.
    #[arg(long, conflicts_with_all = ["n", "seed", "weights"])]
    sample: Option<PathBuf>,
    /// Number of points to draw from `--dist`.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "const1")]
    weights: WeightLaw,
}

#[derive(Args)]
struct DepthArgs {
    #[arg(long)]
    dist: Option<ModelDistribution>,
    #[arg(long, allow_hyphen_values = true)]
    x: f64,
    #[arg(long, allow_hyphen_values = true)]
    y: Option<f64>,
    /// CSV file with header `x,y,w`; empirical depth instead of `--dist`.
    #[arg(long, conflicts_with = "dist")]
    sample: Option<PathBuf>,
}

#[derive(Args)]
struct RegionArgs {
    #[arg(long)]
    dist: ModelDistribution,
    #[arg(long)]
    alpha: f64,
    /// Vertex count for curved boundaries.
    #[arg(long, default_value_t = 1024)]
    resolution: usize,
}

#[derive(Args)]
struct EmpRegionArgs {
    #[arg(long)]
    dist: Option<ModelDistribution>,
    #[arg(long)]
    alpha: f64,
    #[command(flatten)]
    sample: SampleArgs,
    #[arg(long, default_value = "exact")]
    mode: RegionMode,
    #[arg(long, default_value_t = depth_regions::empirical::DEFAULT_GRID_SIZE)]
    grid_size: usize,
}

#[derive(Args)]
struct HausdorffArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
}

#[derive(Args)]
struct DeviationArgs {
    #[arg(long)]
    dist: ModelDistribution,
    #[command(flatten)]
    sample: SampleArgs,
    /// Equally spaced directions scanned besides the pair normals.
    #[arg(long, default_value_t = 720)]
    directions: usize,
}

#[derive(Args)]
struct ConstantsArgs {
    #[arg(long)]
    dist: ModelDistribution,
    #[arg(long)]
    alpha: f64,
    /// Second moment of the weights.
    #[arg(long = "M", default_value_t = 1.0)]
    second_moment: f64,
}

#[derive(Args)]
struct RateArgs {
    #[arg(long)]
    dist: ModelDistribution,
    #[arg(long)]
    alpha: f64,
    /// Level step of the difference quotient.
    #[arg(long, default_value_t = 1e-3)]
    t: f64,
}

#[derive(Args)]
struct ExperimentArgs {
    kind: ExperimentKind,
    /// TOML file with `ExperimentConfig` fields; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dist: Option<ModelDistribution>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Largest sample size of the schedule.
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    n_min: Option<u64>,
    #[arg(long)]
    per_decade: Option<u32>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    weights: Option<WeightLaw>,
    #[arg(long, value_delimiter = ',')]
    gamma_mults: Option<Vec<f64>>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    mode: Option<RegionMode>,
    #[arg(long)]
    grid_size: Option<usize>,
    #[arg(long)]
    format: Option<OutputFormat>,
    /// Output path; `{experiment}`, `{dist}` and `{alpha}` are substituted.
    /// Records go to stdout when absent.
    #[arg(long)]
    out: Option<String>,
    /// Record wall times (output then depends on the machine).
    #[arg(long)]
    timing: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

/// Exits with status 2 and the usual usage banner.
fn usage(msg: impl std::fmt::Display) -> ! {
    Cli::command().error(ErrorKind::ValueValidation, msg).exit()
}

fn valid_alpha(alpha: f64) -> f64 {
    if let Err(e) = check_alpha(alpha) {
        usage(e);
    }
    alpha
}

fn planar(d: &ModelDistribution) -> PlanarModel {
    d.planar().unwrap_or_else(|e| usage(e))
}

/// Rounds to the 12 significant digits the CLI prints.
fn sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

fn num(x: f64) -> String {
    sig(x).to_string()
}

fn point_json(p: Point) -> Value {
    json!([sig(p.x), sig(p.y)])
}

fn region_json(r: &ConvexRegion) -> Value {
    json!({ "vertices": r.vertices().iter().map(|&p| point_json(p)).collect::<Vec<_>>() })
}

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("values are finite"));
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Depth(a) => depth(a),
        Command::Region(a) => region(a),
        Command::EmpRegion(a) => emp(a),
        Command::Hausdorff(a) => {
            let (ra, rb) = (read_region(&a.a)?, read_region(&a.b)?);
            println!("{}", num(hausdorff_distance(&ra, &rb)?));
            Ok(())
        }
        Command::Deviation(a) => {
            let model = planar(&a.dist);
            if a.directions == 0 {
                usage("--directions must be positive");
            }
            let s = load_sample(&a.sample, Some(&model))?;
            let d = sup_deviation(&s, &model, a.directions);
            print_json(&json!({
                "value": sig(d.value),
                "direction": [sig(d.direction.ux()), sig(d.direction.uy())],
                "offset": if d.offset.is_finite() { json!(sig(d.offset)) } else { Value::Null },
            }));
            Ok(())
        }
        Command::Constants(a) => constants(a),
        Command::Rate(a) => {
            let model = planar(&a.dist);
            let alpha = valid_alpha(a.alpha);
            if !(a.t.is_finite() && a.t != 0.0 && alpha - a.t.abs() > 0.0 && alpha + a.t.abs() < 0.5) {
                usage("--t must be non-zero with alpha ± |t| inside (0, 1/2)");
            }
            let r = hausdorff_rate_checked(&model, alpha, a.t)?;
            println!("rate {}", num(r.rate));
            println!("half_step_rate {}", num(r.half_step_rate));
            println!("relative_change {}", num(r.relative_change));
            Ok(())
        }
        Command::Experiment(a) => experiment(a),
    }
}

fn depth(a: DepthArgs) -> anyhow::Result<()> {
    let value = match (&a.dist, &a.sample) {
        (_, Some(path)) => {
            let y = a.y.unwrap_or_else(|| usage("--y is required for a sample"));
            let s = WeightedSample::read_csv(path)?;
            emp_depth(&s, Point::new(a.x, y))?
        }
        (Some(ModelDistribution::Planar(m)), None) => {
            let y = a.y.unwrap_or_else(|| usage("--y is required for a planar distribution"));
            if !(a.x.is_finite() && y.is_finite()) {
                usage("coordinates must be finite");
            }
            m.depth(Point::new(a.x, y))
        }
        (Some(ModelDistribution::Univariate(u)), None) => {
            if a.y.is_some() {
                usage("--y is not accepted for a univariate distribution");
            }
            u.depth_1d(a.x)
        }
        (None, None) => usage("one of --dist or --sample is required"),
    };
    println!("{}", num(value));
    Ok(())
}

fn region(a: RegionArgs) -> anyhow::Result<()> {
    let alpha = valid_alpha(a.alpha);
    match a.dist {
        ModelDistribution::Planar(m) => {
            if a.resolution < 3 {
                usage("--resolution must be at least 3");
            }
            print_json(&region_json(&m.region(alpha, a.resolution)?));
        }
        ModelDistribution::Univariate(u) => {
            let (lo, hi) = u.region_1d(alpha)?;
            print_json(&json!({ "lower": sig(lo), "upper": sig(hi) }));
        }
    }
    Ok(())
}

fn load_sample(a: &SampleArgs, model: Option<&PlanarModel>) -> anyhow::Result<WeightedSample> {
    if let Some(path) = &a.sample {
        return Ok(WeightedSample::read_csv(path)?);
    }
    let Some(model) = model else { usage("--dist is required to draw a sample") };
    let n = a.n.unwrap_or_else(|| usage("either --sample or --n is required"));
    if n == 0 {
        usage("--n must be positive");
    }
    let points = model.sample(n, &mut stream_rng(a.seed, 0, 0));
    let mut wr = stream_rng(a.seed, 0, 1);
    let weights = (0..n).map(|_| a.weights.draw(&mut wr)).collect();
    Ok(WeightedSample::new(points, weights)?)
}

fn emp(a: EmpRegionArgs) -> anyhow::Result<()> {
    let alpha = valid_alpha(a.alpha);
    let model = a.dist.as_ref().map(planar);
    let s = load_sample(&a.sample, model.as_ref())?;
    let v = match a.mode {
        RegionMode::Grid => {
            let (r, bound) = emp_region_grid_with_bound(&s, alpha, a.grid_size)?;
            let mut v = region_json(&r);
            v["grid_error_bound"] = if bound.is_finite() { json!(sig(bound)) } else { Value::Null };
            v
        }
        RegionMode::Exact if !s.has_negative_weights() => region_json(&emp_region_cutting_plane(&s, alpha)?),
        RegionMode::Exact => region_json(&emp_region(&s, alpha)?),
        RegionMode::Auto => usage("--mode must be exact or grid"),
    };
    print_json(&v);
    Ok(())
}

fn read_region(path: &Path) -> anyhow::Result<ConvexRegion> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing region in {}", path.display()))
}

fn constants(a: ConstantsArgs) -> anyhow::Result<()> {
    let model = planar(&a.dist);
    let alpha = valid_alpha(a.alpha);
    if !(a.second_moment.is_finite() && a.second_moment >= 1.0) {
        usage("--M must be a finite second moment of at least 1");
    }
    let c = lil_constant(&model, alpha, a.second_moment)?;
    let envelope = (a.second_moment * alpha - alpha * alpha).sqrt();
    println!("distribution {}", c.distribution);
    println!("alpha {}", num(c.alpha));
    println!("M {}", num(c.second_moment));
    println!("envelope {}", num(envelope));
    println!("min_radon {}", num(c.min_radon));
    match c.constant {
        ConstantValue::Exact(v) => println!("constant {}", num(v)),
        ConstantValue::Bounds([lo, hi]) => {
            println!("constant_lower {}", num(lo));
            println!("constant_upper {}", num(hi));
        }
    }
    Ok(())
}

/// File values, then flags, over the library defaults.
fn build_config(a: &ExperimentArgs) -> anyhow::Result<ExperimentConfig> {
    let base = ExperimentConfig::new(a.kind, "square", 0.25, WeightLaw::Const1);
    let mut table = toml::Table::try_from(&base).context("encoding defaults")?;
    if let Some(path) = &a.config {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let file: toml::Table = text.parse().with_context(|| format!("parsing {}", path.display()))?;
        table.extend(file);
    }
    let mut set = |k: &str, v: toml::Value| {
        table.insert(k.to_owned(), v);
    };
    set("experiment", a.kind.tag().into());
    if let Some(d) = &a.dist {
        set("distribution", d.tag().into());
    }
    if let Some(v) = a.alpha {
        set("alpha", v.into());
    }
    if let Some(v) = a.n {
        set("n_max", toml::Value::Integer(v as i64));
    }
    if let Some(v) = a.n_min {
        set("n_min", toml::Value::Integer(v as i64));
    }
    if let Some(v) = a.per_decade {
        set("per_decade", toml::Value::Integer(v.into()));
    }
    if let Some(v) = a.reps {
        set("replications", toml::Value::Integer(v as i64));
    }
    if let Some(v) = a.weights {
        set("weights", v.tag().into());
    }
    if let Some(v) = &a.gamma_mults {
        set("gamma_mults", toml::Value::Array(v.iter().map(|&g| g.into()).collect()));
    }
    if let Some(v) = a.p {
        set("p", v.into());
    }
    if let Some(v) = a.seed {
        set("seed", toml::Value::Integer(v as i64));
    }
    if let Some(v) = a.mode {
        set("mode", v.to_string().into());
    }
    if let Some(v) = a.grid_size {
        set("grid_size", toml::Value::Integer(v as i64));
    }
    if a.timing {
        set("timing", true.into());
    }
    let cfg: ExperimentConfig = table.try_into().context("invalid experiment configuration")?;
    if let Err(e) = cfg.validate() {
        usage(e);
    }
    Ok(cfg)
}

fn expand(template: &str, cfg: &ExperimentConfig) -> PathBuf {
    template
        .replace("{experiment}", cfg.experiment.tag())
        .replace("{dist}", &cfg.distribution)
        .replace("{alpha}", &cfg.alpha.to_string())
        .into()
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_owned(), num)
}

fn experiment(a: ExperimentArgs) -> anyhow::Result<()> {
    let cfg = build_config(&a)?;
    let out = a.out.as_deref().map(|t| expand(t, &cfg));
    let format = a.format.unwrap_or_else(|| match out.as_ref().and_then(|p| p.extension()) {
        Some(e) if e == "json" => OutputFormat::Json,
        _ => OutputFormat::Csv,
    });

    let mut summary = Vec::new();
    let records: Vec<TrajectoryRecord> = match cfg.experiment {
        ExperimentKind::Slln => run_slln(&cfg)?,
        ExperimentKind::Mz => {
            let run = run_mz(&cfg)?;
            summary.push(run.label.clone());
            run.records
        }
        ExperimentKind::Inclusion => {
            let run = run_inclusion(&cfg)?;
            summary.push(format!("tail from n = {}", run.tail_from_n));
            for g in &run.summary {
                summary.push(format!(
                    "gamma_mult {} gamma {} tail_failure_rate {} lower {} upper {} replications_with_failure {}",
                    num(g.gamma_mult),
                    num(g.gamma),
                    num(g.tail_failure_rate),
                    num(g.tail_lower_failure_rate),
                    num(g.tail_upper_failure_rate),
                    g.replications_with_failure
                ));
            }
            run.records
        }
        ExperimentKind::Lil => {
            let run = run_lil_metric(&cfg)?;
            match run.constant.constant {
                ConstantValue::Exact(v) => summary.push(format!("constant {}", num(v))),
                ConstantValue::Bounds([lo, hi]) => summary.push(format!("constant in [{}, {}]", num(lo), num(hi))),
            }
            summary.push(format!(
                "median final running max {} ratio {}",
                opt(run.median_final_running_max),
                opt(run.ratio_to_constant)
            ));
            run.records
        }
    };
    for m in medians_by_n(&records) {
        summary.push(format!("n {} median {} missing {}", m.n, opt(m.median_statistic), m.missing));
    }

    match out {
        Some(path) => {
            persist(&records, &path, format)?;
            for line in &summary {
                println!("{line}");
            }
            println!("wrote {}", path.display());
        }
        None => {
            use std::io::Write;
            std::io::stdout().write_all(&to_bytes(&records, format)?)?;
            for line in &summary {
                eprintln!("{line}");
            }
        }
    }
    Ok(())
}

