//! Monte Carlo harness for the strong laws of the empirical trimmed
//! regions: SLLN and Marcinkiewicz-Zygmund decay, the LIL inclusion
//! sandwich, and LIL trajectories of the Hausdorff distance.
//!
//! Every replication owns two ChaCha streams keyed by `(seed, replication,
//! lane)`, one for points and one for weights, so results do not depend on
//! scheduling and switching the weight law leaves the points unchanged.
//! Samples are nested: the sample at size `n` is the first `n` draws.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{envelope, lambda_n, lil_constant, LilConstant};
use crate::distributions::{check_alpha, ModelDistribution, PlanarModel};
use crate::empirical::{emp_region_cutting_plane, emp_region_grid_with_bound, WeightedSample, DEFAULT_GRID_SIZE};
use crate::error::{Error, Result};
use crate::geometry::{hausdorff_distance, ConvexRegion};

/// Largest sample size computed exactly in [`RegionMode::Auto`].
pub const AUTO_EXACT_MAX: u64 = 3000;

/// Vertex-membership tolerance of the inclusion checks.
pub const INCLUSION_TOL: f64 = 1e-9;

/// Default vertex count of the population regions.
pub const DEFAULT_RESOLUTION: usize = 1024;

/// Below this gap between the exponents `1/2` and `(p - 1)/p`, MZ runs do
/// not assert decay: the statistic then moves by less than about 10% per
/// two decades of `n`.
pub const MZ_DECAY_MIN_GAP: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightLaw {
    /// `xi = 1`.
    Const1,
    /// Exponential with mean 1.
    Exp1,
    /// Poisson with mean 1.
    Pois1,
    /// `0` or `2` with probability 1/2 each.
    Bern02,
}

impl WeightLaw {
    /// Second moment `M = E xi^2`.
    pub fn second_moment(self) -> f64 {
        match self {
            WeightLaw::Const1 => 1.0,
            WeightLaw::Exp1 | WeightLaw::Pois1 | WeightLaw::Bern02 => 2.0,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            WeightLaw::Const1 => "const1",
            WeightLaw::Exp1 => "exp1",
            WeightLaw::Pois1 => "pois1",
            WeightLaw::Bern02 => "bern02",
        }
    }

    pub fn draw<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            WeightLaw::Const1 => 1.0,
            WeightLaw::Exp1 => Exp1.sample(rng),
            WeightLaw::Pois1 => Poisson::new(1.0).expect("unit rate").sample(rng),
            WeightLaw::Bern02 => {
                if rng.random::<bool>() {
                    2.0
                } else {
                    0.0
                }
            }
        }
    }
}

impl FromStr for WeightLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "const1" => WeightLaw::Const1,
            "exp1" => WeightLaw::Exp1,
            "pois1" => WeightLaw::Pois1,
            "bern02" => WeightLaw::Bern02,
            other => return Err(Error::InvalidArgument(format!("unknown weight law `{other}`"))),
        })
    }
}

impl fmt::Display for WeightLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Slln,
    Mz,
    Inclusion,
    Lil,
}

impl ExperimentKind {
    pub fn tag(self) -> &'static str {
        match self {
            ExperimentKind::Slln => "slln",
            ExperimentKind::Mz => "mz",
            ExperimentKind::Inclusion => "inclusion",
            ExperimentKind::Lil => "lil",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "slln" => ExperimentKind::Slln,
            "mz" => ExperimentKind::Mz,
            "inclusion" => ExperimentKind::Inclusion,
            "lil" => ExperimentKind::Lil,
            other => return Err(Error::InvalidArgument(format!("unknown experiment `{other}`"))),
        })
    }
}

/// How the empirical region is computed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionMode {
    /// Exact up to [`AUTO_EXACT_MAX`] points, grid beyond.
    #[default]
    Auto,
    Exact,
    Grid,
}

impl RegionMode {
    fn resolve(self, n: u64) -> RegionMode {
        match self {
            RegionMode::Auto if n <= AUTO_EXACT_MAX => RegionMode::Exact,
            RegionMode::Auto => RegionMode::Grid,
            m => m,
        }
    }
}

impl FromStr for RegionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "auto" => RegionMode::Auto,
            "exact" => RegionMode::Exact,
            "grid" => RegionMode::Grid,
            other => return Err(Error::InvalidArgument(format!("unknown region mode `{other}`"))),
        })
    }
}

impl fmt::Display for RegionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RegionMode::Auto => "auto",
            RegionMode::Exact => "exact",
            RegionMode::Grid => "grid",
        })
    }
}

fn default_per_decade() -> u32 {
    4
}
fn default_p() -> f64 {
    1.5
}
fn default_grid_size() -> usize {
    DEFAULT_GRID_SIZE
}
fn default_resolution() -> usize {
    DEFAULT_RESOLUTION
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    /// Distribution tag, one of `disk`, `square`, `gauss`, `cauchy`.
    pub distribution: String,
    pub alpha: f64,
    pub weights: WeightLaw,
    pub n_min: u64,
    pub n_max: u64,
    /// Schedule points per decade; consecutive sizes differ by the factor
    /// `10^(1 / per_decade)`.
    #[serde(default = "default_per_decade")]
    pub per_decade: u32,
    pub replications: usize,
    pub seed: u64,
    /// Multiples of `sqrt(M alpha - alpha^2)` used as LIL radii `gamma`.
    #[serde(default)]
    pub gamma_mults: Vec<f64>,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default)]
    pub mode: RegionMode,
    #[serde(default = "default_grid_size")]
    pub grid_size: usize,
    /// Vertex count of the population regions.
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    /// Record wall times; off by default so that output bytes depend only
    /// on the configuration.
    #[serde(default)]
    pub timing: bool,
}

impl ExperimentConfig {
    /// A configuration with default schedule density, `p`, mode and sizes.
    pub fn new(experiment: ExperimentKind, distribution: &str, alpha: f64, weights: WeightLaw) -> Self {
        Self {
            experiment,
            distribution: distribution.to_owned(),
            alpha,
            weights,
            n_min: 100,
            n_max: 10_000,
            per_decade: default_per_decade(),
            replications: 10,
            seed: 0,
            gamma_mults: Vec::new(),
            p: default_p(),
            mode: RegionMode::Auto,
            grid_size: DEFAULT_GRID_SIZE,
            resolution: DEFAULT_RESOLUTION,
            timing: false,
        }
    }

    pub fn model(&self) -> Result<PlanarModel> {
        self.distribution.parse::<ModelDistribution>()?.planar()
    }

    pub fn validate(&self) -> Result<()> {
        self.model()?;
        check_alpha(self.alpha)?;
        if self.n_min < 3 || self.n_max < self.n_min {
            return Err(Error::InvalidArgument(format!(
                "schedule needs 3 <= n_min <= n_max, got {}..{}",
                self.n_min, self.n_max
            )));
        }
        if self.per_decade == 0 {
            return Err(Error::InvalidArgument("per_decade must be positive".into()));
        }
        if self.replications == 0 {
            return Err(Error::InvalidArgument("at least one replication is required".into()));
        }
        if !(1.0..2.0).contains(&self.p) {
            return Err(Error::InvalidArgument(format!("p = {} outside [1, 2)", self.p)));
        }
        if self.gamma_mults.iter().any(|g| !g.is_finite() || *g < 0.0) {
            return Err(Error::InvalidArgument("gamma multipliers must be finite and nonnegative".into()));
        }
        if self.grid_size < 3 || self.resolution < 16 {
            return Err(Error::InvalidArgument("grid size below 3 or resolution below 16".into()));
        }
        Ok(())
    }

    pub fn schedule(&self) -> Vec<u64> {
        geometric_schedule(self.n_min, self.n_max, self.per_decade)
    }

    /// `sqrt(M alpha - alpha^2)`.
    pub fn sigma(&self) -> Result<f64> {
        envelope(self.weights.second_moment(), self.alpha)
    }
}

/// Sizes `round(n_min 10^(k / per_decade))` up to `n_max`, increasing.
pub fn geometric_schedule(n_min: u64, n_max: u64, per_decade: u32) -> Vec<u64> {
    let base = (n_min as f64).log10();
    let mut out: Vec<u64> = Vec::new();
    for k in 0.. {
        let n = 10f64.powf(base + k as f64 / per_decade as f64).round() as u64;
        if n > n_max {
            break;
        }
        if out.last() != Some(&n) {
            out.push(n);
        }
    }
    out
}

/// A ChaCha stream owned by one lane of one replication.
pub fn stream_rng(seed: u64, replication: usize, lane: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((replication as u64) << 1) | lane);
    rng
}

const POINT_LANE: u64 = 0;
const WEIGHT_LANE: u64 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InclusionFlags {
    pub gamma_mult: f64,
    pub gamma: f64,
    /// `R(alpha + gamma lambda_n)` lies in the empirical region.
    pub lower: bool,
    /// The empirical region lies in `R(alpha - gamma lambda_n)`.
    pub upper: bool,
    /// `rho_H(R(alpha - gamma lambda_n), R(alpha + gamma lambda_n))` when
    /// both levels are inside `(0, 1/2)`.
    pub sandwich_width: Option<f64>,
}

impl InclusionFlags {
    pub fn holds(&self) -> bool {
        self.lower && self.upper
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub replication: usize,
    pub n: u64,
    /// `rho_H(R_n(alpha), R(alpha))`; missing when the empirical region is
    /// empty.
    pub rho_h: Option<f64>,
    pub lambda_n: f64,
    /// `rho_H / lambda_n`.
    pub normalized: Option<f64>,
    /// Running maximum of `normalized` within the replication.
    pub running_max: Option<f64>,
    /// The statistic of the experiment: `rho_H`, `n^((p-1)/p) rho_H` or
    /// `rho_H / lambda_n`.
    pub statistic: Option<f64>,
    pub inclusion: Vec<InclusionFlags>,
    pub mode: RegionMode,
    /// Certified distance between grid and exact region in grid mode.
    pub grid_error_bound: Option<f64>,
    pub wall_time_s: Option<f64>,
}

/// All records of a configuration, ordered by replication and then `n`.
pub fn run_trajectories(cfg: &ExperimentConfig) -> Result<Vec<TrajectoryRecord>> {
    cfg.validate()?;
    let model = cfg.model()?;
    let schedule = cfg.schedule();
    let sigma = cfg.sigma()?;
    let pop = model.region(cfg.alpha, cfg.resolution)?;
    let per_rep: Vec<Result<Vec<TrajectoryRecord>>> = (0..cfg.replications)
        .into_par_iter()
        .map(|rep| replicate(cfg, &model, &schedule, sigma, &pop, rep))
        .collect();
    let mut out = Vec::with_capacity(cfg.replications * schedule.len());
    for r in per_rep {
        out.extend(r?);
    }
    Ok(out)
}

fn replicate(
    cfg: &ExperimentConfig,
    model: &PlanarModel,
    schedule: &[u64],
    sigma: f64,
    pop: &ConvexRegion,
    rep: usize,
) -> Result<Vec<TrajectoryRecord>> {
    let n_max = *schedule.last().expect("non-empty schedule") as usize;
    let points = model.sample(n_max, &mut stream_rng(cfg.seed, rep, POINT_LANE));
    let mut wrng = stream_rng(cfg.seed, rep, WEIGHT_LANE);
    let weights: Vec<f64> = (0..n_max).map(|_| cfg.weights.draw(&mut wrng)).collect();
    let mut out = Vec::with_capacity(schedule.len());
    let mut running: Option<f64> = None;
    for &n in schedule {
        let start = Instant::now();
        let s = WeightedSample::new(points[..n as usize].to_vec(), weights[..n as usize].to_vec())?;
        let mode = cfg.mode.resolve(n);
        let (region, bound) = match mode {
            RegionMode::Grid => {
                let (r, b) = emp_region_grid_with_bound(&s, cfg.alpha, cfg.grid_size)?;
                (r, Some(b))
            }
            _ => (emp_region_cutting_plane(&s, cfg.alpha)?, None),
        };
        let lam = lambda_n(n)?;
        let rho_h = if region.is_empty() {
            None
        } else {
            Some(hausdorff_distance(&region, pop)?)
        };
        let normalized = rho_h.map(|r| r / lam);
        if let Some(v) = normalized {
            running = Some(running.map_or(v, |m: f64| m.max(v)));
        }
        let statistic = match cfg.experiment {
            ExperimentKind::Slln | ExperimentKind::Inclusion => rho_h,
            ExperimentKind::Mz => rho_h.map(|r| (n as f64).powf((cfg.p - 1.0) / cfg.p) * r),
            ExperimentKind::Lil => normalized,
        };
        let inclusion = cfg
            .gamma_mults
            .iter()
            .map(|&mult| inclusion_flags(model, cfg, &region, mult, mult * sigma, lam))
            .collect::<Result<Vec<_>>>()?;
        out.push(TrajectoryRecord {
            replication: rep,
            n,
            rho_h,
            lambda_n: lam,
            normalized,
            running_max: running,
            statistic,
            inclusion,
            mode,
            grid_error_bound: bound,
            wall_time_s: cfg.timing.then(|| start.elapsed().as_secs_f64()),
        });
    }
    Ok(out)
}

fn inclusion_flags(
    model: &PlanarModel,
    cfg: &ExperimentConfig,
    emp: &ConvexRegion,
    gamma_mult: f64,
    gamma: f64,
    lam: f64,
) -> Result<InclusionFlags> {
    let (lo_level, hi_level) = (cfg.alpha + gamma * lam, cfg.alpha - gamma * lam);
    // levels at or beyond 1/2 give at most the centre; levels at or below 0
    // give the whole support
    let inner = (lo_level < 0.5).then(|| model.region(lo_level, cfg.resolution)).transpose()?;
    let outer = (hi_level > 0.0).then(|| model.region(hi_level, cfg.resolution)).transpose()?;
    let lower = match &inner {
        None => true,
        Some(r) => !emp.is_empty() && r.vertices().iter().all(|&v| emp.contains_tol(v, INCLUSION_TOL)),
    };
    let upper = match &outer {
        None => true,
        Some(r) => emp.vertices().iter().all(|&v| r.contains_tol(v, INCLUSION_TOL)),
    };
    let sandwich_width = match (&inner, &outer) {
        (Some(a), Some(b)) => Some(hausdorff_distance(a, b)?),
        _ => None,
    };
    Ok(InclusionFlags {
        gamma_mult,
        gamma,
        lower,
        upper,
        sandwich_width,
    })
}

fn with_kind(cfg: &ExperimentConfig, kind: ExperimentKind) -> ExperimentConfig {
    ExperimentConfig {
        experiment: kind,
        ..cfg.clone()
    }
}

/// Hausdorff distances to the population region along the schedule.
pub fn run_slln(cfg: &ExperimentConfig) -> Result<Vec<TrajectoryRecord>> {
    run_trajectories(&with_kind(cfg, ExperimentKind::Slln))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MzRun {
    pub p: f64,
    /// Whether decay of the statistic is asserted at desk scale; see
    /// [`MZ_DECAY_MIN_GAP`].
    pub decay_asserted: bool,
    pub label: String,
    pub records: Vec<TrajectoryRecord>,
}

/// Trajectories of `n^((p-1)/p) rho_H`.
pub fn run_mz(cfg: &ExperimentConfig) -> Result<MzRun> {
    let records = run_trajectories(&with_kind(cfg, ExperimentKind::Mz))?;
    let p = cfg.p;
    let gap = 0.5 - (p - 1.0) / p;
    let decay_asserted = gap >= MZ_DECAY_MIN_GAP;
    let label = if decay_asserted {
        format!("decay of n^((p-1)/p) rho_H expected for p = {p}")
    } else {
        format!("no decay guarantee asserted for p = {p}")
    };
    Ok(MzRun {
        p,
        decay_asserted,
        label,
        records,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaSummary {
    pub gamma_mult: f64,
    pub gamma: f64,
    /// Fraction of records in the tail half of the schedule where the
    /// sandwich fails.
    pub tail_failure_rate: f64,
    pub tail_lower_failure_rate: f64,
    pub tail_upper_failure_rate: f64,
    /// Fraction of replications with at least one failure anywhere on the
    /// schedule.
    pub replications_with_failure: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InclusionRun {
    pub tail_from_n: u64,
    pub summary: Vec<GammaSummary>,
    pub records: Vec<TrajectoryRecord>,
}

/// Sandwich checks `R(alpha + gamma lambda_n) ⊆ R_n(alpha) ⊆ R(alpha - gamma
/// lambda_n)` for each multiplier.
pub fn run_inclusion(cfg: &ExperimentConfig) -> Result<InclusionRun> {
    if cfg.gamma_mults.is_empty() {
        return Err(Error::InvalidArgument("inclusion runs need gamma multipliers".into()));
    }
    let records = run_trajectories(&with_kind(cfg, ExperimentKind::Inclusion))?;
    let schedule = cfg.schedule();
    let tail_from_n = schedule[schedule.len() / 2];
    Ok(InclusionRun {
        tail_from_n,
        summary: summarize_inclusion(&records, tail_from_n, cfg.replications),
        records,
    })
}

/// Per-multiplier failure frequencies; the tail is `n >= tail_from_n`.
pub fn summarize_inclusion(records: &[TrajectoryRecord], tail_from_n: u64, replications: usize) -> Vec<GammaSummary> {
    let Some(first) = records.first() else {
        return Vec::new();
    };
    (0..first.inclusion.len())
        .map(|g| {
            let tail: Vec<&InclusionFlags> = records
                .iter()
                .filter(|r| r.n >= tail_from_n)
                .map(|r| &r.inclusion[g])
                .collect();
            let frac = |f: &dyn Fn(&InclusionFlags) -> bool| {
                tail.iter().filter(|x| f(x)).count() as f64 / tail.len().max(1) as f64
            };
            let mut failed = vec![false; replications];
            for r in records {
                if !r.inclusion[g].holds() {
                    failed[r.replication] = true;
                }
            }
            GammaSummary {
                gamma_mult: first.inclusion[g].gamma_mult,
                gamma: first.inclusion[g].gamma,
                tail_failure_rate: frac(&|x| !x.holds()),
                tail_lower_failure_rate: frac(&|x| !x.lower),
                tail_upper_failure_rate: frac(&|x| !x.upper),
                replications_with_failure: failed.iter().filter(|&&f| f).count() as f64 / replications as f64,
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LilRun {
    pub constant: LilConstant,
    /// Final running maximum of `rho_H / lambda_n` per replication.
    pub final_running_max: Vec<Option<f64>>,
    pub median_final_running_max: Option<f64>,
    /// Median divided by the constant (its lower bound for Cauchy).
    pub ratio_to_constant: Option<f64>,
    pub records: Vec<TrajectoryRecord>,
}

/// LIL trajectories of `rho_H / lambda_n` with their running maxima.
pub fn run_lil_metric(cfg: &ExperimentConfig) -> Result<LilRun> {
    let model = cfg.model()?;
    let constant = lil_constant(&model, cfg.alpha, cfg.weights.second_moment())?;
    let records = run_trajectories(&with_kind(cfg, ExperimentKind::Lil))?;
    let mut final_running_max = vec![None; cfg.replications];
    for r in &records {
        final_running_max[r.replication] = r.running_max;
    }
    let present: Vec<f64> = final_running_max.iter().flatten().copied().collect();
    let median_final_running_max = median(&present);
    Ok(LilRun {
        ratio_to_constant: median_final_running_max.map(|m| m / constant.constant.lower()),
        constant,
        final_running_max,
        median_final_running_max,
        records,
    })
}

/// Median of the values, `None` for an empty slice.
pub fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeSummary {
    pub n: u64,
    pub median_statistic: Option<f64>,
    pub missing: usize,
}

/// Cross-replication median of the statistic at each size; missing values
/// are excluded and counted.
pub fn medians_by_n(records: &[TrajectoryRecord]) -> Vec<SizeSummary> {
    let mut ns: Vec<u64> = records.iter().map(|r| r.n).collect();
    ns.sort_unstable();
    ns.dedup();
    ns.into_iter()
        .map(|n| {
            let at: Vec<&TrajectoryRecord> = records.iter().filter(|r| r.n == n).collect();
            let vals: Vec<f64> = at.iter().filter_map(|r| r.statistic).collect();
            SizeSummary {
                n,
                median_statistic: median(&vals),
                missing: at.len() - vals.len(),
            }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::InvalidArgument(format!("unknown format `{other}`"))),
        }
    }
}

/// CSV header, in record field order.
pub const CSV_HEADER: [&str; 11] = [
    "replication",
    "n",
    "rho_h",
    "lambda_n",
    "normalized",
    "running_max",
    "statistic",
    "inclusion",
    "mode",
    "grid_error_bound",
    "wall_time_s",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// `gamma_mult:gamma:lower:upper:width` per multiplier, joined by `;`.
fn encode_inclusion(flags: &[InclusionFlags]) -> String {
    flags
        .iter()
        .map(|f| {
            format!(
                "{}:{}:{}:{}:{}",
                f.gamma_mult,
                f.gamma,
                f.lower as u8,
                f.upper as u8,
                opt(f.sandwich_width)
            )
        })
        .collect::<Vec<_>>()
        .join(";")
}

fn decode_inclusion(s: &str) -> Result<Vec<InclusionFlags>> {
    let bad = || Error::InvalidArgument(format!("malformed inclusion cell `{s}`"));
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(';')
        .map(|part| {
            let f: Vec<&str> = part.split(':').collect();
            if f.len() != 5 {
                return Err(bad());
            }
            Ok(InclusionFlags {
                gamma_mult: f[0].parse().map_err(|_| bad())?,
                gamma: f[1].parse().map_err(|_| bad())?,
                lower: f[2] == "1",
                upper: f[3] == "1",
                sandwich_width: parse_opt(f[4]).map_err(|_| bad())?,
            })
        })
        .collect()
}

fn parse_opt(s: &str) -> std::result::Result<Option<f64>, std::num::ParseFloatError> {
    if s.is_empty() {
        Ok(None)
    } else {
        s.parse().map(Some)
    }
}

/// Serializes records; floats use the shortest round-trip representation,
/// so the output is byte-stable and parses back to equal records.
pub fn to_bytes(records: &[TrajectoryRecord], format: OutputFormat) -> Result<Vec<u8>> {
    match format {
        OutputFormat::Json => {
            let mut v = serde_json::to_vec_pretty(records)?;
            v.push(b'\n');
            Ok(v)
        }
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let path = Path::new("<memory>");
            w.write_record(CSV_HEADER).map_err(|e| Error::csv(path, e))?;
            for r in records {
                w.write_record([
                    r.replication.to_string(),
                    r.n.to_string(),
                    opt(r.rho_h),
                    r.lambda_n.to_string(),
                    opt(r.normalized),
                    opt(r.running_max),
                    opt(r.statistic),
                    encode_inclusion(&r.inclusion),
                    r.mode.to_string(),
                    opt(r.grid_error_bound),
                    opt(r.wall_time_s),
                ])
                .map_err(|e| Error::csv(path, e))?;
            }
            w.into_inner()
                .map_err(|e| Error::io(path, std::io::Error::other(e.to_string())))
        }
    }
}

/// Writes records to `path`, creating parent directories.
pub fn persist(records: &[TrajectoryRecord], path: impl AsRef<Path>, format: OutputFormat) -> Result<()> {
    let path = path.as_ref();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, to_bytes(records, format)?).map_err(|e| Error::io(path, e))
}

/// Reads records written by [`persist`].
pub fn load_records(path: impl AsRef<Path>, format: OutputFormat) -> Result<Vec<TrajectoryRecord>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    match format {
        OutputFormat::Json => Ok(serde_json::from_slice(&bytes)?),
        OutputFormat::Csv => {
            let mut rd = csv::Reader::from_reader(bytes.as_slice());
            let bad = |what: &str| Error::InvalidArgument(format!("{}: bad {what}", path.display()));
            let mut out = Vec::new();
            for row in rd.records() {
                let row = row.map_err(|e| Error::csv(path, e))?;
                if row.len() != CSV_HEADER.len() {
                    return Err(bad("row length"));
                }
                let f = |i: usize| parse_opt(&row[i]).map_err(|_| bad(CSV_HEADER[i]));
                out.push(TrajectoryRecord {
                    replication: row[0].parse().map_err(|_| bad("replication"))?,
                    n: row[1].parse().map_err(|_| bad("n"))?,
                    rho_h: f(2)?,
                    lambda_n: row[3].parse().map_err(|_| bad("lambda_n"))?,
                    normalized: f(4)?,
                    running_max: f(5)?,
                    statistic: f(6)?,
                    inclusion: decode_inclusion(&row[7])?,
                    mode: row[8].parse()?,
                    grid_error_bound: f(9)?,
                    wall_time_s: f(10)?,
                });
            }
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_is_geometric() {
        assert_eq!(geometric_schedule(1000, 100_000, 1), vec![1000, 10_000, 100_000]);
        let s = geometric_schedule(100, 1_000_000, 4);
        assert_eq!(s.len(), 17);
        assert_eq!(s[1], 178);
        assert_eq!(*s.last().unwrap(), 1_000_000);
        assert!(s.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn weight_laws_have_unit_mean() {
        let mut r = stream_rng(5, 0, 1);
        for law in [WeightLaw::Const1, WeightLaw::Exp1, WeightLaw::Pois1, WeightLaw::Bern02] {
            let n = 200_000;
            let xs: Vec<f64> = (0..n).map(|_| law.draw(&mut r)).collect();
            let mean = xs.iter().sum::<f64>() / n as f64;
            let m2 = xs.iter().map(|x| x * x).sum::<f64>() / n as f64;
            assert!((mean - 1.0).abs() < 0.02, "{law}");
            assert!((m2 - law.second_moment()).abs() < 0.05, "{law}");
            assert!(xs.iter().all(|&x| x >= 0.0));
        }
    }

    #[test]
    fn streams_are_separate() {
        let a: u64 = stream_rng(1, 3, 0).random();
        let b: u64 = stream_rng(1, 3, 1).random();
        let c: u64 = stream_rng(1, 4, 0).random();
        assert!(a != b && a != c);
        assert_eq!(a, stream_rng(1, 3, 0).random::<u64>());
    }

    #[test]
    fn median_basics() {
        assert_eq!(median(&[]), None);
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
    }

    #[test]
    fn empty_csv_is_header_only() {
        let b = to_bytes(&[], OutputFormat::Csv).unwrap();
        assert_eq!(String::from_utf8(b).unwrap(), CSV_HEADER.join(",") + "\n");
    }

    #[test]
    fn config_validation() {
        let mut c = ExperimentConfig::new(ExperimentKind::Slln, "square", 0.25, WeightLaw::Const1);
        assert!(c.validate().is_ok());
        c.p = 2.0;
        assert!(c.validate().is_err());
        c.p = 1.5;
        c.distribution = "normal1d".into();
        assert!(c.validate().is_err());
        c.distribution = "square".into();
        c.alpha = 0.5;
        assert!(c.validate().is_err());
    }
}
