//! Reference distributions with closed-form halfspace mass, depth, trimmed
//! regions and projected densities.
//!
//! All four planar laws are centrally symmetric, so the maximal depth is
//! 1/2 and trimmed regions exist for every level in `(0, 1/2)`.

use std::f64::consts::{FRAC_1_PI, FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::geometry::{intersect_halfplanes, BoundingBox, ConvexRegion, Halfplane, Point, UnitDirection};

/// Maximal depth of every planar model.
pub const ALPHA_MAX: f64 = 0.5;

const MIN_RESOLUTION: usize = 16;

/// Standard normal cdf.
pub fn normal_cdf(t: f64) -> f64 {
    0.5 * libm::erfc(-t * std::f64::consts::FRAC_1_SQRT_2)
}

/// Standard normal density.
pub fn normal_pdf(t: f64) -> f64 {
    (-0.5 * t * t).exp() / (2.0 * PI).sqrt()
}

/// Standard normal quantile, polished by one Newton step on [`normal_cdf`].
pub fn normal_quantile(p: f64) -> f64 {
    let q = Normal::new(0.0, 1.0)
        .expect("standard normal parameters are valid")
        .inverse_cdf(p);
    if !q.is_finite() {
        return q;
    }
    let d = normal_pdf(q);
    if d > 0.0 {
        q - (normal_cdf(q) - p) / d
    } else {
        q
    }
}

/// Checks `0 < alpha < 1/2`.
pub fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < ALPHA_MAX {
        Ok(())
    } else {
        Err(Error::InvalidAlpha {
            alpha,
            range: "(0, 1/2)",
        })
    }
}

/// Density of a one-dimensional projection, evaluated at a point.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct RadonValue(f64);

impl RadonValue {
    fn new(v: f64) -> Self {
        debug_assert!(v >= 0.0);
        Self(v.max(0.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Radius `r` of the depth level `alpha` of the uniform law on the unit
/// disk: the root of `asin r + r sqrt(1 - r^2) = pi/2 - pi alpha`.
pub fn disk_level_radius(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= ALPHA_MAX) {
        return Err(Error::InvalidAlpha {
            alpha,
            range: "(0, 1/2]",
        });
    }
    if alpha == ALPHA_MAX {
        return Ok(0.0);
    }
    let target = FRAC_PI_2 - PI * alpha;
    let g = |r: f64| r.asin() + r * (1.0 - r * r).sqrt() - target;
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while hi - lo > 1e-15 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Fraction of the unit disk area on the far side of a chord at signed
/// distance `s` from the centre.
fn disk_cap_fraction(s: f64) -> f64 {
    if s >= 1.0 {
        0.0
    } else if s <= -1.0 {
        1.0
    } else {
        (s.acos() - s * (1.0 - s * s).sqrt()) * FRAC_1_PI
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PlanarModel {
    UniformDisk { radius: f64 },
    UniformUnitSquare,
    StdGaussian2D,
    Cauchy2D,
}

impl PlanarModel {
    pub fn unit_disk() -> Self {
        PlanarModel::UniformDisk { radius: 1.0 }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            PlanarModel::UniformDisk { .. } => "disk",
            PlanarModel::UniformUnitSquare => "square",
            PlanarModel::StdGaussian2D => "gauss",
            PlanarModel::Cauchy2D => "cauchy",
        }
    }

    /// Center of symmetry, the unique point of depth 1/2.
    pub fn center(&self) -> Point {
        match self {
            PlanarModel::UniformUnitSquare => Point::new(0.5, 0.5),
            _ => Point::ORIGIN,
        }
    }

    /// Bounding box of the support for compactly supported laws.
    pub fn support_box(&self) -> Option<BoundingBox> {
        match *self {
            PlanarModel::UniformDisk { radius } => Some(BoundingBox::new(
                Point::new(-radius, -radius),
                Point::new(radius, radius),
            )),
            PlanarModel::UniformUnitSquare => {
                Some(BoundingBox::new(Point::ORIGIN, Point::new(1.0, 1.0)))
            }
            _ => None,
        }
    }

    /// Whether `x` lies in the closed support.
    pub fn in_support(&self, x: Point) -> bool {
        match *self {
            PlanarModel::UniformDisk { radius } => x.norm() <= radius,
            PlanarModel::UniformUnitSquare => (0.0..=1.0).contains(&x.x) && (0.0..=1.0).contains(&x.y),
            _ => true,
        }
    }

    /// Probability of the closed halfplane `h`.
    pub fn halfspace_mass(&self, h: &Halfplane) -> f64 {
        match *self {
            PlanarModel::UniformDisk { radius } => 1.0 - disk_cap_fraction(h.t / radius),
            PlanarModel::UniformUnitSquare => {
                let unit = BoundingBox::new(Point::ORIGIN, Point::new(1.0, 1.0));
                intersect_halfplanes(std::slice::from_ref(h), unit)
                    .map(|r| r.area())
                    .unwrap_or(0.0)
                    .clamp(0.0, 1.0)
            }
            PlanarModel::StdGaussian2D => normal_cdf(h.t),
            PlanarModel::Cauchy2D => {
                // u1 X1 + u2 X2 is Cauchy with scale |u1| + |u2|
                let scale = h.u.ux().abs() + h.u.uy().abs();
                0.5 + (h.t / scale).atan() * FRAC_1_PI
            }
        }
    }

    /// Halfspace depth of `x`.
    pub fn depth(&self, x: Point) -> f64 {
        match *self {
            PlanarModel::UniformDisk { radius } => disk_cap_fraction(x.norm() / radius),
            PlanarModel::UniformUnitSquare => {
                if !self.in_support(x) {
                    return 0.0;
                }
                2.0 * x.x.min(1.0 - x.x) * x.y.min(1.0 - x.y)
            }
            PlanarModel::StdGaussian2D => normal_cdf(-x.norm()),
            PlanarModel::Cauchy2D => 0.5 - x.x.abs().max(x.y.abs()).atan() * FRAC_1_PI,
        }
    }

    /// Radius of the circular region of level `alpha` (disk and Gaussian).
    pub fn level_radius(&self, alpha: f64) -> Option<Result<f64>> {
        match *self {
            PlanarModel::UniformDisk { radius } => Some(disk_level_radius(alpha).map(|r| r * radius)),
            PlanarModel::StdGaussian2D => Some(check_alpha(alpha).map(|_| normal_quantile(1.0 - alpha))),
            _ => None,
        }
    }

    /// Polygonal depth trimmed region of level `alpha`.
    ///
    /// Every vertex lies exactly on the level curve `{depth = alpha}`;
    /// circular regions are inscribed regular polygons, the Cauchy region is
    /// its exact square, and the square's region samples each of its four
    /// hyperbolic arcs uniformly in the abscissa.
    pub fn region(&self, alpha: f64, resolution: usize) -> Result<ConvexRegion> {
        check_alpha(alpha)?;
        if resolution < MIN_RESOLUTION {
            return Err(Error::InvalidArgument(format!(
                "resolution {resolution} below {MIN_RESOLUTION}"
            )));
        }
        match *self {
            PlanarModel::UniformDisk { .. } | PlanarModel::StdGaussian2D => {
                let r = self.level_radius(alpha).expect("circular model")?;
                Ok(ConvexRegion::regular_polygon(Point::ORIGIN, r, resolution, 0.0))
            }
            PlanarModel::Cauchy2D => {
                let c = cauchy_half_width(alpha);
                Ok(ConvexRegion::from_vertices(vec![
                    Point::new(c, c),
                    Point::new(-c, c),
                    Point::new(-c, -c),
                    Point::new(c, -c),
                ]))
            }
            PlanarModel::UniformUnitSquare => Ok(square_region(alpha, resolution)),
        }
    }

    /// Density of the projection onto `u`, at `<x, u>`.
    pub fn radon(&self, x: Point, u: UnitDirection) -> Result<RadonValue> {
        if !x.is_finite() {
            return Err(Error::NonFinite("point"));
        }
        if !self.in_support(x) {
            return Err(Error::OutsideSupport {
                x: x.x,
                y: x.y,
                dist: self.tag(),
            });
        }
        let s = u.dot(x);
        let v = match *self {
            PlanarModel::UniformDisk { radius } => {
                2.0 * (radius * radius - s * s).max(0.0).sqrt() / (PI * radius * radius)
            }
            PlanarModel::UniformUnitSquare => square_chord(s, u),
            PlanarModel::StdGaussian2D => normal_pdf(s),
            PlanarModel::Cauchy2D => {
                let c = u.ux().abs() + u.uy().abs();
                c / (PI * (c * c + s * s))
            }
        };
        Ok(RadonValue::new(v))
    }

    /// Minimum of the projected density over the boundary of the level-`alpha`
    /// region, each point paired with the outer normal of its minimal
    /// halfplane.
    ///
    /// The square uses the localized minimum at the diagonal touch points,
    /// where the Hausdorff supremum between neighbouring regions is
    /// attained. The Cauchy value is the one at non-vertex boundary points
    /// and only enters bounds.
    pub fn min_boundary_radon(&self, alpha: f64) -> Result<f64> {
        check_alpha(alpha)?;
        Ok(match *self {
            PlanarModel::UniformDisk { radius } => {
                let r = disk_level_radius(alpha)?;
                2.0 * (1.0 - r * r).sqrt() / (PI * radius)
            }
            PlanarModel::StdGaussian2D => normal_pdf(normal_quantile(1.0 - alpha)),
            PlanarModel::UniformUnitSquare => 2.0 * alpha.sqrt(),
            PlanarModel::Cauchy2D => (PI * alpha).sin().powi(2) / PI,
        })
    }

    /// Heuristic fallback: minimum of the projected density over the
    /// vertices of `region(alpha, resolution)`, with normals averaged from
    /// the adjacent edges.
    pub fn boundary_scan_min_radon(&self, alpha: f64, resolution: usize) -> Result<f64> {
        let region = self.region(alpha, resolution)?;
        let mut best = f64::INFINITY;
        for (x, u) in region.vertex_normals() {
            best = best.min(self.radon(x, u)?.value());
        }
        Ok(best)
    }

    /// `n` independent draws.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Point> {
        (0..n).map(|_| self.draw(rng)).collect()
    }

    /// `n` draws from the ChaCha stream `(seed, stream)`.
    pub fn sample_stream(&self, n: usize, seed: u64, stream: u64) -> Vec<Point> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        self.sample(n, &mut rng)
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        match *self {
            PlanarModel::UniformDisk { radius } => loop {
                let x = rng.random::<f64>() * 2.0 - 1.0;
                let y = rng.random::<f64>() * 2.0 - 1.0;
                if x * x + y * y <= 1.0 {
                    break Point::new(x * radius, y * radius);
                }
            },
            PlanarModel::UniformUnitSquare => Point::new(rng.random(), rng.random()),
            PlanarModel::StdGaussian2D => {
                Point::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
            }
            PlanarModel::Cauchy2D => Point::new(std_cauchy(rng), std_cauchy(rng)),
        }
    }
}

fn std_cauchy<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        // open interval keeps tan finite
        let u: f64 = rng.random();
        if u > 0.0 {
            return (PI * (u - 0.5)).tan();
        }
    }
}

fn cauchy_half_width(alpha: f64) -> f64 {
    1.0 / (PI * alpha).tan()
}

/// Length of `{z in [0,1]^2 : <z, u> = s}`.
fn square_chord(s: f64, u: UnitDirection) -> f64 {
    // z = s u + lam w, w = u rotated by 90 degrees
    let w = u.perp();
    let base = u.as_point() * s;
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for (b, d) in [(base.x, w.ux()), (base.y, w.uy())] {
        if d.abs() < 1e-15 {
            if !(0.0..=1.0).contains(&b) {
                return 0.0;
            }
        } else {
            let (a0, a1) = ((0.0 - b) / d, (1.0 - b) / d);
            lo = lo.max(a0.min(a1));
            hi = hi.min(a0.max(a1));
        }
    }
    (hi - lo).max(0.0)
}

/// Region of the unit square: four hyperbolic arcs
/// `min(x1, 1 - x1) min(x2, 1 - x2) = alpha / 2`.
fn square_region(alpha: f64, resolution: usize) -> ConvexRegion {
    let c = alpha / 2.0;
    let per_arc = resolution.div_ceil(4).max(2);
    // lower-left arc x2 = c / x1 for x1 in [2c, 1/2], traversed so that the
    // polygon comes out counter-clockwise after reflection
    let arc: Vec<Point> = (0..per_arc)
        .map(|i| {
            let x1 = 2.0 * c + (0.5 - 2.0 * c) * i as f64 / (per_arc - 1) as f64;
            Point::new(x1, c / x1)
        })
        .collect();
    let mut vs = Vec::with_capacity(4 * per_arc);
    // lower-left: from (2c, 1/2) down to (1/2, 2c)
    vs.extend(arc.iter().copied());
    // lower-right: mirror x1 -> 1 - x1, traversed from (1/2, 2c) to (1 - 2c, 1/2)
    vs.extend(arc.iter().rev().map(|p| Point::new(1.0 - p.x, p.y)));
    // upper-right
    vs.extend(arc.iter().map(|p| Point::new(1.0 - p.x, 1.0 - p.y)));
    // upper-left
    vs.extend(arc.iter().rev().map(|p| Point::new(p.x, 1.0 - p.y)));
    ConvexRegion::from_vertices(vs)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnivariateLaw {
    StdNormal,
    UniformUnit,
}

impl UnivariateLaw {
    pub fn tag(&self) -> &'static str {
        match self {
            UnivariateLaw::StdNormal => "normal1d",
            UnivariateLaw::UniformUnit => "uniform1d",
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            UnivariateLaw::StdNormal => normal_cdf(x),
            UnivariateLaw::UniformUnit => x.clamp(0.0, 1.0),
        }
    }

    pub fn quantile(&self, p: f64) -> f64 {
        match self {
            UnivariateLaw::StdNormal => normal_quantile(p),
            UnivariateLaw::UniformUnit => p.clamp(0.0, 1.0),
        }
    }

    /// `min(F(x), 1 - F(x))`; the law has no atoms.
    pub fn depth_1d(&self, x: f64) -> f64 {
        let f = self.cdf(x);
        f.min(1.0 - f)
    }

    /// The interval between the `alpha` and `1 - alpha` quantiles.
    pub fn region_1d(&self, alpha: f64) -> Result<(f64, f64)> {
        check_alpha(alpha)?;
        Ok((self.quantile(alpha), self.quantile(1.0 - alpha)))
    }
}

/// A reference measure selected by tag.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelDistribution {
    Planar(PlanarModel),
    Univariate(UnivariateLaw),
}

impl ModelDistribution {
    pub fn tag(&self) -> &'static str {
        match self {
            ModelDistribution::Planar(p) => p.tag(),
            ModelDistribution::Univariate(u) => u.tag(),
        }
    }

    pub fn planar(&self) -> Result<PlanarModel> {
        match *self {
            ModelDistribution::Planar(p) => Ok(p),
            ModelDistribution::Univariate(u) => Err(Error::InvalidArgument(format!(
                "`{}` is univariate; a planar distribution is required",
                u.tag()
            ))),
        }
    }
}

impl FromStr for ModelDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "disk" => ModelDistribution::Planar(PlanarModel::unit_disk()),
            "square" => ModelDistribution::Planar(PlanarModel::UniformUnitSquare),
            "gauss" => ModelDistribution::Planar(PlanarModel::StdGaussian2D),
            "cauchy" => ModelDistribution::Planar(PlanarModel::Cauchy2D),
            "uniform1d" => ModelDistribution::Univariate(UnivariateLaw::UniformUnit),
            "normal1d" => ModelDistribution::Univariate(UnivariateLaw::StdNormal),
            other => return Err(Error::UnknownDistribution(other.to_owned())),
        })
    }
}

impl FromStr for PlanarModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.parse::<ModelDistribution>()?.planar()
    }
}

impl fmt::Display for ModelDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl fmt::Display for PlanarModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}
