//! Deterministic limits of the strong laws: the LIL normalizing sequence,
//! the variance envelope, limsup constants, the derivative of the Hausdorff
//! functional, and finite-scale checks of the depth increments.

use std::f64::consts::{PI, SQRT_2, TAU};

use serde::{Deserialize, Serialize};

use crate::distributions::{check_alpha, disk_level_radius, normal_quantile, PlanarModel};
use crate::error::{Error, Result};
use crate::geometry::{hausdorff_distance, ConvexRegion, Point, UnitDirection};

/// Default boundary resolution for rate limits.
pub const DEFAULT_RESOLUTION: usize = 1024;

/// Smallest boundary resolution accepted by [`phi_prime`].
pub const MIN_PHI_RESOLUTION: usize = 64;

/// Relative change allowed when the step of [`hausdorff_rate_checked`] is
/// halved.
pub const RICHARDSON_TOL: f64 = 5e-3;

const VARPI_RADII: usize = 64;
const VARPI_ANGLES: usize = 64;

/// `sqrt(2 log log n / n)`.
pub fn lambda_n(n: u64) -> Result<f64> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!("lambda_n needs n >= 3, got {n}")));
    }
    let n = n as f64;
    Ok((2.0 * n.ln().ln() / n).sqrt())
}

/// Normalizing sequences of the strong laws.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RateSequence {
    LambdaN,
    /// `n^((1 - p) / p)`, the Marcinkiewicz-Zygmund rate.
    MzRate { p: f64 },
}

impl RateSequence {
    pub fn mz(p: f64) -> Result<Self> {
        if (1.0..2.0).contains(&p) {
            Ok(RateSequence::MzRate { p })
        } else {
            Err(Error::InvalidArgument(format!("p = {p} outside [1, 2)")))
        }
    }

    pub fn eval(&self, n: u64) -> Result<f64> {
        match *self {
            RateSequence::LambdaN => lambda_n(n),
            RateSequence::MzRate { p } => {
                if n == 0 {
                    return Err(Error::InvalidArgument("rate at n = 0".into()));
                }
                Ok((n as f64).powf((1.0 - p) / p))
            }
        }
    }
}

/// `sqrt(M m - m^2)`: the largest standard deviation of `xi 1{X in H}` over
/// halfplanes of mass `m` when `E xi^2 = M`.
pub fn envelope(second_moment: f64, m: f64) -> Result<f64> {
    let rad = m * (second_moment - m);
    if !rad.is_finite() || !(0.0..=1.0).contains(&m) || rad < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "envelope radicand M m - m^2 is negative or undefined (M = {second_moment}, m = {m})"
        )));
    }
    Ok(rad.sqrt())
}

fn check_second_moment(second_moment: f64, alpha: f64) -> Result<()> {
    if second_moment.is_finite() && second_moment >= 1.0 && second_moment > alpha {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "second moment M = {second_moment} must be finite, at least 1 and above alpha"
        )))
    }
}

/// A limsup constant, or the bracketing pair when only bounds are known.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ConstantValue {
    Exact(f64),
    Bounds([f64; 2]),
}

impl ConstantValue {
    /// The exact value, or the lower bound.
    pub fn lower(&self) -> f64 {
        match *self {
            ConstantValue::Exact(v) => v,
            ConstantValue::Bounds([lo, _]) => lo,
        }
    }

    pub fn upper(&self) -> f64 {
        match *self {
            ConstantValue::Exact(v) => v,
            ConstantValue::Bounds([_, hi]) => hi,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LilConstant {
    pub distribution: String,
    pub alpha: f64,
    #[serde(rename = "M")]
    pub second_moment: f64,
    pub constant: ConstantValue,
    pub min_radon: f64,
}

/// `limsup lambda_n^{-1} rho_H(R_n(alpha), R(alpha))`.
///
/// Equals `sqrt(M alpha - alpha^2) / min T` over the boundary. For the
/// Cauchy law the boundary has corners and only the bounds `[c, sqrt 2 c]`
/// with `c = pi sqrt(M alpha - alpha^2) / sin^2(pi alpha)` are known.
pub fn lil_constant(model: &PlanarModel, alpha: f64, second_moment: f64) -> Result<LilConstant> {
    check_alpha(alpha)?;
    check_second_moment(second_moment, alpha)?;
    let env = envelope(second_moment, alpha)?;
    let min_radon = model.min_boundary_radon(alpha)?;
    let c = env / min_radon;
    let constant = match model {
        PlanarModel::Cauchy2D => ConstantValue::Bounds([c, SQRT_2 * c]),
        _ => ConstantValue::Exact(c),
    };
    Ok(LilConstant {
        distribution: model.tag().to_owned(),
        alpha,
        second_moment,
        constant,
        min_radon,
    })
}

/// Independent closed forms of the limsup constant, for cross-checks.
pub fn lil_constant_closed_form(model: &PlanarModel, alpha: f64, second_moment: f64) -> Result<ConstantValue> {
    check_alpha(alpha)?;
    check_second_moment(second_moment, alpha)?;
    let v = second_moment * alpha - alpha * alpha;
    Ok(match *model {
        PlanarModel::UniformUnitSquare => ConstantValue::Exact(0.5 * (second_moment - alpha).sqrt()),
        PlanarModel::StdGaussian2D => {
            let q = normal_quantile(1.0 - alpha);
            ConstantValue::Exact((TAU * v).sqrt() * (0.5 * q * q).exp())
        }
        PlanarModel::UniformDisk { radius } => {
            let r = disk_level_radius(alpha)?;
            ConstantValue::Exact(radius * 0.5 * PI * (v / (1.0 - r * r)).sqrt())
        }
        PlanarModel::Cauchy2D => {
            let c = PI * v.sqrt() / (PI * alpha).sin().powi(2);
            ConstantValue::Bounds([c, SQRT_2 * c])
        }
    })
}

/// `sup |phi(x)| / T_{x, u_x}` over a polygonal sampling of the boundary of
/// the level-`alpha` region, with `u_x` the averaged outer normal.
pub fn phi_prime(model: &PlanarModel, alpha: f64, phi: impl Fn(Point) -> f64, resolution: usize) -> Result<f64> {
    if resolution < MIN_PHI_RESOLUTION {
        return Err(Error::InvalidArgument(format!(
            "boundary resolution {resolution} below {MIN_PHI_RESOLUTION}"
        )));
    }
    let region = model.region(alpha, resolution)?;
    let mut best: f64 = 0.0;
    for (x, u) in region.vertex_normals() {
        let t = model.radon(x, u)?.value();
        if !(t > 0.0) {
            return Err(Error::RadonNonPositive { x: x.x, y: x.y });
        }
        best = best.max(phi(x).abs() / t);
    }
    Ok(best)
}

fn check_rate_step(alpha: f64, t: f64) -> Result<()> {
    if t == 0.0 || !t.is_finite() || alpha - t.abs() <= 0.0 || alpha + t.abs() >= 0.5 {
        return Err(Error::InvalidArgument(format!(
            "step t = {t} must be nonzero with alpha +- |t| inside (0, 1/2) (alpha = {alpha})"
        )));
    }
    Ok(())
}

/// `rho_H(R(alpha + t), R(alpha)) / |t|` between regions of equal
/// resolution, so that the polygonal chord errors cancel to first order.
///
/// For the square the distance is localized to cones around the diagonals,
/// where the smooth part of the boundary moves fastest. Globally, the
/// corners of the region on the midlines move with unit speed and dominate
/// once `alpha > 1/4`; see [`hausdorff_rate_global`].
pub fn hausdorff_rate(model: &PlanarModel, alpha: f64, t: f64) -> Result<f64> {
    hausdorff_rate_at(model, alpha, t, DEFAULT_RESOLUTION)
}

pub fn hausdorff_rate_at(model: &PlanarModel, alpha: f64, t: f64, resolution: usize) -> Result<f64> {
    check_alpha(alpha)?;
    check_rate_step(alpha, t)?;
    let a = model.region(alpha + t, resolution)?;
    let b = model.region(alpha, resolution)?;
    let d = match model {
        PlanarModel::UniformUnitSquare => {
            let c = model.center();
            localized_directed(&a, &b, c).max(localized_directed(&b, &a, c))
        }
        _ => hausdorff_distance(&a, &b)?,
    };
    Ok(d / t.abs())
}

/// Unlocalized rate; differs from [`hausdorff_rate`] only for the square.
pub fn hausdorff_rate_global(model: &PlanarModel, alpha: f64, t: f64) -> Result<f64> {
    check_alpha(alpha)?;
    check_rate_step(alpha, t)?;
    let a = model.region(alpha + t, DEFAULT_RESOLUTION)?;
    let b = model.region(alpha, DEFAULT_RESOLUTION)?;
    Ok(hausdorff_distance(&a, &b)? / t.abs())
}

/// Half-angle of the cones around the diagonals that localize the square.
const DIAGONAL_CONE: f64 = PI / 8.0;

fn localized_directed(a: &ConvexRegion, b: &ConvexRegion, c: Point) -> f64 {
    a.vertices()
        .iter()
        .filter(|&&v| {
            let d = v - c;
            let off = (d.y.atan2(d.x) - PI / 4.0).rem_euclid(PI / 2.0);
            off.min(PI / 2.0 - off) <= DIAGONAL_CONE
        })
        .map(|&v| b.distance_to(v).expect("non-empty region"))
        .fold(0.0, f64::max)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub rate: f64,
    pub half_step_rate: f64,
    pub relative_change: f64,
}

/// [`hausdorff_rate`] together with its value at `t / 2`; fails unless the
/// two agree within [`RICHARDSON_TOL`].
pub fn hausdorff_rate_checked(model: &PlanarModel, alpha: f64, t: f64) -> Result<RateEstimate> {
    let rate = hausdorff_rate(model, alpha, t)?;
    let half_step_rate = hausdorff_rate(model, alpha, 0.5 * t)?;
    let relative_change = (rate - half_step_rate).abs() / half_step_rate.abs().max(f64::MIN_POSITIVE);
    if relative_change >= RICHARDSON_TOL {
        return Err(Error::InvalidArgument(format!(
            "rate estimate not converged at t = {t}: halving the step moves it by {relative_change:.3e}"
        )));
    }
    Ok(RateEstimate {
        rate,
        half_step_rate,
        relative_change,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Plus,
    Minus,
}

/// Largest (`Plus`) or smallest (`Minus`) depth increment `D(y) - D(x)`
/// over a polar grid of the closed ball of radius `r` around `x`.
pub fn varpi(model: &PlanarModel, x: Point, r: f64, side: Side) -> Result<f64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::InvalidArgument(format!("ball radius {r} must be positive")));
    }
    if let Some(b) = model.support_box() {
        let inside = match *model {
            PlanarModel::UniformDisk { radius } => x.norm() + r < radius,
            _ => x.x - r > b.min.x && x.x + r < b.max.x && x.y - r > b.min.y && x.y + r < b.max.y,
        };
        if !inside {
            return Err(Error::OutsideSupport {
                x: x.x,
                y: x.y,
                dist: model.tag(),
            });
        }
    }
    let d0 = model.depth(x);
    let mut best = 0.0f64;
    for i in 1..=VARPI_RADII {
        let rho = r * i as f64 / VARPI_RADII as f64;
        for j in 0..VARPI_ANGLES {
            let u = UnitDirection::from_angle(TAU * j as f64 / VARPI_ANGLES as f64);
            let inc = model.depth(x + u.as_point() * rho) - d0;
            best = match side {
                Side::Plus => best.max(inc),
                Side::Minus => best.min(inc),
            };
        }
    }
    Ok(best)
}

/// Boundary of `cl{x : D(x) >= alpha + phi(x)}` for the rotation invariant
/// models, traced along `resolution` rays from the centre.
///
/// The depth decreases along every ray, so each ray meets the boundary once,
/// at the radius of level `alpha + phi`. The result is star-shaped but in
/// general not convex.
pub fn perturbed_region(
    model: &PlanarModel,
    alpha: f64,
    phi: impl Fn(Point) -> f64,
    resolution: usize,
) -> Result<Vec<Point>> {
    if !matches!(model, PlanarModel::UniformDisk { .. } | PlanarModel::StdGaussian2D) {
        return Err(Error::InvalidArgument(format!(
            "perturbed regions are traced only for rotation invariant models, not `{}`",
            model.tag()
        )));
    }
    let r0 = model.level_radius(alpha).expect("rotation invariant")?;
    (0..resolution)
        .map(|j| {
            let u = UnitDirection::from_angle(TAU * j as f64 / resolution as f64).as_point();
            // phi is evaluated on the unperturbed boundary; the level then
            // fixes the radius along the ray
            let level = alpha + phi(u * r0);
            let r = model.level_radius(level).expect("rotation invariant")?;
            Ok(u * r)
        })
        .collect()
}

/// Hausdorff distance between two filled simple polygons.
///
/// Each directed supremum is attained on the boundary of the first set, so
/// both boundaries are sampled with `per_edge` points per edge.
pub fn polygon_set_hausdorff(a: &[Point], b: &[Point], per_edge: usize) -> f64 {
    directed_polygon(a, b, per_edge).max(directed_polygon(b, a, per_edge))
}

fn directed_polygon(a: &[Point], b: &[Point], per_edge: usize) -> f64 {
    let n = a.len();
    let mut best: f64 = 0.0;
    for i in 0..n {
        let (p, q) = (a[i], a[(i + 1) % n]);
        for k in 0..per_edge.max(1) {
            let z = p + (q - p) * (k as f64 / per_edge.max(1) as f64);
            best = best.max(filled_polygon_distance(z, b));
        }
    }
    best
}

fn filled_polygon_distance(z: Point, poly: &[Point]) -> f64 {
    let n = poly.len();
    let mut inside = false;
    let mut d = f64::INFINITY;
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        if (a.y > z.y) != (b.y > z.y) && z.x < a.x + (z.y - a.y) * (b.x - a.x) / (b.y - a.y) {
            inside = !inside;
        }
        let e = b - a;
        let lam = ((z - a).dot(e) / e.dot(e)).clamp(0.0, 1.0);
        d = d.min(z.dist(a + e * lam));
    }
    if inside {
        0.0
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_examples() {
        let v = lambda_n(16).unwrap();
        assert!((v - (2.0 * 16f64.ln().ln() / 16.0).sqrt()).abs() < 1e-15);
        assert!(lambda_n(2).is_err());
        for n in [10u64, 100, 12345, 1_000_000] {
            let l = lambda_n(n).unwrap();
            let nf = n as f64;
            assert!((l * (nf / (2.0 * nf.ln().ln())).sqrt() - 1.0).abs() < 1e-14);
        }
        let mut prev = lambda_n(10).unwrap();
        for n in 11..2000 {
            let l = lambda_n(n).unwrap();
            assert!(l < prev);
            prev = l;
        }
    }

    #[test]
    fn envelope_examples() {
        assert_eq!(envelope(1.0, 0.5).unwrap(), 0.5);
        assert!((envelope(2.0, 0.25).unwrap() - 7f64.sqrt() / 4.0).abs() < 1e-15);
        assert_eq!(envelope(1.5, 0.0).unwrap(), 0.0);
        assert!(envelope(0.5, 0.9).is_err());
    }

    #[test]
    fn mz_rate() {
        assert_eq!(RateSequence::mz(1.0).unwrap().eval(1000).unwrap(), 1.0);
        assert!(RateSequence::mz(2.0).is_err());
        let r = RateSequence::mz(1.5).unwrap().eval(1000).unwrap();
        assert!((r - 0.1).abs() < 1e-12);
    }

    #[test]
    fn square_constant() {
        let c = lil_constant(&PlanarModel::UniformUnitSquare, 0.25, 1.0).unwrap();
        assert!((c.constant.lower() - 3f64.sqrt() / 4.0).abs() < 1e-15);
        let c = lil_constant(&PlanarModel::Cauchy2D, 0.25, 1.0).unwrap();
        assert!(matches!(c.constant, ConstantValue::Bounds(_)));
        assert!(lil_constant(&PlanarModel::UniformUnitSquare, 0.25, 0.9).is_err());
    }

    #[test]
    fn constant_json_shape() {
        let c = lil_constant(&PlanarModel::UniformUnitSquare, 0.25, 1.0).unwrap();
        let v: serde_json::Value = serde_json::to_value(&c).unwrap();
        assert_eq!(v["distribution"], "square");
        assert!(v["constant"].is_number() && v["M"].is_number());
        let c = lil_constant(&PlanarModel::Cauchy2D, 0.2, 2.0).unwrap();
        let v: serde_json::Value = serde_json::to_value(&c).unwrap();
        assert_eq!(v["constant"].as_array().unwrap().len(), 2);
        let back: LilConstant = serde_json::from_value(v).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn filled_distance() {
        let sq = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ];
        assert_eq!(filled_polygon_distance(Point::new(0.5, 0.5), &sq), 0.0);
        assert!((filled_polygon_distance(Point::new(2.0, 2.0), &sq) - SQRT_2).abs() < 1e-15);
        let big = sq.map(|p| p * 2.0);
        assert!((polygon_set_hausdorff(&sq, &big, 4) - SQRT_2).abs() < 1e-15);
    }
}
