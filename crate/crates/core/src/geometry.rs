//! Planar primitives: points, unit directions, closed halfplanes and bounded
//! convex polygons.
//!
//! Everything is plain `f64`. Predicates use the absolute tolerance
//! [`EPS`]; inputs are assumed to be generic (no adversarial
//! near-degeneracies) and of order-one scale.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance for membership, vertex merging and collinearity.
pub const EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    #[inline]
    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn dist(self, o: Point) -> f64 {
        (self - o).norm()
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<[f64; 2]> for Point {
    fn from([x, y]: [f64; 2]) -> Self {
        Point { x, y }
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

impl Add for Point {
    type Output = Point;
    #[inline]
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    #[inline]
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    #[inline]
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

impl Neg for Point {
    type Output = Point;
    #[inline]
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

/// A unit vector on the circle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitDirection {
    ux: f64,
    uy: f64,
}

impl UnitDirection {
    pub const E1: UnitDirection = UnitDirection { ux: 1.0, uy: 0.0 };
    pub const E2: UnitDirection = UnitDirection { ux: 0.0, uy: 1.0 };

    /// Normalizes `(x, y)`.
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !(x.is_finite() && y.is_finite()) {
            return Err(Error::NonFinite("direction"));
        }
        let n = x.hypot(y);
        if n == 0.0 {
            return Err(Error::ZeroDirection);
        }
        Ok(Self {
            ux: x / n,
            uy: y / n,
        })
    }

    #[inline]
    pub fn from_angle(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self { ux: c, uy: s }
    }

    #[inline]
    pub fn ux(self) -> f64 {
        self.ux
    }

    #[inline]
    pub fn uy(self) -> f64 {
        self.uy
    }

    /// Angle in `(-pi, pi]`.
    #[inline]
    pub fn angle(self) -> f64 {
        self.uy.atan2(self.ux)
    }

    #[inline]
    pub fn as_point(self) -> Point {
        Point::new(self.ux, self.uy)
    }

    #[inline]
    pub fn dot(self, p: Point) -> f64 {
        self.ux * p.x + self.uy * p.y
    }

    /// Counter-clockwise rotation by a right angle.
    #[inline]
    pub fn perp(self) -> Self {
        Self {
            ux: -self.uy,
            uy: self.ux,
        }
    }

    #[inline]
    pub fn opposite(self) -> Self {
        Self {
            ux: -self.ux,
            uy: -self.uy,
        }
    }

    #[inline]
    pub fn distance(self, o: UnitDirection) -> f64 {
        (self.ux - o.ux).hypot(self.uy - o.uy)
    }
}

/// Closed halfplane `{z : <z, u> <= t}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Halfplane {
    pub u: UnitDirection,
    pub t: f64,
}

impl Halfplane {
    pub fn new(u: UnitDirection, t: f64) -> Result<Self> {
        if !t.is_finite() {
            return Err(Error::NonFinite("halfplane offset"));
        }
        Ok(Self { u, t })
    }

    /// The halfplane with outward normal `u` whose boundary passes through `x`.
    #[inline]
    pub fn through(x: Point, u: UnitDirection) -> Self {
        Self { u, t: u.dot(x) }
    }

    /// `<z, u> - t`; non-positive inside.
    #[inline]
    pub fn excess(&self, z: Point) -> f64 {
        self.u.dot(z) - self.t
    }

    #[inline]
    pub fn contains(&self, z: Point) -> bool {
        self.excess(z) <= 0.0
    }

    #[inline]
    pub fn contains_tol(&self, z: Point, tol: f64) -> bool {
        self.excess(z) <= tol
    }

    /// Image under `z -> z + c`.
    #[inline]
    pub fn translate(&self, c: Point) -> Self {
        Self {
            u: self.u,
            t: self.t + self.u.dot(c),
        }
    }

    /// The closure of the complement.
    #[inline]
    pub fn complement(&self) -> Self {
        Self {
            u: self.u.opposite(),
            t: -self.t,
        }
    }
}

/// Axis-aligned box used to bound halfplane intersections.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundingBox {
    pub min: Point,
    pub max: Point,
}

impl BoundingBox {
    pub fn new(min: Point, max: Point) -> Self {
        Self { min, max }
    }

    /// Smallest box containing `pts`; `None` when `pts` is empty.
    pub fn of_points(pts: &[Point]) -> Option<Self> {
        let first = *pts.first()?;
        let mut bb = Self::new(first, first);
        for p in &pts[1..] {
            bb.min.x = bb.min.x.min(p.x);
            bb.min.y = bb.min.y.min(p.y);
            bb.max.x = bb.max.x.max(p.x);
            bb.max.y = bb.max.y.max(p.y);
        }
        Some(bb)
    }

    pub fn inflate(self, margin: f64) -> Self {
        let m = Point::new(margin, margin);
        Self::new(self.min - m, self.max + m)
    }

    fn corners(&self) -> Vec<Point> {
        vec![
            self.min,
            Point::new(self.max.x, self.min.y),
            self.max,
            Point::new(self.min.x, self.max.y),
        ]
    }
}

/// A bounded convex polygon with counter-clockwise vertices.
///
/// Degenerate regions are allowed: one vertex is a point, two vertices a
/// segment. No two consecutive vertices are closer than [`EPS`] and no
/// vertex lies within [`EPS`] of the line through its neighbours.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ConvexRegion {
    vertices: Vec<Point>,
}

#[derive(Deserialize)]
struct RawRegion {
    vertices: Vec<Point>,
}

impl<'de> Deserialize<'de> for ConvexRegion {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawRegion::deserialize(d)?;
        if raw.vertices.iter().any(|p| !p.is_finite()) {
            return Err(serde::de::Error::custom("non-finite vertex"));
        }
        Ok(ConvexRegion::from_vertices(raw.vertices))
    }
}

impl ConvexRegion {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds a region from the vertices of a convex polygon given in
    /// either orientation; merges near-duplicates and drops collinear
    /// vertices.
    pub fn from_vertices(vertices: Vec<Point>) -> Self {
        Self {
            vertices: canonicalize(vertices),
        }
    }

    /// Regular `k`-gon inscribed in the circle of radius `radius` around
    /// `center`, first vertex at angle `phase`.
    pub fn regular_polygon(center: Point, radius: f64, k: usize, phase: f64) -> Self {
        let step = std::f64::consts::TAU / k as f64;
        let vs = (0..k)
            .map(|i| {
                let (s, c) = (phase + step * i as f64).sin_cos();
                center + Point::new(c, s) * radius
            })
            .collect();
        Self::from_vertices(vs)
    }

    /// Intersection with a closed halfplane.
    pub fn clip(&self, h: &Halfplane) -> ConvexRegion {
        let mut out = Vec::with_capacity(self.vertices.len() + 1);
        clip_polygon(&self.vertices, h, &mut out);
        ConvexRegion::from_vertices(out)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn area(&self) -> f64 {
        polygon_area(&self.vertices)
    }

    /// `max <v, u>` over the region, `-inf` when empty.
    pub fn support(&self, u: UnitDirection) -> f64 {
        self.vertices
            .iter()
            .map(|&v| u.dot(v))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Closed-set membership; points within [`EPS`] of the boundary count
    /// as inside.
    pub fn contains(&self, x: Point) -> bool {
        self.contains_tol(x, EPS)
    }

    pub fn contains_tol(&self, x: Point, tol: f64) -> bool {
        match self.vertices.len() {
            0 => false,
            1 => self.vertices[0].dist(x) <= tol,
            2 => segment_distance(x, self.vertices[0], self.vertices[1]) <= tol,
            n => {
                for i in 0..n {
                    let a = self.vertices[i];
                    let b = self.vertices[(i + 1) % n];
                    let e = b - a;
                    // signed distance to the edge line, positive inside
                    if e.cross(x - a) < -tol * e.norm() {
                        return false;
                    }
                }
                true
            }
        }
    }

    /// Euclidean distance from `x` to the region; zero inside.
    pub fn distance_to(&self, x: Point) -> Result<f64> {
        if self.is_empty() {
            return Err(Error::EmptyRegion);
        }
        Ok(self.distance_unchecked(x))
    }

    fn distance_unchecked(&self, x: Point) -> f64 {
        let vs = &self.vertices;
        match vs.len() {
            1 => vs[0].dist(x),
            2 => segment_distance(x, vs[0], vs[1]),
            n => {
                let mut inside = true;
                let mut best = f64::INFINITY;
                for i in 0..n {
                    let a = vs[i];
                    let b = vs[(i + 1) % n];
                    if (b - a).cross(x - a) < 0.0 {
                        inside = false;
                    }
                    best = best.min(segment_distance(x, a, b));
                }
                if inside {
                    0.0
                } else {
                    best
                }
            }
        }
    }

    /// Whether every vertex of `self` lies in `other` within `tol`.
    pub fn is_subset_of(&self, other: &ConvexRegion, tol: f64) -> bool {
        if self.is_empty() {
            return true;
        }
        self.vertices.iter().all(|&v| other.contains_tol(v, tol))
    }

    /// Each vertex with the normalized average of the outer normals of its
    /// two incident edges. Empty for degenerate regions.
    pub fn vertex_normals(&self) -> Vec<(Point, UnitDirection)> {
        let vs = &self.vertices;
        let n = vs.len();
        if n < 3 {
            return Vec::new();
        }
        let edge_normal = |a: Point, b: Point| {
            let e = b - a;
            Point::new(e.y, -e.x) * (1.0 / e.norm())
        };
        (0..n)
            .map(|i| {
                let prev = vs[(i + n - 1) % n];
                let next = vs[(i + 1) % n];
                let m = edge_normal(prev, vs[i]) + edge_normal(vs[i], next);
                let u = UnitDirection::new(m.x, m.y).expect("convex vertex has a proper normal cone");
                (vs[i], u)
            })
            .collect()
    }

    pub fn map(&self, f: impl Fn(Point) -> Point) -> Self {
        Self::from_vertices(self.vertices.iter().map(|&p| f(p)).collect())
    }

    pub fn bounding_box(&self) -> Option<BoundingBox> {
        BoundingBox::of_points(&self.vertices)
    }
}

/// Intersection of closed halfplanes, computed by successive convex clipping
/// of `clip`. The box must contain the true intersection whenever that is
/// bounded; otherwise the result is the intersection with the box.
pub fn intersect_halfplanes(hs: &[Halfplane], clip: BoundingBox) -> Result<ConvexRegion> {
    if hs.is_empty() {
        return Err(Error::NoHalfplanes);
    }
    if hs.iter().any(|h| !h.t.is_finite()) {
        return Err(Error::NonFinite("halfplane offset"));
    }
    let mut poly = clip.corners();
    let mut scratch = Vec::with_capacity(poly.len() + 4);
    for h in hs {
        clip_polygon(&poly, h, &mut scratch);
        std::mem::swap(&mut poly, &mut scratch);
        if poly.is_empty() {
            return Ok(ConvexRegion::empty());
        }
    }
    Ok(ConvexRegion::from_vertices(poly))
}

/// Sutherland-Hodgman step for a single halfplane.
fn clip_polygon(poly: &[Point], h: &Halfplane, out: &mut Vec<Point>) {
    out.clear();
    let n = poly.len();
    if n == 0 {
        return;
    }
    let mut prev = poly[n - 1];
    let mut sp = h.excess(prev);
    for &cur in poly {
        let sc = h.excess(cur);
        let prev_in = sp <= 0.0;
        let cur_in = sc <= 0.0;
        if cur_in {
            if !prev_in {
                out.push(crossing(prev, cur, sp, sc));
            }
            out.push(cur);
        } else if prev_in {
            out.push(crossing(prev, cur, sp, sc));
        }
        prev = cur;
        sp = sc;
    }
}

#[inline]
fn crossing(p: Point, q: Point, sp: f64, sq: f64) -> Point {
    let lam = sp / (sp - sq);
    p + (q - p) * lam
}

/// Hausdorff distance between two convex regions.
///
/// Point-to-convex-set distance is convex, so each directed supremum is
/// attained at a vertex.
pub fn hausdorff_distance(a: &ConvexRegion, b: &ConvexRegion) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyRegion);
    }
    Ok(directed_hausdorff(a, b).max(directed_hausdorff(b, a)))
}

/// `sup_{x in a} dist(x, b)` for non-empty regions.
pub fn directed_hausdorff(a: &ConvexRegion, b: &ConvexRegion) -> f64 {
    a.vertices
        .iter()
        .map(|&v| b.distance_unchecked(v))
        .fold(0.0, f64::max)
}

pub fn point_to_region_distance(x: Point, r: &ConvexRegion) -> Result<f64> {
    r.distance_to(x)
}

pub fn contains(r: &ConvexRegion, x: Point) -> bool {
    r.contains(x)
}

fn segment_distance(x: Point, a: Point, b: Point) -> f64 {
    let e = b - a;
    let len2 = e.dot(e);
    if len2 == 0.0 {
        return x.dist(a);
    }
    let lam = ((x - a).dot(e) / len2).clamp(0.0, 1.0);
    x.dist(a + e * lam)
}

fn polygon_area(vs: &[Point]) -> f64 {
    let n = vs.len();
    if n < 3 {
        return 0.0;
    }
    let mut s = 0.0;
    for i in 0..n {
        s += vs[i].cross(vs[(i + 1) % n]);
    }
    0.5 * s
}

fn canonicalize(mut vs: Vec<Point>) -> Vec<Point> {
    // merge near-duplicates, cyclically
    vs.dedup_by(|b, a| a.dist(*b) <= EPS);
    while vs.len() > 1 && vs[0].dist(vs[vs.len() - 1]) <= EPS {
        vs.pop();
    }
    if polygon_area(&vs) < 0.0 {
        vs.reverse();
    }
    // drop vertices that do not make a strict left turn
    let mut changed = true;
    while changed && vs.len() > 2 {
        changed = false;
        let mut i = 0;
        while i < vs.len() && vs.len() > 2 {
            let n = vs.len();
            let a = vs[(i + n - 1) % n];
            let b = vs[i];
            let c = vs[(i + 1) % n];
            let ac = c - a;
            let len = ac.norm();
            if len <= EPS || (b - a).cross(c - b) <= EPS * len {
                if len <= EPS {
                    // a and c coincide: b is a spike tip
                    vs.remove((i + 1) % n);
                } else {
                    vs.remove(i);
                }
                changed = true;
            } else {
                i += 1;
            }
        }
    }
    if vs.len() == 2 && vs[0].dist(vs[1]) <= EPS {
        vs.pop();
    }
    vs
}
