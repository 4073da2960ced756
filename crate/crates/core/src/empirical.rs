//! Weighted empirical measures: exact bivariate halfspace depth, exact and
//! direction-grid trimmed regions, and the halfplane deviation statistic.
//!
//! The trimmed region at level `alpha` is the intersection of all closed
//! halfplanes whose weighted mass exceeds `mean_weight - alpha`. For a fixed
//! outer normal `u` these halfplanes are nested in their offset, so only
//! the smallest qualifying offset matters, and that offset is always the
//! projection of a sample point. Between two consecutive pair-normal
//! directions the projection order does not change, so the binding sample
//! point is constant on each such arc.

use std::cmp::Ordering;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::distributions::PlanarModel;
use crate::error::{Error, Result};
use crate::geometry::{directed_hausdorff, intersect_halfplanes, BoundingBox, ConvexRegion, Halfplane, Point, UnitDirection, EPS};

/// Angular tolerance for grouping simultaneous sweep events.
const EVENT_TOL: f64 = 1e-13;

/// Default number of directions of the grid-mode region.
pub const DEFAULT_GRID_SIZE: usize = 2048;

/// Largest sample for which [`sup_deviation`] adds all pair-normal
/// directions to the uniform grid.
pub const DEVIATION_CRITICAL_CAP: usize = 200;

/// Points `X_1..X_n` with real weights `xi_1..xi_n`, representing the
/// measure `n^{-1} sum xi_i delta_{X_i}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightedSample {
    points: Vec<Point>,
    weights: Vec<f64>,
    #[serde(skip)]
    mean_weight: f64,
    #[serde(skip)]
    signed: bool,
    #[serde(skip)]
    unit_weights: bool,
}

impl WeightedSample {
    pub fn new(points: Vec<Point>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("sample must contain at least one point".into()));
        }
        if points.len() != weights.len() {
            return Err(Error::InvalidArgument(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("sample point"));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite("weight"));
        }
        let mean_weight = weights.iter().sum::<f64>() / weights.len() as f64;
        let signed = weights.iter().any(|&w| w < 0.0);
        let unit_weights = weights.iter().all(|&w| w == 1.0);
        Ok(Self {
            points,
            weights,
            mean_weight,
            signed,
            unit_weights,
        })
    }

    /// All weights equal to one.
    pub fn unweighted(points: Vec<Point>) -> Result<Self> {
        let w = vec![1.0; points.len()];
        Self::new(points, w)
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// The total mass `n^{-1} sum xi_i`.
    pub fn mean_weight(&self) -> f64 {
        self.mean_weight
    }

    pub fn has_negative_weights(&self) -> bool {
        self.signed
    }

    pub fn bounding_box(&self) -> BoundingBox {
        BoundingBox::of_points(&self.points).expect("sample is non-empty")
    }

    /// Applies `f` to every point, keeping the weights.
    pub fn map_points(&self, f: impl Fn(Point) -> Point) -> Self {
        Self {
            points: self.points.iter().map(|&p| f(p)).collect(),
            weights: self.weights.clone(),
            ..self.clone()
        }
    }

    /// Reads a CSV file with header `x,y,w`.
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
        let headers = rdr.headers().map_err(|e| Error::csv(path, e))?.clone();
        if headers.iter().collect::<Vec<_>>() != ["x", "y", "w"] {
            return Err(Error::InvalidArgument(format!(
                "{}: expected header `x,y,w`",
                path.display()
            )));
        }
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for row in rdr.deserialize::<SampleRow>() {
            let row = row.map_err(|e| Error::csv(path, e))?;
            points.push(Point::new(row.x, row.y));
            weights.push(row.w);
        }
        Self::new(points, weights)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
        for (p, &wt) in self.points.iter().zip(&self.weights) {
            w.serialize(SampleRow { x: p.x, y: p.y, w: wt })
                .map_err(|e| Error::csv(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

#[derive(Serialize, Deserialize)]
struct SampleRow {
    x: f64,
    y: f64,
    w: f64,
}

/// `n^{-1} sum xi_i 1{X_i in h}`, with points within [`EPS`] of the
/// boundary counted inside.
pub fn emp_mass(s: &WeightedSample, h: &Halfplane) -> f64 {
    let sum: f64 = s
        .points
        .iter()
        .zip(&s.weights)
        .filter(|(&p, _)| h.contains_tol(p, EPS))
        .map(|(_, &w)| w)
        .sum();
    sum / s.n() as f64
}

/// Exact halfspace depth of `x` with respect to a nonnegatively weighted
/// sample, by an angular sweep in `O(n log n)`.
pub fn emp_depth(s: &WeightedSample, x: Point) -> Result<f64> {
    if s.has_negative_weights() {
        return Err(Error::NegativeWeights);
    }
    let mut at_x = 0.0;
    let mut dirs: Vec<(f64, f64)> = Vec::with_capacity(s.n());
    for (&p, &w) in s.points.iter().zip(&s.weights) {
        let d = p - x;
        if d.norm() <= EPS {
            at_x += w;
        } else {
            dirs.push((d.y.atan2(d.x).rem_euclid(TAU), w));
        }
    }
    let n = s.n() as f64;
    if dirs.is_empty() {
        return Ok(at_x / n);
    }
    dirs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let m = dirs.len();
    // doubled angle list with prefix sums for cyclic windows
    let mut ang = Vec::with_capacity(2 * m);
    let mut prefix = Vec::with_capacity(2 * m + 1);
    prefix.push(0.0);
    for k in 0..2 * m {
        let (a, w) = dirs[k % m];
        ang.push(if k < m { a } else { a + TAU });
        prefix.push(prefix[k] + w);
    }

    // A closed halfplane through x is a closed half-circle of directions.
    // Its content only changes where a sample direction enters or leaves,
    // and at such an event it is the union of the contents on both sides,
    // so the minimum is attained on the open arcs between events.
    let mut events: Vec<f64> = dirs
        .iter()
        .flat_map(|&(a, _)| [(a + PI / 2.0).rem_euclid(TAU), (a - PI / 2.0).rem_euclid(TAU)])
        .collect();
    events.sort_by(f64::total_cmp);
    events.dedup_by(|b, a| *b - *a <= 1e-13);
    if events.len() > 1 && events[0] + TAU - events[events.len() - 1] <= 1e-13 {
        events.pop();
    }

    let mut best = f64::INFINITY;
    for i in 0..events.len() {
        let lo = events[i];
        let hi = if i + 1 < events.len() {
            events[i + 1]
        } else {
            events[0] + TAU
        };
        let centre = 0.5 * (lo + hi);
        // open window (centre - pi/2, centre + pi/2), brought into [0, 2 pi)
        let start = (centre - PI / 2.0).rem_euclid(TAU);
        let first = ang.partition_point(|&a| a <= start);
        let last = ang.partition_point(|&a| a < start + PI);
        best = best.min(prefix[last] - prefix[first]);
    }
    Ok((at_x + best) / n)
}

/// Unit normals of every line through two distinct sample points, both
/// orientations, sorted by angle in `[0, 2 pi)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CriticalDirections(Vec<UnitDirection>);

impl CriticalDirections {
    pub fn directions(&self) -> &[UnitDirection] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub fn critical_directions(s: &WeightedSample) -> Result<CriticalDirections> {
    let pts = &s.points;
    let mut angles = Vec::new();
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let d = pts[j] - pts[i];
            if d.norm() <= EPS {
                continue;
            }
            let a = (-d.x).atan2(d.y).rem_euclid(TAU);
            angles.push(a);
            angles.push((a + PI).rem_euclid(TAU));
        }
    }
    if angles.is_empty() {
        return Err(Error::DegenerateSample("all points coincide"));
    }
    angles.sort_by(f64::total_cmp);
    let mut dirs: Vec<UnitDirection> = Vec::with_capacity(angles.len());
    for a in angles {
        let u = UnitDirection::from_angle(a);
        if dirs.last().is_none_or(|v| v.distance(u) > EPS) {
            dirs.push(u);
        }
    }
    if dirs.len() > 1 && dirs[0].distance(dirs[dirs.len() - 1]) <= EPS {
        dirs.pop();
    }
    Ok(CriticalDirections(dirs))
}

/// Checks the level and returns the unnormalized threshold
/// `sum xi_i - n alpha`; halfplanes qualify when their raw weight sum
/// strictly exceeds it.
fn raw_threshold(s: &WeightedSample, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidAlpha {
            alpha,
            range: "(0, inf)",
        });
    }
    let n = s.n() as f64;
    let thr = s.weights.iter().sum::<f64>() - alpha * n;
    // integer thresholds must stay exact for the strict comparison
    let r = thr.round();
    if (thr - r).abs() <= 1e-9 * r.abs().max(1.0) {
        Ok(r)
    } else {
        Ok(thr)
    }
}

/// Exact empirical depth trimmed region at level `alpha`.
///
/// Computed by a rotational sweep over the pair-normal directions; exact
/// for signed weights as well. Cost is `O(n^2 log n)` time and `O(n^2)`
/// memory, practical up to a few thousand points.
pub fn emp_region(s: &WeightedSample, alpha: f64) -> Result<ConvexRegion> {
    let thr = raw_threshold(s, alpha)?;
    if thr < 0.0 {
        // the empty halfplane qualifies
        return Ok(ConvexRegion::empty());
    }
    let hs = RegionSweep::new(s, thr).run();
    let clip = s.bounding_box().inflate(1.0);
    intersect_halfplanes(&hs, clip)
}

/// Outer approximation of [`emp_region`] using `k` equally spaced outer
/// normals. Contains the exact region; see [`grid_error_bound`] for a
/// certified distance between the two.
pub fn emp_region_grid(s: &WeightedSample, alpha: f64, k: usize) -> Result<ConvexRegion> {
    check_grid_size(k)?;
    let thr = raw_threshold(s, alpha)?;
    if thr < 0.0 {
        return Ok(ConvexRegion::empty());
    }
    let hs: Vec<Halfplane> = grid_offsets(s, thr, k)
        .into_iter()
        .map(|(u, t)| Halfplane { u, t: t + EPS })
        .collect();
    intersect_halfplanes(&hs, s.bounding_box().inflate(1.0))
}

/// Certified upper bound on the Hausdorff distance between
/// [`emp_region_grid`] and [`emp_region`], for nonnegative weights.
///
/// The tightest qualifying offset is Lipschitz in the direction, with
/// constant the sample radius `L` about the bounding-box centre. Shifting
/// every grid constraint inward by the resulting slack gives a polygon
/// inside the exact region, and the bound is the distance from the grid
/// region to that inner polygon. Infinite for signed weights or when the
/// inner polygon is empty.
pub fn grid_error_bound(s: &WeightedSample, alpha: f64, k: usize) -> Result<f64> {
    emp_region_grid_with_bound(s, alpha, k).map(|(_, bound)| bound)
}

/// [`emp_region_grid`] together with [`grid_error_bound`], sharing the
/// offset computation.
pub fn emp_region_grid_with_bound(s: &WeightedSample, alpha: f64, k: usize) -> Result<(ConvexRegion, f64)> {
    check_grid_size(k)?;
    let thr = raw_threshold(s, alpha)?;
    if thr < 0.0 {
        return Ok((ConvexRegion::empty(), 0.0));
    }
    let offsets = grid_offsets(s, thr, k);
    let clip = s.bounding_box().inflate(1.0);
    let build = |shift: f64| {
        let hs: Vec<Halfplane> = offsets.iter().map(|&(u, t)| Halfplane { u, t: t + shift }).collect();
        intersect_halfplanes(&hs, clip)
    };
    let outer = build(EPS)?;
    if s.has_negative_weights() {
        return Ok((outer, f64::INFINITY));
    }
    if outer.is_empty() {
        return Ok((outer, 0.0));
    }
    let (_, lip) = lipschitz_centre(s);
    let step = PI / k as f64;
    let slack = 2.0 * (0.5 * step).sin() * lip * (1.0 + 1.0 / step.cos()) * (1.0 + 1e-9) + EPS;
    let inner = build(-slack)?;
    if inner.is_empty() {
        return Ok((outer, f64::INFINITY));
    }
    let bound = directed_hausdorff(&outer, &inner) + EPS;
    Ok((outer, bound))
}

fn check_grid_size(k: usize) -> Result<()> {
    if k < 3 {
        return Err(Error::InvalidArgument(format!("grid size {k} below 3")));
    }
    Ok(())
}

/// Tightest qualifying offset (without the outward nudge) for each of `k`
/// equally spaced directions, the first along the x axis.
fn grid_offsets(s: &WeightedSample, thr: f64, k: usize) -> Vec<(UnitDirection, f64)> {
    let mut scratch = OffsetScratch::default();
    (0..k)
        .map(|j| {
            let u = UnitDirection::from_angle(TAU * j as f64 / k as f64);
            (u, scratch.offset(s, thr, u))
        })
        .collect()
}

#[derive(Default)]
struct OffsetScratch {
    proj: Vec<f64>,
    pairs: Vec<(f64, f64)>,
}

impl OffsetScratch {
    /// Smallest sample projection `t` with closed mass of `<u, x> <= t`
    /// above `thr`.
    fn offset(&mut self, s: &WeightedSample, thr: f64, u: UnitDirection) -> f64 {
        if s.unit_weights {
            self.proj.clear();
            self.proj.extend(s.points.iter().map(|&x| u.dot(x)));
            // smallest count c with c > thr
            let c = (thr.floor() as usize + 1).min(s.n());
            let (_, v, _) = self.proj.select_nth_unstable_by(c - 1, f64::total_cmp);
            *v
        } else {
            self.pairs.clear();
            self.pairs.extend(s.points.iter().zip(&s.weights).map(|(&x, &w)| (u.dot(x), w)));
            if s.has_negative_weights() {
                first_crossing_sorted(&mut self.pairs, thr)
            } else {
                weighted_select(&mut self.pairs, thr)
            }
        }
    }
}

/// Bounding-box centre and the largest distance from it to a sample point.
fn lipschitz_centre(s: &WeightedSample) -> (Point, f64) {
    let b = s.bounding_box();
    let c = (b.min + b.max) * 0.5;
    let lip = s.points.iter().map(|p| p.dist(c)).fold(0.0, f64::max);
    (c, lip)
}

/// Grid size used to seed [`emp_region_cutting_plane`]: finer grids cost
/// more up front but narrow the witness search at each vertex.
fn cutting_seed_grid(n: usize) -> usize {
    ((n as f64).sqrt() as usize).next_power_of_two().clamp(64, 1024)
}
/// Witness directions tried per vertex before it counts as on the boundary.
const MAX_WITNESS_TRIES: usize = 16;

/// Exact empirical region for nonnegative weights by cutting planes,
/// practical up to millions of points.
///
/// Starts from the grid region and repeatedly checks each vertex: a vertex
/// lies outside the exact region iff some open halfplane containing it has
/// mass below the level, and by the Lipschitz property of the offsets only
/// directions near nearly tight grid constraints can witness that. A
/// witness yields a new exact constraint; a vertex without one is in the
/// region. Stops when every vertex is certified, at which point the
/// polygon equals the region up to the `1e-12` outward nudges.
pub fn emp_region_cutting_plane(s: &WeightedSample, alpha: f64) -> Result<ConvexRegion> {
    if s.has_negative_weights() {
        return Err(Error::NegativeWeights);
    }
    let thr = raw_threshold(s, alpha)?;
    if thr < 0.0 {
        return Ok(ConvexRegion::empty());
    }
    let k = cutting_seed_grid(s.n());
    let grid = grid_offsets(s, thr, k);
    let hs: Vec<Halfplane> = grid.iter().map(|&(u, t)| Halfplane { u, t: t + EPS }).collect();
    let mut poly = intersect_halfplanes(&hs, s.bounding_box().inflate(1.0))?;
    let (centre, lip) = lipschitz_centre(s);
    let chord = 2.0 * (0.5 * PI / k as f64).sin() * (1.0 + 1e-9);
    let key = |p: Point| (p.x.to_bits(), p.y.to_bits());
    let mut certified = std::collections::HashSet::new();
    let mut scratch = OffsetScratch::default();
    let mut events: Vec<(f64, f64)> = Vec::new();
    let mut candidates = Vec::new();
    loop {
        let Some(&v) = poly.vertices().iter().find(|&&v| !certified.contains(&key(v))) else {
            break;
        };
        // directions whose nearest grid constraint is nearly tight at v
        let reach = chord * (v.dist(centre) + lip) + EPS;
        let near: Vec<bool> = grid.iter().map(|&(u, t)| u.dot(v) - t > -reach).collect();
        candidates.clear();
        for (a, b) in direction_arcs(&near) {
            open_mass_witnesses(s, thr, v, a, b, &mut events, &mut candidates);
        }
        // most violated first: largest open mass, then widest arc
        candidates.sort_by(|p, q| q.0.total_cmp(&p.0).then(q.1.total_cmp(&p.1)));
        let mut cut = false;
        for &(_, _, angle) in candidates.iter().take(MAX_WITNESS_TRIES) {
            let u = UnitDirection::from_angle(angle);
            let t = scratch.offset(s, thr, u);
            if t + EPS < u.dot(v) {
                let hs = pivot_cuts(s, u, t);
                // violations within the nudge of the pivoted cuts are ignored
                if hs.iter().any(|h| h.excess(v) > EPS) {
                    for h in &hs {
                        poly = poly.clip(h);
                    }
                    cut = true;
                }
                break;
            }
        }
        if !cut {
            certified.insert(key(v));
        }
        if poly.is_empty() {
            break;
        }
    }
    Ok(poly)
}

/// The line `<u, x> = t` passes through a sample point `p`. Rotating it
/// about `p` keeps the closed mass unchanged until it meets another sample
/// point, so every halfplane in that range qualifies, and the two extreme
/// ones (lines through pairs of sample points) cut at least as deep as the
/// original. Using them instead of `u` itself makes the cuts come from a
/// finite family.
fn pivot_cuts(s: &WeightedSample, u: UnitDirection, t: f64) -> [Halfplane; 2] {
    let p = s
        .points
        .iter()
        .copied()
        .find(|&x| u.dot(x) == t)
        .expect("offset is a sample projection");
    let theta = u.angle();
    let w = u.perp();
    let cap = 3.0 * FRAC_PI_4 / 2.0;
    let (mut up, mut down) = (cap, cap);
    for &x in &s.points {
        let d = x - p;
        // the line through p meets x after rotating by atan2(-a, b) mod pi
        let (a, b) = (u.dot(d), w.dot(d));
        let reach = up.max(down).sin() * d.norm();
        if a.abs() >= reach || (d.x == 0.0 && d.y == 0.0) {
            continue;
        }
        let delta = (-a).atan2(b).rem_euclid(PI);
        up = up.min(delta);
        down = down.min(if delta == 0.0 { 0.0 } else { PI - delta });
    }
    [theta + up, theta - down].map(|a| {
        let w = UnitDirection::from_angle(a);
        Halfplane { u: w, t: w.dot(p) + EPS }
    })
}

/// Maximal runs of flagged grid directions (spacing `2 pi / k`) widened by
/// half a step on each side, as angle intervals `[a, b]` of width below
/// `pi / 2`.
fn direction_arcs(flags: &[bool]) -> Vec<(f64, f64)> {
    let k = flags.len();
    let step = TAU / k as f64;
    let mut arcs = Vec::new();
    if flags.iter().all(|&f| f) {
        arcs.push((0.0, TAU));
    } else {
        // start just after an unflagged direction so runs do not wrap
        let first = (0..k).find(|&j| !flags[j]).unwrap_or(0);
        let mut j = 0;
        while j < k {
            let idx = (first + j) % k;
            if !flags[idx] {
                j += 1;
                continue;
            }
            let run_start = first + j;
            while j < k && flags[(first + j) % k] {
                j += 1;
            }
            let run_end = first + j - 1;
            arcs.push(((run_start as f64 - 0.5) * step, (run_end as f64 + 0.5) * step));
        }
    }
    let mut out = Vec::new();
    for (a, b) in arcs {
        let pieces = ((b - a) / FRAC_PI_4).ceil().max(1.0) as usize;
        let w = (b - a) / pieces as f64;
        for p in 0..pieces {
            out.push((a + p as f64 * w, a + (p + 1) as f64 * w));
        }
    }
    out
}

/// Collects the arcs of normals `u(theta)`, `theta` in `[a, b]` with
/// `b - a < pi`, whose open halfplane `<u, x> < <u, v>` carries weight above
/// `thr`, as `(weight, arc width, mid angle)`.
fn open_mass_witnesses(
    s: &WeightedSample,
    thr: f64,
    v: Point,
    a: f64,
    b: f64,
    events: &mut Vec<(f64, f64)>,
    out: &mut Vec<(f64, f64, f64)>,
) {
    let ua = UnitDirection::from_angle(a);
    let ub = UnitDirection::from_angle(b);
    let half = 0.5 * (b - a);
    let mut base = 0.0;
    events.clear();
    for (&x, &w) in s.points.iter().zip(&s.weights) {
        if w == 0.0 {
            continue;
        }
        let d = x - v;
        let fa = ua.dot(d);
        let fb = ub.dot(d);
        if fa < 0.0 && fb < 0.0 {
            base += w;
        } else if fa > 0.0 && fb > 0.0 || d.x == 0.0 && d.y == 0.0 {
            // never strictly below; the sign pattern at the ends rules out
            // a double crossing on an arc shorter than pi
        } else {
            // one zero of <u(theta), d> in [a, b]: theta = phi +- pi/2
            let phi = d.y.atan2(d.x);
            let m = 0.5 * (a + b);
            let mut z = phi + FRAC_PI_2;
            z -= TAU * ((z - m) / TAU).round();
            if (z - m).abs() > half + 1e-12 {
                z -= PI * (z - m).signum();
                z -= TAU * ((z - m) / TAU).round();
            }
            let z = z.clamp(a, b);
            // below before the zero when the derivative there is positive
            let deriv = UnitDirection::from_angle(z).perp().dot(d);
            let signed_w = if deriv > 0.0 { w } else { -w };
            if deriv > 0.0 {
                base += w;
            }
            events.push((z, signed_w));
        }
    }
    events.sort_by(|p, q| p.0.total_cmp(&q.0));
    // sweep open arcs between consecutive distinct event angles
    let mut acc = base;
    let mut prev = a;
    let mut i = 0;
    loop {
        let next = if i < events.len() { events[i].0 } else { b };
        if next > prev && acc > thr {
            out.push((acc, next - prev, 0.5 * (prev + next)));
        }
        if i == events.len() {
            return;
        }
        let z = events[i].0;
        while i < events.len() && events[i].0 == z {
            acc -= events[i].1;
            i += 1;
        }
        prev = z;
    }
}

/// Smallest projection whose cumulative weight (ties grouped) exceeds `thr`.
fn first_crossing_sorted(pairs: &mut [(f64, f64)], thr: f64) -> f64 {
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut acc = 0.0;
    let mut i = 0;
    while i < pairs.len() {
        let p = pairs[i].0;
        while i < pairs.len() && pairs[i].0 == p {
            acc += pairs[i].1;
            i += 1;
        }
        if acc > thr {
            return p;
        }
    }
    pairs.last().map(|q| q.0).unwrap_or(f64::NAN)
}

/// Weighted quickselect for nonnegative weights: the smallest value `v`
/// with `sum_{x <= v} w > thr`.
fn weighted_select(pairs: &mut [(f64, f64)], mut thr: f64) -> f64 {
    let mut lo = 0;
    let mut hi = pairs.len();
    loop {
        if hi - lo <= 32 {
            return first_crossing_sorted(&mut pairs[lo..hi], thr);
        }
        let mid = lo + (hi - lo) / 2;
        pairs[lo..hi].select_nth_unstable_by(mid - lo, |a, b| a.0.total_cmp(&b.0));
        let pivot = pairs[mid].0;
        // everything in lo..mid is <= pivot
        let below: f64 = pairs[lo..mid].iter().map(|q| q.1).sum();
        if below > thr {
            // the answer is in lo..mid unless ties with the pivot matter
            hi = mid;
            continue;
        }
        // include all entries equal to the pivot
        let mut at = 0.0;
        let mut k = mid;
        for q in mid..hi {
            if pairs[q].0 == pivot {
                pairs.swap(q, k);
                at += pairs[k].1;
                k += 1;
            }
        }
        if below + at > thr {
            return pivot;
        }
        thr -= below + at;
        lo = k;
    }
}

/// The binding sample point per arc of outer normals, tracked while the
/// projection order rotates through half a turn. Each direction `theta`
/// also yields the opposite normal `theta + pi`, whose order is reversed.
struct RegionSweep<'a> {
    pts: &'a [Point],
    w: &'a [f64],
    thr: f64,
    total: f64,
    order: Vec<usize>,
    pos: Vec<usize>,
    tree: PrefixTree,
    out: Vec<Halfplane>,
}

impl<'a> RegionSweep<'a> {
    fn new(s: &'a WeightedSample, thr: f64) -> Self {
        let n = s.n();
        Self {
            pts: &s.points,
            w: &s.weights,
            thr,
            total: s.weights.iter().sum(),
            order: (0..n).collect(),
            pos: vec![0; n],
            tree: PrefixTree::new(n),
            out: Vec::new(),
        }
    }

    fn run(mut self) -> Vec<Halfplane> {
        let n = self.pts.len();
        // (angle in [0, pi), i, j): at `angle` the projections of i and j tie
        let mut events: Vec<(f64, u32, u32)> = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                let d = self.pts[j] - self.pts[i];
                if d.norm() <= EPS {
                    continue;
                }
                let a = (-d.x).atan2(d.y).rem_euclid(PI);
                events.push((if a >= PI { 0.0 } else { a }, i as u32, j as u32));
            }
        }
        events.sort_by(|a, b| a.0.total_cmp(&b.0));

        // forced breakpoints keep every constant-k arc shorter than pi/4
        let start = start_angle(&events);
        let mut breaks: Vec<f64> = (1..4).map(|q| start + q as f64 * FRAC_PI_4).collect();
        breaks.push(start + PI);

        // initial order just after `start`
        let u0 = UnitDirection::from_angle(start);
        let keys: Vec<f64> = self.pts.iter().map(|&p| u0.dot(p)).collect();
        self.order.sort_by(|&a, &b| keys[a].total_cmp(&keys[b]));
        self.rebuild();
        let (mut kf, mut kb) = self.binding();
        self.emit(start, kf, kb);

        // walk the events cyclically from `start`
        let first = events.partition_point(|e| e.0 <= start);
        let unwrapped = events[first..]
            .iter()
            .map(|&(a, i, j)| (a, i, j))
            .chain(events[..first].iter().map(|&(a, i, j)| (a + PI, i, j)));
        let mut group: Vec<(u32, u32)> = Vec::new();
        let mut group_angle = f64::NAN;
        let mut bi = 0;
        let mut it = unwrapped.peekable();
        loop {
            let next_angle = it.peek().map(|e| e.0);
            // flush the pending group when the next event is separate
            if !group.is_empty() && next_angle.is_none_or(|a| a - group_angle > EVENT_TOL) {
                while bi < breaks.len() - 1 && breaks[bi] < group_angle {
                    self.emit(breaks[bi], kf, kb);
                    bi += 1;
                }
                self.apply_group(group_angle, &group);
                let (nf, nb) = self.binding();
                if nf != kf || nb != kb {
                    // close the old arc and open the new one at this angle
                    self.emit(group_angle, kf, kb);
                    self.emit(group_angle, nf, nb);
                    kf = nf;
                    kb = nb;
                }
                group.clear();
            }
            match it.next() {
                Some((a, i, j)) => {
                    if group.is_empty() {
                        group_angle = a;
                    }
                    group.push((i, j));
                }
                None => break,
            }
        }
        for &b in &breaks[bi..] {
            self.emit(b, kf, kb);
        }
        self.out
    }

    /// Sample indices binding the outer normals `theta` and `theta + pi`.
    fn binding(&self) -> (usize, usize) {
        let f = self
            .tree
            .first_greater(self.thr)
            .expect("total weight exceeds the threshold");
        // largest start position i whose suffix weight exceeds thr,
        // i.e. the largest m = i - 1 with prefix(m) < total - thr
        let b = match self.tree.last_less(self.total - self.thr) {
            Some(m) => m + 1,
            None => 0,
        };
        (self.order[f], self.order[b.min(self.order.len() - 1)])
    }

    fn emit(&mut self, theta: f64, kf: usize, kb: usize) {
        let u = UnitDirection::from_angle(theta);
        self.out.push(Halfplane {
            u,
            t: u.dot(self.pts[kf]) + EPS,
        });
        let v = u.opposite();
        self.out.push(Halfplane {
            u: v,
            t: v.dot(self.pts[kb]) + EPS,
        });
    }

    /// Reorders every block of simultaneously tied points to the order
    /// valid just after `theta`.
    fn apply_group(&mut self, theta: f64, pairs: &[(u32, u32)]) {
        // union-find over positions touched by this group
        let mut comps: Vec<(usize, usize)> = pairs
            .iter()
            .map(|&(i, j)| {
                let (a, b) = (self.pos[i as usize], self.pos[j as usize]);
                (a.min(b), a.max(b))
            })
            .collect();
        comps.sort_unstable();
        let mut blocks: Vec<(usize, usize)> = Vec::new();
        for (lo, hi) in comps {
            match blocks.last_mut() {
                Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
                _ => blocks.push((lo, hi)),
            }
        }
        // after theta tied points are ordered by the derivative of their
        // projection, i.e. by the projection onto the rotated normal
        let du = UnitDirection::from_angle(theta).perp();
        for (lo, hi) in blocks {
            let pts = self.pts;
            self.order[lo..=hi].sort_by(|&a, &b| du.dot(pts[a]).total_cmp(&du.dot(pts[b])));
            let mut acc = if lo == 0 { 0.0 } else { self.tree.get(lo - 1) };
            for p in lo..=hi {
                let k = self.order[p];
                self.pos[k] = p;
                acc += self.w[k];
                self.tree.set(p, acc);
            }
        }
    }

    fn rebuild(&mut self) {
        let mut acc = 0.0;
        for (p, &k) in self.order.iter().enumerate() {
            self.pos[k] = p;
            acc += self.w[k];
            self.tree.set(p, acc);
        }
    }
}

/// An angle in `[0, pi)` in the middle of the widest gap between events.
fn start_angle(events: &[(f64, u32, u32)]) -> f64 {
    if events.is_empty() {
        return 0.0;
    }
    let mut best = (events[0].0 + PI - events[events.len() - 1].0, events[events.len() - 1].0);
    for w in events.windows(2) {
        let gap = w[1].0 - w[0].0;
        if gap > best.0 {
            best = (gap, w[0].0);
        }
    }
    (best.1 + 0.5 * best.0).rem_euclid(PI)
}

/// Segment tree over prefix sums with min and max per node.
struct PrefixTree {
    size: usize,
    n: usize,
    min: Vec<f64>,
    max: Vec<f64>,
    leaf: Vec<f64>,
}

impl PrefixTree {
    fn new(n: usize) -> Self {
        let size = n.next_power_of_two().max(1);
        Self {
            size,
            n,
            min: vec![f64::INFINITY; 2 * size],
            max: vec![f64::NEG_INFINITY; 2 * size],
            leaf: vec![0.0; n],
        }
    }

    fn get(&self, i: usize) -> f64 {
        self.leaf[i]
    }

    fn set(&mut self, i: usize, v: f64) {
        self.leaf[i] = v;
        let mut k = i + self.size;
        self.min[k] = v;
        self.max[k] = v;
        while k > 1 {
            k /= 2;
            self.min[k] = self.min[2 * k].min(self.min[2 * k + 1]);
            self.max[k] = self.max[2 * k].max(self.max[2 * k + 1]);
        }
    }

    fn first_greater(&self, c: f64) -> Option<usize> {
        if !(self.max[1] > c) {
            return None;
        }
        let mut k = 1;
        while k < self.size {
            k = if self.max[2 * k] > c { 2 * k } else { 2 * k + 1 };
        }
        let i = k - self.size;
        (i < self.n).then_some(i)
    }

    fn last_less(&self, c: f64) -> Option<usize> {
        if !(self.min[1] < c) {
            return None;
        }
        let mut k = 1;
        while k < self.size {
            k = if self.min[2 * k + 1] < c { 2 * k + 1 } else { 2 * k };
        }
        let i = k - self.size;
        (i < self.n).then_some(i)
    }
}

/// Largest halfplane deviation found, with the halfplane attaining it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Deviation {
    pub value: f64,
    pub direction: UnitDirection,
    pub offset: f64,
}

/// One-dimensional Kolmogorov-Smirnov distance between the projections of
/// the sample and of `model` onto `u`, both one-sided limits checked at
/// every sample projection.
pub fn direction_deviation(s: &WeightedSample, model: &PlanarModel, u: UnitDirection) -> Deviation {
    let n = s.n() as f64;
    let mut pairs: Vec<(f64, f64)> = s
        .points
        .iter()
        .zip(&s.weights)
        .map(|(&x, &w)| (u.dot(x), w))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mass = |t: f64| model.halfspace_mass(&Halfplane { u, t });
    // the whole plane: sample mass mean_weight vs 1
    let mut best = Deviation {
        value: (s.mean_weight - 1.0).abs(),
        direction: u,
        offset: f64::INFINITY,
    };
    let mut acc = 0.0;
    let mut i = 0;
    while i < pairs.len() {
        let t = pairs[i].0;
        let before = acc / n;
        while i < pairs.len() && pairs[i].0 <= t + EPS {
            acc += pairs[i].1;
            i += 1;
        }
        let m = mass(t);
        let dev = (before - m).abs().max((acc / n - m).abs());
        if dev > best.value {
            best = Deviation {
                value: dev,
                direction: u,
                offset: t,
            };
        }
    }
    best
}

/// Certified lower bound on `sup_H |mu_n(H) - mu(H)|` over closed
/// halfplanes: the exact supremum over offsets, for every direction of a
/// uniform grid of `extra_dirs` angles and, for samples of at most
/// [`DEVIATION_CRITICAL_CAP`] points, every pair-normal direction.
pub fn sup_deviation(s: &WeightedSample, model: &PlanarModel, extra_dirs: usize) -> Deviation {
    let mut dirs: Vec<UnitDirection> = (0..extra_dirs)
        .map(|j| UnitDirection::from_angle(TAU * j as f64 / extra_dirs as f64))
        .collect();
    if s.n() <= DEVIATION_CRITICAL_CAP {
        if let Ok(c) = critical_directions(s) {
            dirs.extend_from_slice(c.directions());
        }
    }
    if dirs.is_empty() {
        dirs.push(UnitDirection::E1);
    }
    dirs.iter()
        .map(|&u| direction_deviation(s, model, u))
        .max_by(|a, b| a.value.partial_cmp(&b.value).unwrap_or(Ordering::Equal))
        .expect("at least one direction")
}
