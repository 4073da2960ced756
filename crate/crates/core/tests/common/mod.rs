//! Independent brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::{PI, TAU};

use depth_regions::empirical::WeightedSample;
use depth_regions::geometry::{ConvexRegion, Halfplane, Point, UnitDirection};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Raw (unnormalized) closed-halfplane weight with a small boundary slack.
pub fn raw_mass(s: &WeightedSample, h: &Halfplane, slack: f64) -> f64 {
    s.points()
        .iter()
        .zip(s.weights())
        .filter(|(&p, _)| h.excess(p) <= slack)
        .map(|(_, &w)| w)
        .sum()
}

/// Depth by enumerating closed halfplanes through `x`: a uniform grid of
/// `k` normals plus, for every sample point, normals perpendicular to the
/// line through `x` and that point rotated by a tiny angle either way.
pub fn brute_emp_depth(s: &WeightedSample, x: Point, k: usize) -> f64 {
    let mut dirs: Vec<UnitDirection> = (0..k)
        .map(|j| UnitDirection::from_angle(TAU * j as f64 / k as f64))
        .collect();
    for &p in s.points() {
        let d = p - x;
        if d.norm() < 1e-12 {
            continue;
        }
        let a = d.y.atan2(d.x) + PI / 2.0;
        for da in [-1e-7, 1e-7, PI - 1e-7, PI + 1e-7] {
            dirs.push(UnitDirection::from_angle(a + da));
        }
    }
    let n = s.n() as f64;
    dirs.iter()
        .map(|&u| raw_mass(s, &Halfplane::through(x, u), 1e-12))
        .fold(f64::INFINITY, f64::min)
        / n
}

/// Raw threshold `sum xi - n alpha`, snapped to an integer when within
/// rounding of one.
pub fn raw_threshold(s: &WeightedSample, alpha: f64) -> f64 {
    let n = s.n() as f64;
    let thr = s.weights().iter().sum::<f64>() - alpha * n;
    let r = thr.round();
    if (thr - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r
    } else {
        thr
    }
}

/// All qualifying halfplanes whose boundary passes through two sample
/// points, both orientations.
pub fn pair_supported_qualifying(s: &WeightedSample, alpha: f64) -> Vec<Halfplane> {
    let thr = raw_threshold(s, alpha);
    let pts = s.points();
    let mut out = Vec::new();
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let d = pts[j] - pts[i];
            if d.norm() < 1e-12 {
                continue;
            }
            let u = UnitDirection::new(-d.y, d.x).unwrap();
            for v in [u, u.opposite()] {
                let h = Halfplane::through(pts[i], v);
                if raw_mass(s, &h, 1e-10) > thr {
                    out.push(h);
                }
            }
        }
    }
    out
}

/// Region constraints from a full per-direction scan: for each pair-normal
/// direction and its tiny rotations, the smallest offset at a sample
/// projection whose closed mass exceeds the threshold.
pub fn scanned_constraints(s: &WeightedSample, alpha: f64) -> Vec<Halfplane> {
    let thr = raw_threshold(s, alpha);
    let pts = s.points();
    let mut dirs = Vec::new();
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let d = pts[j] - pts[i];
            if d.norm() < 1e-12 {
                continue;
            }
            let a = d.x.atan2(-d.y);
            for base in [a, a + PI] {
                for da in [-1e-7, 0.0, 1e-7] {
                    dirs.push(UnitDirection::from_angle(base + da));
                }
            }
        }
    }
    for j in 0..64 {
        dirs.push(UnitDirection::from_angle(TAU * j as f64 / 64.0));
    }
    let mut out = Vec::new();
    for u in dirs {
        let mut proj: Vec<(f64, f64)> = pts.iter().zip(s.weights()).map(|(&p, &w)| (u.dot(p), w)).collect();
        proj.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut acc = 0.0;
        let mut i = 0;
        while i < proj.len() {
            let t = proj[i].0;
            while i < proj.len() && proj[i].0 <= t + 1e-12 {
                acc += proj[i].1;
                i += 1;
            }
            if acc > thr {
                out.push(Halfplane { u, t });
                break;
            }
        }
    }
    out
}

/// Distance from `z` to the boundary of a region (inside or out).
pub fn boundary_distance(r: &ConvexRegion, z: Point) -> f64 {
    let vs = r.vertices();
    match vs.len() {
        0 => f64::INFINITY,
        1 => vs[0].dist(z),
        _ => {
            let mut best = f64::INFINITY;
            for i in 0..vs.len() {
                let a = vs[i];
                let b = vs[(i + 1) % vs.len()];
                let e = b - a;
                let lam = ((z - a).dot(e) / e.dot(e)).clamp(0.0, 1.0);
                best = best.min(z.dist(a + e * lam));
            }
            best
        }
    }
}

pub fn random_points(rng: &mut impl Rng, n: usize) -> Vec<Point> {
    (0..n).map(|_| Point::new(rng.random(), rng.random())).collect()
}

/// Integer weights in `1..=3`, or all ones.
pub fn random_sample(rng: &mut impl Rng, n: usize, weighted: bool) -> WeightedSample {
    let pts = random_points(rng, n);
    let w = (0..n)
        .map(|_| if weighted { rng.random_range(1..=3) as f64 } else { 1.0 })
        .collect();
    WeightedSample::new(pts, w).unwrap()
}

/// Composite Simpson rule for the Cauchy projected density along a line,
/// after the substitution `t = tan(phi)`.
pub fn cauchy_radon_quadrature(x: Point, u: UnitDirection) -> f64 {
    let s = u.dot(x);
    let w = u.perp();
    let dens = |z: Point| 1.0 / (PI * PI * (1.0 + z.x * z.x) * (1.0 + z.y * z.y));
    let f = |phi: f64| {
        let t = phi.tan();
        let z = u.as_point() * s + w.as_point() * t;
        dens(z) / phi.cos().powi(2)
    };
    let m = 200_000;
    let (a, b) = (-PI / 2.0, PI / 2.0);
    let h = (b - a) / m as f64;
    let mut acc = 0.0;
    for k in 1..m {
        let c = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += c * f(a + k as f64 * h);
    }
    acc * h / 3.0
}

/// Cauchy halfplane mass by conditioning on the first coordinate:
/// `(1/pi) int F2((t - u1 tan th) / u2) dth` over `th in (-pi/2, pi/2)`,
/// where `F2` is the standard Cauchy cdf.
pub fn cauchy_mass_quadrature(h: &Halfplane) -> f64 {
    let (u1, u2, t) = (h.u.ux(), h.u.uy(), h.t);
    let cdf = |z: f64| 0.5 + z.atan() / PI;
    let g = |th: f64| {
        let x1 = th.tan();
        if u2.abs() < 1e-14 {
            return if u1 * x1 <= t { 1.0 } else { 0.0 };
        }
        let z = (t - u1 * x1) / u2;
        if u2 > 0.0 { cdf(z) } else { 1.0 - cdf(z) }
    };
    let m = 200_000;
    let (a, b) = (-PI / 2.0, PI / 2.0);
    let step = (b - a) / m as f64;
    let mut acc = g(a + 1e-15) + g(b - 1e-15);
    for k in 1..m {
        let c = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += c * g(a + k as f64 * step);
    }
    acc * step / 3.0 / PI
}

/// Root of `asin r + r sqrt(1 - r^2) = pi/2 - pi alpha`, by bisection on
/// the cap-area fraction.
pub fn disk_radius_oracle(alpha: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let cap = (mid.acos() - mid * (1.0 - mid * mid).sqrt()) / PI;
        if cap > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Standard normal quantile by bisection on the cdf.
pub fn normal_quantile_oracle(p: f64) -> f64 {
    let cdf = |t: f64| 0.5 * erfc_oracle(-t / 2f64.sqrt());
    let (mut lo, mut hi) = (-40.0f64, 40.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// erfc from the Maclaurin series of erf (small x) or its continued
/// fraction (large x).
pub fn erfc_oracle(x: f64) -> f64 {
    if x < 0.0 {
        return 2.0 - erfc_oracle(-x);
    }
    if x < 3.0 {
        // Maclaurin series of erf
        let mut term = x;
        let mut sum = x;
        let x2 = x * x;
        let mut k = 0.0;
        loop {
            k += 1.0;
            term *= -x2 / k;
            let add = term / (2.0 * k + 1.0);
            sum += add;
            if add.abs() <= 1e-17 * sum.abs() {
                break;
            }
        }
        1.0 - 2.0 / PI.sqrt() * sum
    } else {
        // Lentz continued fraction
        let mut f = x;
        let mut c = x;
        let mut d = 0.0;
        for k in 1..300 {
            let a = k as f64 / 2.0;
            d = x + a * d;
            d = 1.0 / d;
            c = x + a / c;
            let delta = c * d;
            f *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        (-x * x).exp() / (PI.sqrt() * f)
    }
}
