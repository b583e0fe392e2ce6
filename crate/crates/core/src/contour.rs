//! Path integration in the upper half-plane and Cauchy-formula derivatives.
//!
//! Integrals use adaptive Gauss–Legendre panels: each panel is evaluated with
//! 32 and 48 nodes, the difference serving as the error estimate, and panels
//! are bisected until the estimate meets the tolerance. Panels are summed in
//! left-to-right order so results do not depend on thread scheduling.

use std::f64::consts::{PI, TAU};
use std::sync::OnceLock;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::moebius::C64;

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, dp) = legendre(n, x);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, dp) = legendre(n, x);
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

pub(crate) fn gl32() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(32))
}

pub(crate) fn gl48() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(48))
}

/// Indefinite-integration matrix at the 32 Gauss nodes:
/// `S[i][j] = ∫_{-1}^{x_i} ℓ_j(x) dx` for the Lagrange basis `ℓ_j`.
pub fn gl32_cumulative() -> &'static Vec<Vec<f64>> {
    static MATRIX: OnceLock<Vec<Vec<f64>>> = OnceLock::new();
    MATRIX.get_or_init(|| {
        let rule = gl32();
        let n = rule.len();
        let legendre_table = |x: f64| -> Vec<f64> {
            let mut p = vec![0.0; n + 1];
            p[0] = 1.0;
            p[1] = x;
            for k in 2..=n {
                let kf = k as f64;
                p[k] = ((2.0 * kf - 1.0) * x * p[k - 1] - (kf - 1.0) * p[k - 2]) / kf;
            }
            p
        };
        let tables: Vec<Vec<f64>> = rule.nodes.iter().map(|&x| legendre_table(x)).collect();
        let mut s = vec![vec![0.0; n]; n];
        for i in 0..n {
            let xi = rule.nodes[i];
            let pi = &tables[i];
            // ∫_{-1}^{x} P_k
            let integ: Vec<f64> = (0..n)
                .map(|k| if k == 0 { xi + 1.0 } else { (pi[k + 1] - pi[k - 1]) / (2 * k + 1) as f64 })
                .collect();
            for j in 0..n {
                let pj = &tables[j];
                let sum: f64 = (0..n).map(|k| (k as f64 + 0.5) * pj[k] * integ[k]).sum();
                s[i][j] = rule.weights[j] * sum;
            }
        }
        s
    })
}

/// A smooth arc in the upper half-plane parametrized by `t ∈ [0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Segment {
    Chord { start: C64, end: C64 },
    Arc { centre: C64, radius: f64, theta0: f64, theta1: f64 },
}

impl Segment {
    pub fn point(&self, t: f64) -> C64 {
        match *self {
            Segment::Chord { start, end } => start + (end - start) * t,
            Segment::Arc { centre, radius, theta0, theta1 } => {
                centre + C64::from_polar(radius, theta0 + (theta1 - theta0) * t)
            }
        }
    }

    pub fn derivative(&self, t: f64) -> C64 {
        match *self {
            Segment::Chord { start, end } => end - start,
            Segment::Arc { radius, theta0, theta1, .. } => {
                let th = theta0 + (theta1 - theta0) * t;
                C64::new(0.0, theta1 - theta0) * C64::from_polar(radius, th)
            }
        }
    }

    pub fn start(&self) -> C64 {
        self.point(0.0)
    }

    pub fn end(&self) -> C64 {
        self.point(1.0)
    }

    pub fn reversed(&self) -> Self {
        match *self {
            Segment::Chord { start, end } => Segment::Chord { start: end, end: start },
            Segment::Arc { centre, radius, theta0, theta1 } => {
                Segment::Arc { centre, radius, theta0: theta1, theta1: theta0 }
            }
        }
    }

    pub fn length(&self) -> f64 {
        match *self {
            Segment::Chord { start, end } => (end - start).norm(),
            Segment::Arc { radius, theta0, theta1, .. } => radius * (theta1 - theta0).abs(),
        }
    }

    /// Lowest imaginary part attained along the segment.
    pub fn min_im(&self) -> f64 {
        match *self {
            Segment::Chord { start, end } => start.im.min(end.im),
            Segment::Arc { centre, radius, theta0, theta1 } => {
                let (lo, hi) = if theta0 <= theta1 { (theta0, theta1) } else { (theta1, theta0) };
                // the lowest point sits at angle -π/2 (mod 2π)
                let k = ((lo + PI / 2.0) / TAU).ceil();
                let bottom = -PI / 2.0 + k * TAU;
                if bottom <= hi {
                    centre.im - radius
                } else {
                    self.start().im.min(self.end().im)
                }
            }
        }
    }
}

/// Piecewise-smooth path inside the upper half-plane.
#[derive(Clone, Debug, PartialEq)]
pub struct PathInH {
    segments: Vec<Segment>,
}

impl PathInH {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::Precondition("path needs at least one segment".into()));
        }
        for s in &segments {
            if !(s.min_im() > 0.0) {
                return Err(Error::Precondition(format!("segment {s:?} leaves the upper half-plane")));
            }
        }
        for w in segments.windows(2) {
            let gap = (w[0].end() - w[1].start()).norm();
            if gap > 1e-12 * (1.0 + w[0].end().norm()) {
                return Err(Error::Precondition(format!("segments do not join (gap {gap:.3e})")));
            }
        }
        Ok(Self { segments })
    }

    pub fn chord(start: C64, end: C64) -> Result<Self> {
        Self::new(vec![Segment::Chord { start, end }])
    }

    /// Polygonal path through the given vertices.
    pub fn polyline(vertices: &[C64]) -> Result<Self> {
        Self::new(vertices.windows(2).map(|w| Segment::Chord { start: w[0], end: w[1] }).collect())
    }

    /// Counter-clockwise circle, split into two half arcs.
    pub fn circle(centre: C64, radius: f64) -> Result<Self> {
        Self::new(vec![
            Segment::Arc { centre, radius, theta0: 0.0, theta1: PI },
            Segment::Arc { centre, radius, theta0: PI, theta1: TAU },
        ])
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn reversed(&self) -> Self {
        Self { segments: self.segments.iter().rev().map(Segment::reversed).collect() }
    }

    pub fn concat(&self, other: &Self) -> Result<Self> {
        let mut segs = self.segments.clone();
        segs.extend_from_slice(&other.segments);
        Self::new(segs)
    }

    pub fn length(&self) -> f64 {
        self.segments.iter().map(Segment::length).sum()
    }

    pub fn start(&self) -> C64 {
        self.segments[0].start()
    }

    pub fn end(&self) -> C64 {
        self.segments[self.segments.len() - 1].end()
    }
}

/// Adaptive quadrature settings.
#[derive(Clone, Copy, Debug)]
pub struct Quadrature {
    /// Absolute error target for the whole path.
    pub tol: f64,
    pub max_depth: u32,
    /// Evaluate panel nodes on the rayon pool.
    pub parallel: bool,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self { tol: 1e-10, max_depth: 20, parallel: false }
    }
}

const ROUNDOFF: f64 = 1e-14;

impl Quadrature {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }

    pub fn parallel(mut self, on: bool) -> Self {
        self.parallel = on;
        self
    }

    /// `∫_path f(z) dz`.
    pub fn integrate<F>(&self, f: F, path: &PathInH) -> Result<C64>
    where
        F: Fn(C64) -> C64 + Sync,
    {
        let mut out = [C64::new(0.0, 0.0)];
        self.integrate_vec(|z, buf: &mut [C64]| buf[0] = f(z), 1, path, &mut out)?;
        Ok(out[0])
    }

    /// Vector-valued integral: `f(z, buf)` writes `dim` values into `buf`;
    /// the integrals are accumulated into `out`. The error target applies to
    /// every component.
    pub fn integrate_vec<F>(&self, f: F, dim: usize, path: &PathInH, out: &mut [C64]) -> Result<()>
    where
        F: Fn(C64, &mut [C64]) + Sync,
    {
        assert_eq!(out.len(), dim);
        out.iter_mut().for_each(|o| *o = C64::new(0.0, 0.0));
        let seg_tol = self.tol / path.segments.len() as f64;
        for seg in &path.segments {
            let mut stack = vec![(0.0f64, 1.0f64, 0u32, seg_tol)];
            // depth-first, left panel first: deterministic summation order
            while let Some((t0, t1, depth, tol)) = stack.pop() {
                let (coarse, fine, scale) = self.panel(&f, dim, seg, t0, t1);
                let err = coarse.iter().zip(&fine).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
                if err <= tol.max(ROUNDOFF * scale) {
                    for (o, v) in out.iter_mut().zip(&fine) {
                        *o += v;
                    }
                } else if depth >= self.max_depth {
                    return Err(Error::ToleranceNotMet { tol: self.tol, estimate: err });
                } else {
                    let mid = 0.5 * (t0 + t1);
                    stack.push((mid, t1, depth + 1, 0.5 * tol));
                    stack.push((t0, mid, depth + 1, 0.5 * tol));
                }
            }
        }
        Ok(())
    }

    fn panel<F>(&self, f: &F, dim: usize, seg: &Segment, t0: f64, t1: f64) -> (Vec<C64>, Vec<C64>, f64)
    where
        F: Fn(C64, &mut [C64]) + Sync,
    {
        let half = 0.5 * (t1 - t0);
        let mid = 0.5 * (t0 + t1);
        let eval_rule = |rule: &GaussLegendre| -> (Vec<C64>, f64) {
            let node_values = |k: usize| -> Vec<C64> {
                let t = mid + half * rule.nodes[k];
                let mut buf = vec![C64::new(0.0, 0.0); dim];
                f(seg.point(t), &mut buf);
                let jac = seg.derivative(t) * (half * rule.weights[k]);
                buf.iter_mut().for_each(|v| *v *= jac);
                buf
            };
            let vals: Vec<Vec<C64>> = if self.parallel {
                (0..rule.len()).into_par_iter().map(node_values).collect()
            } else {
                (0..rule.len()).map(node_values).collect()
            };
            let mut sum = vec![C64::new(0.0, 0.0); dim];
            let mut abs = 0.0;
            for v in &vals {
                for (s, x) in sum.iter_mut().zip(v) {
                    *s += x;
                    abs += x.norm();
                }
            }
            (sum, abs)
        };
        let (coarse, _) = eval_rule(gl32());
        let (fine, abs) = eval_rule(gl48());
        (coarse, fine, abs)
    }
}

/// `∫_path f(z) dz` with default settings and absolute tolerance `tol`.
pub fn integrate<F>(f: F, path: &PathInH, tol: f64) -> Result<C64>
where
    F: Fn(C64) -> C64 + Sync,
{
    Quadrature::with_tol(tol).integrate(f, path)
}

/// `f^{(n)}(z)` from the Cauchy integral over the circle of radius `r`,
/// discretized with the trapezoidal rule on `max(64, 8(n+1))` nodes.
pub fn cauchy_derivative<F>(f: F, z: C64, order: usize, radius: f64) -> Result<C64>
where
    F: Fn(C64) -> C64,
{
    if !(radius > 0.0) || !(z.im - radius > 0.0) {
        return Err(Error::DomainViolation { im: z.im, radius });
    }
    let nodes = 64usize.max(8 * (order + 1));
    let mut acc = C64::new(0.0, 0.0);
    for k in 0..nodes {
        let theta = TAU * k as f64 / nodes as f64;
        let e = C64::from_polar(1.0, theta);
        acc += f(z + radius * e) * C64::from_polar(1.0, -(order as f64) * theta);
    }
    let factorial: f64 = (1..=order).map(|k| k as f64).product();
    Ok(acc * (factorial / (nodes as f64 * radius.powi(order as i32))))
}

/// Same as [`cauchy_derivative`] for fallible evaluators.
pub fn try_cauchy_derivative<F>(f: F, z: C64, order: usize, radius: f64) -> Result<C64>
where
    F: Fn(C64) -> Result<C64>,
{
    if !(radius > 0.0) || !(z.im - radius > 0.0) {
        return Err(Error::DomainViolation { im: z.im, radius });
    }
    let nodes = 64usize.max(8 * (order + 1));
    let mut acc = C64::new(0.0, 0.0);
    for k in 0..nodes {
        let theta = TAU * k as f64 / nodes as f64;
        acc += f(z + C64::from_polar(radius, theta))? * C64::from_polar(1.0, -(order as f64) * theta);
    }
    let factorial: f64 = (1..=order).map(|k| k as f64).product();
    Ok(acc * (factorial / (nodes as f64 * radius.powi(order as i32))))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for rule in [gl32(), gl48()] {
            let sum: f64 = rule.weights.iter().sum();
            assert!((sum - 2.0).abs() < 1e-14);
            // ∫ x^62 = 2/63 is exact for both rules
            let m: f64 = rule.nodes.iter().zip(&rule.weights).map(|(x, w)| w * x.powi(62)).sum();
            assert!((m - 2.0 / 63.0).abs() < 1e-14);
        }
    }

    #[test]
    fn cumulative_matrix_integrates_polynomials() {
        let rule = gl32();
        let s = gl32_cumulative();
        // ∫_{-1}^{x} 5t^4 dt = x^5 + 1
        for (i, x) in rule.nodes.iter().enumerate() {
            let v: f64 = (0..32).map(|j| s[i][j] * 5.0 * rule.nodes[j].powi(4)).sum();
            assert!((v - (x.powi(5) + 1.0)).abs() < 1e-13);
        }
    }

    #[test]
    fn integrate_examples() {
        let chord = PathInH::chord(c(0.0, 1.0), c(1.0, 1.0)).unwrap();
        let v = integrate(|_| c(1.0, 0.0), &chord, 1e-12).unwrap();
        assert!((v - c(1.0, 0.0)).norm() < 1e-14);

        let circle = PathInH::circle(c(0.0, 2.0), 0.5).unwrap();
        let v = integrate(|z| z.inv(), &circle, 1e-12).unwrap();
        assert!(v.norm() < 1e-12);
        let v = integrate(|z| (z - c(0.0, 2.0)).inv(), &circle, 1e-12).unwrap();
        assert!((v - c(0.0, TAU)).norm() < 1e-12);
    }

    #[test]
    fn path_reversal_and_additivity() {
        let f = |z: C64| (z * z).sin() / (z + c(0.0, 0.5));
        let p = PathInH::polyline(&[c(-1.0, 0.5), c(0.3, 2.0), c(1.2, 0.7)]).unwrap();
        let q = PathInH::chord(c(1.2, 0.7), c(2.0, 3.0)).unwrap();
        let tol = 1e-11;
        let ip = integrate(f, &p, tol).unwrap();
        let irev = integrate(f, &p.reversed(), tol).unwrap();
        assert!((ip + irev).norm() <= tol);
        let iq = integrate(f, &q, tol).unwrap();
        let ipq = integrate(f, &p.concat(&q).unwrap(), tol).unwrap();
        assert!((ipq - ip - iq).norm() <= 2.0 * tol);
    }

    #[test]
    fn integrate_reports_unmet_tolerance() {
        let near_pole = PathInH::chord(c(-1.0, 1e-9), c(1.0, 1e-9)).unwrap();
        let quad = Quadrature { tol: 1e-14, max_depth: 3, parallel: false };
        let r = quad.integrate(|z| z.inv(), &near_pole);
        assert!(matches!(r, Err(Error::ToleranceNotMet { .. })));
    }

    #[test]
    fn path_must_stay_in_upper_half_plane() {
        assert!(PathInH::chord(c(0.0, 1.0), c(1.0, -0.1)).is_err());
        assert!(PathInH::circle(c(0.0, 0.4), 0.5).is_err());
        let joined = PathInH::new(vec![
            Segment::Chord { start: c(0.0, 1.0), end: c(1.0, 1.0) },
            Segment::Chord { start: c(1.5, 1.0), end: c(2.0, 1.0) },
        ]);
        assert!(joined.is_err());
    }

    #[test]
    fn parallel_matches_serial_bitwise() {
        let f = |z: C64| (3.0 * z).exp() / (z + c(0.1, 0.2)).powi(3);
        let p = PathInH::polyline(&[c(-1.0, 0.5), c(0.3, 2.0), c(1.2, 0.7)]).unwrap();
        let a = Quadrature::with_tol(1e-10).integrate(f, &p).unwrap();
        let b = Quadrature::with_tol(1e-10).parallel(true).integrate(f, &p).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn cauchy_derivative_examples() {
        let z = c(0.4, 1.0);
        let d3 = cauchy_derivative(|w| w * w * w, z, 3, 0.3).unwrap();
        assert!((d3 - c(6.0, 0.0)).norm() < 1e-12);
        let z = c(0.0, 2.0);
        let d5 = cauchy_derivative(|w| w.exp(), z, 5, 0.5).unwrap();
        assert!((d5 - z.exp()).norm() < 1e-10 * z.exp().norm());
        let d0 = cauchy_derivative(|w| w.sin(), z, 0, 0.5).unwrap();
        assert!((d0 - z.sin()).norm() < 1e-12 * z.sin().norm());
    }

    #[test]
    fn cauchy_derivative_is_radius_stable() {
        let f = |w: C64| (w * 0.7).exp() / w;
        let z = c(0.2, 1.5);
        for n in 0..8 {
            let a = cauchy_derivative(f, z, n, 0.6).unwrap();
            let b = cauchy_derivative(f, z, n, 0.3).unwrap();
            assert!((a - b).norm() <= 1e-8 * a.norm(), "order {n}: {a} vs {b}");
        }
    }

    #[test]
    fn cauchy_disk_must_stay_in_upper_half_plane() {
        let r = cauchy_derivative(|w| w, c(0.0, 0.2), 1, 0.3);
        assert!(matches!(r, Err(Error::DomainViolation { .. })));
    }
}
