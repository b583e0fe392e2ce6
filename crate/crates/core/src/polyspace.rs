//! The coefficient module `M`: complex polynomials of bounded degree with the
//! weight action of real Möbius maps, plus the least-squares fit used to read
//! period polynomials off sampled values.

use std::ops::{Add, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moebius::{MoebiusMap, C64};

/// Maximum Vandermonde condition estimate accepted by [`fit_poly`].
pub const MAX_FIT_CONDITION: f64 = 1e8;

/// Polynomial `Σ c_μ τ^μ` with exactly `degree_bound + 1` stored coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundedPoly {
    coeffs: Vec<C64>,
}

impl BoundedPoly {
    /// Coefficients in increasing degree; must be non-empty.
    pub fn new(coeffs: Vec<C64>) -> Self {
        assert!(!coeffs.is_empty(), "a bounded polynomial stores at least one coefficient");
        Self { coeffs }
    }

    pub fn zero(degree_bound: usize) -> Self {
        Self { coeffs: vec![C64::new(0.0, 0.0); degree_bound + 1] }
    }

    pub fn monomial(mu: usize, degree_bound: usize) -> Self {
        assert!(mu <= degree_bound);
        let mut p = Self::zero(degree_bound);
        p.coeffs[mu] = C64::new(1.0, 0.0);
        p
    }

    pub fn degree_bound(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coeff(&self, mu: usize) -> C64 {
        self.coeffs.get(mu).copied().unwrap_or_default()
    }

    pub fn eval(&self, tau: C64) -> C64 {
        self.coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, &c| acc * tau + c)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == C64::new(0.0, 0.0))
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    /// Same polynomial with a larger degree bound.
    pub fn widen(&self, degree_bound: usize) -> Result<Self> {
        if self.degree_bound() > degree_bound {
            return Err(Error::DegreeOverflow { have: self.degree_bound(), target: degree_bound });
        }
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(degree_bound + 1, C64::new(0.0, 0.0));
        Ok(Self { coeffs })
    }

    /// Largest modulus among the coefficients.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// `max_μ |Δc_μ| / (1 + |c_μ|)` with `c` taken from `reference`.
    pub fn coefficient_distance(&self, reference: &Self) -> f64 {
        let n = self.coeffs.len().max(reference.coeffs.len());
        (0..n)
            .map(|mu| {
                let r = reference.coeff(mu);
                (self.coeff(mu) - r).norm() / (1.0 + r.norm())
            })
            .fold(0.0, f64::max)
    }

    /// Exact product, degree bound is the sum of the bounds.
    pub fn mul(&self, other: &Self) -> Self {
        Self { coeffs: convolve(&self.coeffs, &other.coeffs) }
    }
}

fn zip_coeffs(p: &BoundedPoly, q: &BoundedPoly, f: impl Fn(C64, C64) -> C64) -> BoundedPoly {
    let n = p.coeffs.len().max(q.coeffs.len());
    BoundedPoly { coeffs: (0..n).map(|mu| f(p.coeff(mu), q.coeff(mu))).collect() }
}

impl Add for &BoundedPoly {
    type Output = BoundedPoly;
    fn add(self, rhs: Self) -> BoundedPoly {
        zip_coeffs(self, rhs, |a, b| a + b)
    }
}

impl Sub for &BoundedPoly {
    type Output = BoundedPoly;
    fn sub(self, rhs: Self) -> BoundedPoly {
        zip_coeffs(self, rhs, |a, b| a - b)
    }
}

impl Neg for &BoundedPoly {
    type Output = BoundedPoly;
    fn neg(self) -> BoundedPoly {
        BoundedPoly { coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }
}

fn convolve(p: &[C64], q: &[C64]) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); p.len() + q.len() - 1];
    for (i, a) in p.iter().enumerate() {
        for (j, b) in q.iter().enumerate() {
            out[i + j] += a * b;
        }
    }
    out
}

/// Coefficients of `(x τ + y)^n`.
pub fn linear_power(x: f64, y: f64, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    out[0] = 1.0;
    for k in 0..n {
        for j in (0..=k + 1).rev() {
            let lower = if j > 0 { out[j - 1] * x } else { 0.0 };
            out[j] = out[j] * y + lower;
        }
    }
    out
}

/// Real `(d+1)×(d+1)` matrix of the weight action: column `μ` holds the
/// coefficients of `(aτ + b)^μ (cτ + d)^{d-μ}`.
pub fn slash_matrix(a: &MoebiusMap, degree: usize) -> DMatrix<f64> {
    let mut m = DMatrix::<f64>::zeros(degree + 1, degree + 1);
    for mu in 0..=degree {
        let num = linear_power(a.a, a.b, mu);
        let den = linear_power(a.c, a.d, degree - mu);
        for (i, x) in num.iter().enumerate() {
            for (j, y) in den.iter().enumerate() {
                m[(i + j, mu)] += x * y;
            }
        }
    }
    m
}

/// `τ ↦ P(Aτ)(cτ + d)^{degree}`, expanded exactly.
pub fn poly_slash(p: &BoundedPoly, a: &MoebiusMap, degree: usize) -> Result<BoundedPoly> {
    if p.degree_bound() > degree {
        return Err(Error::DegreeOverflow { have: p.degree_bound(), target: degree });
    }
    let mut out = vec![C64::new(0.0, 0.0); degree + 1];
    for (mu, c) in p.coeffs.iter().enumerate() {
        if *c == C64::new(0.0, 0.0) {
            continue;
        }
        let num = linear_power(a.a, a.b, mu);
        let den = linear_power(a.c, a.d, degree - mu);
        for (i, x) in num.iter().enumerate() {
            for (j, y) in den.iter().enumerate() {
                out[i + j] += c * (x * y);
            }
        }
    }
    Ok(BoundedPoly { coeffs: out })
}

/// Result of a least-squares polynomial fit.
#[derive(Clone, Debug)]
pub struct PolyFit {
    pub poly: BoundedPoly,
    /// Largest leave-one-out prediction error over the samples.
    pub residual: f64,
    /// Condition number of the (centred, scaled) design matrix.
    pub condition: f64,
}

/// The default period-fit nodes: `d + 3` points equally spaced on
/// `|τ - 2i| = 1/2`.
pub fn fit_nodes(degree: usize) -> Vec<C64> {
    let n = degree + 3;
    let centre = C64::new(0.0, 2.0);
    (0..n)
        .map(|k| centre + C64::from_polar(0.5, std::f64::consts::TAU * k as f64 / n as f64))
        .collect()
}

struct Design {
    centre: C64,
    scale: f64,
}

impl Design {
    fn for_nodes(nodes: &[C64]) -> Result<Self> {
        let n = nodes.len() as f64;
        let centre = nodes.iter().sum::<C64>() / n;
        let scale = nodes.iter().map(|t| (t - centre).norm()).fold(0.0, f64::max);
        if !(scale > 0.0) {
            return Err(Error::IllConditioned { cond: f64::INFINITY });
        }
        Ok(Self { centre, scale })
    }

    fn matrix(&self, nodes: &[C64], degree: usize) -> DMatrix<C64> {
        DMatrix::from_fn(nodes.len(), degree + 1, |r, k| ((nodes[r] - self.centre) / self.scale).powu(k as u32))
    }

    fn predict(&self, local: &DVector<C64>, tau: C64) -> C64 {
        let u = (tau - self.centre) / self.scale;
        local.iter().rev().fold(C64::new(0.0, 0.0), |acc, &c| acc * u + c)
    }

    /// Converts coefficients in `u = (τ - centre)/scale` to monomials in `τ`.
    fn to_monomial(&self, local: &DVector<C64>) -> BoundedPoly {
        let d = local.len() - 1;
        let mut out = vec![C64::new(0.0, 0.0); d + 1];
        let shift = -self.centre;
        for (k, b) in local.iter().enumerate() {
            let bk = b / self.scale.powi(k as i32);
            // (τ + shift)^k
            let mut binom = 1.0;
            for j in 0..=k {
                out[j] += bk * binom * shift.powu((k - j) as u32);
                binom = binom * (k - j) as f64 / (j + 1) as f64;
            }
        }
        BoundedPoly::new(out)
    }
}

fn lstsq(a: &DMatrix<C64>, b: &DVector<C64>) -> Result<(DVector<C64>, f64)> {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let smin = svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min);
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(cond <= MAX_FIT_CONDITION) {
        return Err(Error::IllConditioned { cond });
    }
    let x = svd
        .solve(b, 0.0)
        .map_err(|e| Error::Precondition(format!("least-squares solve failed: {e}")))?;
    Ok((x, cond))
}

/// Least-squares polynomial of degree `<= degree` through `samples`.
///
/// Needs at least `degree + 2` samples at distinct nodes so that each sample
/// can be held out once; the reported residual is the worst held-out error.
pub fn fit_poly(samples: &[(C64, C64)], degree: usize) -> Result<PolyFit> {
    if samples.len() < degree + 2 {
        return Err(Error::Precondition(format!(
            "fit of degree {degree} needs at least {} samples, got {}",
            degree + 2,
            samples.len()
        )));
    }
    let nodes: Vec<C64> = samples.iter().map(|s| s.0).collect();
    let design = Design::for_nodes(&nodes)?;
    let values = DVector::from_iterator(samples.len(), samples.iter().map(|s| s.1));
    let (local, condition) = lstsq(&design.matrix(&nodes, degree), &values)?;

    let mut residual: f64 = 0.0;
    for held in 0..samples.len() {
        let kept: Vec<C64> = nodes.iter().enumerate().filter(|(k, _)| *k != held).map(|(_, t)| *t).collect();
        let rhs = DVector::from_iterator(
            kept.len(),
            samples.iter().enumerate().filter(|(k, _)| *k != held).map(|(_, s)| s.1),
        );
        let (loo, _) = lstsq(&design.matrix(&kept, degree), &rhs)?;
        residual = residual.max((design.predict(&loo, nodes[held]) - samples[held].1).norm());
    }

    Ok(PolyFit { poly: design.to_monomial(&local), residual, condition })
}
