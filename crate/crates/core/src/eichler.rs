//! Eichler integrals, period polynomials and the cocycle they define.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use crate::contour::{cauchy_derivative, gl32, gl32_cumulative, PathInH, Quadrature};
use crate::error::{Error, Result};
use crate::forms::FormHandle;
use crate::fuchsian::{GroupWord, Letter, SurfaceGroup};
use crate::moebius::{holo, HoloFn, MoebiusMap, C64};
use crate::polyspace::{fit_nodes, fit_poly, poly_slash, BoundedPoly};

/// Largest supported degree `N = -2m`.
pub const MAX_DEGREE: usize = 20;

/// Floor of the period-fit threshold.
pub const FIT_FLOOR: f64 = 1e-8;

pub fn factorial(n: usize) -> f64 {
    assert!(n <= MAX_DEGREE, "factorial argument {n} above {MAX_DEGREE}");
    (1..=n as u64).product::<u64>() as f64
}

pub fn binomial(n: usize, k: usize) -> f64 {
    assert!(k <= n);
    let mut b = 1u64;
    for j in 0..k as u64 {
        b = b * (n as u64 - j) / (j + 1);
    }
    b as f64
}

/// `Φ(τ) = (1/N!) ∫_{τ₁}^{τ} (τ - σ)^N φ(σ) dσ` along the chord from `τ₁`.
#[derive(Clone, Debug)]
pub struct EichlerIntegral {
    base: C64,
    source: FormHandle,
    quad: Quadrature,
}

/// The `(1 - 2m)`-fold antiderivative of `φ` vanishing at `τ₁`.
pub fn iterated_antiderivative(phi: &FormHandle, tau1: C64) -> Result<EichlerIntegral> {
    EichlerIntegral::new(phi, tau1, Quadrature::with_tol(1e-12))
}

impl EichlerIntegral {
    pub fn new(phi: &FormHandle, tau1: C64, quad: Quadrature) -> Result<Self> {
        if !(tau1.im > 0.0) {
            return Err(Error::Precondition(format!("base point {tau1} is not in the upper half-plane")));
        }
        if phi.m() > 0 || phi.degree() > MAX_DEGREE {
            return Err(Error::Precondition(format!("m = {} outside the supported range -10..=0", phi.m())));
        }
        Ok(Self { base: tau1, source: phi.clone(), quad })
    }

    pub fn base(&self) -> C64 {
        self.base
    }

    pub fn source(&self) -> &FormHandle {
        &self.source
    }

    pub fn degree(&self) -> usize {
        self.source.degree()
    }

    pub fn quadrature(&self) -> Quadrature {
        self.quad
    }

    pub fn eval(&self, tau: C64) -> Result<C64> {
        if tau == self.base {
            return Ok(C64::new(0.0, 0.0));
        }
        let n = self.degree() as i32;
        let path = PathInH::chord(self.base, tau)?;
        let phi = self.source.evaluator();
        let v = self.quad.integrate(|s| (tau - s).powi(n) * phi(s), &path)?;
        Ok(v / factorial(self.degree()))
    }

    /// The evaluator as a function, NaN on quadrature failure.
    pub fn as_fn(&self) -> HoloFn {
        let me = self.clone();
        holo(move |z| me.eval(z).unwrap_or(C64::new(f64::NAN, f64::NAN)))
    }

    /// `∫_{τ₁}^{point} (σ - centre)^k φ(σ) dσ` for `k = 0..=N`.
    pub fn moments(&self, point: C64, centre: C64) -> Result<Vec<C64>> {
        let dim = self.degree() + 1;
        let mut out = vec![C64::new(0.0, 0.0); dim];
        if point == self.base {
            return Ok(out);
        }
        let phi = self.source.evaluator();
        let path = PathInH::chord(self.base, point)?;
        self.quad.integrate_vec(
            |s, buf| {
                let mut p = phi(s);
                let d = s - centre;
                for b in buf.iter_mut() {
                    *b = p;
                    p *= d;
                }
            },
            dim,
            &path,
            &mut out,
        )?;
        Ok(out)
    }

    /// `∫_a^b Φ(τ) g(τ) dτ` along the chord, with `Φ` carried along the
    /// chord by cumulative Gauss–Legendre integration of its moments.
    /// Panels are doubled until two successive totals agree to `tol`.
    pub fn product_integral<G>(&self, g: G, a: C64, b: C64, tol: f64) -> Result<C64>
    where
        G: Fn(C64) -> C64,
    {
        let n = self.degree();
        let centre = 0.5 * (a + b);
        let start = self.moments(a, centre)?;
        let rule = gl32();
        let cumulative = gl32_cumulative();
        let coef: Vec<f64> = (0..=n)
            .map(|k| binomial(n, k) * if k % 2 == 0 { 1.0 } else { -1.0 } / factorial(n))
            .collect();
        let phi = self.source.evaluator();
        let mut previous: Option<C64> = None;
        let mut panels = 4usize;
        let mut last_err = f64::INFINITY;
        while panels <= 4096 {
            let half = (b - a) / (2.0 * panels as f64);
            let mut moments = start.clone();
            let mut total = C64::new(0.0, 0.0);
            let mut abs_total = 0.0;
            for p in 0..panels {
                let mid = a + (b - a) * ((p as f64 + 0.5) / panels as f64);
                let z: Vec<C64> = rule.nodes.iter().map(|x| mid + half * *x).collect();
                // powers[k][j] = (z_j - c)^k φ(z_j)
                let mut powers = vec![vec![C64::new(0.0, 0.0); z.len()]; n + 1];
                for (j, zj) in z.iter().enumerate() {
                    let mut v = phi(*zj);
                    for row in powers.iter_mut() {
                        row[j] = v;
                        v *= zj - centre;
                    }
                }
                for (i, zi) in z.iter().enumerate() {
                    let mut value = C64::new(0.0, 0.0);
                    let d = zi - centre;
                    for k in 0..=n {
                        let local: C64 = cumulative[i].iter().zip(&powers[k]).map(|(s, v)| v * *s).sum();
                        let mk = moments[k] + half * local;
                        value += coef[k] * d.powu((n - k) as u32) * mk;
                    }
                    let term = value * g(*zi) * (half * rule.weights[i]);
                    abs_total += term.norm();
                    total += term;
                }
                for k in 0..=n {
                    let inc: C64 = rule.weights.iter().zip(&powers[k]).map(|(w, v)| v * *w).sum();
                    moments[k] += half * inc;
                }
            }
            if let Some(prev) = previous {
                last_err = (total - prev).norm();
                if last_err <= tol.max(1e-14 * abs_total) {
                    return Ok(total);
                }
            }
            previous = Some(total);
            panels *= 2;
        }
        Err(Error::ToleranceNotMet { tol, estimate: last_err })
    }
}

/// A fitted period polynomial with its fit diagnostics.
#[derive(Clone, Debug)]
pub struct PeriodFit {
    pub poly: BoundedPoly,
    /// Leave-one-out residual relative to `1 + max |sample|`.
    pub residual: f64,
    pub threshold: f64,
}

/// Fit threshold for a source form: `max(1e-8, 10 × defect estimate)`.
pub fn fit_threshold(form: &FormHandle) -> f64 {
    FIT_FLOOR.max(10.0 * form.defect_estimate())
}

/// `Ω_A(τ) = Φ(Aτ)(cτ + d)^N - Φ(τ)`, fitted by a polynomial of degree `N`.
pub fn period_polynomial(phi: &EichlerIntegral, a: &MoebiusMap) -> Result<BoundedPoly> {
    Ok(period_fit(phi, a)?.poly)
}

pub fn period_fit(phi: &EichlerIntegral, a: &MoebiusMap) -> Result<PeriodFit> {
    period_fit_degree(phi, a, phi.degree())
}

/// Same as [`period_fit`] with an explicit fit degree (used to show that a
/// lower degree does not fit).
pub fn period_fit_degree(phi: &EichlerIntegral, a: &MoebiusMap, degree: usize) -> Result<PeriodFit> {
    let n = phi.degree();
    let samples = period_samples(phi, a)?;
    let threshold = fit_threshold(phi.source());
    let fit = fit_poly(&samples, degree)?;
    let scale = 1.0 + samples.iter().map(|s| s.1.norm()).fold(0.0, f64::max);
    let residual = fit.residual / scale;
    if !(residual <= threshold) {
        return Err(Error::NotPolynomial { degree, residual, threshold });
    }
    Ok(PeriodFit { poly: fit.poly.widen(n)?, residual, threshold })
}

fn period_samples(phi: &EichlerIntegral, a: &MoebiusMap) -> Result<Vec<(C64, C64)>> {
    let n = phi.degree() as i32;
    fit_nodes(phi.degree())
        .into_iter()
        .map(|t| {
            let at = a.apply(t)?;
            let v = phi.eval(at)? * a.automorphy_factor(t).powi(n) - phi.eval(t)?;
            Ok((t, v))
        })
        .collect()
}

/// `Ω'_A(τ) = (1/N!) ∫_{A⁻¹τ₁}^{τ₁} (τ - σ)^N ψ(σ) dσ`, expanded binomially:
/// the coefficient of `τ^{N-μ}` is `(1/N!) C(N,μ) (-1)^μ ∫ σ^μ ψ`.
pub fn period_via_integral(psi: &FormHandle, a: &MoebiusMap, tau1: C64, quad: &Quadrature) -> Result<BoundedPoly> {
    let n = psi.degree();
    let start = a.inverse().apply(tau1)?;
    let mut coeffs = vec![C64::new(0.0, 0.0); n + 1];
    if start == tau1 {
        return Ok(BoundedPoly::new(coeffs));
    }
    let moments = monomial_moments(psi, start, tau1, quad)?;
    for (mu, m) in moments.iter().enumerate() {
        let sign = if mu % 2 == 0 { 1.0 } else { -1.0 };
        coeffs[n - mu] = m * (binomial(n, mu) * sign / factorial(n));
    }
    Ok(BoundedPoly::new(coeffs))
}

/// `∫_a^b σ^μ ψ(σ) dσ` along the chord, `μ = 0..=N`.
pub fn monomial_moments(psi: &FormHandle, a: C64, b: C64, quad: &Quadrature) -> Result<Vec<C64>> {
    let dim = psi.degree() + 1;
    let mut out = vec![C64::new(0.0, 0.0); dim];
    let f = psi.evaluator();
    let path = PathInH::chord(a, b)?;
    quad.integrate_vec(
        |s, buf| {
            let mut p = f(s);
            for v in buf.iter_mut() {
                *v = p;
                p *= s;
            }
        },
        dim,
        &path,
        &mut out,
    )?;
    Ok(out)
}

/// How table entries not yet stored are produced.
#[derive(Clone, Debug)]
enum PeriodSource {
    Eichler(EichlerIntegral),
    Integral { psi: FormHandle, tau1: C64, quad: Quadrature },
    None,
}

/// Periods `Ω_W` indexed by group words.
#[derive(Clone, Debug)]
pub struct PeriodCocycle {
    degree: usize,
    group: Arc<SurfaceGroup>,
    table: BTreeMap<GroupWord, BoundedPoly>,
    source: PeriodSource,
    worst_fit: f64,
}

impl PeriodCocycle {
    pub fn empty(group: &Arc<SurfaceGroup>, degree: usize) -> Self {
        let mut table = BTreeMap::new();
        table.insert(GroupWord::identity(), BoundedPoly::zero(degree));
        Self { degree, group: group.clone(), table, source: PeriodSource::None, worst_fit: 0.0 }
    }

    /// Cocycle with prescribed generator values (generators in index order).
    pub fn from_generator_values(group: &Arc<SurfaceGroup>, degree: usize, values: Vec<BoundedPoly>) -> Result<Self> {
        if values.len() != group.generators().len() || values.iter().any(|v| v.degree_bound() != degree) {
            return Err(Error::Precondition("one value of the right degree per generator is required".into()));
        }
        let mut c = Self::empty(group, degree);
        for (k, v) in values.into_iter().enumerate() {
            c.table.insert(GroupWord::letter(Letter::new(k, false)), v);
        }
        Ok(c)
    }

    /// Periods of `Φ`, fitting `Φ[A]^N - Φ` for each generator.
    pub fn from_eichler(phi: &EichlerIntegral) -> Result<Self> {
        let group = phi
            .source()
            .group()
            .ok_or_else(|| Error::UnsupportedGroup("source form has no group".into()))?
            .clone();
        let mut c = Self::empty(&group, phi.degree());
        c.source = PeriodSource::Eichler(phi.clone());
        for k in 0..group.generators().len() {
            c.period(&GroupWord::letter(Letter::new(k, false)))?;
        }
        Ok(c)
    }

    /// Periods `Ω'` of `ψ` from the integral expression.
    pub fn from_integrals(psi: &FormHandle, tau1: C64, quad: Quadrature) -> Result<Self> {
        let group = psi.group().ok_or_else(|| Error::UnsupportedGroup("source form has no group".into()))?.clone();
        let mut c = Self::empty(&group, psi.degree());
        c.source = PeriodSource::Integral { psi: psi.clone(), tau1, quad };
        for k in 0..group.generators().len() {
            c.period(&GroupWord::letter(Letter::new(k, false)))?;
        }
        Ok(c)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn group(&self) -> &Arc<SurfaceGroup> {
        &self.group
    }

    pub fn get(&self, w: &GroupWord) -> Option<&BoundedPoly> {
        self.table.get(w)
    }

    pub fn insert(&mut self, w: GroupWord, p: BoundedPoly) {
        self.table.insert(w, p);
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    /// Largest relative fit residual among computed entries.
    pub fn worst_fit_residual(&self) -> f64 {
        self.worst_fit
    }

    /// Generator values `Ω_{x}` in generator order.
    pub fn generator_values(&self) -> Result<Vec<BoundedPoly>> {
        (0..self.group.generators().len())
            .map(|k| {
                let w = GroupWord::letter(Letter::new(k, false));
                self.table
                    .get(&w)
                    .cloned()
                    .ok_or_else(|| Error::Precondition(format!("generator {k} has no stored period")))
            })
            .collect()
    }

    /// `Ω_W` by expanding `W` left to right with
    /// `Ω_{uv} = Ω_u[v]^N + Ω_v` and `Ω_{x⁻¹} = -Ω_x[x⁻¹]^N`.
    pub fn compose(&self, w: &GroupWord) -> Result<BoundedPoly> {
        let values = self.generator_values()?;
        let mut acc = BoundedPoly::zero(self.degree);
        for &l in w.letters() {
            let m = self.group.letter_matrix(l);
            let omega_l = if l.inverse {
                -&poly_slash(&values[l.generator], &m, self.degree)?
            } else {
                values[l.generator].clone()
            };
            acc = &poly_slash(&acc, &m, self.degree)? + &omega_l;
        }
        Ok(acc)
    }

    /// `Ω_W`: a stored value, otherwise computed directly from the source
    /// (fit or integral) and stored, otherwise composed from generators.
    pub fn period(&mut self, w: &GroupWord) -> Result<BoundedPoly> {
        if let Some(p) = self.table.get(w) {
            return Ok(p.clone());
        }
        let matrix = self.group.word_to_matrix(w);
        let p = match &self.source {
            PeriodSource::Eichler(phi) => {
                let fit = period_fit(phi, &matrix)?;
                self.worst_fit = self.worst_fit.max(fit.residual);
                fit.poly
            }
            PeriodSource::Integral { psi, tau1, quad } => period_via_integral(psi, &matrix, *tau1, quad)?,
            PeriodSource::None => self.compose(w)?,
        };
        self.table.insert(w.clone(), p.clone());
        Ok(p)
    }
}

/// Coefficientwise distance between `Ω_{AB}` and `Ω_A[B]^N + Ω_B`.
pub fn verify_cocycle(c: &mut PeriodCocycle, a: &GroupWord, b: &GroupWord) -> Result<f64> {
    let ab = a.mul(b);
    let omega_ab = c.period(&ab)?;
    let omega_a = c.period(a)?;
    let omega_b = c.period(b)?;
    let bm = c.group.word_to_matrix(b);
    let rhs = &poly_slash(&omega_a, &bm, c.degree)? + &omega_b;
    Ok(rhs.coefficient_distance(&omega_ab))
}

/// Sample points for derivative identities: ten points around `1.2i`.
pub fn bol_points() -> Vec<C64> {
    (0..10)
        .map(|k| C64::new(0.0, 1.2) + C64::from_polar(0.35, 2.0 * PI * (k as f64 + 0.25) / 10.0))
        .collect()
}

/// Worst relative residual of `f^{(k')}(Az) = f^{(k')}(z)(cz + d)^{2m + 2k'}`
/// over `points`, derivatives from the Cauchy formula with radius `0.3 Im`.
///
/// Each residual is `|L - R| / max(|L|, |R|, |f(z)|)`.
pub fn bol_check(f: &HoloFn, a: &MoebiusMap, m: i32, k_prime: usize, points: &[C64]) -> Result<f64> {
    let weight = 2 * m + 2 * k_prime as i32;
    let mut worst: f64 = 0.0;
    for &z in points {
        let az = a.apply(z)?;
        let lhs = cauchy_derivative(|s| f(s), az, k_prime, 0.3 * az.im)?;
        let rhs = cauchy_derivative(|s| f(s), z, k_prime, 0.3 * z.im)? * a.automorphy_factor(z).powi(weight);
        let scale = lhs.norm().max(rhs.norm()).max(f(z).norm());
        worst = worst.max((lhs - rhs).norm() / scale);
    }
    Ok(worst)
}

/// A weight-`2m` automorphic function for a conjugate of the cyclic model.
///
/// `z^s` with `s = -m + iπ/ln λ` satisfies `f(λ²z) = f(z) λ^{-2m}`; it is
/// carried to the conjugated generator `C⁻¹ diag(λ, 1/λ) C` by the weight
/// `2m` slash with the rotation `C` about `i` by `theta`. Returns the
/// function and the conjugated generator.
pub fn conjugated_cyclic_function(lambda: f64, m: i32, theta: f64) -> Result<(HoloFn, MoebiusMap)> {
    if !(lambda > 1.0) {
        return Err(Error::Precondition(format!("lambda must exceed 1, got {lambda}")));
    }
    let s = C64::new(-(m as f64), PI / lambda.ln());
    let rot = MoebiusMap::rotation_about_i(theta);
    let generator = rot.inverse().compose(&MoebiusMap::dilation(lambda)).compose(&rot);
    let base = holo(move |z: C64| (s * z.ln()).exp());
    Ok((crate::moebius::slash(base, rot, 2 * m), generator))
}

/// Residuals of the derivative identity for `k' = 1..=max_order` on the
/// conjugated cyclic model.
pub fn bol_sweep(lambda: f64, m: i32, max_order: usize) -> Result<Vec<(usize, f64)>> {
    let (f, a) = conjugated_cyclic_function(lambda, m, 0.7)?;
    let pts = bol_points();
    (1..=max_order).map(|k| Ok((k, bol_check(&f, &a, m, k, &pts)?))).collect()
}

/// Polynomial `P` with `Φ_new - Φ_old = P`, fitted on the period nodes.
pub fn base_point_shift(old: &EichlerIntegral, new: &EichlerIntegral) -> Result<BoundedPoly> {
    let samples = fit_nodes(old.degree())
        .into_iter()
        .map(|t| Ok((t, new.eval(t)? - old.eval(t)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(fit_poly(&samples, old.degree())?.poly)
}
