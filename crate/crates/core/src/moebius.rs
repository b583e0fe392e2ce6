//! Real Möbius transformations of the upper half-plane.
//!
//! A [`MoebiusMap`] is a real 2×2 matrix of determinant one acting by
//! `z ↦ (az + b)/(cz + d)`. The automorphy factor `cz + d` and the slash
//! operator `f ↦ f(Az)(cz + d)^{-n}` are the only pieces of the action the
//! rest of the crate needs.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Shareable holomorphic function on the upper half-plane.
pub type HoloFn = Arc<dyn Fn(C64) -> C64 + Send + Sync>;

/// Wraps a closure as a [`HoloFn`].
pub fn holo<F>(f: F) -> HoloFn
where
    F: Fn(C64) -> C64 + Send + Sync + 'static,
{
    Arc::new(f)
}

const DET_TOL: f64 = 1e-12;
const POLE_FLOOR: f64 = 1e-300;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoebiusMap {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl MoebiusMap {
    /// Builds a map from a matrix with positive determinant, rescaling it to
    /// determinant one.
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let det = a * d - b * c;
        if !(det.is_finite() && det > 0.0) {
            return Err(Error::Precondition(format!(
                "matrix determinant must be positive, got {det}"
            )));
        }
        let s = det.sqrt().recip();
        Ok(Self { a: a * s, b: b * s, c: c * s, d: d * s })
    }

    pub const fn identity() -> Self {
        Self { a: 1.0, b: 0.0, c: 0.0, d: 1.0 }
    }

    /// `z ↦ z + t`.
    pub const fn translation(t: f64) -> Self {
        Self { a: 1.0, b: t, c: 0.0, d: 1.0 }
    }

    /// `z ↦ λ² z`, the hyperbolic element `diag(λ, 1/λ)`.
    pub fn dilation(lambda: f64) -> Self {
        Self { a: lambda, b: 0.0, c: 0.0, d: lambda.recip() }
    }

    /// Rotation about `i` with derivative `e^{iθ}` at the fixed point.
    pub fn rotation_about_i(theta: f64) -> Self {
        let (s, c) = (0.5 * theta).sin_cos();
        Self { a: c, b: s, c: -s, d: c }
    }

    /// Hyperbolic translation of length `t` along the imaginary axis
    /// (`z ↦ e^t z`).
    pub fn axial_translation(t: f64) -> Self {
        let h = (0.5 * t).exp();
        Self { a: h, b: 0.0, c: 0.0, d: h.recip() }
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    pub fn is_hyperbolic(&self) -> bool {
        self.trace().abs() > 2.0
    }

    pub fn is_valid(&self) -> bool {
        (self.det() - 1.0).abs() <= DET_TOL * (1.0 + self.max_abs_entry().powi(2))
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.a.abs().max(self.b.abs()).max(self.c.abs()).max(self.d.abs())
    }

    /// `(az + b)/(cz + d)`.
    pub fn apply(&self, z: C64) -> Result<C64> {
        if !(z.im > 0.0) {
            return Err(Error::NearPole { re: z.re, im: z.im });
        }
        let j = self.automorphy_factor(z);
        if j.norm() <= POLE_FLOOR {
            return Err(Error::NearPole { re: z.re, im: z.im });
        }
        Ok((self.a * z + self.b) / j)
    }

    /// Unchecked action for hot loops; the caller guarantees `Im z > 0`.
    #[inline]
    pub fn act(&self, z: C64) -> C64 {
        (self.a * z + self.b) / (self.c * z + self.d)
    }

    #[inline]
    pub fn automorphy_factor(&self, z: C64) -> C64 {
        self.c * z + self.d
    }

    /// Matrix product `self · other`, i.e. `z ↦ self(other(z))`, renormalized
    /// to determinant one.
    pub fn compose(&self, other: &Self) -> Self {
        let a = self.a * other.a + self.b * other.c;
        let b = self.a * other.b + self.b * other.d;
        let c = self.c * other.a + self.d * other.c;
        let d = self.c * other.b + self.d * other.d;
        let det = a * d - b * c;
        let s = det.sqrt().recip();
        Self { a: a * s, b: b * s, c: c * s, d: d * s }
    }

    pub fn inverse(&self) -> Self {
        Self { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }

    /// Representative of `±A` with non-negative trace.
    pub fn sign_normalized(&self) -> Self {
        if self.trace() < 0.0 {
            Self { a: -self.a, b: -self.b, c: -self.c, d: -self.d }
        } else {
            *self
        }
    }

    /// Entrywise distance between `self` and `±other`.
    pub fn projective_distance(&self, other: &Self) -> f64 {
        let plus = (self.a - other.a)
            .abs()
            .max((self.b - other.b).abs())
            .max((self.c - other.c).abs())
            .max((self.d - other.d).abs());
        let minus = (self.a + other.a)
            .abs()
            .max((self.b + other.b).abs())
            .max((self.c + other.c).abs())
            .max((self.d + other.d).abs());
        plus.min(minus)
    }

    /// Hyperbolic distance between `i` and `A i`.
    pub fn displacement(&self) -> f64 {
        // cosh dist(i, Ai) = (a² + b² + c² + d²)/2 for det 1.
        let ch = 0.5 * (self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d);
        ch.max(1.0).acosh()
    }

    pub fn entries(&self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }
}

impl fmt::Display for MoebiusMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{}, {}], [{}, {}]]", self.a, self.b, self.c, self.d)
    }
}

/// Hyperbolic distance between two points of the upper half-plane.
pub fn hyperbolic_distance(z: C64, w: C64) -> f64 {
    let ch = 1.0 + (z - w).norm_sqr() / (2.0 * z.im * w.im);
    ch.max(1.0).acosh()
}

/// The slash operator `z ↦ f(Az)(cz + d)^{-n}`.
///
/// Right action: `slash(slash(f, A, n), B, n) = slash(f, AB, n)`.
pub fn slash(f: HoloFn, a: MoebiusMap, n: i32) -> HoloFn {
    Arc::new(move |z| {
        let j = a.automorphy_factor(z);
        f(a.act(z)) * j.powi(-n)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn close(x: C64, y: C64, tol: f64) -> bool {
        (x - y).norm() <= tol * (1.0 + x.norm().max(y.norm()))
    }

    #[test]
    fn apply_examples() {
        let z = c(2.0, 3.0);
        assert_eq!(MoebiusMap::identity().apply(z).unwrap(), z);
        assert_eq!(MoebiusMap::translation(1.0).apply(c(0.0, 1.0)).unwrap(), c(1.0, 1.0));
        let a = MoebiusMap::new(2.0, 0.0, 0.0, 0.5).unwrap();
        assert!(close(a.apply(c(0.0, 1.0)).unwrap(), c(0.0, 4.0), 1e-15));
    }

    #[test]
    fn apply_rejects_real_axis() {
        let a = MoebiusMap::translation(1.0);
        assert!(matches!(a.apply(c(1.0, 0.0)), Err(Error::NearPole { .. })));
        assert!(matches!(a.apply(c(1.0, -1.0)), Err(Error::NearPole { .. })));
    }

    #[test]
    fn automorphy_factor_examples() {
        let i = c(0.0, 1.0);
        assert_eq!(MoebiusMap::translation(1.0).automorphy_factor(i), c(1.0, 0.0));
        let s = MoebiusMap::new(0.0, -1.0, 1.0, 0.0).unwrap();
        assert_eq!(s.automorphy_factor(i), i);
        let a = MoebiusMap::dilation(2.0);
        assert_eq!(a.automorphy_factor(c(-3.0, 0.7)), c(0.5, 0.0));
    }

    #[test]
    fn compose_examples() {
        let a = MoebiusMap::new(2.0, 1.0, 3.0, 2.0).unwrap();
        assert_eq!(a.compose(&MoebiusMap::identity()), a);
        let e = a.compose(&a.inverse());
        assert!(e.projective_distance(&MoebiusMap::identity()) < 1e-14);
        let t = MoebiusMap::translation(1.0).compose(&MoebiusMap::translation(1.0));
        assert_eq!(t, MoebiusMap::translation(2.0));
    }

    #[test]
    fn new_normalizes_and_rejects() {
        let a = MoebiusMap::new(4.0, 0.0, 0.0, 1.0).unwrap();
        assert!((a.det() - 1.0).abs() < 1e-15);
        assert!(MoebiusMap::new(0.0, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn rotation_about_i_fixes_i_with_unit_derivative() {
        let r = MoebiusMap::rotation_about_i(0.7);
        let i = c(0.0, 1.0);
        assert!(close(r.act(i), i, 1e-15));
        let deriv = r.automorphy_factor(i).powi(-2);
        assert!(close(deriv, C64::from_polar(1.0, 0.7), 1e-15));
    }

    #[test]
    fn displacement_along_axis() {
        let a = MoebiusMap::dilation(2.0);
        assert!((a.displacement() - 2.0 * 2f64.ln()).abs() < 1e-14);
        let z = a.act(c(0.0, 1.0));
        assert!((hyperbolic_distance(c(0.0, 1.0), z) - a.displacement()).abs() < 1e-13);
    }

    #[test]
    fn slash_examples() {
        let f: HoloFn = holo(|z: C64| z.powi(-2));
        let z = c(0.3, 1.1);
        assert_eq!(slash(f.clone(), MoebiusMap::identity(), 5)(z), f(z));
        // weight-4 automorphy of z^{-2} under z -> 4z
        let g = slash(f.clone(), MoebiusMap::dilation(2.0), 4);
        assert!(close(g(z), f(z), 1e-14));
        let one = slash(holo(|_| C64::new(1.0, 0.0)), MoebiusMap::new(3.0, 1.0, 2.0, 1.0).unwrap(), 0);
        assert_eq!(one(z), C64::new(1.0, 0.0));
    }

    fn arb_map() -> impl Strategy<Value = MoebiusMap> {
        (-2.0f64..2.0, -2.0f64..2.0, -2.0f64..2.0, 0.3f64..2.0).prop_filter_map(
            "positive determinant",
            |(a, b, c, d)| {
                let det = a * d - b * c;
                (det > 0.05).then(|| MoebiusMap::new(a, b, c, d).unwrap())
            },
        )
    }

    fn arb_point() -> impl Strategy<Value = C64> {
        (-3.0f64..3.0, 0.1f64..3.0).prop_map(|(x, y)| C64::new(x, y))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn cross_ratio_identity(a in arb_map(), xi in arb_point(), z in arb_point()) {
            let lhs = a.act(xi) - a.act(z);
            let rhs = (xi - z) / (a.automorphy_factor(xi) * a.automorphy_factor(z));
            prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + lhs.norm()));
        }

        #[test]
        fn automorphy_factor_cocycle(a in arb_map(), b in arb_map(), z in arb_point()) {
            let lhs = a.compose(&b).automorphy_factor(z);
            let rhs = a.automorphy_factor(b.act(z)) * b.automorphy_factor(z);
            prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + lhs.norm()));
        }

        #[test]
        fn action_preserves_upper_half_plane(a in arb_map(), z in arb_point()) {
            prop_assert!(a.apply(z).unwrap().im > 0.0);
        }

        #[test]
        fn compose_is_action(a in arb_map(), b in arb_map(), z in arb_point()) {
            let lhs = a.compose(&b).act(z);
            let rhs = a.act(b.act(z));
            prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + lhs.norm()));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn slash_is_right_action(a in arb_map(), b in arb_map(), z in arb_point(), n in -6i32..6) {
            let f: HoloFn = holo(|z: C64| (z + C64::new(0.5, 2.0)).powi(-3) + z.sin() / (z + C64::new(0.0, 1.0)));
            let lhs = slash(slash(f.clone(), a, 2 * n), b, 2 * n)(z);
            let rhs = slash(f, a.compose(&b), 2 * n)(z);
            prop_assert!((lhs - rhs).norm() <= 1e-10 * (1.0 + lhs.norm()));
        }
    }
}
