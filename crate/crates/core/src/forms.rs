//! Automorphic forms of weight `k = 2 - 2m`.
//!
//! Three backends: truncated Poincaré series on a surface group, the exact
//! power function on the cyclic model, and arbitrary non-automorphic test
//! functions used to exercise formal identities.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fuchsian::{enumerate_ball, standard_polygon, EnumerationOptions, FundamentalOctagon, GroupModel, SurfaceGroup};
use crate::moebius::{holo, HoloFn, MoebiusMap, C64};

/// Orbit terms summed per chunk; chunk sums are added in element order, so
/// the result is the same with or without the thread pool.
const ORBIT_CHUNK: usize = 256;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Backend {
    Poincare { radius: f64, seed: u32 },
    Cyclic { lambda: f64 },
    TestFn { label: String },
}

/// Evaluatable weight-`(2 - 2m)` function with its automorphy bookkeeping.
#[derive(Clone)]
pub struct FormHandle {
    m: i32,
    group: Option<Arc<SurfaceGroup>>,
    backend: Backend,
    eval: HoloFn,
    defect_estimate: f64,
}

impl fmt::Debug for FormHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FormHandle")
            .field("m", &self.m)
            .field("backend", &self.backend)
            .field("defect_estimate", &self.defect_estimate)
            .finish()
    }
}

impl FormHandle {
    pub fn m(&self) -> i32 {
        self.m
    }

    /// `k = 2 - 2m`.
    pub fn weight(&self) -> i32 {
        2 - 2 * self.m
    }

    /// `N = -2m`, the degree bound of the period polynomials.
    pub fn degree(&self) -> usize {
        (-2 * self.m) as usize
    }

    pub fn group(&self) -> Option<&Arc<SurfaceGroup>> {
        self.group.as_ref()
    }

    pub fn backend(&self) -> &Backend {
        &self.backend
    }

    pub fn defect_estimate(&self) -> f64 {
        self.defect_estimate
    }

    pub fn eval(&self, z: C64) -> C64 {
        (self.eval)(z)
    }

    pub fn evaluator(&self) -> HoloFn {
        self.eval.clone()
    }

    pub fn is_automorphic(&self) -> bool {
        !matches!(self.backend, Backend::TestFn { .. })
    }
}

fn check_weight(m: i32) -> Result<()> {
    if m > -1 {
        return Err(Error::Precondition(format!(
            "automorphic backends need m <= -1 (weight >= 4), got m = {m}"
        )));
    }
    if m < -10 {
        return Err(Error::Precondition(format!("m = {m} is below the supported range m >= -10")));
    }
    Ok(())
}

/// The disk coordinate `(z - i)/(z + i)`, bounded by one on the half-plane.
pub fn disk_seed(z: C64) -> C64 {
    let i = C64::new(0.0, 1.0);
    (z - i) / (z + i)
}

/// Truncated Poincaré series `Σ_{A in ball(R)} h(Az) (cz + d)^{-k}` with
/// seed `h(z) = (2i/(z + i))^k w(z)^ν`, `w` the disk coordinate.
///
/// This is the disk-model series `Σ (w^ν ∘ A) (A')^{k/2}` carried to the
/// half-plane; the factor `(2i/(z + i))^k` keeps it absolutely convergent
/// for `k > 2`.
///
/// The stored defect estimate is twice the largest [`invariant_defect`] seen
/// on a fixed panel of points (polygon vertices, edge midpoints, points
/// around the centre and the period-fit circle) under every generator and
/// inverse.
pub fn poincare_form(group: &Arc<SurfaceGroup>, m: i32, seed: u32, radius: f64) -> Result<FormHandle> {
    poincare_form_with(group, m, seed, radius, EnumerationOptions::default(), false)
}

pub fn poincare_form_with(
    group: &Arc<SurfaceGroup>,
    m: i32,
    seed: u32,
    radius: f64,
    opts: EnumerationOptions,
    parallel: bool,
) -> Result<FormHandle> {
    check_weight(m)?;
    let ball = enumerate_ball(group, radius, opts)?;
    let elements: Arc<Vec<MoebiusMap>> = Arc::new(ball.matrices());
    let k = 2 - 2 * m;
    let two_i = C64::new(0.0, 2.0);
    // (Az + i)(cz + d) = (a + ic)z + (b + id), (Az - i)(cz + d) = (a - ic)z + (b - id)
    let term = move |a: &MoebiusMap, z: C64| {
        let plus = C64::new(a.a, a.c) * z + C64::new(a.b, a.d);
        let base = (two_i / plus).powi(k);
        if seed == 0 {
            base
        } else {
            let minus = C64::new(a.a, -a.c) * z + C64::new(a.b, -a.d);
            (minus / plus).powu(seed) * base
        }
    };
    let sum_chunk = move |chunk: &[MoebiusMap], z: C64| chunk.iter().fold(C64::new(0.0, 0.0), |s, a| s + term(a, z));
    let els = elements.clone();
    let eval: HoloFn = if parallel {
        holo(move |z| {
            let parts: Vec<C64> = els.par_chunks(ORBIT_CHUNK).map(|c| sum_chunk(c, z)).collect();
            parts.into_iter().fold(C64::new(0.0, 0.0), |s, p| s + p)
        })
    } else {
        holo(move |z| els.chunks(ORBIT_CHUNK).fold(C64::new(0.0, 0.0), |s, c| s + sum_chunk(c, z)))
    };
    let mut form = FormHandle {
        m,
        group: Some(group.clone()),
        backend: Backend::Poincare { radius, seed },
        eval,
        defect_estimate: 0.0,
    };
    let panel = defect_panel(group)?;
    form.defect_estimate = 2.0 * max_defect(&form, &panel);
    if !form.defect_estimate.is_finite() {
        return Err(Error::Precondition("Poincaré series evaluation is not finite".into()));
    }
    Ok(form)
}

/// Exact form `z^{-k/2}` on the cyclic model `⟨diag(λ, 1/λ)⟩`.
pub fn cyclic_form(lambda: f64, m: i32) -> Result<FormHandle> {
    check_weight(m)?;
    let group = crate::fuchsian::cyclic_group(lambda)?;
    let half = m - 1;
    Ok(FormHandle {
        m,
        group: Some(group),
        backend: Backend::Cyclic { lambda },
        eval: holo(move |z| z.powi(half)),
        defect_estimate: 0.0,
    })
}

/// A function treated as having weight `2 - 2m` without being automorphic.
pub fn test_fn(m: i32, label: &str, f: HoloFn) -> FormHandle {
    FormHandle { m, group: None, backend: Backend::TestFn { label: label.to_string() }, eval: f, defect_estimate: 0.0 }
}

pub fn zero_form(m: i32) -> FormHandle {
    test_fn(m, "zero", holo(|_| C64::new(0.0, 0.0)))
}

/// `|f(Az) - f(z)(cz + d)^k| / (1 + |f(z)|)`.
pub fn automorphy_defect(f: &FormHandle, a: &MoebiusMap, z: C64) -> f64 {
    let fz = f.eval(z);
    let faz = f.eval(a.act(z));
    (faz - fz * a.automorphy_factor(z).powi(f.weight())).norm() / (1.0 + fz.norm())
}

/// Sample points used for defect estimates.
pub fn defect_panel(group: &Arc<SurfaceGroup>) -> Result<Vec<C64>> {
    let mut pts: Vec<C64> = (0..8)
        .map(|k| C64::new(0.0, 1.0) + C64::from_polar(0.3, std::f64::consts::TAU * k as f64 / 8.0))
        .collect();
    pts.extend(crate::polyspace::fit_nodes(2));
    if let GroupModel::Surface { .. } = group.model {
        pts.extend(polygon_panel(&standard_polygon(group)?));
    }
    Ok(pts)
}

fn polygon_panel(polygon: &FundamentalOctagon) -> Vec<C64> {
    let v = &polygon.vertices;
    let mut pts: Vec<C64> = v[..v.len() - 1].to_vec();
    pts.extend(v.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    pts
}

/// `max |f(z)| Im(z)^{k/2}` over `points`, a group-invariant size.
pub fn invariant_norm(f: &FormHandle, points: &[C64]) -> f64 {
    let half = 0.5 * f.weight() as f64;
    points.iter().map(|z| f.eval(*z).norm() * z.im.powf(half)).fold(0.0, f64::max)
}

/// Automorphy defect measured in the invariant size `|f| Im^{k/2}` and
/// relative to `norm`: `|f(Az) - f(z)(cz + d)^k| Im(Az)^{k/2} / norm`.
pub fn invariant_defect(f: &FormHandle, a: &MoebiusMap, z: C64, norm: f64) -> f64 {
    let az = a.act(z);
    let diff = f.eval(az) - f.eval(z) * a.automorphy_factor(z).powi(f.weight());
    diff.norm() * az.im.powf(0.5 * f.weight() as f64) / norm
}

fn invariant_defects(f: &FormHandle, points: &[C64]) -> Vec<f64> {
    let Some(group) = f.group() else { return vec![f64::INFINITY] };
    let norm = invariant_norm(f, points);
    let mut all = Vec::new();
    for l in group.letters() {
        let a = group.letter_matrix(l);
        all.extend(points.iter().map(|&z| invariant_defect(f, &a, z, norm)));
    }
    all
}

/// Largest invariant defect over `points` and every generator and inverse.
pub fn max_defect(f: &FormHandle, points: &[C64]) -> f64 {
    invariant_defects(f, points).into_iter().fold(0.0, f64::max)
}

/// Median invariant defect over `points` and every generator and inverse.
pub fn median_defect(f: &FormHandle, points: &[C64]) -> f64 {
    let mut all = invariant_defects(f, points);
    all.sort_by(f64::total_cmp);
    all[all.len() / 2]
}

/// Condition number of the Gram matrix of the forms sampled at `points`.
pub fn sample_gram_condition(forms: &[&FormHandle], points: &[C64]) -> f64 {
    let s = DMatrix::from_fn(points.len(), forms.len(), |r, c| forms[c].eval(points[r]));
    let gram = s.adjoint() * &s;
    let sv = gram.singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}
