//! Genus-2 curves `y² = ∏(x - e_k)` with six real branch points: periods of
//! `dx/y` and `x dx/y` and the classical bilinear relations.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moebius::C64;

pub const MIN_BRANCH_GAP: f64 = 1e-6;
/// Relative change between successive trapezoid refinements accepted as converged.
pub const PERIOD_TOL: f64 = 1e-13;
const MAX_NODES: usize = 1 << 16;
const START_NODES: usize = 32;

/// Sign of `c₄` in `b₁ = c₂ + s·c₄`; fixed on the default curve by relation (1).
pub const B1_C4_SIGN: i64 = 1;
const TRACK_STEPS: usize = 4096;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperellipticCurve {
    branch_points: [f64; 6],
}

impl HyperellipticCurve {
    /// Sorts the points and checks they are finite and separated.
    pub fn new(mut points: [f64; 6]) -> Result<Self> {
        if points.iter().any(|e| !e.is_finite()) {
            return Err(Error::ConstructionFailure("branch points must be finite".into()));
        }
        points.sort_by(f64::total_cmp);
        let gap = points.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        if gap <= MIN_BRANCH_GAP {
            return Err(Error::ConstructionFailure(format!("branch points closer than {MIN_BRANCH_GAP} (gap {gap:.3e})")));
        }
        Ok(Self { branch_points: points })
    }

    /// `y² = x(x-1)(x-2)(x-3)(x-4)(x-5)`.
    pub fn default_curve() -> Self {
        Self { branch_points: [0.0, 1.0, 2.0, 3.0, 4.0, 5.0] }
    }

    pub fn branch_points(&self) -> [f64; 6] {
        self.branch_points
    }

    /// `∏(x - e_k)`.
    pub fn polynomial(&self, x: C64) -> C64 {
        self.branch_points.iter().map(|&e| x - e).product()
    }

    /// `∏ √(x - e_k)` with principal roots: the sheet used on the upper half-plane.
    pub fn principal_y(&self, x: C64) -> C64 {
        self.branch_points.iter().map(|&e| (x - e).sqrt()).product()
    }

    /// Centre and radius of the circle `c_j` (`j ∈ 1..=5`) enclosing
    /// `[e_j, e_{j+1}]` and no other branch point.
    pub fn loop_circle(&self, j: usize) -> (f64, f64) {
        assert!((1..=5).contains(&j), "loop index {j} outside 1..=5");
        let e = &self.branch_points;
        let (lo, hi) = (e[j - 1], e[j]);
        let mut clearance = f64::INFINITY;
        if j >= 2 {
            clearance = clearance.min(lo - e[j - 2]);
        }
        if j <= 4 {
            clearance = clearance.min(e[j + 1] - hi);
        }
        ((lo + hi) / 2.0, (hi - lo) / 2.0 + clearance / 2.0)
    }

    /// `y` on the circle `c_j`, continuous along it and equal to
    /// [`principal_y`](Self::principal_y) at the top of the circle.
    pub fn loop_y(&self, j: usize, x: C64) -> C64 {
        let (mid, r) = self.loop_circle(j);
        let top = C64::new(mid, r);
        // The two products differ by a fourth root of unity.
        let ratio = self.principal_y(top) / self.loop_y_raw(j, top);
        let unit = [C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(-1.0, 0.0), C64::new(0.0, -1.0)]
            .into_iter()
            .min_by(|u, v| (ratio - u).norm().total_cmp(&(ratio - v).norm()))
            .expect("four candidates");
        unit * self.loop_y_raw(j, x)
    }

    fn loop_y_raw(&self, j: usize, x: C64) -> C64 {
        let e = &self.branch_points;
        let mid = (e[j - 1] + e[j]) / 2.0;
        let h = (e[j] - e[j - 1]) / 2.0;
        let u = x - mid;
        let mut y = u * (C64::new(1.0, 0.0) - h * h / (u * u)).sqrt();
        for (k, &ek) in e.iter().enumerate() {
            if k + 1 < j {
                y *= (x - ek).sqrt();
            } else if k > j {
                y *= (ek - x).sqrt();
            }
        }
        y
    }

    /// `∮_{c_j} x^p dx / y` by the trapezoid rule with `n` nodes.
    pub fn loop_period_nodes(&self, j: usize, p: u32, n: usize) -> C64 {
        let (mid, r) = self.loop_circle(j);
        let step = std::f64::consts::TAU / n as f64;
        let sum: C64 = (0..n)
            .map(|k| {
                let w = C64::from_polar(r, k as f64 * step);
                let x = mid + w;
                x.powu(p) * C64::new(0.0, 1.0) * w / self.loop_y(j, x)
            })
            .sum();
        sum * step
    }

    /// `∮_{c_j} x^p dx / y`, doubling the node count until successive values agree.
    pub fn loop_period(&self, j: usize, p: u32) -> Result<C64> {
        converge(|n| self.loop_period_nodes(j, p, n))
    }

    /// Values of `y` at `TRACK_STEPS` equally spaced angles on the circle
    /// `|x - centre| = radius`, continued step by step from the principal
    /// value at angle 0; the last entry is the value after a full turn.
    fn tracked(&self, centre: C64, radius: f64) -> Result<Vec<C64>> {
        let mut y = self.principal_y(centre + radius);
        let mut out = Vec::with_capacity(TRACK_STEPS + 1);
        out.push(y);
        for k in 1..=TRACK_STEPS {
            let x = centre + C64::from_polar(radius, std::f64::consts::TAU * k as f64 / TRACK_STEPS as f64);
            y = self.continue_y(y, x)?;
            out.push(y);
        }
        Ok(out)
    }

    /// Ratio of the continued value of `y` after one turn around the circle
    /// to its starting value: `±1` when tracking succeeds.
    pub fn monodromy(&self, centre: C64, radius: f64) -> Result<C64> {
        let ys = self.tracked(centre, radius)?;
        Ok(ys[TRACK_STEPS] / ys[0])
    }

    fn continue_y(&self, prev: C64, x: C64) -> Result<C64> {
        let root = self.polynomial(x).sqrt();
        let (near, far) = if (root - prev).norm() <= (root + prev).norm() { (root, -root) } else { (-root, root) };
        if (near - prev).norm() > 0.25 * (far - prev).norm() {
            return Err(Error::BranchTrackingFailure(format!("ambiguous continuation at x = {x}")));
        }
        Ok(near)
    }

    /// `∮ x^p dx / y` around a circle enclosing all six branch points with
    /// `y` continued step by step; vanishes for holomorphic differentials.
    pub fn enclosing_integral(&self, p: u32) -> Result<C64> {
        let e = &self.branch_points;
        let centre = C64::new((e[0] + e[5]) / 2.0, 0.0);
        let radius = (e[5] - e[0]) / 2.0 + 1.0;
        let ys = self.tracked(centre, radius)?;
        let ratio = ys[TRACK_STEPS] / ys[0];
        if (ratio - 1.0).norm() > 1e-8 {
            return Err(Error::BranchTrackingFailure(format!("y does not return to itself around all branch points (ratio {ratio})")));
        }
        let at_nodes = |n: usize| {
            let stride = TRACK_STEPS / n;
            let step = std::f64::consts::TAU / n as f64;
            let sum: C64 = (0..n)
                .map(|k| {
                    let w = C64::from_polar(radius, k as f64 * step);
                    (centre + w).powu(p) * C64::new(0.0, 1.0) * w / ys[k * stride]
                })
                .sum();
            sum * step
        };
        let mut n = START_NODES;
        let mut prev = at_nodes(n);
        while n < TRACK_STEPS {
            n *= 2;
            let next = at_nodes(n);
            if (next - prev).norm() <= PERIOD_TOL * (1.0 + next.norm()) {
                return Ok(next);
            }
            prev = next;
        }
        Err(Error::ToleranceNotMet { tol: PERIOD_TOL, estimate: (prev - at_nodes(n / 2)).norm() })
    }

    /// All loop periods `[c₁..c₅]` of `x^p dx/y`, computed in parallel.
    pub fn loop_periods(&self, p: u32) -> Result<[C64; 5]> {
        let v = (1..=5usize).into_par_iter().map(|j| self.loop_period(j, p)).collect::<Result<Vec<_>>>()?;
        Ok([v[0], v[1], v[2], v[3], v[4]])
    }
}

fn converge(f: impl Fn(usize) -> C64) -> Result<C64> {
    let mut n = START_NODES;
    let mut prev = f(n);
    let mut change = f64::INFINITY;
    while n < MAX_NODES {
        n *= 2;
        let next = f(n);
        change = (next - prev).norm();
        if change <= PERIOD_TOL * (1.0 + next.norm()) {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::ToleranceNotMet { tol: PERIOD_TOL, estimate: change })
}

/// Integer coordinates of `a₁, a₂, b₁, b₂` in the loops `c₁..c₅`.
pub type CycleBasis = [[i64; 5]; 4];

/// `a₁ = c₁`, `a₂ = c₃`, `b₁ = c₂ + s·c₄`, `b₂ = c₄` with `s` = [`B1_C4_SIGN`].
pub fn canonical_basis() -> CycleBasis {
    [[1, 0, 0, 0, 0], [0, 0, 1, 0, 0], [0, 1, 0, B1_C4_SIGN, 0], [0, 0, 0, 1, 0]]
}

/// `Π[j][i] = ∫_{cycle i} ω_j` for `ω₁ = dx/y`, `ω₂ = x dx/y` and cycles `a₁, a₂, b₁, b₂`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodMatrix(pub [[C64; 4]; 2]);

impl PeriodMatrix {
    pub fn a(&self, form: usize, i: usize) -> C64 {
        self.0[form][i]
    }

    pub fn b(&self, form: usize, i: usize) -> C64 {
        self.0[form][2 + i]
    }

    /// Reverses every b-cycle.
    pub fn flip_b(&self) -> Self {
        let mut p = self.clone();
        for row in p.0.iter_mut() {
            row[2] = -row[2];
            row[3] = -row[3];
        }
        p
    }

    /// Periods over the cycles `M·(a₁, a₂, b₁, b₂)`.
    pub fn change_basis(&self, m: &[[i64; 4]; 4]) -> Self {
        let mut out = [[C64::new(0.0, 0.0); 4]; 2];
        for (f, row) in self.0.iter().enumerate() {
            for (i, mi) in m.iter().enumerate() {
                out[f][i] = mi.iter().zip(row).map(|(&c, v)| v * c as f64).sum();
            }
        }
        Self(out)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

pub fn period_matrix_in(curve: &HyperellipticCurve, basis: &CycleBasis) -> Result<PeriodMatrix> {
    let loops = [curve.loop_periods(0)?, curve.loop_periods(1)?];
    Ok(assemble(&loops, basis))
}

/// Period matrix from loop integrals with a fixed node count.
pub fn period_matrix_nodes(curve: &HyperellipticCurve, basis: &CycleBasis, n: usize) -> PeriodMatrix {
    let loops = [0u32, 1].map(|p| {
        let mut v = [C64::new(0.0, 0.0); 5];
        for (j, slot) in v.iter_mut().enumerate() {
            *slot = curve.loop_period_nodes(j + 1, p, n);
        }
        v
    });
    assemble(&loops, basis)
}

fn assemble(loops: &[[C64; 5]; 2], basis: &CycleBasis) -> PeriodMatrix {
    let mut out = [[C64::new(0.0, 0.0); 4]; 2];
    for f in 0..2 {
        for (i, coords) in basis.iter().enumerate() {
            out[f][i] = coords.iter().zip(&loops[f]).map(|(&c, v)| v * c as f64).sum();
        }
    }
    PeriodMatrix(out)
}

/// Checks that the enclosing contour integrals vanish, then returns the
/// period matrix in the canonical basis.
pub fn period_matrix(curve: &HyperellipticCurve) -> Result<PeriodMatrix> {
    let pm = period_matrix_in(curve, &canonical_basis())?;
    let scale = 1.0 + pm.max_abs();
    for p in [0, 1] {
        let v = curve.enclosing_integral(p)?;
        if v.norm() > 1e-8 * scale {
            return Err(Error::BranchTrackingFailure(format!("enclosing integral of x^{p} dx/y is {v}")));
        }
    }
    Ok(pm)
}

fn relation_sum(pm: &PeriodMatrix, f: usize, h: usize) -> C64 {
    (0..2).map(|i| pm.a(f, i) * pm.b(h, i) - pm.a(h, i) * pm.b(f, i)).sum()
}

/// Largest `|Σᵢ(Πᵢ(φ)Π_{g+i}(ψ) - Πᵢ(ψ)Π_{g+i}(φ))|` over basis pairs,
/// relative to the squared period scale.
pub fn riemann_relation_1(pm: &PeriodMatrix) -> f64 {
    let scale = pm.max_abs().powi(2).max(f64::MIN_POSITIVE);
    let mut worst: f64 = 0.0;
    for f in 0..2 {
        for h in 0..2 {
            worst = worst.max(relation_sum(pm, f, h).norm());
        }
    }
    worst / scale
}

/// `H[φ,ψ] = i·Σᵢ(Πᵢ(φ)·conj(Π_{g+i}(ψ)) - conj(Πᵢ(ψ))·Π_{g+i}(φ))`.
pub fn hermitian_form(pm: &PeriodMatrix) -> [[C64; 2]; 2] {
    let i = C64::new(0.0, 1.0);
    let mut h = [[C64::new(0.0, 0.0); 2]; 2];
    for (f, row) in h.iter_mut().enumerate() {
        for (g, slot) in row.iter_mut().enumerate() {
            *slot = i * (0..2)
                .map(|k| pm.a(f, k) * pm.b(g, k).conj() - pm.a(g, k).conj() * pm.b(f, k))
                .sum::<C64>();
        }
    }
    h
}

/// Smallest eigenvalue of [`hermitian_form`].
pub fn riemann_relation_2(pm: &PeriodMatrix) -> f64 {
    let h = hermitian_form(pm);
    let (p, q) = (h[0][0].re, h[1][1].re);
    let off = (h[0][1] + h[1][0].conj()) / 2.0;
    (p + q) / 2.0 - (((p - q) / 2.0).powi(2) + off.norm_sqr()).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicalReport {
    pub branch_points: [f64; 6],
    pub period_matrix: PeriodMatrix,
    pub rel1_residual: f64,
    pub rel2_min_eig: f64,
    pub orientation_flipped: bool,
}

/// Both relations in the canonical basis, reversing the b-cycles once if the
/// Hermitian form comes out negative.
pub fn classical_report(curve: &HyperellipticCurve) -> Result<ClassicalReport> {
    let mut pm = period_matrix(curve)?;
    let mut flipped = false;
    if riemann_relation_2(&pm) < 0.0 {
        pm = pm.flip_b();
        flipped = true;
    }
    Ok(ClassicalReport {
        branch_points: curve.branch_points(),
        rel1_residual: riemann_relation_1(&pm),
        rel2_min_eig: riemann_relation_2(&pm),
        period_matrix: pm,
        orientation_flipped: flipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// `-2·i^{j-6} ∫_{e_j}^{e_{j+1}} x^p/|y| dx` via `x = mid - h cos θ`, which
    /// removes the endpoint singularities.
    fn segment_oracle(e: &[f64; 6], j: usize, p: i32) -> C64 {
        let (lo, hi) = (e[j - 1], e[j]);
        let (mid, h) = ((lo + hi) / 2.0, (hi - lo) / 2.0);
        let n = 4000;
        let step = std::f64::consts::PI / n as f64;
        let mut sum = 0.0;
        for k in 0..=n {
            let x = mid - h * (k as f64 * step).cos();
            let others: f64 = e
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != j - 1 && i != j)
                .map(|(_, &ek)| (x - ek).abs().sqrt())
                .product();
            let w = if k == 0 || k == n { 0.5 } else { 1.0 };
            sum += w * x.powi(p) / others;
        }
        -2.0 * C64::new(0.0, 1.0).powi(j as i32 - 6) * sum * step
    }

    #[test]
    fn loop_periods_match_segment_integrals() {
        for pts in [[0.0, 1.0, 2.0, 3.0, 4.0, 5.0], [-3.0, -2.9, -0.1, 0.2, 4.0, 9.0]] {
            let c = HyperellipticCurve::new(pts).unwrap();
            for p in [0, 1] {
                let loops = c.loop_periods(p).unwrap();
                for j in 1..=5 {
                    let want = segment_oracle(&pts, j, p as i32);
                    assert!((loops[j - 1] - want).norm() < 1e-9 * (1.0 + want.norm()), "j={j} p={p}: {} vs {want}", loops[j - 1]);
                }
            }
        }
    }

    #[test]
    fn close_branch_points_are_rejected() {
        assert!(HyperellipticCurve::new([0.0, 1.0, 1.0 + 1e-7, 3.0, 4.0, 5.0]).is_err());
        assert!(HyperellipticCurve::new([0.0, 1.0, f64::NAN, 3.0, 4.0, 5.0]).is_err());
    }

    #[test]
    fn enclosing_contour_vanishes() {
        let c = HyperellipticCurve::default_curve();
        for p in [0, 1] {
            assert!(c.enclosing_integral(p).unwrap().norm() < 1e-12);
        }
    }

    #[test]
    fn sheet_monodromy() {
        let c = HyperellipticCurve::default_curve();
        let one = c.monodromy(C64::new(0.0, 0.0), 0.5).unwrap();
        assert!((one + 1.0).norm() < 1e-10);
        let two = c.monodromy(C64::new(0.5, 0.0), 0.8).unwrap();
        assert!((two - 1.0).norm() < 1e-10);
        let three = c.monodromy(C64::new(1.0, 0.0), 1.4).unwrap();
        assert!((three + 1.0).norm() < 1e-10);
    }

    #[test]
    fn a1_period_is_stable_under_refinement() {
        let c = HyperellipticCurve::default_curve();
        let coarse = c.loop_period_nodes(1, 0, 256);
        let fine = c.loop_period_nodes(1, 0, 512);
        assert!(coarse.norm() > 0.1);
        assert!((coarse - fine).norm() < 1e-9);
    }

    #[test]
    fn default_curve_relations() {
        let r = classical_report(&HyperellipticCurve::default_curve()).unwrap();
        assert!(r.rel1_residual < 1e-8, "{}", r.rel1_residual);
        assert!(r.rel2_min_eig > 0.0);
        assert!(!r.orientation_flipped);
        assert!(riemann_relation_2(&r.period_matrix.flip_b()) < 0.0);
    }

    #[test]
    fn other_b1_sign_breaks_relation_one() {
        let c = HyperellipticCurve::default_curve();
        let mut basis = canonical_basis();
        basis[2][3] = -B1_C4_SIGN;
        assert!(riemann_relation_1(&period_matrix_in(&c, &basis).unwrap()) > 1e-3);
    }

    #[test]
    fn relation_one_is_antisymmetric() {
        let pm = period_matrix(&HyperellipticCurve::default_curve()).unwrap();
        let same = PeriodMatrix([pm.0[0], pm.0[0]]);
        assert_eq!(riemann_relation_1(&same), 0.0);
    }

    #[test]
    fn hermitian_form_is_hermitian() {
        let pm = period_matrix(&HyperellipticCurve::default_curve()).unwrap();
        let h = hermitian_form(&pm);
        for f in 0..2 {
            for g in 0..2 {
                assert!((h[f][g] - h[g][f].conj()).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn relation_one_converges_with_nodes() {
        let c = HyperellipticCurve::default_curve();
        let mut prev = riemann_relation_1(&period_matrix_nodes(&c, &canonical_basis(), 16));
        for n in [32, 64] {
            let next = riemann_relation_1(&period_matrix_nodes(&c, &canonical_basis(), n));
            assert!(next <= prev / 1e2 || next < 1e-13, "n={n}: {prev:.3e} -> {next:.3e}");
            prev = next;
        }
    }

    #[test]
    fn symmetric_curve_periods() {
        let c = HyperellipticCurve::new([-2.5, -1.5, -0.5, 0.5, 1.5, 2.5]).unwrap();
        for p in [0u32, 1] {
            let loops = c.loop_periods(p).unwrap();
            // x ↦ -x sends c_j to c_{6-j}; the sheet factor i^{j-6} and x^p give the sign.
            for j in 1..=5usize {
                let sign = if (j + 1 + p as usize) % 2 == 0 { 1.0 } else { -1.0 };
                let d = (loops[5 - j] - sign * loops[j - 1]).norm();
                assert!(d < 1e-8, "p={p} j={j}: {d:.3e}");
            }
        }
    }

    #[test]
    fn random_curves_satisfy_relations() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let mut pts = [0.0; 6];
            let mut x = rng.gen_range(-5.0..0.0);
            for slot in pts.iter_mut() {
                x += rng.gen_range(0.2..2.0);
                *slot = x;
            }
            let r = classical_report(&HyperellipticCurve::new(pts).unwrap()).unwrap();
            assert!(r.rel1_residual < 1e-7, "{pts:?}: {}", r.rel1_residual);
            assert!(r.rel2_min_eig > 0.0);
        }
    }

    fn random_symplectic(rng: &mut ChaCha8Rng) -> [[i64; 4]; 4] {
        let mul = |a: &[[i64; 4]; 4], b: &[[i64; 4]; 4]| {
            let mut c = [[0; 4]; 4];
            for i in 0..4 {
                for j in 0..4 {
                    c[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
                }
            }
            c
        };
        let mut m = [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]];
        for _ in 0..6 {
            let s = [rng.gen_range(-2..=2), rng.gen_range(-2..=2), rng.gen_range(-2..=2)];
            let mut t = [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]];
            // (I S; 0 I) or (I 0; S I) with S symmetric.
            let (r0, c0) = if rng.gen_bool(0.5) { (0, 2) } else { (2, 0) };
            t[r0][c0] = s[0];
            t[r0 + 1][c0 + 1] = s[1];
            t[r0][c0 + 1] = s[2];
            t[r0 + 1][c0] = s[2];
            m = mul(&t, &m);
        }
        m
    }

    #[test]
    fn symplectic_basis_change_preserves_relations() {
        let pm = period_matrix(&HyperellipticCurve::default_curve()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let m = random_symplectic(&mut rng);
            let moved = pm.change_basis(&m);
            let rel1 = riemann_relation_1(&moved) * moved.max_abs().powi(2) / pm.max_abs().powi(2);
            assert!(rel1 < 1e-9, "{m:?}: {rel1:.3e}");
            assert!(riemann_relation_2(&moved) > 0.0);
        }
    }
}
