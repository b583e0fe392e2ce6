//! Group cohomology `H¹(Γ, M)` for the one-relator surface presentation:
//! cocycle space, coboundaries and numerically audited ranks.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::eichler::PeriodCocycle;
use crate::error::{Error, Result};
use crate::fuchsian::{GroupWord, SurfaceGroup};
use crate::moebius::C64;
use crate::polyspace::{slash_matrix, BoundedPoly};

/// Relative singular-value threshold separating kept from discarded values.
pub const RANK_THRESHOLD: f64 = 1e-8;
/// Minimum accepted ratio between the last kept and first discarded value.
pub const REQUIRED_GAP: f64 = 1e4;
/// Relative residual below which a cocycle counts as a coboundary.
pub const COBOUNDARY_TOL: f64 = 1e-6;

/// Numerical rank together with the singular-value gap it was read off.
#[derive(Clone, Debug, PartialEq)]
pub struct RankReport {
    pub rank: usize,
    pub gap: f64,
    pub singular_values: Vec<f64>,
}

/// Rank of `a` from its singular values. When nothing falls below the
/// threshold the gap is measured against the round-off floor
/// `ε·max(rows, cols)·σ_max`.
pub fn numerical_rank(a: &DMatrix<C64>) -> Result<RankReport> {
    let mut sv: Vec<f64> = a.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    let top = sv.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return Ok(RankReport { rank: 0, gap: f64::INFINITY, singular_values: sv });
    }
    let rank = sv.iter().take_while(|&&s| s > RANK_THRESHOLD * top).count();
    let floor = f64::EPSILON * a.nrows().max(a.ncols()) as f64 * top;
    let gap = match (rank, sv.get(rank)) {
        (0, _) => f64::INFINITY,
        (r, Some(&next)) => sv[r - 1] / next.max(floor),
        (r, None) => sv[r - 1] / floor,
    };
    if gap < REQUIRED_GAP {
        return Err(Error::RankAmbiguous { gap, required: REQUIRED_GAP });
    }
    Ok(RankReport { rank, gap, singular_values: sv })
}

fn complex(m: &DMatrix<f64>) -> DMatrix<C64> {
    m.map(|x| C64::new(x, 0.0))
}

/// Linear maps whose kernel is `Z¹` and whose image is `B¹`, for coefficients
/// in polynomials of degree `≤ -2m`.
#[derive(Clone, Debug)]
pub struct CocycleSystem {
    group: Arc<SurfaceGroup>,
    m: i32,
    relator_map: DMatrix<C64>,
    coboundary_map: DMatrix<C64>,
}

impl CocycleSystem {
    pub fn new(group: &Arc<SurfaceGroup>, m: i32) -> Result<Self> {
        let genus = group
            .genus()
            .ok_or_else(|| Error::UnsupportedGroup("cocycle spaces need a surface group".into()))?;
        if genus < 2 {
            return Err(Error::Precondition(format!("genus {genus} is below 2")));
        }
        if m > 0 || -2 * m > 10 {
            return Err(Error::Precondition(format!("parameter m = {m} outside -5..=0")));
        }
        let degree = (-2 * m) as usize;
        let dim = degree + 1;
        let gens = group.generators().len();

        // Ω_{l₁…l_L} = Σ_i Ω_{l_i}[l_{i+1}…l_L], with Ω_{x⁻¹} = -Ω_x[x⁻¹].
        let relator = group.relator()?;
        let letters = relator.letters();
        let mut relator_map = DMatrix::<f64>::zeros(dim, gens * dim);
        for (i, &l) in letters.iter().enumerate() {
            let suffix = GroupWord::reduce(letters[i + 1..].iter().copied());
            let block = if l.inverse {
                let w = GroupWord::letter(l).mul(&suffix);
                -slash_matrix(&group.word_to_matrix(&w), degree)
            } else {
                slash_matrix(&group.word_to_matrix(&suffix), degree)
            };
            let mut cols = relator_map.columns_mut(l.generator * dim, dim);
            cols += block;
        }

        let mut coboundary_map = DMatrix::<f64>::zeros(gens * dim, dim);
        for (x, a) in group.generators().iter().enumerate() {
            let block = slash_matrix(a, degree) - DMatrix::<f64>::identity(dim, dim);
            coboundary_map.rows_mut(x * dim, dim).copy_from(&block);
        }

        Ok(Self {
            group: group.clone(),
            m,
            relator_map: complex(&relator_map),
            coboundary_map: complex(&coboundary_map),
        })
    }

    pub fn group(&self) -> &Arc<SurfaceGroup> {
        &self.group
    }

    pub fn m(&self) -> i32 {
        self.m
    }

    pub fn degree(&self) -> usize {
        (-2 * self.m) as usize
    }

    pub fn relator_map(&self) -> &DMatrix<C64> {
        &self.relator_map
    }

    pub fn coboundary_map(&self) -> &DMatrix<C64> {
        &self.coboundary_map
    }

    /// Stacks generator values into one coordinate vector.
    pub fn flatten(&self, values: &[BoundedPoly]) -> Result<DVector<C64>> {
        let dim = self.degree() + 1;
        if values.len() != self.group.generators().len() {
            return Err(Error::Precondition(format!(
                "{} generator values for {} generators",
                values.len(),
                self.group.generators().len()
            )));
        }
        let mut v = DVector::<C64>::zeros(values.len() * dim);
        for (x, p) in values.iter().enumerate() {
            let p = p.widen(self.degree())?;
            v.rows_mut(x * dim, dim).copy_from_slice(p.coeffs());
        }
        Ok(v)
    }

    /// Splits a coordinate vector back into generator values.
    pub fn unflatten(&self, v: &DVector<C64>) -> Vec<BoundedPoly> {
        let dim = self.degree() + 1;
        v.as_slice().chunks(dim).map(|c| BoundedPoly::new(c.to_vec())).collect()
    }

    /// `Ω_r` for the relator `r`, computed from generator values alone.
    pub fn relator_value(&self, values: &[BoundedPoly]) -> Result<BoundedPoly> {
        let v = self.flatten(values)?;
        Ok(BoundedPoly::new((&self.relator_map * v).as_slice().to_vec()))
    }

    /// Dimensions of `Z¹`, `B¹`, `H¹` and the invariants `M^Γ`.
    pub fn dimensions(&self) -> Result<CohomologyReport> {
        let dim = self.degree() + 1;
        let cols = self.relator_map.ncols();
        let z = numerical_rank(&self.relator_map)?;
        let b = numerical_rank(&self.coboundary_map)?;
        let dim_z1 = cols - z.rank;
        Ok(CohomologyReport {
            g: self.group.genus().unwrap_or(0),
            m: self.m,
            dim_m: dim,
            dim_z1,
            dim_b1: b.rank,
            dim_h1: dim_z1 - b.rank,
            dim_invariants: dim - b.rank,
            sv_gap: z.gap.min(b.gap),
        })
    }

    /// Orthonormal basis of `Z¹` as columns.
    pub fn cocycle_basis(&self) -> Result<DMatrix<C64>> {
        let cols = self.relator_map.ncols();
        let rank = numerical_rank(&self.relator_map)?.rank;
        // Right singular vectors beyond the rank span the kernel.
        let mut padded = DMatrix::<C64>::zeros(cols, cols);
        padded.rows_mut(0, self.relator_map.nrows()).copy_from(&self.relator_map);
        let svd = padded.svd(false, true);
        let v_t = svd.v_t.expect("right singular vectors were requested");
        let mut order: Vec<usize> = (0..cols).collect();
        order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
        let kernel: Vec<_> = order[rank..].iter().map(|&i| v_t.row(i).adjoint()).collect();
        Ok(DMatrix::from_columns(&kernel))
    }

    /// Least-squares solve of `C(x) = P[x] - P` over all generators.
    pub fn is_coboundary(&self, cocycle: &PeriodCocycle) -> Result<CoboundaryTest> {
        if cocycle.degree() != self.degree() {
            return Err(Error::Precondition(format!(
                "cocycle has degree {} but the system has degree {}",
                cocycle.degree(),
                self.degree()
            )));
        }
        self.is_coboundary_values(&cocycle.generator_values()?)
    }

    pub fn is_coboundary_values(&self, values: &[BoundedPoly]) -> Result<CoboundaryTest> {
        let rhs = self.flatten(values)?;
        let scale = rhs.camax();
        if scale == 0.0 {
            return Ok(CoboundaryTest {
                is_coboundary: true,
                witness: BoundedPoly::zero(self.degree()),
                residual: 0.0,
                scale,
            });
        }
        let svd = self.coboundary_map.clone().svd(true, true);
        let eps = RANK_THRESHOLD * svd.singular_values.max();
        let p = svd.solve(&rhs, eps).expect("both singular bases were requested");
        let residual = (&self.coboundary_map * &p - &rhs).camax();
        Ok(CoboundaryTest {
            is_coboundary: residual < COBOUNDARY_TOL * scale,
            witness: BoundedPoly::new(p.as_slice().to_vec()),
            residual,
            scale,
        })
    }
}

/// Outcome of [`CocycleSystem::is_coboundary`].
#[derive(Clone, Debug)]
pub struct CoboundaryTest {
    pub is_coboundary: bool,
    pub witness: BoundedPoly,
    pub residual: f64,
    pub scale: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CohomologyReport {
    pub g: usize,
    pub m: i32,
    #[serde(rename = "dimM")]
    pub dim_m: usize,
    #[serde(rename = "dimZ1")]
    pub dim_z1: usize,
    #[serde(rename = "dimB1")]
    pub dim_b1: usize,
    #[serde(rename = "dimH1")]
    pub dim_h1: usize,
    #[serde(rename = "dimInvariants")]
    pub dim_invariants: usize,
    pub sv_gap: f64,
}

pub fn h1_dimension(group: &Arc<SurfaceGroup>, m: i32) -> Result<usize> {
    Ok(CocycleSystem::new(group, m)?.dimensions()?.dim_h1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fuchsian::{cyclic_group, octagon_group};

    #[test]
    fn rank_of_diagonal() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![
            C64::new(1.0, 0.0),
            C64::new(0.5, 0.0),
            C64::new(0.0, 0.0),
        ]));
        let r = numerical_rank(&a).unwrap();
        assert_eq!(r.rank, 2);
        assert!(r.gap.is_infinite() || r.gap > 1e10);
    }

    #[test]
    fn ambiguous_rank_is_reported() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(1e-7, 0.0), C64::new(5e-9, 0.0)]));
        assert!(matches!(numerical_rank(&a), Err(Error::RankAmbiguous { .. })));
    }

    #[test]
    fn zero_matrix_has_rank_zero() {
        let r = numerical_rank(&DMatrix::<C64>::zeros(3, 4)).unwrap();
        assert_eq!(r.rank, 0);
    }

    #[test]
    fn cyclic_group_is_rejected() {
        let g = cyclic_group(4.0).unwrap();
        assert!(matches!(CocycleSystem::new(&g, -1), Err(Error::UnsupportedGroup(_))));
    }

    #[test]
    fn weight_range_is_checked() {
        let (g, _) = octagon_group().unwrap();
        assert!(CocycleSystem::new(&g, 1).is_err());
        assert!(CocycleSystem::new(&g, -6).is_err());
    }

    #[test]
    fn dimensions_at_genus_two() {
        let (g, _) = octagon_group().unwrap();
        for (m, expected) in [(-1, 6), (-2, 10), (-3, 14)] {
            let n = (-2 * m) as usize;
            // Riemann–Roch: dim H¹ = 2(1 - 2m)(g - 1).
            assert_eq!(2 * (n + 1), expected);
            let r = CocycleSystem::new(&g, m).unwrap().dimensions().unwrap();
            assert_eq!(r.dim_h1, expected, "{r:?}");
            assert_eq!(r.dim_invariants, 0);
            assert!(r.sv_gap >= REQUIRED_GAP);
        }
    }

    #[test]
    fn coboundaries_are_cocycles() {
        let (g, _) = octagon_group().unwrap();
        for m in [-1, -2, -3] {
            let s = CocycleSystem::new(&g, m).unwrap();
            let prod = s.relator_map() * s.coboundary_map();
            assert!(prod.camax() < 1e-10 * (1.0 + s.coboundary_map().camax()), "m={m}: {}", prod.camax());
        }
    }

    #[test]
    fn zero_cocycle_is_trivial() {
        let (g, _) = octagon_group().unwrap();
        let s = CocycleSystem::new(&g, -1).unwrap();
        let t = s.is_coboundary_values(&vec![BoundedPoly::zero(2); 4]).unwrap();
        assert!(t.is_coboundary);
        assert!(t.witness.is_zero());
    }

    #[test]
    fn coboundary_recovers_witness() {
        let (g, _) = octagon_group().unwrap();
        let s = CocycleSystem::new(&g, -2).unwrap();
        let p = BoundedPoly::new((0..5).map(|k| C64::new(0.3 * k as f64 - 0.4, 0.1 * k as f64)).collect());
        let values = s.unflatten(&(s.coboundary_map() * DVector::from_column_slice(p.coeffs())));
        let t = s.is_coboundary_values(&values).unwrap();
        assert!(t.is_coboundary);
        assert!(t.witness.coefficient_distance(&p) < 1e-8);
    }

    #[test]
    fn generic_cocycle_is_not_a_coboundary() {
        let (g, _) = octagon_group().unwrap();
        let s = CocycleSystem::new(&g, -1).unwrap();
        let basis = s.cocycle_basis().unwrap();
        assert_eq!(basis.ncols(), 9);
        assert!((s.relator_map() * &basis).camax() < 1e-10);
        let weights = DVector::from_iterator(basis.ncols(), (0..basis.ncols()).map(|k| C64::new(1.0 / (k + 1) as f64, 0.3)));
        let v = &basis * weights;
        let t = s.is_coboundary_values(&s.unflatten(&v)).unwrap();
        assert!(!t.is_coboundary, "residual {}", t.residual);
    }
}
