use alloc::sync::Arc;
use core::fmt;

use serde::{Deserialize, Serialize};

use super::{FermionPoly, MonomialLabel, Region, Site, SiteSet};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64};

/// Relative tolerance for numerical parity tests.
pub const PARITY_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
    Mixed,
}

impl Parity {
    /// Parity of a product.
    pub fn compose(self, other: Parity) -> Parity {
        match (self, other) {
            (Parity::Mixed, _) | (_, Parity::Mixed) => Parity::Mixed,
            (a, b) if a == b => Parity::Even,
            _ => Parity::Odd,
        }
    }

    /// Parity of a sum.
    pub fn join(self, other: Parity) -> Parity {
        if self == other {
            self
        } else {
            Parity::Mixed
        }
    }

    pub fn is_definite(self) -> bool {
        self != Parity::Mixed
    }
}

/// A dense operator on the Fock space of `ambient`, tagged with a declared
/// support and parity.
///
/// Tags are bookkeeping: operations combine them conservatively (supports are
/// unioned, parities composed). [`FockOperator::support_defect`] and
/// [`FockOperator::parity_defect`] check them numerically.
#[derive(Clone)]
pub struct FockOperator {
    matrix: CMatrix,
    ambient: Arc<SiteSet>,
    support: Region,
    parity: Parity,
}

impl fmt::Debug for FockOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FockOperator")
            .field("ambient", &self.ambient)
            .field("support", &self.support)
            .field("parity", &self.parity)
            .field("dim", &self.matrix.nrows())
            .finish()
    }
}

#[inline]
fn sign_of(n: usize) -> f64 {
    if n.count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

impl FockOperator {
    pub fn from_parts(matrix: CMatrix, ambient: Arc<SiteSet>, support: Region, parity: Parity) -> Result<Self> {
        let dim = ambient.dim();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: matrix.nrows() });
        }
        if !ambient.contains_region(&support) {
            return Err(Error::NotSubset);
        }
        Ok(Self { matrix, ambient, support, parity })
    }

    /// Wraps a raw matrix, supported on the whole ambient set, with its parity
    /// classified numerically.
    pub fn from_matrix(matrix: CMatrix, ambient: Arc<SiteSet>) -> Result<Self> {
        let support = ambient.region();
        let mut op = Self::from_parts(matrix, ambient, support, Parity::Mixed)?;
        op.parity = op.classify_parity();
        Ok(op)
    }

    pub fn identity(ambient: &Arc<SiteSet>) -> Self {
        let d = ambient.dim();
        Self {
            matrix: CMatrix::identity(d, d),
            ambient: ambient.clone(),
            support: Region::empty(),
            parity: Parity::Even,
        }
    }

    pub fn zero(ambient: &Arc<SiteSet>) -> Self {
        let d = ambient.dim();
        Self { matrix: CMatrix::zeros(d, d), ambient: ambient.clone(), support: Region::empty(), parity: Parity::Even }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn ambient(&self) -> &Arc<SiteSet> {
        &self.ambient
    }

    pub fn support(&self) -> &Region {
        &self.support
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Replaces the declared support. The new support must lie in the ambient set.
    pub fn with_support(mut self, support: Region) -> Result<Self> {
        if !self.ambient.contains_region(&support) {
            return Err(Error::NotSubset);
        }
        self.support = support;
        Ok(self)
    }

    pub fn with_parity(mut self, parity: Parity) -> Self {
        self.parity = parity;
        self
    }

    fn same_ambient(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.ambient, &other.ambient) || *self.ambient == *other.ambient {
            Ok(())
        } else {
            Err(Error::AmbientMismatch)
        }
    }

    /// `Θ_Λ(A) = θ_Λ A θ_Λ`.
    pub fn theta(&self) -> Self {
        let mut m = self.matrix.clone();
        for c in 0..m.ncols() {
            for r in 0..m.nrows() {
                if (r.count_ones() + c.count_ones()) % 2 == 1 {
                    m[(r, c)] = -m[(r, c)];
                }
            }
        }
        let parity = self.parity;
        Self { matrix: m, ambient: self.ambient.clone(), support: self.support.clone(), parity }
    }

    /// `(A⁺, A⁻)` with `A⁺ = (A + Θ(A))/2`, `A⁻ = (A - Θ(A))/2`.
    pub fn parity_decompose(&self) -> (Self, Self) {
        let d = self.dim();
        let mut even = CMatrix::zeros(d, d);
        let mut odd = CMatrix::zeros(d, d);
        for c in 0..d {
            for r in 0..d {
                if (r.count_ones() + c.count_ones()) % 2 == 0 {
                    even[(r, c)] = self.matrix[(r, c)];
                } else {
                    odd[(r, c)] = self.matrix[(r, c)];
                }
            }
        }
        let wrap = |m, parity| Self { matrix: m, ambient: self.ambient.clone(), support: self.support.clone(), parity };
        (wrap(even, Parity::Even), wrap(odd, Parity::Odd))
    }

    /// Operator norms of the even and odd parts.
    pub fn parity_norms(&self) -> (f64, f64) {
        let (e, o) = self.parity_decompose();
        (e.norm(), o.norm())
    }

    /// Parity read from the matrix, with [`PARITY_TOL`] relative to `‖A‖`.
    pub fn classify_parity(&self) -> Parity {
        let (e, o) = self.parity_norms();
        let scale = e.max(o);
        if o <= PARITY_TOL * scale || scale == 0.0 {
            Parity::Even
        } else if e <= PARITY_TOL * scale {
            Parity::Odd
        } else {
            Parity::Mixed
        }
    }

    /// Size of the component violating `parity`, relative to `‖A‖`
    /// (zero when `parity` is `Mixed`).
    pub fn parity_defect(&self, parity: Parity) -> f64 {
        let (e, o) = self.parity_norms();
        let scale = e.max(o).max(f64::MIN_POSITIVE);
        match parity {
            Parity::Even => o / scale,
            Parity::Odd => e / scale,
            Parity::Mixed => 0.0,
        }
    }

    pub fn is_even(&self) -> bool {
        self.parity_defect(Parity::Even) <= PARITY_TOL
    }

    pub fn is_odd(&self) -> bool {
        self.parity_defect(Parity::Odd) <= PARITY_TOL
    }

    /// Largest singular value.
    pub fn norm(&self) -> f64 {
        linalg::op_norm(&self.matrix)
    }

    pub fn trace(&self) -> C64 {
        linalg::trace(&self.matrix)
    }

    pub fn adjoint(&self) -> Self {
        Self {
            matrix: self.matrix.adjoint(),
            ambient: self.ambient.clone(),
            support: self.support.clone(),
            parity: self.parity,
        }
    }

    pub fn scale(&self, c: C64) -> Self {
        Self { matrix: self.matrix.map(|z| z * c), ..self.clone() }
    }

    pub fn plus(&self, other: &Self) -> Result<Self> {
        self.same_ambient(other)?;
        Ok(Self {
            matrix: &self.matrix + &other.matrix,
            ambient: self.ambient.clone(),
            support: self.support.union(&other.support),
            parity: self.parity.join(other.parity),
        })
    }

    pub fn minus(&self, other: &Self) -> Result<Self> {
        self.same_ambient(other)?;
        Ok(Self {
            matrix: &self.matrix - &other.matrix,
            ambient: self.ambient.clone(),
            support: self.support.union(&other.support),
            parity: self.parity.join(other.parity),
        })
    }

    pub fn times(&self, other: &Self) -> Result<Self> {
        self.same_ambient(other)?;
        Ok(Self {
            matrix: linalg::mul(&self.matrix, &other.matrix),
            ambient: self.ambient.clone(),
            support: self.support.union(&other.support),
            parity: self.parity.compose(other.parity),
        })
    }

    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.same_ambient(other)?;
        Ok(Self {
            matrix: linalg::commutator(&self.matrix, &other.matrix),
            ambient: self.ambient.clone(),
            support: self.support.union(&other.support),
            parity: self.parity.compose(other.parity),
        })
    }

    pub fn anticommutator(&self, other: &Self) -> Result<Self> {
        self.same_ambient(other)?;
        Ok(Self {
            matrix: linalg::anticommutator(&self.matrix, &other.matrix),
            ambient: self.ambient.clone(),
            support: self.support.union(&other.support),
            parity: self.parity.compose(other.parity),
        })
    }

    /// `‖A - B‖`.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        Ok(self.minus(other)?.norm())
    }

    pub fn hermiticity_defect(&self) -> f64 {
        linalg::hermiticity_defect(&self.matrix)
    }

    /// How far `A` is from lying in `𝒜_X`: the largest graded commutator of
    /// `A` with a generator outside `X` (`[A⁺, g]` and `{A⁻, g}`), in
    /// Frobenius norm, which dominates the operator norm.
    pub fn support_defect(&self, region: &Region) -> Result<f64> {
        if !self.ambient.contains_region(region) {
            return Err(Error::NotSubset);
        }
        let (even, odd) = self.parity_decompose();
        let mut worst: f64 = 0.0;
        for &y in self.ambient.sites() {
            if region.contains(y) {
                continue;
            }
            let a = build_annihilator(&self.ambient, y)?;
            for g in [a.clone(), a.adjoint()] {
                worst = worst.max(linalg::frobenius(&linalg::commutator(&even.matrix, &g.matrix)));
                worst = worst.max(linalg::frobenius(&linalg::anticommutator(&odd.matrix, &g.matrix)));
            }
        }
        Ok(worst)
    }

    /// Expands an operator supported in `region` in the orthogonal basis of
    /// matrix-unit monomials `Π_x e_x` with `e_x ∈ {a a*, a, a*, a* a}`.
    ///
    /// The result can be rebuilt on any site set containing `region`. The
    /// caller is responsible for `A ∈ 𝒜_region`; see [`Self::support_defect`].
    pub fn expand_on(&self, region: &Region) -> Result<FermionPoly> {
        let mask_sites: alloc::vec::Vec<Site> = region.iter().copied().collect();
        let local = SiteSet::new(mask_sites.iter().copied())?;
        let mut out = FermionPoly::zero();
        for label in MonomialLabel::enumerate(local.len()) {
            let units = matrix_unit_poly(&label, &local)?;
            let m = units.matrix(&self.ambient)?;
            // tr(m* A) / tr(m* m)
            let num: C64 = m.iter().zip(self.matrix.iter()).map(|(u, a)| u.conj() * a).sum();
            let den: f64 = m.iter().map(|u| u.norm_sqr()).sum();
            if den > 0.0 && num.norm() > 1e-15 {
                out = out.plus(&units.scale(num / den));
            }
        }
        Ok(out)
    }

    /// Re-materializes `A ∈ 𝒜_region` on a different ambient site set.
    pub fn transfer(&self, region: &Region, target: &Arc<SiteSet>) -> Result<Self> {
        let poly = self.expand_on(region)?;
        let matrix = poly.matrix(target)?;
        Self::from_parts(matrix, target.clone(), region.clone(), self.parity)
    }
}

/// The matrix-unit monomial for a label: `1 ↦ a a*`, `a`, `a*`, `a*a`.
fn matrix_unit_poly(label: &MonomialLabel, local: &SiteSet) -> Result<FermionPoly> {
    use super::MonoSymbol;
    let mut p = FermionPoly::identity();
    for (sym, &s) in label.0.iter().zip(local.sites()) {
        let factor = match sym {
            MonoSymbol::Identity => FermionPoly::annihilator(s).times(&FermionPoly::creator(s)),
            MonoSymbol::A => FermionPoly::annihilator(s),
            MonoSymbol::ADag => FermionPoly::creator(s),
            MonoSymbol::Number => FermionPoly::number(s),
        };
        p = p.times(&factor);
    }
    Ok(p)
}

/// `a_x` in the Jordan-Wigner representation of `lambda`.
pub fn build_annihilator(lambda: &Arc<SiteSet>, x: Site) -> Result<FockOperator> {
    lambda.position(x)?;
    FermionPoly::annihilator(x).to_operator(lambda)
}

/// `a*_x`.
pub fn build_creator(lambda: &Arc<SiteSet>, x: Site) -> Result<FockOperator> {
    lambda.position(x)?;
    FermionPoly::creator(x).to_operator(lambda)
}

/// `N_X = Σ_{x∈X} a*_x a_x`.
pub fn number_operator(lambda: &Arc<SiteSet>, region: &Region) -> Result<FockOperator> {
    let mask = lambda.mask(region)?;
    let d = lambda.dim();
    let matrix = CMatrix::from_fn(d, d, |r, c| {
        if r == c {
            C64::new(((r as u64) & mask).count_ones() as f64, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    FockOperator::from_parts(matrix, lambda.clone(), region.clone(), Parity::Even)
}

/// `θ_X = (-1)^{N_X}`.
pub fn parity_operator(lambda: &Arc<SiteSet>, region: &Region) -> Result<FockOperator> {
    let mask = lambda.mask(region)?;
    let d = lambda.dim();
    let matrix = CMatrix::from_fn(d, d, |r, c| {
        if r == c {
            C64::new(sign_of((r as u64 & mask) as usize), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    FockOperator::from_parts(matrix, lambda.clone(), region.clone(), Parity::Even)
}

pub fn parity_decompose(a: &FockOperator) -> (FockOperator, FockOperator) {
    a.parity_decompose()
}

/// Ordered product `Π_x A_x` for a per-site label.
pub fn monomial(lambda: &Arc<SiteSet>, label: &MonomialLabel) -> Result<FockOperator> {
    let word = label.word(lambda)?;
    let support = lambda
        .sites()
        .iter()
        .zip(&label.0)
        .filter(|(_, s)| **s != super::MonoSymbol::Identity)
        .map(|(&x, _)| x)
        .collect();
    let matrix = FermionPoly::word(C64::new(1.0, 0.0), word).matrix(lambda)?;
    FockOperator::from_parts(matrix, lambda.clone(), support, label.parity())
}

pub fn op_norm(a: &FockOperator) -> f64 {
    a.norm()
}

pub fn commutator(a: &FockOperator, b: &FockOperator) -> Result<FockOperator> {
    a.commutator(b)
}

pub fn anticommutator(a: &FockOperator, b: &FockOperator) -> Result<FockOperator> {
    a.anticommutator(b)
}
