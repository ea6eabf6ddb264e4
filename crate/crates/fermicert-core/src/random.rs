//! Seeded random observables for property checks.

use alloc::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::fock::{FermionPoly, FockOperator, MonomialLabel, Parity, Region, SiteSet};
use crate::linalg::C64;

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn complex_uniform<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

/// Random combination of every monomial on `region` with the requested
/// parity (`Mixed` keeps both).
pub fn random_poly<R: Rng + ?Sized>(region: &Region, parity: Parity, rng: &mut R) -> FermionPoly {
    let local = SiteSet::from_region(region);
    let mut p = FermionPoly::zero();
    for label in MonomialLabel::enumerate(local.len()) {
        if parity != Parity::Mixed && label.parity() != parity {
            continue;
        }
        let w = label.word(&local).expect("label length matches");
        p.terms.push((complex_uniform(rng), w));
    }
    p
}

/// Random self-adjoint polynomial on `region`.
pub fn random_hermitian_poly<R: Rng + ?Sized>(region: &Region, parity: Parity, rng: &mut R) -> FermionPoly {
    let p = random_poly(region, parity, rng);
    p.plus(&p.adjoint()).scale(C64::new(0.5, 0.0))
}

/// Random element of `𝒜_X` with the given parity, on the Fock space of `lambda`.
pub fn random_operator<R: Rng + ?Sized>(
    lambda: &Arc<SiteSet>,
    region: &Region,
    parity: Parity,
    rng: &mut R,
) -> Result<FockOperator> {
    let poly = random_poly(region, parity, rng);
    let op = poly.to_operator(lambda)?;
    op.with_support(region.clone()).map(|o| o.with_parity(parity))
}

/// Random unit-norm element of `𝒜_X`.
pub fn random_normalized<R: Rng + ?Sized>(
    lambda: &Arc<SiteSet>,
    region: &Region,
    parity: Parity,
    rng: &mut R,
) -> Result<FockOperator> {
    let op = random_operator(lambda, region, parity, rng)?;
    let n = op.norm();
    Ok(if n > 0.0 { op.scale(C64::new(1.0 / n, 0.0)) } else { op })
}

/// Random subset of `lambda` where each site is kept with probability 1/2.
pub fn random_region<R: Rng + ?Sized>(lambda: &SiteSet, rng: &mut R) -> Region {
    lambda.sites().iter().copied().filter(|_| rng.random_bool(0.5)).collect()
}
