//! The CAR algebra of a finite site set on its `2^|Λ|`-dimensional Fock space.
//!
//! Basis states are occupation bit strings with the least-significant bit on
//! the first site of the [`SiteSet`]. Annihilators carry the Jordan-Wigner
//! string of parity operators over all earlier sites:
//! `a_x = (Π_{y<x} θ_y) σ⁻_x`.

mod operator;
mod poly;
mod site;

pub use operator::{
    anticommutator, build_annihilator, build_creator, commutator, monomial, number_operator, op_norm, parity_decompose,
    parity_operator, FockOperator, Parity, PARITY_TOL,
};
pub use poly::{BasisImage, FermionPoly, Gen, MonoSymbol, MonomialLabel, SparseAction, Word};
pub use site::{Region, Site, SiteSet, DENSE_SITE_CAP};
