//! Symbolic words in creation and annihilation operators.
//!
//! A [`FermionPoly`] is a finite linear combination of ordered products of
//! generators. It does not know about any ambient site set, so one interaction
//! term can be materialized on every volume that contains its support.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{FockOperator, Parity, Region, Site, SiteSet};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64, ONE, ZERO};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gen {
    Annihilate,
    Create,
}

/// An ordered product `g_1 g_2 … g_k` of generators.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Word(pub Vec<(Site, Gen)>);

/// Result of a word acting on one occupation basis state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BasisImage {
    pub state: usize,
    pub sign: i8,
}

/// Applies a single generator at bit position `pos` to basis state `state`.
#[inline]
pub(crate) fn apply_gen(state: usize, pos: usize, gen: Gen) -> Option<(usize, i8)> {
    let bit = 1usize << pos;
    let occupied = state & bit != 0;
    match (gen, occupied) {
        (Gen::Annihilate, false) | (Gen::Create, true) => None,
        _ => {
            let below = (state & (bit - 1)).count_ones();
            let sign = if below % 2 == 0 { 1 } else { -1 };
            Some((state ^ bit, sign))
        }
    }
}

impl Word {
    pub fn identity() -> Self {
        Word(Vec::new())
    }

    pub fn single(site: Site, gen: Gen) -> Self {
        Word(vec![(site, gen)])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn parity(&self) -> Parity {
        if self.0.len() % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    pub fn support(&self) -> Region {
        self.0.iter().map(|&(s, _)| s).collect()
    }

    pub fn then(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn adjoint(&self) -> Word {
        Word(
            self.0
                .iter()
                .rev()
                .map(|&(s, g)| {
                    let g = match g {
                        Gen::Annihilate => Gen::Create,
                        Gen::Create => Gen::Annihilate,
                    };
                    (s, g)
                })
                .collect(),
        )
    }

    /// Image of a basis state under the word, given bit positions for each
    /// generator (rightmost generator acts first).
    pub(crate) fn apply_positions(positions: &[(usize, Gen)], state: usize) -> Option<BasisImage> {
        let mut n = state;
        let mut sign = 1i8;
        for &(pos, gen) in positions.iter().rev() {
            let (m, s) = apply_gen(n, pos, gen)?;
            n = m;
            sign *= s;
        }
        Some(BasisImage { state: n, sign })
    }

    pub(crate) fn positions(&self, lambda: &SiteSet) -> Result<Vec<(usize, Gen)>> {
        self.0.iter().map(|&(s, g)| Ok((lambda.position(s)?, g))).collect()
    }
}

/// Finite linear combination of words.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FermionPoly {
    pub terms: Vec<(C64, Word)>,
}

impl FermionPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn identity() -> Self {
        Self::scalar(ONE)
    }

    pub fn scalar(c: C64) -> Self {
        Self { terms: vec![(c, Word::identity())] }
    }

    pub fn word(c: C64, word: Word) -> Self {
        Self { terms: vec![(c, word)] }
    }

    pub fn annihilator(site: Site) -> Self {
        Self::word(ONE, Word::single(site, Gen::Annihilate))
    }

    pub fn creator(site: Site) -> Self {
        Self::word(ONE, Word::single(site, Gen::Create))
    }

    /// `a*_x a_x`.
    pub fn number(site: Site) -> Self {
        Self::word(ONE, Word(vec![(site, Gen::Create), (site, Gen::Annihilate)]))
    }

    /// `a*_x a_y + a*_y a_x` scaled by `amplitude` (and its conjugate).
    pub fn hopping(x: Site, y: Site, amplitude: C64) -> Self {
        Self {
            terms: vec![
                (amplitude, Word(vec![(x, Gen::Create), (y, Gen::Annihilate)])),
                (amplitude.conj(), Word(vec![(y, Gen::Create), (x, Gen::Annihilate)])),
            ],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|(c, _)| *c == ZERO)
    }

    pub fn support(&self) -> Region {
        self.terms.iter().filter(|(c, _)| *c != ZERO).fold(Region::empty(), |acc, (_, w)| acc.union(&w.support()))
    }

    /// Parity read off the word lengths.
    pub fn parity(&self) -> Parity {
        let mut even = false;
        let mut odd = false;
        for (c, w) in &self.terms {
            if *c == ZERO {
                continue;
            }
            match w.parity() {
                Parity::Even => even = true,
                _ => odd = true,
            }
        }
        match (even, odd) {
            (_, false) => Parity::Even,
            (false, true) => Parity::Odd,
            (true, true) => Parity::Mixed,
        }
    }

    pub fn scale(&self, c: C64) -> Self {
        Self { terms: self.terms.iter().map(|(k, w)| (k * c, w.clone())).collect() }
    }

    pub fn plus(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Self { terms }
    }

    pub fn minus(&self, other: &Self) -> Self {
        self.plus(&other.scale(-ONE))
    }

    pub fn times(&self, other: &Self) -> Self {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (a, wa) in &self.terms {
            for (b, wb) in &other.terms {
                terms.push((a * b, wa.then(wb)));
            }
        }
        Self { terms }
    }

    pub fn adjoint(&self) -> Self {
        Self { terms: self.terms.iter().map(|(c, w)| (c.conj(), w.adjoint())).collect() }
    }

    /// Dense matrix of the polynomial on the Fock space of `lambda`.
    pub fn matrix(&self, lambda: &SiteSet) -> Result<CMatrix> {
        lambda.check_dense()?;
        let dim = lambda.dim();
        let mut m = CMatrix::zeros(dim, dim);
        for (c, w) in &self.terms {
            if *c == ZERO {
                continue;
            }
            let pos = w.positions(lambda)?;
            for n in 0..dim {
                if let Some(img) = Word::apply_positions(&pos, n) {
                    m[(img.state, n)] += c * img.sign as f64;
                }
            }
        }
        Ok(m)
    }

    /// Materializes the polynomial as a tagged [`FockOperator`].
    pub fn to_operator(&self, lambda: &Arc<SiteSet>) -> Result<FockOperator> {
        let support = self.support();
        if !lambda.contains_region(&support) {
            return Err(Error::NotSubset);
        }
        let matrix = self.matrix(lambda)?;
        FockOperator::from_parts(matrix, lambda.clone(), support, self.parity())
    }

    /// Matrix-free view on `lambda`.
    pub fn action(&self, lambda: &SiteSet) -> Result<SparseAction> {
        let mut entries = Vec::new();
        for (c, w) in &self.terms {
            if *c != ZERO {
                entries.push((*c, w.positions(lambda)?));
            }
        }
        Ok(SparseAction { dim: lambda.dim(), entries })
    }
}

/// Matrix-free application of a [`FermionPoly`]; implements
/// [`crate::linalg::LinearAction`] without forming `2^|Λ| × 2^|Λ|` storage.
#[derive(Clone, Debug)]
pub struct SparseAction {
    dim: usize,
    entries: Vec<(C64, Vec<(usize, Gen)>)>,
}

impl crate::linalg::LinearAction for SparseAction {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        y.iter_mut().for_each(|v| *v = ZERO);
        for (c, pos) in &self.entries {
            for (n, xn) in x.iter().enumerate() {
                if let Some(img) = Word::apply_positions(pos, n) {
                    y[img.state] += c * xn * img.sign as f64;
                }
            }
        }
    }

    fn apply_adjoint(&self, x: &[C64], y: &mut [C64]) {
        y.iter_mut().for_each(|v| *v = ZERO);
        for (c, pos) in &self.entries {
            for (n, out) in y.iter_mut().enumerate() {
                if let Some(img) = Word::apply_positions(pos, n) {
                    *out += c.conj() * x[img.state] * img.sign as f64;
                }
            }
        }
    }
}

/// Per-site symbol of a monomial.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MonoSymbol {
    #[serde(rename = "1")]
    Identity,
    #[serde(rename = "a")]
    A,
    #[serde(rename = "a*")]
    ADag,
    #[serde(rename = "a*a")]
    Number,
}

impl MonoSymbol {
    pub const ALL: [MonoSymbol; 4] = [MonoSymbol::Identity, MonoSymbol::A, MonoSymbol::ADag, MonoSymbol::Number];

    fn gens(self, site: Site) -> Vec<(Site, Gen)> {
        match self {
            MonoSymbol::Identity => Vec::new(),
            MonoSymbol::A => vec![(site, Gen::Annihilate)],
            MonoSymbol::ADag => vec![(site, Gen::Create)],
            MonoSymbol::Number => vec![(site, Gen::Create), (site, Gen::Annihilate)],
        }
    }
}

/// One symbol per site of a site set; the induced monomial is the ordered
/// product over the site ordering.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MonomialLabel(pub Vec<MonoSymbol>);

impl MonomialLabel {
    pub fn identity(len: usize) -> Self {
        Self(vec![MonoSymbol::Identity; len])
    }

    pub fn parity(&self) -> Parity {
        let odd = self.0.iter().filter(|s| matches!(s, MonoSymbol::A | MonoSymbol::ADag)).count();
        if odd % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    pub fn word(&self, lambda: &SiteSet) -> Result<Word> {
        if self.0.len() != lambda.len() {
            return Err(Error::LabelLength { expected: lambda.len(), found: self.0.len() });
        }
        Ok(Word(self.0.iter().zip(lambda.sites()).flat_map(|(sym, &s)| sym.gens(s)).collect()))
    }

    /// All `4^n` labels of length `n`, in lexicographic order.
    pub fn enumerate(len: usize) -> impl Iterator<Item = MonomialLabel> {
        (0..4usize.pow(len as u32)).map(move |mut code| {
            let mut v = Vec::with_capacity(len);
            for _ in 0..len {
                v.push(MonoSymbol::ALL[code % 4]);
                code /= 4;
            }
            MonomialLabel(v)
        })
    }
}
