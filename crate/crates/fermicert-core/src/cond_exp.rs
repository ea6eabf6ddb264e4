//! Conditional expectations onto local subalgebras.
//!
//! With the single-site Krauss unitaries
//! `u⁰ = 1`, `u¹ = a* + a`, `u² = a* − a`, `u³ = 1 − 2a*a`,
//!
//! ```text
//! 𝔼_X(A) = 4^{-|Λ∖X|} Σ_α u(α)* A u(α),     u(α) = Π_{y∈Λ∖X} u_y^{α_y},
//! 𝔽_X(A) = 4^{-|Λ∖X|} Σ_α ũ(α)* A ũ(α),     ũ(α) = θ_X^{[π(α) = −1]} u(α).
//! ```
//!
//! Every Krauss unitary is a signed permutation of the occupation basis, so
//! each conjugation is a reindexing of the matrix.

use alloc::sync::Arc;
use alloc::vec::Vec;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::{parity_operator, FockOperator, Parity, Region, SiteSet};
use crate::linalg::{self, CMatrix, C64};
use crate::random::random_operator;

/// Largest `|Λ∖X|` accepted by the exhaustive Krauss sums.
pub const BRUTE_FORCE_CAP: usize = 10;
/// Largest `|Λ∖X|` for which [`local_approximation`] maximizes over all `α`.
pub const EXACT_COMMUTATOR_CAP: usize = 4;

/// Assignment `α: Λ∖X → {0,1,2,3}` in site-set order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct KraussIndex(pub Vec<u8>);

impl KraussIndex {
    /// `π(α) = Π_y π(α_y)` with `π(1) = π(2) = −1`.
    pub fn parity(&self) -> i8 {
        if self.0.iter().filter(|&&i| i == 1 || i == 2).count() % 2 == 0 {
            1
        } else {
            -1
        }
    }

    /// All `4^len` assignments, first entry fastest.
    pub fn enumerate(len: usize) -> impl Iterator<Item = KraussIndex> {
        (0..1usize << (2 * len)).map(move |code| KraussIndex((0..len).map(|k| ((code >> (2 * k)) & 3) as u8).collect()))
    }
}

/// `U|n⟩ = sign[n] |target[n]⟩`.
#[derive(Clone, Debug, PartialEq)]
struct SignedPermutation {
    target: Vec<usize>,
    sign: Vec<f64>,
}

impl SignedPermutation {
    fn identity(dim: usize) -> Self {
        Self { target: (0..dim).collect(), sign: alloc::vec![1.0; dim] }
    }

    /// `u_x^{(i)}` at basis bit `pos`.
    fn krauss(dim: usize, pos: usize, i: u8) -> Self {
        let bit = 1usize << pos;
        let lower = bit - 1;
        let jw = |n: usize| if (n & lower).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        let mut out = Self::identity(dim);
        for n in 0..dim {
            let occupied = n & bit != 0;
            match i {
                0 => {}
                1 => {
                    out.target[n] = n ^ bit;
                    out.sign[n] = jw(n);
                }
                2 => {
                    out.target[n] = n ^ bit;
                    out.sign[n] = if occupied { -jw(n) } else { jw(n) };
                }
                _ => out.sign[n] = if occupied { -1.0 } else { 1.0 },
            }
        }
        out
    }

    /// `θ_X` for the basis-bit mask of `X`.
    fn parity(dim: usize, mask: u64) -> Self {
        let mut out = Self::identity(dim);
        for n in 0..dim {
            if (n as u64 & mask).count_ones() % 2 == 1 {
                out.sign[n] = -1.0;
            }
        }
        out
    }

    /// `self · other`.
    fn compose(&self, other: &Self) -> Self {
        let target = other.target.iter().map(|&t| self.target[t]).collect();
        let sign = other.sign.iter().zip(&other.target).map(|(s, &t)| s * self.sign[t]).collect();
        Self { target, sign }
    }

    /// Adds `w · U* A U` into `acc`.
    fn conjugate_into(&self, a: &CMatrix, w: f64, acc: &mut CMatrix) {
        let d = self.target.len();
        for j in 0..d {
            let (tj, sj) = (self.target[j], self.sign[j] * w);
            for i in 0..d {
                acc[(i, j)] += a[(self.target[i], tj)] * (self.sign[i] * sj);
            }
        }
    }

    fn to_matrix(&self) -> CMatrix {
        let d = self.target.len();
        let mut m = CMatrix::zeros(d, d);
        for n in 0..d {
            m[(self.target[n], n)] = C64::new(self.sign[n], 0.0);
        }
        m
    }
}

/// `ω^tr(A) = tr(A) / 2^{|Λ|}`.
pub fn tracial_state(a: &FockOperator) -> C64 {
    a.trace() / a.dim() as f64
}

/// `[u⁰_x, u¹_x, u²_x, u³_x]` on the Fock space of `lambda`.
pub fn krauss_unitaries(lambda: &Arc<SiteSet>, x: crate::fock::Site) -> Result<[FockOperator; 4]> {
    let pos = lambda.position(x)?;
    lambda.check_dense()?;
    let support = Region::single(x);
    let parities = [Parity::Even, Parity::Odd, Parity::Odd, Parity::Even];
    let build = |i: u8| {
        let m = SignedPermutation::krauss(lambda.dim(), pos, i).to_matrix();
        FockOperator::from_parts(m, lambda.clone(), support.clone(), parities[i as usize])
    };
    Ok([build(0)?, build(1)?, build(2)?, build(3)?])
}

fn complement(a: &FockOperator, x: &Region) -> Result<Vec<usize>> {
    let lambda = a.ambient();
    if !lambda.contains_region(x) {
        return Err(Error::NotSubset);
    }
    Ok(lambda.sites().iter().enumerate().filter(|(_, s)| !x.contains(**s)).map(|(i, _)| i).collect())
}

/// Parity tags and supports of `𝔼_X(A)`: even inputs land in `𝒜_X⁺`.
fn tag_output(a: &FockOperator, x: &Region, m: CMatrix) -> Result<FockOperator> {
    let (support, parity) = match a.parity() {
        Parity::Even => (a.support().intersection(x), Parity::Even),
        p => (a.ambient().region(), p),
    };
    FockOperator::from_parts(m, a.ambient().clone(), support, parity)
}

fn single_site_average(m: &CMatrix, dim: usize, pos: usize) -> CMatrix {
    let mut acc = CMatrix::zeros(dim, dim);
    for i in 0..4 {
        SignedPermutation::krauss(dim, pos, i).conjugate_into(m, 0.25, &mut acc);
    }
    acc
}

/// `𝔼_X(A)` by successive single-site averages over `Λ∖X`.
pub fn cond_exp_e(a: &FockOperator, x: &Region) -> Result<FockOperator> {
    let order = complement(a, x)?;
    sweep(a, x, &order)
}

/// [`cond_exp_e`] sweeping `Λ∖X` in the given site order.
pub fn cond_exp_e_ordered(a: &FockOperator, x: &Region, order: &[crate::fock::Site]) -> Result<FockOperator> {
    let mut expected = complement(a, x)?;
    let mut positions: Vec<usize> = order.iter().map(|&s| a.ambient().position(s)).collect::<Result<_>>()?;
    let given = positions.clone();
    positions.sort_unstable();
    expected.sort_unstable();
    if positions != expected {
        return Err(Error::InvalidArgument("ordering must list each site of the complement once".into()));
    }
    sweep(a, x, &given)
}

fn sweep(a: &FockOperator, x: &Region, order: &[usize]) -> Result<FockOperator> {
    let dim = a.dim();
    let mut m = a.matrix().clone();
    for &pos in order {
        m = single_site_average(&m, dim, pos);
    }
    tag_output(a, x, m)
}

/// `𝔼_X(A)` as the full `4^{|Λ∖X|}`-term Krauss sum.
pub fn cond_exp_e_brute(a: &FockOperator, x: &Region) -> Result<FockOperator> {
    let m = krauss_sum(a, x, None)?;
    tag_output(a, x, m)
}

fn krauss_sum(a: &FockOperator, x: &Region, theta_x: Option<u64>) -> Result<CMatrix> {
    let outside = complement(a, x)?;
    if outside.len() > BRUTE_FORCE_CAP {
        return Err(Error::TooLarge(outside.len()));
    }
    let dim = a.dim();
    let singles: Vec<[SignedPermutation; 4]> =
        outside.iter().map(|&p| [0, 1, 2, 3].map(|i| SignedPermutation::krauss(dim, p, i))).collect();
    let theta = theta_x.map(|mask| SignedPermutation::parity(dim, mask));
    let w = 1.0 / (1usize << (2 * outside.len())) as f64;
    let mut acc = CMatrix::zeros(dim, dim);
    for alpha in KraussIndex::enumerate(outside.len()) {
        let mut u = SignedPermutation::identity(dim);
        for (k, &i) in alpha.0.iter().enumerate() {
            u = u.compose(&singles[k][i as usize]);
        }
        if let (Some(t), -1) = (&theta, alpha.parity()) {
            u = t.compose(&u);
        }
        u.conjugate_into(a.matrix(), w, &mut acc);
    }
    Ok(acc)
}

/// `𝔽_X(A)`, the conditional expectation onto `𝒜_X` itself.
///
/// Splitting the Krauss sum by `π(α)`, `𝔽_X(A) = E⁺(A) + E⁻(θ_X A θ_X)`
/// where `E^±` average over the `α` of each parity; both are accumulated in
/// one sweep that tracks the parity of the partial assignment.
pub fn cond_exp_f(a: &FockOperator, x: &Region) -> Result<FockOperator> {
    let outside = complement(a, x)?;
    if outside.len() > BRUTE_FORCE_CAP {
        return Err(Error::TooLarge(outside.len()));
    }
    let dim = a.dim();
    let theta = SignedPermutation::parity(dim, a.ambient().mask(x)?);
    let mut flipped = CMatrix::zeros(dim, dim);
    theta.conjugate_into(a.matrix(), 1.0, &mut flipped);
    let (plus, _) = parity_split_average(a.matrix(), dim, &outside);
    let (_, minus) = parity_split_average(&flipped, dim, &outside);
    FockOperator::from_parts(plus + minus, a.ambient().clone(), x.clone(), a.parity())
}

/// `(E⁺(M), E⁻(M))` with `E^±` the Krauss average restricted to `π(α) = ±1`.
fn parity_split_average(m: &CMatrix, dim: usize, outside: &[usize]) -> (CMatrix, CMatrix) {
    let mut even = m.clone();
    let mut odd = CMatrix::zeros(dim, dim);
    for &pos in outside {
        let mut next_even = CMatrix::zeros(dim, dim);
        let mut next_odd = CMatrix::zeros(dim, dim);
        for i in 0..4u8 {
            let u = SignedPermutation::krauss(dim, pos, i);
            let (to_even, to_odd) = if i == 1 || i == 2 { (&odd, &even) } else { (&even, &odd) };
            u.conjugate_into(to_even, 0.25, &mut next_even);
            u.conjugate_into(to_odd, 0.25, &mut next_odd);
        }
        even = next_even;
        odd = next_odd;
    }
    (even, odd)
}

/// `𝔽_X(A)` as the explicit sum over `ũ(α)`.
pub fn cond_exp_f_brute(a: &FockOperator, x: &Region) -> Result<FockOperator> {
    let m = krauss_sum(a, x, Some(a.ambient().mask(x)?))?;
    FockOperator::from_parts(m, a.ambient().clone(), x.clone(), a.parity())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    SiteSweep,
    BruteForce,
}

#[derive(Clone, Debug)]
pub struct CondExpReport {
    pub region: Region,
    pub method: Method,
    pub output: FockOperator,
    /// `‖𝔼_X(𝔼_X(A)) − 𝔼_X(A)‖`.
    pub projection_defect: f64,
    /// Distance of `𝔼_X(A)` from the form `A₊ + B₋θ_Λ` with `A₊ ∈ 𝒜_X⁺`, `B₋ ∈ 𝒜_X⁻`.
    pub range_defect: f64,
    pub input_norm: f64,
    pub output_norm: f64,
}

pub fn cond_exp_report(a: &FockOperator, x: &Region, method: Method) -> Result<CondExpReport> {
    let apply = |b: &FockOperator| match method {
        Method::SiteSweep => cond_exp_e(b, x),
        Method::BruteForce => cond_exp_e_brute(b, x),
    };
    let output = apply(a)?;
    let projection_defect = apply(&output)?.distance(&output)?;
    Ok(CondExpReport {
        region: x.clone(),
        method,
        projection_defect,
        range_defect: range_defect(&output, x)?,
        input_norm: a.norm(),
        output_norm: output.norm(),
        output,
    })
}

/// Support defect of the parity-resolved pieces `C₊` and `C₋θ_Λ`.
pub fn range_defect(c: &FockOperator, x: &Region) -> Result<f64> {
    let (even, odd) = c.parity_decompose();
    let lambda = c.ambient();
    let theta = parity_operator(lambda, &lambda.region())?;
    let b_odd = odd.times(&theta)?;
    Ok(even.support_defect(x)?.max(b_odd.support_defect(x)?))
}

#[derive(Clone, Debug)]
pub struct LocalApproximation {
    pub approximation: FockOperator,
    /// `‖A − 𝔼_X(A)‖`.
    pub error: f64,
    /// Upper bound on `max_α ‖[A, u(α)]‖`; exact when `bound_is_exact`.
    pub commutator_bound: f64,
    pub bound_is_exact: bool,
}

/// `A′ = 𝔼_X(A) ∈ 𝒜_X⁺` for even `A`, with `‖A − A′‖ ≤ max_α ‖[A, u(α)]‖`.
pub fn local_approximation(a: &FockOperator, x: &Region) -> Result<LocalApproximation> {
    if a.parity() != Parity::Even || a.parity_defect(Parity::Even) > crate::fock::PARITY_TOL * a.norm().max(1.0) {
        return Err(Error::Precondition("local approximation needs an even observable".into()));
    }
    let approximation = cond_exp_e(a, x)?;
    let error = a.distance(&approximation)?;
    let outside = complement(a, x)?;
    let dim = a.dim();
    // ‖[A, U]‖ = ‖U* A U − A‖ for unitary U.
    let defect = |u: &SignedPermutation| {
        let mut c = -a.matrix().clone();
        u.conjugate_into(a.matrix(), 1.0, &mut c);
        linalg::op_norm(&c)
    };
    let (commutator_bound, bound_is_exact) = if outside.len() <= EXACT_COMMUTATOR_CAP {
        let mut worst: f64 = 0.0;
        for alpha in KraussIndex::enumerate(outside.len()) {
            let mut u = SignedPermutation::identity(dim);
            for (k, &i) in alpha.0.iter().enumerate() {
                u = u.compose(&SignedPermutation::krauss(dim, outside[k], i));
            }
            worst = worst.max(defect(&u));
        }
        (worst, true)
    } else {
        // ‖[A, Π_y u_y]‖ ≤ Σ_y ‖[A, u_y]‖.
        let total = outside
            .iter()
            .map(|&p| (1..4).map(|i| defect(&SignedPermutation::krauss(dim, p, i))).fold(0.0, f64::max))
            .sum();
        (total, false)
    };
    Ok(LocalApproximation { approximation, error, commutator_bound, bound_is_exact })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct FamilyReport {
    /// `max ‖𝔼_X 𝔼_Y(A) − 𝔼_{X∩Y}(A)‖`.
    pub composition: f64,
    /// `max ‖𝔼_X(AB) − 𝔼_{X∪Y}(A) 𝔼_{X∪Yᶜ}(B)‖` and the `Z`-form, for
    /// `A ∈ 𝒜_Z⁺`, `B ∈ 𝒜_Y⁺`, `Z = Λ∖Y`.
    pub product: f64,
    /// `max ‖𝔼_X^{Λ₁}(A) − 𝔼_X^{Λ₂}(A)‖` with `Λ₂` one site larger than `Λ₁`.
    pub volume: f64,
    pub samples: usize,
}

impl FamilyReport {
    pub fn max_defect(&self) -> f64 {
        self.composition.max(self.product).max(self.volume)
    }
}

/// Samples the composition, product and volume-independence identities of
/// the family `{𝔼_X^Λ}` for fixed `X, Y ⊆ Λ`.
pub fn verify_family_properties<R: Rng + ?Sized>(
    lambda: &Arc<SiteSet>,
    x: &Region,
    y: &Region,
    samples: usize,
    rng: &mut R,
) -> Result<FamilyReport> {
    if !lambda.contains_region(x) || !lambda.contains_region(y) {
        return Err(Error::NotSubset);
    }
    let whole = lambda.region();
    let z = whole.difference(y);
    let xy = x.intersection(y);
    let bigger = {
        let next = lambda.sites().iter().map(|s| s.0).max().map_or(0, |m| m + 1);
        Arc::new(SiteSet::new(lambda.sites().iter().copied().chain([crate::fock::Site(next)]))?)
    };
    let mut report = FamilyReport { samples, ..FamilyReport::default() };
    for _ in 0..samples {
        let a = random_operator(lambda, &whole, Parity::Mixed, rng)?;
        let lhs = cond_exp_e(&cond_exp_e(&a, y)?, x)?;
        report.composition = report.composition.max(lhs.distance(&cond_exp_e(&a, &xy)?)? / a.norm());

        let az = random_operator(lambda, &z, Parity::Even, rng)?;
        let by = random_operator(lambda, y, Parity::Even, rng)?;
        let scale = az.norm() * by.norm();
        if scale > 0.0 {
            let lhs = cond_exp_e(&az.times(&by)?, x)?;
            let first = cond_exp_e(&az, &x.union(y))?.times(&cond_exp_e(&by, &x.union(&z))?)?;
            let second = cond_exp_e(&az, &x.union(&whole.difference(&z)))?.times(&cond_exp_e(&by, &x.union(&z))?)?;
            let d = lhs.distance(&first)?.max(lhs.distance(&second)?);
            report.product = report.product.max(d / scale);
        }

        let even = random_operator(lambda, &whole, Parity::Even, rng)?;
        let small = cond_exp_e(&even, x)?;
        let large = cond_exp_e(&even.transfer(&whole, &bigger)?, x)?;
        let moved = small.transfer(x, &bigger)?;
        report.volume = report.volume.max(moved.distance(&large)? / even.norm());
    }
    Ok(report)
}
