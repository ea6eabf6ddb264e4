//! Interaction builders: hopping chains, a frustration-free Kitaev-type
//! chain, flat-band two-band models and random even interactions.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{Interaction, TimeProfile};
use crate::error::{Error, Result};
use crate::fock::{FermionPoly, FockOperator, Gen, Parity, Region, Site, SiteSet, Word};
use crate::gap::HamiltonianSequence;
use crate::geometry::{Boundary, MetricGraph};
use crate::linalg::{self, CMatrix, C64};
use crate::random::{random_hermitian_poly, seeded};

/// Orthonormality tolerance for orbital families.
pub const ORBITAL_TOL: f64 = 1e-12;
/// Coefficients below this magnitude count as outside the support.
pub const SUPPORT_TOL: f64 = 1e-14;

const ONE: C64 = C64::new(1.0, 0.0);

fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn check_len(len: usize) -> Result<()> {
    if len < 2 {
        return Err(Error::InvalidArgument(format!("chain length {len} is below 2")));
    }
    Ok(())
}

fn bonds(len: usize, boundary: Boundary) -> Vec<(u32, u32)> {
    let mut out: Vec<(u32, u32)> = (0..len as u32 - 1).map(|x| (x, x + 1)).collect();
    if boundary == Boundary::Periodic && len > 2 {
        out.push((len as u32 - 1, 0));
    }
    out
}

/// `Σ_x J(a*_x a_{x+1} + a*_{x+1} a_x) + μ Σ_x a*_x a_x`.
pub fn hopping_chain(len: usize, j: f64, mu: f64, boundary: Boundary) -> Result<Interaction> {
    ramped_hopping_chain(len, TimeProfile::Constant(j), mu, boundary)
}

/// Hopping chain whose bond amplitude follows `hopping`.
pub fn ramped_hopping_chain(len: usize, hopping: TimeProfile, mu: f64, boundary: Boundary) -> Result<Interaction> {
    check_len(len)?;
    let mut phi = Interaction::new();
    for (x, y) in bonds(len, boundary) {
        phi.add(Region::of(&[x, y]), FermionPoly::hopping(Site(x), Site(y), ONE), hopping.clone())?;
    }
    if mu != 0.0 {
        for x in 0..len as u32 {
            phi.add(Region::of(&[x]), FermionPoly::number(Site(x)), TimeProfile::Constant(mu))?;
        }
    }
    Ok(phi)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KitaevParams {
    pub hopping: f64,
    pub pairing: f64,
    pub mu: f64,
}

impl KitaevParams {
    /// `μ = 2√(t² − Δ²)`, where both parity sectors of a bond share the
    /// minimum `−|t|`.
    pub fn frustration_free(hopping: f64, pairing: f64) -> Result<Self> {
        if pairing.abs() > hopping.abs() {
            return Err(Error::InvalidArgument("frustration-free point needs |Δ| ≤ |t|".into()));
        }
        Ok(Self { hopping, pairing, mu: 2.0 * libm::sqrt(hopping * hopping - pairing * pairing) })
    }

    /// Lowest eigenvalue of a single unshifted bond term.
    pub fn bond_minimum(&self) -> f64 {
        -self.hopping.abs().max(libm::sqrt(self.mu * self.mu / 4.0 + self.pairing * self.pairing))
    }
}

impl Default for KitaevParams {
    fn default() -> Self {
        Self::frustration_free(1.0, 0.8).expect("|Δ| ≤ |t|")
    }
}

/// Bond term `−t(a*_x a_y + h.c.) + Δ(a_x a_y + h.c.) − (μ/2)(n_x + n_y − 1)`
/// shifted so that its minimum is zero.
pub fn kitaev_bond(x: Site, y: Site, params: &KitaevParams) -> FermionPoly {
    let pair = FermionPoly::word(real(params.pairing), Word(vec![(x, Gen::Annihilate), (y, Gen::Annihilate)]));
    FermionPoly::hopping(x, y, real(-params.hopping))
        .plus(&pair)
        .plus(&pair.adjoint())
        .minus(&FermionPoly::number(x).plus(&FermionPoly::number(y)).scale(real(params.mu / 2.0)))
        .plus(&FermionPoly::scalar(real(params.mu / 2.0 - params.bond_minimum())))
}

/// Open Kitaev-type chain with one non-negative term per bond.
pub fn kitaev_chain(len: usize, params: &KitaevParams) -> Result<Interaction> {
    check_len(len)?;
    let mut phi = Interaction::new();
    for (x, y) in bonds(len, Boundary::Open) {
        phi.add(Region::of(&[x, y]), kitaev_bond(Site(x), Site(y), params), TimeProfile::Constant(1.0))?;
    }
    Ok(phi)
}

/// A one-particle mode with coefficients indexed by site position.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Orbital {
    pub center: Site,
    pub coefficients: Vec<C64>,
}

impl Orbital {
    pub fn support(&self, lambda: &SiteSet) -> Region {
        self.coefficients.iter().zip(lambda.sites()).filter(|(c, _)| c.norm() > SUPPORT_TOL).map(|(_, &s)| s).collect()
    }

    /// `b* b = Σ_{x,y} f(x) f̄(y) a*_x a_y`.
    pub fn occupation(&self, lambda: &SiteSet) -> FermionPoly {
        let mut p = FermionPoly::zero();
        for (cx, &x) in self.coefficients.iter().zip(lambda.sites()) {
            for (cy, &y) in self.coefficients.iter().zip(lambda.sites()) {
                let c = cx * cy.conj();
                if c.norm() > 0.0 {
                    p = p.plus(&FermionPoly::word(c, Word(vec![(x, Gen::Create), (y, Gen::Annihilate)])));
                }
            }
        }
        p
    }
}

/// Valence and conduction orbitals on a metric graph with common support radius.
#[derive(Clone, Debug)]
pub struct OrbitalSet {
    graph: MetricGraph,
    valence: Vec<Orbital>,
    conduction: Vec<Orbital>,
    radius: f64,
}

impl OrbitalSet {
    /// Checks normalization, mutual orthogonality, completeness and
    /// `supp ⊆ B_center(R)`.
    pub fn new(graph: MetricGraph, valence: Vec<Orbital>, conduction: Vec<Orbital>, radius: f64) -> Result<Self> {
        let n = graph.len();
        let all: Vec<&Orbital> = valence.iter().chain(&conduction).collect();
        if all.len() != n {
            return Err(Error::InvalidArgument(format!("{} orbitals cannot span {n} sites", all.len())));
        }
        for o in &all {
            if o.coefficients.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: o.coefficients.len() });
            }
            let ball = graph.ball(o.center, radius)?;
            if !o.support(graph.sites()).is_subset(&ball) {
                return Err(Error::InvalidArgument(format!("orbital centered at {:?} leaves its ball", o.center)));
            }
        }
        let coeffs = CMatrix::from_fn(n, n, |r, c| all[c].coefficients[r]);
        let gram = linalg::mul(&coeffs.adjoint(), &coeffs);
        let defect = linalg::max_abs(&(gram - CMatrix::identity(n, n)));
        if defect > ORBITAL_TOL {
            return Err(Error::NonOrthonormal(defect));
        }
        Ok(Self { graph, valence, conduction, radius })
    }

    /// One valence orbital per cell of `width` consecutive sites,
    /// `f = cos θ e_0 + Σ_{j≥1} e^{ijφ} sin θ/√(w−1) e_j`, and conduction
    /// orbitals spanning the rest of each cell.
    pub fn cells(graph: MetricGraph, width: usize, theta: f64, phase: f64) -> Result<Self> {
        let n = graph.len();
        if width < 2 || n % width != 0 {
            return Err(Error::InvalidArgument(format!("cell width {width} does not tile {n} sites")));
        }
        let tail = libm::sin(theta) / libm::sqrt((width - 1) as f64);
        let local: Vec<C64> = (0..width)
            .map(|j| if j == 0 { real(libm::cos(theta)) } else { C64::from_polar(tail, j as f64 * phase) })
            .collect();
        let complement = orthogonal_complement(&local);
        let sites = graph.sites().sites().to_vec();
        let radius = (width / 2) as f64;
        let mut valence = Vec::new();
        let mut conduction = Vec::new();
        for k in 0..n / width {
            let base = k * width;
            let embed = |v: &[C64]| {
                let mut c = vec![C64::new(0.0, 0.0); n];
                c[base..base + width].copy_from_slice(v);
                c
            };
            // Centers whose ball covers the whole cell.
            let lo = base + width - 1 - width / 2;
            let count = base + width / 2 - lo + 1;
            let mid = base + (width - 1) / 2;
            valence.push(Orbital { center: sites[mid], coefficients: embed(&local) });
            for (j, g) in complement.iter().enumerate() {
                let center = lo + (mid - lo + 1 + j) % count;
                conduction.push(Orbital { center: sites[center], coefficients: embed(g) });
            }
        }
        Self::new(graph, valence, conduction, radius)
    }

    pub fn graph(&self) -> &MetricGraph {
        &self.graph
    }

    pub fn lambda(&self) -> &Arc<SiteSet> {
        self.graph.sites()
    }

    pub fn valence(&self) -> &[Orbital] {
        &self.valence
    }

    pub fn conduction(&self) -> &[Orbital] {
        &self.conduction
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    fn ball(&self, o: &Orbital) -> Result<Region> {
        self.graph.ball(o.center, self.radius)
    }
}

/// Gram-Schmidt completion of a unit vector to an orthonormal basis.
fn orthogonal_complement(v: &[C64]) -> Vec<Vec<C64>> {
    let w = v.len();
    let mut basis: Vec<Vec<C64>> = vec![v.to_vec()];
    for e in 0..w {
        let mut u = vec![C64::new(0.0, 0.0); w];
        u[e] = ONE;
        for b in &basis {
            let overlap: C64 = b.iter().zip(&u).map(|(bi, ui)| bi.conj() * ui).sum();
            for (ui, bi) in u.iter_mut().zip(b) {
                *ui -= overlap * bi;
            }
        }
        let norm = libm::sqrt(u.iter().map(|z| z.norm_sqr()).sum());
        if norm > 1e-8 {
            basis.push(u.into_iter().map(|z| z / norm).collect());
        }
        if basis.len() == w {
            break;
        }
    }
    basis.split_off(1)
}

/// Dressed annihilators `b_k = Σ_x f̄_k(x) a_x` and `c_l = Σ_x ḡ_l(x) a_x`.
#[derive(Clone, Debug)]
pub struct BandOperators {
    pub valence: Vec<FockOperator>,
    pub conduction: Vec<FockOperator>,
}

pub fn band_operators(orbitals: &OrbitalSet) -> Result<BandOperators> {
    let lambda = orbitals.lambda();
    let mode = |o: &Orbital| -> Result<FockOperator> {
        let mut p = FermionPoly::zero();
        for (c, &x) in o.coefficients.iter().zip(lambda.sites()) {
            if c.norm() > 0.0 {
                p = p.plus(&FermionPoly::annihilator(x).scale(c.conj()));
            }
        }
        p.to_operator(lambda).map(|op| op.with_parity(Parity::Odd))
    };
    Ok(BandOperators {
        valence: orbitals.valence().iter().map(mode).collect::<Result<_>>()?,
        conduction: orbitals.conduction().iter().map(mode).collect::<Result<_>>()?,
    })
}

/// `Φ(B_{x_k}(R)) = 𝟙 − b*_k b_k` and `Φ(B_{y_l}(R)) = c*_l c_l`.
pub fn flat_band_model(orbitals: &OrbitalSet) -> Result<Interaction> {
    weighted_flat_band_model(orbitals, 1.0, 1.0)
}

/// Flat-band model with the valence and conduction terms scaled separately.
pub fn weighted_flat_band_model(orbitals: &OrbitalSet, valence: f64, conduction: f64) -> Result<Interaction> {
    let lambda = orbitals.lambda();
    let mut phi = Interaction::new();
    for o in orbitals.valence() {
        let term = FermionPoly::identity().minus(&o.occupation(lambda));
        phi.add(orbitals.ball(o)?, term, TimeProfile::Constant(valence))?;
    }
    for o in orbitals.conduction() {
        phi.add(orbitals.ball(o)?, o.occupation(lambda), TimeProfile::Constant(conduction))?;
    }
    Ok(phi)
}

/// Deterministic even self-adjoint terms on every single site and every
/// pair at distance at most `range`, each with norm at most `strength`.
pub fn random_even_interaction(graph: &MetricGraph, range: f64, strength: f64, seed: u64) -> Result<Interaction> {
    if !(strength >= 0.0) || !(range >= 0.0) {
        return Err(Error::InvalidArgument("range and strength must be non-negative".into()));
    }
    let mut rng = seeded(seed);
    let sites = graph.sites().sites();
    let mut phi = Interaction::new();
    for i in 0..sites.len() {
        for j in i..sites.len() {
            if graph.distance_at(i, j) > range {
                continue;
            }
            let region: Region = [sites[i], sites[j]].into_iter().collect();
            let poly = random_hermitian_poly(&region, Parity::Even, &mut rng);
            let norm = linalg::op_norm(&poly.matrix(&SiteSet::from_region(&region))?);
            let target = strength * rng.random_range(0.0..=1.0);
            if norm > 0.0 {
                phi.add(region, poly.scale(real(target / norm)), TimeProfile::Constant(1.0))?;
            }
        }
    }
    Ok(phi)
}

/// `H_n = Σ_{x<n} a*_x a_x`, one site per step.
pub fn commuting_sequence(len: usize) -> Result<HamiltonianSequence> {
    let lambda = Arc::new(SiteSet::chain(len));
    let hs = (0..len as u32).map(|x| FermionPoly::number(Site(x)).to_operator(&lambda)).collect::<Result<_>>()?;
    HamiltonianSequence::from_increments(hs)
}

/// Adds the terms of a time-independent interaction one at a time, ordered
/// left to right by the rightmost and then leftmost site of their regions.
pub fn left_to_right_sequence(phi: &Interaction, lambda: &Arc<SiteSet>) -> Result<HamiltonianSequence> {
    if !phi.is_time_independent() {
        return Err(Error::Precondition("sequences are built from time-independent interactions".into()));
    }
    let t = phi.interval().0.max(0.0).min(phi.interval().1);
    let region = lambda.region();
    let mut terms: Vec<_> = phi.terms_within(&region).collect();
    let key = |r: &Region| {
        let pos: Vec<usize> = r.iter().map(|&s| lambda.position(s).unwrap_or(usize::MAX)).collect();
        (pos.iter().copied().max(), pos.iter().copied().min())
    };
    terms.sort_by_key(|term| key(term.region()));
    let hs = terms
        .into_iter()
        .map(|term| {
            term.poly().to_operator(lambda).map(|op| op.scale(real(term.coefficient(t))).with_parity(Parity::Even))
        })
        .collect::<Result<_>>()?;
    HamiltonianSequence::from_increments(hs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::local_hamiltonian;
    use crate::fock::{build_annihilator, parity_operator};
    use crate::gap::{frustration_free_check, kernel_projection, martingale_certificate, spectrum, CertificateStatus};
    use crate::geometry::{g_from_f, interaction_g_norm, DecayFunction};

    fn spec(phi: &Interaction, n: usize) -> Vec<f64> {
        spectrum(&local_hamiltonian(phi, &Arc::new(SiteSet::chain(n)), 0.0).unwrap()).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn hopping_chain_examples() {
        assert!(close(&spec(&hopping_chain(2, 1.0, 0.0, Boundary::Open).unwrap(), 2), &[-1.0, 0.0, 0.0, 1.0], 1e-12));
        let onsite = hopping_chain(4, 0.0, 0.5, Boundary::Open).unwrap();
        let lambda = Arc::new(SiteSet::chain(4));
        let h = local_hamiltonian(&onsite, &lambda, 0.0).unwrap();
        assert!(linalg::max_abs(&(h.matrix() - CMatrix::from_diagonal(&h.matrix().diagonal()))) == 0.0);
        let periodic = hopping_chain(5, 1.0, 0.2, Boundary::Periodic).unwrap();
        assert!(periodic.is_even() && periodic.terms().iter().all(|t| t.is_even()));
        assert_eq!(periodic.terms().len(), 10);
        assert!(hopping_chain(1, 1.0, 0.0, Boundary::Open).is_err());
    }

    #[test]
    fn periodic_ring_single_particle_energies() {
        // Oracle: one particle on a ring of 5 has energies 2cos(2πk/5).
        let phi = hopping_chain(5, 1.0, 0.0, Boundary::Periodic).unwrap();
        let lambda = Arc::new(SiteSet::chain(5));
        let h = local_hamiltonian(&phi, &lambda, 0.0).unwrap();
        let one: Vec<usize> = (0..5).map(|x| 1 << x).collect();
        let block = CMatrix::from_fn(5, 5, |r, c| h.matrix()[(one[r], one[c])]);
        let mut want: Vec<f64> =
            (0..5).map(|k| 2.0 * libm::cos(2.0 * core::f64::consts::PI * k as f64 / 5.0)).collect();
        want.sort_by(f64::total_cmp);
        assert!(close(&linalg::eigvalsh(&block), &want, 1e-12));
    }

    fn cells(n: usize, theta: f64) -> OrbitalSet {
        OrbitalSet::cells(MetricGraph::chain(n).unwrap(), 2, theta, 0.3).unwrap()
    }

    #[test]
    fn orbital_validation() {
        let graph = MetricGraph::chain(2).unwrap();
        let e = |x: usize| {
            let mut c = vec![C64::new(0.0, 0.0); 2];
            c[x] = ONE;
            c
        };
        let f = Orbital { center: Site(0), coefficients: e(0) };
        let g = Orbital { center: Site(1), coefficients: e(1) };
        assert!(OrbitalSet::new(graph.clone(), vec![f.clone()], vec![g.clone()], 0.0).is_ok());
        let skew = Orbital { center: Site(1), coefficients: vec![real(0.6), real(0.8)] };
        assert!(matches!(
            OrbitalSet::new(graph.clone(), vec![f.clone()], vec![skew], 1.0),
            Err(Error::NonOrthonormal(_))
        ));
        assert!(OrbitalSet::new(graph.clone(), vec![f.clone()], vec![], 1.0).is_err());
        let far = Orbital { center: Site(0), coefficients: e(1) };
        assert!(OrbitalSet::new(graph, vec![f], vec![far], 0.0).is_err());
        assert!(OrbitalSet::cells(MetricGraph::chain(5).unwrap(), 2, 0.1, 0.0).is_err());
        for width in [2, 3, 4] {
            let set = OrbitalSet::cells(MetricGraph::chain(12).unwrap(), width, 0.7, 0.4).unwrap();
            assert_eq!(set.valence().len(), 12 / width);
        }
    }

    #[test]
    fn band_operator_examples() {
        let set = cells(4, 0.0);
        let lambda = set.lambda().clone();
        let ops = band_operators(&set).unwrap();
        // θ = 0 places every valence orbital on the first site of its cell.
        assert_eq!(ops.valence[0].distance(&build_annihilator(&lambda, Site(0)).unwrap()).unwrap(), 0.0);
        let set = cells(4, 0.9);
        let ops = band_operators(&set).unwrap();
        let modes: Vec<&FockOperator> = ops.valence.iter().chain(&ops.conduction).collect();
        let id = FockOperator::identity(&lambda);
        for (i, b) in modes.iter().enumerate() {
            assert!((b.norm() - 1.0).abs() < 1e-12);
            for (j, c) in modes.iter().enumerate() {
                let mixed = b.anticommutator(&c.adjoint()).unwrap();
                let want = if i == j { id.clone() } else { FockOperator::zero(&lambda) };
                assert!(mixed.distance(&want).unwrap() <= 1e-12);
                assert!(b.anticommutator(c).unwrap().norm() <= 1e-12);
            }
        }
    }

    #[test]
    fn flat_band_gap_and_ground_state() {
        for n in [6, 8] {
            let set = cells(n, 0.8);
            let phi = flat_band_model(&set).unwrap();
            let lambda = set.lambda().clone();
            let ff = frustration_free_check(&phi, &lambda).unwrap();
            assert!(ff.frustration_free && ff.residual.abs() <= 1e-10);
            assert!(ff.annihilation_defect.unwrap() <= 1e-10);
            let h = local_hamiltonian(&phi, &lambda, 0.0).unwrap();
            let ev = spectrum(&h).unwrap();
            assert!(ev[0].abs() <= 1e-10 && (ev[1] - 1.0).abs() <= 1e-10);
            let p = kernel_projection(&h, None).unwrap();
            assert!((p.trace().re - 1.0).abs() < 1e-10);
            let ops = band_operators(&set).unwrap();
            let expect = |op: &FockOperator| p.times(&op.adjoint().times(op).unwrap()).unwrap().trace().re;
            assert!(ops.valence.iter().all(|b| (expect(b) - 1.0).abs() <= 1e-10));
            assert!(ops.conduction.iter().all(|c| expect(c).abs() <= 1e-10));
        }
    }

    /// Positive Bogoliubov energies of `Σ A_xy a*_x a_y + ½ Σ (B_xy a*_x a*_y + h.c.)`.
    fn bdg_energies(a: &CMatrix, b: &CMatrix) -> Vec<f64> {
        let n = a.nrows();
        let m = CMatrix::from_fn(2 * n, 2 * n, |r, c| match (r < n, c < n) {
            (true, true) => a[(r, c)],
            (true, false) => b[(r, c - n)],
            (false, true) => b[(c, r - n)].conj(),
            (false, false) => -a[(r - n, c - n)],
        });
        linalg::eigvalsh(&m).into_iter().filter(|&e| e > 1e-9).collect()
    }

    #[test]
    fn kitaev_frustration_free_point() {
        let params = KitaevParams::default();
        assert!((params.mu - 1.2).abs() < 1e-15);
        for n in [6, 8] {
            let lambda = Arc::new(SiteSet::chain(n));
            let phi = kitaev_chain(n, &params).unwrap();
            assert!(phi.terms().iter().all(|t| t.is_even()));
            let ff = frustration_free_check(&phi, &lambda).unwrap();
            assert!(ff.frustration_free && ff.annihilation_defect.unwrap() <= 1e-10, "{ff:?}");
            let h = local_hamiltonian(&phi, &lambda, 0.0).unwrap();
            let theta = parity_operator(&lambda, &lambda.region()).unwrap();
            assert!(h.commutator(&theta).unwrap().norm() <= 1e-12);

            // Oracle: smallest nonzero quasi-particle energy of the quadratic form.
            let (t, d) = (params.hopping, params.pairing);
            let mut a = CMatrix::zeros(n, n);
            let mut b = CMatrix::zeros(n, n);
            for x in 0..n - 1 {
                a[(x, x + 1)] = real(-t);
                a[(x + 1, x)] = real(-t);
                b[(x + 1, x)] = real(d);
                b[(x, x + 1)] = real(-d);
            }
            for x in 0..n {
                let ends = if x == 0 || x == n - 1 { 1.0 } else { 2.0 };
                a[(x, x)] = real(-params.mu / 2.0 * ends);
            }
            let quasi = bdg_energies(&a, &b);
            let ev = spectrum(&h).unwrap();
            assert!(ev[0].abs() <= 1e-10 && ev[1].abs() <= 1e-10);
            assert!((ev[2] - quasi[0]).abs() <= 1e-9, "{} vs {}", ev[2], quasi[0]);

            let cert = martingale_certificate(&left_to_right_sequence(&phi, &lambda).unwrap()).unwrap();
            assert_eq!(cert.status, CertificateStatus::Certified);
            let bound = cert.bound.unwrap();
            assert!(bound > 0.0 && bound <= cert.exact_gap.unwrap() + 1e-8);
            assert!((cert.exact_gap.unwrap() - ev[2]).abs() <= 1e-9);
        }
    }

    #[test]
    fn flat_band_sequence_certificate() {
        let set = cells(6, 0.6);
        let phi = flat_band_model(&set).unwrap();
        let cert = martingale_certificate(&left_to_right_sequence(&phi, set.lambda()).unwrap()).unwrap();
        assert_eq!(cert.status, CertificateStatus::Certified);
        assert!(cert.bound.unwrap() > 0.0 && cert.bound.unwrap() <= 1.0 + 1e-8);
        assert!((cert.exact_gap.unwrap() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn commuting_sequence_matches_gap() {
        let cert = martingale_certificate(&commuting_sequence(5).unwrap()).unwrap();
        assert_eq!((cert.gamma, cert.ell), (1.0, Some(0)));
        assert_eq!(cert.bound, Some(1.0));
    }

    #[test]
    fn random_interaction_is_reproducible() {
        let graph = MetricGraph::chain(5).unwrap();
        let a = random_even_interaction(&graph, 1.0, 0.5, 11).unwrap();
        let b = random_even_interaction(&graph, 1.0, 0.5, 11).unwrap();
        assert_eq!(a.terms().len(), 9);
        assert!(a.terms().iter().zip(b.terms()).all(|(x, y)| x.poly() == y.poly() && x.region() == y.region()));
        assert!(a.terms().iter().all(|t| t.is_even() && t.template_norm() <= 0.5 + 1e-12));
        let g = g_from_f(&DecayFunction::power_law(1.0, 1.0).unwrap(), &graph);
        let n = interaction_g_norm(&a, &g, 0.0).unwrap();
        assert!(n.is_finite() && n == interaction_g_norm(&b, &g, 0.0).unwrap());
        let c = random_even_interaction(&graph, 1.0, 0.5, 12).unwrap();
        assert!(a.terms()[0].poly() != c.terms()[0].poly());
    }

    fn rotation_family(s: f64) -> Result<Interaction> {
        flat_band_model(&cells(6, 0.3 + 0.9 * s))
    }

    #[test]
    fn flat_band_rotation_flow() {
        let grid = crate::geometry::uniform_grid(0.0, 1.0, 21);
        let lambda = Arc::new(SiteSet::chain(6));
        let report =
            crate::gap::projection_flow(rotation_family, &lambda, &grid, &crate::gap::FlowOptions::default()).unwrap();
        assert_eq!(report.rank, 1);
        assert!(report.traces.iter().all(|t| (t - 1.0).abs() <= 1e-8));
        assert!(report.max_defect <= 1e-6, "{:e}", report.max_defect);
        assert!((report.min_gap - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn gap_closing_path_is_located() {
        let set = cells(6, 0.5);
        let grid = crate::geometry::uniform_grid(0.0, 1.0, 21);
        let family = |s: f64| weighted_flat_band_model(&set, 1.0 - s, 1.0);
        let options = crate::gap::FlowOptions { gap_min: 0.2, ..Default::default() };
        match crate::gap::projection_flow(family, set.lambda(), &grid, &options) {
            Err(Error::GapClosure { s, gap_min, .. }) => {
                assert!((s - 0.8).abs() <= 1e-9, "{s}");
                assert_eq!(gap_min, 0.2);
            }
            other => panic!("{other:?}"),
        }
    }
}
