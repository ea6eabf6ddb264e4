//! Interactions, finite-volume Hamiltonians and their unitary propagators.
//!
//! Propagators solve `d/dt U(t,s) = -i H(t) U(t,s)`, `U(s,s) = 1` with a
//! second-order midpoint exponential integrator; every step is an exact
//! unitary built from a Hermitian eigendecomposition. Time-independent
//! generators are exponentiated once, exactly. The Heisenberg dynamics
//! is `τ_{t,s}(A) = U(t,s)* A U(t,s)`.

use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{FermionPoly, FockOperator, Parity, Region, SiteSet};
use crate::linalg::{self, CMatrix, C64};

/// Default integrator step in units where couplings are O(1).
pub const DEFAULT_STEP: f64 = 1e-2;
/// Accumulated unitarity defect that triggers a polar re-projection.
pub const REUNITARIZE_TOL: f64 = 1e-9;

/// Real scalar coefficient of an interaction term as a function of time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeProfile {
    Constant(f64),
    /// `Σ_k c_k t^k`.
    Polynomial(Vec<f64>),
    /// Linear interpolation through `(t, value)` knots, held constant outside.
    PiecewiseLinear(Vec<(f64, f64)>),
}

impl TimeProfile {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            TimeProfile::Constant(c) => *c,
            TimeProfile::Polynomial(c) => c.iter().rev().fold(0.0, |acc, &k| acc * t + k),
            TimeProfile::PiecewiseLinear(knots) => {
                let Some(&(t0, v0)) = knots.first() else { return 0.0 };
                if t <= t0 {
                    return v0;
                }
                for w in knots.windows(2) {
                    let ((ta, va), (tb, vb)) = (w[0], w[1]);
                    if t <= tb {
                        if tb == ta {
                            return vb;
                        }
                        return va + (vb - va) * (t - ta) / (tb - ta);
                    }
                }
                knots[knots.len() - 1].1
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            TimeProfile::Constant(_) => true,
            TimeProfile::Polynomial(c) => c.iter().skip(1).all(|&k| k == 0.0),
            TimeProfile::PiecewiseLinear(k) => k.windows(2).all(|w| w[0].1 == w[1].1),
        }
    }

    fn scaled(&self, f: f64) -> Self {
        match self {
            TimeProfile::Constant(c) => TimeProfile::Constant(c * f),
            TimeProfile::Polynomial(c) => TimeProfile::Polynomial(c.iter().map(|k| k * f).collect()),
            TimeProfile::PiecewiseLinear(k) => {
                TimeProfile::PiecewiseLinear(k.iter().map(|&(t, v)| (t, v * f)).collect())
            }
        }
    }
}

/// One term `profile(t) · P` of an interaction, with `P` a self-adjoint
/// polynomial in the generators of `region`.
#[derive(Clone, Debug)]
pub struct InteractionTerm {
    region: Region,
    poly: FermionPoly,
    profile: TimeProfile,
    template_norm: f64,
}

impl InteractionTerm {
    pub fn new(region: Region, poly: FermionPoly, profile: TimeProfile) -> Result<Self> {
        if !poly.support().is_subset(&region) {
            return Err(Error::NotSubset);
        }
        let local = SiteSet::from_region(&region);
        let m = poly.matrix(&local)?;
        let defect = linalg::hermiticity_defect(&m);
        if defect > 1e-12 * linalg::max_abs(&m).max(1.0) {
            return Err(Error::NotHermitian(defect));
        }
        let template_norm = linalg::op_norm(&m);
        Ok(Self { region, poly, profile, template_norm })
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn poly(&self) -> &FermionPoly {
        &self.poly
    }

    pub fn profile(&self) -> &TimeProfile {
        &self.profile
    }

    /// `‖P‖`, the norm of the term at unit coefficient.
    pub fn template_norm(&self) -> f64 {
        self.template_norm
    }

    pub fn coefficient(&self, t: f64) -> f64 {
        self.profile.eval(t)
    }

    pub fn norm_at(&self, t: f64) -> f64 {
        self.coefficient(t).abs() * self.template_norm
    }

    pub fn is_even(&self) -> bool {
        self.poly.parity() == Parity::Even
    }
}

/// A finite, possibly time-dependent, interaction `Φ(X, t)`.
///
/// Several terms may share a region; `Φ(X, t)` is their sum.
#[derive(Clone, Debug)]
pub struct Interaction {
    terms: Vec<InteractionTerm>,
    interval: (f64, f64),
    even: bool,
}

impl Default for Interaction {
    fn default() -> Self {
        Self::new()
    }
}

impl Interaction {
    /// Empty even interaction on the whole real line.
    pub fn new() -> Self {
        Self { terms: Vec::new(), interval: (f64::NEG_INFINITY, f64::INFINITY), even: true }
    }

    pub fn on_interval(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(Error::InvalidArgument(alloc::format!("bad interval [{lo}, {hi}]")));
        }
        Ok(Self { interval: (lo, hi), ..Self::new() })
    }

    /// Interaction that is allowed to hold odd terms; rejected by [`propagate`].
    pub fn allow_odd(mut self) -> Self {
        self.even = false;
        self
    }

    pub fn push(&mut self, term: InteractionTerm) -> Result<()> {
        if self.even && !term.is_even() {
            return Err(Error::NotEven);
        }
        self.terms.push(term);
        Ok(())
    }

    pub fn add(&mut self, region: Region, poly: FermionPoly, profile: TimeProfile) -> Result<()> {
        self.push(InteractionTerm::new(region, poly, profile)?)
    }

    pub fn with_term(mut self, region: Region, poly: FermionPoly, profile: TimeProfile) -> Result<Self> {
        self.add(region, poly, profile)?;
        Ok(self)
    }

    pub fn terms(&self) -> &[InteractionTerm] {
        &self.terms
    }

    pub fn interval(&self) -> (f64, f64) {
        self.interval
    }

    /// True when the evenness flag is set and every term is even.
    pub fn is_even(&self) -> bool {
        self.even && self.terms.iter().all(InteractionTerm::is_even)
    }

    pub fn is_time_independent(&self) -> bool {
        self.terms.iter().all(|t| t.profile.is_constant())
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn check_time(&self, t: f64) -> Result<()> {
        let (lo, hi) = self.interval;
        if t.is_nan() || t < lo || t > hi {
            Err(Error::TimeOutOfInterval { t, lo, hi })
        } else {
            Ok(())
        }
    }

    /// Union of all term regions.
    pub fn sites(&self) -> Region {
        self.terms.iter().fold(Region::empty(), |acc, t| acc.union(&t.region))
    }

    /// Terms whose region lies in `region`.
    pub fn terms_within<'a>(&'a self, region: &'a Region) -> impl Iterator<Item = &'a InteractionTerm> + 'a {
        self.terms.iter().filter(move |t| t.region.is_subset(region))
    }

    /// `λ Φ`.
    pub fn scaled(&self, factor: f64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| InteractionTerm {
                region: t.region.clone(),
                poly: t.poly.clone(),
                profile: t.profile.scaled(factor),
                template_norm: t.template_norm,
            })
            .collect();
        Self { terms, ..self.clone() }
    }

    /// `‖Φ(X, t)‖` for every distinct region `X` carrying a term.
    pub fn region_norms(&self, t: f64) -> Result<Vec<(Region, f64)>> {
        let mut groups: BTreeMap<&Region, Vec<&InteractionTerm>> = BTreeMap::new();
        for term in &self.terms {
            groups.entry(&term.region).or_default().push(term);
        }
        let mut out = Vec::with_capacity(groups.len());
        for (region, terms) in groups {
            let norm = if terms.len() == 1 {
                terms[0].norm_at(t)
            } else {
                let local = SiteSet::from_region(region);
                let mut m = CMatrix::zeros(local.dim(), local.dim());
                for term in terms {
                    let c = term.coefficient(t);
                    if c != 0.0 {
                        m += term.poly.matrix(&local)?.scale(c);
                    }
                }
                linalg::op_norm(&m)
            };
            out.push((region.clone(), norm));
        }
        Ok(out)
    }

    /// Compiles the terms inside `lambda` to matrices so that `H(t)` is a
    /// cheap linear combination.
    pub fn compile(&self, lambda: &Arc<SiteSet>) -> Result<CompiledHamiltonian> {
        let region = lambda.region();
        let mut parts: Vec<(TimeProfile, CMatrix)> = Vec::new();
        for term in self.terms_within(&region) {
            let m = term.poly.matrix(lambda)?;
            // merge terms with identical profiles
            if let Some(slot) = parts.iter_mut().find(|(p, _)| *p == term.profile) {
                slot.1 += m;
            } else {
                parts.push((term.profile.clone(), m));
            }
        }
        Ok(CompiledHamiltonian { ambient: lambda.clone(), parts, interval: self.interval })
    }
}

/// `H_Λ(t) = Σ_k c_k(t) M_k` with precomputed matrices.
#[derive(Clone, Debug)]
pub struct CompiledHamiltonian {
    ambient: Arc<SiteSet>,
    parts: Vec<(TimeProfile, CMatrix)>,
    interval: (f64, f64),
}

impl CompiledHamiltonian {
    pub fn at(&self, t: f64) -> CMatrix {
        let d = self.ambient.dim();
        let mut h = CMatrix::zeros(d, d);
        for (profile, m) in &self.parts {
            let c = profile.eval(t);
            if c != 0.0 {
                h += m.scale(c);
            }
        }
        h
    }

    pub fn is_time_independent(&self) -> bool {
        self.parts.iter().all(|(p, _)| p.is_constant())
    }

    pub fn ambient(&self) -> &Arc<SiteSet> {
        &self.ambient
    }

    fn check_time(&self, t: f64) -> Result<()> {
        let (lo, hi) = self.interval;
        if t.is_nan() || t < lo || t > hi {
            Err(Error::TimeOutOfInterval { t, lo, hi })
        } else {
            Ok(())
        }
    }
}

/// `H_Λ(t) = Σ_{X⊆Λ} Φ(X, t)`.
pub fn local_hamiltonian(phi: &Interaction, lambda: &Arc<SiteSet>, t: f64) -> Result<FockOperator> {
    phi.check_time(t)?;
    let compiled = phi.compile(lambda)?;
    let support = phi.terms_within(&lambda.region()).fold(Region::empty(), |acc, term| acc.union(term.region()));
    let parity = if phi.is_even() { Parity::Even } else { Parity::Mixed };
    FockOperator::from_parts(compiled.at(t), lambda.clone(), support, parity)
}

/// Unitary propagator `U(t, s)` with integration metadata.
#[derive(Clone, Debug)]
pub struct Propagator {
    matrix: CMatrix,
    ambient: Arc<SiteSet>,
    pub start: f64,
    pub end: f64,
    /// Largest step actually used.
    pub step: f64,
    pub steps: usize,
    /// `‖U* U - 1‖` of the returned matrix.
    pub unitarity_defect: f64,
    /// Number of polar re-projections applied.
    pub corrections: usize,
}

impl Propagator {
    pub fn identity(ambient: &Arc<SiteSet>, s: f64) -> Self {
        let d = ambient.dim();
        Self {
            matrix: CMatrix::identity(d, d),
            ambient: ambient.clone(),
            start: s,
            end: s,
            step: 0.0,
            steps: 0,
            unitarity_defect: 0.0,
            corrections: 0,
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn ambient(&self) -> &Arc<SiteSet> {
        &self.ambient
    }

    /// `U(t, r) U(r, s)`.
    pub fn then(&self, later: &Propagator) -> Propagator {
        let matrix = linalg::mul(&later.matrix, &self.matrix);
        let unitarity_defect = linalg::unitarity_defect(&matrix);
        Propagator {
            matrix,
            ambient: self.ambient.clone(),
            start: self.start,
            end: later.end,
            step: self.step.max(later.step),
            steps: self.steps + later.steps,
            unitarity_defect,
            corrections: self.corrections + later.corrections,
        }
    }
}

/// Steps between explicit unitarity checks.
const DEFECT_CHECK_INTERVAL: usize = 32;

struct Stepper<'a> {
    hamiltonian: &'a CompiledHamiltonian,
    /// Spectral decomposition of a time-independent generator.
    spectral: Option<linalg::HermitianEigen>,
}

impl<'a> Stepper<'a> {
    fn new(hamiltonian: &'a CompiledHamiltonian) -> Self {
        let spectral = hamiltonian.is_time_independent().then(|| linalg::eigh(&hamiltonian.at(0.0)));
        Self { hamiltonian, spectral }
    }

    /// Advances `u` from `from` to `to` in steps of at most `step`.
    ///
    /// Time-independent generators take one exact spectral step.
    fn advance(&mut self, u: &mut CMatrix, from: f64, to: f64, step: f64, meta: &mut (usize, usize, f64)) {
        let span = to - from;
        if span == 0.0 {
            return;
        }
        if let Some(eig) = &self.spectral {
            let w = eig.map_spectrum(|lambda| C64::from_polar(1.0, -lambda * span));
            *u = linalg::mul(&w, u);
            meta.0 += 1;
            meta.2 = meta.2.max(span.abs());
            self.reunitarize(u, meta);
            return;
        }
        let n = libm::ceil(span.abs() / step).max(1.0) as usize;
        let dt = span / n as f64;
        for k in 0..n {
            let t_mid = from + (k as f64 + 0.5) * dt;
            *u = linalg::mul(&linalg::expm_minus_i(&self.hamiltonian.at(t_mid), dt), u);
            if (k + 1) % DEFECT_CHECK_INTERVAL == 0 || k + 1 == n {
                self.reunitarize(u, meta);
            }
        }
        meta.0 += n;
        meta.2 = meta.2.max(dt.abs());
    }

    fn reunitarize(&self, u: &mut CMatrix, meta: &mut (usize, usize, f64)) {
        if frobenius_defect(u) > REUNITARIZE_TOL {
            *u = linalg::polar_unitary(u);
            meta.1 += 1;
        }
    }
}

/// Frobenius norm of `U* U - 1`, an upper bound on the operator-norm defect.
fn frobenius_defect(u: &CMatrix) -> f64 {
    linalg::frobenius(&(linalg::mul(&u.adjoint(), u) - CMatrix::identity(u.nrows(), u.ncols())))
}

fn check_propagation(phi: &Interaction, s: f64, t: f64, step: f64) -> Result<()> {
    if !phi.is_even() {
        return Err(Error::NotEven);
    }
    if !(step > 0.0) {
        return Err(Error::InvalidArgument(alloc::format!("step must be positive, got {step}")));
    }
    phi.check_time(s)?;
    phi.check_time(t)
}

/// `U_Λ(t, s)`.
pub fn propagate(phi: &Interaction, lambda: &Arc<SiteSet>, s: f64, t: f64, step: f64) -> Result<Propagator> {
    check_propagation(phi, s, t, step)?;
    let compiled = phi.compile(lambda)?;
    propagate_compiled(&compiled, s, t, step)
}

pub fn propagate_compiled(h: &CompiledHamiltonian, s: f64, t: f64, step: f64) -> Result<Propagator> {
    h.check_time(s)?;
    h.check_time(t)?;
    let mut out = Propagator::identity(&h.ambient, s);
    let mut meta = (0, 0, 0.0);
    Stepper::new(h).advance(&mut out.matrix, s, t, step, &mut meta);
    out.end = t;
    (out.steps, out.corrections, out.step) = meta;
    out.unitarity_defect = linalg::unitarity_defect(&out.matrix);
    Ok(out)
}

/// `U_Λ(t_k, s)` for every `t_k` in a non-decreasing grid with `t_0 ≥ s`,
/// integrating once across the whole grid.
pub fn propagate_grid(
    phi: &Interaction,
    lambda: &Arc<SiteSet>,
    s: f64,
    times: &[f64],
    step: f64,
) -> Result<Vec<Propagator>> {
    let last = times.last().copied().unwrap_or(s);
    check_propagation(phi, s, last, step)?;
    if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|&t0| t0 < s) {
        return Err(Error::InvalidArgument("time grid must be non-decreasing and start at or after s".into()));
    }
    let compiled = phi.compile(lambda)?;
    let mut stepper = Stepper::new(&compiled);
    let mut u = CMatrix::identity(lambda.dim(), lambda.dim());
    let mut meta = (0, 0, 0.0);
    let mut prev = s;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        stepper.advance(&mut u, prev, t, step, &mut meta);
        prev = t;
        out.push(Propagator {
            matrix: u.clone(),
            ambient: lambda.clone(),
            start: s,
            end: t,
            step: meta.2,
            steps: meta.0,
            unitarity_defect: frobenius_defect(&u),
            corrections: meta.1,
        });
    }
    Ok(out)
}

fn check_dims(a: &FockOperator, u: &Propagator) -> Result<()> {
    if a.dim() != u.matrix.nrows() {
        return Err(Error::DimensionMismatch { expected: u.matrix.nrows(), found: a.dim() });
    }
    if **a.ambient() != *u.ambient {
        return Err(Error::AmbientMismatch);
    }
    Ok(())
}

/// `τ_{t,s}(A) = U* A U`.
pub fn heisenberg(a: &FockOperator, u: &Propagator) -> Result<FockOperator> {
    check_dims(a, u)?;
    let m = linalg::conjugate_by(a.matrix(), &u.matrix);
    FockOperator::from_parts(m, a.ambient().clone(), a.ambient().region(), a.parity())
}

/// `τ̂_{t,s}(A) = U A U*`, the inverse of [`heisenberg`].
pub fn inverse_heisenberg(a: &FockOperator, u: &Propagator) -> Result<FockOperator> {
    check_dims(a, u)?;
    let m = linalg::conjugate_by(a.matrix(), &u.matrix.adjoint());
    FockOperator::from_parts(m, a.ambient().clone(), a.ambient().region(), a.parity())
}

/// Dense time-independent generator convenience: `exp(-i H (t-s))`.
pub fn exact_propagator(h: &FockOperator, s: f64, t: f64) -> Propagator {
    let matrix = linalg::expm_minus_i(h.matrix(), t - s);
    let unitarity_defect = linalg::unitarity_defect(&matrix);
    Propagator {
        matrix,
        ambient: h.ambient().clone(),
        start: s,
        end: t,
        step: (t - s).abs(),
        steps: 1,
        unitarity_defect,
        corrections: 0,
    }
}
