//! Spectral gaps: frustration-freeness, kernel projections, the martingale
//! method and gap-protected transport of spectral projections.

use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec::Vec;

use serde::Serialize;

use crate::dynamics::{local_hamiltonian, Interaction};
use crate::error::{Error, Result};
use crate::fock::{FockOperator, Parity, Region, SiteSet};
use crate::linalg::{self, CMatrix, HermitianEigen, C64};

/// Kernel tolerance relative to `max(‖H‖, 1)`.
pub const KERNEL_RTOL: f64 = 1e-8;
/// Non-kernel eigenvalues must clear the kernel tolerance by this factor.
pub const KERNEL_GUARD: f64 = 10.0;
/// Tolerance for exact commutation and for resolution-of-identity defects.
pub const PROJECTION_TOL: f64 = 1e-10;
pub const FRUSTRATION_TOL: f64 = 1e-9;
const HERMITIAN_TOL: f64 = 1e-12;

fn check_hermitian(h: &CMatrix) -> Result<()> {
    let defect = linalg::hermiticity_defect(h);
    if defect > HERMITIAN_TOL * linalg::max_abs(h).max(1.0) {
        return Err(Error::NotHermitian(defect));
    }
    Ok(())
}

/// Sorted eigenvalues of a self-adjoint operator.
pub fn spectrum(h: &FockOperator) -> Result<Vec<f64>> {
    check_hermitian(h.matrix())?;
    Ok(linalg::eigvalsh(h.matrix()))
}

pub fn default_kernel_tol(h: &CMatrix) -> f64 {
    KERNEL_RTOL * linalg::op_norm(h).max(1.0)
}

/// Spectral data of a non-negative operator split at the kernel tolerance.
#[derive(Clone, Debug)]
pub struct KernelSplit {
    pub eigen: HermitianEigen,
    pub tol: f64,
    /// Number of eigenvalues at most `tol`.
    pub rank: usize,
}

impl KernelSplit {
    pub fn new(h: &CMatrix, tol: Option<f64>) -> Result<Self> {
        check_hermitian(h)?;
        let tol = tol.unwrap_or_else(|| default_kernel_tol(h));
        let eigen = linalg::eigh(h);
        if let Some(&low) = eigen.values.first() {
            if low < -tol {
                return Err(Error::NotPositive(low));
            }
        }
        if let Some(&bad) = eigen.values.iter().find(|&&l| l > tol && l < KERNEL_GUARD * tol) {
            return Err(Error::AmbiguousKernel { eigenvalue: bad, tol });
        }
        let rank = eigen.values.iter().filter(|&&l| l <= tol).count();
        Ok(Self { eigen, tol, rank })
    }

    pub fn projection(&self) -> CMatrix {
        let r = self.rank;
        self.eigen.projection(|k, _| k < r)
    }

    /// Smallest eigenvalue above the kernel.
    pub fn gap(&self) -> Option<f64> {
        self.eigen.values.get(self.rank).copied()
    }

    /// Largest amount by which a kernel eigenvalue is negative.
    pub fn negativity(&self) -> f64 {
        self.eigen.values.first().map_or(0.0, |&l| (-l).max(0.0))
    }
}

/// Orthogonal projection onto `ker H`, with `ker` taken at `tol`
/// (default `1e-8 · max(‖H‖, 1)`).
pub fn kernel_projection(h: &FockOperator, tol: Option<f64>) -> Result<FockOperator> {
    let split = KernelSplit::new(h.matrix(), tol)?;
    let parity = if h.parity() == Parity::Even { Parity::Even } else { Parity::Mixed };
    FockOperator::from_parts(split.projection(), h.ambient().clone(), h.ambient().region(), parity)
}

#[derive(Clone, Debug, Serialize)]
pub struct FrustrationFreeReport {
    pub frustration_free: bool,
    pub ground_energy: f64,
    /// `Σ_X inf spec Φ(X)`.
    pub term_minimum_sum: f64,
    pub residual: f64,
    /// `max_X ‖Φ(X) P_0‖` over ground vectors when every term has minimum zero.
    pub annihilation_defect: Option<f64>,
}

/// Compares `inf spec H_Λ` with `Σ_X inf spec Φ(X)`.
pub fn frustration_free_check(phi: &Interaction, lambda: &Arc<SiteSet>) -> Result<FrustrationFreeReport> {
    if !phi.is_time_independent() {
        return Err(Error::Precondition("frustration-freeness is checked for time-independent interactions".into()));
    }
    let t = phi.interval().0.max(0.0).min(phi.interval().1);
    let region = lambda.region();
    let mut groups: BTreeMap<&Region, Vec<_>> = BTreeMap::new();
    for term in phi.terms_within(&region) {
        groups.entry(term.region()).or_default().push(term);
    }
    let mut minima = Vec::with_capacity(groups.len());
    let mut term_matrices = Vec::with_capacity(groups.len());
    for (x, terms) in &groups {
        let local = SiteSet::from_region(x);
        let mut m = CMatrix::zeros(local.dim(), local.dim());
        let mut global = CMatrix::zeros(lambda.dim(), lambda.dim());
        for term in terms {
            let c = term.coefficient(t);
            m += term.poly().matrix(&local)?.scale(c);
            global += term.poly().matrix(lambda)?.scale(c);
        }
        minima.push(linalg::eigvalsh(&m)[0]);
        term_matrices.push(global);
    }
    let h = local_hamiltonian(phi, lambda, t)?;
    let eigen = linalg::eigh(h.matrix());
    let ground_energy = eigen.values[0];
    let term_minimum_sum: f64 = minima.iter().sum();
    let residual = ground_energy - term_minimum_sum;
    let frustration_free = residual.abs() <= FRUSTRATION_TOL;
    let annihilation_defect = if frustration_free && minima.iter().all(|m| m.abs() <= FRUSTRATION_TOL) {
        let tol = FRUSTRATION_TOL.max(default_kernel_tol(h.matrix()));
        let rank = eigen.values.iter().filter(|&&l| l <= ground_energy + tol).count();
        let ground = eigen.vectors.columns(0, rank).into_owned();
        Some(term_matrices.iter().map(|m| linalg::frobenius(&linalg::mul(m, &ground))).fold(0.0, f64::max))
    } else {
        None
    };
    Ok(FrustrationFreeReport { frustration_free, ground_energy, term_minimum_sum, residual, annihilation_defect })
}

/// `E_0 = 1 − G_1`, `E_n = G_n − G_{n+1}`, `E_N = G_N` from decreasing
/// projections `G_1 ≥ … ≥ G_N`.
pub fn resolution_family(gs: &[FockOperator]) -> Result<Vec<FockOperator>> {
    let mats: Vec<CMatrix> = gs.iter().map(|g| g.matrix().clone()).collect();
    let first = gs.first().ok_or_else(|| Error::InvalidArgument("need at least one projection".into()))?;
    let es = resolution_matrices(&mats)?;
    es.into_iter()
        .map(|m| FockOperator::from_parts(m, first.ambient().clone(), first.ambient().region(), first.parity()))
        .collect()
}

fn resolution_matrices(gs: &[CMatrix]) -> Result<Vec<CMatrix>> {
    let d = gs[0].nrows();
    for n in 1..gs.len() {
        let nesting = linalg::frobenius(&(&gs[n] - linalg::mul(&gs[n], &gs[n - 1])));
        if nesting > PROJECTION_TOL {
            return Err(Error::NestingViolation(n + 1));
        }
    }
    let mut es = Vec::with_capacity(gs.len() + 1);
    es.push(CMatrix::identity(d, d) - &gs[0]);
    for n in 1..gs.len() {
        es.push(&gs[n - 1] - &gs[n]);
    }
    es.push(gs[gs.len() - 1].clone());
    Ok(es)
}

/// Largest defects of `E_n* = E_n`, `E_n E_m = δ_{nm} E_n` and `Σ E_n = 1`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct ResolutionDefects {
    pub hermiticity: f64,
    pub orthogonality: f64,
    pub completeness: f64,
}

impl ResolutionDefects {
    pub fn max(&self) -> f64 {
        self.hermiticity.max(self.orthogonality).max(self.completeness)
    }
}

pub fn resolution_defects(es: &[FockOperator]) -> ResolutionDefects {
    let mats: Vec<CMatrix> = es.iter().map(|e| e.matrix().clone()).collect();
    matrix_resolution_defects(&mats)
}

fn matrix_resolution_defects(es: &[CMatrix]) -> ResolutionDefects {
    let mut out = ResolutionDefects::default();
    let Some(first) = es.first() else { return out };
    let d = first.nrows();
    let mut sum = CMatrix::zeros(d, d);
    for (n, e) in es.iter().enumerate() {
        sum += e;
        out.hermiticity = out.hermiticity.max(linalg::hermiticity_defect(e));
        for (m, f) in es.iter().enumerate() {
            let prod = linalg::mul(e, f);
            let target = if n == m { prod - e } else { prod };
            out.orthogonality = out.orthogonality.max(linalg::frobenius(&target));
        }
    }
    out.completeness = linalg::frobenius(&(sum - CMatrix::identity(d, d)));
    out
}

/// `0 = H_0 ≤ H_1 ≤ … ≤ H_N`, stored with the increments `h_n = H_n − H_{n−1}`.
#[derive(Clone, Debug)]
pub struct HamiltonianSequence {
    partial: Vec<FockOperator>,
    increments: Vec<FockOperator>,
    tol: f64,
}

impl HamiltonianSequence {
    /// From `H_1, …, H_N`.
    pub fn from_partial_sums(partial: Vec<FockOperator>) -> Result<Self> {
        let mut increments = Vec::with_capacity(partial.len());
        for (n, h) in partial.iter().enumerate() {
            increments.push(if n == 0 { h.clone() } else { h.minus(&partial[n - 1])? });
        }
        Self::build(partial, increments)
    }

    /// From `h_1, …, h_N`.
    pub fn from_increments(increments: Vec<FockOperator>) -> Result<Self> {
        let mut partial: Vec<FockOperator> = Vec::with_capacity(increments.len());
        for h in &increments {
            partial.push(match partial.last() {
                Some(prev) => prev.plus(h)?,
                None => h.clone(),
            });
        }
        Self::build(partial, increments)
    }

    fn build(partial: Vec<FockOperator>, increments: Vec<FockOperator>) -> Result<Self> {
        let last = partial.last().ok_or_else(|| Error::InvalidArgument("empty Hamiltonian sequence".into()))?;
        let tol = default_kernel_tol(last.matrix());
        for h in partial.iter().chain(&increments) {
            check_hermitian(h.matrix())?;
            if h.parity_defect(Parity::Even) > crate::fock::PARITY_TOL * h.norm().max(1.0) {
                return Err(Error::NotEven);
            }
        }
        Ok(Self { partial, increments, tol })
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn len(&self) -> usize {
        self.partial.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partial.is_empty()
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    /// `H_n` for `1 ≤ n ≤ N`.
    pub fn partial_sum(&self, n: usize) -> &FockOperator {
        &self.partial[n - 1]
    }

    /// `h_n` for `1 ≤ n ≤ N`.
    pub fn increment(&self, n: usize) -> &FockOperator {
        &self.increments[n - 1]
    }

    pub fn last(&self) -> &FockOperator {
        &self.partial[self.partial.len() - 1]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertificateStatus {
    Certified,
    /// `ε √(1+ℓ) ≥ 1`.
    EpsilonTooLarge,
    /// Some `[E_k, g_{n+1}] ≠ 0` with `k > n`, so no `ℓ` exists.
    NoLocality,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct AssumptionDefects {
    /// Largest negative part of `h_n − γ(1 − g_n)`.
    pub positivity: f64,
    /// Largest `‖[E_k, g_{n+1}]‖` over pairs treated as commuting.
    pub commutation: f64,
    pub resolution: f64,
    /// Largest negative eigenvalue of any `h_n`.
    pub monotonicity: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GapCertificate {
    pub gamma: f64,
    pub ell: Option<usize>,
    pub epsilon: f64,
    pub bound: Option<f64>,
    pub exact_gap: Option<f64>,
    pub status: CertificateStatus,
    pub defects: AssumptionDefects,
    /// `dim ker H_n` for `n = 1..N`.
    pub kernel_dims: Vec<usize>,
    /// `‖E_n g_{n+1} E_n‖` for `n = 0..N−1`.
    pub epsilon_squared: Vec<f64>,
    pub steps: usize,
}

/// `γ (1 − ε √(1+ℓ))²` when `ε √(1+ℓ) < 1`.
pub fn martingale_bound(gamma: f64, ell: usize, epsilon: f64) -> Option<f64> {
    let x = epsilon * libm::sqrt(1.0 + ell as f64);
    (x < 1.0).then(|| gamma * (1.0 - x) * (1.0 - x))
}

/// Evaluates the three assumptions of the martingale method and the
/// resulting lower bound on the gap of `H_N` above its kernel.
pub fn martingale_certificate(seq: &HamiltonianSequence) -> Result<GapCertificate> {
    let n_steps = seq.len();
    let tol = seq.tolerance();
    let mut gs = Vec::with_capacity(n_steps);
    let mut small_gs = Vec::with_capacity(n_steps);
    let mut kernel_dims = Vec::with_capacity(n_steps);
    let mut gamma = f64::INFINITY;
    let mut defects = AssumptionDefects::default();
    let mut exact_gap = None;
    for n in 1..=n_steps {
        let big = KernelSplit::new(seq.partial_sum(n).matrix(), Some(tol))?;
        kernel_dims.push(big.rank);
        if n == n_steps {
            exact_gap = big.gap();
        }
        gs.push(big.projection());
        let small = KernelSplit::new(seq.increment(n).matrix(), Some(tol))?;
        defects.monotonicity = defects.monotonicity.max(small.negativity());
        if let Some(g) = small.gap() {
            gamma = gamma.min(g);
        }
        small_gs.push(small.projection());
    }
    if !gamma.is_finite() {
        return Err(Error::Precondition("every increment vanishes; no gap scale".into()));
    }
    // Eigenvalues above the kernel are ≥ γ by construction, so only the kernel part can be negative.
    defects.positivity = defects.monotonicity;

    let es = resolution_matrices(&gs)?;
    defects.resolution = matrix_resolution_defects(&es).max();

    let mut ell = Some(0usize);
    for n in 0..n_steps {
        let g_next = &small_gs[n];
        for (k, e) in es.iter().enumerate() {
            let c = linalg::frobenius(&linalg::commutator(e, g_next));
            if c <= PROJECTION_TOL {
                defects.commutation = defects.commutation.max(c);
            } else if k > n {
                ell = None;
            } else if let Some(l) = ell.as_mut() {
                *l = (*l).max(n - k);
            }
        }
    }

    let mut epsilon_squared = Vec::with_capacity(n_steps);
    for n in 0..n_steps {
        let sandwich = linalg::mul(&linalg::mul(&es[n], &small_gs[n]), &es[n]);
        epsilon_squared.push(linalg::op_norm(&linalg::hermitian_part(&sandwich)));
    }
    let epsilon = libm::sqrt(epsilon_squared.iter().copied().fold(0.0, f64::max));
    let (bound, status) = match ell {
        None => (None, CertificateStatus::NoLocality),
        Some(l) => match martingale_bound(gamma, l, epsilon) {
            Some(b) => (Some(b), CertificateStatus::Certified),
            None => (None, CertificateStatus::EpsilonTooLarge),
        },
    };
    Ok(GapCertificate {
        gamma,
        ell,
        epsilon,
        bound,
        exact_gap,
        status,
        defects,
        kernel_dims,
        epsilon_squared,
        steps: n_steps,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sandwich {
    /// Largest `c` with `c H_N ≤ H − E`.
    pub lower: f64,
    /// Smallest `C` with `H − E ≤ C H_N`.
    pub upper: f64,
    pub ground_energy: f64,
}

/// Constants in `c H_N ≤ H_target − E 1 ≤ C H_N`.
pub fn sandwich_check(target: &FockOperator, h_n: &FockOperator) -> Result<Sandwich> {
    if **target.ambient() != **h_n.ambient() {
        return Err(Error::AmbientMismatch);
    }
    check_hermitian(target.matrix())?;
    let ground_energy = linalg::eigvalsh(target.matrix())[0];
    let d = target.dim();
    let k = target.matrix() - CMatrix::identity(d, d).scale(ground_energy);
    let split = KernelSplit::new(h_n.matrix(), None)?;
    let r = split.rank;
    let kernel = split.eigen.vectors.columns(0, r).into_owned();
    let leak = linalg::mul(&k, &kernel);
    let scale = linalg::op_norm(&k).max(1.0);
    if let Some(j) = (0..r).max_by(|&a, &b| leak.column(a).norm().total_cmp(&leak.column(b).norm())) {
        let residual = leak.column(j).norm();
        if residual > PROJECTION_TOL * scale {
            let witness = kernel.column(j).iter().map(|z| (z.re, z.im)).collect();
            return Err(Error::KernelMismatch { residual, witness });
        }
    }
    if r == d {
        return Ok(Sandwich { lower: 0.0, upper: 0.0, ground_energy });
    }
    let mut v = split.eigen.vectors.columns(r, d - r).into_owned();
    for (j, &lambda) in split.eigen.values[r..].iter().enumerate() {
        v.column_mut(j).scale_mut(1.0 / libm::sqrt(lambda));
    }
    let reduced = linalg::mul(&linalg::mul(&v.adjoint(), &k), &v);
    let ev = linalg::eigvalsh(&linalg::hermitian_part(&reduced));
    Ok(Sandwich { lower: ev[0], upper: ev[ev.len() - 1], ground_energy })
}

#[derive(Clone, Debug)]
pub struct FlowOptions {
    /// Smallest admissible gap between the tracked cluster and the rest.
    pub gap_min: f64,
    /// Size of the tracked lowest cluster; defaults to the ground-state degeneracy at the first grid point.
    pub rank: Option<usize>,
    /// Largest `‖P(s+δ) − P(s)‖` accepted for a transport step.
    pub max_projector_step: f64,
    pub min_substeps: usize,
    pub max_substeps: usize,
    pub time: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self { gap_min: 1e-2, rank: None, max_projector_step: 0.1, min_substeps: 64, max_substeps: 1 << 14, time: 0.0 }
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct FlowReport {
    pub grid: Vec<f64>,
    pub rank: usize,
    pub traces: Vec<f64>,
    pub gaps: Vec<f64>,
    /// `‖P(s) − U(s) P(s_0) U(s)*‖` at each grid point.
    pub defects: Vec<f64>,
    pub max_defect: f64,
    pub min_gap: f64,
    pub substeps: usize,
}

struct Cluster {
    projection: CMatrix,
    gap: f64,
}

fn cluster(h: &CMatrix, rank: usize) -> Result<Cluster> {
    let eigen = linalg::eigh(h);
    if rank == 0 || rank >= eigen.values.len() {
        return Err(Error::InvalidArgument(alloc::format!("cluster rank {rank} out of range")));
    }
    let gap = eigen.values[rank] - eigen.values[rank - 1];
    Ok(Cluster { projection: eigen.projection(|k, _| k < rank), gap })
}

/// Transports the spectral projection onto the lowest `rank` eigenvalues of
/// `H(s)` along `grid` with Kato's generator `K = [P', P]`, and compares
/// `U(s) P(s_0) U(s)*` with `P(s)` computed directly.
pub fn projection_flow<F>(family: F, lambda: &Arc<SiteSet>, grid: &[f64], options: &FlowOptions) -> Result<FlowReport>
where
    F: Fn(f64) -> Result<Interaction>,
{
    let hamiltonian =
        |s: f64| -> Result<CMatrix> { Ok(local_hamiltonian(&family(s)?, lambda, options.time)?.into_matrix()) };
    projection_flow_matrices(hamiltonian, grid, options)
}

/// [`projection_flow`] for a family given directly as matrices.
pub fn projection_flow_matrices<F>(hamiltonian: F, grid: &[f64], options: &FlowOptions) -> Result<FlowReport>
where
    F: Fn(f64) -> Result<CMatrix>,
{
    if grid.is_empty() || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("flow grid must be strictly increasing".into()));
    }
    if !(options.gap_min > 0.0) {
        return Err(Error::InvalidArgument("gap_min must be positive".into()));
    }
    let h0 = hamiltonian(grid[0])?;
    check_hermitian(&h0)?;
    let rank = match options.rank {
        Some(r) => r,
        None => {
            let ev = linalg::eigvalsh(&h0);
            let tol = KERNEL_RTOL * linalg::op_norm(&h0).max(1.0);
            ev.iter().filter(|&&l| l <= ev[0] + tol).count()
        }
    };
    let eval = |s: f64| -> Result<Cluster> { cluster(&hamiltonian(s)?, rank) };
    let locate = |lo: f64, hi: f64| -> Result<f64> {
        let (mut lo, mut hi) = (lo, hi);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if eval(mid)?.gap >= options.gap_min {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    };

    let start = eval(grid[0])?;
    if start.gap < options.gap_min {
        return Err(Error::GapClosure { s: grid[0], gap: start.gap, gap_min: options.gap_min });
    }
    let p0 = start.projection.clone();
    let d = p0.nrows();
    let mut u = CMatrix::identity(d, d);
    let mut report = FlowReport { grid: grid.to_vec(), rank, min_gap: start.gap, ..FlowReport::default() };
    report.traces.push(linalg::trace(&p0).re);
    report.gaps.push(start.gap);
    report.defects.push(0.0);

    let mut current = start;
    for w in grid.windows(2) {
        let (a, b) = (w[0], w[1]);
        // Substep nodes with projector increments small enough to stay on one branch.
        let mut m = options.min_substeps.max(1);
        let nodes = loop {
            let mut nodes = Vec::with_capacity(m + 1);
            let mut ok = true;
            let mut prev_s = a;
            for j in 0..=m {
                let s = a + (b - a) * j as f64 / m as f64;
                let c = if j == 0 {
                    Cluster { projection: current.projection.clone(), gap: current.gap }
                } else {
                    eval(s)?
                };
                if c.gap < options.gap_min {
                    return Err(Error::GapClosure { s: locate(prev_s, s)?, gap: c.gap, gap_min: options.gap_min });
                }
                if let Some(last) = nodes.last() {
                    let last: &(f64, Cluster) = last;
                    if linalg::op_norm(&(&c.projection - &last.1.projection)) > options.max_projector_step {
                        ok = false;
                        break;
                    }
                }
                prev_s = s;
                nodes.push((s, c));
            }
            if ok {
                break nodes;
            }
            if m >= options.max_substeps {
                return Err(Error::Precondition("projection varies too fast for the substep limit".into()));
            }
            m *= 2;
        };
        for pair in nodes.windows(2) {
            let ((sa, ca), (sb, cb)) = (&pair[0], &pair[1]);
            let delta = sb - sa;
            let mid = eval(0.5 * (sa + sb))?;
            report.min_gap = report.min_gap.min(mid.gap);
            let dp = (&cb.projection - &ca.projection) / C64::new(delta, 0.0);
            let k = linalg::commutator(&dp, &mid.projection);
            u = linalg::mul(&linalg::expm_anti_hermitian(&k.scale(delta)), &u);
        }
        report.substeps += m;
        let (_, last) = nodes.into_iter().last().expect("at least two nodes");
        let transported = linalg::conjugate_by(&p0, &u.adjoint());
        let defect = linalg::op_norm(&(&last.projection - transported));
        report.min_gap = report.min_gap.min(last.gap);
        report.traces.push(linalg::trace(&last.projection).re);
        report.gaps.push(last.gap);
        report.defects.push(defect);
        report.max_defect = report.max_defect.max(defect);
        current = last;
    }
    Ok(report)
}
