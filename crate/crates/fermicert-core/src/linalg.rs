//! Dense complex linear algebra used throughout the crate.
//!
//! Everything here operates on `DMatrix<Complex64>`. The Hermitian
//! eigendecomposition is the workhorse: norms, exponentials, kernel
//! projections and spectra all go through [`eigh`].

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Eigenpairs of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Eigenvectors stored as columns, in the order of `values`.
    pub vectors: CMatrix,
}

impl HermitianEigen {
    /// Rebuilds `Σ f(λ_k) v_k v_k*`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> C64) -> CMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for (k, &lambda) in self.values.iter().enumerate() {
            let w = f(lambda);
            for r in 0..n {
                scaled[(r, k)] *= w;
            }
        }
        mul(&scaled, &self.vectors.adjoint())
    }

    /// Projection onto the span of the eigenvectors selected by `keep`.
    pub fn projection(&self, keep: impl Fn(usize, f64) -> bool) -> CMatrix {
        let n = self.values.len();
        let cols: Vec<usize> = (0..n).filter(|&k| keep(k, self.values[k])).collect();
        let mut v = CMatrix::zeros(n, cols.len());
        for (j, &k) in cols.iter().enumerate() {
            v.set_column(j, &self.vectors.column(k));
        }
        mul(&v, &v.adjoint())
    }
}

/// Below this size the direct complex product is faster than the split.
const SPLIT_MUL_MIN: usize = 24;

/// `a · b`, computed as four real products for larger sizes, which routes
/// through the blocked real kernel.
pub fn mul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    assert_eq!(a.ncols(), b.nrows(), "matrix product dimension mismatch");
    if a.nrows().min(a.ncols()).min(b.ncols()) < SPLIT_MUL_MIN {
        return a * b;
    }
    let (ar, ai) = (a.map(|z| z.re), a.map(|z| z.im));
    let (br, bi) = (b.map(|z| z.re), b.map(|z| z.im));
    let re = &ar * &br - &ai * &bi;
    let im = &ar * &bi + &ai * &br;
    re.zip_map(&im, C64::new)
}

/// `U* A U`.
pub fn conjugate_by(a: &CMatrix, u: &CMatrix) -> CMatrix {
    mul(&mul(&u.adjoint(), a), u)
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Frobenius norm of `m - m*`; an upper bound on the operator-norm defect.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in i..n {
            let d = m[(i, j)] - m[(j, i)].conj();
            let w = if i == j { 1.0 } else { 2.0 };
            acc += w * d.norm_sqr();
        }
    }
    libm::sqrt(acc)
}

fn anti_hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in i..n {
            let d = m[(i, j)] + m[(j, i)].conj();
            let w = if i == j { 1.0 } else { 2.0 };
            acc += w * d.norm_sqr();
        }
    }
    libm::sqrt(acc)
}

pub fn frobenius(m: &CMatrix) -> f64 {
    libm::sqrt(m.iter().map(|z| z.norm_sqr()).sum::<f64>())
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Full eigendecomposition of the Hermitian part of `m`.
pub fn eigh(m: &CMatrix) -> HermitianEigen {
    let n = m.nrows();
    if n == 0 {
        return HermitianEigen { values: Vec::new(), vectors: CMatrix::zeros(0, 0) };
    }
    let eig = hermitian_part(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (j, &k) in order.iter().enumerate() {
        vectors.set_column(j, &eig.eigenvectors.column(k));
    }
    HermitianEigen { values, vectors }
}

/// Ascending eigenvalues of the Hermitian part of `m`.
pub fn eigvalsh(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let mut v: Vec<f64> = hermitian_part(m).symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Largest singular value.
///
/// Hermitian and anti-Hermitian inputs (the common case: observables and
/// commutators of observables) are handled through their own spectrum; other
/// matrices through the spectrum of `m* m`.
pub fn op_norm(m: &CMatrix) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    let scale = max_abs(m);
    if scale == 0.0 {
        return 0.0;
    }
    let tol = 1e-14 * scale * m.nrows() as f64;
    if hermiticity_defect(m) <= tol {
        let ev = eigvalsh(m);
        return ev[0].abs().max(ev[ev.len() - 1].abs());
    }
    if anti_hermiticity_defect(m) <= tol {
        let ev = eigvalsh(&m.map(|z| z * I));
        return ev[0].abs().max(ev[ev.len() - 1].abs());
    }
    let gram = mul(&m.adjoint(), m);
    let ev = eigvalsh(&gram);
    libm::sqrt(ev[ev.len() - 1].max(0.0))
}

/// `exp(-i t H)` for Hermitian `H`, through the spectral decomposition.
pub fn expm_minus_i(h: &CMatrix, t: f64) -> CMatrix {
    eigh(h).map_spectrum(|lambda| C64::from_polar(1.0, -lambda * t))
}

/// `exp(K)` for anti-Hermitian `K`, via the Hermitian matrix `iK`.
pub fn expm_anti_hermitian(k: &CMatrix) -> CMatrix {
    // K = -i (iK), so exp(K) = exp(-i (iK)).
    let h = k.map(|z| z * I);
    expm_minus_i(&h, 1.0)
}

/// Nearest unitary in the polar decomposition `M = W P`.
pub fn polar_unitary(m: &CMatrix) -> CMatrix {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("svd computed with u");
    let v_t = svd.v_t.expect("svd computed with v_t");
    mul(&u, &v_t)
}

/// `‖U* U - 1‖` in operator norm.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let n = u.nrows();
    let g = mul(&u.adjoint(), u) - CMatrix::identity(n, n);
    op_norm(&g)
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    mul(a, b) - mul(b, a)
}

pub fn anticommutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    mul(a, b) + mul(b, a)
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().copied().sum()
}

/// Numerical rank of a Hermitian positive semidefinite matrix.
pub fn psd_rank(m: &CMatrix, rel_tol: f64) -> usize {
    let ev = eigvalsh(m);
    let top = ev.last().copied().unwrap_or(0.0).abs();
    if top == 0.0 {
        return 0;
    }
    ev.iter().filter(|&&l| l > rel_tol * top).count()
}

/// Matrix-free application hook.
///
/// Anything that can apply itself (and its adjoint) to a vector can be used
/// by the iterative routines below without materializing a dense matrix.
pub trait LinearAction {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[C64], y: &mut [C64]);
    fn apply_adjoint(&self, x: &[C64], y: &mut [C64]);
}

impl LinearAction for CMatrix {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        let n = self.nrows();
        for (r, out) in y.iter_mut().enumerate().take(n) {
            let mut acc = ZERO;
            for (c, xc) in x.iter().enumerate() {
                acc += self[(r, c)] * xc;
            }
            *out = acc;
        }
    }

    fn apply_adjoint(&self, x: &[C64], y: &mut [C64]) {
        let n = self.nrows();
        for (c, out) in y.iter_mut().enumerate().take(n) {
            let mut acc = ZERO;
            for (r, xr) in x.iter().enumerate() {
                acc += self[(r, c)].conj() * xr;
            }
            *out = acc;
        }
    }
}

/// Power iteration on `A* A`; returns a lower estimate of `‖A‖` that
/// converges from below.
pub fn norm_estimate<A: LinearAction + ?Sized>(op: &A, iterations: usize) -> f64 {
    let n = op.dim();
    if n == 0 {
        return 0.0;
    }
    // Deterministic, generic start vector with no special symmetry.
    let mut x: Vec<C64> = (0..n)
        .map(|k| {
            let t = k as f64 + 1.0;
            C64::new(libm::sin(1.3 * t) + 1.1, libm::cos(0.7 * t))
        })
        .collect();
    let mut y = vec![ZERO; n];
    let mut estimate = 0.0;
    for _ in 0..iterations {
        let nx = libm::sqrt(x.iter().map(|z| z.norm_sqr()).sum::<f64>());
        if nx == 0.0 {
            return 0.0;
        }
        x.iter_mut().for_each(|z| *z /= nx);
        op.apply(&x, &mut y);
        estimate = libm::sqrt(y.iter().map(|z| z.norm_sqr()).sum::<f64>());
        op.apply_adjoint(&y, &mut x);
    }
    estimate
}
