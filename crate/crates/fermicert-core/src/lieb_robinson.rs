//! Lieb-Robinson bounds for even fermionic interactions, measured against the
//! true evolved (anti)commutators.
//!
//! For `A ∈ 𝒜_X`, `B ∈ 𝒜_Y` with `X ∩ Y = ∅` and `A` or `B` even,
//!
//! ```text
//! ‖[τ_{t,s}(A), B]‖ ≤ 2‖A‖‖B‖ (exp[2∫_s^t ‖Φ‖_G] - 1) Σ_{x∈∂_Φ X} Σ_{y∈Y} G(x,y),
//! ```
//!
//! and the same right-hand side bounds `‖{τ_{t,s}(A), B}‖` when both are odd.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use serde::Serialize;

use crate::dynamics::{propagate_grid, Interaction, DEFAULT_STEP};
use crate::error::{Error, Result};
use crate::fock::{FockOperator, Parity, Region};
use crate::geometry::{interaction_g_norm_integral, phi_boundary, uniform_grid, GFunction, DEFAULT_TIME_GRID};
use crate::linalg;

/// Relative slack on `m(t) ≤ b(t)`.
pub const CERTIFY_RTOL: f64 = 1e-9;
/// Absolute slack, relative to `‖A‖‖B‖`, absorbing round-off in `m(t)` when `b(t) = 0`.
pub const CERTIFY_ATOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundMode {
    Commutator,
    Anticommutator,
}

impl BoundMode {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundMode::Commutator => "commutator",
            BoundMode::Anticommutator => "anticommutator",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ObservableSummary {
    pub label: String,
    pub support: Region,
    pub norm: f64,
    pub parity: Parity,
}

/// One time sample of a certification run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LRRow {
    pub t: f64,
    pub measured: f64,
    pub bound: f64,
    pub ratio: f64,
    pub phi_norm_integral: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LRBoundReport {
    pub mode: BoundMode,
    pub a: ObservableSummary,
    pub b: ObservableSummary,
    pub start: f64,
    /// `∂_Φ X` on the sampled grid.
    pub boundary: Region,
    /// `Σ_{x∈∂_Φ X} Σ_{y∈Y} G(x,y)`.
    pub geometry: f64,
    pub g_norm: f64,
    pub rows: Vec<LRRow>,
    pub max_unitarity_defect: f64,
}

impl LRBoundReport {
    /// Row with the largest `m/b`.
    pub fn worst(&self) -> Option<&LRRow> {
        self.rows.iter().max_by(|a, b| a.ratio.total_cmp(&b.ratio))
    }

    pub fn violations(&self) -> impl Iterator<Item = &LRRow> + '_ {
        let slack = CERTIFY_ATOL * self.a.norm * self.b.norm;
        self.rows.iter().filter(move |r| r.measured > r.bound * (1.0 + CERTIFY_RTOL) + slack)
    }

    pub fn is_certified(&self) -> bool {
        self.violations().next().is_none()
    }

    /// Fails with the worst offending `(t, m, b)` if any row violates the bound.
    pub fn ensure_certified(&self) -> Result<()> {
        match self.violations().max_by(|a, b| (a.measured - a.bound).total_cmp(&(b.measured - b.bound))) {
            Some(r) => Err(Error::CertificationFailed { t: r.t, measured: r.measured, bound: r.bound }),
            None => Ok(()),
        }
    }

    pub fn with_labels(mut self, a: &str, b: &str) -> Self {
        self.a.label = a.into();
        self.b.label = b.into();
        self
    }
}

/// `2‖A‖‖B‖ (exp(2 I) − 1) · geometry`.
pub fn lr_rhs(norm_a: f64, norm_b: f64, phi_norm_integral: f64, geometry: f64) -> f64 {
    2.0 * norm_a * norm_b * libm::expm1(2.0 * phi_norm_integral) * geometry
}

/// `δ_Y(X)`.
pub fn delta_indicator(x: &Region, y: &Region) -> u8 {
    u8::from(x.intersects(y))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesDiagnostics {
    /// `2‖A‖‖B‖ Σ_{n=1}^{N} (2I)^n/n! · geometry` for `N = 1, 2, …`.
    pub partial_sums: Vec<f64>,
    /// `2‖B‖ |∂_Φ X| ‖G‖ (2I)^{N+1}/(N+1)!` at the final `N`.
    pub remainder_bound: f64,
    pub closed_form: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct SeriesInputs {
    pub norm_a: f64,
    pub norm_b: f64,
    pub g_norm: f64,
    pub boundary_size: usize,
    pub phi_norm_integral: f64,
    pub geometry: f64,
}

impl SeriesInputs {
    pub fn from_report(report: &LRBoundReport, row: &LRRow) -> Self {
        Self {
            norm_a: report.a.norm,
            norm_b: report.b.norm,
            g_norm: report.g_norm,
            boundary_size: report.boundary.len(),
            phi_norm_integral: row.phi_norm_integral,
            geometry: report.geometry,
        }
    }
}

pub fn series_diagnostics(inputs: &SeriesInputs, n: usize) -> Result<SeriesDiagnostics> {
    if n == 0 {
        return Err(Error::InvalidArgument("series order must be at least 1".into()));
    }
    let x = 2.0 * inputs.phi_norm_integral;
    let prefactor = 2.0 * inputs.norm_a * inputs.norm_b * inputs.geometry;
    let mut term = 1.0;
    let mut sum = 0.0;
    let mut partial_sums = Vec::with_capacity(n);
    for k in 1..=n {
        term *= x / k as f64;
        sum += term;
        partial_sums.push(prefactor * sum);
    }
    let next = term * x / (n + 1) as f64;
    Ok(SeriesDiagnostics {
        partial_sums,
        remainder_bound: 2.0 * inputs.norm_b * inputs.boundary_size as f64 * inputs.g_norm * next,
        closed_form: lr_rhs(inputs.norm_a, inputs.norm_b, inputs.phi_norm_integral, inputs.geometry),
    })
}

#[derive(Clone, Debug)]
pub struct CertifyOptions {
    pub mode: Option<BoundMode>,
    pub step: f64,
    /// Samples for `∂_Φ X` and the Simpson integral on each `[s, t]`.
    pub time_samples: usize,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self { mode: None, step: DEFAULT_STEP, time_samples: DEFAULT_TIME_GRID }
    }
}

/// Default grid: 41 points over `[s, s+2]`.
pub fn default_times(s: f64) -> Vec<f64> {
    uniform_grid(s, s + 2.0, 41)
}

fn summary(label: &str, op: &FockOperator) -> ObservableSummary {
    ObservableSummary { label: label.into(), support: op.support().clone(), norm: op.norm(), parity: op.parity() }
}

fn resolve_mode(a: &FockOperator, b: &FockOperator, requested: Option<BoundMode>) -> Result<BoundMode> {
    for (name, op) in [("A", a), ("B", b)] {
        if op.parity().is_definite() && op.parity_defect(op.parity()) > crate::fock::PARITY_TOL * op.norm().max(1.0) {
            return Err(Error::Precondition(alloc::format!("{name} is tagged {:?} but is not", op.parity())));
        }
    }
    let one_even = a.parity() == Parity::Even || b.parity() == Parity::Even;
    let both_odd = a.parity() == Parity::Odd && b.parity() == Parity::Odd;
    match requested {
        Some(BoundMode::Commutator) if one_even => Ok(BoundMode::Commutator),
        Some(BoundMode::Anticommutator) if both_odd => Ok(BoundMode::Anticommutator),
        None if one_even => Ok(BoundMode::Commutator),
        None if both_odd => Ok(BoundMode::Anticommutator),
        _ => Err(Error::Precondition(
            "commutator mode needs an even observable, anticommutator mode two odd ones".into(),
        )),
    }
}

/// Measures the evolved (anti)commutator and the bound on `times` without
/// asserting the inequality.
pub fn measure(
    a: &FockOperator,
    b: &FockOperator,
    phi: &Interaction,
    g: &GFunction,
    s: f64,
    times: &[f64],
    options: &CertifyOptions,
) -> Result<LRBoundReport> {
    if **a.ambient() != **b.ambient() {
        return Err(Error::AmbientMismatch);
    }
    let lambda: &Arc<_> = a.ambient();
    let (x, y) = (a.support(), b.support());
    if x.intersects(y) {
        return Err(Error::Precondition("observables must have disjoint supports".into()));
    }
    if !phi.is_even() {
        return Err(Error::NotEven);
    }
    let mode = resolve_mode(a, b, options.mode)?;
    let (na, nb) = (a.norm(), b.norm());
    let at_start = match mode {
        BoundMode::Commutator => a.commutator(b)?,
        BoundMode::Anticommutator => a.anticommutator(b)?,
    };
    if at_start.norm() > 1e-12 * na * nb {
        return Err(Error::Precondition(alloc::format!("observables fail to {} at t = s", mode.as_str())));
    }

    let t_max = times.iter().copied().fold(s, f64::max);
    let boundary = phi_boundary(phi, x, &uniform_grid(s, t_max, options.time_samples));
    let mut geometry = 0.0;
    for &bx in boundary.iter() {
        for &by in y.iter() {
            geometry += g.value(bx, by)?;
        }
    }

    let propagators = propagate_grid(phi, lambda, s, times, options.step)?;
    let mut rows = Vec::with_capacity(times.len());
    let mut max_unitarity_defect: f64 = 0.0;
    for (u, &t) in propagators.iter().zip(times) {
        max_unitarity_defect = max_unitarity_defect.max(u.unitarity_defect);
        let ev = linalg::conjugate_by(a.matrix(), u.matrix());
        let m = match mode {
            BoundMode::Commutator => linalg::op_norm(&linalg::commutator(&ev, b.matrix())),
            BoundMode::Anticommutator => linalg::op_norm(&linalg::anticommutator(&ev, b.matrix())),
        };
        let integral = interaction_g_norm_integral(phi, g, s, t, options.time_samples)?;
        let bound = lr_rhs(na, nb, integral, geometry);
        let ratio = if bound > 0.0 {
            m / bound
        } else if m <= CERTIFY_ATOL * na * nb {
            0.0
        } else {
            f64::INFINITY
        };
        rows.push(LRRow { t, measured: m, bound, ratio, phi_norm_integral: integral });
    }
    Ok(LRBoundReport {
        mode,
        a: summary("A", a),
        b: summary("B", b),
        start: s,
        boundary,
        geometry,
        g_norm: g.norm(),
        rows,
        max_unitarity_defect,
    })
}

/// [`measure`] followed by the assertion `m(t) ≤ b(t)` on every sample.
pub fn certify(
    a: &FockOperator,
    b: &FockOperator,
    phi: &Interaction,
    g: &GFunction,
    s: f64,
    times: &[f64],
    options: &CertifyOptions,
) -> Result<LRBoundReport> {
    let report = measure(a, b, phi, g, s, times, options)?;
    report.ensure_certified()?;
    Ok(report)
}
