//! Metric graphs, decay functions and the constants that enter the
//! Lieb-Robinson bound.
//!
//! All suprema are exact maxima over the given finite graph.

use alloc::sync::Arc;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::dynamics::Interaction;
use crate::error::{Error, Result};
use crate::fock::{Region, Site, SiteSet};

/// Default number of time samples for `∂_Φ X` and `∫‖Φ‖_G`.
pub const DEFAULT_TIME_GRID: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Open,
    Periodic,
}

/// Finite set of sites with a metric.
#[derive(Clone, Debug)]
pub struct MetricGraph {
    sites: Arc<SiteSet>,
    dist: Vec<f64>,
    boundary: Boundary,
}

impl MetricGraph {
    /// Box `∏ [0, L_i)` in `ℤ^ν` with the ℓ¹ metric (minimum image when
    /// periodic). Site indices are row-major with the first axis fastest.
    pub fn slab(lengths: &[usize], boundary: Boundary) -> Result<Self> {
        if lengths.is_empty() || lengths.contains(&0) {
            return Err(Error::InvalidArgument("slab side lengths must be positive".into()));
        }
        let n: usize = lengths.iter().product();
        if n > 63 {
            return Err(Error::TooLarge(n));
        }
        let coords: Vec<Vec<usize>> = (0..n)
            .map(|mut i| {
                lengths
                    .iter()
                    .map(|&l| {
                        let c = i % l;
                        i /= l;
                        c
                    })
                    .collect()
            })
            .collect();
        let mut dist = alloc::vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let d: usize = lengths
                    .iter()
                    .enumerate()
                    .map(|(k, &l)| {
                        let raw = coords[i][k].abs_diff(coords[j][k]);
                        match boundary {
                            Boundary::Open => raw,
                            Boundary::Periodic => raw.min(l - raw),
                        }
                    })
                    .sum();
                dist[i * n + j] = d as f64;
            }
        }
        Ok(Self { sites: Arc::new(SiteSet::chain(n)), dist, boundary })
    }

    pub fn chain(n: usize) -> Result<Self> {
        Self::slab(&[n], Boundary::Open)
    }

    /// Graph with an explicit distance matrix indexed by site positions.
    pub fn from_distances(sites: SiteSet, dist: Vec<f64>) -> Result<Self> {
        let n = sites.len();
        if dist.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, found: dist.len() });
        }
        let g = Self { sites: Arc::new(sites), dist, boundary: Boundary::Open };
        let defect = g.metric_defect();
        if defect > 0.0 {
            return Err(Error::InvalidArgument(alloc::format!("not a metric (defect {defect})")));
        }
        Ok(g)
    }

    pub fn sites(&self) -> &Arc<SiteSet> {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn distance_at(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.len() + j]
    }

    pub fn distance(&self, x: Site, y: Site) -> Result<f64> {
        Ok(self.distance_at(self.sites.position(x)?, self.sites.position(y)?))
    }

    /// `B_x(r) = {y : d(x,y) ≤ r}`.
    pub fn ball(&self, center: Site, radius: f64) -> Result<Region> {
        let i = self.sites.position(center)?;
        Ok((0..self.len()).filter(|&j| self.distance_at(i, j) <= radius).map(|j| self.sites.sites()[j]).collect())
    }

    /// Largest violation of symmetry, `d(x,x)=0`, nonnegativity or the
    /// triangle inequality; zero for a metric.
    pub fn metric_defect(&self) -> f64 {
        let n = self.len();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            worst = worst.max(self.distance_at(i, i).abs());
            for j in 0..n {
                let d = self.distance_at(i, j);
                if d.is_nan() {
                    return f64::INFINITY;
                }
                worst = worst.max((d - self.distance_at(j, i)).abs()).max(-d);
                for k in 0..n {
                    worst = worst.max(d - self.distance_at(i, k) - self.distance_at(k, j));
                }
            }
        }
        worst
    }
}

/// `F_a(r) = e^{-a r} / (1 + r)^{ν+ε}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFunction {
    pub nu: f64,
    pub epsilon: f64,
    #[serde(default)]
    pub a: f64,
}

impl DecayFunction {
    pub fn new(nu: f64, epsilon: f64, a: f64) -> Result<Self> {
        if !(nu >= 0.0 && epsilon > 0.0 && a >= 0.0) || !(nu + epsilon + a).is_finite() {
            return Err(Error::InvalidArgument(alloc::format!("bad decay parameters nu={nu} eps={epsilon} a={a}")));
        }
        Ok(Self { nu, epsilon, a })
    }

    pub fn power_law(nu: f64, epsilon: f64) -> Result<Self> {
        Self::new(nu, epsilon, 0.0)
    }

    pub fn with_exponential(self, a: f64) -> Result<Self> {
        Self::new(self.nu, self.epsilon, a)
    }

    pub fn eval(&self, r: f64) -> f64 {
        libm::exp(-self.a * r) / libm::pow(1.0 + r, self.nu + self.epsilon)
    }

    /// Closed-form convolution constant `2^{ν+ε} ‖F‖` valid on `ℤ^ν`.
    pub fn closed_form_constant(&self, norm: f64) -> f64 {
        libm::pow(2.0, self.nu + self.epsilon) * norm
    }

    fn table(&self, g: &MetricGraph) -> Vec<f64> {
        g.dist.iter().map(|&d| self.eval(d)).collect()
    }
}

/// `‖F‖ = max_x Σ_y F(d(x,y))`.
pub fn f_norm(f: &DecayFunction, g: &MetricGraph) -> f64 {
    max_row_sum(&f.table(g), g.len())
}

/// `C = max_{x,y} Σ_z F(d(x,z)) F(d(z,y)) / F(d(x,y))`.
pub fn f_conv_constant(f: &DecayFunction, g: &MetricGraph) -> f64 {
    max_convolution_ratio(&f.table(g), g.len())
}

fn max_row_sum(values: &[f64], n: usize) -> f64 {
    values.chunks(n.max(1)).map(|row| row.iter().sum::<f64>()).fold(0.0, f64::max)
}

fn max_convolution_ratio(values: &[f64], n: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for x in 0..n {
        for y in 0..n {
            let conv: f64 = (0..n).map(|z| values[x * n + z] * values[z * n + y]).sum();
            worst = worst.max(conv / values[x * n + y]);
        }
    }
    worst
}

/// A function `G` on site pairs with `G(x,y) = G(y,x)`,
/// `Σ_z G(x,z) G(z,y) ≤ G(x,y)` and finite `‖G‖ = max_x Σ_z G(x,z)`.
#[derive(Clone, Debug)]
pub struct GFunction {
    sites: Arc<SiteSet>,
    values: Vec<f64>,
    norm: f64,
}

/// Measured defects of the three defining properties.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GProperties {
    pub symmetry_defect: f64,
    /// `max_{x,y} Σ_z G(x,z) G(z,y) / G(x,y)`, at most one for a valid `G`.
    pub convolution_ratio: f64,
    pub norm: f64,
}

impl GFunction {
    pub fn sites(&self) -> &Arc<SiteSet> {
        &self.sites
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn value_at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.sites.len() + j]
    }

    pub fn value(&self, x: Site, y: Site) -> Result<f64> {
        Ok(self.value_at(self.sites.position(x)?, self.sites.position(y)?))
    }

    /// `G_g(x,y) = g(x) g(y) G(x,y)` for weights in `(0, 1]`.
    pub fn weighted(&self, weight: impl Fn(Site) -> f64) -> Result<Self> {
        let w: Vec<f64> = self.sites.sites().iter().map(|&s| weight(s)).collect();
        if let Some(bad) = w.iter().find(|&&v| !(v > 0.0 && v <= 1.0)) {
            return Err(Error::InvalidArgument(alloc::format!("weight {bad} outside (0, 1]")));
        }
        let n = self.sites.len();
        let values: Vec<f64> = (0..n * n).map(|k| w[k / n] * w[k % n] * self.values[k]).collect();
        let norm = max_row_sum(&values, n);
        Ok(Self { sites: self.sites.clone(), values, norm })
    }

    pub fn properties(&self) -> GProperties {
        let n = self.sites.len();
        let mut symmetry_defect: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                symmetry_defect = symmetry_defect.max((self.value_at(i, j) - self.value_at(j, i)).abs());
            }
        }
        GProperties { symmetry_defect, convolution_ratio: max_convolution_ratio(&self.values, n), norm: self.norm }
    }
}

/// `G(x,y) = F(d(x,y)) / C` with `C` the finite-graph convolution constant.
pub fn g_from_f(f: &DecayFunction, g: &MetricGraph) -> GFunction {
    let table = f.table(g);
    let c = max_convolution_ratio(&table, g.len());
    let values: Vec<f64> = table.iter().map(|v| v / c).collect();
    let norm = max_row_sum(&values, g.len());
    GFunction { sites: g.sites.clone(), values, norm }
}

/// `‖Φ‖_G(t) = max_{x,y} Σ_{Z ∋ x,y} ‖Φ(Z,t)‖ / G(x,y)`.
pub fn interaction_g_norm(phi: &Interaction, g: &GFunction, t: f64) -> Result<f64> {
    let n = g.sites.len();
    let mut sums = alloc::vec![0.0; n * n];
    for (region, norm) in phi.region_norms(t)? {
        if norm == 0.0 {
            continue;
        }
        let idx: Vec<usize> = region.iter().map(|&s| g.sites.position(s)).collect::<Result<_>>()?;
        for &i in &idx {
            for &j in &idx {
                sums[i * n + j] += norm;
            }
        }
    }
    Ok(sums.iter().zip(&g.values).map(|(s, gv)| s / gv).fold(0.0, f64::max))
}

/// `points` equally spaced times covering `[s, t]` (a single point when `s = t`).
pub fn uniform_grid(s: f64, t: f64, points: usize) -> Vec<f64> {
    if s == t || points < 2 {
        return alloc::vec![s];
    }
    (0..points).map(|k| s + (t - s) * k as f64 / (points - 1) as f64).collect()
}

/// `∫_s^t ‖Φ‖_G(r) dr`, exact for time-independent interactions and
/// composite Simpson on `points` samples otherwise.
pub fn interaction_g_norm_integral(phi: &Interaction, g: &GFunction, s: f64, t: f64, points: usize) -> Result<f64> {
    if s == t {
        return Ok(0.0);
    }
    if phi.is_time_independent() {
        return Ok((t - s).abs() * interaction_g_norm(phi, g, s)?);
    }
    // Simpson needs an even number of panels.
    let mut panels = points.max(3) - 1;
    panels += panels % 2;
    let h = (t - s) / panels as f64;
    let mut acc = 0.0;
    for k in 0..=panels {
        let w = if k == 0 || k == panels {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += w * interaction_g_norm(phi, g, s + k as f64 * h)?;
    }
    Ok((acc * h / 3.0).abs())
}

/// Regions of `Φ`'s terms inside `Λ` that meet both `X` and `Λ ∖ X`.
pub fn surface_sets(lambda: &SiteSet, x: &Region, phi: &Interaction) -> Vec<Region> {
    let inside = lambda.region();
    let outside = inside.difference(x);
    let mut out: Vec<Region> = Vec::new();
    for term in phi.terms_within(&inside) {
        let z = term.region();
        if z.intersects(x) && z.intersects(&outside) && !out.contains(z) {
            out.push(z.clone());
        }
    }
    out
}

/// `∂_Φ X`: sites of `X` covered by a term that crosses out of `X` and is
/// nonzero at some sampled time.
pub fn phi_boundary(phi: &Interaction, x: &Region, times: &[f64]) -> Region {
    let mut out = Region::empty();
    for term in phi.terms() {
        let z = term.region();
        if !z.intersects(x) || z.is_subset(x) || term.template_norm() == 0.0 {
            continue;
        }
        if times.iter().any(|&t| term.coefficient(t) != 0.0) {
            out = out.union(&z.intersection(x));
        }
    }
    out
}
