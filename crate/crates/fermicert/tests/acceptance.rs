//! Acceptance criteria, one line per criterion.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use fermicert_core::cond_exp::{
    cond_exp_e, cond_exp_e_brute, cond_exp_f, cond_exp_report, local_approximation, verify_family_properties, Method,
};
use fermicert_core::dynamics::{local_hamiltonian, TimeProfile};
use fermicert_core::fock::{FermionPoly, FockOperator, Parity, Region, Site, SiteSet};
use fermicert_core::gap::{
    frustration_free_check, kernel_projection, martingale_bound, martingale_certificate, projection_flow, spectrum,
    CertificateStatus, FlowOptions,
};
use fermicert_core::geometry::{f_conv_constant, f_norm, g_from_f, uniform_grid, Boundary, DecayFunction, MetricGraph};
use fermicert_core::lieb_robinson::{
    certify, default_times, series_diagnostics, BoundMode, CertifyOptions, SeriesInputs,
};
use fermicert_core::linalg::{LinearAction, C64};
use fermicert_core::models::{
    band_operators, commuting_sequence, flat_band_model, hopping_chain, kitaev_chain, left_to_right_sequence,
    ramped_hopping_chain, weighted_flat_band_model, KitaevParams, OrbitalSet,
};
use fermicert_core::random::{random_normalized, seeded};
use fermicert_core::Error;
use rand::seq::SliceRandom;
use rand::Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err<E: std::fmt::Debug>(e: E) -> String {
    format!("{e:?}")
}

/// Column `n` of a generator as `(row, value)`; CAR generators have at most one entry per column.
fn sparse_columns(poly: &FermionPoly, lambda: &SiteSet) -> Vec<Option<(usize, C64)>> {
    let action = poly.action(lambda).expect("site in lattice");
    let dim = lambda.dim();
    let mut x = vec![C64::new(0.0, 0.0); dim];
    let mut y = vec![C64::new(0.0, 0.0); dim];
    (0..dim)
        .map(|n| {
            x[n] = C64::new(1.0, 0.0);
            action.apply(&x, &mut y);
            x[n] = C64::new(0.0, 0.0);
            let nz: Vec<(usize, C64)> =
                y.iter().enumerate().filter(|(_, v)| v.norm() > 0.0).map(|(k, v)| (k, *v)).collect();
            assert!(nz.len() <= 1, "generator column with several entries");
            nz.first().copied()
        })
        .collect()
}

/// Largest entry of `{A, B} − δ·1` for column-sparse `A`, `B`.
fn anticommutator_defect(a: &[Option<(usize, C64)>], b: &[Option<(usize, C64)>], delta: bool) -> f64 {
    let apply =
        |m: &[Option<(usize, C64)>], v: Option<(usize, C64)>| v.and_then(|(k, c)| m[k].map(|(r, d)| (r, c * d)));
    let mut worst: f64 = 0.0;
    for n in 0..a.len() {
        let unit = Some((n, C64::new(1.0, 0.0)));
        let mut acc: Vec<(usize, C64)> = Vec::new();
        for (r, c) in [apply(a, apply(b, unit)), apply(b, apply(a, unit))].into_iter().flatten() {
            match acc.iter_mut().find(|(k, _)| *k == r) {
                Some(e) => e.1 += c,
                None => acc.push((r, c)),
            }
        }
        if delta {
            match acc.iter_mut().find(|(k, _)| *k == n) {
                Some(e) => e.1 -= 1.0,
                None => acc.push((n, C64::new(-1.0, 0.0))),
            }
        }
        worst = acc.iter().map(|(_, c)| c.norm()).fold(worst, f64::max);
    }
    worst
}

fn criterion_1() -> Outcome {
    let mut worst: f64 = 0.0;
    for n in 2..=10usize {
        let lambda = SiteSet::chain(n);
        let ann: Vec<_> = (0..n as u32).map(|x| sparse_columns(&FermionPoly::annihilator(Site(x)), &lambda)).collect();
        let cre: Vec<_> = (0..n as u32).map(|x| sparse_columns(&FermionPoly::creator(Site(x)), &lambda)).collect();
        for x in 0..n {
            for y in 0..n {
                worst = worst.max(anticommutator_defect(&ann[x], &cre[y], x == y));
                worst = worst.max(anticommutator_defect(&ann[x], &ann[y], false));
                worst = worst.max(anticommutator_defect(&cre[x], &cre[y], false));
            }
        }
    }
    check(worst <= 1e-12, format!("L=2..10, max CAR defect {worst:.2e}"))
}

fn criterion_2() -> Outcome {
    let mut rng = seeded(2024);
    let mut worst: f64 = 0.0;
    let mut counts = [0usize; 2];
    for n in 4..=8usize {
        let lambda = Arc::new(SiteSet::chain(n));
        for _ in 0..100 {
            let mut sites: Vec<u32> = (0..n as u32).collect();
            sites.shuffle(&mut rng);
            let kx = rng.random_range(1..=3.min(n - 1));
            let ky = rng.random_range(1..=3.min(n - kx));
            let x: Region = sites[..kx].iter().map(|&s| Site(s)).collect();
            let y: Region = sites[kx..kx + ky].iter().map(|&s| Site(s)).collect();
            let pa = if rng.random_bool(0.5) { Parity::Even } else { Parity::Odd };
            let pb = if rng.random_bool(0.5) { Parity::Even } else { Parity::Odd };
            let a = random_normalized(&lambda, &x, pa, &mut rng).map_err(err)?;
            let b = random_normalized(&lambda, &y, pb, &mut rng).map_err(err)?;
            let d = if pa == Parity::Odd && pb == Parity::Odd {
                counts[1] += 1;
                a.anticommutator(&b).map_err(err)?.norm()
            } else {
                counts[0] += 1;
                a.commutator(&b).map_err(err)?.norm()
            };
            worst = worst.max(d);
        }
    }
    check(
        worst <= 1e-12,
        format!("{} commuting and {} anticommuting pairs, max defect {worst:.2e}", counts[0], counts[1]),
    )
}

fn criterion_3() -> Outcome {
    let graph = MetricGraph::chain(8).map_err(err)?;
    let lambda = graph.sites().clone();
    let g = g_from_f(&DecayFunction::power_law(1.0, 1.0).map_err(err)?, &graph);
    let times = default_times(0.0);
    let opts = CertifyOptions::default();
    let phi = hopping_chain(8, 1.0, 0.0, Boundary::Open).map_err(err)?;
    let number = |x: u32| FermionPoly::number(Site(x)).to_operator(&lambda).map(|o| o.with_parity(Parity::Even));
    let ann = |x: u32| FermionPoly::annihilator(Site(x)).to_operator(&lambda).map(|o| o.with_parity(Parity::Odd));
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    let runs: [(&str, FockOperator, FockOperator, _); 3] = [
        ("commutator", number(0).map_err(err)?, number(7).map_err(err)?, phi.clone()),
        ("anticommutator", ann(0).map_err(err)?, ann(7).map_err(err)?, phi),
        (
            "ramped",
            number(0).map_err(err)?,
            number(7).map_err(err)?,
            ramped_hopping_chain(8, TimeProfile::Polynomial(vec![0.5, 0.5]), 0.0, Boundary::Open).map_err(err)?,
        ),
    ];
    for (name, a, b, phi) in runs {
        let report = certify(&a, &b, &phi, &g, 0.0, &times, &opts).map_err(err)?;
        let expected = if name == "anticommutator" { BoundMode::Anticommutator } else { BoundMode::Commutator };
        if report.mode != expected || report.rows.len() != 41 {
            return Err(format!("{name}: mode {:?}, {} rows", report.mode, report.rows.len()));
        }
        let r = report.rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
        worst = worst.max(r);
        parts.push(format!("{name} max ratio {r:.3e}"));
    }
    check(worst < 1.0, parts.join(", "))
}

fn criterion_4() -> Outcome {
    let graph = MetricGraph::chain(8).map_err(err)?;
    let lambda = graph.sites().clone();
    let g = g_from_f(&DecayFunction::power_law(1.0, 1.0).map_err(err)?, &graph);
    let phi = hopping_chain(8, 1.0, 0.0, Boundary::Open).map_err(err)?;
    let a = FermionPoly::number(Site(0)).to_operator(&lambda).map_err(err)?.with_parity(Parity::Even);
    let b = FermionPoly::number(Site(7)).to_operator(&lambda).map_err(err)?.with_parity(Parity::Even);
    let report = certify(&a, &b, &phi, &g, 0.0, &default_times(0.0), &CertifyOptions::default()).map_err(err)?;
    // Truncation at N = 30 resolves the exponential only while 2∫‖Φ‖_G stays moderate.
    let window: Vec<_> = report.rows.iter().filter(|r| r.t > 0.0 && 2.0 * r.phi_norm_integral <= 4.0).collect();
    let mut sum_gap: f64 = 0.0;
    let mut remainder: f64 = 0.0;
    for row in &window {
        let d = series_diagnostics(&SeriesInputs::from_report(&report, row), 30).map_err(err)?;
        sum_gap = sum_gap.max((d.partial_sums[29] - d.closed_form).abs() / d.closed_form);
        remainder = remainder.max(d.remainder_bound / d.closed_form);
    }
    let t_max = window.last().map_or(0.0, |r| r.t);
    check(
        !window.is_empty() && sum_gap <= 1e-10 && remainder < 1e-12,
        format!(
            "{} samples with t ≤ {t_max}: relative partial-sum gap {sum_gap:.2e}, remainder/scale {remainder:.2e}",
            window.len()
        ),
    )
}

fn criterion_5() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for (lengths, nu) in [(vec![40usize], 1.0), (vec![7, 7], 2.0)] {
        let graph = MetricGraph::slab(&lengths, Boundary::Open).map_err(err)?;
        let f = DecayFunction::power_law(nu, 1.0).map_err(err)?;
        let norm = f_norm(&f, &graph);
        let c = f_conv_constant(&f, &graph);
        let closed = f.closed_form_constant(norm);
        let props = g_from_f(&f, &graph).properties();
        let residual = (props.convolution_ratio - 1.0).max(0.0);
        ok &= c <= closed && residual <= 1e-12 && props.symmetry_defect == 0.0;
        parts.push(format!("ν={nu}: C={c:.4} ≤ {closed:.4}, G residual {residual:.1e}"));
    }
    check(ok, parts.join("; "))
}

fn criterion_6() -> Outcome {
    let lambda = Arc::new(SiteSet::chain(6));
    let whole = lambda.region();
    let mut rng = seeded(6);
    let x = Region::of(&[1, 2, 3]);
    let (mut proj, mut norm, mut ef): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let one = FockOperator::identity(&lambda);
    let unital = cond_exp_e(&one, &x).map_err(err)?.distance(&one).map_err(err)?;
    for _ in 0..100 {
        let a = random_normalized(&lambda, &whole, Parity::Mixed, &mut rng).map_err(err)?;
        let r = cond_exp_report(&a, &x, Method::SiteSweep).map_err(err)?;
        proj = proj.max(r.projection_defect);
        norm = norm.max(r.output_norm - r.input_norm);
        let even = random_normalized(&lambda, &whole, Parity::Even, &mut rng).map_err(err)?;
        ef = ef.max(cond_exp_e(&even, &x).map_err(err)?.distance(&cond_exp_f(&even, &x).map_err(err)?).map_err(err)?);
    }
    let mut brute: f64 = 0.0;
    for k in 2..=5u32 {
        let xk: Region = (0..k).map(Site).collect();
        for _ in 0..5 {
            let a = random_normalized(&lambda, &whole, Parity::Mixed, &mut rng).map_err(err)?;
            brute = brute.max(
                cond_exp_e(&a, &xk).map_err(err)?.distance(&cond_exp_e_brute(&a, &xk).map_err(err)?).map_err(err)?,
            );
        }
    }
    let family = verify_family_properties(&lambda, &x, &Region::of(&[3, 4, 5]), 20, &mut rng).map_err(err)?;
    let mut local_excess: f64 = f64::NEG_INFINITY;
    let mut exact = true;
    for _ in 0..20 {
        let a = random_normalized(&lambda, &whole, Parity::Even, &mut rng).map_err(err)?;
        let l = local_approximation(&a, &x).map_err(err)?;
        exact &= l.bound_is_exact;
        local_excess = local_excess.max(l.error - l.commutator_bound);
    }
    let ok = proj <= 1e-12
        && norm <= 1e-12
        && unital <= 1e-12
        && brute <= 1e-12
        && ef <= 1e-12
        && family.max_defect() <= 1e-12
        && exact
        && local_excess <= 0.0;
    check(
        ok,
        format!(
            "projection {proj:.1e}, norm excess {:.1e}, sweep vs Krauss {brute:.1e}, E vs F {ef:.1e}, family {:.1e}, local bound slack {:.2e}",
            norm.max(0.0),
            family.max_defect(),
            -local_excess
        ),
    )
}

fn flat_band(n: usize, theta: f64) -> Result<OrbitalSet, String> {
    OrbitalSet::cells(MetricGraph::chain(n).map_err(err)?, 2, theta, 0.3).map_err(err)
}

fn criterion_7() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for n in [6usize, 8] {
        let set = flat_band(n, 0.6)?;
        let phi = flat_band_model(&set).map_err(err)?;
        let lambda = set.lambda().clone();
        let ff = frustration_free_check(&phi, &lambda).map_err(err)?;
        let h = local_hamiltonian(&phi, &lambda, 0.0).map_err(err)?;
        let ev = spectrum(&h).map_err(err)?;
        let p = kernel_projection(&h, None).map_err(err)?;
        let ops = band_operators(&set).map_err(err)?;
        let expect = |m: &FockOperator| -> Result<f64, String> {
            let nm = m.adjoint().times(m).map_err(err)?;
            Ok(p.times(&nm).map_err(err)?.trace().re / p.trace().re)
        };
        let mut occ: f64 = 0.0;
        for b in &ops.valence {
            occ = occ.max((expect(b)? - 1.0).abs());
        }
        for c in &ops.conduction {
            occ = occ.max(expect(c)?.abs());
        }
        let gap = ev[1] - ev[0];
        ok &= (gap - 1.0).abs() <= 1e-10 && ff.frustration_free && ff.residual.abs() <= 1e-10 && occ <= 1e-10;
        parts.push(format!("L={n}: gap {gap:.12}, residual {:.1e}, occupation defect {occ:.1e}", ff.residual));
    }
    check(ok, parts.join("; "))
}

fn bitwise_bound(gamma: f64, ell: usize, epsilon: f64) -> f64 {
    let x = epsilon * (1.0 + ell as f64).sqrt();
    gamma * (1.0 - x) * (1.0 - x)
}

fn criterion_8() -> Outcome {
    let toy = martingale_certificate(&commuting_sequence(6).map_err(err)?).map_err(err)?;
    let toy_ok = toy.bound.is_some_and(|b| (b - 1.0).abs() <= 1e-10)
        && toy.exact_gap.is_some_and(|g| (g - 1.0).abs() <= 1e-10)
        && toy.ell == Some(0)
        && toy.epsilon <= 1e-10;
    let mut parts = vec![format!("toy bound {:?}", toy.bound)];
    let mut ok = toy_ok;
    let mut cases = Vec::new();
    for n in 6..=8usize {
        let lambda = Arc::new(SiteSet::chain(n));
        cases.push((format!("kitaev L={n}"), kitaev_chain(n, &KitaevParams::default()).map_err(err)?, lambda));
    }
    for n in [6usize, 8] {
        let set = flat_band(n, 0.6)?;
        cases.push((format!("flat band L={n}"), flat_band_model(&set).map_err(err)?, set.lambda().clone()));
    }
    for (name, phi, lambda) in cases {
        let cert = martingale_certificate(&left_to_right_sequence(&phi, &lambda).map_err(err)?).map_err(err)?;
        let ed = spectrum(&local_hamiltonian(&phi, &lambda, 0.0).map_err(err)?).map_err(err)?;
        let ground = ed[0];
        let gap = ed.iter().find(|&&e| e > ground + 1e-8).map(|e| e - ground);
        let (Some(bound), Some(gap), Some(ell)) = (cert.bound, gap, cert.ell) else {
            return Err(format!("{name}: no certificate ({:?})", cert.status));
        };
        let reproduced = bitwise_bound(cert.gamma, ell, cert.epsilon);
        let same = reproduced.to_bits() == bound.to_bits()
            && martingale_bound(cert.gamma, ell, cert.epsilon).map(f64::to_bits) == Some(bound.to_bits());
        ok &= cert.status == CertificateStatus::Certified && bound > 0.0 && bound <= gap + 1e-8 && same;
        parts
            .push(format!("{name}: γ={:.3} ℓ={ell} ε={:.4} bound {bound:.4} ≤ gap {gap:.4}", cert.gamma, cert.epsilon));
    }
    check(ok, parts.join("; "))
}

fn criterion_9() -> Outcome {
    let lambda = Arc::new(SiteSet::chain(6));
    let grid = uniform_grid(0.0, 1.0, 21);
    let family = |s: f64| flat_band_model(&flat_band(6, 0.3 + 0.9 * s).map_err(|e| Error::InvalidArgument(e))?);
    let report = projection_flow(family, &lambda, &grid, &FlowOptions::default()).map_err(err)?;
    let rank_ok = report.traces.iter().all(|t| (t - report.rank as f64).abs() <= 1e-8);
    let set = flat_band(6, 0.5)?;
    let closing = |s: f64| weighted_flat_band_model(&set, 1.0 - s, 1.0);
    let options = FlowOptions { gap_min: 0.2, ..FlowOptions::default() };
    let located = match projection_flow(closing, &lambda, &grid, &options) {
        Err(Error::GapClosure { s, .. }) => Some(s),
        _ => None,
    };
    // Oracle: the gap of the closing path is 1 − s.
    let located_ok = located.is_some_and(|s| (s - 0.8).abs() <= 1e-8);
    check(
        rank_ok && report.max_defect <= 1e-6 && located_ok,
        format!(
            "rotation: rank {} constant, max defect {:.2e}; closing path located at s = {located:?}",
            report.rank, report.max_defect
        ),
    )
}

fn run_samples(out: &Path, threads: &str) -> Result<Vec<(PathBuf, i32)>, String> {
    let samples = Path::new(env!("CARGO_MANIFEST_DIR")).join("samples");
    let mut files: Vec<PathBuf> = std::fs::read_dir(&samples)
        .map_err(err)?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()
        .map_err(err)?;
    files.sort();
    let mut codes = Vec::new();
    for f in files.into_iter().filter(|f| f.extension().is_some_and(|e| e == "json")) {
        let dir = out.join(f.file_stem().expect("file name"));
        let status = Command::new(env!("CARGO_BIN_EXE_fermicert"))
            .arg("--config")
            .arg(&f)
            .arg("--out")
            .arg(&dir)
            .env("FERMICERT_THREADS", threads)
            .output()
            .map_err(err)?;
        codes.push((f, status.status.code().unwrap_or(-1)));
    }
    Ok(codes)
}

fn tree_bytes(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).expect("readable output dir").flatten() {
            let p = e.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((
                    p.strip_prefix(dir).expect("inside dir").to_path_buf(),
                    std::fs::read(&p).expect("readable report"),
                ));
            }
        }
    }
    out.sort();
    out
}

fn criterion_10() -> Outcome {
    let start = Instant::now();
    let tmp = tempfile::tempdir().map_err(err)?;
    // Same output path for both passes, since reports echo their directory.
    let out = tmp.path().join("out");
    let first = run_samples(&out, "1")?;
    let a = tree_bytes(&out);
    std::fs::remove_dir_all(&out).map_err(err)?;
    let second = run_samples(&out, "3")?;
    let bad: Vec<_> = first.iter().chain(&second).filter(|(_, c)| *c != 0).collect();
    let identical = a == tree_bytes(&out);
    let elapsed = start.elapsed();
    check(
        bad.is_empty() && identical && !a.is_empty() && elapsed < Duration::from_secs(15 * 60),
        format!(
            "{} configs, nonzero exits {bad:?}, {} report files byte-identical: {identical}, {:.0?} for two passes",
            first.len(),
            a.len(),
            elapsed
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("CAR relations", criterion_1),
        ("disjoint-support (anti)commutation", criterion_2),
        ("Lieb-Robinson certification", criterion_3),
        ("series consistency", criterion_4),
        ("F-function constants", criterion_5),
        ("conditional expectations", criterion_6),
        ("flat-band model", criterion_7),
        ("martingale certificate", criterion_8),
        ("projection flow", criterion_9),
        ("end-to-end samples", criterion_10),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let id = format!("criterion {}", k + 1);
        if !filter.is_empty() && !filter.iter().any(|p| id.contains(p.as_str()) || name.contains(p.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("{id:>12} PASS  {name}: {detail} [{secs:.1}s]"),
            Err(detail) => {
                failed += 1;
                println!("{id:>12} FAIL  {name}: {detail} [{secs:.1}s]");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
