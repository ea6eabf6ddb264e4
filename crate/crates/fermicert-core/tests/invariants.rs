use std::sync::Arc;

use fermicert_core::cond_exp::{cond_exp_e, cond_exp_e_ordered};
use fermicert_core::dynamics::{local_hamiltonian, Interaction};
use fermicert_core::fock::{FermionPoly, Parity, Region, Site, SiteSet};
use fermicert_core::gap::{martingale_certificate, spectrum};
use fermicert_core::geometry::{g_from_f, Boundary, DecayFunction, MetricGraph};
use fermicert_core::lieb_robinson::{certify, CertifyOptions};
use fermicert_core::models::{
    flat_band_model, hopping_chain, kitaev_chain, left_to_right_sequence, KitaevParams, OrbitalSet,
};
use fermicert_core::random::{random_normalized, seeded};
use proptest::prelude::*;

fn exact_gap(phi: &Interaction, lambda: &Arc<SiteSet>) -> f64 {
    let ev = spectrum(&local_hamiltonian(phi, lambda, 0.0).unwrap()).unwrap();
    ev.iter().find(|&&e| e > ev[0] + 1e-8).unwrap() - ev[0]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn site_sweep_order_is_irrelevant(seed in any::<u64>(), mask in 1u8..16) {
        let lambda = Arc::new(SiteSet::chain(4));
        let mut rng = seeded(seed);
        let a = random_normalized(&lambda, &lambda.region(), Parity::Mixed, &mut rng).unwrap();
        let x: Region = (0..4u32).filter(|k| mask & (1 << k) != 0).map(Site).collect();
        let complement: Vec<Site> = (0..4u32).rev().filter(|k| mask & (1 << k) == 0).map(Site).collect();
        let forward = cond_exp_e(&a, &x).unwrap();
        let reverse = cond_exp_e_ordered(&a, &x, &complement).unwrap();
        prop_assert!(forward.distance(&reverse).unwrap() <= 1e-12);
    }

    #[test]
    fn conditional_expectation_is_idempotent_and_contractive(seed in any::<u64>(), k in 1u32..4) {
        let lambda = Arc::new(SiteSet::chain(5));
        let mut rng = seeded(seed);
        let a = random_normalized(&lambda, &lambda.region(), Parity::Mixed, &mut rng).unwrap();
        let x: Region = (0..k).map(Site).collect();
        let once = cond_exp_e(&a, &x).unwrap();
        let twice = cond_exp_e(&once, &x).unwrap();
        prop_assert!(once.distance(&twice).unwrap() <= 1e-12);
        prop_assert!(once.norm() <= a.norm() + 1e-12);
    }

    #[test]
    fn flat_band_certificate_is_sound(theta in 0.0f64..1.5, phase in -1.0f64..1.0) {
        let set = OrbitalSet::cells(MetricGraph::chain(6).unwrap(), 2, theta, phase).unwrap();
        let phi = flat_band_model(&set).unwrap();
        let cert = martingale_certificate(&left_to_right_sequence(&phi, set.lambda()).unwrap()).unwrap();
        let gap = exact_gap(&phi, set.lambda());
        if let Some(bound) = cert.bound {
            prop_assert!(bound > 0.0 && bound <= gap + 1e-8);
        }
    }

    #[test]
    fn kitaev_certificate_is_sound(pairing in 0.2f64..0.95) {
        let params = KitaevParams::frustration_free(1.0, pairing).unwrap();
        let phi = kitaev_chain(5, &params).unwrap();
        let lambda = Arc::new(SiteSet::chain(5));
        let cert = martingale_certificate(&left_to_right_sequence(&phi, &lambda).unwrap()).unwrap();
        if let Some(bound) = cert.bound {
            prop_assert!(bound <= exact_gap(&phi, &lambda) + 1e-8);
        }
    }

    #[test]
    fn lieb_robinson_bound_holds_for_random_hopping(j in -2.0f64..2.0, mu in -1.0f64..1.0, far in 2u32..5) {
        let graph = MetricGraph::chain(5).unwrap();
        let lambda = graph.sites().clone();
        let g = g_from_f(&DecayFunction::power_law(1.0, 1.0).unwrap(), &graph);
        let phi = hopping_chain(5, j, mu, Boundary::Open).unwrap();
        let a = FermionPoly::number(Site(0)).to_operator(&lambda).unwrap().with_parity(Parity::Even);
        let b = FermionPoly::annihilator(Site(far)).to_operator(&lambda).unwrap().with_parity(Parity::Odd);
        let times: Vec<f64> = (0..6).map(|k| 0.3 * k as f64).collect();
        let report = certify(&a, &b, &phi, &g, 0.0, &times, &CertifyOptions::default()).unwrap();
        prop_assert!(report.is_certified());
    }
}
