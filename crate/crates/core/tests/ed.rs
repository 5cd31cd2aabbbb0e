use dicke_core::ed::{ed_ground_state, EdConfig, Parity};
use dicke_core::{ModelParams, ZeemanSet};

#[test]
fn decoupled_spins_give_the_zeeman_energy() {
    // g -> 0: vacuum times each cavity spin anti-aligned with its field
    let (n, delta) = (6, 0.7);
    let k = ZeemanSet::k3();
    let j = n as f64 / (2.0 * k.len() as f64);
    let exact: f64 = -j * k.values().iter().map(|k| (delta * delta + k * k).sqrt()).sum::<f64>();
    let p = ModelParams::new(delta, 1e-14, k).unwrap();
    let r = ed_ground_state(&EdConfig::new(n, 8, p).unwrap()).unwrap();
    assert!((r.energy - exact).abs() < 1e-9, "{} vs {exact}", r.energy);
    assert!(r.photons < 1e-12);
}

#[test]
fn two_atoms_match_second_order_perturbation() {
    let delta = 0.8;
    for g in [0.02, 0.05, 0.1] {
        let p = ModelParams::from_coupling(delta, g, ZeemanSet::new(vec![0.0]).unwrap()).unwrap();
        let r = ed_ground_state(&EdConfig::new(2, 16, p).unwrap()).unwrap();
        let second = -delta - g * g / (4.0 * (1.0 + delta));
        assert!((r.energy - second).abs() < 2.0 * g.powi(4), "g={g}: {} vs {second}", r.energy);
        assert_eq!(r.sector, Some(Parity::Even));
    }
}

#[test]
fn symmetric_couplings_keep_the_field_zero() {
    let k = ZeemanSet::k3();
    for nu in [0.5, 1.2, 2.0] {
        let p = ModelParams::new(1.0, nu, k.clone()).unwrap();
        let r = ed_ground_state(&EdConfig::new(6, 32, p).unwrap()).unwrap();
        assert!(r.field.abs() < 1e-10 && r.residual < 1e-10, "{r:?}");
        assert!(r.cutoff_change.abs() < 1e-8);
    }
}

#[test]
fn photon_number_grows_through_the_transition() {
    let k = ZeemanSet::k3();
    let at = |nu: f64| {
        let p = ModelParams::new(1.0, nu, k.clone()).unwrap();
        ed_ground_state(&EdConfig::new(6, 40, p).unwrap()).unwrap().radiance
    };
    let (low, high) = (at(0.5), at(2.2));
    assert!(high > 5.0 * low, "{low} {high}");
}
