//! Photon state of the fig2 source: frozen scalars, identities and grid convergence.

mod common;

use common::*;
use ionhom::hom::{simulate_hom, single_click_density, ImperfectionParams};
use ionhom::photon::PhotonRecord;

#[test]
fn h_arm_scalars() {
    let r = PhotonRecord::new(&fig2(BETA_H_SQ), 1.0).unwrap();
    assert!(r.warnings().is_empty(), "{:?}", r.warnings());
    assert!(close(r.p_pure()[0], 0.15186670, 1e-7));
    assert!(close(r.p0(), 0.34205591, 1e-7));
    assert!(close(r.p0_direct(), 0.34205594, 1e-7));
    assert!(close(r.kernel_trace(), 1.0 - r.p0(), 1e-12));
    assert!(close(r.normalization_sum(), 1.0, 1e-6));
    assert!(r.scatter_profile().residual_d1 < 1e-5);
    let c = r.expected_scatter_count();
    assert!(close(c.unconditional, 3.531539, 1e-5));
    assert!(close(c.conditional.unwrap(), 2.76088, 1e-4));
}

#[test]
fn v_arm_normalization() {
    let r = PhotonRecord::new(&fig2(BETA_V_SQ), 1.0).unwrap();
    assert!(close(r.normalization_sum(), 1.0, 1e-6));
    assert!(close(r.kernel_trace(), 1.0 - r.p0(), 1e-12));
    // The stronger coupling emits more.
    let h = PhotonRecord::new(&fig2(BETA_H_SQ), 1.0).unwrap();
    assert!(r.p0() < h.p0());
}

#[test]
fn extended_model_visibility() {
    let a = PhotonRecord::new(&fig2(BETA_H_SQ), 1.0).unwrap();
    let b = PhotonRecord::new(&fig2(BETA_V_SQ), 1.0).unwrap();
    let imp = ImperfectionParams { epsilon: 0.01, omega_offset: ionhom::angular_from_mhz(0.04), ..Default::default() };
    let res = simulate_hom(&a, &b, &imp, 0.125, &[0.125, 0.25, 9.0]).unwrap();
    let v: Vec<f64> = res.curve.iter().map(|p| p.visibility.unwrap()).collect();
    assert!(close(v[0], 0.98744, 1e-5), "{v:?}");
    assert!(close(v[1], 0.98308, 1e-5), "{v:?}");
    assert!(close(v[2], 0.45484, 1e-5), "{v:?}");
    assert!(close(res.curve[2].p_succ, 0.2330, 1e-4));
}

#[test]
fn singles_scale_with_efficiency() {
    let p = coarse(fig2(BETA_H_SQ), 0.01, 20.0);
    let r = PhotonRecord::new(&p, 0.25).unwrap();
    let s1: f64 = single_click_density(&r).iter().sum::<f64>() * p.dt;
    let s2: f64 = single_click_density(&r.with_eta(0.5).unwrap()).iter().sum::<f64>() * p.dt;
    assert_eq!(2.0 * s1, s2);
    assert!(close(s1, 0.5 * 0.25 * (1.0 - r.p0()), 1e-12));
}

#[test]
fn halving_dt_changes_little() {
    let coarse_r = PhotonRecord::new(&coarse(fig2(BETA_H_SQ), 0.01, 20.0), 1.0).unwrap();
    let fine_r = PhotonRecord::new(&fig2(BETA_H_SQ), 1.0).unwrap();
    let rel = |a: f64, b: f64| ((a - b) / b).abs();
    assert!(rel(coarse_r.kernel_trace(), fine_r.kernel_trace()) < 1e-4);
    assert!(rel(coarse_r.p0(), fine_r.p0()) < 1e-4);
    let (cc, cf) = (coarse_r.expected_scatter_count(), fine_r.expected_scatter_count());
    assert!(rel(cc.unconditional, cf.unconditional) < 1e-4);
    assert!(rel(cc.conditional.unwrap(), cf.conditional.unwrap()) < 1e-4);
}

#[test]
fn doubling_scattering_rate_increases_count() {
    let mut p = coarse(fig2(BETA_H_SQ), 0.01, 20.0);
    let base = PhotonRecord::new(&p, 1.0).unwrap().expected_scatter_count().unconditional;
    p.gamma_sp *= 2.0;
    let more = PhotonRecord::new(&p, 1.0).unwrap().expected_scatter_count().unconditional;
    assert!(more > base);
}

#[test]
fn kernel_csv_has_header_and_lower_triangle() {
    let p = coarse(fig2(BETA_H_SQ), 0.02, 20.0);
    let r = PhotonRecord::new(&p, 1.0).unwrap();
    let mut buf = Vec::new();
    r.write_kernel_csv(&mut buf, 250).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t_us,t_prime_us,re_G_per_us,im_G_per_us"));
    // 1001 points, every 250th: 5 points, 15 lower-triangle pairs.
    assert_eq!(lines.count(), 15);
}
