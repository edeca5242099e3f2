//! Visibility/success-probability frontiers over the drive strength.

use ionhom::angular_from_mhz;
use ionhom::hom::ImperfectionParams;
use ionhom::photon::RecordOptions;
use ionhom::qdyn::{SourceParams, StarkShift};
use ionhom::scenario::{ArmSpec, Efficiency, Scenario};
use ionhom::sweep::{find_optimal_omega, run_sweep, Frontier, Objective, Optimum, SweepSpec};

/// Continuously driven source with the frontier parameters, on a coarse grid.
fn source(dt: f64, horizon: f64) -> SourceParams<f64> {
    SourceParams {
        omega_drive: angular_from_mhz(40.0),
        pulse_on: 0.0,
        pulse_off: horizon,
        delta: angular_from_mhz(-400.0),
        delta_stark: StarkShift::Auto,
        g_eff: angular_from_mhz(1.2 * (4.0f64 / 15.0).sqrt()),
        kappa: angular_from_mhz(0.07),
        gamma_sp: angular_from_mhz(10.7),
        gamma_dp: angular_from_mhz(0.7),
        t_horizon: horizon,
        dt,
    }
}

fn spec(omegas: &[f64], objective: Objective<f64>) -> SweepSpec<f64> {
    let arm = ArmSpec { source: source(0.02, 60.0), efficiency: Efficiency::Fixed(1.0) };
    SweepSpec {
        scenario: Scenario {
            short: arm.clone(),
            long: arm,
            imperfections: ImperfectionParams::default(),
            bin_width: 0.1,
            options: RecordOptions::default(),
        },
        omega_values: omegas.iter().map(|&m| angular_from_mhz(m)).collect(),
        window_values: (0..=120).map(|i| i as f64 * 0.5).collect(),
        objective,
    }
}

#[test]
fn forty_megahertz_dominates_the_extremes() {
    let rows = run_sweep(&spec(&[20.0, 40.0, 70.0], Objective::MaxPsuccAtV(0.8)), 2).unwrap();
    let curves = Frontier::from_rows(&rows);
    assert_eq!(curves.len(), 3);
    for c in &curves {
        // Wider windows never raise the visibility in the basic model.
        for w in c.points.windows(2) {
            assert!(w[1].1 <= w[0].1 + 1e-12);
        }
    }
    let best = &curves[1];
    for other in [&curves[0], &curves[2]] {
        let d = best.compare(other, 0.8);
        assert!(d.compared > 0);
        assert_eq!(d.violations, 0, "{d:?}");
    }
}

#[test]
fn optimum_at_high_visibility_is_near_forty_megahertz() {
    let s = spec(&[20.0, 30.0, 40.0, 50.0, 60.0, 70.0], Objective::MaxPsuccAtV(0.99));
    let Optimum::Found(row) = find_optimal_omega(&s, false, 2).unwrap() else { panic!("infeasible") };
    let mhz = ionhom::mhz_from_angular(row.omega);
    assert!((30.0..=50.0).contains(&mhz), "optimum at {mhz} MHz");
}

#[test]
fn degenerate_sweep_matches_a_direct_evaluation() {
    let mut s = spec(&[40.0], Objective::MaxPsuccAtV(0.5));
    s.window_values = vec![2.0];
    let rows = run_sweep(&s, 1).unwrap();
    assert_eq!(rows.len(), 1);
    let direct = s.scenario.evaluate(&[2.0]).unwrap().result.curve[0];
    assert_eq!(rows[0].visibility, direct.visibility);
    assert_eq!(rows[0].p_succ, direct.p_succ);
}

#[test]
fn job_count_does_not_change_rows() {
    let mut s = spec(&[30.0, 50.0], Objective::MaxPsuccAtV(0.5));
    s.window_values = vec![0.5, 4.0];
    assert_eq!(run_sweep(&s, 1).unwrap(), run_sweep(&s, 3).unwrap());
}
