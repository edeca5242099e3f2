use crate::error::{ensure, Result};
use crate::linalg::CMatrix;
use crate::qdyn::params::SourceParams;
use crate::qdyn::schedule::{Level, DRIVE_ON};
use crate::qdyn::{D0, D1, DIM, P0, S0};
use crate::scalar::{cr, Real};

/// Rotating-frame Hamiltonian at time `t`.
pub fn build_hamiltonian<T: Real>(p: &SourceParams<T>, t: T) -> Result<CMatrix<T>> {
    ensure!(
        t >= T::zero() && t <= p.t_horizon,
        Domain,
        "t = {t} outside [0, {}]",
        p.t_horizon
    );
    Ok(hamiltonian_for_omega(p, p.omega_at(t)))
}

/// Hamiltonian of one constant drive segment.
pub fn hamiltonian_for_level<T: Real>(p: &SourceParams<T>, level: Level) -> CMatrix<T> {
    let omega = if level == DRIVE_ON { p.omega_drive } else { T::zero() };
    hamiltonian_for_omega(p, omega)
}

fn hamiltonian_for_omega<T: Real>(p: &SourceParams<T>, omega: T) -> CMatrix<T> {
    let stark = p.stark_shift_for(omega);
    let mut h = CMatrix::zeros(DIM);
    h[(S0, P0)] = cr(omega / T::lit(2.0));
    h[(P0, S0)] = cr(omega / T::lit(2.0));
    h[(D1, D1)] = cr(stark);
    h[(D1, P0)] = cr(p.g_eff);
    h[(P0, D1)] = cr(p.g_eff);
    h[(P0, P0)] = cr(stark - p.delta);
    h[(D0, D0)] = cr(stark);
    h
}

/// Cavity emission `L1`, P→S scattering `L2` and P→D scattering `L3`.
pub fn build_jump_operators<T: Real>(p: &SourceParams<T>) -> [CMatrix<T>; 3] {
    let two = T::lit(2.0);
    [
        CMatrix::outer_unit(DIM, D0, D1, cr((two * p.kappa).sqrt())),
        CMatrix::outer_unit(DIM, S0, P0, cr((two * p.gamma_sp).sqrt())),
        CMatrix::outer_unit(DIM, D0, P0, cr((two * p.gamma_dp).sqrt())),
    ]
}

/// `Σ L†L`, the decay part of the effective non-Hermitian Hamiltonian.
pub fn decay_operator<T: Real>(jumps: &[CMatrix<T>]) -> CMatrix<T> {
    let mut k = CMatrix::zeros(DIM);
    for l in jumps {
        k += &(&l.adjoint() * l);
    }
    k
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qdyn::params::StarkShift;
    use crate::scalar::angular_from_mhz;

    fn figa5(omega_mhz: f64) -> SourceParams<f64> {
        SourceParams {
            omega_drive: angular_from_mhz(omega_mhz),
            pulse_on: 0.0,
            pulse_off: 10.0,
            delta: angular_from_mhz(-400.0),
            delta_stark: StarkShift::Auto,
            g_eff: angular_from_mhz(1.2 * (4.0f64 / 15.0).sqrt()),
            kappa: angular_from_mhz(0.07),
            gamma_sp: angular_from_mhz(10.7),
            gamma_dp: angular_from_mhz(0.7),
            t_horizon: 10.0,
            dt: 0.005,
        }
    }

    #[test]
    fn all_couplings_off_is_diagonal() {
        let mut p = figa5(0.0);
        p.g_eff = 0.0;
        p.delta = angular_from_mhz(400.0);
        let h = build_hamiltonian(&p, 1.0).unwrap();
        let expect = [0.0, 0.0, -p.delta, 0.0];
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { expect[i] } else { 0.0 };
                assert_eq!(h[(i, j)], cr(want));
            }
        }
    }

    #[test]
    fn entries_follow_basis_layout() {
        let p = figa5(40.0);
        let h = build_hamiltonian(&p, 0.0).unwrap();
        let om = angular_from_mhz(40.0);
        let ds = om * om / (4.0 * p.delta);
        assert_eq!(h[(0, 2)].re, om / 2.0);
        assert_eq!(h[(2, 0)].re, om / 2.0);
        assert_eq!(h[(1, 1)].re, ds);
        assert_eq!(h[(1, 2)].re, p.g_eff);
        assert_eq!(h[(2, 2)].re, -p.delta + ds);
        assert_eq!(h[(3, 3)].re, ds);
        assert!(ds < 0.0);
        assert!(h.is_hermitian(0.0));
    }

    #[test]
    fn drive_and_stark_shift_vanish_after_the_pulse() {
        let mut p = figa5(40.0);
        p.t_horizon = 20.0;
        let h = build_hamiltonian(&p, 15.0).unwrap();
        assert_eq!(h[(0, 2)], cr(0.0));
        assert_eq!(h[(1, 1)], cr(0.0));
    }

    #[test]
    fn out_of_range_time_is_a_domain_error() {
        let p = figa5(40.0);
        assert!(matches!(build_hamiltonian(&p, 10.5), Err(crate::Error::Domain(_))));
        assert!(build_hamiltonian(&p, -0.1).is_err());
    }

    #[test]
    fn jump_operators_have_one_entry_each() {
        let p = figa5(40.0);
        let ls = build_jump_operators(&p);
        for l in &ls {
            assert_eq!(l.count_nonzero(), 1);
        }
        assert_eq!(ls[1][(0, 2)].re, (2.0 * angular_from_mhz(10.7f64)).sqrt());
        let mut q = p.clone();
        q.kappa = 0.0;
        assert_eq!(build_jump_operators(&q)[0].count_nonzero(), 0);
    }
}
