//! Hand-written references shared by the oracle and acceptance tests.

use ionhom::linalg::CMatrix;
use ionhom::photon::PhotonRecord;
use ionhom::qdyn::{build_hamiltonian, build_jump_operators, SourceParams};
use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64 as C;

/// No-jump generator written out by hand in the basis `[s0, d1, p0]`.
pub fn generator(p: &SourceParams<f64>, drive_on: bool) -> Matrix3<C> {
    let om = if drive_on { p.omega_drive } else { 0.0 };
    let ds = om * om / (4.0 * p.delta);
    let mut h = Matrix3::<C>::zeros();
    h[(0, 2)] = C::new(om / 2.0, 0.0);
    h[(2, 0)] = C::new(om / 2.0, 0.0);
    h[(1, 1)] = C::new(ds, 0.0);
    h[(1, 2)] = C::new(p.g_eff, 0.0);
    h[(2, 1)] = C::new(p.g_eff, 0.0);
    h[(2, 2)] = C::new(-p.delta + ds, 0.0);
    let mut k = Matrix3::<C>::zeros();
    k[(1, 1)] = C::new(2.0 * p.kappa, 0.0);
    k[(2, 2)] = C::new(2.0 * (p.gamma_sp + p.gamma_dp), 0.0);
    h * C::new(0.0, -1.0) - k * C::new(0.5, 0.0)
}

/// Per-step no-jump propagators from nalgebra's matrix exponential.
pub fn nalgebra_steps(p: &SourceParams<f64>, dt: f64, n: usize) -> Vec<Matrix3<C>> {
    let on = (generator(p, true) * C::new(dt, 0.0)).exp();
    let off = (generator(p, false) * C::new(dt, 0.0)).exp();
    (0..n - 1)
        .map(|i| {
            let t = i as f64 * dt;
            if t + 1e-9 >= p.pulse_on && t + 1e-9 < p.pulse_off {
                on
            } else {
                off
            }
        })
        .collect()
}

/// `ψ[k][i] = ψ_{s_k}(t_i)`, zero for `i < k`.
pub fn literal_psi(p: &SourceParams<f64>, n: usize) -> Vec<Vec<C>> {
    let steps = nalgebra_steps(p, p.dt, n);
    let a = (2.0 * p.kappa).sqrt();
    (0..n)
        .map(|k| {
            let mut row = vec![C::new(0.0, 0.0); n];
            let mut phi = Vector3::new(C::new(1.0, 0.0), C::new(0.0, 0.0), C::new(0.0, 0.0));
            for (i, slot) in row.iter_mut().enumerate().skip(k) {
                *slot = phi[1] * a;
                if i + 1 < n {
                    phi = steps[i] * phi;
                }
            }
            row
        })
        .collect()
}

/// Weights of `P̄` on the grid: the δ component sits on `s = 0`.
pub fn weights(r: &PhotonRecord<f64>) -> Vec<f64> {
    let mut w = r.scatter_profile().cell_weights.clone();
    w[0] += 1.0;
    w
}

pub fn rhs(h: &CMatrix<f64>, jumps: &[CMatrix<f64>], rho: &CMatrix<f64>) -> CMatrix<f64> {
    let mi = C::new(0.0, -1.0);
    let mut out = &(h * rho) - &(rho * h);
    out = out.scale(mi);
    for l in jumps {
        let ld = l.adjoint();
        let ldl = &ld * l;
        let sandwich = &(l * rho) * &ld;
        let anti = &(&ldl * rho) + &(rho * &ldl);
        out += &(&sandwich - &anti.scale_real(0.5));
    }
    out
}

/// Dormand-Prince 5(4) with step control on the matrix equation.
pub fn rk45(p: &SourceParams<f64>, rho0: &CMatrix<f64>, t0: f64, t1: f64, rtol: f64) -> CMatrix<f64> {
    let tm = 0.5 * (t0 + t1);
    let h_op = build_hamiltonian(p, tm).unwrap();
    let jumps = build_jump_operators(p);
    let f = |y: &CMatrix<f64>| rhs(&h_op, &jumps, y);
    const A: [[f64; 6]; 6] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const E: [f64; 7] = [
        71.0 / 57600.0,
        0.0,
        -71.0 / 16695.0,
        71.0 / 1920.0,
        -17253.0 / 339200.0,
        22.0 / 525.0,
        -1.0 / 40.0,
    ];
    let mut y = rho0.clone();
    let mut t = t0;
    let mut h: f64 = 1e-4;
    while t < t1 - 1e-15 {
        h = h.min(t1 - t);
        let mut k: Vec<CMatrix<f64>> = vec![f(&y)];
        for row in A.iter() {
            let mut yi = y.clone();
            for (j, &a) in row.iter().enumerate().take(k.len()) {
                if a != 0.0 {
                    yi += &k[j].scale_real(a * h);
                }
            }
            k.push(f(&yi));
        }
        // Row 6 of A is the fifth-order solution (FSAL).
        let mut y5 = y.clone();
        for (j, &a) in A[5].iter().enumerate() {
            if a != 0.0 {
                y5 += &k[j].scale_real(a * h);
            }
        }
        let mut err = CMatrix::zeros(y.dim());
        for (j, &e) in E.iter().enumerate() {
            if e != 0.0 {
                err += &k[j].scale_real(e * h);
            }
        }
        let scale = rtol * (1e-3 + y5.max_abs());
        let ratio = err.max_abs() / scale;
        if ratio <= 1.0 {
            t += h;
            y = y5;
        }
        h *= (0.9 * ratio.max(1e-10).powf(-0.2)).clamp(0.2, 5.0);
    }
    y
}
