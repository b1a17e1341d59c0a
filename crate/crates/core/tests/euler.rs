mod support;

use eulerrom::euler::*;
use eulerrom::Error;
use proptest::prelude::*;
use support::{fd_jacobian, natural_scale};

fn state(w: &[f64]) -> Vec<f64> {
    primitive_to_conserved(w, 1.4)
}

/// Mathematical entropy `η = −ρ s / (γ−1)` measured against the gas reference.
fn entropy_function(u: &[f64], gas: &GasModel) -> f64 {
    let p = pressure_unchecked(u, gas.gamma);
    let s = (p / gas.p_ref).ln() - gas.gamma * (u[0] / gas.rho_ref).ln();
    -u[0] * s / (gas.gamma - 1.0)
}

fn rel_matrix_error(a: &EntropyJacobian, b: &[Vec<f64>]) -> f64 {
    let n = a.size();
    let mut num = 0.0f64;
    let mut den = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            num += (a.get(i, j) - b[i][j]).powi(2);
            den += a.get(i, j).powi(2);
        }
    }
    (num / den).sqrt()
}

fn primitive() -> impl Strategy<Value = (Vec<f64>, GasModel)> {
    (
        any::<bool>(),
        0.1f64..10.0,
        -3.0f64..3.0,
        -3.0f64..3.0,
        0.1f64..10.0,
        prop_oneof![Just((1.0f64, 1.0f64 / 1.4)), Just((1.225f64, 101325.0f64))],
    )
        .prop_map(|(two_d, rho, u1, u2, p, (rho_ref, p_ref))| {
            // velocities in units of the local sound speed (|M| ≤ 3)
            let (rho, p) = (rho * rho_ref, p * p_ref);
            let c = (1.4 * p / rho).sqrt();
            let w = if two_d { vec![rho, u1 * c, u2 * c, p] } else { vec![rho, u1 * c, p] };
            let a_ref2 = 1.4 * p_ref / rho_ref;
            (w, GasModel::with_reference(1.4, rho_ref, rho_ref * a_ref2).unwrap())
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn entropy_roundtrip((w, gas) in primitive()) {
        let u = state(&w);
        let v = conserved_to_entropy(&u, &gas).unwrap();
        let back = entropy_to_conserved(&v, &gas).unwrap();
        let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        let err = u.iter().zip(&back).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        prop_assert!(err <= 1e-12 * norm, "rel {}", err / norm);
    }

    #[test]
    fn entropy_variables_are_the_entropy_gradient((w, gas) in primitive()) {
        let u = state(&w);
        let v = conserved_to_entropy(&u, &gas).unwrap();
        for j in 0..u.len() {
            let h = 1e-6 * if u[j] != 0.0 { u[j].abs() } else { natural_scale(&u, j) };
            let mut up = u.clone();
            let mut um = u.clone();
            up[j] += h;
            um[j] -= h;
            let g = (entropy_function(&up, &gas) - entropy_function(&um, &gas)) / (2.0 * h);
            prop_assert!((g - v[j]).abs() <= 1e-5 * (1.0 + v[j].abs()), "component {}: {} vs {}", j, g, v[j]);
        }
    }

    #[test]
    fn closed_form_jacobian_matches_finite_differences((w, gas) in primitive()) {
        let u = state(&w);
        let a = entropy_jacobian(&u, &gas).unwrap();
        // per-component steps: V spans many orders of magnitude in
        // dimensional units
        let v = conserved_to_entropy(&u, &gas).unwrap();
        let last = v[v.len() - 1].abs();
        let steps: Vec<f64> = v.iter().map(|x| 1e-6 * x.abs().max(last)).collect();
        prop_assert!(rel_matrix_error(&a, &fd_jacobian(&u, &gas, Some(&steps))) < 1e-5);
        prop_assert!(a.max_asymmetry() == 0.0);
        prop_assert!(a.cholesky_upper().is_some());
    }

    #[test]
    fn jacobian_inverse_pair((w, gas) in primitive()) {
        let u = state(&w);
        let a = entropy_jacobian(&u, &gas).unwrap();
        let ai = entropy_jacobian_inverse(&u, &gas).unwrap();
        let prod = a.matmul(&ai);
        let n = u.len();
        // off-diagonal entries carry units U_i / U_j
        for i in 0..n {
            for j in 0..n {
                let e = if i == j { 1.0 } else { 0.0 };
                let unit = natural_scale(&u, i) / natural_scale(&u, j);
                prop_assert!((prod.get(i, j) - e).abs() < 1e-10 * unit, "({},{}) = {}", i, j, prod.get(i, j));
            }
        }
    }

    #[test]
    fn flux_in_primitive_form((w, gas) in primitive(), axis in 0usize..2) {
        let u = state(&w);
        let d = w.len() - 2;
        let axis = axis.min(d - 1);
        let f = analytic_flux(&u, axis, &gas).unwrap();
        let (rho, p) = (w[0], w[d + 1]);
        let vel = w[axis + 1];
        prop_assert!((f[0] - rho * vel).abs() <= 1e-12 * (rho * vel).abs().max(1e-300));
        let e = u[d + 1];
        prop_assert!((f[d + 1] - vel * (e + p)).abs() <= 1e-12 * (vel * (e + p)).abs().max(1e-300));
        let momentum = rho * vel * vel + p;
        prop_assert!((f[axis + 1] - momentum).abs() <= 1e-12 * momentum);
    }
}

#[test]
fn jacobian_at_rest_state() {
    let gas = GasModel::default();
    let u = [1.0, 0.0, 2.5];
    let a = entropy_jacobian(&u, &gas).unwrap();
    assert!(rel_matrix_error(&a, &fd_jacobian(&u, &gas, None)) < 1e-6);
    // p = 1: A = [[ρ, 0, ρE], [0, p, 0], [ρE, 0, ρH² − a²p/(γ−1)]]
    assert_eq!(a.get(0, 0), 1.0);
    assert!((a.get(1, 1) - 1.0).abs() < 1e-14);
    assert_eq!(a.get(0, 2), 2.5);
    let expected = 3.5f64.powi(2) - 1.4 / 0.4;
    assert!((a.get(2, 2) - expected).abs() < 1e-13);
}

#[test]
fn inverse_jacobian_matches_finite_differences_of_forward_map() {
    let gas = GasModel::default();
    let u = state(&[0.7, 0.4, -1.1, 2.0]);
    let ai = entropy_jacobian_inverse(&u, &gas).unwrap();
    let n = u.len();
    for j in 0..n {
        let h = 1e-6 * u[j].abs().max(1e-2);
        let mut up = u.clone();
        let mut um = u.clone();
        up[j] += h;
        um[j] -= h;
        let vp = conserved_to_entropy(&up, &gas).unwrap();
        let vm = conserved_to_entropy(&um, &gas).unwrap();
        for i in 0..n {
            let fd = (vp[i] - vm[i]) / (2.0 * h);
            assert!((fd - ai.get(i, j)).abs() <= 1e-6 * (1.0 + fd.abs()), "({i},{j}): {fd} vs {}", ai.get(i, j));
        }
    }
}

#[test]
fn inadmissible_states_are_rejected() {
    let gas = GasModel::default();
    assert!(matches!(conserved_to_entropy(&[1.0, 0.0, -1.0], &gas), Err(Error::Inadmissible(_))));
    assert!(matches!(conserved_to_entropy(&[-1.0, 0.0, 1.0], &gas), Err(Error::Inadmissible(_))));
    assert!(matches!(conserved_to_entropy(&[1.0, f64::NAN, 1.0], &gas), Err(Error::NonFinite(_))));
    assert!(matches!(entropy_to_conserved(&[0.0, 0.0, 1.0], &gas), Err(Error::Inadmissible(_))));
    assert!(matches!(analytic_flux(&[1.0, 0.0, 2.5], 1, &gas), Err(Error::InvalidAxis { axis: 1, dim: 1 })));
    assert!(GasModel::new(1.0).is_err());
}

#[test]
fn entropy_variables_scale_with_the_reference() {
    // the same physical state in two unit systems has the same entropy
    // variables up to the per-component scaling
    let nd = GasModel::with_reference(1.4, 1.0, 1.0).unwrap();
    let (rho_inf, a_inf) = (1.225, 340.294f64);
    let dim = GasModel::with_reference(1.4, rho_inf, rho_inf * a_inf * a_inf).unwrap();
    let w = [0.8, 0.3, -0.1, 0.9];
    let u_nd = state(&w);
    let u_d = state(&[w[0] * rho_inf, w[1] * a_inf, w[2] * a_inf, w[3] * rho_inf * a_inf * a_inf]);
    let v_nd = conserved_to_entropy(&u_nd, &nd).unwrap();
    let v_d = conserved_to_entropy(&u_d, &dim).unwrap();
    let scales = [1.0, 1.0 / a_inf, 1.0 / a_inf, 1.0 / (a_inf * a_inf)];
    for i in 0..4 {
        assert!((v_d[i] - v_nd[i] * scales[i]).abs() <= 1e-12 * v_d[i].abs().max(1e-300) + 1e-15);
    }
}
