use std::sync::Arc;

use anholo::algebroid::{sode_check, AlgebroidSpec};
use anholo::calculus::{exterior_d, Form};
use anholo::expr::expr_field;
use anholo::field::{constant, ScalarField};
use anholo::jets::coordinate_jets;
use anholo::nconnection::{
    anholonomy, berwald_derivative, n_adapt_structure, n_frame, n_lift_bundle, n_unlift_bundle, Chart, FieldN, FrameTransform, ZeroN,
};

fn f(text: &str, vars: &[&str]) -> ScalarField {
    expr_field(text, vars).unwrap()
}

fn so3_with_c312(v: f64) -> AlgebroidSpec {
    let base = AlgebroidSpec::so3_action();
    let mut c = base.c.clone();
    c[2][0][1] = constant(3, v);
    c[2][1][0] = constant(3, -v);
    AlgebroidSpec::new(3, 3, base.rho.clone(), c).unwrap()
}

#[test]
fn so3_action_satisfies_structure_equations() {
    let a = AlgebroidSpec::so3_action();
    for x in [[0.3, -1.2, 0.7], [1.0, 2.0, 3.0], [-0.4, 0.0, 5.5]] {
        let (r1, r2) = a.structure_residual_norms(&x).unwrap();
        assert!(r1 < 1e-12 && r2 < 1e-12, "{r1} {r2}");
    }
}

#[test]
fn perturbed_structure_constant_is_detected() {
    let a = so3_with_c312(1.1);
    let (r1, _) = a.structure_residual_norms(&[0.3, -1.2, 0.7]).unwrap();
    assert!(r1 > 1e-2);
}

#[test]
fn non_antisymmetric_structure_is_rejected() {
    let base = AlgebroidSpec::so3_action();
    let mut c = base.c.clone();
    c[2][1][0] = constant(3, 0.5);
    let a = AlgebroidSpec::new(3, 3, base.rho.clone(), c).unwrap();
    assert!(a.structure_residual_norms(&[1.0, 1.0, 1.0]).is_err());
}

#[test]
fn exterior_derivative_squares_to_zero() {
    let a = AlgebroidSpec::so3_action();
    let x = [0.4, -0.9, 1.3];
    let xj = coordinate_jets(&x, 4);
    let fun = &xj[0] * &(&xj[1] * &xj[1]);
    let d1 = exterior_d(&a.base_frame(&x, 4).unwrap(), &Form::scalar(fun, 3));
    let d2 = exterior_d(&a.base_frame(&x, 3).unwrap(), &d1);
    assert!(d2.max_abs() < 1e-12);
    assert!(d2.antisymmetry_defect() < 1e-12);
    let d3 = exterior_d(&a.base_frame(&x, 2).unwrap(), &d2);
    assert!(d3.max_abs() < 1e-12);
}

#[test]
fn lifts_of_a_linear_section() {
    // on the tangent algebroid the complete lift of s = (x2, 0) is x2 ∂1 + u2 ∂_{u1}
    let a = AlgebroidSpec::trivial(2);
    let s = vec![f("x2", &["x1", "x2"]), constant(2, 0.0)];
    let l = a.lifts(&s, &[0.5, 2.0], &[0.3, -0.7]).unwrap();
    assert_eq!(l.vertical, vec![2.0, 0.0]);
    assert_eq!(l.complete_base, vec![2.0, 0.0]);
    assert!((l.complete_fiber[0] + 0.7).abs() < 1e-15 && l.complete_fiber[1].abs() < 1e-15);
}

#[test]
fn lifts_pick_up_structure_constants() {
    let a = AlgebroidSpec::so3_action();
    let s = vec![constant(3, 1.0), constant(3, 0.0), constant(3, 0.0)];
    let l = a.lifts(&s, &[0.0, 0.0, 1.0], &[0.0, 1.0, 0.0]).unwrap();
    // fiber part = −s^d C^b_da u^a = −C^b_12 = −δ^b_3
    assert!((l.complete_fiber[2] + 1.0).abs() < 1e-15);
    assert_eq!(l.complete_base, vec![0.0, 1.0, 0.0]);
}

#[test]
fn prolongation_pairing_is_identity() {
    let a = AlgebroidSpec::so3_action();
    let p = a.prolong_frame(&[0.1, 0.2, 0.3], &[1.0, -1.0, 2.0]).unwrap();
    for (b, row) in p.pairing.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            assert_eq!(*v, if b == c { 1.0 } else { 0.0 });
        }
    }
}

#[test]
fn sode_check_reports_residual() {
    assert!(sode_check(&[1.0, 2.0, 9.0, 9.0], &[1.0, 2.0]).0);
    let (ok, r) = sode_check(&[1.0, 2.5, 0.0, 0.0], &[1.0, 2.0]);
    assert!(!ok && (r - 0.5).abs() < 1e-15);
}

fn nonlinear_n_chart() -> Chart {
    let vars = ["x1", "x2", "x3", "u1", "u2", "u3"];
    let fields = (0..3)
        .map(|b| {
            (0..3)
                .map(|a| f(&format!("0.1*x{}*u{} + 0.05*u{}*u{} + {}", a + 1, b + 1, a + 1, b + 1, 0.01 * (a + b) as f64), &vars))
                .collect()
        })
        .collect();
    Chart::prolongation(Arc::new(AlgebroidSpec::so3_action()), Arc::new(FieldN { fields }))
}

#[test]
fn anholonomy_matches_direct_brackets() {
    let chart = nonlinear_n_chart();
    let fr = chart.frame(&[0.3, -0.2, 0.5, 0.7, 0.1, -0.4], 1).unwrap();
    let direct = fr.anholonomy_by_bracket();
    let r = fr.rank();
    for d in 0..r {
        for a in 0..r {
            for b in 0..r {
                let (x, y) = (direct[d][a][b].value(), fr.frame.w[d][a][b].value());
                assert!((x - y).abs() < 1e-12, "W[{d}][{a}][{b}]: {x} vs {y}");
            }
        }
    }
    assert!(fr.anchor_commutator_defect() < 1e-12);
}

#[test]
fn zero_n_has_trivial_vertical_anholonomy() {
    let chart = Chart::prolongation(Arc::new(AlgebroidSpec::so3_action()), Arc::new(ZeroN { mv: 3, mh: 3 }));
    let an = anholonomy(&chart, &[1.0, 0.0, 0.0, 1.0, 2.0, 3.0]).unwrap();
    assert!(an.omega.iter().flatten().flatten().all(|v| *v == 0.0));
    assert_eq!(an.w[2][0][1], 1.0);
    let nf = n_frame(&chart, &[1.0, 0.0, 0.0, 1.0, 2.0, 3.0]).unwrap();
    for (b, row) in nf.pairing.iter().enumerate() {
        for (a, v) in row.iter().enumerate() {
            assert!((v - if a == b { 1.0 } else { 0.0 }).abs() < 1e-15);
        }
    }
}

#[test]
fn n_frame_is_dual_for_nonzero_n() {
    let chart = nonlinear_n_chart();
    let nf = n_frame(&chart, &[0.3, -0.2, 0.5, 0.7, 0.1, -0.4]).unwrap();
    for (b, row) in nf.pairing.iter().enumerate() {
        for (a, v) in row.iter().enumerate() {
            assert!((v - if a == b { 1.0 } else { 0.0 }).abs() < 1e-14);
        }
    }
}

#[test]
fn bundle_lift_round_trips_for_invertible_anchor() {
    let a = AlgebroidSpec::constant(2, 2, &[vec![2.0, 1.0], vec![0.5, 3.0]], &vec![vec![vec![0.0; 2]; 2]; 2]).unwrap();
    let n_alg = vec![vec![0.3, -1.0], vec![2.0, 0.25]];
    let nb = n_lift_bundle(&a, &n_alg, &[0.0, 0.0]).unwrap();
    let back = n_unlift_bundle(&a, &nb, &[0.0, 0.0]).unwrap();
    for i in 0..2 {
        for j in 0..2 {
            assert!((back[i][j] - n_alg[i][j]).abs() < 1e-14);
        }
    }
    let so3 = AlgebroidSpec::so3_action();
    assert!(n_unlift_bundle(&so3, &nb, &[1.0, 0.0, 0.0]).is_err());
}

#[test]
fn berwald_derivative_of_vertical_field() {
    // bundle R² × R with N = x1 y², B = y: D̄_{z} B = z(y) + 2 x1 y · y = −x1 y² + 2 x1 y²
    let vars = ["x1", "x2", "y"];
    let chart = Chart::holonomic_base(
        anholo::nconnection::ChartKind::Bundle,
        2,
        1,
        Arc::new(FieldN { fields: vec![vec![f("x1*y^2", &vars), constant(3, 0.0)]] }),
    );
    let one = constant(3, 1.0);
    let zero = constant(3, 0.0);
    let b = vec![f("y", &vars)];
    let r = berwald_derivative(&chart, &[one.clone(), zero.clone()], std::slice::from_ref(&zero), &b, &[2.0, 0.0, 3.0]).unwrap();
    assert!((r[0] - 18.0).abs() < 1e-13);
    let r = berwald_derivative(&chart, &[zero.clone(), zero], &[one], &b, &[2.0, 0.0, 3.0]).unwrap();
    assert!((r[0] - 1.0).abs() < 1e-15);
}

#[test]
fn adapted_structure_residuals() {
    let a = AlgebroidSpec::so3_action();
    let vars = ["x1", "x2", "x3", "u1", "u2", "u3"];
    let zero = Arc::new(ZeroN { mv: 3, mh: 3 });
    let diag = |s: [&str; 3]| -> Vec<Vec<ScalarField>> {
        (0..3).map(|i| (0..3).map(|j| if i == j { f(s[i], &vars) } else { constant(6, 0.0) }).collect()).collect()
    };
    // constant vielbein: everything is tensorial
    let t = FrameTransform { base: Some(diag(["2", "1", "0.5"])), fiber: diag(["1", "3", "1"]) };
    let s = n_adapt_structure(&a, zero.as_ref(), &t, &[0.3, 0.2, -0.5], &[0.0; 3]).unwrap();
    assert!(s.res_anchor < 1e-12 && s.res_anchor_compensated < 1e-12 && s.res_jacobi < 1e-12);
    // x-dependent vielbein: the Jacobi identity with the Q-term still holds and
    // the compensated anchor equation holds, the literal one does not
    let t = FrameTransform { base: Some(diag(["1 + x1^2", "1", "1"])), fiber: diag(["exp(x2)", "1", "1 + x3^2"]) };
    let s = n_adapt_structure(&a, zero.as_ref(), &t, &[0.3, 0.2, -0.5], &[0.0; 3]).unwrap();
    assert!(s.res_jacobi < 1e-12, "{}", s.res_jacobi);
    assert!(s.res_anchor_compensated < 1e-12, "{}", s.res_anchor_compensated);
    assert!(s.res_anchor > 1e-3);
}
