use std::sync::Arc;

use anholo::algebroid::AlgebroidSpec;
use anholo::expr::expr_field;
use anholo::field::ScalarField;
use anholo::hamilton::*;
use anholo::jets::coordinate_jets;
use anholo::mechanics::LagrangianField;
use anholo::numeric::DomainBox;
use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const P6: [&str; 6] = ["x1", "x2", "x3", "p1", "p2", "p3"];
const U6: [&str; 6] = ["x1", "x2", "x3", "u1", "u2", "u3"];

fn f(text: &str, vars: &[&str]) -> ScalarField {
    expr_field(text, vars).unwrap()
}

fn so3() -> Arc<AlgebroidSpec> {
    Arc::new(AlgebroidSpec::so3_action())
}

fn rigid_h() -> HamiltonianField {
    HamiltonianField::new(so3(), f("0.5*(p1^2/1 + p2^2/2 + p3^2/3)", &P6)).unwrap()
}

fn rigid_l() -> LagrangianField {
    LagrangianField::new(so3(), f("0.5*(1*u1^2 + 2*u2^2 + 3*u3^2)", &U6)).unwrap()
}

/// x-dependent Hamiltonian on so(3), giving a nonzero canonical N.
fn curved_h() -> HamiltonianField {
    HamiltonianField::new(so3(), f("0.5*(1 + 0.2*x1^2)*p1^2 + 0.25*(1 + 0.1*x2*x3)*p2^2 + (0.2 + 0.05*x3^2)*p3^2 + 0.1*x1*p1*p2", &P6))
        .unwrap()
}

fn sample(n: usize, seed: usize) -> Vec<Vec<f64>> {
    DomainBox::new(vec![-1.0; 6], vec![1.0; 6]).unwrap().halton(n, seed)
}

#[test]
fn dual_frames_close_on_structure_functions() {
    let probe = f("sin(x1)*p2 + x2*x3*p1^2 + exp(0.3*p3)", &P6);
    let triv = dual_frames(Arc::new(AlgebroidSpec::trivial(3)), &[0.1, 0.2, 0.3, 0.4, 0.5, 0.6], probe.as_ref()).unwrap();
    assert_eq!(triv.bracket_defect, 0.0);
    for p in sample(10, 1) {
        let r = dual_frames(so3(), &p, probe.as_ref()).unwrap();
        assert!(r.bracket_defect < 1e-10 && r.d_squared < 1e-10, "{r:?}");
    }
}

#[test]
fn liouville_form() {
    let triv = liouville_sympletic(&AlgebroidSpec::trivial(2), &[0.1, 0.2, 0.7, -0.3]).unwrap();
    assert_eq!(triv.omega, vec![vec![0.0, 0.0, 1.0, 0.0], vec![0.0, 0.0, 0.0, 1.0], vec![-1.0, 0.0, 0.0, 0.0], vec![0.0, -1.0, 0.0, 0.0]]);
    let r = liouville_sympletic(&AlgebroidSpec::so3_action(), &[0.3, 0.1, 0.2, 0.0, 0.0, 1.0]).unwrap();
    assert_eq!(r.omega[0][1], 1.0);
    assert_eq!(r.omega[1][0], -1.0);
    assert_eq!(r.omega[0][2], 0.0);
    for p in sample(50, 2) {
        let r = liouville_sympletic(&AlgebroidSpec::so3_action(), &p).unwrap();
        assert!(r.closure < 1e-9 && r.exactness < 1e-14);
    }
}

#[test]
fn coordinate_brackets() {
    let alg = AlgebroidSpec::so3_action();
    let pt = [0.3, -0.4, 0.8, 0.2, -1.1, 0.6];
    let xs: Vec<ScalarField> = (0..3).map(|i| f(P6[i], &P6)).collect();
    let ps: Vec<ScalarField> = (0..3).map(|i| f(P6[3 + i], &P6)).collect();
    for i in 0..3 {
        for j in 0..3 {
            assert_eq!(poisson_bracket(&alg, xs[i].as_ref(), xs[j].as_ref(), &pt).unwrap(), 0.0);
        }
    }
    assert_eq!(poisson_bracket(&alg, ps[0].as_ref(), ps[1].as_ref(), &pt).unwrap(), pt[5]);
    assert_eq!(poisson_bracket(&alg, ps[1].as_ref(), ps[2].as_ref(), &pt).unwrap(), pt[3]);
    // {p_a, x^j} = ρ_a^j
    assert_eq!(poisson_bracket(&alg, ps[0].as_ref(), xs[1].as_ref(), &pt).unwrap(), alg.rho[0][1].eval(&pt[..3]).unwrap());
}

fn random_quadratic(rng: &mut ChaCha8Rng) -> ScalarField {
    let mut terms = Vec::new();
    for i in 0..6 {
        terms.push(format!("{:.6}*{}", rng.gen_range(-1.0..1.0), P6[i]));
        for j in i..6 {
            terms.push(format!("{:.6}*{}*{}", rng.gen_range(-1.0..1.0), P6[i], P6[j]));
        }
    }
    f(&terms.join(" + "), &P6)
}

#[test]
fn bracket_identities_on_random_quadratics() {
    let alg = AlgebroidSpec::so3_action();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for pt in sample(10, 5) {
        let (a, b, c) = (random_quadratic(&mut rng), random_quadratic(&mut rng), random_quadratic(&mut rng));
        let cj = coordinate_jets(&pt, 2);
        let rho = alg.rho_jets(&cj[..3]).unwrap();
        let cc = alg.c_jets(&cj[..3]).unwrap();
        let (fa, fb, fc) = (a.eval_jet(&cj).unwrap(), b.eval_jet(&cj).unwrap(), c.eval_jet(&cj).unwrap());
        let br = |x: &anholo::Jet, y: &anholo::Jet| bracket_jets(3, 3, &rho, &cc, &cj[3..], x, y);
        assert_eq!(br(&fa, &fb).value(), -br(&fb, &fa).value());
        let leib = br(&fa, &(&fb * &fc)).value() - br(&fa, &fb).value() * fc.value() - fb.value() * br(&fa, &fc).value();
        assert!(leib.abs() < 1e-12, "Leibniz {leib}");
        let jac = br(&fa, &br(&fb, &fc)).value() + br(&fb, &br(&fc, &fa)).value() + br(&fc, &br(&fa, &fb)).value();
        assert!(jac.abs() < 1e-8, "Jacobi {jac}");
    }
}

#[test]
fn straight_line_flow_on_trivial_algebroid() {
    let h = HamiltonianField::new(Arc::new(AlgebroidSpec::trivial(2)), f("(p1^2 + p2^2)/4", &["x1", "x2", "p1", "p2"])).unwrap();
    let tr = h.hamilton_flow(&[0.0, 1.0], &[2.0, -1.0], 1.0, 1e-2, &[]).unwrap();
    let s = tr.final_state();
    assert_abs_diff_eq!(s[0], 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(s[1], 0.5, epsilon = 1e-12);
    assert!(tr.energy_drift() < 1e-15);
}

#[test]
fn lie_poisson_rigid_body() {
    let h = rigid_h();
    let casimir = f("p1^2 + p2^2 + p3^2", &P6);
    let tr = h.hamilton_flow(&[0.1, 0.2, 0.3], &[1.0, 1.0, 0.6], 10.0, 1e-3, &[casimir]).unwrap();
    assert!(tr.energy_drift() < 1e-8, "{}", tr.energy_drift());
    assert!(tr.invariant_drift()[0] < 1e-8, "{}", tr.invariant_drift()[0]);
    for p in sample(20, 7) {
        assert!(h.contraction_residual(&p).unwrap() < 1e-8);
        assert!(curved_h().contraction_residual(&p).unwrap() < 1e-8);
    }
}

#[test]
fn legendre_of_quadratic_lagrangian() {
    let lag = LagrangianField::new(Arc::new(AlgebroidSpec::trivial(2)), f("u1^2 + u2^2", &["x1", "x2", "u1", "u2"])).unwrap();
    let p = legendre_point(&lag, &[0.1, 0.2, 0.5, -1.0]).unwrap();
    assert_eq!(p, vec![0.1, 0.2, 1.0, -2.0]);
    let h = HamiltonianField::from_lagrangian(&lag);
    assert_abs_diff_eq!(h.h.eval(&[0.3, 0.1, 1.0, -2.0]).unwrap(), 1.25, epsilon = 1e-14);
    let hj = h.h.eval_jet(&coordinate_jets(&[0.3, 0.1, 1.0, -2.0], 3)).unwrap();
    assert_abs_diff_eq!(hj.derivative(2).derivative(2).value(), 0.5, epsilon = 1e-12);
    assert_abs_diff_eq!(hj.derivative(2).derivative(3).value(), 0.0, epsilon = 1e-12);
}

#[test]
fn legendre_hamiltonian_jets_match_closed_form() {
    let leg = HamiltonianField::from_lagrangian(&rigid_l());
    let exact = rigid_h();
    for p in sample(5, 9) {
        let cj = coordinate_jets(&p, 3);
        let a = leg.h.eval_jet(&cj).unwrap();
        let b = exact.h.eval_jet(&cj).unwrap();
        for (x, y) in a.coeffs().iter().zip(b.coeffs()) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-11);
        }
    }
}

#[test]
fn legendre_round_trip() {
    let lag = LagrangianField::new(so3(), f("0.5*(1 + 0.1*x1^2)*u1^2 + u2^2 + 1.5*u3^2 + 0.1*u1^4 + 0.2*x2*u1*u3", &U6)).unwrap();
    let h = HamiltonianField::from_lagrangian(&lag);
    let mut worst = 0.0_f64;
    for pt in sample(100, 13) {
        let q = legendre_point(&lag, &pt).unwrap();
        let hj = h.h.eval_jet(&coordinate_jets(&q, 1)).unwrap();
        for a in 0..3 {
            worst = worst.max((hj.derivative(3 + a).value() - pt[3 + a]).abs());
        }
        // θ_l at (x, u) against θ̆ at Leg(x, u)
        let pc = lag.poincare_cartan(&pt).unwrap();
        let lv = liouville_sympletic(&lag.alg, &q).unwrap();
        for a in 0..6 {
            assert!((pc.theta[a] - lv.theta[a]).abs() < 1e-12);
        }
    }
    assert!(worst < 1e-10, "round trip {worst}");
}

#[test]
fn lagrange_and_hamilton_trajectories_agree() {
    let lag = rigid_l();
    let h = HamiltonianField::from_lagrangian(&lag);
    let (x0, u0) = ([0.1, 0.2, 0.3], [1.0, 0.5, 0.2]);
    let p0 = lag.momenta(&[x0.as_slice(), u0.as_slice()].concat()).unwrap();
    let tl = lag.integrate_el(&x0, &u0, 10.0, 1e-3, &[]).unwrap();
    let th = h.hamilton_flow(&x0, &p0, 10.0, 1e-3, &[]).unwrap();
    let mut worst = 0.0_f64;
    for k in (0..tl.t.len()).step_by(100) {
        let s = [tl.x[k].as_slice(), tl.y[k].as_slice()].concat();
        let q = legendre_point(&lag, &s).unwrap();
        let r = [th.x[k].as_slice(), th.y[k].as_slice()].concat();
        worst = worst.max(q.iter().zip(&r).fold(0.0_f64, |a, (x, y)| a.max((x - y).abs())));
    }
    assert!(worst < 1e-6, "{worst}");
}

#[test]
fn canonical_dual_n() {
    let triv = HamiltonianField::new(Arc::new(AlgebroidSpec::trivial(2)), f("(p1^2 + p2^2)/4", &["x1", "x2", "p1", "p2"])).unwrap();
    let r = triv.dual_canonical_n(&[0.2, 0.3, 0.4, 0.5]).unwrap();
    assert!(r.n.iter().flatten().all(|v| *v == 0.0));
    for p in sample(10, 17) {
        let r = curved_h().dual_canonical_n(&p).unwrap();
        assert_eq!(r.tau, 0.0);
        assert!(r.n.iter().flatten().any(|v| v.abs() > 1e-3));
    }
}

#[test]
fn dual_symplectic_closure() {
    for h in [rigid_h(), curved_h()] {
        for p in sample(10, 19) {
            let r = h.dual_symplectic(&p).unwrap();
            assert!(r.completed_closure < 1e-9, "{r:?}");
            assert!(r.transport_defect < 1e-12, "{r:?}");
            // with structure functions the bare v̆ ∧ z part is not closed
            assert!(r.literal_closure > 1e-3, "{r:?}");
        }
    }
    let triv = HamiltonianField::new(
        Arc::new(AlgebroidSpec::trivial(2)),
        f("(1 + 0.3*x1^2)*p1^2 + 0.5*(1 + 0.2*x2)*p2^2 + 0.1*x1*p1*p2", &["x1", "x2", "p1", "p2"]),
    )
    .unwrap();
    let r = triv.dual_symplectic(&[0.3, 0.2, 0.5, -0.7]).unwrap();
    assert!(r.literal_closure < 1e-9 && r.completed_closure < 1e-9, "{r:?}");
}

#[test]
fn dual_pack_compatibility() {
    let triv = HamiltonianField::new(Arc::new(AlgebroidSpec::trivial(2)), f("(p1^2 + p2^2)/4", &["x1", "x2", "p1", "p2"])).unwrap();
    let pk = triv.dual_pack(&[0.1, 0.2, 0.3, 0.4]).unwrap();
    assert!(pk.f_square_defect < 1e-15);
    let c = &pk.connection;
    assert!([&c.lh, &c.lv, &c.kh, &c.kv].iter().all(|t| t.iter().flatten().flatten().all(|v| v.abs() < 1e-15)));
    for h in [rigid_h(), curved_h()] {
        for p in sample(5, 23) {
            let pk = h.dual_pack(&p).unwrap();
            assert!(pk.f_square_defect < 1e-14);
            assert!(
                pk.metricity < 1e-9 && pk.omega_parallel < 1e-9 && pk.f_parallel < 1e-9,
                "{:?}",
                (pk.metricity, pk.omega_parallel, pk.f_parallel)
            );
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn bracket_is_antisymmetric(pt in prop::array::uniform6(-1.0f64..1.0)) {
        let alg = AlgebroidSpec::so3_action();
        let a = f("x1*p2^2 + sin(p3)", &P6);
        let b = f("x3*p1 + p1*p2*x2", &P6);
        let ab = poisson_bracket(&alg, a.as_ref(), b.as_ref(), &pt).unwrap();
        let ba = poisson_bracket(&alg, b.as_ref(), a.as_ref(), &pt).unwrap();
        prop_assert_eq!(ab, -ba);
    }

    #[test]
    fn hamiltonian_is_preserved_to_first_order(pt in prop::array::uniform6(-1.0f64..1.0)) {
        let h = curved_h();
        let v = h.vector_field(&pt).unwrap();
        let hj = h.h.eval_jet(&coordinate_jets(&pt, 1)).unwrap();
        let dh: f64 = (0..6).map(|i| hj.derivative(i).value() * v[i]).sum();
        prop_assert!(dh.abs() < 1e-12);
    }
}
