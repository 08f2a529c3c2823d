use std::sync::Arc;

use anholo::algebroid::AlgebroidSpec;
use anholo::expr::expr_field;
use anholo::field::ScalarField;
use anholo::geometry::nonmetricity;
use anholo::mechanics::*;
use anholo::numeric::DomainBox;
use anholo::Error;
use approx::assert_abs_diff_eq;
use proptest::prelude::*;

const V6: [&str; 6] = ["x1", "x2", "x3", "u1", "u2", "u3"];
const V4: [&str; 4] = ["x1", "x2", "u1", "u2"];

fn f(text: &str, vars: &[&str]) -> ScalarField {
    expr_field(text, vars).unwrap()
}

fn rigid_body(i: [f64; 3]) -> LagrangianField {
    let l = f(&format!("0.5*({}*u1^2 + {}*u2^2 + {}*u3^2)", i[0], i[1], i[2]), &V6);
    LagrangianField::new(Arc::new(AlgebroidSpec::so3_action()), l).unwrap()
}

fn free_particle(n: usize) -> LagrangianField {
    let vars: Vec<String> = (1..=n).map(|i| format!("x{i}")).chain((1..=n).map(|i| format!("u{i}"))).collect();
    let refs: Vec<&str> = vars.iter().map(|s| s.as_str()).collect();
    let text: Vec<String> = (1..=n).map(|i| format!("u{i}^2")).collect();
    LagrangianField::new(Arc::new(AlgebroidSpec::trivial(n)), f(&text.join(" + "), &refs)).unwrap()
}

const G2: [[&str; 2]; 2] = [["1 + 0.3*x1^2", "0.2*x1*x2"], ["0.2*x1*x2", "2 + 0.5*sin(x2)"]];

/// l = g_ab(x) u^a u^b on the tangent bundle of R².
fn quadratic() -> LagrangianField {
    let t = format!("({})*u1^2 + 2*({})*u1*u2 + ({})*u2^2", G2[0][0], G2[0][1], G2[1][1]);
    LagrangianField::new(Arc::new(AlgebroidSpec::trivial(2)), f(&t, &V4)).unwrap()
}

fn g2_at(x: &[f64]) -> [[f64; 2]; 2] {
    let (a, b) = (x[0], x[1]);
    [[1.0 + 0.3 * a * a, 0.2 * a * b], [0.2 * a * b, 2.0 + 0.5 * b.sin()]]
}

/// Christoffel symbols of the 2×2 metric by central differences.
fn christoffel_fd(x: &[f64]) -> [[[f64; 2]; 2]; 2] {
    let h = 1e-5;
    let mut dg = [[[0.0; 2]; 2]; 2];
    for k in 0..2 {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[k] += h;
        xm[k] -= h;
        let (gp, gm) = (g2_at(&xp), g2_at(&xm));
        for i in 0..2 {
            for j in 0..2 {
                dg[k][i][j] = (gp[i][j] - gm[i][j]) / (2.0 * h);
            }
        }
    }
    let g = g2_at(x);
    let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
    let gi = [[g[1][1] / det, -g[0][1] / det], [-g[1][0] / det, g[0][0] / det]];
    let mut out = [[[0.0; 2]; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            for c in 0..2 {
                out[a][b][c] = (0..2).map(|e| 0.5 * gi[a][e] * (dg[b][e][c] + dg[c][e][b] - dg[e][b][c])).sum();
            }
        }
    }
    out
}

#[test]
fn hessian_examples() {
    let g = free_particle(3).hessian(&[0.1, 0.2, 0.3, 1.0, -1.0, 0.5]).unwrap();
    for a in 0..3 {
        for b in 0..3 {
            assert_eq!(g[a][b], if a == b { 1.0 } else { 0.0 });
        }
    }
    let g = rigid_body([1.0, 2.0, 3.0]).hessian(&[0.3, 0.1, -0.2, 1.0, 1.0, 1.0]).unwrap();
    for a in 0..3 {
        assert_abs_diff_eq!(g[a][a], 0.5 * (a + 1) as f64, epsilon = 1e-15);
    }
    let quartic = LagrangianField::new(Arc::new(AlgebroidSpec::trivial(3)), f("(u1^2+u2^2+u3^2)^2", &V6)).unwrap();
    match quartic.hessian(&[0.0; 6]) {
        Err(Error::Regularity { point, .. }) => assert_eq!(point, vec![0.0; 6]),
        other => panic!("expected a regularity error, got {other:?}"),
    }
}

#[test]
fn rigid_body_semispray_gives_euler_equations() {
    let lag = rigid_body([1.0, 2.0, 3.0]);
    let v = lag.vector_field(&[0.4, -0.3, 0.2, 1.0, 1.0, 1.0]).unwrap();
    assert_abs_diff_eq!(v[3], -1.0, epsilon = 1e-14);
    assert_abs_diff_eq!(v[4], 1.0, epsilon = 1e-14);
    assert_abs_diff_eq!(v[5], -1.0 / 3.0, epsilon = 1e-14);
    // Euler: I_a u̇_a = (I_b − I_c) u_b u_c at a generic point
    let i = [1.0, 2.0, 3.0];
    let u = [0.7, -0.4, 1.3];
    let v = lag.vector_field(&[0.0, 0.0, 0.0, u[0], u[1], u[2]]).unwrap();
    for a in 0..3 {
        let (b, c) = ((a + 1) % 3, (a + 2) % 3);
        assert_abs_diff_eq!(i[a] * v[3 + a], (i[b] - i[c]) * u[b] * u[c], epsilon = 1e-14);
    }
}

#[test]
fn free_particle_has_zero_spray() {
    let lag = free_particle(3);
    let p = [0.3, -1.0, 2.0, 0.5, 0.1, -0.7];
    assert!(lag.semispray(&p).unwrap().iter().all(|g| *g == 0.0));
    assert!(lag.canonical_n(&p).unwrap().iter().flatten().all(|n| *n == 0.0));
}

#[test]
fn quadratic_lagrangian_reduces_to_christoffel() {
    let lag = quadratic();
    for p in [[0.3, -0.5, 0.8, 1.1], [-1.0, 0.4, -0.2, 0.6], [0.7, 1.2, 1.5, -0.9]] {
        let gam = christoffel_fd(&p[..2]);
        let u = &p[2..];
        let spray = lag.semispray(&p).unwrap();
        let nc = lag.canonical_n(&p).unwrap();
        for a in 0..2 {
            let want: f64 = (0..2).flat_map(|b| (0..2).map(move |c| (b, c))).map(|(b, c)| gam[a][b][c] * u[b] * u[c]).sum();
            assert_abs_diff_eq!(2.0 * spray[a], want, epsilon = 1e-8);
            for b in 0..2 {
                let want: f64 = (0..2).map(|c| gam[a][b][c] * u[c]).sum();
                assert_abs_diff_eq!(nc[a][b], want, epsilon = 1e-8);
            }
        }
    }
}

#[test]
fn rigid_body_n_matches_differentiated_euler_form() {
    let i = [1.0, 2.0, 3.0];
    let lag = rigid_body(i);
    let u = [0.3, -0.8, 1.1];
    let nc = lag.canonical_n(&[0.1, 0.2, 0.3, u[0], u[1], u[2]]).unwrap();
    // G^a = −(I_b − I_c) u_b u_c / (2 I_a), (a, b, c) cyclic
    for a in 0..3 {
        let (b, c) = ((a + 1) % 3, (a + 2) % 3);
        let k = -(i[b] - i[c]) / (2.0 * i[a]);
        assert_abs_diff_eq!(nc[a][a], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(nc[a][b], k * u[c], epsilon = 1e-14);
        assert_abs_diff_eq!(nc[a][c], k * u[b], epsilon = 1e-14);
    }
}

#[test]
fn rigid_body_flow_conserves_energy_and_casimir() {
    let lag = rigid_body([1.0, 2.0, 3.0]);
    let casimir = f("(1*u1)^2 + (2*u2)^2 + (3*u3)^2", &V6);
    let tr = lag.integrate_el(&[0.1, 0.2, 0.3], &[1.0, 0.5, 0.2], 10.0, 1e-3, &[casimir]).unwrap();
    assert_eq!(tr.t.len(), 10_001);
    assert!(tr.energy_drift() < 1e-8, "energy drift {}", tr.energy_drift());
    assert!(tr.invariant_drift()[0] < 1e-8, "Casimir drift {}", tr.invariant_drift()[0]);
    assert!(tr.el_residual.unwrap() < 1e-6, "EL residual {}", tr.el_residual.unwrap());
}

#[test]
fn free_particle_moves_on_straight_lines() {
    let lag = free_particle(2);
    let tr = lag.integrate_el(&[0.0, 0.0], &[0.3, -0.7], 2.0, 1e-2, &[]).unwrap();
    let last = tr.final_state();
    assert_abs_diff_eq!(last[0], 0.6, epsilon = 1e-12);
    assert_abs_diff_eq!(last[1], -1.4, epsilon = 1e-12);
    assert_eq!(&last[2..], &[0.3, -0.7]);
}

/// Independent geodesic integrator: ẍ^a = −Γ^a_bc ẋ^b ẋ^c with RK4.
fn classical_geodesic(x0: [f64; 2], v0: [f64; 2], t: f64, dt: f64) -> [f64; 4] {
    let rhs = |s: [f64; 4]| -> [f64; 4] {
        let gam = christoffel_fd(&s[..2]);
        let mut acc = [0.0; 2];
        for a in 0..2 {
            for b in 0..2 {
                for c in 0..2 {
                    acc[a] -= gam[a][b][c] * s[2 + b] * s[2 + c];
                }
            }
        }
        [s[2], s[3], acc[0], acc[1]]
    };
    let mut s = [x0[0], x0[1], v0[0], v0[1]];
    let steps = (t / dt).round() as usize;
    for _ in 0..steps {
        let k1 = rhs(s);
        let k2 = rhs(std::array::from_fn(|i| s[i] + 0.5 * dt * k1[i]));
        let k3 = rhs(std::array::from_fn(|i| s[i] + 0.5 * dt * k2[i]));
        let k4 = rhs(std::array::from_fn(|i| s[i] + dt * k3[i]));
        s = std::array::from_fn(|i| s[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
    }
    s
}

#[test]
fn quadratic_geodesics_match_classical_integrator() {
    let lag = quadratic();
    let tr = lag.integrate_el(&[0.2, -0.1], &[0.5, 0.3], 2.0, 1e-3, &[]).unwrap();
    let want = classical_geodesic([0.2, -0.1], [0.5, 0.3], 2.0, 1e-3);
    let got = tr.final_state();
    for i in 0..4 {
        assert_abs_diff_eq!(got[i], want[i], epsilon = 1e-7);
    }
    assert!(tr.energy_drift() < 1e-9);
    assert!(tr.el_residual.unwrap() < 1e-6);
}

#[test]
fn poincare_cartan_free_particle() {
    let lag = free_particle(2);
    let pc = lag.poincare_cartan(&[0.1, 0.2, 0.5, -1.5]).unwrap();
    assert_eq!(pc.theta, vec![1.0, -3.0, 0.0, 0.0]);
    assert_abs_diff_eq!(pc.energy, 0.25 + 2.25, epsilon = 1e-15);
    // tangent-bundle form 2 du^a ∧ dx^a in (z̃, ṽ) components
    assert_eq!(pc.omega[0][2], 2.0);
    assert_eq!(pc.omega[2][0], -2.0);
    assert_eq!(pc.omega[0][1], 0.0);
    assert!(pc.sode);
}

#[test]
fn poincare_cartan_identities_on_rigid_body() {
    let lag = rigid_body([1.0, 2.0, 3.0]);
    let dom = DomainBox::new(vec![-1.0; 6], vec![1.0; 6]).unwrap();
    for p in dom.halton(20, 3) {
        let pc = lag.poincare_cartan(&p).unwrap();
        assert!(pc.contraction < 1e-8, "contraction {}", pc.contraction);
        assert!(pc.exactness < 1e-12);
        assert!(pc.closure < 1e-12);
        assert!(pc.sode);
        // ω(z̃_a, z̃_b) = p_e C^e_ab for an x-independent Lagrangian
        let pmom = [p[3], 2.0 * p[4], 3.0 * p[5]];
        assert_abs_diff_eq!(pc.omega[0][1], pmom[2], epsilon = 1e-14);
    }
}

#[test]
fn almost_kahler_structure() {
    let ak = free_particle(2).almost_kahler(&[0.0, 0.0, 1.0, 2.0]).unwrap();
    assert_eq!(ak.f_square_defect, 0.0);
    assert_eq!(ak.metric, vec![vec![1.0, 0.0, 0.0, 0.0], vec![0.0, 1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0, 0.0], vec![0.0, 0.0, 0.0, 1.0]]);
    assert_eq!(ak.omega[2][0], 1.0);
    assert_eq!(ak.omega[0][2], -1.0);
    let ak = rigid_body([1.0, 2.0, 3.0]).almost_kahler(&[0.1, 0.2, 0.3, 1.0, 0.5, 0.2]).unwrap();
    assert_eq!(ak.f_square_defect, 0.0);
    assert_eq!(ak.omega_antisymmetry, 0.0);
    assert!(ak.compatibility < 1e-12);
}

#[test]
fn lagrange_connection_is_compatible() {
    let fp = free_particle(2).lagrange_dconnection(&[0.1, 0.2, 0.3, 0.4]).unwrap();
    assert!(fp.connection.lh.iter().chain(&fp.connection.lv).flatten().flatten().all(|v| *v == 0.0));
    let lag = rigid_body([1.0, 2.0, 3.0]);
    let lc = lag.lagrange_dconnection(&[0.1, 0.2, 0.3, 1.0, 0.5, 0.2]).unwrap();
    assert!(lc.metricity < 1e-9 && lc.omega_parallel < 1e-9 && lc.f_parallel < 1e-9, "{lc:?}");
    // lh and kv are those of the canonical d-connection; lv carries ∂N in
    // the canonical one and vanishes here
    assert!(lc.block_deviation[0] < 1e-12 && lc.block_deviation[3] < 1e-12);
    assert!(lc.block_deviation[1] > 1e-2);
}

#[test]
fn lagrange_connection_on_x_dependent_lagrangian() {
    let lc = quadratic().lagrange_dconnection(&[0.3, -0.2, 0.7, 0.4]).unwrap();
    assert!(lc.metricity < 1e-9 && lc.omega_parallel < 1e-9 && lc.f_parallel < 1e-9, "{lc:?}");
}

fn randers() -> (FinslerField, FinslerChecks) {
    let ff = f("sqrt(u1^2 + u2^2) + 0.3*(0.6*u1 + 0.8*u2)", &V4);
    let dom = DomainBox::new(vec![-1.0, -1.0, 0.2, 0.1], vec![1.0, 1.0, 1.5, 1.2]).unwrap();
    FinslerField::new(Arc::new(AlgebroidSpec::trivial(2)), ff, dom).unwrap()
}

#[test]
fn randers_finsler_pack() {
    let (ff, checks) = randers();
    assert!(checks.worst_homogeneity < 1e-12 && checks.min_eigenvalue > 0.0);
    let p = [0.2, 0.1, 0.7, 0.4];
    let q = [0.2, 0.1, 1.4, 0.8];
    assert_abs_diff_eq!(ff.f.eval(&q).unwrap(), 2.0 * ff.f.eval(&p).unwrap(), epsilon = 1e-15);
    let pack = ff.pack(&p).unwrap();
    assert!(pack.berwald_partial_metricity.0 < 1e-10 && pack.berwald_partial_metricity.1 < 1e-10);
    // g^f is 0-homogeneous
    let g2 = ff.lagrangian().hessian(&q).unwrap();
    for a in 0..2 {
        for b in 0..2 {
            assert_abs_diff_eq!(pack.g[a][b], g2[a][b], epsilon = 1e-13);
        }
    }
}

#[test]
fn euclidean_finsler_is_flat() {
    let dom = DomainBox::new(vec![-1.0, -1.0, 0.2, 0.2], vec![1.0, 1.0, 1.0, 1.0]).unwrap();
    let (ff, _) = FinslerField::new(Arc::new(AlgebroidSpec::trivial(2)), f("sqrt(u1^2+u2^2)", &V4), dom).unwrap();
    let pack = ff.pack(&[0.1, 0.2, 0.5, 0.6]).unwrap();
    assert!(pack.g.iter().enumerate().all(|(a, r)| r.iter().enumerate().all(|(b, v)| (v - if a == b { 1.0 } else { 0.0 }).abs() < 1e-14)));
    assert!(pack.n.iter().flatten().all(|v| v.abs() < 1e-14));
    assert!(pack.berwald_nonmetricity.max_abs() < 1e-13);
}

#[test]
fn homogeneity_violation_is_reported() {
    let dom = DomainBox::new(vec![-1.0, -1.0, 0.2, 0.2], vec![1.0, 1.0, 1.0, 1.0]).unwrap();
    let err = FinslerField::new(Arc::new(AlgebroidSpec::trivial(2)), f("u1^2 + u2^2", &V4), dom).err().unwrap();
    assert!(matches!(err, Error::Validation(ref s) if s.contains("homogeneous")), "{err}");
}

#[test]
fn berwald_nonmetricity_matches_block_formulas() {
    let (ff, _) = randers();
    let gp = ff.lagrangian().sasaki().at(&[0.2, 0.1, 0.7, 0.4], 0).unwrap();
    let berw = anholo::geometry::berwald_dconnection(&gp);
    let q = nonmetricity(&berw, &gp);
    let (mh, mv) = (2, 2);
    for c in 0..mv {
        for a in 0..mh {
            for b in 0..mh {
                assert_abs_diff_eq!(q.v_on_g[c][a][b], -gp.d(mh + c, &gp.g[a][b]).value(), epsilon = 1e-12);
            }
        }
    }
    for cp in 0..mh {
        for a in 0..mv {
            for b in 0..mv {
                let mut want = gp.d(cp, &gp.h[a][b]).value();
                for d in 0..mv {
                    want -= gp.cf.dn[d][cp][a].value() * gp.h[d][b].value();
                    want -= gp.cf.dn[d][cp][b].value() * gp.h[a][d].value();
                }
                assert_abs_diff_eq!(q.h_on_h[cp][a][b], -want, epsilon = 1e-12);
            }
        }
    }
}

#[test]
fn gl_reduces_to_lagrange() {
    let alg = Arc::new(AlgebroidSpec::trivial(2));
    let one = f("1", &V4);
    let zero = f("0", &V4);
    let gl = GLMetricField::new(alg.clone(), vec![vec![one.clone(), zero.clone()], vec![zero, one]]).unwrap();
    let p = [0.3, 0.4, 1.0, -2.0];
    let pack = gl.pack(&p).unwrap();
    assert_abs_diff_eq!(pack.epsilon, 5.0, epsilon = 1e-15);
    assert!(pack.semispray.iter().all(|g| *g == 0.0));
    // conformal metric e^σ δ against l = e^σ |u|²
    let s = f("exp(0.3*x1 - 0.2*x2^2)", &V4);
    let z = f("0", &V4);
    let gl = GLMetricField::new(alg.clone(), vec![vec![s.clone(), z.clone()], vec![z, s]]).unwrap();
    let lag = LagrangianField::new(alg, f("exp(0.3*x1 - 0.2*x2^2)*(u1^2 + u2^2)", &V4)).unwrap();
    let pack = gl.pack(&p).unwrap();
    let spray = lag.semispray(&p).unwrap();
    let nc = lag.canonical_n(&p).unwrap();
    for a in 0..2 {
        assert_abs_diff_eq!(pack.semispray[a], spray[a], epsilon = 1e-14);
        for b in 0..2 {
            assert_abs_diff_eq!(pack.n[a][b], nc[a][b], epsilon = 1e-14);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn rigid_body_structures_hold_for_any_inertia(i1 in 0.5f64..4.0, i2 in 0.5f64..4.0, i3 in 0.5f64..4.0,
                                                  u in prop::array::uniform3(-2.0f64..2.0)) {
        let lag = rigid_body([i1, i2, i3]);
        let p = [0.2, -0.1, 0.4, u[0], u[1], u[2]];
        let ak = lag.almost_kahler(&p).unwrap();
        prop_assert_eq!(ak.f_square_defect, 0.0);
        prop_assert_eq!(ak.omega_antisymmetry, 0.0);
        prop_assert!(ak.compatibility < 1e-12);
        let g = lag.hessian(&p).unwrap();
        prop_assert!((0..3).all(|a| (0..3).all(|b| g[a][b] == g[b][a])));
        // energy is conserved to first order: dE/dt = 0 along the vector field
        let v = lag.vector_field(&p).unwrap();
        let de: f64 = (0..3).map(|a| [i1, i2, i3][a] * u[a] * v[3 + a]).sum();
        prop_assert!(de.abs() < 1e-12);
    }

    #[test]
    fn contraction_identity_on_quadratic_lagrangian(x in prop::array::uniform2(-1.0f64..1.0), u in prop::array::uniform2(-1.0f64..1.0)) {
        let pc = quadratic().poincare_cartan(&[x[0], x[1], u[0], u[1]]).unwrap();
        prop_assert!(pc.contraction < 1e-10);
        prop_assert!(pc.exactness < 1e-12);
    }
}
