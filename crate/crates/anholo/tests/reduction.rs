//! Trivial algebroid (ρ = id, C = 0) against classical tangent-bundle formulas,
//! and the v-block curvature against a coordinate Riemann tensor.

mod common;

use std::sync::Arc;

use anholo::algebroid::AlgebroidSpec;
use anholo::expr::expr_field;
use anholo::geometry::{canonical_dconnection, curvature, offdiag_assemble, CurvatureMode, DMetric, FieldMetric};
use anholo::jets::Jet;
use anholo::mechanics::LagrangianField;
use anholo::nconnection::{Chart, ChartKind, ZeroN};
use anholo::numeric::DomainBox;
use anholo::ScalarField;
use common::oracles::{classical_lagrange, gaussian_curvature};
use nalgebra::DMatrix;
use proptest::prelude::*;

const TOL: f64 = 1e-10;

fn lagrangian() -> ScalarField {
    expr_field(
        "(1 + x1^2)*u1^2 + 0.5*u1*u2 + (2 + sin(x2))*u2^2 + 0.1*u1^4 + 0.05*(1 + x1*x2)*u1^2*u2^2 + x2*u1",
        &["x1", "x2", "u1", "u2"],
    )
    .unwrap()
}

fn field() -> LagrangianField {
    LagrangianField::new(Arc::new(AlgebroidSpec::trivial(2)), lagrangian()).unwrap()
}

fn points() -> Vec<Vec<f64>> {
    DomainBox::new(vec![-1.0, -1.0, -1.0, -1.0], vec![1.0, 1.0, 1.0, 1.0]).unwrap().halton(20, 5)
}

/// Columns are the adapted frame (z_a, v_a) in coordinates (∂_x, ∂_y).
fn frame_matrix(n: &[Vec<f64>]) -> DMatrix<f64> {
    let mut e = DMatrix::identity(4, 4);
    for a in 0..2 {
        for b in 0..2 {
            e[(2 + b, a)] = -n[b][a];
        }
    }
    e
}

fn max_diff(a: &DMatrix<f64>, b: &[[f64; 4]; 4]) -> f64 {
    let mut w = 0.0_f64;
    for i in 0..4 {
        for j in 0..4 {
            w = w.max((a[(i, j)] - b[i][j]).abs());
        }
    }
    w
}

#[test]
fn hessian_semispray_and_canonical_n() {
    let lf = field();
    for p in points() {
        let o = classical_lagrange(lagrangian().as_ref(), [p[0], p[1], p[2], p[3]]);
        let g = lf.hessian(&p).unwrap();
        let s = lf.semispray(&p).unwrap();
        let n = lf.canonical_n(&p).unwrap();
        for a in 0..2 {
            assert!((s[a] - o.spray[a]).abs() < TOL);
            for b in 0..2 {
                assert!((g[a][b] - o.g[a][b]).abs() < TOL);
                assert!((n[a][b] - o.n[a][b]).abs() < TOL, "{n:?} {:?}", o.n);
            }
        }
    }
}

#[test]
fn sasaki_metric_in_coordinates() {
    let lf = field();
    let dm = lf.sasaki();
    for p in points() {
        let o = classical_lagrange(lagrangian().as_ref(), [p[0], p[1], p[2], p[3]]);
        let gp = dm.at(&p, 0).unwrap();
        let v = |m: &anholo::linalg::Mat| DMatrix::from_fn(m.len(), m[0].len(), |i, j| m[i][j].value());
        let full = offdiag_assemble(&v(&gp.g), &v(&gp.h), &v(&gp.cf.nn));
        assert!(max_diff(&full, &o.sasaki) < TOL);
    }
}

#[test]
fn almost_complex_structure_and_two_form_in_coordinates() {
    let lf = field();
    for p in points() {
        let o = classical_lagrange(lagrangian().as_ref(), [p[0], p[1], p[2], p[3]]);
        let ak = lf.almost_kahler(&p).unwrap();
        let e = frame_matrix(&lf.canonical_n(&p).unwrap());
        let einv = e.clone().try_inverse().unwrap();
        let f = DMatrix::from_fn(4, 4, |i, j| ak.f[i][j]);
        let om = DMatrix::from_fn(4, 4, |i, j| ak.omega[i][j]);
        let f_coord = &e * f * &einv;
        let om_coord = einv.transpose() * om * &einv;
        assert!(max_diff(&f_coord, &o.f) < TOL, "{f_coord} {:?}", o.f);
        assert!(max_diff(&om_coord, &o.omega) < TOL);
        assert!(((&f_coord * &f_coord) + DMatrix::identity(4, 4)).amax() < TOL);
    }
}

#[test]
fn canonical_d_connection_of_a_lagrange_space() {
    let lf = field();
    for p in points() {
        let o = classical_lagrange(lagrangian().as_ref(), [p[0], p[1], p[2], p[3]]);
        let c = lf.lagrange_dconnection(&p).unwrap().connection;
        for a in 0..2 {
            for b in 0..2 {
                for d in 0..2 {
                    assert!((c.lh[a][b][d] - o.l[a][b][d]).abs() < TOL);
                    assert!((c.lv[a][b][d] - o.l[a][b][d]).abs() < TOL);
                    assert!((c.kv[a][b][d] - o.c[a][b][d]).abs() < TOL);
                    assert!((c.kh[a][b][d] - o.c[a][b][d]).abs() < TOL);
                }
            }
        }
    }
}

fn stereographic() -> DMetric {
    let vars = ["x1", "y1", "y2"];
    let h = "4/(1 + y1^2 + y2^2)^2";
    let f = |t: &str| expr_field(t, &vars).unwrap();
    let chart = Chart::holonomic_base(ChartKind::Bundle, 1, 2, Arc::new(ZeroN { mv: 2, mh: 1 }));
    DMetric::new(chart, Arc::new(FieldMetric { g: vec![vec![f("1")]], h: vec![vec![f(h), f("0")], vec![f("0"), f(h)]] }))
}

fn sphere_metric(c: &[Jet]) -> [[Jet; 2]; 2] {
    let r = (&c[0] * &c[0] + &c[1] * &c[1]) + 1.0;
    let lam = (&r * &r).recip().unwrap().scale(4.0);
    let z = c[0].lift(0.0);
    [[lam.clone(), z.clone()], [z, lam]]
}

fn engine_sectional(dm: &DMetric, u: [f64; 2]) -> f64 {
    let gp = dm.at(&[0.3, u[0], u[1]], 1).unwrap();
    let rep = curvature(&canonical_dconnection(&gp), &gp, CurvatureMode::Complete);
    let h = |a: usize, b: usize| gp.h[a][b].value();
    let num: f64 = (0..2).map(|a| h(0, a) * rep.s_v[a][1][1][0]).sum();
    num / (h(0, 0) * h(1, 1) - h(0, 1) * h(0, 1))
}

#[test]
fn stereographic_sphere_has_unit_curvature() {
    let dm = stereographic();
    for u in [[0.0, 0.0], [0.5, -0.3], [1.7, 2.2], [-3.0, 0.1]] {
        let k = engine_sectional(&dm, u);
        let oracle = gaussian_curvature(sphere_metric, u);
        assert!((k - 1.0).abs() < 1e-8, "{k}");
        assert!((k - oracle).abs() < 1e-8, "{k} {oracle}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn sphere_curvature_is_one_everywhere(u1 in -4.0f64..4.0, u2 in -4.0f64..4.0) {
        let k = engine_sectional(&stereographic(), [u1, u2]);
        prop_assert!((k - 1.0).abs() < 1e-8);
    }
}
