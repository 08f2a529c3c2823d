use std::sync::Arc;

use anholo::algebroid::AlgebroidSpec;
use anholo::expr::expr_field;
use anholo::field::ScalarField;
use anholo::geometry::*;
use anholo::linalg::max_abs_t3;
use anholo::nconnection::{Chart, ChartKind, FieldN, ZeroN};
use nalgebra::DMatrix;
use proptest::prelude::*;

const VARS: [&str; 6] = ["x1", "x2", "x3", "u1", "u2", "u3"];

fn f(text: &str, vars: &[&str]) -> ScalarField {
    expr_field(text, vars).unwrap()
}

fn fm(rows: &[&[&str]], vars: &[&str]) -> Vec<Vec<ScalarField>> {
    rows.iter().map(|r| r.iter().map(|s| f(s, vars)).collect()).collect()
}

fn nonlinear_n() -> Arc<FieldN> {
    let fields = (0..3)
        .map(|b| {
            (0..3)
                .map(|a| f(&format!("0.1*x{}*u{} + 0.05*u{}*u{} + {}", a + 1, b + 1, a + 1, b + 1, 0.01 * (a + b) as f64), &VARS))
                .collect()
        })
        .collect();
    Arc::new(FieldN { fields })
}

fn curved_metric() -> Arc<FieldMetric> {
    Arc::new(FieldMetric {
        g: fm(
            &[
                &["2 + 0.1*x1^2 + 0.05*u2^2", "0.1*x2*u1", "0.05*x3"],
                &["0.1*x2*u1", "1.5 + 0.2*u3^2", "0.02*u1*u2"],
                &["0.05*x3", "0.02*u1*u2", "1 + 0.1*x1*x2 + 0.1*u1^2"],
            ],
            &VARS,
        ),
        h: fm(
            &[
                &["1 + 0.1*u1^2 + 0.05*x2^2", "0.1*u1*u2", "0.03*x1*u3"],
                &["0.1*u1*u2", "2 + 0.1*x3*u2", "0.04*u3"],
                &["0.03*x1*u3", "0.04*u3", "1.2 + 0.1*u3^2 + 0.1*x1^2"],
            ],
            &VARS,
        ),
    })
}

/// so(3) action algebroid with a nonlinear N and a point-dependent d-metric.
fn so3_metric() -> DMetric {
    DMetric::new(Chart::prolongation(Arc::new(AlgebroidSpec::so3_action()), nonlinear_n()), curved_metric())
}

/// Same data on the tangent bundle of R³ (no structure functions).
fn holonomic_metric() -> DMetric {
    DMetric::new(Chart::prolongation(Arc::new(AlgebroidSpec::trivial(3)), nonlinear_n()), curved_metric())
}

const PT: [f64; 6] = [0.3, -0.2, 0.5, 0.7, 0.1, -0.4];

fn max_diff4(a: &Arr4, b: &Arr4) -> f64 {
    let mut w = 0.0_f64;
    for (x, y) in a.iter().flatten().flatten().flatten().zip(b.iter().flatten().flatten().flatten()) {
        w = w.max((x - y).abs());
    }
    w
}

fn max_diff_full(a: &anholo::linalg::T3, b: &anholo::linalg::T3) -> f64 {
    anholo::linalg::max_diff_t3(a, b)
}

#[test]
fn sphere_fiber_has_unit_sectional_curvature() {
    let vars = ["x1", "y1", "y2"];
    let chart = Chart::holonomic_base(ChartKind::Bundle, 1, 2, Arc::new(ZeroN { mv: 2, mh: 1 }));
    let metric = FieldMetric { g: fm(&[&["1"]], &vars), h: fm(&[&["1", "0"], &["0", "sin(y1)^2"]], &vars) };
    let dm = DMetric::new(chart, Arc::new(metric));
    for theta in [0.4, 1.1, 2.3] {
        let gp = dm.at(&[0.0, theta, 0.7], 1).unwrap();
        let can = canonical_dconnection(&gp);
        let rep = curvature(&can, &gp, CurvatureMode::NoStructureTerms);
        let h = |a: usize, b: usize| gp.h[a][b].value();
        let num: f64 = (0..2).map(|a| h(0, a) * rep.s_v[a][1][1][0]).sum();
        let k = num / (h(0, 0) * h(1, 1) - h(0, 1) * h(0, 1));
        // oracle: K = −(√G)'' / √G from central differences of the metric
        let sq = |t: f64| t.sin().abs();
        let e = 1e-4;
        let oracle = -(sq(theta + e) - 2.0 * sq(theta) + sq(theta - e)) / (e * e) / sq(theta);
        assert!((k - 1.0).abs() < 1e-12, "K = {k}");
        assert!((k - oracle).abs() < 1e-6, "oracle {oracle}");
        assert!((rep.scalar - 2.0).abs() < 1e-12, "scalar {}", rep.scalar);
    }
}

#[test]
fn flat_data_has_no_curvature_or_torsion() {
    let vars = ["x1", "x2", "y1", "y2"];
    let chart = Chart::holonomic_base(ChartKind::Bundle, 2, 2, Arc::new(ZeroN { mv: 2, mh: 2 }));
    let metric = FieldMetric { g: fm(&[&["2", "0.5"], &["0.5", "1"]], &vars), h: fm(&[&["1", "0"], &["0", "3"]], &vars) };
    let dm = DMetric::new(chart, Arc::new(metric));
    let gp = dm.at(&[0.1, 0.2, 0.3, 0.4], 1).unwrap();
    let can = canonical_dconnection(&gp);
    assert!(curvature(&can, &gp, CurvatureMode::NoStructureTerms).max_abs() < 1e-15);
    assert!(torsion(&can, &gp).max_abs() < 1e-15);
    assert!(nonmetricity(&can, &gp).max_abs() < 1e-15);
}

#[test]
fn canonical_connection_is_metric_with_vanishing_pure_torsions() {
    for dm in [so3_metric(), holonomic_metric()] {
        let gp = dm.at(&PT, 1).unwrap();
        let can = canonical_dconnection(&gp);
        let q = nonmetricity(&can, &gp);
        assert!(q.max_abs() < 1e-13, "{:?}", q.residuals());
        let t = torsion(&can, &gp);
        assert!(max_abs(&t.hhh) < 1e-13 && max_abs(&t.vvv) < 1e-13);
        // N-curvature and the mixed blocks survive
        assert!(max_abs(&t.vhh) > 1e-3);
    }
}

fn max_abs(t: &Arr3) -> f64 {
    t.iter().flatten().flatten().fold(0.0_f64, |a, v| a.max(v.abs()))
}

#[test]
fn levi_civita_routes_agree_and_are_torsion_free_and_metric() {
    for dm in [so3_metric(), holonomic_metric()] {
        let gp = dm.at(&PT, 1).unwrap();
        let r1 = levi_civita(&gp);
        let r2 = levi_civita_from_canonical(&gp);
        assert!(max_diff_full(&r1, &r2) < 1e-13, "{}", max_diff_full(&r1, &r2));
        assert!(max_abs_t3(&full_torsion(&r1, &gp)) < 1e-13);
        assert!(max_abs_t3(&full_nonmetricity(&r1, &gp)) < 1e-13);
        // the distortion from the canonical connection is nonzero
        let can = canonical_dconnection(&gp).full();
        assert!(max_diff_full(&r1, &can) > 1e-3);
    }
}

#[test]
fn metrization_is_metric_and_idempotent() {
    let dm = so3_metric();
    let gp = dm.at(&PT, 1).unwrap();
    let b = berwald_dconnection(&gp);
    assert!(nonmetricity(&b, &gp).max_abs() > 1e-3);
    let m = metrize(&b, &gp);
    assert!(nonmetricity(&m, &gp).max_abs() < 1e-13);
    let mm = metrize(&m, &gp);
    assert!(mm.max_abs_diff(&m) < 1e-13);
}

fn y_tensor(gp: &GeomPoint, seed: f64) -> DConn {
    let z = gp.zero().truncate(gp.order);
    let v = |a: usize, b: usize, c: usize, k: usize| z.lift((seed * (1.0 + a as f64) + 0.7 * b as f64 - 0.3 * c as f64 + k as f64).sin());
    let (mh, mv) = (gp.mh(), gp.mv());
    DConn {
        mh,
        mv,
        lh: anholo::linalg::t3(mh, mh, mh, |a, b, c| v(a, b, c, 0)),
        lv: anholo::linalg::t3(mv, mv, mh, |a, b, c| v(a, b, c, 1)),
        kh: anholo::linalg::t3(mh, mh, mv, |a, b, c| v(a, b, c, 2)),
        kv: anholo::linalg::t3(mv, mv, mv, |a, b, c| v(a, b, c, 3)),
    }
}

#[test]
fn obata_projector_family_is_metric() {
    let dm = so3_metric();
    let gp = dm.at(&PT, 0).unwrap();
    for seed in [0.3, 1.7, -2.2] {
        let y = y_tensor(&gp, seed);
        let c = obata_family(&gp, &y, ObataVariant::Projector);
        assert!(nonmetricity(&c, &gp).max_abs() < 1e-13);
    }
}

#[test]
fn obata_mixed_sign_variant_breaks_metricity() {
    let dm = so3_metric();
    let gp = dm.at(&PT, 0).unwrap();
    let y = y_tensor(&gp, 0.3);
    let c = obata_family(&gp, &y, ObataVariant::Paper);
    let r = nonmetricity(&c, &gp).residuals();
    // the L^a_bc' block uses the metric projector, the other three do not
    assert!(r[2] < 1e-13);
    assert!(r[0] > 1e-3 && r[1] > 1e-3 && r[3] > 1e-3, "{r:?}");
}

#[test]
fn tau_terms_prescribe_pure_torsions() {
    let dm = so3_metric();
    let gp = dm.at(&PT, 0).unwrap();
    let anti = |n: usize, s: f64| -> Arr3 {
        (0..n)
            .map(|a| {
                (0..n).map(|b| (0..n).map(|c| if b == c { 0.0 } else { s * (a as f64 + 1.0) * (b as f64 - c as f64) }).collect()).collect()
            })
            .collect()
    };
    let (th, tv) = (anti(3, 0.2), anti(3, -0.1));
    let c = with_prescribed_torsion(&canonical_dconnection(&gp), &gp, &th, &tv).unwrap();
    let t = torsion(&c, &gp);
    for a in 0..3 {
        for b in 0..3 {
            for e in 0..3 {
                assert!((t.hhh[a][b][e] - th[a][b][e]).abs() < 1e-13);
                assert!((t.vvv[a][b][e] - tv[a][b][e]).abs() < 1e-13);
            }
        }
    }
    assert!(nonmetricity(&c, &gp).max_abs() < 1e-13);
    let mut bad = th.clone();
    bad[0][0][1] = 1.0;
    assert!(with_prescribed_torsion(&c, &gp, &bad, &tv).is_err());
}

#[test]
fn deformation_reaches_any_connection_from_its_torsion_and_nonmetricity() {
    for dm in [so3_metric(), holonomic_metric()] {
        let gp = dm.at(&PT, 0).unwrap();
        let target = berwald_dconnection(&gp).full();
        let t = vals(&full_torsion(&target, &gp));
        let q = vals(&full_nonmetricity(&target, &gp));
        for base in [levi_civita(&gp), canonical_dconnection(&gp).full()] {
            let d = deform_connection(&base, &gp, &t, &q).unwrap();
            assert!(max_diff_full(&d, &target) < 1e-12, "{}", max_diff_full(&d, &target));
        }
    }
}

fn vals(t: &anholo::linalg::T3) -> Arr3 {
    t.iter().map(|m| m.iter().map(|r| r.iter().map(|j| j.value()).collect()).collect()).collect()
}

#[test]
fn d_curvature_blocks_match_full_frame_curvature() {
    // without structure functions the block formulas are complete
    let dm = holonomic_metric();
    let gp = dm.at(&PT, 1).unwrap();
    let can = canonical_dconnection(&gp);
    let rf = full_curvature(&can.full(), &gp);
    let blocks = blocks_from_full(&rf, 3, 3);
    let rep = curvature(&can, &gp, CurvatureMode::NoStructureTerms);
    for (x, y) in [&rep.r_h, &rep.r_v, &rep.p_h, &rep.p_v, &rep.s_h, &rep.s_v].iter().zip(&blocks) {
        assert!(max_diff4(x, y) < 1e-12, "{}", max_diff4(x, y));
    }
    let ric = full_ricci(&rf);
    for a in 0..6 {
        for b in 0..6 {
            assert!((ric[a][b] - rep.ricci[a][b]).abs() < 1e-12);
        }
    }
    assert!(rep.antisymmetry_defect() < 1e-12);
}

#[test]
fn structure_functions_enter_only_the_horizontal_curvature_blocks() {
    let dm = so3_metric();
    let gp = dm.at(&PT, 1).unwrap();
    let can = canonical_dconnection(&gp);
    let blocks = blocks_from_full(&full_curvature(&can.full(), &gp), 3, 3);
    let partial = curvature(&can, &gp, CurvatureMode::NoStructureTerms);
    let complete = curvature(&can, &gp, CurvatureMode::Complete);
    let pc = [&complete.r_h, &complete.r_v, &complete.p_h, &complete.p_v, &complete.s_h, &complete.s_v];
    for (x, y) in pc.iter().zip(&blocks) {
        assert!(max_diff4(x, y) < 1e-12);
    }
    assert!(max_diff4(&partial.r_h, &blocks[0]) > 1e-3);
    assert!(max_diff4(&partial.r_v, &blocks[1]) > 1e-3);
    assert!(max_diff4(&partial.s_v, &blocks[5]) < 1e-12);
}

#[test]
fn einstein_tensor_trace() {
    let dm = so3_metric();
    let gp = dm.at(&PT, 1).unwrap();
    let rep = curvature(&canonical_dconnection(&gp), &gp, CurvatureMode::Complete);
    let gi = gp.full_inverse();
    let mut tr = 0.0;
    for a in 0..6 {
        for b in 0..6 {
            tr += gi[a][b].value() * rep.einstein[a][b];
        }
    }
    // trace of G_AB is (1 − dim/2) s
    assert!((tr + 2.0 * rep.scalar).abs() < 1e-12 * (1.0 + rep.scalar.abs()));
}

#[test]
fn offdiagonal_metric_round_trip() {
    let g = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
    let h = DMatrix::from_row_slice(2, 2, &[1.5, -0.2, -0.2, 0.8]);
    let n = DMatrix::from_row_slice(2, 2, &[0.4, -1.0, 2.0, 0.1]);
    let full = offdiag_assemble(&g, &h, &n);
    let (g2, h2, n2) = extract_n_from_metric(&full, 2).unwrap();
    assert!((g2 - &g).amax() < 1e-13 && (h2 - &h).amax() < 1e-13 && (n2 - &n).amax() < 1e-13);
    let (a, b, defect) = vielbein_transforms(&n);
    assert!(defect < 1e-15);
    // rows of B are the adapted frame vectors in coordinates
    let mut diag = DMatrix::zeros(4, 4);
    diag.view_mut((0, 0), (2, 2)).copy_from(&g);
    diag.view_mut((2, 2), (2, 2)).copy_from(&h);
    assert!((&b * &full * b.transpose() - &diag).amax() < 1e-13);
    assert!((&a * &diag * a.transpose() - &full).amax() < 1e-13);
    let mut bad = full.clone();
    bad[(0, 1)] += 1.0;
    assert!(extract_n_from_metric(&bad, 2).is_err());
}

#[test]
fn metric_validation() {
    let vars = ["x1", "y1"];
    let chart = Chart::holonomic_base(ChartKind::Bundle, 1, 1, Arc::new(ZeroN { mv: 1, mh: 1 }));
    let sign_change = DMetric::new(chart.clone(), Arc::new(FieldMetric { g: fm(&[&["1"]], &vars), h: fm(&[&["x1"]], &vars) }));
    let dom = anholo::numeric::DomainBox::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
    assert!(sign_change.diagnose(&dom, 64).is_err());
    let ok = DMetric::new(chart.clone(), Arc::new(FieldMetric { g: fm(&[&["1"]], &vars), h: fm(&[&["-2 - x1^2"]], &vars) }));
    let d = ok.diagnose(&dom, 64).unwrap();
    assert_eq!(d.h_signature, (0, 1, 0));
    let singular = DMetric::new(chart, Arc::new(FieldMetric { g: fm(&[&["1"]], &vars), h: fm(&[&["0"]], &vars) }));
    assert!(singular.at(&[0.0, 0.0], 0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn canonical_metricity_holds_at_random_points(x in prop::array::uniform6(-1.0f64..1.0)) {
        let gp = so3_metric().at(&x, 0).unwrap();
        let can = canonical_dconnection(&gp);
        prop_assert!(nonmetricity(&can, &gp).max_abs() < 1e-12);
        let lc = levi_civita(&gp);
        prop_assert!(max_diff_full(&lc, &levi_civita_from_canonical(&gp)) < 1e-12);
    }

    #[test]
    fn metrize_is_idempotent_for_random_connections(seed in -3.0f64..3.0) {
        let gp = so3_metric().at(&PT, 0).unwrap();
        let c = canonical_dconnection(&gp).add(&y_tensor(&gp, seed));
        let m = metrize(&c, &gp);
        prop_assert!(nonmetricity(&m, &gp).max_abs() < 1e-12);
        prop_assert!(metrize(&m, &gp).max_abs_diff(&m) < 1e-12);
    }
}
