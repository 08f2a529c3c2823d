use anholo::geometry::{
    berwald_dconnection, canonical_dconnection, curvature, metrize, nonmetricity, torsion, CurvatureMode, CurvatureReport, GeomPoint,
};
use anholo::{Error, Result};
use serde_json::json;

use super::{connection_values, fold_max, metric_sites, sweep, ConnectionDiag, MetricSite};
use crate::report::{num, vec1, vec2, vec3, Report, Table};
use crate::scenario::Scenario;
use crate::{GeomOp, MetricChoice};

pub fn run(sc: &Scenario, op: GeomOp, choice: MetricChoice, rep: &mut Report) -> Result<Option<Table>> {
    let site = select(sc, choice)?;
    rep.put("metric", site.label);
    let pt0 = base_point(sc, &site);
    rep.put("point", vec1(&pt0));
    let pts = site.points(sc.file.samples.points, sc.file.seed);
    let tol = sc.file.tolerances.clone();
    let dim = pt0.len();
    let coords: Vec<String> = (1..=dim).map(|i| format!("q{i}")).collect();
    match op {
        GeomOp::Connection => {
            let gp = site.dm.at(&pt0, 1)?;
            rep.put("canonical", connection_values(&canonical_dconnection(&gp).values()));
            let diags = sweep(&pts, |p| ConnectionDiag::at(&site.dm, p))?;
            let worst = ConnectionDiag::worst(&diags);
            let mut v = worst.to_value();
            v["points"] = pts.len().into();
            rep.put("samples", v);
            worst.checks(rep, "connection", sc);
            let mut header = coords.clone();
            header.extend(["pure_torsion_h", "pure_torsion_v", "metricity", "lc_routes", "lc_torsion", "lc_metricity"].map(String::from));
            let mut table = Table::new(header);
            for (p, d) in pts.iter().zip(&diags) {
                let mut row = p.clone();
                row.extend(d.row());
                table.push(row);
            }
            Ok(Some(table))
        }
        GeomOp::Torsion => {
            let gp = site.dm.at(&pt0, 1)?;
            let t = torsion(&canonical_dconnection(&gp), &gp);
            rep.put(
                "torsion",
                json!({"hhh": vec3(&t.hhh), "hhv": vec3(&t.hhv), "vhh": vec3(&t.vhh), "vvh": vec3(&t.vvh), "vvv": vec3(&t.vvv)}),
            );
            let rows = sweep(&pts, |p| {
                let gp = site.dm.at(p, 1)?;
                let t = torsion(&canonical_dconnection(&gp), &gp);
                Ok([&t.hhh, &t.hhv, &t.vhh, &t.vvh, &t.vvv].map(|b| fold_max(b.iter().flatten().flatten().copied())))
            })?;
            let worst: Vec<f64> = (0..5).map(|k| fold_max(rows.iter().map(|r| r[k]))).collect();
            rep.put(
                "samples",
                json!({"points": pts.len(), "hhh": num(worst[0]), "hhv": num(worst[1]), "vhh": num(worst[2]), "vvh": num(worst[3]), "vvv": num(worst[4])}),
            );
            rep.check("torsion.pure_h", worst[0], tol.pure_torsion);
            rep.check("torsion.pure_v", worst[4], tol.pure_torsion);
            let mut header = coords.clone();
            header.extend(["hhh", "hhv", "vhh", "vvh", "vvv"].map(String::from));
            let mut table = Table::new(header);
            for (p, r) in pts.iter().zip(&rows) {
                let mut row = p.clone();
                row.extend(r);
                table.push(row);
            }
            Ok(Some(table))
        }
        GeomOp::Curvature => {
            let gp = site.dm.at(&pt0, 1)?;
            let rc = curvature(&canonical_dconnection(&gp), &gp, CurvatureMode::Complete);
            rep.put(
                "curvature",
                json!({
                    "ricci": vec2(&rc.ricci),
                    "scalar": num(rc.scalar),
                    "einstein": vec2(&rc.einstein),
                    "block_max": vec1(&block_max(&rc)),
                    "sectional_h": sectional(&gp, &rc, false).map(num),
                    "sectional_v": sectional(&gp, &rc, true).map(num),
                    "antisymmetry_defect": num(rc.antisymmetry_defect()),
                    "ricci_asymmetry": num(rc.ricci_asymmetry()),
                }),
            );
            let rows = sweep(&pts, |p| {
                let gp = site.dm.at(p, 1)?;
                let rc = curvature(&canonical_dconnection(&gp), &gp, CurvatureMode::Complete);
                let mut r = vec![rc.scalar, sectional(&gp, &rc, false).unwrap_or(f64::NAN), sectional(&gp, &rc, true).unwrap_or(f64::NAN)];
                r.extend(block_max(&rc));
                r.push(rc.antisymmetry_defect());
                Ok(r)
            })?;
            let anti = fold_max(rows.iter().map(|r| r[9]));
            rep.put("samples", json!({"points": pts.len(), "antisymmetry_defect": num(anti)}));
            rep.check("curvature.antisymmetry", anti, tol.metricity);
            let mut header = coords.clone();
            header.extend(
                ["scalar", "sectional_h", "sectional_v", "r_h", "r_v", "p_h", "p_v", "s_h", "s_v", "antisymmetry"].map(String::from),
            );
            let mut table = Table::new(header);
            for (p, r) in pts.iter().zip(&rows) {
                let mut row = p.clone();
                row.extend(r);
                table.push(row);
            }
            Ok(Some(table))
        }
        GeomOp::Metrize => {
            let rows = sweep(&pts, |p| {
                let gp = site.dm.at(p, 0)?;
                let b = berwald_dconnection(&gp);
                let mb = metrize(&b, &gp);
                let mm = metrize(&mb, &gp);
                Ok([nonmetricity(&b, &gp).max_abs(), nonmetricity(&mb, &gp).max_abs(), mm.max_abs_diff(&mb)])
            })?;
            let gp = site.dm.at(&pt0, 0)?;
            let mb = metrize(&berwald_dconnection(&gp), &gp);
            rep.put("metrized_berwald", connection_values(&mb.values()));
            let worst: Vec<f64> = (0..3).map(|k| fold_max(rows.iter().map(|r| r[k]))).collect();
            rep.put(
                "samples",
                json!({"points": pts.len(), "berwald_nonmetricity": num(worst[0]), "metrized_nonmetricity": num(worst[1]), "idempotence": num(worst[2])}),
            );
            rep.check("metrize.metricity", worst[1], tol.metricity);
            rep.check("metrize.idempotence", worst[2], tol.metricity);
            let mut header = coords.clone();
            header.extend(["berwald_nonmetricity", "metrized_nonmetricity", "idempotence"].map(String::from));
            let mut table = Table::new(header);
            for (p, r) in pts.iter().zip(&rows) {
                let mut row = p.clone();
                row.extend(r);
                table.push(row);
            }
            Ok(Some(table))
        }
    }
}

fn select(sc: &Scenario, choice: MetricChoice) -> Result<MetricSite> {
    let sites = metric_sites(sc)?;
    let want: &[&str] = match choice {
        MetricChoice::Auto => &["dmetric", "ansatz4d", "sasaki_lagrangian", "sasaki_finsler", "sasaki_gl_metric", "dual_hamiltonian"],
        MetricChoice::Dmetric => &["dmetric"],
        MetricChoice::Ansatz => &["ansatz4d"],
        MetricChoice::Sasaki => &["sasaki_lagrangian", "sasaki_finsler", "sasaki_gl_metric"],
        MetricChoice::Dual => &["dual_hamiltonian"],
    };
    sites
        .into_iter()
        .find(|s| want.contains(&s.label))
        .ok_or_else(|| Error::Validation(format!("the scenario defines no d-metric for --metric {choice:?}").to_lowercase()))
}

/// The scenario's initial point when it lives on the metric's chart, else the box centre.
fn base_point(sc: &Scenario, site: &MetricSite) -> Vec<f64> {
    let (x, u) = sc.initial_xu();
    let init = [x, u].concat();
    let inside =
        init.len() == site.domain.dim() && init.iter().zip(site.domain.lo.iter().zip(&site.domain.hi)).all(|(v, (a, b))| a <= v && v <= b);
    if inside {
        init
    } else {
        site.domain.lo.iter().zip(&site.domain.hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }
}

fn block_max(rc: &CurvatureReport) -> [f64; 6] {
    [&rc.r_h, &rc.r_v, &rc.p_h, &rc.p_v, &rc.s_h, &rc.s_v].map(|t| fold_max(t.iter().flatten().flatten().flatten().copied()))
}

/// Sectional curvature of a 2-dimensional block: R_1212 / det, with
/// R_1212 = m_1e R^e_212 for the h (R-block) or v (S-block) metric.
fn sectional(gp: &GeomPoint, rc: &CurvatureReport, vertical: bool) -> Option<f64> {
    let (metric, t) = if vertical { (&gp.h, &rc.s_v) } else { (&gp.g, &rc.r_h) };
    if metric.len() != 2 {
        return None;
    }
    let m = |a: usize, b: usize| metric[a][b].value();
    let num: f64 = (0..2).map(|a| m(0, a) * t[a][1][1][0]).sum();
    Some(num / (m(0, 0) * m(1, 1) - m(0, 1) * m(0, 1)))
}
