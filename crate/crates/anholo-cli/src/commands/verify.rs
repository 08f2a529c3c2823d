use std::sync::Arc;

use anholo::calculus::{exterior_d, Form};
use anholo::expr::expr_field;
use anholo::gravity::ansatz_ricci;
use anholo::hamilton::dual_frames;
use anholo::jets::{coordinate_jets, Jet};
use anholo::Result;
use serde_json::{json, Map, Value};

use super::{condition, fold_max, metric_sites, sweep, ConnectionDiag};
use crate::report::{num, Report, Table};
use crate::scenario::{round_trip_failures, Scenario};

/// Points used by the heavier per-point checks (d², connections).
const HEAVY_POINTS: usize = 10;

pub fn run(sc: &Scenario, rep: &mut Report) -> Result<Option<Table>> {
    let tol = sc.file.tolerances.clone();
    let n = sc.n();
    let count = sc.file.samples.points;

    let bad = round_trip_failures(&sc.sites);
    rep.put("expressions", json!({"count": sc.sites.len(), "round_trip_failures": bad}));
    rep.check("expression_round_trip", bad.len() as f64, 0.0);

    let pts = sc.samples(count);
    let res = sweep(&pts, |p| sc.alg.structure_residual_norms(&p[..n]))?;
    let (r1, r2) = (fold_max(res.iter().map(|r| r.0)), fold_max(res.iter().map(|r| r.1)));
    rep.put("structure", json!({"points": pts.len(), "anchor_residual": num(r1), "jacobi_residual": num(r2)}));
    rep.check("structure.anchor", r1, tol.structure);
    rep.check("structure.jacobi", r2, tol.structure);

    let heavy: Vec<Vec<f64>> = pts.iter().take(HEAVY_POINTS).cloned().collect();
    let calc = calculus_checks(sc, &heavy)?;
    rep.put(
        "calculus",
        json!({
            "points": heavy.len(),
            "d_squared_function": num(calc[0]),
            "d_squared_one_form": num(calc[1]),
            "dual_d_squared": num(calc[2]),
            "dual_bracket_defect": num(calc[3]),
        }),
    );
    rep.check("calculus.d_squared_function", calc[0], tol.d_squared);
    rep.check("calculus.d_squared_one_form", calc[1], tol.d_squared);
    rep.check("calculus.dual_d_squared", calc[2], tol.d_squared);
    rep.check("calculus.dual_bracket_defect", calc[3], tol.d_squared);

    let mut regularity = Map::new();
    if let Some(l) = &sc.lagrangian {
        let conds = sweep(&pts, |p| condition("Lagrangian Hessian", &l.hessian(p)?, p))?;
        let worst = fold_max(conds);
        regularity.insert("lagrangian_condition".into(), num(worst));
        rep.check("regularity.lagrangian_condition", worst, tol.condition);
    }
    if let Some((f, checks)) = &sc.finsler {
        let conds = sweep(&pts, |p| condition("Finsler fundamental tensor", &f.lagrangian().hessian(p)?, p))?;
        let worst = fold_max(conds);
        regularity.insert("finsler_condition".into(), num(worst));
        regularity.insert("finsler_homogeneity".into(), num(checks.worst_homogeneity));
        regularity.insert("finsler_min_value".into(), num(checks.min_value));
        regularity.insert("finsler_min_eigenvalue".into(), num(checks.min_eigenvalue));
        rep.check("regularity.finsler_condition", worst, tol.condition);
        rep.check("homogeneity.finsler", checks.worst_homogeneity, tol.homogeneity);
    }
    if let Some(g) = &sc.gl {
        let lag = g.absolute_energy()?;
        let conds = sweep(&pts, |p| {
            g.check(p)?;
            condition("absolute energy Hessian", &lag.hessian(p)?, p)
        })?;
        let worst = fold_max(conds);
        regularity.insert("gl_energy_condition".into(), num(worst));
        rep.check("regularity.gl_energy_condition", worst, tol.condition);
    }
    if let Some(h) = &sc.hamiltonian {
        let conds = sweep(&pts, |p| condition("dual Hessian", &h.dual_hessian(p)?, p))?;
        let worst = fold_max(conds);
        regularity.insert("hamiltonian_condition".into(), num(worst));
        rep.check("regularity.hamiltonian_condition", worst, tol.condition);
    }
    if let Some(a) = &sc.ansatz {
        let apts = a.domain.halton(a.points, sc.file.seed as usize);
        sweep(&apts, |p| ansatz_ricci(&a.ansatz, p).map(|_| ()))?;
        regularity.insert("ansatz_points".into(), a.points.into());
    }
    rep.put("regularity", Value::Object(regularity));

    let mut conn = Map::new();
    let mut table = Table::new(
        ["site", "point", "pure_torsion_h", "pure_torsion_v", "metricity", "lc_routes", "lc_torsion", "lc_metricity"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
    );
    let sites = metric_sites(sc)?;
    rep.put("metric_sites", Value::Array(sites.iter().map(|s| Value::from(s.label)).collect()));
    for (k, site) in sites.iter().enumerate() {
        let diag = site.dm.diagnose(&site.domain, HEAVY_POINTS.min(count))?;
        let spts = site.points(HEAVY_POINTS.min(count), sc.file.seed);
        let diags = sweep(&spts, |p| ConnectionDiag::at(&site.dm, p))?;
        for (j, d) in diags.iter().enumerate() {
            let mut row = vec![k as f64, j as f64];
            row.extend(d.row());
            table.push(row);
        }
        let worst = ConnectionDiag::worst(&diags);
        let mut v = worst.to_value();
        v["points"] = spts.len().into();
        v["max_condition"] = num(diag.max_condition);
        v["g_signature"] = json!([diag.g_signature.0, diag.g_signature.1, diag.g_signature.2]);
        v["h_signature"] = json!([diag.h_signature.0, diag.h_signature.1, diag.h_signature.2]);
        conn.insert(site.label.to_string(), v);
        worst.checks(rep, &format!("connection.{}", site.label), sc);
        for w in diag.warnings {
            rep.note(format!("{}: {w}", site.label));
        }
    }
    rep.put("canonical_connection", Value::Object(conn));
    Ok(Some(table))
}

/// [(d^E)² f, (d^E)² ω, (d*)² f, dual bracket defect], maxima over the points.
fn calculus_checks(sc: &Scenario, pts: &[Vec<f64>]) -> Result<[f64; 4]> {
    let (n, m) = (sc.n(), sc.m());
    let alg = &sc.alg;
    let scalar_probe = |xj: &[Jet]| -> Jet {
        let mut acc = xj[0].scale(0.3).exp();
        for i in 0..n {
            let j = (i + 1) % n;
            acc = &acc + &(&xj[i].scale(0.7 + 0.1 * i as f64).sin() * &(&xj[j] * &xj[j]));
        }
        acc
    };
    let xp: Vec<String> = super::coord_names(sc, "p");
    let refs: Vec<&str> = xp.iter().map(|s| s.as_str()).collect();
    let dual_probe = expr_field(&format!("sin(x1)*p1 + x{n}*p{m}^2 + exp(0.3*p{m}) + x1*p1*p{m}"), &refs)?;
    let rows = sweep(pts, |p| {
        let x = &p[..n];
        let f = scalar_probe(&coordinate_jets(x, 4));
        let d1 = exterior_d(&alg.base_frame(x, 4)?, &Form::scalar(f, m));
        let d2 = exterior_d(&alg.base_frame(x, 3)?, &d1);
        let xj = coordinate_jets(x, 3);
        let comps: Vec<Jet> = (0..m)
            .map(|a| {
                let i = a % n;
                &(&xj[i] * &xj[(i + 1) % n]) + &xj[0].scale(1.0 + a as f64).cos()
            })
            .collect();
        let w1 = exterior_d(&alg.base_frame(x, 3)?, &Form::one_form(comps));
        let w2 = exterior_d(&alg.base_frame(x, 2)?, &w1);
        let dual = dual_frames(Arc::clone(alg), p, dual_probe.as_ref())?;
        Ok([d2.max_abs(), w2.max_abs(), dual.d_squared, dual.bracket_defect])
    })?;
    Ok([0, 1, 2, 3].map(|k| fold_max(rows.iter().map(|r| r[k]))))
}
