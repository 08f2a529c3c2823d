use anholo::mechanics::{LagrangianField, Trajectory};
use anholo::nconnection::n_curvature;
use anholo::{Error, Result};
use serde_json::json;

use super::{condition, connection_values, coord_names, fold_max, missing, sweep};
use crate::report::{num, vec1, vec2, vec3, Report, Table};
use crate::scenario::Scenario;
use crate::{FlowArgs, MechOp};

pub fn run(sc: &Scenario, op: MechOp, flow: FlowArgs, rep: &mut Report) -> Result<Option<Table>> {
    let (kind, lag) = sc.mechanics_lagrangian()?.ok_or_else(|| missing("lagrangian, finsler or gl_metric"))?;
    rep.put("lagrangian_source", kind);
    let (x0, u0) = sc.initial_xu();
    let pt0 = [x0.as_slice(), u0.as_slice()].concat();
    rep.put("point", vec1(&pt0));
    let tol = sc.file.tolerances.clone();
    let names = coord_names(sc, "u");
    let m = sc.m();
    match op {
        MechOp::Hessian => {
            let g = lag.hessian(&pt0)?;
            rep.put("hessian", vec2(&g));
            rep.put("condition", num(condition("Hessian", &g, &pt0)?));
            let pts = sc.samples(sc.file.samples.points);
            let mut header = names.clone();
            header.extend((0..m).flat_map(|a| (0..m).map(move |b| format!("g{}{}", a + 1, b + 1))));
            header.push("condition".into());
            let mut table = Table::new(header);
            let rows = sweep(&pts, |p| {
                let g = lag.hessian(p)?;
                let c = condition("Hessian", &g, p)?;
                Ok((g, c))
            })?;
            for (p, (g, c)) in pts.iter().zip(&rows) {
                let mut row = p.clone();
                row.extend(g.iter().flatten());
                row.push(*c);
                table.push(row);
            }
            let worst = fold_max(rows.iter().map(|r| r.1));
            rep.put("samples", json!({"points": pts.len(), "max_condition": num(worst)}));
            rep.check("hessian.condition", worst, tol.condition);
            Ok(Some(table))
        }
        MechOp::Nconnection => {
            rep.put("semispray", vec1(&lag.semispray(&pt0)?));
            rep.put("n", vec2(&lag.canonical_n(&pt0)?));
            rep.put("n_curvature", vec3(&n_curvature(&lag.chart(), &pt0)?));
            let pts = sc.samples(sc.file.samples.points);
            let mut header = names.clone();
            header.extend((0..m).flat_map(|a| (0..m).map(move |b| format!("N{}_{}", a + 1, b + 1))));
            let mut table = Table::new(header);
            let rows = sweep(&pts, |p| lag.canonical_n(p))?;
            for (p, nn) in pts.iter().zip(&rows) {
                let mut row = p.clone();
                row.extend(nn.iter().flatten());
                table.push(row);
            }
            Ok(Some(table))
        }
        MechOp::Geodesic => {
            let (t, dt) = flow_times(sc, flow)?;
            let v = lag.vector_field(&pt0)?;
            rep.put("u_dot", vec1(&v[sc.n()..]));
            let tr = lag.integrate_el(&x0, &u0, t, dt, &sc.invariants)?;
            let drift = tr.energy_drift();
            let inv = tr.invariant_drift();
            rep.put(
                "trajectory",
                json!({
                    "t": num(t),
                    "dt": num(dt),
                    "steps": tr.t.len() - 1,
                    "final_state": vec1(&tr.final_state()),
                    "energy_drift": num(drift),
                    "invariant_drift": vec1(&inv),
                    "el_residual": tr.el_residual.map(num),
                }),
            );
            rep.check("geodesic.energy_drift", drift, tol.drift);
            for (k, d) in inv.iter().enumerate() {
                rep.check(&format!("geodesic.inv{}_drift", k + 1), *d, tol.drift);
            }
            Ok(Some(trajectory_table(&tr, sc, sc.file.samples.stride)))
        }
        MechOp::Pack => pack(sc, &lag, &pt0, rep),
    }
}

pub(crate) fn flow_times(sc: &Scenario, flow: FlowArgs) -> Result<(f64, f64)> {
    let t = flow.t.or(sc.file.integration.as_ref().map(|i| i.t));
    let dt = flow.dt.or(sc.file.integration.as_ref().map(|i| i.dt));
    match (t, dt) {
        (Some(t), Some(dt)) if t > 0.0 && dt > 0.0 && t.is_finite() && dt.is_finite() => Ok((t, dt)),
        (Some(_), Some(_)) => Err(Error::Validation("--t and --dt must be positive".into())),
        _ => Err(Error::Validation("integration time and step are missing: pass --t and --dt or set `integration`".into())),
    }
}

/// "t,x1..,<fiber>1..,energy,inv1..,energy_drift" every `stride` steps (and the last).
pub(crate) fn trajectory_table(tr: &Trajectory, sc: &Scenario, stride: usize) -> Table {
    let mut header = vec!["t".to_string()];
    header.extend(coord_names(sc, &tr.fiber_symbol.to_string()));
    header.push("energy".into());
    let k = tr.invariants.first().map(|v| v.len()).unwrap_or(0);
    header.extend((1..=k).map(|j| format!("inv{j}")));
    header.push("energy_drift".into());
    let mut table = Table::new(header);
    let last = tr.t.len() - 1;
    let e0 = tr.energy[0];
    for i in (0..tr.t.len()).filter(|i| i % stride == 0 || *i == last) {
        let mut row = vec![tr.t[i]];
        row.extend(&tr.x[i]);
        row.extend(&tr.y[i]);
        row.push(tr.energy[i]);
        row.extend(tr.invariants.get(i).cloned().unwrap_or_default());
        row.push((tr.energy[i] - e0).abs());
        table.push(row);
    }
    table
}

fn pack(sc: &Scenario, lag: &LagrangianField, pt0: &[f64], rep: &mut Report) -> Result<Option<Table>> {
    let tol = sc.file.tolerances.clone();
    let pc = lag.poincare_cartan(pt0)?;
    rep.put(
        "poincare_cartan",
        json!({
            "theta": vec1(&pc.theta),
            "omega": vec2(&pc.omega),
            "energy": num(pc.energy),
            "xi": vec1(&pc.xi),
            "exactness": num(pc.exactness),
            "closure": num(pc.closure),
            "contraction": num(pc.contraction),
            "sode": pc.sode,
        }),
    );
    rep.check("pack.omega_exact", pc.exactness, tol.d_squared);
    rep.check("pack.omega_closed", pc.closure, tol.d_squared);
    rep.check("pack.euler_lagrange_contraction", pc.contraction, tol.d_squared);
    rep.check("pack.second_order", if pc.sode { 0.0 } else { 1.0 }, 0.0);
    let ak = lag.almost_kahler(pt0)?;
    rep.put(
        "almost_kahler",
        json!({
            "f": vec2(&ak.f),
            "omega": vec2(&ak.omega),
            "metric": vec2(&ak.metric),
            "f_square_defect": num(ak.f_square_defect),
            "omega_antisymmetry": num(ak.omega_antisymmetry),
            "compatibility": num(ak.compatibility),
        }),
    );
    rep.check("pack.f_squared", ak.f_square_defect, tol.almost_complex);
    rep.check("pack.omega_antisymmetry", ak.omega_antisymmetry, tol.almost_complex);
    rep.check("pack.omega_is_g_f", ak.compatibility, tol.almost_complex);
    let lc = lag.lagrange_dconnection(pt0)?;
    rep.put(
        "lagrange_connection",
        json!({
            "connection": connection_values(&lc.connection),
            "block_deviation_from_canonical": vec1(&lc.block_deviation),
            "metricity": num(lc.metricity),
            "omega_parallel": num(lc.omega_parallel),
            "f_parallel": num(lc.f_parallel),
        }),
    );
    rep.check("pack.connection_metricity", lc.metricity, tol.metricity);
    rep.check("pack.connection_omega_parallel", lc.omega_parallel, tol.metricity);
    rep.check("pack.connection_f_parallel", lc.f_parallel, tol.metricity);
    if let Some((f, _)) = &sc.finsler {
        let fp = f.pack(pt0)?;
        rep.put(
            "finsler",
            json!({
                "g": vec2(&fp.g),
                "n": vec2(&fp.n),
                "berwald": connection_values(&fp.berwald),
                "berwald_nonmetricity": vec1(&fp.berwald_nonmetricity.residuals()),
                "berwald_partial_metricity": vec1(&[fp.berwald_partial_metricity.0, fp.berwald_partial_metricity.1]),
            }),
        );
        rep.check("pack.berwald_h_metricity", fp.berwald_partial_metricity.0, tol.metricity);
        rep.check("pack.berwald_v_metricity", fp.berwald_partial_metricity.1, tol.metricity);
    }
    if let Some(g) = &sc.gl {
        let gp = g.pack(pt0)?;
        rep.put(
            "gl_metric",
            json!({"epsilon": num(gp.epsilon), "hessian": vec2(&gp.hessian), "semispray": vec1(&gp.semispray), "n": vec2(&gp.n)}),
        );
    }
    Ok(None)
}
