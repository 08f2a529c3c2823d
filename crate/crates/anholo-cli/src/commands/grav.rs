use anholo::gravity::{ansatz_ricci, crosscheck_generic, einstein_residual, extract_algebroid, solve_vacuum, Ansatz4D, SourceSpec};
use anholo::Result;
use serde_json::json;

use super::{fold_max, missing, sweep};
use crate::report::{num, vec1, vec2, vec3, Report, Table};
use crate::scenario::{AnsatzData, Scenario};
use crate::GravOp;

const XV: [&str; 3] = ["x1", "x2", "v"];

pub fn run(sc: &Scenario, op: GravOp, rep: &mut Report) -> Result<Option<Table>> {
    let a = sc.ansatz.as_ref().ok_or_else(|| missing("ansatz4d"))?;
    let tol = sc.file.tolerances.clone();
    let pts = a.domain.halton(a.points, sc.file.seed as usize);
    match op {
        GravOp::Ricci => {
            let centre: Vec<f64> = a.domain.lo.iter().zip(&a.domain.hi).map(|(l, h)| 0.5 * (l + h)).collect();
            let r = ansatz_ricci(&a.ansatz, &centre)?;
            rep.put("point", vec1(&centre));
            rep.put(
                "ricci",
                json!({
                    "r11": num(r.r11),
                    "r33": num(r.r33),
                    "r3": vec1(&r.r3),
                    "r4": vec1(&r.r4),
                    "alpha": vec1(&r.alpha),
                    "beta": num(r.beta),
                    "gamma": num(r.gamma),
                }),
            );
            Ok(Some(ricci_table(&a.ansatz, &pts)?))
        }
        GravOp::Check => {
            let (src, label) = match &a.sources {
                Some(s) => (s.clone(), "sources"),
                None => (SourceSpec::vacuum(), "vacuum"),
            };
            rep.put("equations", label);
            let rows = sweep(&pts, |p| einstein_residual(&a.ansatz, &src, p))?;
            let h = fold_max(rows.iter().map(|r| r.h_block));
            let g = fold_max(rows.iter().map(|r| r.g_block));
            let r3 = fold_max(rows.iter().flat_map(|r| r.r3));
            let r4 = fold_max(rows.iter().flat_map(|r| r.r4));
            rep.put("samples", json!({"points": pts.len(), "h_block": num(h), "g_block": num(g), "r3": num(r3), "r4": num(r4)}));
            rep.check("einstein.h_block", h, tol.einstein);
            rep.check("einstein.g_block", g, tol.einstein);
            rep.check("einstein.r3", r3, tol.einstein);
            rep.check("einstein.r4", r4, tol.einstein);
            let mut table = Table::new(names(&["h_block", "g_block", "r31", "r32", "r41", "r42"]));
            for (p, r) in pts.iter().zip(&rows) {
                let mut row = p.clone();
                row.extend([r.h_block, r.g_block, r.r3[0], r.r3[1], r.r4[0], r.r4[1]]);
                table.push(row);
            }
            Ok(Some(table))
        }
        GravOp::Solve => {
            let mut input = a.vacuum.clone().ok_or_else(|| missing("ansatz4d.vacuum"))?;
            input.samples = a.points;
            let sol = solve_vacuum(&input)?;
            rep.put(
                "solution",
                json!({
                    "branch": format!("{:?}", sol.branch).to_lowercase(),
                    "max_residual": num(sol.max_residual),
                    "required_upsilon1": num(sol.required_upsilon1),
                    "max_alpha": num(sol.max_alpha),
                }),
            );
            for n in &sol.notes {
                rep.note(n.clone());
            }
            rep.check("solve.residual", sol.max_residual, tol.einstein);
            Ok(Some(ricci_table(&sol.ansatz, &pts)?))
        }
        GravOp::Extract => extract(sc, a, rep),
        GravOp::Crosscheck => {
            let rows = sweep(&pts, |p| crosscheck_generic(&a.ansatz, p))?;
            let blocks: Vec<f64> = (0..5).map(|k| fold_max(rows.iter().map(|r| r.blocks[k]))).collect();
            let worst = fold_max(rows.iter().map(|r| r.max_deviation));
            rep.put(
                "samples",
                json!({
                    "points": pts.len(),
                    "r11": num(blocks[0]),
                    "r33": num(blocks[1]),
                    "r3": num(blocks[2]),
                    "r4": num(blocks[3]),
                    "vanishing": num(blocks[4]),
                    "max_deviation": num(worst),
                }),
            );
            if let Some(first) = rows.first() {
                rep.put("engine_ricci", vec2(&first.engine));
            }
            for (k, label) in ["r11", "r33", "r3", "r4", "vanishing"].iter().enumerate() {
                rep.check(&format!("crosscheck.{label}"), blocks[k], tol.crosscheck);
            }
            let mut table = Table::new(names(&["r11", "r33", "r3", "r4", "vanishing"]));
            for (p, r) in pts.iter().zip(&rows) {
                let mut row = p.clone();
                row.extend(r.blocks);
                table.push(row);
            }
            Ok(Some(table))
        }
    }
}

fn names(cols: &[&str]) -> Vec<String> {
    XV.iter().chain(cols).map(|s| s.to_string()).collect()
}

fn ricci_table(s: &Ansatz4D, pts: &[Vec<f64>]) -> Result<Table> {
    let rows = sweep(pts, |p| ansatz_ricci(s, p))?;
    let mut table = Table::new(names(&["r11", "r33", "r31", "r32", "r41", "r42", "alpha1", "alpha2", "beta", "gamma"]));
    for (p, r) in pts.iter().zip(&rows) {
        let mut row = p.clone();
        row.extend([r.r11, r.r33, r.r3[0], r.r3[1], r.r4[0], r.r4[1], r.alpha[0], r.alpha[1], r.beta, r.gamma]);
        table.push(row);
    }
    Ok(table)
}

fn extract(sc: &Scenario, a: &AnsatzData, rep: &mut Report) -> Result<Option<Table>> {
    let tol = sc.file.tolerances.clone();
    let spec = a.extraction.as_ref().ok_or_else(|| missing("ansatz4d.extraction"))?;
    let ex = extract_algebroid(&a.ansatz, spec)?;
    let (r1, r2) = ex.structure_residuals;
    rep.put(
        "extraction",
        json!({
            "rho_x_dependence": num(ex.rho_x_dependence),
            "rho_worst_point": vec1(&ex.rho_worst_point),
            "c_x_dependence": num(ex.c_x_dependence),
            "closure": num(ex.closure),
            "reassembly": num(ex.reassembly),
            "structure_residuals": {"anchor": num(r1), "jacobi": num(r2)},
        }),
    );
    rep.put(
        "gl_mapping",
        json!({"a": vec2(&ex.gl.a), "w": vec3(&ex.gl.w), "metric_defect": num(ex.gl.metric_defect), "max_w": num(ex.gl.max_w)}),
    );
    rep.check("extract.rho_x_only", ex.rho_x_dependence, tol.extraction);
    rep.check("extract.c_x_only", ex.c_x_dependence, tol.extraction);
    rep.check("extract.closure", ex.closure, tol.reassembly);
    rep.check("extract.reassembly", ex.reassembly, tol.reassembly);
    rep.check("extract.gl_metric", ex.gl.metric_defect, tol.reassembly);
    if r1.max(r2) > tol.structure {
        rep.note(format!("extracted algebroid structure residuals: anchor {r1:.3e}, jacobi {r2:.3e}"));
    }
    let n = ex.algebroid.n;
    let m = ex.algebroid.m;
    let xs = spec.domain.halton(spec.x_samples, sc.file.seed as usize);
    let mut header: Vec<String> = ["x1", "x2"].map(String::from).to_vec();
    header.extend((0..m).flat_map(|a| (0..n).map(move |i| format!("rho{}_{}", a + 1, i + 1))));
    let mut table = Table::new(header);
    let rows = sweep(&xs, |p| {
        let x = &p[..n];
        let cj = anholo::jets::coordinate_jets(x, 0);
        let rho = ex.algebroid.rho_jets(&cj)?;
        Ok(rho.iter().flatten().map(|j| j.value()).collect::<Vec<f64>>())
    })?;
    for (p, r) in xs.iter().zip(rows) {
        let mut row = p[..n].to_vec();
        row.extend(r);
        table.push(row);
    }
    Ok(Some(table))
}
