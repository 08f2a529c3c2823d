use anholo::hamilton::{bracket_jets, inverse_legendre, legendre_point, liouville_sympletic, HamiltonianField};
use anholo::jets::{coordinate_jets, Jet};
use anholo::mechanics::LagrangianField;
use anholo::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use super::fold_max;
use super::mech::{flow_times, trajectory_table};
use super::{connection_values, missing, sweep};
use crate::report::{num, vec1, vec2, vec3, Report, Table};
use crate::scenario::Scenario;
use crate::{FlowArgs, HamOp};

/// Random polynomial triples tested for antisymmetry, Leibniz and Jacobi.
const POLY_POINTS: usize = 10;
/// Lagrange and Hamilton trajectories are compared every this many steps.
const COMPARE_STRIDE: usize = 100;

pub fn run(sc: &Scenario, op: HamOp, flow: FlowArgs, rep: &mut Report) -> Result<Option<Table>> {
    let tol = sc.file.tolerances.clone();
    let lag = sc.mechanics_lagrangian()?;
    match op {
        HamOp::Legendre => {
            let (kind, lag) = lag.ok_or_else(|| missing("lagrangian, finsler or gl_metric"))?;
            rep.put("lagrangian_source", kind);
            let pts = sc.samples(sc.file.samples.points);
            let n = sc.n();
            let rows = sweep(&pts, |p| {
                let q = legendre_point(&lag, p)?;
                let u = inverse_legendre(&lag, &p[..n], &q[n..])?;
                let back = fold_max(u.iter().zip(&p[n..]).map(|(a, b)| a - b));
                let scale = 1.0 + fold_max(p[n..].iter().copied());
                let h_gap = match &sc.hamiltonian {
                    Some(h) => (h.h.eval(&q)? - lag.energy(p)?).abs(),
                    None => 0.0,
                };
                Ok((q, back / scale, h_gap))
            })?;
            let round = fold_max(rows.iter().map(|r| r.1));
            rep.put("samples", json!({"points": pts.len(), "round_trip": num(round)}));
            rep.check("legendre.round_trip", round, tol.legendre);
            if sc.hamiltonian.is_some() {
                let gap = fold_max(rows.iter().map(|r| r.2));
                rep.put("hamiltonian_vs_energy", num(gap));
                rep.check("legendre.hamiltonian_is_energy", gap, tol.legendre);
            }
            let (x0, u0) = sc.initial_xu();
            rep.put("point", vec1(&[x0.as_slice(), u0.as_slice()].concat()));
            rep.put("image", vec1(&legendre_point(&lag, &[x0, u0].concat())?));
            let mut header = super::coord_names(sc, "u");
            header.extend(crate::scenario::names("p", sc.m()));
            header.push("round_trip".into());
            let mut table = Table::new(header);
            for (p, r) in pts.iter().zip(&rows) {
                let mut row = p.clone();
                row.extend(&r.0[n..]);
                row.push(r.1);
                table.push(row);
            }
            Ok(Some(table))
        }
        HamOp::Flow => {
            let (t, dt) = flow_times(sc, flow)?;
            let lag = lag.map(|(_, l)| l);
            let (x0, u0) = sc.initial_xu();
            let p0 = match (sc.file.initial.as_ref().and_then(|i| i.p.clone()), &lag) {
                (Some(p), _) => p,
                (None, Some(l)) => l.momenta(&[x0.as_slice(), u0.as_slice()].concat())?,
                (None, None) => return Err(Error::Validation("no initial momentum: set initial.p or give a Lagrangian".into())),
            };
            let ham = hamiltonian(sc, lag.as_ref())?;
            rep.put("hamiltonian_source", if sc.hamiltonian.is_some() { "hamiltonian" } else { "legendre" });
            let tr = ham.hamilton_flow(&x0, &p0, t, dt, &sc.hamiltonian_invariants)?;
            let drift = tr.energy_drift();
            let inv = tr.invariant_drift();
            let mut traj = json!({
                "t": num(t),
                "dt": num(dt),
                "steps": tr.t.len() - 1,
                "initial_state": vec1(&[x0.as_slice(), p0.as_slice()].concat()),
                "final_state": vec1(&tr.final_state()),
                "energy_drift": num(drift),
                "invariant_drift": vec1(&inv),
            });
            rep.check("flow.energy_drift", drift, tol.drift);
            for (k, d) in inv.iter().enumerate() {
                rep.check(&format!("flow.inv{}_drift", k + 1), *d, tol.drift);
            }
            if let (Some(l), None) = (&lag, sc.file.initial.as_ref().and_then(|i| i.p.as_ref())) {
                let el = l.integrate_el(&x0, &u0, t, dt, &[])?;
                let steps = el.t.len().min(tr.t.len());
                let idx: Vec<Vec<f64>> =
                    (0..steps).filter(|i| i % COMPARE_STRIDE == 0 || *i == steps - 1).map(|i| vec![i as f64]).collect();
                let gaps = sweep(&idx, |i| {
                    let i = i[0] as usize;
                    let q = legendre_point(l, &[el.x[i].as_slice(), el.y[i].as_slice()].concat())?;
                    let h = [tr.x[i].as_slice(), tr.y[i].as_slice()].concat();
                    Ok(fold_max(q.iter().zip(&h).map(|(a, b)| a - b)))
                })?;
                let gap = fold_max(gaps);
                traj["legendre_of_lagrange_flow_gap"] = num(gap);
                rep.check("flow.matches_lagrange_flow", gap, tol.trajectory);
            }
            rep.put("trajectory", traj);
            Ok(Some(trajectory_table(&tr, sc, sc.file.samples.stride)))
        }
        HamOp::Poisson => poisson(sc, rep),
        HamOp::Pack => {
            let ham = hamiltonian(sc, lag.map(|(_, l)| l).as_ref())?;
            let pt = phase_point(sc)?;
            rep.put("point", vec1(&pt));
            let dn = ham.dual_canonical_n(&pt)?;
            rep.put("dual_n", json!({"n": vec2(&dn.n), "tau": num(dn.tau), "curvature": vec3(&dn.curvature)}));
            rep.check("pack.dual_n_tau", dn.tau, tol.metricity);
            let ds = ham.dual_symplectic(&pt)?;
            rep.put(
                "dual_symplectic",
                json!({
                    "literal_closure": num(ds.literal_closure),
                    "completed_closure": num(ds.completed_closure),
                    "transport_defect": num(ds.transport_defect),
                }),
            );
            rep.check("pack.dual_omega_closed", ds.completed_closure, tol.d_squared);
            rep.check("pack.dual_transport", ds.transport_defect, tol.d_squared);
            if ds.literal_closure > tol.d_squared {
                rep.note(format!(
                    "closure residual of the dual two-form built from the N-adapted frame alone: {:.3e} (the closure check uses the completed two-form)",
                    ds.literal_closure
                ));
            }
            let dp = ham.dual_pack(&pt)?;
            rep.put(
                "dual_pack",
                json!({
                    "f": vec2(&dp.f),
                    "f_square_defect": num(dp.f_square_defect),
                    "g": vec2(&dp.g),
                    "gdual": vec2(&dp.gdual),
                    "connection": connection_values(&dp.connection),
                    "metricity": num(dp.metricity),
                    "omega_parallel": num(dp.omega_parallel),
                    "f_parallel": num(dp.f_parallel),
                    "berwald": connection_values(&dp.berwald),
                    "berwald_nonmetricity": vec1(&dp.berwald_nonmetricity),
                }),
            );
            rep.check("pack.dual_f_squared", dp.f_square_defect, tol.almost_complex);
            rep.check("pack.dual_connection_metricity", dp.metricity, tol.metricity);
            rep.check("pack.dual_connection_omega_parallel", dp.omega_parallel, tol.metricity);
            rep.check("pack.dual_connection_f_parallel", dp.f_parallel, tol.metricity);
            let lv = liouville_sympletic(&sc.alg, &pt)?;
            rep.put(
                "liouville",
                json!({"theta": vec1(&lv.theta), "omega": vec2(&lv.omega), "exactness": num(lv.exactness), "closure": num(lv.closure)}),
            );
            rep.check("pack.liouville_exact", lv.exactness, tol.d_squared);
            rep.check("pack.liouville_closed", lv.closure, tol.d_squared);
            Ok(None)
        }
    }
}

fn hamiltonian(sc: &Scenario, lag: Option<&LagrangianField>) -> Result<HamiltonianField> {
    match (&sc.hamiltonian, lag) {
        (Some(h), _) => Ok(h.clone()),
        (None, Some(l)) => Ok(HamiltonianField::from_lagrangian(l)),
        (None, None) => Err(missing("hamiltonian or lagrangian")),
    }
}

/// (x, p) from `initial.p`, else the Legendre image of the initial (x, u).
fn phase_point(sc: &Scenario) -> Result<Vec<f64>> {
    let (x0, u0) = sc.initial_xu();
    if let Some(p) = sc.file.initial.as_ref().and_then(|i| i.p.clone()) {
        return Ok([x0, p].concat());
    }
    match sc.mechanics_lagrangian()? {
        Some((_, l)) => legendre_point(&l, &[x0, u0].concat()),
        // without a Lagrangian the fiber part of the box is read as momenta
        None => Ok([x0, u0].concat()),
    }
}

/// Coefficients of a quadratic polynomial in (x, p) centred at the box centre.
struct Quadratic {
    c0: f64,
    lin: Vec<f64>,
    quad: Vec<Vec<f64>>,
}

impl Quadratic {
    fn random(rng: &mut ChaCha8Rng, dim: usize) -> Quadratic {
        let mut r = || rng.gen_range(-1.0..1.0);
        let c0 = r();
        let lin = (0..dim).map(|_| r()).collect();
        let quad = (0..dim).map(|i| (0..dim).map(|j| if j >= i { r() } else { 0.0 }).collect()).collect();
        Quadratic { c0, lin, quad }
    }

    fn jet(&self, z: &[Jet]) -> Jet {
        let mut acc = z[0].lift(self.c0);
        for (i, zi) in z.iter().enumerate() {
            acc = &acc + &zi.scale(self.lin[i]);
            for (j, zj) in z.iter().enumerate().skip(i) {
                acc = &acc + &(zi * zj).scale(self.quad[i][j]);
            }
        }
        acc
    }
}

fn poisson(sc: &Scenario, rep: &mut Report) -> Result<Option<Table>> {
    let tol = sc.file.tolerances.clone();
    let (n, m) = (sc.n(), sc.m());
    let alg = &sc.alg;
    let pts = sc.samples(sc.file.samples.points);

    // coordinate brackets against the structure functions
    let coords = sweep(&pts, |pt| {
        let cj = coordinate_jets(pt, 1);
        let rho = alg.rho_jets(&cj[..n])?;
        let c = alg.c_jets(&cj[..n])?;
        let br = |i: usize, j: usize| bracket_jets(n, m, &rho, &c, &cj[n..], &cj[i], &cj[j]).value();
        let mut xx = 0.0_f64;
        let mut px = 0.0_f64;
        let mut pp = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                xx = xx.max(br(i, j).abs());
            }
        }
        for a in 0..m {
            for j in 0..n {
                px = px.max((br(n + a, j) - rho[a][j].value()).abs());
            }
            for b in 0..m {
                let want: f64 = (0..m).map(|e| c[e][a][b].value() * pt[n + e]).sum();
                pp = pp.max((br(n + a, n + b) - want).abs());
            }
        }
        Ok([xx, px, pp])
    })?;
    let worst: Vec<f64> = (0..3).map(|k| fold_max(coords.iter().map(|r| r[k]))).collect();
    rep.put(
        "coordinate_brackets",
        json!({"points": pts.len(), "x_x": num(worst[0]), "p_x_minus_anchor": num(worst[1]), "p_p_minus_structure": num(worst[2])}),
    );
    rep.check("poisson.x_x", worst[0], 0.0);
    rep.check("poisson.p_x_anchor", worst[1], 0.0);
    rep.check("poisson.p_p_structure", worst[2], 0.0);

    // seeded random quadratics
    let mut rng = ChaCha8Rng::seed_from_u64(sc.file.seed);
    let heavy: Vec<Vec<f64>> = pts.iter().take(POLY_POINTS).cloned().collect();
    let polys: Vec<[Quadratic; 3]> = heavy
        .iter()
        .map(|_| [Quadratic::random(&mut rng, n + m), Quadratic::random(&mut rng, n + m), Quadratic::random(&mut rng, n + m)])
        .collect();
    let tagged: Vec<Vec<f64>> = heavy.iter().enumerate().map(|(k, p)| [vec![k as f64], p.clone()].concat()).collect();
    let rows = sweep(&tagged, |row| {
        let k = row[0] as usize;
        let pt = &row[1..];
        let cj = coordinate_jets(pt, 3);
        let rho = alg.rho_jets(&cj[..n])?;
        let c = alg.c_jets(&cj[..n])?;
        let p = &cj[n..];
        let [f, g, h] = polys[k].each_ref().map(|q| q.jet(&cj));
        let br = |a: &Jet, b: &Jet| bracket_jets(n, m, &rho, &c, p, a, b);
        let anti = (br(&f, &g).value() + br(&g, &f).value()).abs();
        let leibniz = (br(&f, &(&g * &h)).value() - br(&f, &g).value() * h.value() - g.value() * br(&f, &h).value()).abs();
        let jacobi = (br(&f, &br(&g, &h)).value() + br(&g, &br(&h, &f)).value() + br(&h, &br(&f, &g)).value()).abs();
        Ok([anti, leibniz, jacobi])
    })?;
    let w: Vec<f64> = (0..3).map(|k| fold_max(rows.iter().map(|r| r[k]))).collect();
    rep.put(
        "random_polynomials",
        json!({"triples": rows.len(), "seed": sc.file.seed, "antisymmetry": num(w[0]), "leibniz": num(w[1]), "jacobi": num(w[2])}),
    );
    rep.check("poisson.antisymmetry", w[0], 0.0);
    rep.check("poisson.leibniz", w[1], tol.jacobi);
    rep.check("poisson.jacobi", w[2], tol.jacobi);

    let mut header = super::coord_names(sc, "p");
    header.extend(["x_x", "p_x_minus_anchor", "p_p_minus_structure"].map(String::from));
    let mut table = Table::new(header);
    for (p, r) in pts.iter().zip(&coords) {
        let mut row = p.clone();
        row.extend(r);
        table.push(row);
    }
    Ok(Some(table))
}
