mod geom;
mod grav;
mod ham;
mod mech;
mod verify;

use anholo::geometry::{
    canonical_dconnection, full_nonmetricity, full_torsion, levi_civita, levi_civita_from_canonical, nonmetricity, torsion, DConnValues,
    DMetric,
};
use anholo::jets::Jet;
use anholo::linalg::{check_conditioning, max_abs_t3, max_diff_t3};
use anholo::numeric::DomainBox;
use anholo::{Error, Result};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::report::{num, vec3, Report, Table};
use crate::scenario::Scenario;
use crate::{Command, EXIT_NUMERICAL, EXIT_OK, EXIT_VALIDATION};

/// Report, optional table and exit code of one command.
pub struct Outcome {
    pub code: i32,
    pub report: Report,
    pub table: Option<Table>,
}

/// Runs a parsed command. Never panics on bad input: failures end up in the
/// report and the exit code.
pub fn execute(cmd: &Command) -> Outcome {
    let (name, op) = match cmd {
        Command::Verify { .. } => ("verify", None),
        Command::Mech { op, .. } => ("mech", Some(format!("{op:?}").to_lowercase())),
        Command::Geom { op, .. } => ("geom", Some(format!("{op:?}").to_lowercase())),
        Command::Ham { op, .. } => ("ham", Some(format!("{op:?}").to_lowercase())),
        Command::Grav { op, .. } => ("grav", Some(format!("{op:?}").to_lowercase())),
    };
    let mut report = Report::new(name, op.as_deref());
    let common = cmd.common();
    let result = Scenario::load(&common.scenario).and_then(|mut sc| {
        if let Some(s) = common.seed {
            sc.file.seed = s;
        }
        if let Some(k) = common.samples {
            if k == 0 {
                return Err(Error::Validation("--samples must be positive".into()));
            }
            sc.file.samples.points = k;
            if let Some(a) = sc.ansatz.as_mut() {
                a.points = k;
            }
        }
        report.scenario = Some(sc.name().to_string());
        report.seed = Some(sc.file.seed);
        match cmd {
            Command::Verify { .. } => verify::run(&sc, &mut report),
            Command::Mech { op, flow, .. } => mech::run(&sc, *op, *flow, &mut report),
            Command::Geom { op, metric, .. } => geom::run(&sc, *op, *metric, &mut report),
            Command::Ham { op, flow, .. } => ham::run(&sc, *op, *flow, &mut report),
            Command::Grav { op, .. } => grav::run(&sc, *op, &mut report),
        }
    });
    match result {
        Ok(table) => {
            let code = if report.passed() { EXIT_OK } else { EXIT_VALIDATION };
            Outcome { code, report, table }
        }
        Err(e) => {
            let code = if e.is_numerical() { EXIT_NUMERICAL } else { EXIT_VALIDATION };
            report.error = Some((error_kind(&e).to_string(), e.to_string()));
            Outcome { code, report, table: None }
        }
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Domain { .. } => "domain",
        Error::Parse { .. } => "parse",
        Error::Dimension(_) => "dimension",
        Error::Singular { .. } => "singular",
        Error::Regularity { .. } => "regularity",
        Error::Precondition(_) => "precondition",
        Error::Convergence { .. } => "convergence",
        Error::NonFinite(_) => "non_finite",
        Error::Validation(_) => "validation",
    }
}

/// Evaluates `f` at every point in parallel; results keep the input order and
/// the first failing point (in input order) decides the error.
pub(crate) fn sweep<T, F>(points: &[Vec<f64>], f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&[f64]) -> Result<T> + Sync,
{
    let out: Vec<Result<T>> = points.par_iter().map(|p| f(p)).collect();
    out.into_iter().collect()
}

pub(crate) fn fold_max(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0_f64, |a, b| if b.is_nan() || a.is_nan() { f64::NAN } else { a.max(b.abs()) })
}

pub(crate) fn missing(what: &str) -> Error {
    Error::Validation(format!("the scenario has no {what} block"))
}

pub(crate) fn connection_values(v: &DConnValues) -> Value {
    json!({"lh": vec3(&v.lh), "lv": vec3(&v.lv), "kh": vec3(&v.kh), "kv": vec3(&v.kv)})
}

/// Condition number of a plain matrix (errors when singular).
pub(crate) fn condition(what: &str, m: &[Vec<f64>], pt: &[f64]) -> Result<f64> {
    let k = m.len();
    let jm: Vec<Vec<Jet>> = m.iter().map(|r| r.iter().map(|&v| Jet::constant(k.max(1), 0, v)).collect()).collect();
    check_conditioning(what, &jm, pt)
}

/// Canonical d-connection and Levi-Civita diagnostics at one point.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct ConnectionDiag {
    pub torsion_hhh: f64,
    pub torsion_vvv: f64,
    pub metricity: f64,
    pub lc_routes: f64,
    pub lc_torsion: f64,
    pub lc_metricity: f64,
}

impl ConnectionDiag {
    pub fn at(dm: &DMetric, pt: &[f64]) -> Result<ConnectionDiag> {
        let gp = dm.at(pt, 1)?;
        let can = canonical_dconnection(&gp);
        let t = torsion(&can, &gp);
        let q = nonmetricity(&can, &gp);
        let lc1 = levi_civita(&gp);
        let lc2 = levi_civita_from_canonical(&gp);
        Ok(ConnectionDiag {
            torsion_hhh: fold_max(t.hhh.iter().flatten().flatten().copied()),
            torsion_vvv: fold_max(t.vvv.iter().flatten().flatten().copied()),
            metricity: q.max_abs(),
            lc_routes: max_diff_t3(&lc1, &lc2),
            lc_torsion: max_abs_t3(&full_torsion(&lc1, &gp)),
            lc_metricity: max_abs_t3(&full_nonmetricity(&lc1, &gp)),
        })
    }

    pub fn row(&self) -> [f64; 6] {
        [self.torsion_hhh, self.torsion_vvv, self.metricity, self.lc_routes, self.lc_torsion, self.lc_metricity]
    }

    pub fn worst(diags: &[ConnectionDiag]) -> ConnectionDiag {
        let col = |k: usize| fold_max(diags.iter().map(|d| d.row()[k]));
        ConnectionDiag {
            torsion_hhh: col(0),
            torsion_vvv: col(1),
            metricity: col(2),
            lc_routes: col(3),
            lc_torsion: col(4),
            lc_metricity: col(5),
        }
    }

    pub fn to_value(self) -> Value {
        json!({
            "pure_torsion_h": num(self.torsion_hhh),
            "pure_torsion_v": num(self.torsion_vvv),
            "metricity": num(self.metricity),
            "levi_civita_route_difference": num(self.lc_routes),
            "levi_civita_torsion": num(self.lc_torsion),
            "levi_civita_metricity": num(self.lc_metricity),
        })
    }

    /// Adds the pass/fail checks for the canonical-connection invariants.
    pub fn checks(&self, rep: &mut Report, label: &str, sc: &Scenario) {
        let tol = &sc.file.tolerances;
        rep.check(&format!("{label}.pure_torsion_h"), self.torsion_hhh, tol.pure_torsion);
        rep.check(&format!("{label}.pure_torsion_v"), self.torsion_vvv, tol.pure_torsion);
        rep.check(&format!("{label}.metricity"), self.metricity, tol.metricity);
        rep.check(&format!("{label}.levi_civita_routes"), self.lc_routes, tol.levi_civita);
        rep.check(&format!("{label}.levi_civita_torsion"), self.lc_torsion, tol.levi_civita);
    }
}

/// Appends y⁴ = 0 to (x¹, x², v) samples.
pub(crate) fn ansatz_point(p: &[f64]) -> Vec<f64> {
    let mut q = p.to_vec();
    q.push(0.0);
    q
}

pub(crate) fn coord_names(sc: &Scenario, fiber: &str) -> Vec<String> {
    let mut v = crate::scenario::names("x", sc.n());
    v.extend(crate::scenario::names(fiber, sc.m()));
    v
}

/// A d-metric of the scenario with the box its points are drawn from.
pub(crate) struct MetricSite {
    pub label: &'static str,
    pub dm: DMetric,
    pub domain: DomainBox,
}

impl MetricSite {
    pub fn points(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        self.domain.halton(count, seed as usize)
    }
}

/// The ansatz box over (x¹, x², v) extended by y⁴ = 0.
pub(crate) fn ansatz_box4(d: &DomainBox) -> DomainBox {
    DomainBox { lo: ansatz_point(&d.lo), hi: ansatz_point(&d.hi) }
}

/// Every d-metric the scenario defines, in the order `auto` prefers them.
pub(crate) fn metric_sites(sc: &Scenario) -> Result<Vec<MetricSite>> {
    let mut out = Vec::new();
    if let Some(d) = &sc.dmetric {
        out.push(MetricSite { label: "dmetric", dm: d.dmetric.clone(), domain: d.domain.clone() });
    }
    if let Some(a) = &sc.ansatz {
        out.push(MetricSite { label: "ansatz4d", dm: a.ansatz.dmetric(), domain: ansatz_box4(&a.domain) });
    }
    if let Some((kind, lag)) = sc.mechanics_lagrangian()? {
        let label = match kind {
            "lagrangian" => "sasaki_lagrangian",
            "finsler" => "sasaki_finsler",
            _ => "sasaki_gl_metric",
        };
        out.push(MetricSite { label, dm: lag.sasaki(), domain: sc.domain.clone() });
    }
    if let Some(h) = &sc.hamiltonian {
        out.push(MetricSite { label: "dual_hamiltonian", dm: h.dual_dmetric(), domain: sc.domain.clone() });
    }
    Ok(out)
}
