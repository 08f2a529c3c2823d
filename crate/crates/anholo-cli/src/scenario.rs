//! Scenario files: JSON documents describing an algebroid, the structures
//! living on it and the sampling and tolerance settings of a run.

use std::path::Path;
use std::sync::Arc;

use anholo::algebroid::AlgebroidSpec;
use anholo::expr::{expr_field, parse_expression};
use anholo::field::{constant, ScalarField};
use anholo::geometry::{DMetric, FieldMetric};
use anholo::gravity::{Ansatz4D, ExtractionSpec, SourceSpec, VacuumInput, QUADRATURE_TOL};
use anholo::hamilton::HamiltonianField;
use anholo::mechanics::{FinslerChecks, FinslerField, GLMetricField, LagrangianField};
use anholo::nconnection::{Chart, ChartKind, FieldN};
use anholo::numeric::DomainBox;
use anholo::{Error, Result};
use serde::{Deserialize, Serialize};

pub const SCENARIO_SCHEMA_VERSION: u32 = 1;

/// Scenarios shipped with the tool, loadable by name.
pub const BUNDLED: [(&str, &str); 7] = [
    ("trivial", include_str!("../scenarios/trivial.json")),
    ("so3_rigid_body", include_str!("../scenarios/so3_rigid_body.json")),
    ("randers_finsler", include_str!("../scenarios/randers_finsler.json")),
    ("synge_medium", include_str!("../scenarios/synge_medium.json")),
    ("quadratic_geodesic", include_str!("../scenarios/quadratic_geodesic.json")),
    ("vacuum_v2", include_str!("../scenarios/vacuum_v2.json")),
    ("exp_g2_curved", include_str!("../scenarios/exp_g2_curved.json")),
];

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema_version: u32,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub algebroid: AlgebroidBlock,
    pub structure: StructureBlock,
    pub domain: BoxBlock,
    #[serde(default)]
    pub samples: Samples,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<Initial>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integration: Option<Integration>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebroidBlock {
    pub n: usize,
    pub m: usize,
    /// rho[a][i] = ρ_a^i as expressions in x
    pub rho: Vec<Vec<String>>,
    /// c[d][a][b] = C^d_ab; omitted means C = 0
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<Vec<Vec<String>>>>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lagrangian: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finsler: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gl_metric: Option<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hamiltonian: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dmetric: Option<DMetricBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ansatz4d: Option<AnsatzBlock>,
    /// conserved quantities in (x, u)
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub invariants: Vec<String>,
    /// conserved quantities in (x, p)
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub hamiltonian_invariants: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChartChoice {
    Prolongation,
    Bundle,
    Manifold,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DMetricBlock {
    pub chart: ChartChoice,
    /// base dimension; ignored on the prolongation chart
    #[serde(default)]
    pub n: Option<usize>,
    /// fiber dimension; ignored on the prolongation chart
    #[serde(default)]
    pub m: Option<usize>,
    pub g: Vec<Vec<String>>,
    pub h: Vec<Vec<String>>,
    /// nconn[a][b] = N^a_b; omitted means N = 0
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nconn: Option<Vec<Vec<String>>>,
    /// sampling box over (x, u) when it differs from the scenario domain
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<BoxBlock>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnsatzBlock {
    /// g1, g2 in (x1, x2)
    pub g: [String; 2],
    /// h3, h4 in (x1, x2, v)
    pub h: [String; 2],
    pub w: [String; 2],
    #[serde(rename = "n")]
    pub n_coef: [String; 2],
    /// box over (x1, x2, v)
    pub domain: BoxBlock,
    #[serde(default = "default_ansatz_points")]
    pub points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sources: Option<SourcesBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vacuum: Option<VacuumBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extraction: Option<ExtractionBlock>,
}

fn default_ansatz_points() -> usize {
    50
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourcesBlock {
    /// Υ1(x1, x2, v)
    pub upsilon1: String,
    /// Υ3(x1, x2)
    pub upsilon3: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VacuumBlock {
    pub h3: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h4: Option<String>,
    pub c1: String,
    pub c2: String,
    pub a: [String; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<[String; 2]>,
    #[serde(default)]
    pub v0: f64,
    #[serde(default = "one")]
    pub vn0: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtractionBlock {
    /// g'_1, g'_2 in (x1, x2, v)
    pub gprime: [String; 2],
    /// frame factors e_[1], e_[2] in (x1, x2)
    pub e: [String; 2],
    #[serde(default = "default_x_samples")]
    pub x_samples: usize,
    #[serde(default = "default_v_grid")]
    pub v_grid: usize,
    #[serde(default = "one")]
    pub v_ref: f64,
}

fn default_x_samples() -> usize {
    12
}

fn default_v_grid() -> usize {
    9
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxBlock {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxBlock {
    fn build(&self, dim: usize, what: &str) -> Result<DomainBox> {
        if self.lo.len() != dim {
            return Err(Error::Dimension(format!("{what} must have dimension {dim}, got {}", self.lo.len())));
        }
        DomainBox::new(self.lo.clone(), self.hi.clone())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Samples {
    /// quasi-random points for sampled checks
    #[serde(default = "default_points")]
    pub points: usize,
    /// trajectory rows written to CSV: every `stride`-th step
    #[serde(default = "default_stride")]
    pub stride: usize,
}

fn default_points() -> usize {
    100
}

fn default_stride() -> usize {
    1
}

impl Default for Samples {
    fn default() -> Self {
        Samples { points: default_points(), stride: default_stride() }
    }
}

/// Pass thresholds. Defaults follow the module contracts.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub structure: f64,
    pub d_squared: f64,
    pub homogeneity: f64,
    pub condition: f64,
    pub drift: f64,
    pub pure_torsion: f64,
    pub metricity: f64,
    pub levi_civita: f64,
    pub almost_complex: f64,
    pub legendre: f64,
    pub trajectory: f64,
    pub jacobi: f64,
    pub crosscheck: f64,
    pub einstein: f64,
    pub extraction: f64,
    pub reassembly: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            structure: 1e-12,
            d_squared: 1e-9,
            homogeneity: 1e-10,
            condition: 1e12,
            drift: 1e-8,
            pure_torsion: 1e-12,
            metricity: 1e-9,
            levi_civita: 1e-9,
            almost_complex: 1e-12,
            legendre: 1e-10,
            trajectory: 1e-6,
            jacobi: 1e-8,
            crosscheck: 1e-8,
            einstein: 1e-8,
            extraction: 1e-8,
            reassembly: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Initial {
    pub x: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Integration {
    pub t: f64,
    pub dt: f64,
}

/// Where an expression came from and which variables it may use.
#[derive(Debug, Clone)]
pub struct ExprSite {
    pub location: String,
    pub text: String,
    pub vars: Vec<String>,
}

pub struct AnsatzData {
    pub ansatz: Ansatz4D,
    pub domain: DomainBox,
    pub points: usize,
    pub sources: Option<SourceSpec>,
    pub vacuum: Option<VacuumInput>,
    pub extraction: Option<ExtractionSpec>,
}

pub struct DMetricData {
    pub dmetric: DMetric,
    pub domain: DomainBox,
}

/// A validated scenario with all fields built.
pub struct Scenario {
    pub file: ScenarioFile,
    pub alg: Arc<AlgebroidSpec>,
    pub domain: DomainBox,
    pub lagrangian: Option<LagrangianField>,
    pub finsler: Option<(FinslerField, FinslerChecks)>,
    pub gl: Option<GLMetricField>,
    pub hamiltonian: Option<HamiltonianField>,
    pub dmetric: Option<DMetricData>,
    pub ansatz: Option<AnsatzData>,
    pub invariants: Vec<ScalarField>,
    pub hamiltonian_invariants: Vec<ScalarField>,
    pub sites: Vec<ExprSite>,
}

pub fn names(prefix: &str, k: usize) -> Vec<String> {
    (1..=k).map(|i| format!("{prefix}{i}")).collect()
}

const X2: [&str; 2] = ["x1", "x2"];
const XV: [&str; 3] = ["x1", "x2", "v"];

struct Builder {
    sites: Vec<ExprSite>,
}

impl Builder {
    fn field<S: AsRef<str>>(&mut self, location: &str, text: &str, vars: &[S]) -> Result<ScalarField> {
        let vars: Vec<String> = vars.iter().map(|s| s.as_ref().to_string()).collect();
        let refs: Vec<&str> = vars.iter().map(|s| s.as_str()).collect();
        let f = expr_field(text, &refs).map_err(|e| match e {
            Error::Parse { offset, msg } => Error::Parse { offset, msg: format!("{msg} in {location}: `{text}`") },
            other => other,
        })?;
        self.sites.push(ExprSite { location: location.to_string(), text: text.to_string(), vars });
        Ok(f)
    }

    fn matrix<S: AsRef<str>>(
        &mut self,
        location: &str,
        rows: &[Vec<String>],
        r: usize,
        c: usize,
        vars: &[S],
    ) -> Result<Vec<Vec<ScalarField>>> {
        if rows.len() != r || rows.iter().any(|row| row.len() != c) {
            return Err(Error::Dimension(format!("{location} must be {r}×{c}")));
        }
        rows.iter()
            .enumerate()
            .map(|(i, row)| row.iter().enumerate().map(|(j, t)| self.field(&format!("{location}[{i}][{j}]"), t, vars)).collect())
            .collect()
    }

    fn pair<S: AsRef<str>>(&mut self, location: &str, p: &[String; 2], vars: &[S]) -> Result<[ScalarField; 2]> {
        Ok([self.field(&format!("{location}[0]"), &p[0], vars)?, self.field(&format!("{location}[1]"), &p[1], vars)?])
    }
}

impl Scenario {
    /// Loads a scenario from a path, or by name from the bundled library.
    pub fn load(source: &str) -> Result<Scenario> {
        let path = Path::new(source);
        let text = if path.exists() {
            std::fs::read_to_string(path).map_err(|e| Error::Validation(format!("cannot read {source}: {e}")))?
        } else {
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or(source);
            match BUNDLED.iter().find(|(name, _)| *name == stem || *name == source) {
                Some((_, body)) => body.to_string(),
                None => return Err(Error::Validation(format!("no scenario file or bundled scenario named `{source}`"))),
            }
        };
        Scenario::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Scenario> {
        let file: ScenarioFile =
            serde_json::from_str(text).map_err(|e| Error::Validation(format!("scenario does not match the schema: {e}")))?;
        Scenario::build(file)
    }

    pub fn build(file: ScenarioFile) -> Result<Scenario> {
        if file.schema_version != SCENARIO_SCHEMA_VERSION {
            return Err(Error::Validation(format!(
                "unsupported scenario schema version {} (expected {SCENARIO_SCHEMA_VERSION})",
                file.schema_version
            )));
        }
        let (n, m) = (file.algebroid.n, file.algebroid.m);
        if n == 0 || m == 0 {
            return Err(Error::Validation("algebroid dimensions must be positive".into()));
        }
        let mut b = Builder { sites: Vec::new() };
        let xs = names("x", n);
        let xu: Vec<String> = xs.iter().cloned().chain(names("u", m)).collect();
        let xp: Vec<String> = xs.iter().cloned().chain(names("p", m)).collect();

        let rho = b.matrix("algebroid.rho", &file.algebroid.rho, m, n, &xs)?;
        let c = match &file.algebroid.c {
            Some(c) => {
                if c.len() != m {
                    return Err(Error::Dimension(format!("algebroid.c must be {m}×{m}×{m}")));
                }
                c.iter().enumerate().map(|(d, s)| b.matrix(&format!("algebroid.c[{d}]"), s, m, m, &xs)).collect::<Result<Vec<_>>>()?
            }
            None => (0..m).map(|_| (0..m).map(|_| (0..m).map(|_| constant(n, 0.0)).collect()).collect()).collect(),
        };
        let domain = file.domain.build(n + m, "domain")?;
        let alg = Arc::new(AlgebroidSpec::new(n, m, rho, c)?.with_domain(domain.clone()));

        let st = file.structure.clone();
        let lagrangian = match &st.lagrangian {
            Some(t) => Some(LagrangianField::new(alg.clone(), b.field("structure.lagrangian", t, &xu)?)?.with_domain(domain.clone())),
            None => None,
        };
        let finsler = match &st.finsler {
            Some(t) => {
                let f = b.field("structure.finsler", t, &xu)?;
                Some(FinslerField::new(alg.clone(), f, domain.clone())?)
            }
            None => None,
        };
        let gl = match &st.gl_metric {
            Some(g) => Some(GLMetricField::new(alg.clone(), b.matrix("structure.gl_metric", g, m, m, &xu)?)?),
            None => None,
        };
        let hamiltonian = match &st.hamiltonian {
            Some(t) => Some(HamiltonianField::new(alg.clone(), b.field("structure.hamiltonian", t, &xp)?)?),
            None => None,
        };
        let dmetric = match &st.dmetric {
            Some(d) => Some(build_dmetric(&mut b, d, &alg, &domain)?),
            None => None,
        };
        let ansatz = match &st.ansatz4d {
            Some(a) => Some(build_ansatz(&mut b, a, &file.tolerances)?),
            None => None,
        };
        let invariants = st
            .invariants
            .iter()
            .enumerate()
            .map(|(k, t)| b.field(&format!("structure.invariants[{k}]"), t, &xu))
            .collect::<Result<Vec<_>>>()?;
        let hamiltonian_invariants = st
            .hamiltonian_invariants
            .iter()
            .enumerate()
            .map(|(k, t)| b.field(&format!("structure.hamiltonian_invariants[{k}]"), t, &xp))
            .collect::<Result<Vec<_>>>()?;

        if let Some(init) = &file.initial {
            if init.x.len() != n {
                return Err(Error::Dimension(format!("initial.x must have length {n}")));
            }
            for (what, v) in [("u", &init.u), ("p", &init.p)] {
                if let Some(v) = v {
                    if v.len() != m {
                        return Err(Error::Dimension(format!("initial.{what} must have length {m}")));
                    }
                }
            }
        }
        if let Some(it) = &file.integration {
            if !(it.t > 0.0 && it.dt > 0.0 && it.t.is_finite() && it.dt.is_finite()) {
                return Err(Error::Validation("integration.t and integration.dt must be positive".into()));
            }
        }
        if file.samples.points == 0 || file.samples.stride == 0 {
            return Err(Error::Validation("samples.points and samples.stride must be positive".into()));
        }

        Ok(Scenario {
            file,
            alg,
            domain,
            lagrangian,
            finsler,
            gl,
            hamiltonian,
            dmetric,
            ansatz,
            invariants,
            hamiltonian_invariants,
            sites: b.sites,
        })
    }

    pub fn name(&self) -> &str {
        &self.file.name
    }

    pub fn n(&self) -> usize {
        self.alg.n
    }

    pub fn m(&self) -> usize {
        self.alg.m
    }

    /// The Lagrangian used by mechanics commands: an explicit Lagrangian,
    /// else f² of a Finsler function, else the absolute energy of a GL metric.
    pub fn mechanics_lagrangian(&self) -> Result<Option<(&'static str, LagrangianField)>> {
        if let Some(l) = &self.lagrangian {
            return Ok(Some(("lagrangian", l.clone())));
        }
        if let Some((f, _)) = &self.finsler {
            return Ok(Some(("finsler", f.lagrangian().clone())));
        }
        if let Some(g) = &self.gl {
            return Ok(Some(("gl_metric", g.absolute_energy()?.with_domain(self.domain.clone()))));
        }
        Ok(None)
    }

    /// Initial (x, u) state: the scenario's, else the domain centre.
    pub fn initial_xu(&self) -> (Vec<f64>, Vec<f64>) {
        let centre = self.centre();
        let (n, m) = (self.n(), self.m());
        match &self.file.initial {
            Some(i) => (i.x.clone(), i.u.clone().unwrap_or_else(|| centre[n..n + m].to_vec())),
            None => (centre[..n].to_vec(), centre[n..].to_vec()),
        }
    }

    pub fn centre(&self) -> Vec<f64> {
        self.domain.lo.iter().zip(&self.domain.hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    /// Quasi-random sample points of the (x, u) domain; the seed shifts the sequence.
    pub fn samples(&self, count: usize) -> Vec<Vec<f64>> {
        self.domain.halton(count, self.file.seed as usize)
    }
}

fn build_dmetric(b: &mut Builder, d: &DMetricBlock, alg: &Arc<AlgebroidSpec>, domain: &DomainBox) -> Result<DMetricData> {
    let (n, mh, mv) = match d.chart {
        ChartChoice::Prolongation => (alg.n, alg.m, alg.m),
        _ => {
            let n = d.n.ok_or_else(|| Error::Validation("dmetric.n is required on bundle and manifold charts".into()))?;
            let m = d.m.ok_or_else(|| Error::Validation("dmetric.m is required on bundle and manifold charts".into()))?;
            (n, n, m)
        }
    };
    let vars: Vec<String> = names("x", n).into_iter().chain(names("u", mv)).collect();
    let g = b.matrix("structure.dmetric.g", &d.g, mh, mh, &vars)?;
    let h = b.matrix("structure.dmetric.h", &d.h, mv, mv, &vars)?;
    let fields = match &d.nconn {
        Some(nc) => b.matrix("structure.dmetric.nconn", nc, mv, mh, &vars)?,
        None => (0..mv).map(|_| (0..mh).map(|_| constant(n + mv, 0.0)).collect()).collect(),
    };
    let ncoef = Arc::new(FieldN { fields });
    let chart = match d.chart {
        ChartChoice::Prolongation => Chart::prolongation(alg.clone(), ncoef),
        ChartChoice::Bundle => Chart::holonomic_base(ChartKind::Bundle, n, mv, ncoef),
        ChartChoice::Manifold => Chart::holonomic_base(ChartKind::Manifold, n, mv, ncoef),
    };
    let dom = match &d.domain {
        Some(bx) => bx.build(n + mv, "structure.dmetric.domain")?,
        None if n + mv == domain.dim() => domain.clone(),
        None => {
            return Err(Error::Validation(
                "structure.dmetric.domain is required when the chart dimension differs from the scenario domain".into(),
            ))
        }
    };
    Ok(DMetricData { dmetric: DMetric::new(chart, Arc::new(FieldMetric { g, h })), domain: dom })
}

fn build_ansatz(b: &mut Builder, a: &AnsatzBlock, tol: &Tolerances) -> Result<AnsatzData> {
    let loc = "structure.ansatz4d";
    let g = b.pair(&format!("{loc}.g"), &a.g, &X2)?;
    let h = b.pair(&format!("{loc}.h"), &a.h, &XV)?;
    let w = b.pair(&format!("{loc}.w"), &a.w, &XV)?;
    let nn = b.pair(&format!("{loc}.n"), &a.n_coef, &XV)?;
    let [g1, g2] = g;
    let [h3, h4] = h;
    let ansatz = Ansatz4D::new(g1.clone(), g2.clone(), h3, h4, w, nn)?;
    let domain = a.domain.build(3, "structure.ansatz4d.domain")?;
    if a.points == 0 {
        return Err(Error::Validation("structure.ansatz4d.points must be positive".into()));
    }
    let sources = match &a.sources {
        Some(s) => Some(SourceSpec {
            upsilon1: b.field(&format!("{loc}.sources.upsilon1"), &s.upsilon1, &XV)?,
            upsilon3: b.field(&format!("{loc}.sources.upsilon3"), &s.upsilon3, &X2)?,
        }),
        None => None,
    };
    let vacuum = match &a.vacuum {
        Some(v) => Some(VacuumInput {
            g1,
            g2,
            h3: b.field(&format!("{loc}.vacuum.h3"), &v.h3, &XV)?,
            h4: match &v.h4 {
                Some(t) => Some(b.field(&format!("{loc}.vacuum.h4"), t, &XV)?),
                None => None,
            },
            c1: b.field(&format!("{loc}.vacuum.c1"), &v.c1, &X2)?,
            c2: b.field(&format!("{loc}.vacuum.c2"), &v.c2, &X2)?,
            a: b.pair(&format!("{loc}.vacuum.a"), &v.a, &X2)?,
            b: match &v.b {
                Some(p) => Some(b.pair(&format!("{loc}.vacuum.b"), p, &X2)?),
                None => None,
            },
            v0: v.v0,
            vn0: v.vn0,
            tol: QUADRATURE_TOL,
            domain: domain.clone(),
            samples: a.points,
        }),
        None => None,
    };
    let extraction = match &a.extraction {
        Some(e) => Some(ExtractionSpec {
            gprime: b.pair(&format!("{loc}.extraction.gprime"), &e.gprime, &XV)?,
            e: b.pair(&format!("{loc}.extraction.e"), &e.e, &X2)?,
            domain: domain.clone(),
            x_samples: e.x_samples,
            v_grid: e.v_grid,
            v_ref: e.v_ref,
            tol: tol.extraction,
        }),
        None => None,
    };
    Ok(AnsatzData { ansatz, domain, points: a.points, sources, vacuum, extraction })
}

/// Reparses the printed form of every expression and compares syntax trees.
pub fn round_trip_failures(sites: &[ExprSite]) -> Vec<String> {
    let mut bad = Vec::new();
    for s in sites {
        let vars: Vec<&str> = s.vars.iter().map(|v| v.as_str()).collect();
        let ok = match parse_expression(&s.text, &vars) {
            Ok(e) => parse_expression(&e.to_string(), &vars).map(|again| again == e).unwrap_or(false),
            Err(_) => false,
        };
        if !ok {
            bad.push(s.location.clone());
        }
    }
    bad
}
