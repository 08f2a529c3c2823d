//! Four-dimensional N-anholonomic ansatz with coordinates (x¹, x², v, y⁴):
//! diagonal blocks g = diag(g1, g2)(x), h = diag(h3, h4)(x, v) and N³_i = w_i,
//! N⁴_i = n_i. Closed-form Ricci components, Einstein residuals, vacuum
//! construction, a cross-check against the generic curvature engine and the
//! extraction of Lie algebroid data from a solution.

use std::sync::Arc;

use crate::algebroid::AlgebroidSpec;
use crate::error::{Error, Result};
use crate::field::{fn_field, Field, Leading, ScalarField};
use crate::geometry::{canonical_dconnection, curvature, CurvatureMode, DMetric, FieldMetric};
use crate::jets::{coordinate_jets, Jet};
use crate::linalg::{cholesky, inverse, mat, mat_mul, transpose, Mat};
use crate::nconnection::{Chart, ChartKind, FieldN};
use crate::numeric::{adaptive_simpson, DomainBox};

/// Index of v among the ansatz coordinates.
const V: usize = 2;

/// Quadrature tolerance used when none is configured.
pub const QUADRATURE_TOL: f64 = 1e-10;

#[derive(Clone)]
pub struct Ansatz4D {
    /// All fields take the four coordinates (x¹, x², v, y⁴).
    pub g1: ScalarField,
    pub g2: ScalarField,
    pub h3: ScalarField,
    pub h4: ScalarField,
    pub w: [ScalarField; 2],
    pub n: [ScalarField; 2],
}

impl std::fmt::Debug for Ansatz4D {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "Ansatz4D(g1={}, g2={}, h3={}, h4={}, w=[{}, {}], n=[{}, {}])",
            self.g1.describe(),
            self.g2.describe(),
            self.h3.describe(),
            self.h4.describe(),
            self.w[0].describe(),
            self.w[1].describe(),
            self.n[0].describe(),
            self.n[1].describe()
        )
    }
}

fn widen(f: ScalarField, max_arity: usize, what: &str) -> Result<ScalarField> {
    let a = f.arity();
    if a > max_arity {
        return Err(Error::Dimension(format!("{what} takes at most {max_arity} arguments, got {a}")));
    }
    if a == 4 {
        return Ok(f);
    }
    Ok(Arc::new(Leading { inner: f, total: 4 }))
}

impl Ansatz4D {
    /// g1, g2 are fields of (x¹, x²); the others of (x¹, x², v).
    pub fn new(
        g1: ScalarField,
        g2: ScalarField,
        h3: ScalarField,
        h4: ScalarField,
        w: [ScalarField; 2],
        n: [ScalarField; 2],
    ) -> Result<Ansatz4D> {
        let [w1, w2] = w;
        let [n1, n2] = n;
        Ok(Ansatz4D {
            g1: widen(g1, 2, "g1")?,
            g2: widen(g2, 2, "g2")?,
            h3: widen(h3, 3, "h3")?,
            h4: widen(h4, 3, "h4")?,
            w: [widen(w1, 3, "w1")?, widen(w2, 3, "w2")?],
            n: [widen(n1, 3, "n1")?, widen(n2, 3, "n2")?],
        })
    }

    /// Manifold chart with base (x¹, x²), fiber (v, y⁴) and N = (w, n).
    pub fn chart(&self) -> Chart {
        let ncoef = FieldN { fields: vec![self.w.to_vec(), self.n.to_vec()] };
        Chart::holonomic_base(ChartKind::Manifold, 2, 2, Arc::new(ncoef))
    }

    pub fn dmetric(&self) -> DMetric {
        let zero = crate::field::constant(4, 0.0);
        let g = vec![vec![self.g1.clone(), zero.clone()], vec![zero.clone(), self.g2.clone()]];
        let h = vec![vec![self.h3.clone(), zero.clone()], vec![zero, self.h4.clone()]];
        DMetric::new(self.chart(), Arc::new(FieldMetric { g, h }))
    }
}

/// α_i, β and γ over jets with v at index 2, each two orders below h3 and h4.
struct VSector {
    alpha: [Jet; 2],
    beta: Jet,
    gamma: Jet,
    gamma_variant: Jet,
}

fn v_sector(h3: &Jet, h4: &Jet) -> Result<VSector> {
    // ln √|h3 h4|
    let l = (h3 * h4).abs()?.ln()?.scale(0.5);
    let h4s = h4.derivative(V);
    let ls = l.derivative(V);
    let alpha = [0, 1].map(|i| h4s.derivative(i) - &h4s * &l.derivative(i).truncate(h4s.order() - 1));
    let beta = h4s.derivative(V) - &h4s * &ls;
    let h3s = h3.derivative(V);
    let ratio = h4s.div_jet(h4)?.scale(1.5);
    let gamma = &ratio - &h3s.div_jet(h3)?.scale(0.5);
    let gamma_variant = &ratio - &h3s.div_jet(h4)?;
    Ok(VSector { alpha, beta, gamma, gamma_variant })
}

/// The closed-form Ricci components of the ansatz at one point, with the
/// auxiliary coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct AnsatzRicci {
    /// R¹₁ = R²₂
    pub r11: f64,
    /// R³₃ = R⁴₄
    pub r33: f64,
    /// R_3i = (w_i β − α_i)/(2h4)
    pub r3: [f64; 2],
    /// R_4i = −h4/(2h3) (n_i** + γ n_i*)
    pub r4: [f64; 2],
    pub alpha: [f64; 2],
    pub beta: f64,
    /// 3h4*/(2h4) − h3*/(2h3)
    pub gamma: f64,
    /// the variants −(w_i β + α_i)/(2h4) and γ = 3h4*/(2h4) − h3*/h4, which
    /// disagree with the canonical d-connection when w_i β ≠ 0 or h3* ≠ 0
    pub r3_variant: [f64; 2],
    pub r4_variant: [f64; 2],
    pub gamma_variant: f64,
}

fn point4(p: &[f64]) -> Result<[f64; 4]> {
    match p.len() {
        3 => Ok([p[0], p[1], p[2], 0.0]),
        4 => Ok([p[0], p[1], p[2], p[3]]),
        k => Err(Error::Dimension(format!("ansatz point of length {k} (need 3 or 4)"))),
    }
}

/// Ricci components at p = (x¹, x², v).
pub fn ansatz_ricci(s: &Ansatz4D, p: &[f64]) -> Result<AnsatzRicci> {
    let pt = point4(p)?;
    let c = coordinate_jets(&pt, 2);
    let g1 = s.g1.eval_jet(&c)?;
    let g2 = s.g2.eval_jet(&c)?;
    let h3 = s.h3.eval_jet(&c)?;
    let h4 = s.h4.eval_jet(&c)?;
    let (g1v, g2v, h3v, h4v) = (g1.value(), g2.value(), h3.value(), h4.value());
    if g1v * g2v == 0.0 {
        return Err(Error::Precondition(format!("g1 g2 vanishes at {p:?}")));
    }
    if h3v * h4v == 0.0 {
        return Err(Error::Precondition(format!("h3 h4 vanishes at {p:?}")));
    }
    let h4s = h4.partial(&[0, 0, 1, 0]);
    if h4s.abs() <= f64::EPSILON * h4v.abs().max(1.0) {
        return Err(Error::Precondition(format!("∂_v h4 vanishes at {p:?}")));
    }
    let d = |j: &Jet, a: [u8; 4]| j.partial(&a);
    let (g1d1, g1d2, g1d22) = (d(&g1, [1, 0, 0, 0]), d(&g1, [0, 1, 0, 0]), d(&g1, [0, 2, 0, 0]));
    let (g2d1, g2d2, g2d11) = (d(&g2, [1, 0, 0, 0]), d(&g2, [0, 1, 0, 0]), d(&g2, [2, 0, 0, 0]));
    let bracket =
        g2d11 - g1d1 * g2d1 / (2.0 * g1v) - g2d1 * g2d1 / (2.0 * g2v) + g1d22 - g1d2 * g2d2 / (2.0 * g2v) - g1d2 * g1d2 / (2.0 * g1v);
    let r11 = -bracket / (2.0 * g1v * g2v);

    let vs = v_sector(&h3, &h4)?;
    let beta = vs.beta.value();
    let alpha = [vs.alpha[0].value(), vs.alpha[1].value()];
    let gamma = vs.gamma.value();
    let r33 = -beta / (2.0 * h3v * h4v);
    let gamma_variant = vs.gamma_variant.value();
    let mut r3 = [0.0; 2];
    let mut r4 = [0.0; 2];
    let mut r3_variant = [0.0; 2];
    let mut r4_variant = [0.0; 2];
    for i in 0..2 {
        let w = s.w[i].eval(&pt)?;
        r3[i] = (w * beta - alpha[i]) / (2.0 * h4v);
        r3_variant[i] = -(w * beta + alpha[i]) / (2.0 * h4v);
        let n = s.n[i].eval_jet(&c)?;
        let (ns, nss) = (d(&n, [0, 0, 1, 0]), d(&n, [0, 0, 2, 0]));
        r4[i] = -h4v / (2.0 * h3v) * (nss + gamma * ns);
        r4_variant[i] = -h4v / (2.0 * h3v) * (nss + gamma_variant * ns);
    }
    Ok(AnsatzRicci { r11, r33, r3, r4, alpha, beta, gamma, r3_variant, r4_variant, gamma_variant })
}

/// Sources Υ1(x¹, x², v) and Υ3(x¹, x²).
#[derive(Clone)]
pub struct SourceSpec {
    pub upsilon1: ScalarField,
    pub upsilon3: ScalarField,
}

impl SourceSpec {
    pub fn vacuum() -> SourceSpec {
        SourceSpec { upsilon1: crate::field::constant(3, 0.0), upsilon3: crate::field::constant(2, 0.0) }
    }
}

/// Residuals of the field equations for the ansatz.
#[derive(Clone, Debug, PartialEq)]
pub struct EinsteinResidual {
    /// R³₃ + Υ1
    pub h_block: f64,
    /// R¹₁ + Υ3
    pub g_block: f64,
    pub r3: [f64; 2],
    pub r4: [f64; 2],
}

impl EinsteinResidual {
    pub fn max_abs(&self) -> f64 {
        [self.h_block, self.g_block, self.r3[0], self.r3[1], self.r4[0], self.r4[1]].iter().fold(0.0_f64, |a, v| a.max(v.abs()))
    }

    pub fn mixed_max_abs(&self) -> f64 {
        [self.r3[0], self.r3[1], self.r4[0], self.r4[1]].iter().fold(0.0_f64, |a, v| a.max(v.abs()))
    }
}

pub fn einstein_residual(s: &Ansatz4D, src: &SourceSpec, p: &[f64]) -> Result<EinsteinResidual> {
    let r = ansatz_ricci(s, p)?;
    let pt = point4(p)?;
    let u1 = src.upsilon1.eval(&pt[..src.upsilon1.arity()])?;
    let u3 = src.upsilon3.eval(&pt[..src.upsilon3.arity()])?;
    Ok(EinsteinResidual { h_block: r.r33 + u1, g_block: r.r11 + u3, r3: r.r3, r4: r.r4 })
}

/// I(x, v) = ∫_{v0}^{v} f(x, s) ds for a field f whose argument `var` is the
/// integration variable. Derivatives in x come from integrating the Taylor
/// coefficients; derivatives in v from the integrand itself.
pub struct VIntegral {
    pub integrand: ScalarField,
    pub var: usize,
    pub v0: f64,
    pub tol: f64,
}

impl VIntegral {
    pub fn new(integrand: ScalarField, var: usize, v0: f64, tol: f64) -> VIntegral {
        VIntegral { integrand, var, v0, tol }
    }

    /// Taylor polynomial of I at `p` in the field's own variables.
    fn local(&self, p: &[f64], order: usize) -> Result<Jet> {
        let d = p.len();
        let coeff_at = |s: f64| -> Result<Vec<f64>> {
            let mut c = coordinate_jets(p, order);
            c[self.var] = c[0].lift(s);
            Ok(self.integrand.eval_jet(&c)?.coeffs().to_vec())
        };
        let along = adaptive_simpson(&coeff_at, self.v0, p[self.var], self.tol)?;
        let base = Jet::from_coeffs(d, order, along)?;
        if order == 0 {
            return Ok(base);
        }
        let near = self.integrand.eval_jet(&coordinate_jets(p, order - 1))?;
        Ok(&base + &near.antiderivative(self.var))
    }
}

impl Field for VIntegral {
    fn arity(&self) -> usize {
        self.integrand.arity()
    }

    fn eval_jet(&self, args: &[Jet]) -> Result<Jet> {
        crate::field::check_arity(self.arity(), args.len())?;
        let p: Vec<f64> = args.iter().map(|a| a.value()).collect();
        let order = args.iter().map(|a| a.order()).min().unwrap_or(0);
        Ok(self.local(&p, order)?.compose(args))
    }

    fn eval(&self, args: &[f64]) -> Result<f64> {
        Ok(self.local(args, 0)?.value())
    }

    fn describe(&self) -> String {
        format!("∫_{{{}}}^{{v}} {} dv", self.v0, self.integrand.describe())
    }
}

/// A field defined by an expression over coordinate jets that may
/// differentiate its inputs: evaluated on local jets `extra` orders higher,
/// then composed with the arguments.
struct Differentiating<F> {
    arity: usize,
    extra: usize,
    name: String,
    f: F,
}

impl<F> Field for Differentiating<F>
where
    F: Fn(&[Jet]) -> Result<Jet> + Send + Sync,
{
    fn arity(&self) -> usize {
        self.arity
    }

    fn eval_jet(&self, args: &[Jet]) -> Result<Jet> {
        crate::field::check_arity(self.arity, args.len())?;
        let p: Vec<f64> = args.iter().map(|a| a.value()).collect();
        let order = args.iter().map(|a| a.order()).min().unwrap_or(0);
        let local = (self.f)(&coordinate_jets(&p, order + self.extra))?.truncate(order);
        Ok(local.compose(args))
    }

    fn describe(&self) -> String {
        self.name.clone()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    /// β = 0: h4 solves R³₃ = 0 and w_i is left at zero.
    Degenerate,
    /// h4 given with β ≠ 0: w_i = α_i/β.
    Generic,
}

/// Inputs of the vacuum construction. g1, g2, c1, c2, a_i, b_i are fields of
/// (x¹, x²); h3 and h4 of (x¹, x², v).
#[derive(Clone)]
pub struct VacuumInput {
    pub g1: ScalarField,
    pub g2: ScalarField,
    pub h3: ScalarField,
    /// Given h4 selects the generic branch; otherwise h4 = (c1 + c2 ∫√|h3| dv)².
    pub h4: Option<ScalarField>,
    pub c1: ScalarField,
    pub c2: ScalarField,
    pub a: [ScalarField; 2],
    /// `None` keeps n_i = a_i.
    pub b: Option<[ScalarField; 2]>,
    /// Lower limit of the quadrature defining h4.
    pub v0: f64,
    /// Lower limit of the quadrature defining n_i.
    pub vn0: f64,
    pub tol: f64,
    /// Box in (x¹, x², v) used to probe the branch and verify the result.
    pub domain: DomainBox,
    pub samples: usize,
}

#[derive(Clone, Debug)]
pub struct VacuumSolution {
    pub ansatz: Ansatz4D,
    pub branch: Branch,
    /// max |residual| of (R¹₁, R_3i, R_4i) and, in the degenerate branch, R³₃ over the samples
    pub max_residual: f64,
    /// max |R³₃| over the samples: the Υ1 a generic-branch solution needs
    pub required_upsilon1: f64,
    /// max |α_i| over the samples (nonzero α in the degenerate branch leaves R_3i ≠ 0)
    pub max_alpha: f64,
    pub notes: Vec<String>,
}

fn on_xv(f: ScalarField) -> ScalarField {
    if f.arity() == 3 {
        f
    } else {
        Arc::new(Leading { inner: f, total: 3 })
    }
}

pub fn solve_vacuum(input: &VacuumInput) -> Result<VacuumSolution> {
    for (name, f, k) in [("g1", &input.g1, 2), ("g2", &input.g2, 2), ("c1", &input.c1, 2), ("c2", &input.c2, 2), ("h3", &input.h3, 3)] {
        if f.arity() > k {
            return Err(Error::Dimension(format!("{name} takes at most {k} arguments")));
        }
    }
    if input.domain.dim() != 3 {
        return Err(Error::Dimension("vacuum domain must be a box in (x1, x2, v)".into()));
    }
    let tol = input.tol;
    let h3 = on_xv(input.h3.clone());
    let mut notes = Vec::new();
    let (h4, branch): (ScalarField, Branch) = match &input.h4 {
        Some(h4) => (on_xv(h4.clone()), Branch::Generic),
        None => {
            let h3c = h3.clone();
            let root = fn_field(3, "sqrt|h3|", move |a| h3c.eval_jet(a)?.abs()?.sqrt());
            let q: ScalarField = Arc::new(VIntegral::new(root, V, input.v0, tol));
            let (c1, c2) = (on_xv(input.c1.clone()), on_xv(input.c2.clone()));
            let name = format!("({} + {}·{})^2", c1.describe(), c2.describe(), q.describe());
            (
                fn_field(3, &name, move |a| {
                    let f = c1.eval_jet(a)? + c2.eval_jet(a)? * q.eval_jet(a)?;
                    Ok(&f * &f)
                }),
                Branch::Degenerate,
            )
        }
    };

    if branch == Branch::Generic {
        for p in input.domain.halton(input.samples, 0) {
            let c = coordinate_jets(&p, 2);
            let vs = v_sector(&h3.eval_jet(&c)?, &h4.eval_jet(&c)?)?;
            let scale = 1.0 + vs.alpha[0].value().abs().max(vs.alpha[1].value().abs());
            if vs.beta.value().abs() <= 1e-12 * scale {
                return Err(Error::Precondition(format!("β vanishes at {p:?}; the degenerate branch applies")));
            }
        }
    }
    let zero = crate::field::constant(3, 0.0);
    let w: [ScalarField; 2] = match branch {
        Branch::Degenerate => {
            notes.push("β = 0: w_i is not fixed by the equations and is set to 0".into());
            [zero.clone(), zero.clone()]
        }
        Branch::Generic => [0, 1].map(|i| {
            let (h3, h4) = (h3.clone(), h4.clone());
            let f: ScalarField = Arc::new(Differentiating {
                arity: 3,
                extra: 2,
                name: format!("alpha{}/beta", i + 1),
                f: move |c: &[Jet]| {
                    let vs = v_sector(&h3.eval_jet(c)?, &h4.eval_jet(c)?)?;
                    vs.alpha[i].truncate(vs.beta.order()).div_jet(&vs.beta)
                },
            });
            f
        }),
    };

    let n: [ScalarField; 2] = match &input.b {
        None => [on_xv(input.a[0].clone()), on_xv(input.a[1].clone())],
        Some(b) => {
            // exp(−∫γ dv) = |h3|^{1/2} |h4|^{-3/2} up to a factor of x absorbed in b_i
            let (h3c, h4c) = (h3.clone(), h4.clone());
            let phi = fn_field(3, "|h3|^(1/2) |h4|^(-3/2)", move |a| {
                let h4 = h4c.eval_jet(a)?.abs()?;
                Ok(h3c.eval_jet(a)?.abs()?.sqrt()? * h4.powf(-1.5)?)
            });
            let k: ScalarField = Arc::new(VIntegral::new(phi, V, input.vn0, tol));
            [0, 1].map(|i| {
                let (a, b, k) = (on_xv(input.a[i].clone()), on_xv(b[i].clone()), k.clone());
                fn_field(3, &format!("n{}", i + 1), move |x| Ok(a.eval_jet(x)? + b.eval_jet(x)? * k.eval_jet(x)?))
            })
        }
    };

    let ansatz = Ansatz4D::new(input.g1.clone(), input.g2.clone(), h3, h4, w, n)?;
    let mut max_residual = 0.0_f64;
    let mut required = 0.0_f64;
    let mut max_alpha = 0.0_f64;
    for p in input.domain.halton(input.samples, 0) {
        let r = ansatz_ricci(&ansatz, &p)?;
        max_alpha = max_alpha.max(r.alpha[0].abs()).max(r.alpha[1].abs());
        required = required.max(r.r33.abs());
        let mut worst = [r.r11, r.r3[0], r.r3[1], r.r4[0], r.r4[1]].iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        if branch == Branch::Degenerate {
            worst = worst.max(r.r33.abs());
        }
        max_residual = max_residual.max(worst);
    }
    if branch == Branch::Degenerate && max_alpha > 1e-8 {
        notes.push(format!("α_i reaches {max_alpha:.3e}; R_3i = −α_i/(2h4) does not vanish (c2 must not depend on x)"));
    }
    if branch == Branch::Generic {
        notes.push(format!("R³₃ reaches {required:.3e}; the solution needs Υ1 = −R³₃"));
    }
    Ok(VacuumSolution { ansatz, branch, max_residual, required_upsilon1: required, max_alpha, notes })
}

/// Closed-form Ricci components next to the generic engine's.
#[derive(Clone, Debug)]
pub struct CrossCheck {
    pub formula: AnsatzRicci,
    /// Ricci d-tensor over the adapted frame from the canonical d-connection
    pub engine: Vec<Vec<f64>>,
    /// deviations for (R¹₁ and R²₂, R³₃ and R⁴₄, R_3i, R_4i, components that must vanish)
    pub blocks: [f64; 5],
    pub max_deviation: f64,
}

pub fn crosscheck_generic(s: &Ansatz4D, p: &[f64]) -> Result<CrossCheck> {
    let formula = ansatz_ricci(s, p)?;
    let pt = point4(p)?;
    let gp = s.dmetric().at(&pt, 1)?;
    let conn = canonical_dconnection(&gp);
    let ric = curvature(&conn, &gp, CurvatureMode::Complete).ricci;
    let g = [s.g1.eval(&pt)?, s.g2.eval(&pt)?];
    let h = [s.h3.eval(&pt)?, s.h4.eval(&pt)?];
    let r11 = (ric[0][0] / g[0] - formula.r11).abs().max((ric[1][1] / g[1] - formula.r11).abs());
    let r33 = (ric[2][2] / h[0] - formula.r33).abs().max((ric[3][3] / h[1] - formula.r33).abs());
    let mut r3 = 0.0_f64;
    let mut r4 = 0.0_f64;
    let mut rest = ric[0][1].abs().max(ric[1][0].abs()).max(ric[2][3].abs()).max(ric[3][2].abs());
    for i in 0..2 {
        r3 = r3.max((ric[2][i] - formula.r3[i]).abs());
        r4 = r4.max((ric[3][i] - formula.r4[i]).abs());
        rest = rest.max(ric[i][2].abs()).max(ric[i][3].abs());
    }
    let blocks = [r11, r33, r3, r4, rest];
    let max_deviation = blocks.iter().fold(0.0_f64, |a, v| a.max(*v));
    Ok(CrossCheck { formula, engine: ric, blocks, max_deviation })
}

/// Choices made when reading algebroid data off a diagonal ansatz: the
/// algebroid metric g'_{a'}(x, v) and the v-vielbeins e_[a].
#[derive(Clone)]
pub struct ExtractionSpec {
    /// g'_1, g'_2: fields of (x¹, x², v)
    pub gprime: [ScalarField; 2],
    /// e_[1], e_[2]: fields of (x¹, x²) for the frame e_{a''} = e_[a] ∂/∂u^a
    pub e: [ScalarField; 2],
    /// Box in (x¹, x², v) sampled by the x-only checks
    pub domain: DomainBox,
    /// x sample count and v grid size
    pub x_samples: usize,
    pub v_grid: usize,
    /// v at which the x-only functions are read off
    pub v_ref: f64,
    pub tol: f64,
}

#[derive(Clone)]
pub struct Extraction {
    pub algebroid: Arc<AlgebroidSpec>,
    /// the 2m d-metric (g', ⋆h) with N^a_{a'} on the prolongation chart of `algebroid`
    pub dmetric: DMetric,
    /// max relative spread of ρ^i_{a'} across the v grid
    pub rho_x_dependence: f64,
    /// point of the worst spread
    pub rho_worst_point: Vec<f64>,
    /// max relative spread of C across the v grid
    pub c_x_dependence: f64,
    /// max |[e_a, e_b] − C^d_ab e_d|
    pub closure: f64,
    /// max relative deviation when rebuilding (g, h, N) from the extracted data
    pub reassembly: f64,
    /// structure residuals of the extracted algebroid (anchor morphism, Jacobi)
    pub structure_residuals: (f64, f64),
    pub gl: GLMapping,
}

/// Mapping to a generalized Lagrange d-metric: v̌_a = A_a^{a'} e_{a'} with
/// A ⋆h Aᵀ = g'.
#[derive(Clone, Debug)]
pub struct GLMapping {
    /// A at the reference point of the first x sample
    pub a: Vec<Vec<f64>>,
    /// ⋆W^c_ab at that point, stored [c][a][b]
    pub w: Vec<Vec<Vec<f64>>>,
    /// max |A ⋆h Aᵀ − g'| over the samples
    pub metric_defect: f64,
    /// max |⋆W| over the samples
    pub max_w: f64,
}

fn spread(vals: &[f64]) -> f64 {
    let (lo, hi) = vals.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    let scale = vals.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    if scale == 0.0 {
        0.0
    } else {
        (hi - lo) / scale
    }
}

/// Local data of the extraction at one point of (x¹, x², v, y⁴), as jets.
struct ExtractLocal {
    /// ρ_i^{i'} (diagonal)
    rho_low: [Jet; 2],
    /// ρ^i_{i'} (diagonal)
    rho_up: [Jet; 2],
    hstar: [Jet; 2],
    gprime: [Jet; 2],
    /// frame e_{a''} = e_[a] ∂_{u^a}, components [a''][a]
    frame: Mat,
}

impl ExtractionSpec {
    fn widened(&self) -> Result<([ScalarField; 2], [ScalarField; 2])> {
        let [g1, g2] = self.gprime.clone();
        let [e1, e2] = self.e.clone();
        Ok(([widen(g1, 3, "g'1")?, widen(g2, 3, "g'2")?], [widen(e1, 4, "e1")?, widen(e2, 4, "e2")?]))
    }

    fn local(&self, s: &Ansatz4D, c: &[Jet]) -> Result<ExtractLocal> {
        let (gp, e) = self.widened()?;
        let g = [s.g1.eval_jet(c)?, s.g2.eval_jet(c)?];
        let h = [s.h3.eval_jet(c)?, s.h4.eval_jet(c)?];
        let gprime = [gp[0].eval_jet(c)?, gp[1].eval_jet(c)?];
        let ev = [e[0].eval_jet(c)?, e[1].eval_jet(c)?];
        let mut rho_low = Vec::new();
        let mut rho_up = Vec::new();
        let mut hstar = Vec::new();
        for i in 0..2 {
            let r = g[i].div_jet(&gprime[i])?.sqrt()?;
            let hs = &h[i] * &ev[i] * &ev[i];
            rho_up.push((&hs * &r).div_jet(&g[i])?);
            rho_low.push(r);
            hstar.push(hs);
        }
        let z = c[0].lift(0.0);
        let frame = mat(2, 2, |a, b| if a == b { ev[a].clone() } else { z.clone() });
        let two = |v: Vec<Jet>| -> [Jet; 2] { [v[0].clone(), v[1].clone()] };
        Ok(ExtractLocal { rho_low: two(rho_low), rho_up: two(rho_up), hstar: two(hstar), gprime, frame })
    }
}

/// Commutator coefficients of a frame X_a = X[a][k] ∂_{u^k} on the fiber
/// coordinates (indices 2, 3): [X_a, X_b] = C^d_ab X_d, returned [d][a][b]
/// with the closure residual. Jets lose one order.
fn frame_commutators(x: &Mat) -> Result<(Vec<Vec<Vec<Jet>>>, f64)> {
    let xinv = inverse(x)?;
    let z = x[0][0].lift(0.0);
    let order = x[0][0].order().saturating_sub(1);
    let mut c = vec![vec![vec![z.truncate(order); 2]; 2]; 2];
    let mut closure = 0.0_f64;
    for a in 0..2 {
        for b in 0..2 {
            let comm: Vec<Jet> = (0..2)
                .map(|k| {
                    let mut s = z.truncate(order);
                    for l in 0..2 {
                        s = s + x[a][l].truncate(order) * x[b][k].derivative(2 + l) - x[b][l].truncate(order) * x[a][k].derivative(2 + l);
                    }
                    s
                })
                .collect();
            for d in 0..2 {
                let mut s = z.truncate(order);
                for k in 0..2 {
                    s = s + &comm[k] * &xinv[k][d].truncate(order);
                }
                c[d][a][b] = s;
            }
            for k in 0..2 {
                let rebuilt: f64 = (0..2).map(|d| c[d][a][b].value() * x[d][k].value()).sum();
                closure = closure.max((comm[k].value() - rebuilt).abs());
            }
        }
    }
    Ok((c, closure))
}

pub fn extract_algebroid(s: &Ansatz4D, spec: &ExtractionSpec) -> Result<Extraction> {
    if spec.domain.dim() != 3 {
        return Err(Error::Dimension("extraction domain must be a box in (x1, x2, v)".into()));
    }
    if spec.v_grid < 2 || spec.x_samples == 0 {
        return Err(Error::Validation("extraction needs at least one x sample and two v values".into()));
    }
    let (vlo, vhi) = (spec.domain.lo[2], spec.domain.hi[2]);
    let xbox = DomainBox::new(spec.domain.lo[..2].to_vec(), spec.domain.hi[..2].to_vec())?;
    let vs: Vec<f64> = (0..spec.v_grid).map(|k| vlo + (vhi - vlo) * k as f64 / (spec.v_grid - 1) as f64).collect();

    let mut rho_dep = 0.0_f64;
    let mut rho_worst = Vec::new();
    let mut c_dep = 0.0_f64;
    let mut closure = 0.0_f64;
    let mut gl_defect = 0.0_f64;
    let mut max_w = 0.0_f64;
    for x in xbox.halton(spec.x_samples, 0) {
        let mut rho_vals = [Vec::new(), Vec::new()];
        let mut c_vals = vec![Vec::new(); 8];
        for &v in &vs {
            let pt = [x[0], x[1], v, 0.0];
            let cj = coordinate_jets(&pt, 1);
            let loc = spec.local(s, &cj)?;
            for i in 0..2 {
                rho_vals[i].push(loc.rho_up[i].value());
            }
            let (c, cl) = frame_commutators(&loc.frame)?;
            closure = closure.max(cl);
            for (k, val) in c.iter().flatten().flatten().enumerate() {
                c_vals[k].push(val.value());
            }
            // GL mapping: A = L_g' L_h⁻¹ and the commutators of v̌_a = A_a^{a'} e_{a'}
            let z = cj[0].lift(0.0);
            let gpm = mat(2, 2, |a, b| if a == b { loc.gprime[a].clone() } else { z.clone() });
            let hsm = mat(2, 2, |a, b| if a == b { loc.hstar[a].clone() } else { z.clone() });
            let amat = mat_mul(&cholesky(&gpm)?, &inverse(&cholesky(&hsm)?)?);
            let back = mat_mul(&mat_mul(&amat, &hsm), &transpose(&amat));
            for a in 0..2 {
                for b in 0..2 {
                    gl_defect = gl_defect.max((back[a][b].value() - gpm[a][b].value()).abs());
                }
            }
            let wv = gl_commutators(&amat, &loc.frame)?;
            max_w = max_w.max(wv.iter().flatten().flatten().fold(0.0_f64, |a, v| a.max(v.abs())));
        }
        for vals in &rho_vals {
            let sp = spread(vals);
            if sp > rho_dep {
                rho_dep = sp;
                rho_worst = x.clone();
            }
        }
        for vals in &c_vals {
            let scale = vals.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
            if scale > 1e-300 {
                c_dep = c_dep.max(spread(vals));
            }
        }
    }
    if rho_dep > spec.tol {
        return Err(Error::Validation(format!("anchor ρ^i_a' depends on v (relative spread {rho_dep:.3e} at x = {rho_worst:?})")));
    }
    if c_dep > spec.tol {
        return Err(Error::Validation(format!("structure functions depend on v (relative spread {c_dep:.3e})")));
    }

    // x-only data read off at v_ref
    let vref = spec.v_ref;
    let spec2 = Arc::new(spec.clone());
    let s2 = Arc::new(s.clone());
    let at_ref = move |x: &[Jet]| -> Vec<Jet> {
        let z = x[0].lift(0.0);
        vec![x[0].clone(), x[1].clone(), z.lift(vref), z]
    };
    let rho: Vec<Vec<ScalarField>> = (0..2)
        .map(|a| {
            (0..2)
                .map(|i| {
                    if a != i {
                        return crate::field::constant(2, 0.0);
                    }
                    let (sp, ss, at_ref) = (spec2.clone(), s2.clone(), at_ref);
                    fn_field(2, &format!("rho^{}_{}'", i + 1, a + 1), move |x| Ok(sp.local(&ss, &at_ref(x))?.rho_up[a].clone()))
                })
                .collect()
        })
        .collect();
    let c: Vec<Vec<Vec<ScalarField>>> = (0..2)
        .map(|d| {
            (0..2)
                .map(|a| {
                    (0..2)
                        .map(|b| {
                            let (sp, ss) = (spec2.clone(), s2.clone());
                            let f: ScalarField = Arc::new(Differentiating {
                                arity: 2,
                                extra: 1,
                                name: format!("C^{}_{}{}", d + 1, a + 1, b + 1),
                                f: move |x: &[Jet]| {
                                    // fiber jets are needed for the frame commutators
                                    let dim = x[0].dim() + 2;
                                    let order = x[0].order();
                                    let pt = [x[0].value(), x[1].value(), vref, 0.0];
                                    let full = coordinate_jets(&pt, order);
                                    let (c, _) = frame_commutators(&sp.local(&ss, &full)?.frame)?;
                                    // restrict to the x variables at v_ref
                                    let restricted = restrict_to_leading(&c[d][a][b], dim - 2)?;
                                    Ok(restricted)
                                },
                            });
                            f
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let algebroid = Arc::new(AlgebroidSpec::new(2, 2, rho, c)?.with_domain(xbox.clone()));
    let mut worst = (0.0_f64, 0.0_f64);
    for x in xbox.halton(spec.x_samples, 0) {
        let (r1, r2) = algebroid.structure_residual_norms(&x)?;
        worst = (worst.0.max(r1), worst.1.max(r2));
    }

    // N^a_{a'} = N^a_i / ρ_i^{a'} on the prolongation chart
    let nprime: Vec<Vec<ScalarField>> = (0..2)
        .map(|a| {
            (0..2)
                .map(|ip| {
                    let (sp, ss) = (spec2.clone(), s2.clone());
                    fn_field(4, &format!("N^{}_{}'", a + 3, ip + 1), move |c| {
                        let nf = if a == 0 { &ss.w[ip] } else { &ss.n[ip] };
                        nf.eval_jet(c)?.div_jet(&sp.local(&ss, c)?.rho_low[ip])
                    })
                })
                .collect()
        })
        .collect();
    let chart = Chart::prolongation(algebroid.clone(), Arc::new(FieldN { fields: nprime }));
    let blocks = |which: usize| -> Vec<Vec<ScalarField>> {
        (0..2)
            .map(|a| {
                (0..2)
                    .map(|b| {
                        if a != b {
                            return crate::field::constant(4, 0.0);
                        }
                        let (sp, ss) = (spec2.clone(), s2.clone());
                        fn_field(4, if which == 0 { "g'" } else { "*h" }, move |c| {
                            let loc = sp.local(&ss, c)?;
                            Ok(if which == 0 { loc.gprime[a].clone() } else { loc.hstar[a].clone() })
                        })
                    })
                    .collect()
            })
            .collect()
    };
    let dmetric = DMetric::new(chart, Arc::new(FieldMetric { g: blocks(0), h: blocks(1) }));

    // rebuild (g, h, N) of the ansatz from the extracted objects
    let rel = |a: f64, b: f64| (a - b).abs() / (1.0 + b.abs());
    let mut reassembly = 0.0_f64;
    for x in xbox.halton(spec.x_samples, 0) {
        for &v in &vs {
            let pt = [x[0], x[1], v, 0.0];
            let cj = coordinate_jets(&pt, 0);
            let loc = spec.local(s, &cj)?;
            let (gpm, hsm) = dmetric.source.eval(&cj)?;
            let nprime = dmetric.chart.ncoef.eval(&cj)?;
            let g = [s.g1.eval(&pt)?, s.g2.eval(&pt)?];
            let h = [s.h3.eval(&pt)?, s.h4.eval(&pt)?];
            for i in 0..2 {
                let r = loc.rho_low[i].value();
                let e = loc.frame[i][i].value();
                reassembly = reassembly.max(rel(gpm[i][i].value() * r * r, g[i]));
                reassembly = reassembly.max(rel(hsm[i][i].value() / (e * e), h[i]));
                for (a, nf) in [&s.w[i], &s.n[i]].into_iter().enumerate() {
                    reassembly = reassembly.max(rel(r * nprime[a][i].value(), nf.eval(&pt)?));
                }
            }
        }
    }

    // GL mapping at the reference point of the first x sample
    let x0 = xbox.halton(1, 0).remove(0);
    let cj = coordinate_jets(&[x0[0], x0[1], vref, 0.0], 1);
    let loc = spec.local(s, &cj)?;
    let z = cj[0].lift(0.0);
    let gpm = mat(2, 2, |a, b| if a == b { loc.gprime[a].clone() } else { z.clone() });
    let hsm = mat(2, 2, |a, b| if a == b { loc.hstar[a].clone() } else { z.clone() });
    let amat = mat_mul(&cholesky(&gpm)?, &inverse(&cholesky(&hsm)?)?);
    let w = gl_commutators(&amat, &loc.frame)?;
    let a = amat.iter().map(|r| r.iter().map(|j| j.value()).collect()).collect();
    Ok(Extraction {
        algebroid,
        dmetric,
        rho_x_dependence: rho_dep,
        rho_worst_point: rho_worst,
        c_x_dependence: c_dep,
        closure,
        reassembly,
        structure_residuals: worst,
        gl: GLMapping { a, w, metric_defect: gl_defect, max_w },
    })
}

/// ⋆W^c_ab from [v̌_a, v̌_b] with v̌_a = A_a^{a'} e_{a'}.
fn gl_commutators(a: &Mat, frame: &Mat) -> Result<Vec<Vec<Vec<f64>>>> {
    let (w, _) = frame_commutators(&mat_mul(a, frame))?;
    Ok(w.iter().map(|m| m.iter().map(|r| r.iter().map(|j| j.value()).collect()).collect()).collect())
}

/// Drops the trailing variables of a jet, keeping the Taylor coefficients
/// that involve only the first `dim` variables.
fn restrict_to_leading(j: &Jet, dim: usize) -> Result<Jet> {
    let order = j.order();
    let target = Jet::constant(dim, order, 0.0);
    let coeffs = (0..target.coeffs().len())
        .map(|i| {
            let mut alpha = target.table().exponents(i).to_vec();
            alpha.resize(j.dim(), 0);
            j.coeff(&alpha)
        })
        .collect();
    Jet::from_coeffs(dim, order, coeffs)
}
