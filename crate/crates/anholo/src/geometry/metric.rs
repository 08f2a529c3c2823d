use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::jets::{coordinate_jets, Jet};
use crate::linalg::{check_conditioning, inverse, mat, signature, values, Mat, COND_WARN};
use crate::nconnection::{Chart, ChartFrame};
use crate::numeric::DomainBox;

/// Source of the blocks (g_a'b', h_ab) of a d-metric.
///
/// `eval` receives coordinate jets of order K and returns jets of order
/// K − `order_loss()`.
pub trait MetricSource: Send + Sync {
    fn eval(&self, coords: &[Jet]) -> Result<(Mat, Mat)>;

    fn order_loss(&self) -> usize {
        0
    }
}

/// Metric blocks given by explicit fields of (x, y).
pub struct FieldMetric {
    pub g: Vec<Vec<ScalarField>>,
    pub h: Vec<Vec<ScalarField>>,
}

impl MetricSource for FieldMetric {
    fn eval(&self, coords: &[Jet]) -> Result<(Mat, Mat)> {
        let ev = |m: &Vec<Vec<ScalarField>>| -> Result<Mat> { m.iter().map(|r| r.iter().map(|f| f.eval_jet(coords)).collect()).collect() };
        Ok((ev(&self.g)?, ev(&self.h)?))
    }
}

/// A d-metric attached to a chart.
#[derive(Clone)]
pub struct DMetric {
    pub chart: Chart,
    pub source: Arc<dyn MetricSource>,
}

/// Everything needed to evaluate connections of jet order `order` at a point.
#[derive(Clone, Debug)]
pub struct GeomPoint {
    pub pt: Vec<f64>,
    pub order: usize,
    /// frame data at order + 1
    pub cf: ChartFrame,
    /// g and h at order + 1
    pub g: Mat,
    pub h: Mat,
    pub ginv: Mat,
    pub hinv: Mat,
    pub gcond: f64,
    pub hcond: f64,
}

impl GeomPoint {
    pub fn mh(&self) -> usize {
        self.cf.mh
    }

    pub fn mv(&self) -> usize {
        self.cf.mv
    }

    pub fn rank(&self) -> usize {
        self.cf.mh + self.cf.mv
    }

    pub fn zero(&self) -> Jet {
        self.g[0][0].lift(0.0)
    }

    /// Block-diagonal metric G_AB over the adapted frame.
    pub fn full_metric(&self) -> Mat {
        let mh = self.mh();
        let r = self.rank();
        let z = self.zero();
        mat(r, r, |a, b| match (a < mh, b < mh) {
            (true, true) => self.g[a][b].clone(),
            (false, false) => self.h[a - mh][b - mh].clone(),
            _ => z.clone(),
        })
    }

    pub fn full_inverse(&self) -> Mat {
        let mh = self.mh();
        let r = self.rank();
        let z = self.zero();
        mat(r, r, |a, b| match (a < mh, b < mh) {
            (true, true) => self.ginv[a][b].clone(),
            (false, false) => self.hinv[a - mh][b - mh].clone(),
            _ => z.clone(),
        })
    }

    /// Frame derivative c_A(f).
    pub fn d(&self, a: usize, f: &Jet) -> Jet {
        self.cf.frame.act(a, f)
    }

    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.gcond > COND_WARN {
            w.push(format!("g is ill-conditioned (cond {:.3e}) at {:?}", self.gcond, self.pt));
        }
        if self.hcond > COND_WARN {
            w.push(format!("h is ill-conditioned (cond {:.3e}) at {:?}", self.hcond, self.pt));
        }
        w
    }
}

/// Symmetry, signature and conditioning over a sample.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricDiagnostics {
    pub samples: usize,
    pub symmetry_defect: f64,
    pub g_signature: (usize, usize, usize),
    pub h_signature: (usize, usize, usize),
    pub constant_signature: bool,
    pub max_condition: f64,
    pub warnings: Vec<String>,
}

impl DMetric {
    pub fn new(chart: Chart, source: Arc<dyn MetricSource>) -> DMetric {
        DMetric { chart, source }
    }

    /// Metric blocks at `pt` with jets of order `order`.
    pub fn blocks(&self, pt: &[f64], order: usize) -> Result<(Mat, Mat)> {
        let coords = coordinate_jets(pt, order + self.source.order_loss());
        let (g, h) = self.source.eval(&coords)?;
        let (mh, mv) = (self.chart.mh, self.chart.mv);
        if g.len() != mh || g.iter().any(|r| r.len() != mh) {
            return Err(Error::Dimension(format!("g must be {mh}×{mh}")));
        }
        if h.len() != mv || h.iter().any(|r| r.len() != mv) {
            return Err(Error::Dimension(format!("h must be {mv}×{mv}")));
        }
        let tr = |m: Mat| -> Mat { m.iter().map(|r| r.iter().map(|j| j.truncate(order)).collect()).collect() };
        Ok((tr(g), tr(h)))
    }

    /// Geometric data for connection coefficients of jet order `order`.
    pub fn at(&self, pt: &[f64], order: usize) -> Result<GeomPoint> {
        let cf = self.chart.frame(pt, order + 1)?;
        let (g, h) = self.blocks(pt, order + 1)?;
        for (name, m) in [("g", &g), ("h", &h)] {
            let d = symmetry_defect(m);
            if d > 1e-12 * (1.0 + max_abs(m)) {
                return Err(Error::Validation(format!("{name} is not symmetric (defect {d:.3e}) at {pt:?}")));
            }
        }
        let gcond = check_conditioning("g", &g, pt)?;
        let hcond = check_conditioning("h", &h, pt)?;
        let ginv = inverse(&g)?;
        let hinv = inverse(&h)?;
        Ok(GeomPoint { pt: pt.to_vec(), order, cf, g, h, ginv, hinv, gcond, hcond })
    }

    /// Checks symmetry, nondegeneracy and constancy of signature at `samples`
    /// Halton points of the domain.
    pub fn diagnose(&self, domain: &DomainBox, samples: usize) -> Result<MetricDiagnostics> {
        let mut diag = MetricDiagnostics {
            samples,
            symmetry_defect: 0.0,
            g_signature: (0, 0, 0),
            h_signature: (0, 0, 0),
            constant_signature: true,
            max_condition: 1.0,
            warnings: Vec::new(),
        };
        for (k, p) in domain.halton(samples, 0).iter().enumerate() {
            let (g, h) = self.blocks(p, 0)?;
            diag.symmetry_defect = diag.symmetry_defect.max(symmetry_defect(&g)).max(symmetry_defect(&h));
            let gc = check_conditioning("g", &g, p)?;
            let hc = check_conditioning("h", &h, p)?;
            diag.max_condition = diag.max_condition.max(gc).max(hc);
            if gc.max(hc) > COND_WARN {
                diag.warnings.push(format!("condition number {:.3e} at {p:?}", gc.max(hc)));
            }
            let (sg, sh) = (signature(&values(&g)), signature(&values(&h)));
            if k == 0 {
                diag.g_signature = sg;
                diag.h_signature = sh;
            } else if sg != diag.g_signature || sh != diag.h_signature {
                diag.constant_signature = false;
            }
        }
        if !diag.constant_signature {
            return Err(Error::Validation("signature of the d-metric changes over the domain".into()));
        }
        Ok(diag)
    }
}

fn symmetry_defect(m: &Mat) -> f64 {
    let mut d = 0.0_f64;
    for i in 0..m.len() {
        for j in 0..i {
            d = d.max((m[i][j].value() - m[j][i].value()).abs());
        }
    }
    d
}

fn max_abs(m: &Mat) -> f64 {
    m.iter().flatten().fold(0.0_f64, |a, x| a.max(x.value().abs()))
}

/// Coordinate ("off-diagonal") form of a d-metric over the frame (z̃, ṽ):
/// [[g + Nᵀ h N, Nᵀ h], [h N, h]] with `n[b][a'] = N^b_a'`.
pub fn offdiag_assemble(g: &DMatrix<f64>, h: &DMatrix<f64>, n: &DMatrix<f64>) -> DMatrix<f64> {
    let (mh, mv) = (g.nrows(), h.nrows());
    let mut out = DMatrix::zeros(mh + mv, mh + mv);
    let nth = n.transpose() * h;
    out.view_mut((0, 0), (mh, mh)).copy_from(&(g + &nth * n));
    out.view_mut((0, mh), (mh, mv)).copy_from(&nth);
    out.view_mut((mh, 0), (mv, mh)).copy_from(&nth.transpose());
    out.view_mut((mh, mh), (mv, mv)).copy_from(h);
    out
}

/// Splits a full metric over (z̃, ṽ) into (g, h, N) with N^b_c' = h^ab G_c'a.
pub fn extract_n_from_metric(full: &DMatrix<f64>, mh: usize) -> Result<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)> {
    let r = full.nrows();
    if full.ncols() != r || mh > r {
        return Err(Error::Dimension("full metric must be square".into()));
    }
    let mv = r - mh;
    let sym = (full - full.transpose()).amax();
    if sym > 1e-12 * (1.0 + full.amax()) {
        return Err(Error::Validation(format!("full metric is not symmetric (defect {sym:.3e})")));
    }
    let h = full.view((mh, mh), (mv, mv)).into_owned();
    let cond = crate::linalg::condition_number(&h);
    if cond > crate::linalg::COND_ERROR {
        return Err(Error::Singular { what: "h block".into(), point: Vec::new(), cond });
    }
    let hinv = h.clone().try_inverse().ok_or(Error::Singular { what: "h block".into(), point: Vec::new(), cond })?;
    let n = &hinv * full.view((mh, 0), (mv, mh));
    let g = full.view((0, 0), (mh, mh)).into_owned() - n.transpose() * &h * &n;
    Ok((g, h, n))
}

/// Block-triangular vielbein pair with e = identity: A = [[1, N], [0, 1]],
/// B = [[1, −N], [0, 1]] (rows = frame index). Returns (A, B, max |AB − 1|).
pub fn vielbein_transforms(n: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>, f64) {
    let (mv, mh) = (n.nrows(), n.ncols());
    let r = mh + mv;
    let mut a = DMatrix::identity(r, r);
    let mut b = DMatrix::identity(r, r);
    a.view_mut((0, mh), (mh, mv)).copy_from(&n.transpose());
    b.view_mut((0, mh), (mh, mv)).copy_from(&(-n.transpose()));
    let defect = (&a * &b - DMatrix::identity(r, r)).amax();
    (a, b, defect)
}
