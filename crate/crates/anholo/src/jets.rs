//! Truncated multivariate Taylor series ("jets").
//!
//! A jet of order K in `dim` variables stores the coefficients f_α = ∂^α f / α!
//! for every multi-index with |α| ≤ K, densely, in graded-lexicographic order.
//! Lower-order jets are prefixes of higher-order ones, so truncation is a slice.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::field::Field;

/// Default maximum order used by callers that need a bound.
pub const DEFAULT_MAX_ORDER: usize = 6;

pub struct Table {
    dim: usize,
    max_order: usize,
    exps: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
    len_by_order: Vec<usize>,
    // (i, j, k) with exps[i] + exps[j] = exps[k], sorted by k
    triples: Vec<(u32, u32, u32)>,
    triples_by_order: Vec<usize>,
    // deriv[v][dst] = (src, factor): coefficient of d/dx_v
    deriv: Vec<Vec<(u32, f64)>>,
    // anti[v][src] = (dst, factor): antiderivative in x_v
    anti: Vec<Vec<(u32, f64)>>,
}

fn degree(e: &[u8]) -> usize {
    e.iter().map(|&x| x as usize).sum()
}

fn monomials(dim: usize, deg: usize, out: &mut Vec<Vec<u8>>) {
    fn rec(prefix: &mut Vec<u8>, dim: usize, left: usize, out: &mut Vec<Vec<u8>>) {
        if prefix.len() + 1 == dim {
            prefix.push(left as u8);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in (0..=left).rev() {
            prefix.push(k as u8);
            rec(prefix, dim, left - k, out);
            prefix.pop();
        }
    }
    if dim == 0 {
        if deg == 0 {
            out.push(Vec::new());
        }
        return;
    }
    rec(&mut Vec::with_capacity(dim), dim, deg, out);
}

impl Table {
    fn build(dim: usize, max_order: usize) -> Table {
        let mut exps = Vec::new();
        let mut len_by_order = Vec::with_capacity(max_order + 1);
        for d in 0..=max_order {
            monomials(dim, d, &mut exps);
            len_by_order.push(exps.len());
        }
        let index: HashMap<Vec<u8>, usize> = exps.iter().enumerate().map(|(i, e)| (e.clone(), i)).collect();

        let mut triples = Vec::new();
        let mut sum = vec![0u8; dim];
        for i in 0..exps.len() {
            let di = degree(&exps[i]);
            for j in 0..len_by_order[max_order - di] {
                for v in 0..dim {
                    sum[v] = exps[i][v] + exps[j][v];
                }
                let k = index[&sum];
                triples.push((i as u32, j as u32, k as u32));
            }
        }
        triples.sort_by_key(|t| (t.2, t.0));
        let mut triples_by_order = Vec::with_capacity(max_order + 1);
        for d in 0..=max_order {
            let bound = len_by_order[d] as u32;
            triples_by_order.push(triples.partition_point(|t| t.2 < bound));
        }

        let mut deriv = vec![Vec::new(); dim];
        let mut anti = vec![Vec::new(); dim];
        let below = if max_order == 0 { 0 } else { len_by_order[max_order - 1] };
        for v in 0..dim {
            for dst in 0..below {
                let mut e = exps[dst].clone();
                e[v] += 1;
                let src = index[&e];
                deriv[v].push((src as u32, e[v] as f64));
                anti[v].push((src as u32, 1.0 / e[v] as f64));
            }
        }
        Table { dim, max_order, exps, index, len_by_order, triples, triples_by_order, deriv, anti }
    }

    /// Shared table for `dim` variables, valid at least up to `order`.
    pub fn get(dim: usize, order: usize) -> Arc<Table> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Table>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().unwrap_or_else(|p| p.into_inner());
        if let Some(t) = guard.get(&dim) {
            if t.max_order >= order {
                return t.clone();
            }
        }
        let t = Arc::new(Table::build(dim, order.max(2)));
        guard.insert(dim, t.clone());
        t
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self, order: usize) -> usize {
        self.len_by_order[order]
    }

    pub fn exponents(&self, i: usize) -> &[u8] {
        &self.exps[i]
    }

    pub fn position(&self, alpha: &[u8]) -> Option<usize> {
        self.index.get(alpha).copied()
    }
}

#[derive(Clone)]
pub struct Jet {
    tab: Arc<Table>,
    order: usize,
    c: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Jet(dim={}, order={}, {:?})", self.tab.dim, self.order, self.c)
    }
}

impl Jet {
    pub fn constant(dim: usize, order: usize, value: f64) -> Jet {
        let tab = Table::get(dim, order);
        let mut c = vec![0.0; tab.len(order)];
        c[0] = value;
        Jet { tab, order, c }
    }

    /// The coordinate function x_v centred at `value`.
    pub fn variable(dim: usize, order: usize, v: usize, value: f64) -> Jet {
        let mut j = Jet::constant(dim, order, value);
        if order > 0 {
            j.c[1 + v] = 1.0;
        }
        j
    }

    /// A constant jet sharing the shape of `self`.
    pub fn lift(&self, value: f64) -> Jet {
        let mut c = vec![0.0; self.c.len()];
        c[0] = value;
        Jet { tab: self.tab.clone(), order: self.order, c }
    }

    pub fn zero_like(&self) -> Jet {
        self.lift(0.0)
    }

    pub fn from_coeffs(dim: usize, order: usize, coeffs: Vec<f64>) -> Result<Jet> {
        let tab = Table::get(dim, order);
        if coeffs.len() != tab.len(order) {
            return Err(Error::Dimension(format!(
                "{} coefficients for a jet of order {} in {} variables (need {})",
                coeffs.len(),
                order,
                dim,
                tab.len(order)
            )));
        }
        Ok(Jet { tab, order, c: coeffs })
    }

    pub fn dim(&self) -> usize {
        self.tab.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c
    }

    pub fn table(&self) -> &Table {
        &self.tab
    }

    /// Taylor coefficient ∂^α f / α!; zero for |α| > order.
    pub fn coeff(&self, alpha: &[u8]) -> f64 {
        if degree(alpha) > self.order {
            return 0.0;
        }
        self.tab.position(alpha).map(|i| self.c[i]).unwrap_or(0.0)
    }

    /// The partial derivative ∂^α f at the expansion point.
    pub fn partial(&self, alpha: &[u8]) -> f64 {
        let fact: f64 = alpha.iter().map(|&k| (1..=k as u32).product::<u32>() as f64).product();
        self.coeff(alpha) * fact
    }

    pub fn truncate(&self, order: usize) -> Jet {
        if order >= self.order {
            return self.clone();
        }
        Jet { tab: self.tab.clone(), order, c: self.c[..self.tab.len(order)].to_vec() }
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().all(|x| x.is_finite())
    }

    /// ∂f/∂x_v, one order lower.
    pub fn derivative(&self, v: usize) -> Jet {
        assert!(self.order > 0, "derivative of an order-0 jet carries no information");
        let order = self.order - 1;
        let n = self.tab.len(order);
        let table = &self.tab.deriv[v];
        let c = (0..n).map(|dst| {
            let (src, f) = table[dst];
            self.c[src as usize] * f
        });
        Jet { tab: self.tab.clone(), order, c: c.collect() }
    }

    /// Antiderivative in x_v vanishing on x_v = x_v(0), one order higher.
    pub fn antiderivative(&self, v: usize) -> Jet {
        let order = self.order + 1;
        let tab = if self.tab.max_order >= order { self.tab.clone() } else { Table::get(self.tab.dim, order) };
        let mut c = vec![0.0; tab.len(order)];
        for (src, &x) in self.c.iter().enumerate() {
            let (dst, f) = tab.anti[v][src];
            c[dst as usize] = x * f;
        }
        Jet { tab, order, c }
    }

    fn pair_table(&self, o: &Jet) -> Arc<Table> {
        assert_eq!(self.tab.dim, o.tab.dim, "jets of different dimension combined");
        if self.tab.max_order >= o.tab.max_order {
            self.tab.clone()
        } else {
            o.tab.clone()
        }
    }

    fn zip(&self, o: &Jet, f: impl Fn(f64, f64) -> f64) -> Jet {
        let tab = self.pair_table(o);
        let order = self.order.min(o.order);
        let n = tab.len(order);
        let c = (0..n).map(|i| f(self.c[i], o.c[i])).collect();
        Jet { tab, order, c }
    }

    fn map(&self, f: impl Fn(f64) -> f64) -> Jet {
        Jet { tab: self.tab.clone(), order: self.order, c: self.c.iter().map(|&x| f(x)).collect() }
    }

    pub fn scale(&self, s: f64) -> Jet {
        self.map(|x| x * s)
    }

    pub fn mul_jet(&self, o: &Jet) -> Jet {
        let tab = self.pair_table(o);
        let order = self.order.min(o.order);
        let mut c = vec![0.0; tab.len(order)];
        let (a, b) = (&self.c, &o.c);
        for &(i, j, k) in &tab.triples[..tab.triples_by_order[order]] {
            c[k as usize] += a[i as usize] * b[j as usize];
        }
        Jet { tab, order, c }
    }

    /// Σ_k coeffs[k] (f − f(0))^k, i.e. composition with a univariate series.
    pub fn compose_series(&self, coeffs: &[f64]) -> Jet {
        let k_max = self.order.min(coeffs.len().saturating_sub(1));
        let mut t = self.clone();
        t.c[0] = 0.0;
        let mut r = self.lift(coeffs[k_max]);
        for k in (0..k_max).rev() {
            r = r.mul_jet(&t);
            r.c[0] += coeffs[k];
        }
        r
    }

    pub fn recip(&self) -> Result<Jet> {
        let a0 = self.value();
        if a0 == 0.0 || !a0.is_finite() {
            return Err(Error::domain("1/x", format!("division by {a0}")));
        }
        let mut co = Vec::with_capacity(self.order + 1);
        let mut p = 1.0 / a0;
        for _ in 0..=self.order {
            co.push(p);
            p *= -1.0 / a0;
        }
        Ok(self.compose_series(&co))
    }

    pub fn div_jet(&self, o: &Jet) -> Result<Jet> {
        Ok(self.mul_jet(&o.recip()?))
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        let mut co = Vec::with_capacity(self.order + 1);
        let mut f = 1.0;
        for k in 0..=self.order {
            if k > 0 {
                f /= k as f64;
            }
            co.push(e * f);
        }
        self.compose_series(&co)
    }

    fn trig(&self, phase: usize) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cycle = [s, c, -s, -c];
        let mut co = Vec::with_capacity(self.order + 1);
        let mut f = 1.0;
        for k in 0..=self.order {
            if k > 0 {
                f /= k as f64;
            }
            co.push(cycle[(k + phase) % 4] * f);
        }
        self.compose_series(&co)
    }

    pub fn sin(&self) -> Jet {
        self.trig(0)
    }

    pub fn cos(&self) -> Jet {
        self.trig(1)
    }

    pub fn ln(&self) -> Result<Jet> {
        let a0 = self.value();
        if !(a0 > 0.0) {
            return Err(Error::domain("log", format!("logarithm of nonpositive value {a0}")));
        }
        let mut co = vec![a0.ln()];
        let mut p = 1.0;
        for k in 1..=self.order {
            p /= a0;
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            co.push(sign * p / k as f64);
        }
        Ok(self.compose_series(&co))
    }

    /// (a0 + t)^r for real r and a0 > 0.
    fn binomial_series(&self, r: f64) -> Jet {
        let a0 = self.value();
        let mut co = Vec::with_capacity(self.order + 1);
        let mut b = 1.0;
        for k in 0..=self.order {
            if k > 0 {
                b *= (r - (k as f64 - 1.0)) / k as f64;
            }
            co.push(b * a0.powf(r - k as f64));
        }
        self.compose_series(&co)
    }

    pub fn sqrt(&self) -> Result<Jet> {
        let a0 = self.value();
        if a0 > 0.0 {
            Ok(self.binomial_series(0.5))
        } else if a0 == 0.0 && self.order == 0 {
            Ok(self.lift(0.0))
        } else {
            Err(Error::domain("sqrt", format!("square root not smooth at {a0}")))
        }
    }

    pub fn powi(&self, n: i64) -> Result<Jet> {
        if n < 0 {
            return self.powi(-n)?.recip();
        }
        let mut result = self.lift(1.0);
        let mut base = self.clone();
        let mut e = n as u64;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul_jet(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul_jet(&base);
            }
        }
        Ok(result)
    }

    pub fn powf(&self, r: f64) -> Result<Jet> {
        if r.fract() == 0.0 && r.abs() < 1e9 {
            return self.powi(r as i64);
        }
        let a0 = self.value();
        if a0 > 0.0 {
            Ok(self.binomial_series(r))
        } else if a0 == 0.0 && r > 0.0 && self.order == 0 {
            Ok(self.lift(0.0))
        } else {
            Err(Error::domain("pow", format!("non-integer power {r} of {a0}")))
        }
    }

    pub fn abs(&self) -> Result<Jet> {
        let a0 = self.value();
        if a0 > 0.0 {
            Ok(self.clone())
        } else if a0 < 0.0 {
            Ok(-self)
        } else if self.order == 0 {
            Ok(self.lift(0.0))
        } else {
            Err(Error::domain("abs", "abs is not differentiable at 0"))
        }
    }

    /// Substitutes jets for the variables of a Taylor polynomial centred at the
    /// inputs' values: Σ_α self_α Π_i (inputs_i − inputs_i(0))^α_i.
    pub fn compose(&self, inputs: &[Jet]) -> Jet {
        assert_eq!(inputs.len(), self.dim(), "compose: wrong number of inputs");
        let template = &inputs[0];
        let order = inputs.iter().map(|j| j.order).min().unwrap_or(0);
        let deltas: Vec<Jet> = inputs
            .iter()
            .map(|j| {
                let mut d = j.truncate(order);
                d.c[0] = 0.0;
                d
            })
            .collect();
        let k_max = self.order.min(order);
        let mut powers: Vec<Vec<Jet>> = Vec::with_capacity(deltas.len());
        for d in &deltas {
            let mut p = vec![d.lift(1.0).truncate(order)];
            for k in 1..=k_max {
                let next = p[k - 1].mul_jet(d);
                p.push(next);
            }
            powers.push(p);
        }
        let mut out = template.truncate(order).lift(0.0);
        for idx in 0..self.tab.len(k_max) {
            let coef = self.c[idx];
            if coef == 0.0 {
                continue;
            }
            let alpha = &self.tab.exps[idx];
            let mut term = out.lift(coef);
            for (v, &k) in alpha.iter().enumerate() {
                if k > 0 {
                    term = term.mul_jet(&powers[v][k as usize]);
                }
            }
            out = &out + &term;
        }
        out
    }
}

/// Coordinate jets x_v centred at `point`.
pub fn coordinate_jets(point: &[f64], order: usize) -> Vec<Jet> {
    let dim = point.len();
    (0..dim).map(|v| Jet::variable(dim, order, v, point[v])).collect()
}

/// Evaluates a field with exact derivatives up to `order` at `point`.
pub fn jet_eval(f: &dyn Field, point: &[f64], order: usize) -> Result<Jet> {
    if point.len() != f.arity() {
        return Err(Error::Dimension(format!("point of length {} for a field of arity {}", point.len(), f.arity())));
    }
    f.eval_jet(&coordinate_jets(point, order))
}

fn central(f: &dyn Field, point: &[f64], alpha: &[usize], h: f64) -> Result<f64> {
    // Tensor product of one-dimensional central differences.
    let mut stencil: Vec<(Vec<f64>, f64)> = vec![(point.to_vec(), 1.0)];
    for (v, &d) in alpha.iter().enumerate() {
        if d == 0 {
            continue;
        }
        let mut next = Vec::with_capacity(stencil.len() * (d + 1));
        for (p, w) in &stencil {
            let mut binom = 1.0;
            for j in 0..=d {
                if j > 0 {
                    binom = binom * (d - j + 1) as f64 / j as f64;
                }
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                let mut q = p.clone();
                q[v] += (d as f64 / 2.0 - j as f64) * h;
                next.push((q, w * sign * binom / h.powi(d as i32)));
            }
        }
        stencil = next;
    }
    let mut acc = 0.0;
    for (p, w) in stencil {
        acc += w * f.eval(&p)?;
    }
    Ok(acc)
}

/// Finite-difference estimate of ∂^α f at `point`: central differences at
/// steps h and h/2 combined by one Richardson step, error O(h⁴).
pub fn fd_oracle(f: &dyn Field, point: &[f64], alpha: &[usize], step: f64) -> Result<f64> {
    if alpha.len() != point.len() {
        return Err(Error::Dimension("multi-index length differs from point length".into()));
    }
    if alpha.iter().sum::<usize>() > 4 {
        return Err(Error::Precondition("fd_oracle supports total degree at most 4".into()));
    }
    if !(step > 0.0) {
        return Err(Error::Precondition("fd_oracle step must be positive".into()));
    }
    let d1 = central(f, point, alpha, step)?;
    let d2 = central(f, point, alpha, step / 2.0)?;
    Ok((4.0 * d2 - d1) / 3.0)
}

macro_rules! binop {
    ($tr:ident, $m:ident, $body:expr) => {
        impl $tr<&Jet> for &Jet {
            type Output = Jet;
            fn $m(self, o: &Jet) -> Jet {
                let f: fn(&Jet, &Jet) -> Jet = $body;
                f(self, o)
            }
        }
        impl $tr<Jet> for Jet {
            type Output = Jet;
            fn $m(self, o: Jet) -> Jet {
                (&self).$m(&o)
            }
        }
        impl $tr<&Jet> for Jet {
            type Output = Jet;
            fn $m(self, o: &Jet) -> Jet {
                (&self).$m(o)
            }
        }
        impl $tr<Jet> for &Jet {
            type Output = Jet;
            fn $m(self, o: Jet) -> Jet {
                self.$m(&o)
            }
        }
    };
}

binop!(Add, add, |a, b| a.zip(b, |x, y| x + y));
binop!(Sub, sub, |a, b| a.zip(b, |x, y| x - y));
binop!(Mul, mul, |a, b| a.mul_jet(b));

impl Add<f64> for &Jet {
    type Output = Jet;
    fn add(self, s: f64) -> Jet {
        let mut r = self.clone();
        r.c[0] += s;
        r
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, s: f64) -> Jet {
        self.c[0] += s;
        self
    }
}

impl Sub<f64> for &Jet {
    type Output = Jet;
    fn sub(self, s: f64) -> Jet {
        self + (-s)
    }
}

impl Mul<f64> for &Jet {
    type Output = Jet;
    fn mul(self, s: f64) -> Jet {
        self.scale(s)
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, s: f64) -> Jet {
        self.scale(s)
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.map(|x| -x)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.map(|x| -x)
    }
}
