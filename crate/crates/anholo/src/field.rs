//! Scalar fields: anything that can be evaluated on reals and on jets.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::jets::Jet;

pub trait Field: Send + Sync {
    fn arity(&self) -> usize;

    fn eval_jet(&self, args: &[Jet]) -> Result<Jet>;

    /// Plain evaluation; agrees with the value of an order-0 jet evaluation.
    fn eval(&self, args: &[f64]) -> Result<f64> {
        let n = args.len();
        let jets: Vec<Jet> = args.iter().map(|&a| Jet::constant(n.max(1), 0, a)).collect();
        Ok(self.eval_jet(&jets)?.value())
    }

    fn describe(&self) -> String {
        "<field>".to_string()
    }
}

pub type ScalarField = Arc<dyn Field>;

impl fmt::Debug for dyn Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.describe())
    }
}

/// A field backed by a closure over jets.
pub struct FnField<F> {
    arity: usize,
    name: String,
    f: F,
}

impl<F> FnField<F>
where
    F: Fn(&[Jet]) -> Result<Jet> + Send + Sync,
{
    pub fn new(arity: usize, name: impl Into<String>, f: F) -> Self {
        FnField { arity, name: name.into(), f }
    }
}

impl<F> Field for FnField<F>
where
    F: Fn(&[Jet]) -> Result<Jet> + Send + Sync,
{
    fn arity(&self) -> usize {
        self.arity
    }

    fn eval_jet(&self, args: &[Jet]) -> Result<Jet> {
        check_arity(self.arity, args.len())?;
        (self.f)(args)
    }

    fn describe(&self) -> String {
        self.name.clone()
    }
}

pub fn fn_field<F>(arity: usize, name: &str, f: F) -> ScalarField
where
    F: Fn(&[Jet]) -> Result<Jet> + Send + Sync + 'static,
{
    Arc::new(FnField::new(arity, name, f))
}

pub struct ConstField {
    pub arity: usize,
    pub value: f64,
}

impl Field for ConstField {
    fn arity(&self) -> usize {
        self.arity
    }

    fn eval_jet(&self, args: &[Jet]) -> Result<Jet> {
        check_arity(self.arity, args.len())?;
        match args.first() {
            Some(a) => Ok(a.lift(self.value)),
            None => Ok(Jet::constant(1, 0, self.value)),
        }
    }

    fn eval(&self, _args: &[f64]) -> Result<f64> {
        Ok(self.value)
    }

    fn describe(&self) -> String {
        format!("{:?}", self.value)
    }
}

pub fn constant(arity: usize, value: f64) -> ScalarField {
    Arc::new(ConstField { arity, value })
}

/// The coordinate function selecting argument `index`.
pub fn coordinate(arity: usize, index: usize) -> ScalarField {
    fn_field(arity, &format!("arg{index}"), move |a| Ok(a[index].clone()))
}

/// Restricts a field to the leading `arity` arguments of a longer argument list.
pub struct Leading {
    pub inner: ScalarField,
    pub total: usize,
}

impl Field for Leading {
    fn arity(&self) -> usize {
        self.total
    }

    fn eval_jet(&self, args: &[Jet]) -> Result<Jet> {
        check_arity(self.total, args.len())?;
        self.inner.eval_jet(&args[..self.inner.arity()])
    }

    fn eval(&self, args: &[f64]) -> Result<f64> {
        self.inner.eval(&args[..self.inner.arity()])
    }

    fn describe(&self) -> String {
        self.inner.describe()
    }
}

pub(crate) fn check_arity(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::Dimension(format!("field of arity {expected} called with {got} arguments")));
    }
    Ok(())
}
