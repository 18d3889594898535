//! Parameterized square polynomial systems `F(x; p)`.
//!
//! A [`PolySystem`] has `N` variables, `P` parameters and `N` equations. Every
//! polynomial is stored expanded over the combined list `(x_1..x_N, p_1..p_P)`
//! with complex coefficients; `is_real` records whether all coefficients are
//! real. Values and Jacobians are evaluated through a compiled sparse form
//! that is generic over [`Scalar`], so real systems can be evaluated in pure
//! real arithmetic.

mod builtins;
mod parse;
mod poly;

use std::ops::Deref;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::Scalar;

pub use builtins::{builtin, BuiltinName};
pub use parse::{parse_system, print_system};
pub use poly::{Monomial, Polynomial};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolyError {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("undeclared identifier `{name}` at {line}:{col}")]
    Undeclared { line: usize, col: usize, name: String },
    #[error("equation on line {line} is identically zero")]
    ZeroEquation { line: usize },
    #[error("system is not square: {vars} variables but {equations} equations")]
    NonSquare { vars: usize, equations: usize },
    #[error("system needs at least one variable and one parameter")]
    Empty,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("unknown builtin system `{0}`")]
    UnknownBuiltin(String),
}

/// A point with complex coordinates (a solution or a parameter value).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CPoint(pub Vec<Complex64>);

/// A point with real coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RPoint(pub Vec<f64>);

impl Deref for CPoint {
    type Target = [Complex64];
    fn deref(&self) -> &[Complex64] {
        &self.0
    }
}

impl Deref for RPoint {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl CPoint {
    pub fn from_real(v: &[f64]) -> Self {
        CPoint(v.iter().map(|&r| Complex64::new(r, 0.0)).collect())
    }

    pub fn conj(&self) -> Self {
        CPoint(self.0.iter().map(|z| z.conj()).collect())
    }

    /// Largest imaginary part in modulus.
    pub fn max_imag(&self) -> f64 {
        self.0.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    pub fn real_part(&self) -> RPoint {
        RPoint(self.0.iter().map(|z| z.re).collect())
    }

    pub fn dist(&self, other: &CPoint) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn norm(&self) -> f64 {
        crate::linalg::norm2(&self.0)
    }
}

impl RPoint {
    pub fn to_complex(&self) -> CPoint {
        CPoint::from_real(&self.0)
    }

    pub fn dist(&self, other: &RPoint) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }
}

impl From<Vec<Complex64>> for CPoint {
    fn from(v: Vec<Complex64>) -> Self {
        CPoint(v)
    }
}

impl From<Vec<f64>> for RPoint {
    fn from(v: Vec<f64>) -> Self {
        RPoint(v)
    }
}

/// Sparse term used by the evaluator: coefficient and `(index, exponent)` pairs.
#[derive(Debug, Clone)]
struct Term {
    coeff: Complex64,
    factors: Vec<(usize, u32)>,
}

#[derive(Debug, Clone, Default)]
struct Compiled {
    values: Vec<Vec<Term>>,
    /// `d_dz[eq][k]`: derivative of equation `eq` in indeterminate `k`.
    d_dz: Vec<Vec<Vec<Term>>>,
}

fn compile_poly(p: &Polynomial) -> Vec<Term> {
    p.terms()
        .iter()
        .map(|m| Term {
            coeff: m.coefficient,
            factors: m.exponents.iter().enumerate().filter(|(_, &e)| e > 0).map(|(k, &e)| (k, e)).collect(),
        })
        .collect()
}

#[inline]
fn eval_terms<T: Scalar>(terms: &[Term], x: &[T], p: &[T]) -> T {
    let n = x.len();
    let mut acc = T::zero();
    for t in terms {
        let mut v = T::from_c64(t.coeff);
        for &(k, e) in &t.factors {
            let z = if k < n { x[k] } else { p[k - n] };
            v *= if e == 1 { z } else { z.powu(e) };
        }
        acc += v;
    }
    acc
}

/// Square parameterized polynomial system.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "SystemRepr", into = "SystemRepr")]
pub struct PolySystem {
    var_names: Vec<String>,
    param_names: Vec<String>,
    equations: Vec<Polynomial>,
    is_real: bool,
    compiled: Compiled,
}

#[derive(Serialize, Deserialize)]
struct SystemRepr {
    variables: Vec<String>,
    parameters: Vec<String>,
    dsl: String,
}

impl TryFrom<SystemRepr> for PolySystem {
    type Error = PolyError;
    fn try_from(r: SystemRepr) -> Result<Self, PolyError> {
        parse_system(&r.dsl)
    }
}

impl From<PolySystem> for SystemRepr {
    fn from(s: PolySystem) -> Self {
        SystemRepr { variables: s.var_names.clone(), parameters: s.param_names.clone(), dsl: print_system(&s) }
    }
}

impl PolySystem {
    pub fn new(var_names: Vec<String>, param_names: Vec<String>, equations: Vec<Polynomial>) -> Result<Self, PolyError> {
        if var_names.is_empty() || param_names.is_empty() {
            return Err(PolyError::Empty);
        }
        if equations.len() != var_names.len() {
            return Err(PolyError::NonSquare { vars: var_names.len(), equations: equations.len() });
        }
        let arity = var_names.len() + param_names.len();
        for (k, eq) in equations.iter().enumerate() {
            if eq.arity() != arity {
                return Err(PolyError::Dimension { expected: arity, got: eq.arity() });
            }
            if eq.is_zero() {
                return Err(PolyError::ZeroEquation { line: k + 1 });
            }
        }
        let is_real = equations.iter().all(Polynomial::is_real);
        let compiled = Compiled {
            values: equations.iter().map(compile_poly).collect(),
            d_dz: equations.iter().map(|eq| (0..arity).map(|k| compile_poly(&eq.derivative(k))).collect()).collect(),
        };
        Ok(PolySystem { var_names, param_names, equations, is_real, compiled })
    }

    pub fn num_vars(&self) -> usize {
        self.var_names.len()
    }

    pub fn num_params(&self) -> usize {
        self.param_names.len()
    }

    pub fn var_names(&self) -> &[String] {
        &self.var_names
    }

    pub fn param_names(&self) -> &[String] {
        &self.param_names
    }

    pub fn equations(&self) -> &[Polynomial] {
        &self.equations
    }

    pub fn is_real(&self) -> bool {
        self.is_real
    }

    /// Degree of equation `k` in the variables only.
    pub fn equation_degree(&self, k: usize) -> u32 {
        self.equations[k].degree_in(0..self.num_vars())
    }

    /// Bezout number: product of the equation degrees in `x`.
    pub fn total_degree(&self) -> u64 {
        (0..self.num_vars()).map(|k| self.equation_degree(k) as u64).product()
    }

    fn check_dims(&self, x: usize, p: usize) -> Result<(), PolyError> {
        if x != self.num_vars() {
            return Err(PolyError::Dimension { expected: self.num_vars(), got: x });
        }
        if p != self.num_params() {
            return Err(PolyError::Dimension { expected: self.num_params(), got: p });
        }
        Ok(())
    }

    /// `F(x; p)`.
    pub fn evaluate(&self, x: &CPoint, p: &CPoint) -> Result<CPoint, PolyError> {
        self.check_dims(x.len(), p.len())?;
        let mut out = vec![Complex64::new(0.0, 0.0); self.num_vars()];
        self.eval_into(x, p, &mut out);
        Ok(CPoint(out))
    }

    /// Row-major `N x N` Jacobian in the variables.
    pub fn jacobian_x(&self, x: &CPoint, p: &CPoint) -> Result<Vec<Vec<Complex64>>, PolyError> {
        self.check_dims(x.len(), p.len())?;
        let n = self.num_vars();
        let mut buf = vec![Complex64::new(0.0, 0.0); n * n];
        self.jac_x_into(x, p, &mut buf);
        Ok(buf.chunks(n).map(<[_]>::to_vec).collect())
    }

    /// Row-major `N x P` Jacobian in the parameters.
    pub fn jacobian_p(&self, x: &CPoint, p: &CPoint) -> Result<Vec<Vec<Complex64>>, PolyError> {
        self.check_dims(x.len(), p.len())?;
        let np = self.num_params();
        let mut buf = vec![Complex64::new(0.0, 0.0); self.num_vars() * np];
        self.jac_p_into(x, p, &mut buf);
        Ok(buf.chunks(np).map(<[_]>::to_vec).collect())
    }

    /// Unchecked evaluation kernel; `out.len() == N`.
    pub fn eval_into<T: Scalar>(&self, x: &[T], p: &[T], out: &mut [T]) {
        for (o, terms) in out.iter_mut().zip(&self.compiled.values) {
            *o = eval_terms(terms, x, p);
        }
    }

    /// Unchecked Jacobian kernel in `x`; `out` is `N x N` row-major.
    pub fn jac_x_into<T: Scalar>(&self, x: &[T], p: &[T], out: &mut [T]) {
        let n = self.num_vars();
        for (i, row) in self.compiled.d_dz.iter().enumerate() {
            for j in 0..n {
                out[i * n + j] = eval_terms(&row[j], x, p);
            }
        }
    }

    /// Unchecked Jacobian kernel in `p`; `out` is `N x P` row-major.
    pub fn jac_p_into<T: Scalar>(&self, x: &[T], p: &[T], out: &mut [T]) {
        let n = self.num_vars();
        let np = self.num_params();
        for (i, row) in self.compiled.d_dz.iter().enumerate() {
            for j in 0..np {
                out[i * np + j] = eval_terms(&row[n + j], x, p);
            }
        }
    }

    /// `J_p(x, p) * dp`, written into `out` (length `N`).
    pub fn jac_p_times<T: Scalar>(&self, x: &[T], p: &[T], dp: &[T], out: &mut [T]) {
        let n = self.num_vars();
        for (i, row) in self.compiled.d_dz.iter().enumerate() {
            let mut acc = T::zero();
            for (j, &d) in dp.iter().enumerate() {
                if d != T::zero() {
                    acc += eval_terms(&row[n + j], x, p) * d;
                }
            }
            out[i] = acc;
        }
    }

    /// Substitutes a parameter value, giving an `N`-variable system with no
    /// parameters, returned as plain polynomials over `x`.
    pub fn specialize(&self, p: &CPoint) -> Vec<Polynomial> {
        let n = self.num_vars();
        let positions: Vec<usize> = (n..n + self.num_params()).collect();
        self.equations.iter().map(|eq| eq.substitute(&positions, p)).collect()
    }
}
