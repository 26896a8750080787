//! Differentiable basis-function maps for the critic and actor.
//!
//! The supported family is multivariate monomials, either the full graded
//! basis up to a total degree or an explicit list of exponent vectors. Values,
//! gradients and per-feature Hessians are all closed-form, which is what makes
//! the benchmark value functions (`x1^2 + x2^2`, `p*x^2 + c`) exactly
//! representable with zero approximation error.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::State;

/// How many derivative levels [`FeatureMap::eval`] should produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivativeOrder {
    /// Feature values only.
    Value,
    /// Values and the `N_c x n` gradient matrix.
    Gradient,
    /// Values, gradient, and one `n x n` Hessian per feature.
    Hessian,
}

impl TryFrom<u8> for DerivativeOrder {
    type Error = Error;

    fn try_from(order: u8) -> Result<Self> {
        match order {
            0 => Ok(Self::Value),
            1 => Ok(Self::Gradient),
            2 => Ok(Self::Hessian),
            other => Err(Error::InvalidInput(format!(
                "derivative order must be 0, 1 or 2, got {other}"
            ))),
        }
    }
}

/// Result of evaluating a feature map at a point.
///
/// Derivative payloads are present only when the requested order asked for
/// them.
#[derive(Debug, Clone)]
pub struct FeatureEval {
    /// `phi(x)`, length `N_c`.
    pub values: DVector<f64>,
    /// `grad phi(x)`, `N_c x n`; row `i` is the gradient of feature `i`.
    pub gradient: Option<DMatrix<f64>>,
    /// One symmetric `n x n` Hessian per feature.
    pub hessians: Option<Vec<DMatrix<f64>>>,
}

/// An ordered list of monomial features over an `n`-dimensional state.
///
/// The ordering is graded: degree ascending, and inside one degree the
/// exponent tuples are sorted lexicographically descending (so `x1` comes
/// before `x2`, and `x1^2` before `x1*x2` before `x2^2`). The ordering is
/// stable across calls, which pins the meaning of every weight index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureMap {
    n: usize,
    exponents: Vec<Vec<u32>>,
}

impl FeatureMap {
    /// Full monomial basis of total degree `1..=degree` (or `0..=degree` when
    /// `constant` is set) over `n` state variables.
    pub fn monomials(n: usize, degree: u32, constant: bool) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput(
                "feature map needs at least one state variable".into(),
            ));
        }
        let start = if constant { 0 } else { 1 };
        if degree < start {
            return Err(Error::InvalidInput(format!(
                "monomial degree {degree} yields an empty feature list"
            )));
        }
        let mut exponents = Vec::new();
        for total in start..=degree {
            push_degree_block(&mut exponents, n, total);
        }
        Ok(Self { n, exponents })
    }

    /// Explicit list of monomial exponent vectors, kept in the given order.
    pub fn from_exponents(n: usize, exponents: Vec<Vec<u32>>) -> Result<Self> {
        if n == 0 || exponents.is_empty() {
            return Err(Error::InvalidInput(
                "feature map needs n >= 1 and at least one feature".into(),
            ));
        }
        for (i, e) in exponents.iter().enumerate() {
            if e.len() != n {
                return Err(Error::DimensionMismatch {
                    what: "feature exponent vector",
                    expected: n,
                    got: exponents[i].len(),
                });
            }
        }
        Ok(Self { n, exponents })
    }

    /// Number of features `N_c`.
    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    /// State dimension `n`.
    pub fn state_dim(&self) -> usize {
        self.n
    }

    /// Exponent vectors in feature order.
    pub fn exponents(&self) -> &[Vec<u32>] {
        &self.exponents
    }

    /// Position of the monomial with the given exponents, if present.
    pub fn position_of(&self, exponent: &[u32]) -> Option<usize> {
        self.exponents.iter().position(|e| e == exponent)
    }

    /// Evaluate the map and the requested derivative levels at `x`.
    pub fn eval(&self, x: &State, order: DerivativeOrder) -> Result<FeatureEval> {
        self.check_dim(x)?;
        let values = DVector::from_fn(self.len(), |i, _| monomial_value(&self.exponents[i], x));
        let gradient = match order {
            DerivativeOrder::Value => None,
            _ => {
                let mut g = DMatrix::zeros(self.len(), self.n);
                for (i, e) in self.exponents.iter().enumerate() {
                    for j in 0..self.n {
                        g[(i, j)] = monomial_derivative(e, x, j);
                    }
                }
                Some(g)
            }
        };
        let hessians = match order {
            DerivativeOrder::Hessian => {
                let mut hs = Vec::with_capacity(self.len());
                for e in &self.exponents {
                    let mut h = DMatrix::zeros(self.n, self.n);
                    for j in 0..self.n {
                        for k in j..self.n {
                            let v = monomial_second_derivative(e, x, j, k);
                            h[(j, k)] = v;
                            h[(k, j)] = v;
                        }
                    }
                    hs.push(h);
                }
                Some(hs)
            }
            _ => None,
        };
        Ok(FeatureEval {
            values,
            gradient,
            hessians,
        })
    }

    /// `phi(x)` only.
    pub fn values(&self, x: &State) -> Result<DVector<f64>> {
        Ok(self.eval(x, DerivativeOrder::Value)?.values)
    }

    /// `grad phi(x)` as an `N_c x n` matrix.
    pub fn gradient(&self, x: &State) -> Result<DMatrix<f64>> {
        Ok(self
            .eval(x, DerivativeOrder::Gradient)?
            .gradient
            .expect("gradient requested"))
    }

    /// All per-feature Hessians.
    pub fn hessians(&self, x: &State) -> Result<Vec<DMatrix<f64>>> {
        Ok(self
            .eval(x, DerivativeOrder::Hessian)?
            .hessians
            .expect("hessians requested"))
    }

    fn check_dim(&self, x: &State) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                what: "feature map state",
                expected: self.n,
                got: x.len(),
            });
        }
        Ok(())
    }
}

/// All exponent tuples of the given total degree, lexicographically
/// descending (first variable varies slowest).
fn push_degree_block(out: &mut Vec<Vec<u32>>, n: usize, total: u32) {
    fn rec(out: &mut Vec<Vec<u32>>, prefix: &mut Vec<u32>, vars_left: usize, total_left: u32) {
        if vars_left == 1 {
            prefix.push(total_left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for e in (0..=total_left).rev() {
            prefix.push(e);
            rec(out, prefix, vars_left - 1, total_left - e);
            prefix.pop();
        }
    }
    rec(out, &mut Vec::with_capacity(n), n, total);
}

fn monomial_value(exp: &[u32], x: &State) -> f64 {
    exp.iter()
        .zip(x.iter())
        .map(|(&e, &xi)| xi.powi(e as i32))
        .product()
}

/// d/dx_j of the monomial.
fn monomial_derivative(exp: &[u32], x: &State, j: usize) -> f64 {
    if exp[j] == 0 {
        return 0.0;
    }
    let mut v = exp[j] as f64;
    for (i, &e) in exp.iter().enumerate() {
        let e = if i == j { e - 1 } else { e };
        v *= x[i].powi(e as i32);
    }
    v
}

/// d^2/(dx_j dx_k) of the monomial.
fn monomial_second_derivative(exp: &[u32], x: &State, j: usize, k: usize) -> f64 {
    let coeff = if j == k {
        if exp[j] < 2 {
            return 0.0;
        }
        (exp[j] * (exp[j] - 1)) as f64
    } else {
        if exp[j] == 0 || exp[k] == 0 {
            return 0.0;
        }
        (exp[j] * exp[k]) as f64
    };
    let mut v = coeff;
    for (i, &e) in exp.iter().enumerate() {
        let mut e = e;
        if i == j {
            e -= 1;
        }
        if i == k {
            e -= 1;
        }
        v *= x[i].powi(e as i32);
    }
    v
}
