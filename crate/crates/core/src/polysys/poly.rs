use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// A single term `coefficient * prod z_k^exponents[k]` over the combined
/// variable-then-parameter list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coefficient: Complex64,
    pub exponents: Vec<u32>,
}

impl Monomial {
    pub fn degree_in(&self, range: std::ops::Range<usize>) -> u32 {
        self.exponents[range].iter().sum()
    }
}

/// Expanded polynomial: like terms combined, zero terms removed, terms kept
/// in descending exponent order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    arity: usize,
    terms: Vec<Monomial>,
}

impl Polynomial {
    pub fn zero(arity: usize) -> Self {
        Polynomial { arity, terms: Vec::new() }
    }

    pub fn constant(arity: usize, c: Complex64) -> Self {
        Self::from_terms(arity, vec![(c, vec![0; arity])])
    }

    pub fn real(arity: usize, c: f64) -> Self {
        Self::constant(arity, Complex64::new(c, 0.0))
    }

    /// The indeterminate with index `k`.
    pub fn indeterminate(arity: usize, k: usize) -> Self {
        let mut e = vec![0; arity];
        e[k] = 1;
        Self::from_terms(arity, vec![(Complex64::new(1.0, 0.0), e)])
    }

    pub fn from_terms(arity: usize, terms: impl IntoIterator<Item = (Complex64, Vec<u32>)>) -> Self {
        let mut acc: BTreeMap<Vec<u32>, Complex64> = BTreeMap::new();
        for (c, e) in terms {
            assert_eq!(e.len(), arity, "exponent vector length");
            *acc.entry(e).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        let terms = acc
            .into_iter()
            .rev()
            .filter(|(_, c)| c.re != 0.0 || c.im != 0.0)
            .map(|(exponents, coefficient)| Monomial { coefficient, exponents })
            .collect();
        Polynomial { arity, terms }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_real(&self) -> bool {
        self.terms.iter().all(|t| t.coefficient.im == 0.0)
    }

    /// Total degree in the indeterminates `range`.
    pub fn degree_in(&self, range: std::ops::Range<usize>) -> u32 {
        self.terms.iter().map(|t| t.degree_in(range.clone())).max().unwrap_or(0)
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::real(self.arity, 1.0);
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self::from_terms(self.arity, self.terms.iter().map(|t| (t.coefficient * c, t.exponents.clone())))
    }

    /// Formal partial derivative with respect to indeterminate `k`.
    pub fn derivative(&self, k: usize) -> Self {
        Self::from_terms(
            self.arity,
            self.terms.iter().filter(|t| t.exponents[k] > 0).map(|t| {
                let mut e = t.exponents.clone();
                e[k] -= 1;
                (t.coefficient * t.exponents[k] as f64, e)
            }),
        )
    }

    /// Substitutes fixed values for the indeterminates at `positions`, returning a
    /// polynomial over the remaining indeterminates (kept in order).
    pub fn substitute(&self, positions: &[usize], values: &[Complex64]) -> Self {
        let keep: Vec<usize> = (0..self.arity).filter(|k| !positions.contains(k)).collect();
        Self::from_terms(
            keep.len(),
            self.terms.iter().map(|t| {
                let mut c = t.coefficient;
                for (&pos, &v) in positions.iter().zip(values) {
                    for _ in 0..t.exponents[pos] {
                        c *= v;
                    }
                }
                (c, keep.iter().map(|&k| t.exponents[k]).collect())
            }),
        )
    }

    /// Re-embeds into a larger indeterminate list; `map[k]` is the new index of old indeterminate `k`.
    pub fn embed(&self, new_arity: usize, map: &[usize]) -> Self {
        Self::from_terms(
            new_arity,
            self.terms.iter().map(|t| {
                let mut e = vec![0; new_arity];
                for (k, &x) in t.exponents.iter().enumerate() {
                    e[map[k]] += x;
                }
                (t.coefficient, e)
            }),
        )
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.arity, rhs.arity);
        Polynomial::from_terms(self.arity, self.terms.iter().chain(rhs.terms.iter()).map(|t| (t.coefficient, t.exponents.clone())))
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self + &(-rhs)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.arity, rhs.arity);
        let mut out = Vec::with_capacity(self.terms.len() * rhs.terms.len());
        for a in &self.terms {
            for b in &rhs.terms {
                let e = a.exponents.iter().zip(&b.exponents).map(|(x, y)| x + y).collect();
                out.push((a.coefficient * b.coefficient, e));
            }
        }
        Polynomial::from_terms(self.arity, out)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Polynomial {
            type Output = Polynomial;
            fn $m(self, rhs: Polynomial) -> Polynomial {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn expansion_combines_like_terms() {
        let x = Polynomial::indeterminate(2, 0);
        let y = Polynomial::indeterminate(2, 1);
        let p = (&x + &y).pow(2) - (&x - &y).pow(2);
        // (x+y)^2 - (x-y)^2 = 4xy
        assert_eq!(p.terms().len(), 1);
        assert_eq!(p.terms()[0].exponents, vec![1, 1]);
        assert_eq!(p.terms()[0].coefficient, c(4.0));
    }

    #[test]
    fn cancellation_gives_zero() {
        let x = Polynomial::indeterminate(1, 0);
        assert!((&x - &x).is_zero());
    }

    #[test]
    fn derivative_and_substitution() {
        let x = Polynomial::indeterminate(2, 0);
        let p = Polynomial::indeterminate(2, 1);
        let f = &(&x.pow(3) * &p) + &Polynomial::real(2, 5.0);
        let d = f.derivative(0);
        assert_eq!(d.terms()[0].coefficient, c(3.0));
        assert_eq!(d.terms()[0].exponents, vec![2, 1]);
        let g = f.substitute(&[1], &[c(2.0)]);
        assert_eq!(g.arity(), 1);
        assert_eq!(g.terms()[0].coefficient, c(2.0));
        assert_eq!(g.terms()[1].coefficient, c(5.0));
    }
}
