use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{CPoint, PolyError, PolySystem, Polynomial, RPoint};

/// The systems shipped with the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BuiltinName {
    /// `x1^2 - x2^2 - p1 = 0`, `2 x1 x2 - p2 = 0`.
    Ex21,
    /// `x^2 + 1 - p^2 = 0`.
    Univariate,
    /// `Ex21` with the first equation multiplied by `x1^2 + p1`.
    Modified34,
    /// Steady states of three Kuramoto oscillators with `theta_3 = 0`.
    Kuramoto3,
    /// Planar 3RPR forward kinematics, leg 3 fixed.
    Rpr3,
}

impl BuiltinName {
    pub const ALL: [BuiltinName; 5] =
        [BuiltinName::Ex21, BuiltinName::Univariate, BuiltinName::Modified34, BuiltinName::Kuramoto3, BuiltinName::Rpr3];

    pub fn as_str(self) -> &'static str {
        match self {
            BuiltinName::Ex21 => "ex21",
            BuiltinName::Univariate => "univariate",
            BuiltinName::Modified34 => "modified34",
            BuiltinName::Kuramoto3 => "kuramoto3",
            BuiltinName::Rpr3 => "rpr3",
        }
    }
}

impl BuiltinName {
    /// Default base parameter point.
    pub fn base_point(self) -> Vec<f64> {
        match self {
            BuiltinName::Ex21 => vec![1.0, 0.0],
            BuiltinName::Univariate => vec![2.0],
            BuiltinName::Modified34 => vec![-1.0, 0.0],
            BuiltinName::Kuramoto3 => vec![0.0, 0.0],
            BuiltinName::Rpr3 => vec![75.0, 70.0],
        }
    }

    /// Real solution labels 1..R at the default base point, when a fixed
    /// numbering is shipped; `None` means lexicographic order.
    pub fn real_labels(self) -> Option<Vec<RPoint>> {
        let h = 3f64.sqrt() / 2.0;
        match self {
            // The two solutions that survive the unit loop come first.
            BuiltinName::Modified34 => {
                Some(vec![RPoint(vec![0.0, 1.0]), RPoint(vec![0.0, -1.0]), RPoint(vec![1.0, 0.0]), RPoint(vec![-1.0, 0.0])])
            }
            BuiltinName::Kuramoto3 => Some(vec![
                RPoint(vec![0.0, 1.0, 0.0, 1.0]),
                RPoint(vec![0.0, 1.0, 0.0, -1.0]),
                RPoint(vec![0.0, -1.0, 0.0, 1.0]),
                RPoint(vec![0.0, -1.0, 0.0, -1.0]),
                RPoint(vec![h, -0.5, -h, -0.5]),
                RPoint(vec![-h, -0.5, h, -0.5]),
            ]),
            _ => None,
        }
    }

    /// Complex solution order 1..D at the default base point, when one is shipped.
    pub fn complex_order(self) -> Option<Vec<CPoint>> {
        let c = |re: f64, im: f64| Complex64::new(re, im);
        match self {
            BuiltinName::Ex21 => Some(vec![
                CPoint(vec![c(1.0, 0.0), c(0.0, 0.0)]),
                CPoint(vec![c(-1.0, 0.0), c(0.0, 0.0)]),
                CPoint(vec![c(0.0, 0.0), c(0.0, 1.0)]),
                CPoint(vec![c(0.0, 0.0), c(0.0, -1.0)]),
            ]),
            _ => None,
        }
    }
}

impl fmt::Display for BuiltinName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BuiltinName {
    type Err = PolyError;
    fn from_str(s: &str) -> Result<Self, PolyError> {
        BuiltinName::ALL.into_iter().find(|b| b.as_str() == s).ok_or_else(|| PolyError::UnknownBuiltin(s.to_string()))
    }
}

/// 3RPR geometry: platform attachments `(0,0)`, `(A2_PLAT,0)`, `(A3_PLAT,B3_PLAT)`,
/// base anchors `(0,0)`, `(A2_BASE,0)`, `(A3_BASE,B3_BASE)`, squared length of leg 3.
pub mod rpr3_constants {
    pub const A2_PLAT: f64 = 14.0;
    pub const A3_PLAT: f64 = 7.0;
    pub const B3_PLAT: f64 = 10.0;
    pub const A2_BASE: f64 = 16.0;
    pub const A3_BASE: f64 = 9.0;
    pub const B3_BASE: f64 = 6.0;
    pub const C3: f64 = 100.0;
}

fn names(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

type EqBuilder<'a> = &'a dyn Fn(&dyn Fn(usize) -> Polynomial, &dyn Fn(f64) -> Polynomial) -> Vec<Polynomial>;

/// Builds one of the shipped systems.
pub fn builtin(name: BuiltinName) -> PolySystem {
    let build = |vars: &[&str], pars: &[&str], eqs: EqBuilder| {
        let arity = vars.len() + pars.len();
        let z = move |k: usize| Polynomial::indeterminate(arity, k);
        let c = move |v: f64| Polynomial::real(arity, v);
        PolySystem::new(names(vars), names(pars), eqs(&z, &c)).expect("builtin systems are well formed")
    };
    match name {
        BuiltinName::Ex21 => build(&["x1", "x2"], &["p1", "p2"], &|z, c| {
            let (x1, x2, p1, p2) = (z(0), z(1), z(2), z(3));
            vec![x1.pow(2) - x2.pow(2) - p1, c(2.0) * x1 * x2 - p2]
        }),
        BuiltinName::Univariate => build(&["x"], &["p"], &|z, c| {
            let (x, p) = (z(0), z(1));
            vec![x.pow(2) + c(1.0) - p.pow(2)]
        }),
        BuiltinName::Modified34 => build(&["x1", "x2"], &["p1", "p2"], &|z, c| {
            let (x1, x2, p1, p2) = (z(0), z(1), z(2), z(3));
            vec![(x1.pow(2) - x2.pow(2) - p1.clone()) * (x1.pow(2) + p1), c(2.0) * x1 * x2 - p2]
        }),
        BuiltinName::Kuramoto3 => build(&["s1", "c1", "s2", "c2"], &["w1", "w2"], &|z, c| {
            let (s1, c1, s2, c2, w1, w2) = (z(0), z(1), z(2), z(3), z(4), z(5));
            // theta_3 = 0, so s3 = 0 and c3 = 1.
            let (s3, c3) = (c(0.0), c(1.0));
            vec![
                (&s1 * &c2 - &c1 * &s2) + (&s1 * &c3 - &c1 * &s3) - c(3.0) * w1,
                (&s2 * &c1 - &c2 * &s1) + (&s2 * &c3 - &c2 * &s3) - c(3.0) * w2,
                s1.pow(2) + c1.pow(2) - c(1.0),
                s2.pow(2) + c2.pow(2) - c(1.0),
            ]
        }),
        BuiltinName::Rpr3 => build(&["p1", "p2", "phi1", "phi2"], &["c1", "c2"], &|z, c| {
            use rpr3_constants::*;
            let (p1, p2, f1, f2, c1, c2) = (z(0), z(1), z(2), z(3), z(4), z(5));
            let (a2, a3, b3) = (A2_PLAT, A3_PLAT, B3_PLAT);
            let (aa2, aa3, bb3) = (A2_BASE, A3_BASE, B3_BASE);
            let rr = p1.pow(2) + p2.pow(2);
            vec![
                f1.pow(2) + f2.pow(2) - c(1.0),
                rr.clone() - c(2.0) * (c(a3) * p1.clone() + c(b3) * p2.clone()) * f1.clone()
                    + c(2.0) * (c(b3) * p1.clone() - c(a3) * p2.clone()) * f2.clone()
                    + c(a3 * a3 + b3 * b3)
                    - c1,
                rr.clone() - c(2.0 * aa2) * p1.clone()
                    + c(2.0) * (c(a2 - a3) * p1.clone() - c(b3) * p2.clone() + c(aa2 * a3 - aa2 * a2)) * f1
                    + c(2.0) * (c(b3) * p1.clone() + c(a2 - a3) * p2.clone() - c(aa2 * b3)) * f2
                    + c((a2 - a3) * (a2 - a3) + b3 * b3 + aa2 * aa2)
                    - c2,
                rr - c(2.0) * (c(aa3) * p1 + c(bb3) * p2) + c(aa3 * aa3 + bb3 * bb3 - C3),
            ]
        }),
    }
}
