//! Forward-mode dual numbers carrying a full gradient.

use smallvec::{smallvec, SmallVec};

use super::{apply, integer_exponent, power, BinOp, EvalError, Expression, Func, Node};

/// A value together with its partial derivatives, one per coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct DualValue {
    pub value: f64,
    pub partials: Vec<f64>,
}

impl DualValue {
    /// Euclidean norm of the gradient.
    pub fn gradient_norm(&self) -> f64 {
        self.partials.iter().map(|p| p * p).sum::<f64>().sqrt()
    }
}

type Partials = SmallVec<[f64; 4]>;

pub(super) struct Dual {
    v: f64,
    d: Partials,
}

impl From<Dual> for DualValue {
    fn from(x: Dual) -> Self {
        DualValue {
            value: x.v,
            partials: x.d.into_vec(),
        }
    }
}

fn scaled(d: &Partials, s: f64) -> Partials {
    d.iter().map(|x| x * s).collect()
}

fn combine(a: &Partials, sa: f64, b: &Partials, sb: f64) -> Partials {
    a.iter().zip(b).map(|(x, y)| x * sa + y * sb).collect()
}

pub(super) fn eval(e: &Expression, node: &Node, x: &[f64]) -> Result<Dual, EvalError> {
    let n = x.len();
    let non_diff = |reason: &str| EvalError::NonDifferentiable {
        subexpr: e.render(node),
        reason: reason.to_string(),
    };
    let out = match node {
        Node::Number(v) => Dual {
            v: *v,
            d: smallvec![0.0; n],
        },
        Node::Const(c) => Dual {
            v: c.value(),
            d: smallvec![0.0; n],
        },
        Node::Coord(i) => {
            let mut d: Partials = smallvec![0.0; n];
            d[*i] = 1.0;
            Dual { v: x[*i], d }
        }
        Node::Neg(a) => {
            let a = eval(e, a, x)?;
            Dual {
                v: -a.v,
                d: scaled(&a.d, -1.0),
            }
        }
        Node::Binary(op, a, b) => {
            let l = eval(e, a, x)?;
            let r = eval(e, b, x)?;
            match op {
                BinOp::Add => Dual {
                    v: l.v + r.v,
                    d: combine(&l.d, 1.0, &r.d, 1.0),
                },
                BinOp::Sub => Dual {
                    v: l.v - r.v,
                    d: combine(&l.d, 1.0, &r.d, -1.0),
                },
                BinOp::Mul => Dual {
                    v: l.v * r.v,
                    d: combine(&l.d, r.v, &r.d, l.v),
                },
                BinOp::Div => {
                    if r.v == 0.0 {
                        return Err(e.domain_error(node, "division by zero"));
                    }
                    let v = l.v / r.v;
                    Dual {
                        v,
                        d: combine(&l.d, 1.0 / r.v, &r.d, -v / r.v),
                    }
                }
                BinOp::Pow => {
                    let v = power(l.v, r.v).map_err(|why| e.domain_error(node, why))?;
                    let const_exponent = r.d.iter().all(|&p| p == 0.0);
                    let d = match (const_exponent, integer_exponent(r.v)) {
                        (true, Some(0)) => smallvec![0.0; n],
                        (true, Some(k)) => scaled(&l.d, f64::from(k) * l.v.powi(k - 1)),
                        (true, None) => {
                            if l.v <= 0.0 {
                                return Err(non_diff("non-integer power at non-positive base"));
                            }
                            scaled(&l.d, r.v * l.v.powf(r.v - 1.0))
                        }
                        (false, _) => {
                            if l.v <= 0.0 {
                                return Err(non_diff("variable exponent at non-positive base"));
                            }
                            combine(&l.d, v * r.v / l.v, &r.d, v * l.v.ln())
                        }
                    };
                    Dual { v, d }
                }
            }
        }
        Node::Call(f, a) => {
            let a = eval(e, a, x)?;
            let v = apply(*f, a.v).map_err(|why| e.domain_error(node, why))?;
            let slope = match f {
                Func::Sin => a.v.cos(),
                Func::Cos => -a.v.sin(),
                Func::Exp => v,
                Func::Log => 1.0 / a.v,
                Func::Sqrt => {
                    if v == 0.0 {
                        return Err(non_diff("sqrt at zero"));
                    }
                    0.5 / v
                }
                Func::Abs => {
                    if a.v == 0.0 {
                        return Err(non_diff("abs at zero"));
                    }
                    a.v.signum()
                }
            };
            Dual {
                v,
                d: scaled(&a.d, slope),
            }
        }
    };
    if !out.v.is_finite() {
        return Err(e.domain_error(node, "non-finite result"));
    }
    if out.d.iter().any(|p| !p.is_finite()) {
        return Err(non_diff("non-finite derivative"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(s: &str, n: usize) -> Expression {
        Expression::parse(s, n, "x").unwrap()
    }

    #[test]
    fn polynomial_gradient() {
        let d = p("x1^2 + x2^2", 2).eval_dual(&[1.0, 2.0]).unwrap();
        assert_eq!(d.value, 5.0);
        assert_eq!(d.partials, vec![2.0, 4.0]);
    }

    #[test]
    fn radius_gradient() {
        // d/dx sqrt(x^2+y^2) = x/r, d/dy = y/r; at (3,4) r = 5.
        let d = p("sqrt(x1^2 + x2^2)", 2).eval_dual(&[3.0, 4.0]).unwrap();
        assert_eq!(d.value, 5.0);
        assert!((d.partials[0] - 0.6).abs() < 1e-15);
        assert!((d.partials[1] - 0.8).abs() < 1e-15);
        assert!((d.gradient_norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn abs_at_zero_is_flagged() {
        let err = p("abs(x1)", 1).eval_dual(&[0.0]).unwrap_err();
        assert!(matches!(err, EvalError::NonDifferentiable { .. }));
        assert_eq!(
            p("abs(x1)", 1).eval_dual(&[-2.0]).unwrap().partials,
            vec![-1.0]
        );
        assert!(p("sqrt(x1)", 1).eval_dual(&[0.0]).is_err());
    }

    #[test]
    fn powers() {
        let d = p("x1^3", 1).eval_dual(&[-2.0]).unwrap();
        assert_eq!((d.value, d.partials[0]), (-8.0, 12.0));
        let d = p("x1^0", 1).eval_dual(&[0.0]).unwrap();
        assert_eq!((d.value, d.partials[0]), (1.0, 0.0));
        let d = p("x1^x2", 2).eval_dual(&[2.0, 3.0]).unwrap();
        assert_eq!(d.value, 8.0);
        assert!((d.partials[0] - 12.0).abs() < 1e-12);
        assert!((d.partials[1] - 8.0 * 2f64.ln()).abs() < 1e-12);
        // defined, but not differentiable in the exponent direction
        assert!(p("x1^x2", 2).eval(&[-2.0, 3.0]).is_ok());
        assert!(p("x1^x2", 2).eval_dual(&[-2.0, 3.0]).is_err());
    }

    #[test]
    fn dual_matches_plain_eval_exactly() {
        let e = p("sin(x1)*exp(-x2/3) + log(1 + x1^2) - sqrt(x2)^3", 2);
        for pt in [[0.3, 1.7], [2.0, 0.01], [-4.5, 9.0]] {
            assert_eq!(e.eval_dual(&pt).unwrap().value, e.eval(&pt).unwrap());
        }
    }

    // Expressions that are smooth on the sampled box [0.5, 2]^3.
    const SMOOTH: &[&str] = &[
        "x1^2 + x2^2 + x3^2",
        "sqrt(x1^2 + x2^2)",
        "sin(x1) * cos(x2) * x3",
        "exp(x1 - x2) / (1 + x3^2)",
        "log(x1 + x2 * x3)",
        "x1^x2 - x3^2.5",
        "abs(x1 - 3) * x2 + pi * e",
        "(x1 - x2)^3 / x3",
        "-x1^4 + 2*x1*x2*x3 - 1/x2",
        "sqrt(x1 * x2) * sin(x3 / x1)",
    ];

    fn central_difference(e: &Expression, pt: &[f64], k: usize, h: f64) -> f64 {
        let mut hi = pt.to_vec();
        let mut lo = pt.to_vec();
        hi[k] += h;
        lo[k] -= h;
        (e.eval(&hi).unwrap() - e.eval(&lo).unwrap()) / (2.0 * h)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn partials_match_central_differences(
            idx in 0..SMOOTH.len(),
            pt in proptest::array::uniform3(0.5f64..2.0),
        ) {
            let e = Expression::parse(SMOOTH[idx], 3, "x").unwrap();
            let d = e.eval_dual(&pt).unwrap();
            prop_assert_eq!(d.value, e.eval(&pt).unwrap());
            for k in 0..3 {
                let fd = central_difference(&e, &pt, k, 1e-6);
                let scale = d.partials[k].abs().max(1.0);
                prop_assert!(
                    (d.partials[k] - fd).abs() <= 1e-6 * scale,
                    "{} at {:?}: dual {} vs fd {}", SMOOTH[idx], pt, d.partials[k], fd
                );
            }
        }
    }
}
