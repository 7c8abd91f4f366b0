use super::{BinaryOp, Expr, UnaryOp, VarKind};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainKind {
    LogOfNonPositive,
    DivisionByZero,
    SqrtOfNegative,
    /// Power with no real value (negative base, non-integer exponent) or `0^negative`.
    InvalidPower,
    /// Any other non-finite intermediate (overflow of `exp`, `tan` at a pole, ...).
    NonFinite,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("domain error ({kind:?}) in `{node}`")]
    Domain { kind: DomainKind, node: String },
    #[error("variable {name} is out of range for a point of dimension {dimension}")]
    Dimension { name: String, dimension: usize },
}

impl Expr {
    /// Evaluate at chart point `x` and fiber vector `y`.
    ///
    /// Out-of-domain arguments are reported instead of silently producing
    /// NaN or infinity; the error carries the printed offending node.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64, EvalError> {
        match self {
            Expr::Num(v) => Ok(*v),
            Expr::Const(c) => Ok(c.value()),
            Expr::Var(v) => {
                let (slice, prefix) = match v.kind {
                    VarKind::Chart => (x, 'x'),
                    VarKind::Fiber => (y, 'y'),
                };
                slice
                    .get(v.index.wrapping_sub(1))
                    .copied()
                    .ok_or_else(|| EvalError::Dimension {
                        name: format!("{prefix}{}", v.index),
                        dimension: slice.len(),
                    })
            }
            Expr::Unary(op, arg) => {
                let a = arg.eval(x, y)?;
                let fail = |kind| EvalError::Domain {
                    kind,
                    node: self.to_string(),
                };
                let value = match op {
                    UnaryOp::Neg => -a,
                    UnaryOp::Sin => a.sin(),
                    UnaryOp::Cos => a.cos(),
                    UnaryOp::Tan => a.tan(),
                    UnaryOp::Atan => a.atan(),
                    UnaryOp::Exp => a.exp(),
                    UnaryOp::Log => {
                        if a <= 0.0 {
                            return Err(fail(DomainKind::LogOfNonPositive));
                        }
                        a.ln()
                    }
                    UnaryOp::Sqrt => {
                        if a < 0.0 {
                            return Err(fail(DomainKind::SqrtOfNegative));
                        }
                        a.sqrt()
                    }
                    UnaryOp::Abs => a.abs(),
                    UnaryOp::Sinh => a.sinh(),
                    UnaryOp::Cosh => a.cosh(),
                    UnaryOp::Tanh => a.tanh(),
                    UnaryOp::Sign => {
                        if a > 0.0 {
                            1.0
                        } else if a < 0.0 {
                            -1.0
                        } else {
                            0.0
                        }
                    }
                };
                if value.is_finite() {
                    Ok(value)
                } else {
                    Err(fail(DomainKind::NonFinite))
                }
            }
            Expr::Binary(op, lhs, rhs) => {
                let a = lhs.eval(x, y)?;
                let b = rhs.eval(x, y)?;
                let fail = |kind| EvalError::Domain {
                    kind,
                    node: self.to_string(),
                };
                let value = match op {
                    BinaryOp::Add => a + b,
                    BinaryOp::Sub => a - b,
                    BinaryOp::Mul => a * b,
                    BinaryOp::Div => {
                        if b == 0.0 {
                            return Err(fail(DomainKind::DivisionByZero));
                        }
                        a / b
                    }
                    BinaryOp::Pow => {
                        if (a < 0.0 && b.fract() != 0.0) || (a == 0.0 && b < 0.0) {
                            return Err(fail(DomainKind::InvalidPower));
                        }
                        pow(a, b)
                    }
                };
                if value.is_finite() {
                    Ok(value)
                } else {
                    Err(fail(DomainKind::NonFinite))
                }
            }
        }
    }
}

/// Small integer exponents go through `powi` so that `y^2` is exactly `y*y`.
fn pow(base: f64, exponent: f64) -> f64 {
    if exponent.fract() == 0.0 && exponent.abs() <= 64.0 {
        base.powi(exponent as i32)
    } else {
        base.powf(exponent)
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::{parse, DomainKind, EvalError};
    use approx::assert_relative_eq;

    #[test]
    fn evaluates_blow_up_spray() {
        let e = parse("pi*(1+y1^2)", 1).unwrap();
        assert_relative_eq!(e.eval(&[0.0], &[1.0]).unwrap(), 2.0 * std::f64::consts::PI);
    }

    #[test]
    fn identity() {
        let e = parse("x1", 1).unwrap();
        assert_eq!(e.eval(&[3.5], &[0.0]).unwrap(), 3.5);
    }

    #[test]
    fn division_by_zero_names_node() {
        let e = parse("2 + 1/y1", 1).unwrap();
        match e.eval(&[0.0], &[0.0]) {
            Err(EvalError::Domain { kind, node }) => {
                assert_eq!(kind, DomainKind::DivisionByZero);
                assert_eq!(node, "1/y1");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn other_domain_errors() {
        let cases = [
            ("log(x1)", DomainKind::LogOfNonPositive),
            ("sqrt(x1 - 1)", DomainKind::SqrtOfNegative),
            ("(x1 - 1)^0.5", DomainKind::InvalidPower),
            ("exp(1000*x1 + 1000)", DomainKind::NonFinite),
        ];
        for (src, expected) in cases {
            let e = parse(src, 1).unwrap();
            match e.eval(&[0.0], &[0.0]) {
                Err(EvalError::Domain { kind, .. }) => assert_eq!(kind, expected, "{src}"),
                other => panic!("{src}: unexpected {other:?}"),
            }
        }
    }

    #[test]
    fn short_point_is_a_dimension_error() {
        let e = parse("y2", 2).unwrap();
        assert!(matches!(e.eval(&[0.0, 0.0], &[1.0]), Err(EvalError::Dimension { .. })));
    }

    #[test]
    fn integer_powers_are_exact() {
        let e = parse("y1^2", 1).unwrap();
        let y = 0.1_f64;
        assert_eq!(e.eval(&[0.0], &[y]).unwrap(), y * y);
        let e = parse("(-2)^3", 1).unwrap();
        assert_eq!(e.eval(&[0.0], &[0.0]).unwrap(), -8.0);
    }
}
