use super::{BinaryOp, Expr, UnaryOp, VarKind};
use std::fmt;

// Binding strength of the printed form; atoms bind tightest.
const ADD: u8 = 1;
const MUL: u8 = 2;
const NEG: u8 = 3;
const POW: u8 = 4;
const ATOM: u8 = 5;

fn strength(e: &Expr) -> u8 {
    match e {
        Expr::Num(v) if *v < 0.0 || (*v == 0.0 && v.is_sign_negative()) => NEG,
        Expr::Num(_) | Expr::Const(_) | Expr::Var(_) => ATOM,
        Expr::Unary(UnaryOp::Neg, _) => NEG,
        Expr::Unary(..) => ATOM,
        Expr::Binary(BinaryOp::Add | BinaryOp::Sub, ..) => ADD,
        Expr::Binary(BinaryOp::Mul | BinaryOp::Div, ..) => MUL,
        Expr::Binary(BinaryOp::Pow, ..) => POW,
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, child: &Expr, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({child})")
    } else {
        write!(f, "{child}")
    }
}

/// Prints text that parses back to a tree with identical evaluation.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => {
                if v.is_sign_negative() {
                    f.write_str("-")?;
                }
                let magnitude = v.abs();
                if magnitude.fract() == 0.0 && magnitude < 1e15 {
                    write!(f, "{magnitude}")
                } else {
                    write!(f, "{magnitude:?}")
                }
            }
            Expr::Const(c) => match c {
                super::Constant::Pi => f.write_str("pi"),
                super::Constant::E => f.write_str("e"),
            },
            Expr::Var(v) => {
                let prefix = match v.kind {
                    VarKind::Chart => 'x',
                    VarKind::Fiber => 'y',
                };
                write!(f, "{prefix}{}", v.index)
            }
            Expr::Unary(UnaryOp::Neg, a) => {
                f.write_str("-")?;
                write_child(f, a, strength(a) < NEG)
            }
            Expr::Unary(op, a) => write!(f, "{}({a})", op.name()),
            Expr::Binary(op, a, b) => {
                let (left_parens, right_parens) = match op {
                    BinaryOp::Add | BinaryOp::Sub => (strength(a) < ADD, strength(b) <= ADD),
                    BinaryOp::Mul | BinaryOp::Div => (strength(a) < MUL, strength(b) <= MUL),
                    // the exponent is parsed as a unary operand
                    BinaryOp::Pow => (strength(a) <= POW, strength(b) < NEG),
                };
                write_child(f, a, left_parens)?;
                write!(f, "{}", op.symbol())?;
                write_child(f, b, right_parens)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::{parse, Expr};

    #[test]
    fn prints_minimal_parentheses() {
        let e = parse("pi*(1 + y1^2)", 1).unwrap();
        assert_eq!(e.to_string(), "pi*(1+y1^2)");
        let e = parse("(x1 - (x2 - 1)) / (2*x1)", 2).unwrap();
        assert_eq!(e.to_string(), "(x1-(x2-1))/(2*x1)");
        let e = parse("(-x1)^2 + 2^-x1 + (2^3)^2", 2).unwrap();
        assert_eq!(e.to_string(), "(-x1)^2+2^-x1+(2^3)^2");
    }

    #[test]
    fn negative_literals_survive_reparsing() {
        let e = Expr::mul(Expr::num(-3.0), Expr::pow(Expr::x(1), Expr::num(-0.5)));
        let back = parse(&e.to_string(), 1).unwrap();
        let x = [1.7];
        assert_eq!(e.eval(&x, &[]).unwrap(), back.eval(&x, &[]).unwrap());
    }
}
