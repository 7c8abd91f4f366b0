use super::{BinaryOp, Expr, UnaryOp, Var};

// Constructors that fold the trivial identities produced by the chain rule.
// Without them, repeated differentiation (curvature needs third derivatives)
// grows trees quickly.

pub(crate) fn add(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        _ if a.is_zero() => b,
        _ if b.is_zero() => a,
        (Expr::Num(p), Expr::Num(q)) => Expr::Num(p + q),
        _ => Expr::add(a, b),
    }
}

pub(crate) fn sub(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        _ if b.is_zero() => a,
        _ if a.is_zero() => neg(b),
        (Expr::Num(p), Expr::Num(q)) => Expr::Num(p - q),
        _ => Expr::sub(a, b),
    }
}

pub(crate) fn mul(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        _ if a.is_zero() || b.is_zero() => Expr::Num(0.0),
        (Expr::Num(p), _) if *p == 1.0 => b,
        (_, Expr::Num(q)) if *q == 1.0 => a,
        (Expr::Num(p), Expr::Num(q)) => Expr::Num(p * q),
        _ => Expr::mul(a, b),
    }
}

pub(crate) fn div(a: Expr, b: Expr) -> Expr {
    match &b {
        _ if a.is_zero() => Expr::Num(0.0),
        Expr::Num(q) if *q == 1.0 => a,
        _ => Expr::div(a, b),
    }
}

pub(crate) fn neg(a: Expr) -> Expr {
    match a {
        Expr::Num(p) => Expr::Num(-p),
        Expr::Unary(UnaryOp::Neg, inner) => (*inner).clone(),
        other => Expr::neg(other),
    }
}

fn call(op: UnaryOp, a: &Expr) -> Expr {
    Expr::unary(op, a.clone())
}

impl Expr {
    /// Symbolic partial derivative with respect to `var`.
    ///
    /// The result is not simplified beyond folding zeros and ones. `abs`
    /// differentiates to `sign(u)*u'` with `sign(0) = 0`.
    pub fn differentiate(&self, var: Var) -> Expr {
        if !self.depends_on(var) {
            return Expr::Num(0.0);
        }
        match self {
            Expr::Num(_) | Expr::Const(_) => Expr::Num(0.0),
            Expr::Var(v) => Expr::Num(if *v == var { 1.0 } else { 0.0 }),
            Expr::Unary(op, u) => {
                let du = u.differentiate(var);
                let outer = match op {
                    UnaryOp::Neg => return neg(du),
                    UnaryOp::Sin => call(UnaryOp::Cos, u),
                    UnaryOp::Cos => neg(call(UnaryOp::Sin, u)),
                    UnaryOp::Tan => add(
                        Expr::Num(1.0),
                        Expr::pow(call(UnaryOp::Tan, u), Expr::Num(2.0)),
                    ),
                    UnaryOp::Atan => div(
                        Expr::Num(1.0),
                        add(Expr::Num(1.0), Expr::pow((**u).clone(), Expr::Num(2.0))),
                    ),
                    UnaryOp::Exp => self.clone(),
                    UnaryOp::Log => return div(du, (**u).clone()),
                    UnaryOp::Sqrt => return div(du, mul(Expr::Num(2.0), self.clone())),
                    UnaryOp::Abs => call(UnaryOp::Sign, u),
                    UnaryOp::Sinh => call(UnaryOp::Cosh, u),
                    UnaryOp::Cosh => call(UnaryOp::Sinh, u),
                    UnaryOp::Tanh => sub(
                        Expr::Num(1.0),
                        Expr::pow(call(UnaryOp::Tanh, u), Expr::Num(2.0)),
                    ),
                    UnaryOp::Sign => return Expr::Num(0.0),
                };
                mul(outer, du)
            }
            Expr::Binary(op, a, b) => {
                let da = a.differentiate(var);
                let db = b.differentiate(var);
                let (a, b) = ((**a).clone(), (**b).clone());
                match op {
                    BinaryOp::Add => add(da, db),
                    BinaryOp::Sub => sub(da, db),
                    BinaryOp::Mul => add(mul(da, b.clone()), mul(a, db)),
                    BinaryOp::Div => div(
                        sub(mul(da, b.clone()), mul(a, db)),
                        Expr::pow(b, Expr::Num(2.0)),
                    ),
                    BinaryOp::Pow => {
                        if db.is_zero() {
                            // power rule; the exponent does not involve `var`
                            let lowered = match &b {
                                Expr::Num(k) => Expr::Num(k - 1.0),
                                _ => sub(b.clone(), Expr::Num(1.0)),
                            };
                            let reduced = match &lowered {
                                Expr::Num(k) if *k == 1.0 => a.clone(),
                                Expr::Num(k) if *k == 0.0 => Expr::Num(1.0),
                                _ => Expr::pow(a.clone(), lowered),
                            };
                            mul(mul(b, reduced), da)
                        } else {
                            // d(a^b) = a^b * (b' log a + b a'/a)
                            let whole = Expr::pow(a.clone(), b.clone());
                            let log_term = mul(db, call(UnaryOp::Log, &a));
                            let base_term = div(mul(b, da), a);
                            mul(whole, add(log_term, base_term))
                        }
                    }
                }
            }
        }
    }

    /// Gradient with respect to all variables of one kind, indices `1..=dimension`.
    pub fn gradient(&self, kind: super::VarKind, dimension: usize) -> Vec<Expr> {
        (1..=dimension)
            .map(|index| self.differentiate(Var { kind, index }))
            .collect()
    }
}
