use super::poly::{rational_to_f64, Func};
use super::{Expr, ExprError};

#[derive(Clone, Debug)]
enum Node {
    Const(f64),
    Slot(usize),
    Add(Vec<Node>),
    Mul(Vec<Node>),
    Neg(Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, i32),
    Call(Func, Box<Node>),
}

/// Expression tree with variables resolved to positions in an argument slice.
#[derive(Clone, Debug)]
pub struct Compiled {
    root: Node,
    arity: usize,
}

impl Compiled {
    pub(super) fn new<S: AsRef<str>>(e: &Expr, vars: &[S]) -> Result<Self, ExprError> {
        let names: Vec<&str> = vars.iter().map(|s| s.as_ref()).collect();
        Ok(Compiled {
            root: lower(e, &names)?,
            arity: names.len(),
        })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    /// Evaluates at `args`, which must have the compiled arity.
    pub fn eval(&self, args: &[f64]) -> f64 {
        debug_assert_eq!(args.len(), self.arity);
        eval(&self.root, args)
    }
}

fn lower(e: &Expr, names: &[&str]) -> Result<Node, ExprError> {
    Ok(match e {
        Expr::Num(v) => Node::Const(rational_to_f64(v)),
        Expr::Var(n) => Node::Slot(
            names
                .iter()
                .position(|x| x == n)
                .ok_or_else(|| ExprError::UnboundVariable(n.clone()))?,
        ),
        Expr::Add(v) => Node::Add(v.iter().map(|x| lower(x, names)).collect::<Result<_, _>>()?),
        Expr::Mul(v) => Node::Mul(v.iter().map(|x| lower(x, names)).collect::<Result<_, _>>()?),
        Expr::Neg(x) => Node::Neg(Box::new(lower(x, names)?)),
        Expr::Div(a, b) => Node::Div(Box::new(lower(a, names)?), Box::new(lower(b, names)?)),
        Expr::Pow(b, k) => Node::Pow(Box::new(lower(b, names)?), *k as i32),
        Expr::Call(f, a) => Node::Call(*f, Box::new(lower(a, names)?)),
    })
}

fn eval(n: &Node, args: &[f64]) -> f64 {
    match n {
        Node::Const(c) => *c,
        Node::Slot(i) => args[*i],
        Node::Add(v) => v.iter().map(|x| eval(x, args)).sum(),
        Node::Mul(v) => v.iter().map(|x| eval(x, args)).product(),
        Node::Neg(x) => -eval(x, args),
        Node::Div(a, b) => eval(a, args) / eval(b, args),
        Node::Pow(b, k) => eval(b, args).powi(*k),
        Node::Call(f, a) => f.apply(eval(a, args)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Chart;

    #[test]
    fn compiled_matches_tree_eval() {
        let c = Chart::new(&["x", "y"]).unwrap();
        let e = Expr::parse("(x - y)^2/(1 + y^2) + sin(x)*exp(-y)", &c).unwrap();
        let comp = e.compile(&["y", "x"]).unwrap();
        let direct = e
            .eval(&|n| match n {
                "x" => Some(0.3),
                "y" => Some(-1.25),
                _ => None,
            })
            .unwrap();
        assert!((comp.eval(&[-1.25, 0.3]) - direct).abs() < 1e-15);
    }

    #[test]
    fn unbound_variable_is_reported() {
        let c = Chart::new(&["x", "y"]).unwrap();
        let e = Expr::parse("x + y", &c).unwrap();
        assert_eq!(
            e.compile(&["x"]).unwrap_err(),
            ExprError::UnboundVariable("y".into())
        );
    }
}
