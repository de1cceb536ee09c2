//! Integrands flattened for repeated numerical evaluation.

use crate::formlang::{ScalarExpr, Terminal};

#[derive(Clone, Debug)]
pub(crate) enum Node {
    Const(f64),
    Slot(usize),
    Sum(Vec<Node>),
    Product(Vec<Node>),
    Div(Box<Node>, Box<Node>),
    Powi(Box<Node>, i32),
    Powf(Box<Node>, f64),
}

/// An integrand whose terminals are read from a slot array.
#[derive(Clone, Debug)]
pub(crate) struct Program {
    pub terminals: Vec<Terminal>,
    root: Node,
}

impl Program {
    pub fn new(expr: &ScalarExpr) -> Self {
        let terminals = expr.terminals();
        let root = lower(expr, &terminals);
        Self { terminals, root }
    }

    pub fn eval(&self, slots: &[f64]) -> f64 {
        eval(&self.root, slots)
    }
}

fn lower(e: &ScalarExpr, terminals: &[Terminal]) -> Node {
    match e {
        ScalarExpr::Const(c) => Node::Const(*c),
        ScalarExpr::Terminal(t) => Node::Slot(terminals.binary_search(t).expect("terminal is listed")),
        ScalarExpr::Sum(ts) => Node::Sum(ts.iter().map(|t| lower(t, terminals)).collect()),
        ScalarExpr::Product(ts) => Node::Product(ts.iter().map(|t| lower(t, terminals)).collect()),
        ScalarExpr::Div(a, b) => Node::Div(Box::new(lower(a, terminals)), Box::new(lower(b, terminals))),
        ScalarExpr::Pow(a, p) if p.fract() == 0.0 && p.abs() < 64.0 => {
            Node::Powi(Box::new(lower(a, terminals)), *p as i32)
        }
        ScalarExpr::Pow(a, p) => Node::Powf(Box::new(lower(a, terminals)), *p),
    }
}

fn eval(n: &Node, slots: &[f64]) -> f64 {
    match n {
        Node::Const(c) => *c,
        Node::Slot(k) => slots[*k],
        Node::Sum(ts) => ts.iter().map(|t| eval(t, slots)).sum(),
        Node::Product(ts) => ts.iter().map(|t| eval(t, slots)).product(),
        Node::Div(a, b) => eval(a, slots) / eval(b, slots),
        Node::Powi(a, p) => eval(a, slots).powi(*p),
        Node::Powf(a, p) => eval(a, slots).powf(*p),
    }
}
