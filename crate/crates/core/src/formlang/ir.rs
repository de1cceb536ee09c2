//! Scalar integrand expressions.
//!
//! Every integrand is lowered to a scalar tree over basis-function
//! terminals. The constructors keep trees in a canonical form: sums and
//! products are flattened, constants folded and children sorted by their
//! printed form, so equal integrands compare equal regardless of how the
//! source ordered its terms.

use std::fmt;

/// Which function a terminal refers to. Arguments are numbered test = 0,
/// trial = 1; coefficients in declaration order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    Argument(usize),
    Coefficient(usize),
}

/// Side of an interior facet.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Restriction {
    Plus,
    Minus,
}

impl Restriction {
    /// 0 for the plus side, 1 for the minus side.
    pub fn side(self) -> usize {
        match self {
            Restriction::Plus => 0,
            Restriction::Minus => 1,
        }
    }
}

/// One component of a function, optionally differentiated once in a
/// physical direction and restricted to one side of a facet.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Terminal {
    pub role: Role,
    pub component: usize,
    pub derivative: Option<usize>,
    pub restriction: Option<Restriction>,
}

impl fmt::Display for Terminal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.role {
            Role::Argument(k) => write!(f, "v{k}")?,
            Role::Coefficient(k) => write!(f, "w{k}")?,
        }
        write!(f, "[{}]", self.component)?;
        if let Some(d) = self.derivative {
            write!(f, ".dx({d})")?;
        }
        match self.restriction {
            Some(Restriction::Plus) => write!(f, "('+')"),
            Some(Restriction::Minus) => write!(f, "('-')"),
            None => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ScalarExpr {
    Const(f64),
    Terminal(Terminal),
    Sum(Vec<ScalarExpr>),
    Product(Vec<ScalarExpr>),
    Div(Box<ScalarExpr>, Box<ScalarExpr>),
    Pow(Box<ScalarExpr>, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum DerivativeError {
    /// The terminal is already differentiated.
    SecondDerivative(Terminal),
}

fn sort_children(children: &mut [ScalarExpr]) {
    children.sort_by_cached_key(|c| c.to_string());
}

impl ScalarExpr {
    pub fn zero() -> Self {
        ScalarExpr::Const(0.0)
    }

    pub fn constant(&self) -> Option<f64> {
        match self {
            ScalarExpr::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.constant() == Some(0.0)
    }

    pub fn sum(terms: Vec<ScalarExpr>) -> Self {
        let mut constant = 0.0;
        let mut out = Vec::with_capacity(terms.len());
        for t in terms {
            match t {
                ScalarExpr::Const(c) => constant += c,
                ScalarExpr::Sum(inner) => {
                    for u in inner {
                        match u {
                            ScalarExpr::Const(c) => constant += c,
                            u => out.push(u),
                        }
                    }
                }
                t => out.push(t),
            }
        }
        if constant != 0.0 {
            out.push(ScalarExpr::Const(constant));
        }
        match out.len() {
            0 => ScalarExpr::zero(),
            1 => out.pop().expect("one term"),
            _ => {
                sort_children(&mut out);
                ScalarExpr::Sum(out)
            }
        }
    }

    pub fn product(factors: Vec<ScalarExpr>) -> Self {
        let mut constant = 1.0;
        let mut out = Vec::with_capacity(factors.len());
        for f in factors {
            match f {
                ScalarExpr::Const(c) => constant *= c,
                ScalarExpr::Product(inner) => {
                    for u in inner {
                        match u {
                            ScalarExpr::Const(c) => constant *= c,
                            u => out.push(u),
                        }
                    }
                }
                f => out.push(f),
            }
        }
        if constant == 0.0 {
            return ScalarExpr::zero();
        }
        if constant != 1.0 || out.is_empty() {
            out.push(ScalarExpr::Const(constant));
        }
        match out.len() {
            1 => out.pop().expect("one factor"),
            _ => {
                sort_children(&mut out);
                ScalarExpr::Product(out)
            }
        }
    }

    pub fn scale(self, c: f64) -> Self {
        Self::product(vec![ScalarExpr::Const(c), self])
    }

    pub fn quotient(num: ScalarExpr, den: ScalarExpr) -> Self {
        match (num.constant(), den.constant()) {
            (Some(0.0), _) => ScalarExpr::zero(),
            (Some(a), Some(b)) => ScalarExpr::Const(a / b),
            (_, Some(b)) => num.scale(1.0 / b),
            _ => ScalarExpr::Div(Box::new(num), Box::new(den)),
        }
    }

    pub fn pow(base: ScalarExpr, exponent: f64) -> Self {
        if exponent == 0.0 {
            return ScalarExpr::Const(1.0);
        }
        if exponent == 1.0 {
            return base;
        }
        match base {
            ScalarExpr::Const(c) => ScalarExpr::Const(c.powf(exponent)),
            b => ScalarExpr::Pow(Box::new(b), exponent),
        }
    }

    pub fn terminal(t: Terminal) -> Self {
        ScalarExpr::Terminal(t)
    }

    /// Partial derivative in physical direction `direction`.
    pub fn derivative(&self, direction: usize) -> Result<ScalarExpr, DerivativeError> {
        Ok(match self {
            ScalarExpr::Const(_) => ScalarExpr::zero(),
            ScalarExpr::Terminal(t) => {
                if t.derivative.is_some() {
                    return Err(DerivativeError::SecondDerivative(*t));
                }
                ScalarExpr::Terminal(Terminal { derivative: Some(direction), ..*t })
            }
            ScalarExpr::Sum(terms) => {
                ScalarExpr::sum(terms.iter().map(|t| t.derivative(direction)).collect::<Result<_, _>>()?)
            }
            ScalarExpr::Product(factors) => {
                let mut terms = Vec::with_capacity(factors.len());
                for (k, f) in factors.iter().enumerate() {
                    let df = f.derivative(direction)?;
                    if df.is_zero() {
                        continue;
                    }
                    let mut fs: Vec<ScalarExpr> = factors.clone();
                    fs[k] = df;
                    terms.push(ScalarExpr::product(fs));
                }
                ScalarExpr::sum(terms)
            }
            ScalarExpr::Div(num, den) => {
                let dn = num.derivative(direction)?;
                let dd = den.derivative(direction)?;
                let first = ScalarExpr::quotient(dn, (**den).clone());
                let second = ScalarExpr::quotient(
                    ScalarExpr::product(vec![(**num).clone(), dd]),
                    ScalarExpr::pow((**den).clone(), 2.0),
                );
                first - second
            }
            ScalarExpr::Pow(base, p) => {
                let db = base.derivative(direction)?;
                ScalarExpr::product(vec![ScalarExpr::Const(*p), ScalarExpr::pow((**base).clone(), p - 1.0), db])
            }
        })
    }

    /// Rebuilds the tree through the canonical constructors after mapping
    /// every terminal.
    pub fn map_terminals<E>(&self, f: &mut impl FnMut(Terminal) -> Result<ScalarExpr, E>) -> Result<ScalarExpr, E> {
        Ok(match self {
            ScalarExpr::Const(c) => ScalarExpr::Const(*c),
            ScalarExpr::Terminal(t) => f(*t)?,
            ScalarExpr::Sum(ts) => ScalarExpr::sum(ts.iter().map(|t| t.map_terminals(f)).collect::<Result<_, _>>()?),
            ScalarExpr::Product(ts) => {
                ScalarExpr::product(ts.iter().map(|t| t.map_terminals(f)).collect::<Result<_, _>>()?)
            }
            ScalarExpr::Div(a, b) => ScalarExpr::quotient(a.map_terminals(f)?, b.map_terminals(f)?),
            ScalarExpr::Pow(a, p) => ScalarExpr::pow(a.map_terminals(f)?, *p),
        })
    }

    pub fn visit_terminals(&self, f: &mut impl FnMut(&Terminal)) {
        match self {
            ScalarExpr::Const(_) => {}
            ScalarExpr::Terminal(t) => f(t),
            ScalarExpr::Sum(ts) | ScalarExpr::Product(ts) => ts.iter().for_each(|t| t.visit_terminals(f)),
            ScalarExpr::Div(a, b) => {
                a.visit_terminals(f);
                b.visit_terminals(f);
            }
            ScalarExpr::Pow(a, _) => a.visit_terminals(f),
        }
    }

    pub fn terminals(&self) -> Vec<Terminal> {
        let mut out = Vec::new();
        self.visit_terminals(&mut |t| out.push(*t));
        out.sort();
        out.dedup();
        out
    }

    /// Polynomial degree in the basis functions of `role`, or `None` when
    /// the expression is not a polynomial in them or mixes degrees across
    /// the terms of a sum.
    pub fn degree_in(&self, role: Role) -> Option<u32> {
        match self {
            ScalarExpr::Const(_) => Some(0),
            ScalarExpr::Terminal(t) => Some(u32::from(t.role == role)),
            ScalarExpr::Sum(ts) => {
                let first = ts[0].degree_in(role)?;
                ts[1..].iter().all(|t| t.degree_in(role) == Some(first)).then_some(first)
            }
            ScalarExpr::Product(ts) => ts.iter().map(|t| t.degree_in(role)).sum(),
            ScalarExpr::Div(a, b) => match b.degree_in(role)? {
                0 => a.degree_in(role),
                _ => None,
            },
            ScalarExpr::Pow(a, p) => match a.degree_in(role)? {
                0 => Some(0),
                d if *p >= 0.0 && p.fract() == 0.0 => Some(d * *p as u32),
                _ => None,
            },
        }
    }

    /// Numerical value given the values of all terminals.
    pub fn evaluate(&self, terminal: &impl Fn(&Terminal) -> f64) -> f64 {
        match self {
            ScalarExpr::Const(c) => *c,
            ScalarExpr::Terminal(t) => terminal(t),
            ScalarExpr::Sum(ts) => ts.iter().map(|t| t.evaluate(terminal)).sum(),
            ScalarExpr::Product(ts) => ts.iter().map(|t| t.evaluate(terminal)).product(),
            ScalarExpr::Div(a, b) => a.evaluate(terminal) / b.evaluate(terminal),
            ScalarExpr::Pow(a, p) => {
                let b = a.evaluate(terminal);
                if p.fract() == 0.0 && p.abs() < 64.0 {
                    b.powi(*p as i32)
                } else {
                    b.powf(*p)
                }
            }
        }
    }
}

fn write_number(f: &mut fmt::Formatter<'_>, c: f64) -> fmt::Result {
    if c < 0.0 {
        write!(f, "({c:?})")
    } else {
        write!(f, "{c:?}")
    }
}

impl fmt::Display for ScalarExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarExpr::Const(c) => write_number(f, *c),
            ScalarExpr::Terminal(t) => write!(f, "{t}"),
            ScalarExpr::Sum(ts) => {
                write!(f, "(")?;
                for (k, t) in ts.iter().enumerate() {
                    if k > 0 {
                        write!(f, " + ")?;
                    }
                    write!(f, "{t}")?;
                }
                write!(f, ")")
            }
            ScalarExpr::Product(ts) => {
                for (k, t) in ts.iter().enumerate() {
                    if k > 0 {
                        write!(f, "*")?;
                    }
                    write!(f, "{t}")?;
                }
                Ok(())
            }
            ScalarExpr::Div(a, b) => write!(f, "({a})/({b})"),
            ScalarExpr::Pow(a, p) => {
                write!(f, "({a})**")?;
                write_number(f, *p)
            }
        }
    }
}

impl std::ops::Add for ScalarExpr {
    type Output = ScalarExpr;

    fn add(self, other: ScalarExpr) -> ScalarExpr {
        ScalarExpr::sum(vec![self, other])
    }
}

impl std::ops::Sub for ScalarExpr {
    type Output = ScalarExpr;

    fn sub(self, other: ScalarExpr) -> ScalarExpr {
        ScalarExpr::sum(vec![self, -other])
    }
}

impl std::ops::Mul for ScalarExpr {
    type Output = ScalarExpr;

    fn mul(self, other: ScalarExpr) -> ScalarExpr {
        ScalarExpr::product(vec![self, other])
    }
}

impl std::ops::Div for ScalarExpr {
    type Output = ScalarExpr;

    fn div(self, other: ScalarExpr) -> ScalarExpr {
        ScalarExpr::quotient(self, other)
    }
}

impl std::ops::Neg for ScalarExpr {
    type Output = ScalarExpr;

    fn neg(self) -> ScalarExpr {
        self.scale(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(role: Role, component: usize) -> ScalarExpr {
        ScalarExpr::terminal(Terminal { role, component, derivative: None, restriction: None })
    }

    #[test]
    fn canonical_sums_and_products() {
        let a = t(Role::Argument(0), 0);
        let b = t(Role::Coefficient(1), 0);
        let s1 = ScalarExpr::sum(vec![a.clone(), b.clone(), ScalarExpr::Const(1.0)]);
        let s2 = ScalarExpr::sum(vec![ScalarExpr::Const(0.5), b.clone(), ScalarExpr::Const(0.5), a.clone()]);
        assert_eq!(s1, s2);
        assert_eq!(ScalarExpr::product(vec![a.clone(), ScalarExpr::zero(), b.clone()]), ScalarExpr::zero());
        assert_eq!(ScalarExpr::product(vec![a.clone(), ScalarExpr::Const(1.0)]), a);
        assert_eq!(a.clone() * b.clone(), b * a);
    }

    #[test]
    fn product_rule() {
        let a = t(Role::Argument(0), 0);
        let b = t(Role::Argument(1), 0);
        let d = (a.clone() * b.clone()).derivative(1).unwrap();
        let expect = a.derivative(1).unwrap() * b.clone() + a.clone() * b.derivative(1).unwrap();
        assert_eq!(d, expect);
        assert!(matches!(d.derivative(0), Err(DerivativeError::SecondDerivative(_))));
    }

    #[test]
    fn degrees_and_evaluation() {
        let v = t(Role::Argument(0), 0);
        let w = t(Role::Coefficient(0), 0);
        let e = ScalarExpr::pow(w.clone(), 0.3) * v.clone();
        assert_eq!(e.degree_in(Role::Argument(0)), Some(1));
        assert_eq!(ScalarExpr::pow(v.clone(), 0.5).degree_in(Role::Argument(0)), None);
        assert_eq!((v.clone() + w.clone()).degree_in(Role::Argument(0)), None);
        let val = e.evaluate(&|t: &Terminal| if t.role == Role::Argument(0) { 2.0 } else { 4.0 });
        assert!((val - 2.0 * 4f64.powf(0.3)).abs() < 1e-15);
    }
}
