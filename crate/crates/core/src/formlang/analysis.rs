//! Lowering of named forms to scalar integrands and the form descriptor.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write;

use super::ast::{BinOp, Expr, ExprKind, FormAst, Span};
use super::ir::{DerivativeError, Restriction, Role, ScalarExpr, Terminal};
use super::FormError;
use crate::element::{Family, FiniteElement};
use crate::mesh::ReferenceShape;

/// The three kinds of integrals a form may contain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum IntegralKind {
    Cell,
    ExteriorFacet,
    InteriorFacet,
}

impl IntegralKind {
    pub const ALL: [IntegralKind; 3] = [IntegralKind::Cell, IntegralKind::ExteriorFacet, IntegralKind::InteriorFacet];

    pub fn name(self) -> &'static str {
        match self {
            IntegralKind::Cell => "cell",
            IntegralKind::ExteriorFacet => "exterior_facet",
            IntegralKind::InteriorFacet => "interior_facet",
        }
    }

    pub fn measure(self) -> &'static str {
        match self {
            IntegralKind::Cell => "dx",
            IntegralKind::ExteriorFacet => "ds",
            IntegralKind::InteriorFacet => "dS",
        }
    }
}

/// Everything the assembler and kernels need to know about one form.
#[derive(Clone, Debug, PartialEq)]
pub struct FormDescriptor {
    pub name: String,
    pub rank: usize,
    /// Test function first, then trial function.
    pub argument_names: Vec<String>,
    pub argument_elements: Vec<FiniteElement>,
    /// In declaration order.
    pub coefficient_names: Vec<String>,
    pub coefficient_elements: Vec<FiniteElement>,
    pub cell_integrals: BTreeMap<usize, ScalarExpr>,
    pub exterior_facet_integrals: BTreeMap<usize, ScalarExpr>,
    pub interior_facet_integrals: BTreeMap<usize, ScalarExpr>,
}

impl FormDescriptor {
    pub fn num_coefficients(&self) -> usize {
        self.coefficient_elements.len()
    }

    /// `(r, n)`
    pub fn arity(&self) -> (usize, usize) {
        (self.rank, self.num_coefficients())
    }

    pub fn integrals(&self, kind: IntegralKind) -> &BTreeMap<usize, ScalarExpr> {
        match kind {
            IntegralKind::Cell => &self.cell_integrals,
            IntegralKind::ExteriorFacet => &self.exterior_facet_integrals,
            IntegralKind::InteriorFacet => &self.interior_facet_integrals,
        }
    }

    pub fn element(&self, role: Role) -> &FiniteElement {
        match role {
            Role::Argument(k) => &self.argument_elements[k],
            Role::Coefficient(k) => &self.coefficient_elements[k],
        }
    }

    pub fn shape(&self) -> ReferenceShape {
        self.argument_elements
            .iter()
            .chain(&self.coefficient_elements)
            .next()
            .map(FiniteElement::shape)
            .expect("forms have at least one argument or coefficient")
    }

    /// Deterministic text listing of the descriptor.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "form {}", self.name);
        let _ = writeln!(s, "rank {}", self.rank);
        let _ = writeln!(s, "num_coefficients {}", self.num_coefficients());
        for (k, (n, e)) in self.argument_names.iter().zip(&self.argument_elements).enumerate() {
            let _ = writeln!(s, "argument {k} {n} {}", e.signature());
        }
        for (k, (n, e)) in self.coefficient_names.iter().zip(&self.coefficient_elements).enumerate() {
            let _ = writeln!(s, "coefficient {k} {n} {}", e.signature());
        }
        for kind in IntegralKind::ALL {
            for (id, e) in self.integrals(kind) {
                let _ = writeln!(s, "integral {} {id} {e}", kind.name());
            }
        }
        s
    }
}

/// Result of [`integrand_polynomial_degree`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PolynomialDegree {
    Polynomial(usize),
    NonPolynomial,
}

impl PolynomialDegree {
    pub fn polynomial(self) -> Option<usize> {
        match self {
            PolynomialDegree::Polynomial(d) => Some(d),
            PolynomialDegree::NonPolynomial => None,
        }
    }
}

/// Total degree of the integrand in reference coordinates on affine cells.
pub fn integrand_polynomial_degree(expr: &ScalarExpr, descriptor: &FormDescriptor) -> PolynomialDegree {
    fn go(e: &ScalarExpr, d: &FormDescriptor) -> Option<usize> {
        match e {
            ScalarExpr::Const(_) => Some(0),
            ScalarExpr::Terminal(t) => {
                let q = d.element(t.role).degree();
                Some(if t.derivative.is_some() { q.saturating_sub(1) } else { q })
            }
            ScalarExpr::Sum(ts) => ts.iter().map(|t| go(t, d)).try_fold(0, |a, b| Some(a.max(b?))),
            ScalarExpr::Product(ts) => ts.iter().map(|t| go(t, d)).sum(),
            ScalarExpr::Div(a, b) => match **b {
                ScalarExpr::Const(_) => go(a, d),
                _ => None,
            },
            ScalarExpr::Pow(a, p) => {
                if *p >= 0.0 && p.fract() == 0.0 {
                    Some(go(a, d)? * *p as usize)
                } else {
                    None
                }
            }
        }
    }
    match go(expr, descriptor) {
        Some(n) => PolynomialDegree::Polynomial(n),
        None => PolynomialDegree::NonPolynomial,
    }
}

/// Largest element degree among the terminals of `expr`.
pub fn max_element_degree(expr: &ScalarExpr, descriptor: &FormDescriptor) -> usize {
    expr.terminals().iter().map(|t| descriptor.element(t.role).degree()).max().unwrap_or(0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum FunctionKind {
    Test,
    Trial,
    Coefficient,
}

#[derive(Clone, Debug)]
struct FunctionDecl {
    name: String,
    kind: FunctionKind,
    element: FiniteElement,
}

/// A tensor-valued expression with free indices. Components are stored
/// row-major over the free index values followed by the shape.
#[derive(Clone, Debug)]
struct Tensor {
    free: Vec<(String, usize)>,
    contracted: BTreeSet<String>,
    shape: Vec<usize>,
    comps: Vec<ScalarExpr>,
}

fn count(dims: impl IntoIterator<Item = usize>) -> usize {
    dims.into_iter().product()
}

fn unravel(mut flat: usize, dims: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; dims.len()];
    for k in (0..dims.len()).rev() {
        idx[k] = flat % dims[k];
        flat /= dims[k];
    }
    idx
}

impl Tensor {
    fn scalar(e: ScalarExpr) -> Self {
        Tensor { free: vec![], contracted: BTreeSet::new(), shape: vec![], comps: vec![e] }
    }

    fn is_plain_scalar(&self) -> bool {
        self.shape.is_empty() && self.free.is_empty()
    }

    /// Component at the given free index values (by name) and shape index.
    fn at(&self, values: &HashMap<&str, usize>, idx: &[usize]) -> &ScalarExpr {
        let mut flat = 0;
        for (name, d) in &self.free {
            flat = flat * d + values[name.as_str()];
        }
        for (i, d) in idx.iter().zip(&self.shape) {
            flat = flat * d + i;
        }
        &self.comps[flat]
    }

    /// Builds a tensor by evaluating `f` for every free-index assignment and
    /// shape index.
    fn build(
        free: Vec<(String, usize)>,
        contracted: BTreeSet<String>,
        shape: Vec<usize>,
        mut f: impl FnMut(&HashMap<&str, usize>, &[usize]) -> Result<ScalarExpr, FormError>,
    ) -> Result<Tensor, FormError> {
        let fd: Vec<usize> = free.iter().map(|x| x.1).collect();
        let nf = count(fd.iter().copied());
        let ns = count(shape.iter().copied());
        let mut comps = Vec::with_capacity(nf * ns);
        for a in 0..nf {
            let fv = unravel(a, &fd);
            let values: HashMap<&str, usize> = free.iter().map(|x| x.0.as_str()).zip(fv).collect();
            for b in 0..ns {
                comps.push(f(&values, &unravel(b, &shape))?);
            }
        }
        Ok(Tensor { free, contracted, shape, comps })
    }

    fn map(&self, mut f: impl FnMut(&ScalarExpr) -> Result<ScalarExpr, FormError>) -> Result<Tensor, FormError> {
        Ok(Tensor {
            free: self.free.clone(),
            contracted: self.contracted.clone(),
            shape: self.shape.clone(),
            comps: self.comps.iter().map(&mut f).collect::<Result<_, _>>()?,
        })
    }
}

#[derive(Clone, Debug)]
enum Value {
    Str(String),
    Element(FiniteElement),
    Function(usize),
    Index(String),
    Measure(IntegralKind, usize),
    Tensor(Tensor),
    Form(Vec<Term>),
}

impl Value {
    fn describe(&self) -> &'static str {
        match self {
            Value::Str(_) => "a string",
            Value::Element(_) => "an element",
            Value::Function(_) => "a function",
            Value::Index(_) => "an index",
            Value::Measure(..) => "a measure",
            Value::Tensor(_) => "an expression",
            Value::Form(_) => "a form",
        }
    }
}

#[derive(Clone, Debug)]
struct Term {
    kind: IntegralKind,
    subdomain: usize,
    integrand: ScalarExpr,
    span: Span,
}

fn shape_err(span: Span, message: impl Into<String>) -> FormError {
    FormError::Shape { span, message: message.into() }
}

fn index_err(span: Span, message: impl Into<String>) -> FormError {
    FormError::IndexArity { span, message: message.into() }
}

fn type_err(span: Span, message: impl Into<String>) -> FormError {
    FormError::Type { span, message: message.into() }
}

struct Lowering {
    env: HashMap<String, Value>,
    functions: Vec<FunctionDecl>,
}

impl Lowering {
    fn new() -> Self {
        Lowering { env: HashMap::new(), functions: Vec::new() }
    }

    fn lookup(&self, name: &str, span: Span) -> Result<Value, FormError> {
        if let Some(v) = self.env.get(name) {
            return Ok(v.clone());
        }
        Ok(match name {
            "dx" => Value::Measure(IntegralKind::Cell, 0),
            "ds" => Value::Measure(IntegralKind::ExteriorFacet, 0),
            "dS" => Value::Measure(IntegralKind::InteriorFacet, 0),
            "i" | "j" | "k" | "l" => Value::Index(name.to_string()),
            _ => return Err(FormError::UnknownIdentifier { name: name.to_string(), span }),
        })
    }

    fn function_tensor(&self, id: usize) -> Tensor {
        let decl = &self.functions[id];
        let role = match decl.kind {
            FunctionKind::Test | FunctionKind::Trial => Role::Argument(id),
            FunctionKind::Coefficient => Role::Coefficient(id),
        };
        let n = decl.element.value_size();
        let shape = if decl.element.is_vector() { vec![n] } else { vec![] };
        let comps = (0..n)
            .map(|component| ScalarExpr::terminal(Terminal { role, component, derivative: None, restriction: None }))
            .collect();
        Tensor { free: vec![], contracted: BTreeSet::new(), shape, comps }
    }

    fn tensor(&self, v: Value, span: Span) -> Result<Tensor, FormError> {
        match v {
            Value::Tensor(t) => Ok(t),
            Value::Function(id) => Ok(self.function_tensor(id)),
            other => Err(type_err(span, format!("expected an expression, found {}", other.describe()))),
        }
    }

    fn eval_tensor(&mut self, e: &Expr) -> Result<Tensor, FormError> {
        let v = self.eval(e)?;
        self.tensor(v, e.span)
    }

    fn constant(&mut self, e: &Expr) -> Result<f64, FormError> {
        let t = self.eval_tensor(e)?;
        match (t.is_plain_scalar(), t.comps[0].constant()) {
            (true, Some(c)) => Ok(c),
            _ => Err(type_err(e.span, "expected a constant number")),
        }
    }

    fn string(&mut self, e: &Expr) -> Result<String, FormError> {
        match self.eval(e)? {
            Value::Str(s) => Ok(s),
            other => Err(type_err(e.span, format!("expected a string, found {}", other.describe()))),
        }
    }

    fn gdim(&self) -> usize {
        self.functions.first().map(|f| f.element.tdim()).unwrap_or(0)
    }

    fn eval(&mut self, e: &Expr) -> Result<Value, FormError> {
        let span = e.span;
        match &e.kind {
            ExprKind::Number(x) => Ok(Value::Tensor(Tensor::scalar(ScalarExpr::Const(*x)))),
            ExprKind::Str(s) => Ok(Value::Str(s.clone())),
            ExprKind::Name(n) => self.lookup(n, span),
            ExprKind::Call { func, args } => self.call(func, args, span),
            ExprKind::Index { base, indices } => {
                let t = self.eval_tensor(base)?;
                let mut slots = Vec::with_capacity(indices.len());
                for ix in indices {
                    slots.push(self.index_slot(ix)?);
                }
                Ok(Value::Tensor(self.index(t, &slots, span)?))
            }
            ExprKind::Derivative { base, direction } => {
                let t = self.eval_tensor(base)?;
                let slot = self.index_slot(direction)?;
                Ok(Value::Tensor(self.derivative_along(&t, slot, span)?))
            }
            ExprKind::Neg(inner) => match self.eval(inner)? {
                Value::Form(terms) => Ok(Value::Form(scale_terms(terms, -1.0))),
                v => Ok(Value::Tensor(self.tensor(v, inner.span)?.map(|c| Ok(-c.clone()))?)),
            },
            ExprKind::Binary { op, lhs, rhs } => {
                let a = self.eval(lhs)?;
                let b = self.eval(rhs)?;
                self.binary(*op, a, b, lhs.span, rhs.span)
            }
        }
    }

    fn index_slot(&mut self, e: &Expr) -> Result<Slot, FormError> {
        match self.eval(e)? {
            Value::Index(n) => Ok(Slot::Free(n)),
            Value::Tensor(t) if t.is_plain_scalar() => match t.comps[0].constant() {
                Some(c) if c >= 0.0 && c.fract() == 0.0 => Ok(Slot::Fixed(c as usize)),
                _ => Err(type_err(e.span, "component index must be a non-negative integer or an index")),
            },
            other => Err(type_err(e.span, format!("expected an index, found {}", other.describe()))),
        }
    }

    /// Applies index slots to the leading shape axes of `t`. Repeated index
    /// names are summed.
    fn index(&self, t: Tensor, slots: &[Slot], span: Span) -> Result<Tensor, FormError> {
        if slots.len() > t.shape.len() {
            return Err(shape_err(
                span,
                format!("{} indices applied to a tensor of rank {}", slots.len(), t.shape.len()),
            ));
        }
        let mut occurrences: BTreeMap<&str, usize> = BTreeMap::new();
        for (k, s) in slots.iter().enumerate() {
            match s {
                Slot::Fixed(c) if *c >= t.shape[k] => {
                    return Err(shape_err(span, format!("component {c} out of range for dimension {}", t.shape[k])));
                }
                Slot::Free(n) => {
                    if t.contracted.contains(n) {
                        return Err(index_err(span, format!("index '{n}' used more than twice")));
                    }
                    *occurrences.entry(n.as_str()).or_default() += 1;
                }
                _ => {}
            }
        }
        for (n, _) in &t.free {
            if let Some(c) = occurrences.get_mut(n.as_str()) {
                *c += 1;
            }
        }
        let mut new_free = Vec::new();
        let mut summed: Vec<(String, usize)> = Vec::new();
        for (k, s) in slots.iter().enumerate() {
            if let Slot::Free(n) = s {
                let dim = t.shape[k];
                let existing = t.free.iter().find(|f| &f.0 == n).map(|f| f.1);
                let other_slot =
                    slots.iter().enumerate().find(|(m, o)| *m != k && matches!(o, Slot::Free(x) if x == n));
                if let Some(d) = existing.or(other_slot.map(|(m, _)| t.shape[m])) {
                    if d != dim {
                        return Err(shape_err(span, format!("index '{n}' ranges over {d} and {dim}")));
                    }
                }
                match occurrences[n.as_str()] {
                    1 => new_free.push((n.clone(), dim)),
                    2 => {
                        if !summed.iter().any(|x| &x.0 == n) {
                            summed.push((n.clone(), dim));
                        }
                    }
                    _ => return Err(index_err(span, format!("index '{n}' used more than twice"))),
                }
            }
        }
        let kept_free: Vec<(String, usize)> =
            t.free.iter().filter(|f| !summed.iter().any(|s| s.0 == f.0)).cloned().collect();
        let free: Vec<(String, usize)> = kept_free.into_iter().chain(new_free).collect();
        let rest_shape = t.shape[slots.len()..].to_vec();
        let mut contracted = t.contracted.clone();
        contracted.extend(summed.iter().map(|s| s.0.clone()));
        let sum_dims: Vec<usize> = summed.iter().map(|s| s.1).collect();
        Tensor::build(free, contracted, rest_shape, |values, rest| {
            let mut terms = Vec::new();
            for flat in 0..count(sum_dims.iter().copied()) {
                let sv = unravel(flat, &sum_dims);
                let mut vals: HashMap<&str, usize> = values.clone();
                for (s, v) in summed.iter().zip(&sv) {
                    vals.insert(s.0.as_str(), *v);
                }
                let mut idx: Vec<usize> = slots
                    .iter()
                    .map(|s| match s {
                        Slot::Fixed(c) => *c,
                        Slot::Free(n) => vals[n.as_str()],
                    })
                    .collect();
                idx.extend_from_slice(rest);
                terms.push(t.at(&vals, &idx).clone());
            }
            Ok(ScalarExpr::sum(terms))
        })
    }

    fn derivative(&self, c: &ScalarExpr, k: usize, span: Span) -> Result<ScalarExpr, FormError> {
        c.derivative(k).map_err(|DerivativeError::SecondDerivative(t)| {
            type_err(span, format!("second derivatives are not supported (of {t})"))
        })
    }

    /// `t.dx(slot)`: a fixed direction, a new free index, or a sum when the
    /// index is already free in `t`.
    fn derivative_along(&self, t: &Tensor, slot: Slot, span: Span) -> Result<Tensor, FormError> {
        let gdim = self.gdim();
        match slot {
            Slot::Fixed(k) => {
                if k >= gdim {
                    return Err(shape_err(span, format!("direction {k} out of range for dimension {gdim}")));
                }
                t.map(|c| self.derivative(c, k, span))
            }
            Slot::Free(n) => {
                if t.contracted.contains(&n) {
                    return Err(index_err(span, format!("index '{n}' used more than twice")));
                }
                if let Some(&(_, d)) = t.free.iter().find(|f| f.0 == n) {
                    if d != gdim {
                        return Err(shape_err(span, format!("index '{n}' ranges over {d} and {gdim}")));
                    }
                    let free: Vec<(String, usize)> = t.free.iter().filter(|f| f.0 != n).cloned().collect();
                    let mut contracted = t.contracted.clone();
                    contracted.insert(n.clone());
                    Tensor::build(free, contracted, t.shape.clone(), |values, idx| {
                        let mut terms = Vec::with_capacity(gdim);
                        for k in 0..gdim {
                            let mut vals = values.clone();
                            vals.insert(n.as_str(), k);
                            terms.push(self.derivative(t.at(&vals, idx), k, span)?);
                        }
                        Ok(ScalarExpr::sum(terms))
                    })
                } else {
                    let mut free = t.free.clone();
                    free.push((n.clone(), gdim));
                    Tensor::build(free, t.contracted.clone(), t.shape.clone(), |values, idx| {
                        self.derivative(t.at(values, idx), values[n.as_str()], span)
                    })
                }
            }
        }
    }

    /// Appends a trailing axis of length gdim holding partial derivatives.
    fn grad(&self, t: &Tensor, span: Span) -> Result<Tensor, FormError> {
        let gdim = self.gdim();
        let mut comps = Vec::with_capacity(t.comps.len() * gdim);
        for c in &t.comps {
            for k in 0..gdim {
                comps.push(self.derivative(c, k, span)?);
            }
        }
        let mut shape = t.shape.clone();
        shape.push(gdim);
        Ok(Tensor { free: t.free.clone(), contracted: t.contracted.clone(), shape, comps })
    }

    fn call(&mut self, func: &str, args: &[Expr], span: Span) -> Result<Value, FormError> {
        let arity = |n: std::ops::RangeInclusive<usize>| -> Result<(), FormError> {
            if n.contains(&args.len()) {
                Ok(())
            } else {
                Err(type_err(span, format!("{func} takes {n:?} arguments, got {}", args.len())))
            }
        };
        match func {
            "FiniteElement" | "VectorElement" => {
                arity(3..=4)?;
                let family_name = self.string(&args[0])?;
                let shape_name = self.string(&args[1])?;
                let degree = self.constant(&args[2])?;
                let size = match args.get(3) {
                    Some(a) => Some(self.constant(a)?),
                    None => None,
                };
                let element_err = |m: String| FormError::Element { span, message: m };
                let family: Family =
                    family_name.parse().map_err(|e: crate::element::ElementError| element_err(e.to_string()))?;
                let family = match (func, family) {
                    ("VectorElement", Family::Lagrange) => Family::VectorLagrange,
                    ("VectorElement", f) if f != Family::VectorLagrange => {
                        return Err(element_err(format!("vector elements of family '{family_name}' are not supported")))
                    }
                    ("FiniteElement", _) if size.is_some() => {
                        return Err(element_err("FiniteElement takes three arguments".into()))
                    }
                    (_, f) => f,
                };
                let shape: ReferenceShape =
                    shape_name.parse().map_err(|_| element_err(format!("unknown cell shape '{shape_name}'")))?;
                if degree < 0.0 || degree.fract() != 0.0 || size.is_some_and(|s| s < 1.0 || s.fract() != 0.0) {
                    return Err(element_err("degree and size must be non-negative integers".into()));
                }
                let element = FiniteElement::new(family, shape, degree as usize, size.map(|s| s as usize))
                    .map_err(|e| element_err(e.to_string()))?;
                Ok(Value::Element(element))
            }
            "TestFunction" | "TrialFunction" | "Function" | "Coefficient" => {
                arity(1..=1)?;
                let element = match self.eval(&args[0])? {
                    Value::Element(e) => e,
                    other => {
                        return Err(type_err(args[0].span, format!("expected an element, found {}", other.describe())))
                    }
                };
                let kind = match func {
                    "TestFunction" => FunctionKind::Test,
                    "TrialFunction" => FunctionKind::Trial,
                    _ => FunctionKind::Coefficient,
                };
                if let Some(first) = self.functions.first() {
                    if first.element.shape() != element.shape() {
                        return Err(FormError::MixedCells {
                            span,
                            first: first.element.shape().to_string(),
                            second: element.shape().to_string(),
                        });
                    }
                }
                self.functions.push(FunctionDecl { name: String::new(), kind, element });
                Ok(Value::Function(self.functions.len() - 1))
            }
            "Index" => {
                arity(0..=0)?;
                Ok(Value::Index(format!("#{span}")))
            }
            "grad" => {
                arity(1..=1)?;
                let t = self.eval_tensor(&args[0])?;
                if t.shape.len() > 1 {
                    return Err(shape_err(span, "grad of a tensor of rank 2 is not supported"));
                }
                Ok(Value::Tensor(self.grad(&t, span)?))
            }
            "div" => {
                arity(1..=1)?;
                let t = self.eval_tensor(&args[0])?;
                let gdim = self.gdim();
                if t.shape.last() != Some(&gdim) {
                    return Err(shape_err(
                        span,
                        format!("div requires a vector of length {gdim}, found shape {:?}", t.shape),
                    ));
                }
                let g = self.grad(&t, span)?;
                let mut out_shape = t.shape.clone();
                out_shape.pop();
                Tensor::build(t.free.clone(), t.contracted.clone(), out_shape, |values, idx| {
                    let mut terms = Vec::with_capacity(gdim);
                    for k in 0..gdim {
                        let mut full: Vec<usize> = idx.to_vec();
                        full.push(k);
                        full.push(k);
                        terms.push(g.at(values, &full).clone());
                    }
                    Ok(ScalarExpr::sum(terms))
                })
                .map(Value::Tensor)
            }
            "dot" | "inner" => {
                arity(2..=2)?;
                let a = self.eval_tensor(&args[0])?;
                let b = self.eval_tensor(&args[1])?;
                if func == "inner" {
                    if a.shape != b.shape {
                        return Err(shape_err(span, format!("inner of shapes {:?} and {:?}", a.shape, b.shape)));
                    }
                    let n = a.shape.len();
                    contract(&a, &b, n, span).map(Value::Tensor)
                } else {
                    if a.shape.is_empty() && b.shape.is_empty() {
                        return contract(&a, &b, 0, span).map(Value::Tensor);
                    }
                    if a.shape.is_empty() || b.shape.is_empty() || a.shape.last() != b.shape.first() {
                        return Err(shape_err(span, format!("dot of shapes {:?} and {:?}", a.shape, b.shape)));
                    }
                    contract(&a, &b, 1, span).map(Value::Tensor)
                }
            }
            "pos" | "neg" | "jump" | "avg" => {
                arity(1..=1)?;
                let t = self.eval_tensor(&args[0])?;
                let plus = restrict(&t, Restriction::Plus, span)?;
                let minus = restrict(&t, Restriction::Minus, span)?;
                let out = match func {
                    "pos" => plus,
                    "neg" => minus,
                    "jump" => zip(&plus, &minus, |p, m| p.clone() - m.clone()),
                    _ => zip(&plus, &minus, |p, m| (p.clone() + m.clone()).scale(0.5)),
                };
                Ok(Value::Tensor(out))
            }
            "dx" | "ds" | "dS" => {
                arity(1..=1)?;
                let Value::Measure(kind, _) = self.lookup(func, span)? else { unreachable!() };
                let k = self.constant(&args[0])?;
                if k < 0.0 || k.fract() != 0.0 {
                    return Err(type_err(args[0].span, "subdomain id must be a non-negative integer"));
                }
                Ok(Value::Measure(kind, k as usize))
            }
            other => Err(type_err(span, format!("'{other}' is not callable"))),
        }
    }

    fn integral(&self, v: Value, kind: IntegralKind, subdomain: usize, span: Span) -> Result<Value, FormError> {
        let t = self.tensor(v, span)?;
        if !t.shape.is_empty() {
            return Err(shape_err(span, format!("integrand must be scalar, found shape {:?}", t.shape)));
        }
        if let Some((n, _)) = t.free.first() {
            return Err(index_err(span, format!("free index '{n}' is not summed in the integrand")));
        }
        Ok(Value::Form(vec![Term { kind, subdomain, integrand: t.comps[0].clone(), span }]))
    }

    fn scale_form(&self, terms: Vec<Term>, v: Value, span: Span) -> Result<Value, FormError> {
        let t = self.tensor(v, span)?;
        if !t.is_plain_scalar() {
            return Err(shape_err(span, "a form can only be multiplied by a scalar"));
        }
        let f = t.comps[0].clone();
        Ok(Value::Form(terms.into_iter().map(|tm| Term { integrand: tm.integrand * f.clone(), ..tm }).collect()))
    }

    fn binary(&mut self, op: BinOp, a: Value, b: Value, la: Span, lb: Span) -> Result<Value, FormError> {
        match (op, a, b) {
            (BinOp::Add | BinOp::Sub, Value::Form(x), Value::Form(y)) => {
                let y = if op == BinOp::Sub { scale_terms(y, -1.0) } else { y };
                Ok(Value::Form(x.into_iter().chain(y).collect()))
            }
            (BinOp::Mul, Value::Measure(kind, subdomain), other) => self.integral(other, kind, subdomain, lb),
            (BinOp::Mul, other, Value::Measure(kind, subdomain)) => self.integral(other, kind, subdomain, la),
            (BinOp::Mul, Value::Form(terms), other) => self.scale_form(terms, other, lb),
            (BinOp::Mul, other, Value::Form(terms)) => self.scale_form(terms, other, la),
            (_, a, b) => {
                let x = self.tensor(a, la)?;
                let y = self.tensor(b, lb)?;
                match op {
                    BinOp::Add | BinOp::Sub => {
                        let sign = if op == BinOp::Sub { -1.0 } else { 1.0 };
                        add(&x, &y, sign, lb).map(Value::Tensor)
                    }
                    BinOp::Mul => {
                        if !x.shape.is_empty() && !y.shape.is_empty() {
                            return Err(shape_err(
                                lb,
                                format!("'*' between shapes {:?} and {:?}; use dot or inner", x.shape, y.shape),
                            ));
                        }
                        contract(&x, &y, 0, lb).map(Value::Tensor)
                    }
                    BinOp::Div => {
                        if !y.is_plain_scalar() {
                            return Err(shape_err(lb, "denominator must be a scalar without free indices"));
                        }
                        let d = y.comps[0].clone();
                        x.map(|c| Ok(c.clone() / d.clone())).map(Value::Tensor)
                    }
                    BinOp::Pow => {
                        if !x.is_plain_scalar() {
                            return Err(shape_err(la, "base of '**' must be a scalar without free indices"));
                        }
                        let p = match (y.is_plain_scalar(), y.comps[0].constant()) {
                            (true, Some(p)) => p,
                            _ => return Err(type_err(lb, "exponent must be a constant number")),
                        };
                        Ok(Value::Tensor(Tensor::scalar(ScalarExpr::pow(x.comps[0].clone(), p))))
                    }
                }
            }
        }
    }
}

#[derive(Clone, Debug)]
enum Slot {
    Fixed(usize),
    Free(String),
}

fn scale_terms(terms: Vec<Term>, c: f64) -> Vec<Term> {
    terms.into_iter().map(|t| Term { integrand: t.integrand.scale(c), ..t }).collect()
}

fn restrict(t: &Tensor, side: Restriction, span: Span) -> Result<Tensor, FormError> {
    t.map(|c| {
        c.map_terminals(&mut |term: Terminal| {
            if term.restriction.is_some() {
                return Err(type_err(span, "expression is already restricted"));
            }
            Ok(ScalarExpr::terminal(Terminal { restriction: Some(side), ..term }))
        })
    })
}

fn zip(a: &Tensor, b: &Tensor, f: impl Fn(&ScalarExpr, &ScalarExpr) -> ScalarExpr) -> Tensor {
    Tensor {
        free: a.free.clone(),
        contracted: a.contracted.clone(),
        shape: a.shape.clone(),
        comps: a.comps.iter().zip(&b.comps).map(|(x, y)| f(x, y)).collect(),
    }
}

/// `a + sign * b`; free index sets must agree.
fn add(a: &Tensor, b: &Tensor, sign: f64, span: Span) -> Result<Tensor, FormError> {
    if a.shape != b.shape {
        return Err(shape_err(span, format!("cannot add shapes {:?} and {:?}", a.shape, b.shape)));
    }
    let names = |t: &Tensor| t.free.iter().cloned().collect::<BTreeSet<_>>();
    if names(a) != names(b) {
        return Err(index_err(span, "terms of a sum have different free indices"));
    }
    let contracted: BTreeSet<String> = a.contracted.union(&b.contracted).cloned().collect();
    if a.free.iter().any(|f| contracted.contains(&f.0)) {
        return Err(index_err(span, "index is both free and summed"));
    }
    Tensor::build(a.free.clone(), contracted, a.shape.clone(), |values, idx| {
        Ok(a.at(values, idx).clone() + b.at(values, idx).clone().scale(sign))
    })
}

/// Product of `a` and `b` summing the last `axes` axes of `a` against the
/// first `axes` axes of `b`, plus Einstein summation over shared free
/// indices.
fn contract(a: &Tensor, b: &Tensor, axes: usize, span: Span) -> Result<Tensor, FormError> {
    for (n, _) in &b.free {
        if a.contracted.contains(n) {
            return Err(index_err(span, format!("index '{n}' used more than twice")));
        }
    }
    for (n, _) in &a.free {
        if b.contracted.contains(n) {
            return Err(index_err(span, format!("index '{n}' used more than twice")));
        }
    }
    let mut shared = Vec::new();
    for (n, d) in &a.free {
        if let Some((_, e)) = b.free.iter().find(|f| &f.0 == n) {
            if d != e {
                return Err(shape_err(span, format!("index '{n}' ranges over {d} and {e}")));
            }
            shared.push((n.clone(), *d));
        }
    }
    let free: Vec<(String, usize)> =
        a.free.iter().chain(&b.free).filter(|f| !shared.iter().any(|s| s.0 == f.0)).cloned().collect();
    let mut contracted: BTreeSet<String> = a.contracted.union(&b.contracted).cloned().collect();
    contracted.extend(shared.iter().map(|s| s.0.clone()));
    let ra = a.shape.len() - axes;
    let shape: Vec<usize> = a.shape[..ra].iter().chain(&b.shape[axes..]).copied().collect();
    let axis_dims: Vec<usize> = a.shape[ra..].to_vec();
    let shared_dims: Vec<usize> = shared.iter().map(|s| s.1).collect();
    Tensor::build(free, contracted, shape, |values, idx| {
        let mut terms = Vec::new();
        for s in 0..count(shared_dims.iter().copied()) {
            let sv = unravel(s, &shared_dims);
            let mut vals = values.clone();
            for (sh, v) in shared.iter().zip(&sv) {
                vals.insert(sh.0.as_str(), *v);
            }
            for m in 0..count(axis_dims.iter().copied()) {
                let mv = unravel(m, &axis_dims);
                let ia: Vec<usize> = idx[..ra].iter().chain(&mv).copied().collect();
                let ib: Vec<usize> = mv.iter().chain(&idx[ra..]).copied().collect();
                terms.push(a.at(&vals, &ia).clone() * b.at(&vals, &ib).clone());
            }
        }
        Ok(ScalarExpr::sum(terms))
    })
}

/// Lowers the statements of `ast` up to and including `form_name` and
/// classifies the resulting form.
pub fn analyze(ast: &FormAst, form_name: &str) -> Result<FormDescriptor, FormError> {
    let target = ast
        .statements
        .iter()
        .position(|s| s.name == form_name)
        .ok_or_else(|| FormError::UnknownForm { name: form_name.to_string() })?;
    let mut lw = Lowering::new();
    for s in &ast.statements[..=target] {
        let mut v = lw.eval(&s.value)?;
        match &mut v {
            Value::Function(id) => {
                if lw.functions[*id].name.is_empty() {
                    lw.functions[*id].name = s.name.clone();
                }
            }
            Value::Index(n) if n.starts_with('#') => *n = s.name.clone(),
            _ => {}
        }
        lw.env.insert(s.name.clone(), v);
    }
    let stmt = &ast.statements[target];
    let terms = match lw.env.remove(form_name) {
        Some(Value::Form(t)) => t,
        Some(other) => {
            return Err(type_err(stmt.span, format!("'{form_name}' is {}, not a form", other.describe())));
        }
        None => unreachable!("statement was evaluated"),
    };
    describe(form_name, terms, &lw.functions, stmt.span)
}

fn describe(name: &str, terms: Vec<Term>, functions: &[FunctionDecl], span: Span) -> Result<FormDescriptor, FormError> {
    let mut grouped: BTreeMap<(IntegralKind, usize), Vec<ScalarExpr>> = BTreeMap::new();
    for t in &terms {
        let mut restricted = None;
        let mut unrestricted = None;
        t.integrand.visit_terminals(&mut |x| {
            if x.restriction.is_some() {
                restricted = Some(*x);
            } else {
                unrestricted = Some(*x);
            }
        });
        let fname = |x: &Terminal| function_name(functions, x.role);
        if t.kind == IntegralKind::InteriorFacet {
            if let Some(x) = unrestricted {
                return Err(FormError::Unrestricted { span: t.span, name: fname(&x) });
            }
        } else if let Some(x) = restricted {
            return Err(FormError::RestrictedOutsideInteriorFacet {
                span: t.span,
                name: fname(&x),
                measure: t.kind.measure().to_string(),
            });
        }
        grouped.entry((t.kind, t.subdomain)).or_default().push(t.integrand.clone());
    }
    let grouped: BTreeMap<(IntegralKind, usize), ScalarExpr> =
        grouped.into_iter().map(|(k, v)| (k, ScalarExpr::sum(v))).filter(|(_, e)| !e.is_zero()).collect();

    let mut tests = BTreeSet::new();
    let mut trials = BTreeSet::new();
    let mut coefficients = BTreeSet::new();
    for e in grouped.values() {
        for t in e.terminals() {
            match t.role {
                Role::Argument(id) if functions[id].kind == FunctionKind::Test => {
                    tests.insert(id);
                }
                Role::Argument(id) => {
                    trials.insert(id);
                }
                Role::Coefficient(id) => {
                    coefficients.insert(id);
                }
            }
        }
    }
    for (set, role) in [(&tests, "test"), (&trials, "trial")] {
        if set.len() > 1 {
            let names = set.iter().map(|id| functions[*id].name.clone()).collect::<Vec<_>>().join(", ");
            return Err(FormError::MultipleArguments { form: name.to_string(), role: role.to_string(), names });
        }
    }
    if !trials.is_empty() && tests.is_empty() {
        return Err(FormError::TrialWithoutTest { form: name.to_string() });
    }
    let arguments: Vec<usize> = tests.iter().chain(&trials).copied().collect();
    let rank = arguments.len();
    if rank + coefficients.len() == 0 {
        return Err(FormError::NoArguments { form: name.to_string(), span });
    }
    let argument_names = arguments.iter().map(|id| functions[*id].name.clone()).collect();
    let argument_elements = arguments.iter().map(|id| functions[*id].element.clone()).collect();
    let renumber: HashMap<usize, usize> = coefficients.iter().enumerate().map(|(k, id)| (*id, k)).collect();
    let coefficient_names = coefficients.iter().map(|id| functions[*id].name.clone()).collect();
    let coefficient_elements = coefficients.iter().map(|id| functions[*id].element.clone()).collect();

    let mut desc = FormDescriptor {
        name: name.to_string(),
        rank,
        argument_names,
        argument_elements,
        coefficient_names,
        coefficient_elements,
        cell_integrals: BTreeMap::new(),
        exterior_facet_integrals: BTreeMap::new(),
        interior_facet_integrals: BTreeMap::new(),
    };
    for ((kind, id), e) in grouped {
        let e = e.map_terminals(&mut |t: Terminal| -> Result<ScalarExpr, FormError> {
            let role = match t.role {
                Role::Coefficient(c) => Role::Coefficient(renumber[&c]),
                Role::Argument(id) => Role::Argument(usize::from(functions[id].kind == FunctionKind::Trial)),
            };
            Ok(ScalarExpr::terminal(Terminal { role, ..t }))
        })?;
        for k in 0..rank {
            if e.degree_in(Role::Argument(k)) != Some(1) {
                let which = if k == 0 { "test" } else { "trial" };
                return Err(FormError::NotLinear {
                    form: name.to_string(),
                    argument: desc.argument_names[k].clone(),
                    message: format!("{} integral {id} is not linear in the {which} function", kind.name()),
                });
            }
        }
        let map = match kind {
            IntegralKind::Cell => &mut desc.cell_integrals,
            IntegralKind::ExteriorFacet => &mut desc.exterior_facet_integrals,
            IntegralKind::InteriorFacet => &mut desc.interior_facet_integrals,
        };
        map.insert(id, e);
    }
    Ok(desc)
}

fn function_name(functions: &[FunctionDecl], role: Role) -> String {
    match role {
        Role::Argument(id) | Role::Coefficient(id) => functions[id].name.clone(),
    }
}
