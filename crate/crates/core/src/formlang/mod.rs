//! The form language: parsing, printing and analysis of variational forms.
//!
//! ```text
//! element = FiniteElement("Lagrange", "triangle", 1)
//! v = TestFunction(element)
//! u = TrialFunction(element)
//! f = Function(element)
//! a = dot(grad(v), grad(u))*dx
//! L = v*f*dx
//! ```

mod analysis;
mod ast;
mod ir;
mod parser;
mod pretty;

use thiserror::Error;

pub use analysis::{
    analyze, integrand_polynomial_degree, max_element_degree, FormDescriptor, IntegralKind, PolynomialDegree,
};
pub use ast::{BinOp, Expr, ExprKind, FormAst, Span, Statement};
pub use ir::{DerivativeError, Restriction, Role, ScalarExpr, Terminal};
pub use parser::{parse, BUILTIN_FUNCTIONS, BUILTIN_NAMES};
pub use pretty::{expr_to_string, pretty_print};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormError {
    #[error("{span}: syntax error: {message}")]
    Syntax { span: Span, message: String },
    #[error("{span}: unknown identifier '{name}'")]
    UnknownIdentifier { name: String, span: Span },
    #[error("{span}: '{name}' is already declared (at {previous})")]
    Redeclaration { name: String, span: Span, previous: Span },
    #[error("{span}: shape mismatch: {message}")]
    Shape { span: Span, message: String },
    #[error("{span}: invalid index use: {message}")]
    IndexArity { span: Span, message: String },
    #[error("{span}: {message}")]
    Type { span: Span, message: String },
    #[error("{span}: invalid element: {message}")]
    Element { span: Span, message: String },
    #[error("{span}: functions on different cells ({first} and {second})")]
    MixedCells { span: Span, first: String, second: String },
    #[error("no form named '{name}'")]
    UnknownForm { name: String },
    #[error("form '{form}' has a trial function but no test function")]
    TrialWithoutTest { form: String },
    #[error("form '{form}' uses more than one {role} function ({names})")]
    MultipleArguments { form: String, role: String, names: String },
    #[error("{span}: form '{form}' has no arguments and no coefficients")]
    NoArguments { form: String, span: Span },
    #[error("form '{form}': {message} ('{argument}')")]
    NotLinear { form: String, argument: String, message: String },
    #[error("{span}: '{name}' must be restricted with pos/neg/jump/avg in an interior facet integral")]
    Unrestricted { span: Span, name: String },
    #[error("{span}: '{name}' is restricted but integrated over {measure}")]
    RestrictedOutsideInteriorFacet { span: Span, name: String, measure: String },
}

impl FormError {
    /// Source position, when the error has one.
    pub fn span(&self) -> Option<Span> {
        match self {
            FormError::Syntax { span, .. }
            | FormError::UnknownIdentifier { span, .. }
            | FormError::Redeclaration { span, .. }
            | FormError::Shape { span, .. }
            | FormError::IndexArity { span, .. }
            | FormError::Type { span, .. }
            | FormError::Element { span, .. }
            | FormError::MixedCells { span, .. }
            | FormError::NoArguments { span, .. }
            | FormError::Unrestricted { span, .. }
            | FormError::RestrictedOutsideInteriorFacet { span, .. } => Some(*span),
            _ => None,
        }
    }
}

/// Parses `source` and analyzes the form `name`.
pub fn compile_form(source: &str, name: &str) -> Result<FormDescriptor, FormError> {
    analyze(&parse(source)?, name)
}

/// Parses `source` and analyzes every form it defines, in source order.
pub fn compile_all(source: &str) -> Result<Vec<FormDescriptor>, FormError> {
    let ast = parse(source)?;
    ast.form_names().iter().map(|n| analyze(&ast, n)).collect()
}
