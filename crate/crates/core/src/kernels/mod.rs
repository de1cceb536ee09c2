//! Element tensors: geometry, quadrature, and the kernels that evaluate
//! an integrand on one cell or facet.

mod closed_form;
mod compiled;
mod contraction;
mod geometry;
mod program;
mod quadrature;
mod quadrature_kernel;

use thiserror::Error;

use crate::element::ElementError;
use crate::formlang::IntegralKind;
use crate::mesh::{CellView, ReferenceShape};

pub use closed_form::ClosedFormPoissonKernel;
pub use compiled::{CompiledForm, Representation};
pub use contraction::{ContractionKernel, GeometryFactor, GeometryTerm};
pub use geometry::{aligned_facet_vertices, facet_point_to_cell, facet_scale, AffineMap};
pub use quadrature::{
    facet_quadrature_rule, gauss_legendre, monomial_exponents, monomial_integral, quadrature_rule, QuadratureRule,
};
pub use quadrature_kernel::{default_quadrature_degree, QuadratureKernel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("cell {index} is degenerate (det J = {det:e})")]
    DegenerateCell { index: usize, det: f64 },
    #[error("affine maps need equal topological and geometric dimension (tdim {tdim}, gdim {gdim})")]
    Dimension { tdim: usize, gdim: usize },
    #[error("integrand is not polynomial; use the quadrature representation")]
    NonPolynomial,
    #[error("{0} integrals are not supported by this representation")]
    UnsupportedKind(&'static str),
    #[error("kernel expects {expected} integration domain, got {found}")]
    DomainMismatch { expected: &'static str, found: &'static str },
    #[error("element tensor buffer has {found} entries, expected {expected}")]
    BufferSize { expected: usize, found: usize },
    #[error("expected {expected} coefficient arrays, got {found}")]
    CoefficientCount { expected: usize, found: usize },
    #[error("coefficient {index} has {found} local values, expected {expected}")]
    CoefficientSize { index: usize, expected: usize, found: usize },
    #[error("kernel is defined on {expected} cells, got a {found}")]
    ShapeMismatch { expected: ReferenceShape, found: ReferenceShape },
    #[error("form is not supported by this kernel: {0}")]
    UnsupportedForm(String),
    #[error(transparent)]
    Element(#[from] ElementError),
}

/// Where a kernel is evaluated.
#[derive(Clone, Copy, Debug)]
pub enum IntegralDomain<'a> {
    Cell(&'a CellView),
    ExteriorFacet { cell: &'a CellView, local_facet: usize },
    InteriorFacet { plus: &'a CellView, plus_facet: usize, minus: &'a CellView, minus_facet: usize },
}

impl IntegralDomain<'_> {
    pub fn kind(&self) -> IntegralKind {
        match self {
            IntegralDomain::Cell(_) => IntegralKind::Cell,
            IntegralDomain::ExteriorFacet { .. } => IntegralKind::ExteriorFacet,
            IntegralDomain::InteriorFacet { .. } => IntegralKind::InteriorFacet,
        }
    }
}

/// Evaluates one integral's element tensor.
///
/// The tensor is row-major over the argument axes. Interior facet kernels
/// index each axis by the plus cell's dofs followed by the minus cell's, and
/// receive each coefficient's plus values followed by its minus values.
pub trait IntegralKernel: Send + Sync {
    fn kind(&self) -> IntegralKind;

    /// Length of each argument axis.
    fn axis_dimensions(&self) -> &[usize];

    fn tensor_size(&self) -> usize {
        self.axis_dimensions().iter().product()
    }

    /// Overwrites `a` with the element tensor.
    fn tabulate_tensor(
        &self,
        a: &mut [f64],
        coefficients: &[&[f64]],
        domain: &IntegralDomain,
    ) -> Result<(), KernelError>;
}

pub(crate) fn check_call(
    kind: IntegralKind,
    size: usize,
    coefficient_sizes: &[usize],
    a: &[f64],
    coefficients: &[&[f64]],
    domain: &IntegralDomain,
) -> Result<(), KernelError> {
    if domain.kind() != kind {
        return Err(KernelError::DomainMismatch { expected: kind.name(), found: domain.kind().name() });
    }
    if a.len() != size {
        return Err(KernelError::BufferSize { expected: size, found: a.len() });
    }
    if coefficients.len() != coefficient_sizes.len() {
        return Err(KernelError::CoefficientCount { expected: coefficient_sizes.len(), found: coefficients.len() });
    }
    for (index, (w, &n)) in coefficients.iter().zip(coefficient_sizes).enumerate() {
        if w.len() != n {
            return Err(KernelError::CoefficientSize { index, expected: n, found: w.len() });
        }
    }
    Ok(())
}

pub(crate) fn check_shape(expected: ReferenceShape, domain: &IntegralDomain) -> Result<(), KernelError> {
    let found = match domain {
        IntegralDomain::Cell(c) | IntegralDomain::ExteriorFacet { cell: c, .. } => c.shape,
        IntegralDomain::InteriorFacet { plus, .. } => plus.shape,
    };
    if found != expected {
        return Err(KernelError::ShapeMismatch { expected, found });
    }
    Ok(())
}
