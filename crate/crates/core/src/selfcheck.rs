//! Built-in consistency checks: nodal duality of every supported element
//! and exactness of the quadrature rules on full monomial bases.

use crate::element::{supported_elements, FiniteElement};
use crate::kernels::{monomial_exponents, monomial_integral, quadrature_rule};
use crate::mesh::ReferenceShape;

pub const DUALITY_TOLERANCE: f64 = 1e-12;
pub const QUADRATURE_TOLERANCE: f64 = 1e-12;
/// Highest polynomial degree checked for quadrature exactness.
pub const MAX_QUADRATURE_DEGREE: usize = 10;

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub max_error: f64,
    pub tolerance: f64,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.max_error <= self.tolerance
    }
}

impl std::fmt::Display for CheckResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        write!(f, "{status} {} (max error {:.3e}, tolerance {:.0e})", self.name, self.max_error, self.tolerance)
    }
}

/// `max |l_i(phi_j) - delta_ij|` over all basis functions and dofs.
pub fn nodal_duality_error(element: &FiniteElement) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, dof) in element.dofs().iter().enumerate() {
        let tab = element.tabulate(&dof.point);
        for j in 0..element.space_dimension() {
            let value = if element.component(j) == dof.component { tab.value(j) } else { 0.0 };
            let expected = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((value - expected).abs());
        }
    }
    worst
}

/// Worst error of the degree-`degree` rule on `shape` over all monomials of
/// total degree at most `degree`.
pub fn quadrature_exactness_error(shape: ReferenceShape, degree: usize) -> f64 {
    let rule = quadrature_rule(shape, degree);
    let mut worst: f64 = 0.0;
    for exps in monomial_exponents(shape.tdim(), degree as u32) {
        let approx = rule.integrate(|x| x.iter().zip(&exps).map(|(xi, &e)| xi.powi(e as i32)).product());
        let exact = monomial_integral(&exps);
        worst = worst.max((approx - exact).abs());
    }
    worst
}

pub fn duality_checks() -> Vec<CheckResult> {
    supported_elements()
        .iter()
        .map(|e| CheckResult {
            name: format!("nodal duality {}", e.signature()),
            max_error: nodal_duality_error(e),
            tolerance: DUALITY_TOLERANCE,
        })
        .collect()
}

pub fn quadrature_checks() -> Vec<CheckResult> {
    let mut out = Vec::new();
    for shape in [ReferenceShape::Interval, ReferenceShape::Triangle, ReferenceShape::Tetrahedron] {
        for degree in 0..=MAX_QUADRATURE_DEGREE {
            out.push(CheckResult {
                name: format!("quadrature {} degree {degree}", shape.name()),
                max_error: quadrature_exactness_error(shape, degree),
                tolerance: QUADRATURE_TOLERANCE,
            });
        }
    }
    out
}

/// Every check, duality first.
pub fn run_all() -> Vec<CheckResult> {
    let mut out = duality_checks();
    out.extend(quadrature_checks());
    out
}
