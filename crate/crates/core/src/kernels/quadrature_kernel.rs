use crate::element::{FiniteElement, Tabulation};
use crate::formlang::{
    integrand_polynomial_degree, max_element_degree, FormDescriptor, IntegralKind, PolynomialDegree, Role, ScalarExpr,
};
use crate::mesh::{CellView, ReferenceShape};

use super::geometry::{aligned_facet_vertices, facet_point_to_cell, facet_scale, AffineMap};
use super::program::Program;
use super::quadrature::{facet_quadrature_rule, quadrature_rule, QuadratureRule};
use super::{check_call, check_shape, IntegralDomain, IntegralKernel, KernelError};

/// Exact degree for polynomial integrands, `2 q + 3` otherwise, where `q`
/// is the largest element degree in the integrand.
pub fn default_quadrature_degree(expr: &ScalarExpr, descriptor: &FormDescriptor) -> usize {
    match integrand_polynomial_degree(expr, descriptor) {
        PolynomialDegree::Polynomial(d) => d,
        PolynomialDegree::NonPolynomial => 2 * max_element_degree(expr, descriptor) + 3,
    }
}

/// Evaluates the integrand at quadrature points.
pub struct QuadratureKernel {
    kind: IntegralKind,
    shape: ReferenceShape,
    arguments: Vec<FiniteElement>,
    coefficients: Vec<FiniteElement>,
    program: Program,
    rule: QuadratureRule,
    /// Cell kernels: tabulations per point, arguments then coefficients.
    cell_tables: Vec<Vec<Tabulation>>,
    axis_dims: Vec<usize>,
    coefficient_sizes: Vec<usize>,
}

/// Basis tables and geometry for one side of the integration domain.
struct Side<'t> {
    map: AffineMap,
    tables: &'t [Tabulation],
}

fn basis_value(tab: &Tabulation, map: &AffineMap, m: usize, component: usize, derivative: Option<usize>) -> f64 {
    if tab.components[m] != component {
        return 0.0;
    }
    match derivative {
        None => tab.value(m),
        Some(r) => (0..map.tdim).map(|k| map.jinv(k, r) * tab.derivative(m, k)).sum(),
    }
}

impl QuadratureKernel {
    pub fn new(
        descriptor: &FormDescriptor,
        kind: IntegralKind,
        integrand: &ScalarExpr,
        degree: Option<usize>,
    ) -> Result<Self, KernelError> {
        let degree = degree.unwrap_or_else(|| default_quadrature_degree(integrand, descriptor));
        let shape = descriptor.shape();
        let rule = match kind {
            IntegralKind::Cell => quadrature_rule(shape, degree),
            _ => facet_quadrature_rule(shape, degree),
        };
        let arguments = descriptor.argument_elements.clone();
        let coefficients = descriptor.coefficient_elements.clone();
        let sides = if kind == IntegralKind::InteriorFacet { 2 } else { 1 };
        let axis_dims = arguments.iter().map(|e| sides * e.space_dimension()).collect();
        let coefficient_sizes = coefficients.iter().map(|e| sides * e.space_dimension()).collect();
        let cell_tables = if kind == IntegralKind::Cell {
            rule.points.iter().map(|p| arguments.iter().chain(&coefficients).map(|e| e.tabulate(p)).collect()).collect()
        } else {
            Vec::new()
        };
        Ok(Self {
            kind,
            shape,
            arguments,
            coefficients,
            program: Program::new(integrand),
            rule,
            cell_tables,
            axis_dims,
            coefficient_sizes,
        })
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    fn facet_tables(&self, cell: &CellView, local_facet: usize) -> Vec<Vec<Tabulation>> {
        let verts = aligned_facet_vertices(cell, local_facet);
        self.rule
            .points
            .iter()
            .map(|s| {
                let x = facet_point_to_cell(cell, &verts, s);
                self.arguments.iter().chain(&self.coefficients).map(|e| e.tabulate(&x)).collect()
            })
            .collect()
    }

    fn accumulate(&self, a: &mut [f64], coefficients: &[&[f64]], sides: &[Side], weight: f64) {
        let nargs = self.arguments.len();
        let terminals = &self.program.terminals;
        let mut slots = vec![0.0; terminals.len()];
        // Argument terminals vary with the basis index on their axis.
        let mut arg_slots: Vec<(usize, usize, Vec<f64>)> = Vec::new();
        for (s, t) in terminals.iter().enumerate() {
            let side = t.restriction.map_or(0, |r| r.side());
            let geo = &sides[side];
            match t.role {
                Role::Coefficient(c) => {
                    let n = self.coefficients[c].space_dimension();
                    let w = &coefficients[c][side * n..(side + 1) * n];
                    let tab = &geo.tables[nargs + c];
                    slots[s] = (0..n).map(|m| w[m] * basis_value(tab, &geo.map, m, t.component, t.derivative)).sum();
                }
                Role::Argument(k) => {
                    let n = self.arguments[k].space_dimension();
                    let tab = &geo.tables[k];
                    let mut values = vec![0.0; self.axis_dims[k]];
                    for m in 0..n {
                        values[side * n + m] = basis_value(tab, &geo.map, m, t.component, t.derivative);
                    }
                    arg_slots.push((s, k, values));
                }
            }
        }
        let dims = &self.axis_dims;
        let mut index = vec![0usize; dims.len()];
        for entry in a.iter_mut() {
            for (s, k, values) in &arg_slots {
                slots[*s] = values[index[*k]];
            }
            *entry += weight * self.program.eval(&slots);
            for ax in (0..dims.len()).rev() {
                index[ax] += 1;
                if index[ax] < dims[ax] {
                    break;
                }
                index[ax] = 0;
            }
        }
    }
}

impl IntegralKernel for QuadratureKernel {
    fn kind(&self) -> IntegralKind {
        self.kind
    }

    fn axis_dimensions(&self) -> &[usize] {
        &self.axis_dims
    }

    fn tabulate_tensor(
        &self,
        a: &mut [f64],
        coefficients: &[&[f64]],
        domain: &IntegralDomain,
    ) -> Result<(), KernelError> {
        check_call(self.kind, self.tensor_size(), &self.coefficient_sizes, a, coefficients, domain)?;
        check_shape(self.shape, domain)?;
        a.fill(0.0);
        match *domain {
            IntegralDomain::Cell(cell) => {
                let map = AffineMap::new(cell)?;
                let scale = map.scale;
                let mut side = [Side { map, tables: &[] }];
                for (q, w) in self.rule.weights.iter().enumerate() {
                    side[0].tables = &self.cell_tables[q];
                    self.accumulate(a, coefficients, &side, w * scale);
                }
            }
            IntegralDomain::ExteriorFacet { cell, local_facet } => {
                let map = AffineMap::new(cell)?;
                let scale = facet_scale(cell, local_facet);
                let tables = self.facet_tables(cell, local_facet);
                for (q, w) in self.rule.weights.iter().enumerate() {
                    let side = [Side { map: map.clone(), tables: &tables[q] }];
                    self.accumulate(a, coefficients, &side, w * scale);
                }
            }
            IntegralDomain::InteriorFacet { plus, plus_facet, minus, minus_facet } => {
                let pmap = AffineMap::new(plus)?;
                let mmap = AffineMap::new(minus)?;
                let scale = facet_scale(plus, plus_facet);
                let ptables = self.facet_tables(plus, plus_facet);
                let mtables = self.facet_tables(minus, minus_facet);
                for (q, w) in self.rule.weights.iter().enumerate() {
                    let sides = [
                        Side { map: pmap.clone(), tables: &ptables[q] },
                        Side { map: mmap.clone(), tables: &mtables[q] },
                    ];
                    self.accumulate(a, coefficients, &sides, w * scale);
                }
            }
        }
        Ok(())
    }
}
