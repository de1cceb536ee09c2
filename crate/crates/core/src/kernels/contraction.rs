use std::collections::HashMap;

use crate::element::FiniteElement;
use crate::formlang::{integrand_polynomial_degree, FormDescriptor, IntegralKind, Role, ScalarExpr, Terminal};
use crate::mesh::ReferenceShape;

use super::geometry::AffineMap;
use super::quadrature::quadrature_rule;
use super::{check_call, check_shape, IntegralDomain, IntegralKernel, KernelError};

/// One cell-dependent factor of a geometry tensor entry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GeometryFactor {
    /// Entry `(reference, physical)` of the inverse Jacobian.
    Jinv { reference: usize, physical: usize },
    /// Local value `dof` of coefficient `index`.
    Coefficient { index: usize, dof: usize },
}

/// `weight * product(factors)`; a geometry tensor entry is the cell scale
/// times a sum of these.
#[derive(Clone, Debug, PartialEq)]
pub struct GeometryTerm {
    pub weight: f64,
    pub factors: Vec<GeometryFactor>,
}

/// A factor of a reference integrand: basis function `dof` (or any basis
/// function of `component`, for argument axes) of a form function,
/// optionally differentiated along a reference axis.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct BasisFactor {
    role: Role,
    component: usize,
    dof: Option<usize>,
    derivative: Option<usize>,
}

/// Element tensor as the contraction of a precomputed reference tensor with
/// a per-cell geometry tensor.
pub struct ContractionKernel {
    shape: ReferenceShape,
    axis_dims: Vec<usize>,
    coefficient_sizes: Vec<usize>,
    /// `reference[i * num_geometry + alpha]`
    reference: Vec<f64>,
    geometry: Vec<Vec<GeometryTerm>>,
}

type Monomial = (f64, Vec<Terminal>);

fn expand(e: &ScalarExpr) -> Result<Vec<Monomial>, KernelError> {
    Ok(match e {
        ScalarExpr::Const(c) => vec![(*c, vec![])],
        ScalarExpr::Terminal(t) => vec![(1.0, vec![*t])],
        ScalarExpr::Sum(ts) => {
            let mut out = Vec::new();
            for t in ts {
                out.extend(expand(t)?);
            }
            out
        }
        ScalarExpr::Product(ts) => {
            let mut out: Vec<Monomial> = vec![(1.0, vec![])];
            for t in ts {
                out = multiply(&out, &expand(t)?);
            }
            out
        }
        ScalarExpr::Pow(b, p) if *p >= 0.0 && p.fract() == 0.0 => {
            let base = expand(b)?;
            let mut out: Vec<Monomial> = vec![(1.0, vec![])];
            for _ in 0..*p as usize {
                out = multiply(&out, &base);
            }
            out
        }
        _ => return Err(KernelError::NonPolynomial),
    })
}

fn multiply(a: &[Monomial], b: &[Monomial]) -> Vec<Monomial> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for (ca, ta) in a {
        for (cb, tb) in b {
            out.push((ca * cb, ta.iter().chain(tb).copied().collect()));
        }
    }
    out
}

impl ContractionKernel {
    pub fn new(descriptor: &FormDescriptor, kind: IntegralKind, integrand: &ScalarExpr) -> Result<Self, KernelError> {
        if kind != IntegralKind::Cell {
            return Err(KernelError::UnsupportedKind(kind.name()));
        }
        let degree =
            integrand_polynomial_degree(integrand, descriptor).polynomial().ok_or(KernelError::NonPolynomial)?;
        let shape = descriptor.shape();
        let tdim = shape.tdim();
        let element = |role: Role| -> &FiniteElement { descriptor.element(role) };

        let mut patterns: Vec<Vec<BasisFactor>> = Vec::new();
        let mut lookup: HashMap<Vec<BasisFactor>, usize> = HashMap::new();
        let mut geometry: Vec<Vec<GeometryTerm>> = Vec::new();
        for (weight, terminals) in expand(integrand)? {
            // Every terminal picks a reference direction when differentiated
            // and a dof when it is a coefficient.
            let mut choices: Vec<Vec<(BasisFactor, Vec<GeometryFactor>)>> = Vec::new();
            for t in &terminals {
                let dirs: Vec<Option<usize>> = match t.derivative {
                    Some(_) => (0..tdim).map(Some).collect(),
                    None => vec![None],
                };
                let dofs: Vec<Option<usize>> = match t.role {
                    Role::Argument(_) => vec![None],
                    Role::Coefficient(_) => {
                        let e = element(t.role);
                        (0..e.space_dimension()).filter(|&m| e.component(m) == t.component).map(Some).collect()
                    }
                };
                let mut opts = Vec::new();
                for &dir in &dirs {
                    for &dof in &dofs {
                        let mut g = Vec::new();
                        if let (Some(k), Some(r)) = (dir, t.derivative) {
                            g.push(GeometryFactor::Jinv { reference: k, physical: r });
                        }
                        if let (Role::Coefficient(c), Some(m)) = (t.role, dof) {
                            g.push(GeometryFactor::Coefficient { index: c, dof: m });
                        }
                        opts.push((BasisFactor { role: t.role, component: t.component, dof, derivative: dir }, g));
                    }
                }
                choices.push(opts);
            }
            let mut pick = vec![0usize; choices.len()];
            'odometer: loop {
                let mut pattern: Vec<BasisFactor> = Vec::with_capacity(pick.len());
                let mut factors = Vec::new();
                for (c, &p) in choices.iter().zip(&pick) {
                    pattern.push(c[p].0.clone());
                    factors.extend_from_slice(&c[p].1);
                }
                pattern.sort();
                let alpha = *lookup.entry(pattern.clone()).or_insert_with(|| {
                    patterns.push(pattern);
                    geometry.push(Vec::new());
                    geometry.len() - 1
                });
                geometry[alpha].push(GeometryTerm { weight, factors });
                let mut k = pick.len();
                loop {
                    if k == 0 {
                        break 'odometer;
                    }
                    k -= 1;
                    pick[k] += 1;
                    if pick[k] < choices[k].len() {
                        break;
                    }
                    pick[k] = 0;
                }
            }
        }

        let arguments = &descriptor.argument_elements;
        let axis_dims: Vec<usize> = arguments.iter().map(FiniteElement::space_dimension).collect();
        let coefficient_sizes = descriptor.coefficient_elements.iter().map(FiniteElement::space_dimension).collect();
        let num_entries: usize = axis_dims.iter().product();
        let num_geometry = patterns.len();
        let mut reference = vec![0.0; num_entries * num_geometry];
        let rule = quadrature_rule(shape, degree);
        for (x, w) in rule.points.iter().zip(&rule.weights) {
            let arg_tabs: Vec<_> = arguments.iter().map(|e| e.tabulate(x)).collect();
            let coef_tabs: Vec<_> = descriptor.coefficient_elements.iter().map(|e| e.tabulate(x)).collect();
            let value = |tab: &crate::element::Tabulation, m: usize, d: Option<usize>| match d {
                None => tab.value(m),
                Some(k) => tab.derivative(m, k),
            };
            for (alpha, pattern) in patterns.iter().enumerate() {
                // Product of the coefficient factors, and per argument the
                // relevant basis factor.
                let mut fixed = *w;
                let mut per_arg: Vec<Vec<&BasisFactor>> = vec![Vec::new(); arguments.len()];
                for f in pattern {
                    match f.role {
                        Role::Coefficient(c) => {
                            fixed *= value(&coef_tabs[c], f.dof.expect("coefficient dof"), f.derivative)
                        }
                        Role::Argument(k) => per_arg[k].push(f),
                    }
                }
                if fixed == 0.0 {
                    continue;
                }
                let mut index = vec![0usize; axis_dims.len()];
                for i in 0..num_entries {
                    let mut v = fixed;
                    for (k, fs) in per_arg.iter().enumerate() {
                        let m = index[k];
                        for f in fs {
                            if arguments[k].component(m) != f.component {
                                v = 0.0;
                            } else {
                                v *= value(&arg_tabs[k], m, f.derivative);
                            }
                        }
                    }
                    reference[i * num_geometry + alpha] += v;
                    for ax in (0..axis_dims.len()).rev() {
                        index[ax] += 1;
                        if index[ax] < axis_dims[ax] {
                            break;
                        }
                        index[ax] = 0;
                    }
                }
            }
        }
        Ok(Self { shape, axis_dims, coefficient_sizes, reference, geometry })
    }

    /// Number of geometry tensor entries.
    pub fn geometry_size(&self) -> usize {
        self.geometry.len()
    }

    /// Recipes for the geometry tensor entries.
    pub fn geometry_recipe(&self) -> &[Vec<GeometryTerm>] {
        &self.geometry
    }

    /// Reference tensor, row-major over (element tensor entry, geometry entry).
    pub fn reference_tensor(&self) -> &[f64] {
        &self.reference
    }

    /// Geometry tensor on a cell.
    pub fn geometry_tensor(&self, map: &AffineMap, coefficients: &[&[f64]]) -> Vec<f64> {
        self.geometry
            .iter()
            .map(|terms| {
                let sum: f64 = terms
                    .iter()
                    .map(|t| {
                        t.factors.iter().fold(t.weight, |acc, f| match *f {
                            GeometryFactor::Jinv { reference, physical } => acc * map.jinv(reference, physical),
                            GeometryFactor::Coefficient { index, dof } => acc * coefficients[index][dof],
                        })
                    })
                    .sum();
                map.scale * sum
            })
            .collect()
    }
}

impl IntegralKernel for ContractionKernel {
    fn kind(&self) -> IntegralKind {
        IntegralKind::Cell
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
        check_call(IntegralKind::Cell, self.tensor_size(), &self.coefficient_sizes, a, coefficients, domain)?;
        check_shape(self.shape, domain)?;
        let IntegralDomain::Cell(cell) = domain else { unreachable!("checked above") };
        let g = self.geometry_tensor(&AffineMap::new(cell)?, coefficients);
        let n = g.len();
        for (i, entry) in a.iter_mut().enumerate() {
            *entry = self.reference[i * n..(i + 1) * n].iter().zip(&g).map(|(r, g)| r * g).sum();
        }
        Ok(())
    }
}
