//! Reference finite elements: continuous and discontinuous Lagrange of degree
//! up to three, and vector-valued Lagrange built from equal scalar components.
//!
//! Degrees of freedom are point evaluations at the equispaced lattice of the
//! element degree. Each lattice point is attached to the lowest-dimensional
//! reference entity containing it; dofs are ordered by entity dimension, then
//! local entity index, then position along the entity (starting next to the
//! entity's lowest local vertex). The nodal basis is obtained by inverting the
//! Vandermonde matrix of the dof functionals applied to the monomials.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::mesh::{CellView, ReferenceShape};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ElementError {
    #[error("unsupported element: {0}")]
    Unsupported(String),
    #[error("basis index {index} out of range (space dimension {dim})")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("function has {found} components, element expects {expected}")]
    ValueShape { expected: usize, found: usize },
    #[error("scalar element has no sub-elements")]
    NoSubElements,
    #[error("sub-element {index} out of range ({count} sub-elements)")]
    SubElementOutOfRange { index: usize, count: usize },
    #[error("singular Vandermonde matrix for {0}")]
    Singular(String),
    #[error("invalid element signature '{0}'")]
    Signature(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    Lagrange,
    DiscontinuousLagrange,
    VectorLagrange,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Lagrange => "Lagrange",
            Family::DiscontinuousLagrange => "DiscontinuousLagrange",
            Family::VectorLagrange => "VectorLagrange",
        }
    }
}

impl FromStr for Family {
    type Err = ElementError;

    /// Accepts the usual aliases (`CG`, `DG`, `Discontinuous Lagrange`).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Lagrange" | "CG" | "P" => Ok(Family::Lagrange),
            "DiscontinuousLagrange" | "Discontinuous Lagrange" | "DG" => Ok(Family::DiscontinuousLagrange),
            "VectorLagrange" => Ok(Family::VectorLagrange),
            other => Err(ElementError::Unsupported(format!("family '{other}'"))),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A point-evaluation functional attached to a reference entity.
#[derive(Clone, Debug, PartialEq)]
pub struct DofDescriptor {
    /// (dimension, local entity index)
    pub entity: (usize, usize),
    /// Position among the dofs attached to the same entity.
    pub sub_index: usize,
    pub point: Vec<f64>,
    pub component: usize,
}

/// Values and reference derivatives of every basis function at one point.
///
/// Basis function `i` is nonzero only in component `component(i)`; its value
/// and the `tdim` reference partial derivatives are stored contiguously.
#[derive(Clone, Debug)]
pub struct Tabulation {
    pub width: usize,
    pub data: Vec<f64>,
    pub components: Arc<[usize]>,
}

impl Tabulation {
    pub fn value(&self, i: usize) -> f64 {
        self.data[i * self.width]
    }

    pub fn derivative(&self, i: usize, k: usize) -> f64 {
        self.data[i * self.width + 1 + k]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.width..(i + 1) * self.width]
    }
}

/// Scalar nodal basis shared by all components of an element.
#[derive(Debug)]
struct ScalarBasis {
    tdim: usize,
    exponents: Vec<Vec<u32>>,
    /// `coefficients[i * num_monomials + j]`: weight of monomial `j` in basis function `i`.
    coefficients: Vec<f64>,
}

impl ScalarBasis {
    fn num_monomials(&self) -> usize {
        self.exponents.len()
    }

    /// Fills `out[j * (1 + tdim) + 0..]` with monomial `j` and its gradient.
    fn monomials(&self, x: &[f64], out: &mut Vec<f64>) {
        let w = 1 + self.tdim;
        out.clear();
        out.resize(self.num_monomials() * w, 0.0);
        for (j, e) in self.exponents.iter().enumerate() {
            out[j * w] = e.iter().zip(x).map(|(&p, &xi)| xi.powi(p as i32)).product();
            for k in 0..self.tdim {
                if e[k] == 0 {
                    continue;
                }
                let mut v = e[k] as f64;
                for (m, (&p, &xi)) in e.iter().zip(x).enumerate() {
                    let p = if m == k { p - 1 } else { p };
                    v *= xi.powi(p as i32);
                }
                out[j * w + 1 + k] = v;
            }
        }
    }
}

fn monomial_exponents(tdim: usize, degree: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut e = vec![0u32; tdim];
    fn rec(k: usize, left: u32, e: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if k == e.len() {
            out.push(e.clone());
            return;
        }
        for p in 0..=left {
            e[k] = p;
            rec(k + 1, left - p, e, out);
        }
        e[k] = 0;
    }
    rec(0, degree as u32, &mut e, &mut out);
    out.sort_by_key(|e| (e.iter().sum::<u32>(), std::cmp::Reverse(e.clone())));
    out
}

/// Lattice points of a scalar element with their entity attachment.
fn lattice_dofs(shape: ReferenceShape, degree: usize, discontinuous: bool) -> Vec<DofDescriptor> {
    let tdim = shape.tdim();
    if degree == 0 {
        let point = vec![1.0 / (tdim as f64 + 1.0); tdim];
        return vec![DofDescriptor { entity: (tdim, 0), sub_index: 0, point, component: 0 }];
    }
    let q = degree as u32;
    let mut points: Vec<(usize, usize, Vec<u32>, Vec<f64>)> = Vec::new();
    for a in monomial_exponents(tdim, degree) {
        let mut bary = vec![q - a.iter().sum::<u32>()];
        bary.extend(&a);
        let support: Vec<usize> = (0..=tdim).filter(|&v| bary[v] > 0).collect();
        let d = support.len() - 1;
        let e = shape
            .entity_vertices(d)
            .iter()
            .position(|ev| *ev == support.as_slice())
            .expect("support is a local entity");
        let key: Vec<u32> = support.iter().map(|&v| bary[v]).collect();
        let point = a.iter().map(|&ai| ai as f64 / q as f64).collect();
        points.push((d, e, key, point));
    }
    points.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)).then_with(|| y.2.cmp(&x.2)));
    let mut dofs = Vec::with_capacity(points.len());
    for (n, (d, e, _, point)) in points.into_iter().enumerate() {
        let (entity, sub_index) = if discontinuous {
            ((tdim, 0), n)
        } else {
            let sub = dofs.iter().filter(|p: &&DofDescriptor| p.entity == (d, e)).count();
            ((d, e), sub)
        };
        dofs.push(DofDescriptor { entity, sub_index, point, component: 0 });
    }
    dofs
}

#[derive(Clone, Debug)]
pub struct FiniteElement {
    shape: ReferenceShape,
    family: Family,
    degree: usize,
    value_size: usize,
    dofs: Vec<DofDescriptor>,
    components: Arc<[usize]>,
    scalar_dim: usize,
    basis: Arc<ScalarBasis>,
}

impl PartialEq for FiniteElement {
    fn eq(&self, other: &Self) -> bool {
        self.signature() == other.signature()
    }
}

impl Eq for FiniteElement {}

impl FiniteElement {
    /// Builds a reference element. `vector_length` applies to
    /// [`Family::VectorLagrange`] and defaults to the cell dimension.
    pub fn new(
        family: Family,
        shape: ReferenceShape,
        degree: usize,
        vector_length: Option<usize>,
    ) -> Result<Self, ElementError> {
        let tdim = shape.tdim();
        let supported = match family {
            Family::Lagrange | Family::VectorLagrange => (1..=3).contains(&degree),
            Family::DiscontinuousLagrange => degree <= 3,
        };
        if !supported {
            return Err(ElementError::Unsupported(format!("{family} of degree {degree} on {shape}")));
        }
        let value_size = match (family, vector_length) {
            (Family::VectorLagrange, None) => tdim,
            (Family::VectorLagrange, Some(0)) => {
                return Err(ElementError::Unsupported("vector element of length 0".into()))
            }
            (Family::VectorLagrange, Some(n)) => n,
            (_, None) => 1,
            (_, Some(n)) => return Err(ElementError::Unsupported(format!("scalar {family} with vector length {n}"))),
        };

        let scalar_dofs = lattice_dofs(shape, degree, family == Family::DiscontinuousLagrange);
        let exponents = monomial_exponents(tdim, degree);
        let n = exponents.len();
        debug_assert_eq!(n, scalar_dofs.len());
        let mut basis = ScalarBasis { tdim, exponents, coefficients: Vec::new() };
        let mut vandermonde = DMatrix::<f64>::zeros(n, n);
        let mut buf = Vec::new();
        for (i, dof) in scalar_dofs.iter().enumerate() {
            basis.monomials(&dof.point, &mut buf);
            for j in 0..n {
                vandermonde[(i, j)] = buf[j * (1 + tdim)];
            }
        }
        let inverse = vandermonde
            .try_inverse()
            .ok_or_else(|| ElementError::Singular(format!("{family} degree {degree} on {shape}")))?;
        // Column i of the inverse holds the monomial weights of basis function i.
        basis.coefficients = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| inverse[(j, i)]).collect();

        let mut dofs = Vec::with_capacity(n * value_size);
        for c in 0..value_size {
            dofs.extend(scalar_dofs.iter().map(|d| DofDescriptor { component: c, ..d.clone() }));
        }
        let components: Arc<[usize]> = dofs.iter().map(|d| d.component).collect();
        Ok(Self { shape, family, degree, value_size, dofs, components, scalar_dim: n, basis: Arc::new(basis) })
    }

    pub fn lagrange(shape: ReferenceShape, degree: usize) -> Result<Self, ElementError> {
        Self::new(Family::Lagrange, shape, degree, None)
    }

    pub fn discontinuous(shape: ReferenceShape, degree: usize) -> Result<Self, ElementError> {
        Self::new(Family::DiscontinuousLagrange, shape, degree, None)
    }

    pub fn vector_lagrange(shape: ReferenceShape, degree: usize, length: usize) -> Result<Self, ElementError> {
        Self::new(Family::VectorLagrange, shape, degree, Some(length))
    }

    pub fn shape(&self) -> ReferenceShape {
        self.shape
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn tdim(&self) -> usize {
        self.shape.tdim()
    }

    /// Number of basis functions, `n_K`.
    pub fn space_dimension(&self) -> usize {
        self.dofs.len()
    }

    /// 1 for scalar elements, the vector length otherwise.
    pub fn value_size(&self) -> usize {
        self.value_size
    }

    pub fn is_vector(&self) -> bool {
        self.family == Family::VectorLagrange
    }

    pub fn num_sub_elements(&self) -> usize {
        if self.is_vector() {
            self.value_size
        } else {
            0
        }
    }

    pub fn dofs(&self) -> &[DofDescriptor] {
        &self.dofs
    }

    /// Component in which basis function `i` is nonzero.
    pub fn component(&self, i: usize) -> usize {
        self.components[i]
    }

    /// Dimension of one scalar component.
    pub fn scalar_dimension(&self) -> usize {
        self.scalar_dim
    }

    /// Number of dofs of one component attached to each entity of dimension `d`.
    pub fn dofs_per_entity(&self, d: usize) -> usize {
        self.dofs[..self.scalar_dim].iter().filter(|dof| dof.entity == (d, 0)).count()
    }

    pub fn sub_element(&self, j: usize) -> Result<FiniteElement, ElementError> {
        if !self.is_vector() {
            return Err(ElementError::NoSubElements);
        }
        if j >= self.value_size {
            return Err(ElementError::SubElementOutOfRange { index: j, count: self.value_size });
        }
        Self::new(Family::Lagrange, self.shape, self.degree, None)
    }

    fn check_index(&self, i: usize) -> Result<(), ElementError> {
        if i >= self.space_dimension() {
            return Err(ElementError::IndexOutOfRange { index: i, dim: self.space_dimension() });
        }
        Ok(())
    }

    fn scalar_row(&self, i: usize) -> &[f64] {
        let n = self.basis.num_monomials();
        let s = i % self.scalar_dim;
        &self.basis.coefficients[s * n..(s + 1) * n]
    }

    /// Value of basis function `i` at a reference point, one entry per component.
    pub fn evaluate_basis(&self, i: usize, point: &[f64]) -> Result<Vec<f64>, ElementError> {
        self.check_index(i)?;
        let mut buf = Vec::new();
        self.basis.monomials(point, &mut buf);
        let w = 1 + self.tdim();
        let v: f64 = self.scalar_row(i).iter().enumerate().map(|(j, c)| c * buf[j * w]).sum();
        let mut out = vec![0.0; self.value_size];
        out[self.component(i)] = v;
        Ok(out)
    }

    /// Reference gradient of basis function `i`, `tdim` entries per component.
    pub fn evaluate_basis_derivatives(&self, i: usize, point: &[f64]) -> Result<Vec<f64>, ElementError> {
        self.check_index(i)?;
        let tdim = self.tdim();
        let mut buf = Vec::new();
        self.basis.monomials(point, &mut buf);
        let w = 1 + tdim;
        let mut out = vec![0.0; self.value_size * tdim];
        let c = self.component(i);
        for (j, coef) in self.scalar_row(i).iter().enumerate() {
            for k in 0..tdim {
                out[c * tdim + k] += coef * buf[j * w + 1 + k];
            }
        }
        Ok(out)
    }

    /// Values and reference derivatives of all basis functions at `point`.
    pub fn tabulate(&self, point: &[f64]) -> Tabulation {
        let tdim = self.tdim();
        let w = 1 + tdim;
        let mut buf = Vec::new();
        self.basis.monomials(point, &mut buf);
        let n = self.basis.num_monomials();
        let mut scalar = vec![0.0; self.scalar_dim * w];
        for s in 0..self.scalar_dim {
            let row = &self.basis.coefficients[s * n..(s + 1) * n];
            for (j, coef) in row.iter().enumerate() {
                for k in 0..w {
                    scalar[s * w + k] += coef * buf[j * w + k];
                }
            }
        }
        let data = (0..self.value_size).flat_map(|_| scalar.iter().copied()).collect();
        Tabulation { width: w, data, components: self.components.clone() }
    }

    /// Applies every dof functional to `f` on `cell`: the interpolant's
    /// expansion coefficients.
    pub fn evaluate_dofs(&self, f: &dyn PhysicalFunction, cell: &CellView) -> Result<Vec<f64>, ElementError> {
        if f.value_size() != self.value_size {
            return Err(ElementError::ValueShape { expected: self.value_size, found: f.value_size() });
        }
        let mut values = vec![0.0; self.space_dimension()];
        let mut buf = vec![0.0; self.value_size];
        for s in 0..self.scalar_dim {
            let x = cell.push_forward(&self.dofs[s].point);
            f.evaluate(&x, &mut buf);
            for c in 0..self.value_size {
                values[c * self.scalar_dim + s] = buf[c];
            }
        }
        Ok(values)
    }

    /// `"<family>;<shape>;<degree>[;<veclen>]"`
    pub fn signature(&self) -> String {
        let mut s = format!("{};{};{}", self.family, self.shape, self.degree);
        if self.is_vector() {
            s.push_str(&format!(";{}", self.value_size));
        }
        s
    }
}

impl fmt::Display for FiniteElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.signature())
    }
}

impl FromStr for FiniteElement {
    type Err = ElementError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ElementError::Signature(s.to_string());
        let parts: Vec<&str> = s.split(';').map(str::trim).collect();
        if !(3..=4).contains(&parts.len()) {
            return Err(bad());
        }
        let family: Family = parts[0].parse()?;
        let shape: ReferenceShape = parts[1].parse().map_err(|_| bad())?;
        let degree: usize = parts[2].parse().map_err(|_| bad())?;
        let veclen = parts.get(3).map(|p| p.parse::<usize>().map_err(|_| bad())).transpose()?;
        FiniteElement::new(family, shape, degree, veclen)
    }
}

/// A function of physical coordinates with a fixed number of components.
pub trait PhysicalFunction: Send + Sync {
    fn value_size(&self) -> usize;
    fn evaluate(&self, x: &[f64], values: &mut [f64]);
}

/// A constant (possibly vector-valued) function.
#[derive(Clone, Debug, PartialEq)]
pub struct Constant(pub Vec<f64>);

impl PhysicalFunction for Constant {
    fn value_size(&self) -> usize {
        self.0.len()
    }

    fn evaluate(&self, _x: &[f64], values: &mut [f64]) {
        values.copy_from_slice(&self.0);
    }
}

/// Adapts a closure `|x, values|` into a [`PhysicalFunction`].
pub struct Analytic<F> {
    value_size: usize,
    f: F,
}

impl<F> Analytic<F>
where
    F: Fn(&[f64], &mut [f64]) + Send + Sync,
{
    pub fn new(value_size: usize, f: F) -> Self {
        Self { value_size, f }
    }
}

impl<F> PhysicalFunction for Analytic<F>
where
    F: Fn(&[f64], &mut [f64]) + Send + Sync,
{
    fn value_size(&self) -> usize {
        self.value_size
    }

    fn evaluate(&self, x: &[f64], values: &mut [f64]) {
        (self.f)(x, values)
    }
}

/// Every element the library supports, for self-checks and tests.
pub fn supported_elements() -> Vec<FiniteElement> {
    let mut out = Vec::new();
    for shape in [ReferenceShape::Interval, ReferenceShape::Triangle, ReferenceShape::Tetrahedron] {
        for q in 1..=3 {
            out.push(FiniteElement::lagrange(shape, q).expect("supported"));
            out.push(FiniteElement::new(Family::VectorLagrange, shape, q, None).expect("supported"));
        }
        for q in 0..=3 {
            out.push(FiniteElement::discontinuous(shape, q).expect("supported"));
        }
    }
    out
}
