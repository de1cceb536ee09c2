//! Global assembly over cells, exterior facets and interior facets, and
//! Dirichlet conditions by row replacement.

use std::sync::Arc;

use thiserror::Error;

use crate::dofmap::{DofMap, DofMapError};
use crate::element::{ElementError, FiniteElement, PhysicalFunction};
use crate::formlang::IntegralKind;
use crate::kernels::{CompiledForm, IntegralDomain, KernelError};
use crate::linalg::{Csr, DenseBlock, GlobalTensor, LinalgError};
use crate::mesh::{CellView, Mesh, MeshError};

#[derive(Debug, Error)]
pub enum AssemblyError {
    #[error("form declares a {kind} integral on subdomain {subdomain} but has no kernel for it")]
    MissingKernel { kind: &'static str, subdomain: usize },
    #[error("form has rank {rank} but {found} argument dof maps were given")]
    DofMapCount { rank: usize, found: usize },
    #[error("argument {index} dof map uses element {found}, form expects {expected}")]
    DofMapElement { index: usize, expected: String, found: String },
    #[error("form has {expected} coefficients but {found} sources were given")]
    CoefficientCount { expected: usize, found: usize },
    #[error("coefficient {index}: {message}")]
    Coefficient { index: usize, message: String },
    #[error("form is defined on {form} cells but the mesh has {mesh} cells")]
    MeshShape { form: String, mesh: String },
    #[error("duplicate boundary dof {dof} with conflicting values {first} and {second}")]
    ConflictingBoundaryValue { dof: usize, first: f64, second: f64 },
    #[error("boundary dof {dof} outside system of size {size}")]
    BoundaryDofOutOfRange { dof: usize, size: usize },
    #[error("{dofs} boundary dofs but {values} values")]
    BoundaryValueCount { dofs: usize, values: usize },
    #[error("matrix is {rows}x{cols} but right-hand side has length {rhs}")]
    SystemShape { rows: usize, cols: usize, rhs: usize },
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    DofMap(#[from] DofMapError),
    #[error(transparent)]
    Element(#[from] ElementError),
}

/// Where a coefficient's values come from.
#[derive(Clone)]
pub enum CoefficientSource {
    /// A global dof vector on `dofmap`.
    Discrete { dofmap: DofMap, values: Arc<[f64]> },
    /// A function of physical position, interpolated cell by cell.
    Analytic(Arc<dyn PhysicalFunction>),
}

impl std::fmt::Debug for CoefficientSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CoefficientSource::Discrete { dofmap, values } => f
                .debug_struct("Discrete")
                .field("element", &dofmap.element().signature())
                .field("len", &values.len())
                .finish(),
            CoefficientSource::Analytic(func) => f.debug_tuple("Analytic").field(&func.value_size()).finish(),
        }
    }
}

impl CoefficientSource {
    pub fn discrete(dofmap: DofMap, values: Vec<f64>) -> Self {
        CoefficientSource::Discrete { dofmap, values: values.into() }
    }

    pub fn analytic(f: impl PhysicalFunction + 'static) -> Self {
        CoefficientSource::Analytic(Arc::new(f))
    }

    fn check(&self, element: &FiniteElement) -> Result<(), String> {
        match self {
            CoefficientSource::Discrete { dofmap, values } => {
                if dofmap.element() != element {
                    return Err(format!(
                        "field is on {}, form expects {}",
                        dofmap.element().signature(),
                        element.signature()
                    ));
                }
                if values.len() != dofmap.global_dimension() {
                    return Err(format!(
                        "field has {} values, its dof map has {}",
                        values.len(),
                        dofmap.global_dimension()
                    ));
                }
                Ok(())
            }
            CoefficientSource::Analytic(f) => {
                if f.value_size() != element.value_size() {
                    return Err(format!(
                        "function has {} components, element has {}",
                        f.value_size(),
                        element.value_size()
                    ));
                }
                Ok(())
            }
        }
    }
}

/// Local values of a coefficient on one cell: gathered from a discrete
/// field or interpolated from an analytic function.
pub fn interpolate_coefficient(
    source: &CoefficientSource,
    element: &FiniteElement,
    cell: &CellView,
) -> Result<Vec<f64>, AssemblyError> {
    source.check(element).map_err(|message| AssemblyError::Coefficient { index: 0, message })?;
    Ok(match source {
        CoefficientSource::Discrete { dofmap, values } => {
            dofmap.tabulate_dofs(cell).into_iter().map(|d| values[d]).collect()
        }
        CoefficientSource::Analytic(f) => element.evaluate_dofs(f.as_ref(), cell)?,
    })
}

/// Global interpolant of `f` on `dofmap`.
pub fn interpolate(dofmap: &DofMap, mesh: &Mesh, f: &dyn PhysicalFunction) -> Result<Vec<f64>, AssemblyError> {
    let mut out = vec![0.0; dofmap.global_dimension()];
    for c in 0..mesh.num_cells() {
        let cell = mesh.cell_view(c)?;
        let local = dofmap.element().evaluate_dofs(f, &cell)?;
        for (d, v) in dofmap.tabulate_dofs(&cell).into_iter().zip(local) {
            out[d] = v;
        }
    }
    Ok(out)
}

/// Everything needed to assemble one form on one mesh.
#[derive(Clone, Debug)]
pub struct AssemblyJob<'a> {
    pub form: &'a CompiledForm,
    pub mesh: &'a Mesh,
    /// Test space first, then trial space.
    pub dofmaps: Vec<DofMap>,
    pub coefficients: Vec<CoefficientSource>,
}

impl<'a> AssemblyJob<'a> {
    /// Builds argument dof maps from the form's elements; coefficients are
    /// added with [`AssemblyJob::coefficient`].
    pub fn new(form: &'a CompiledForm, mesh: &'a Mesh) -> Result<Self, AssemblyError> {
        let d = form.descriptor();
        if d.shape() != mesh.shape() {
            return Err(AssemblyError::MeshShape { form: d.shape().to_string(), mesh: mesh.shape().to_string() });
        }
        let dofmaps = d.argument_elements.iter().map(|e| DofMap::for_mesh(mesh, e)).collect::<Result<_, _>>()?;
        Ok(Self { form, mesh, dofmaps, coefficients: Vec::new() })
    }

    pub fn coefficient(mut self, source: CoefficientSource) -> Self {
        self.coefficients.push(source);
        self
    }

    pub fn validate(&self) -> Result<(), AssemblyError> {
        let d = self.form.descriptor();
        if d.shape() != self.mesh.shape() {
            return Err(AssemblyError::MeshShape { form: d.shape().to_string(), mesh: self.mesh.shape().to_string() });
        }
        if self.dofmaps.len() != d.rank {
            return Err(AssemblyError::DofMapCount { rank: d.rank, found: self.dofmaps.len() });
        }
        for (index, (m, e)) in self.dofmaps.iter().zip(&d.argument_elements).enumerate() {
            if m.element() != e {
                return Err(AssemblyError::DofMapElement {
                    index,
                    expected: e.signature(),
                    found: m.element().signature(),
                });
            }
        }
        if self.coefficients.len() != d.num_coefficients() {
            return Err(AssemblyError::CoefficientCount {
                expected: d.num_coefficients(),
                found: self.coefficients.len(),
            });
        }
        for (index, (s, e)) in self.coefficients.iter().zip(&d.coefficient_elements).enumerate() {
            s.check(e).map_err(|message| AssemblyError::Coefficient { index, message })?;
        }
        for kind in IntegralKind::ALL {
            for &subdomain in d.integrals(kind).keys() {
                if self.form.kernel(kind, subdomain).is_none() {
                    return Err(AssemblyError::MissingKernel { kind: kind.name(), subdomain });
                }
            }
        }
        Ok(())
    }

    fn local_coefficients(&self, cell: &CellView) -> Result<Vec<Vec<f64>>, AssemblyError> {
        let d = self.form.descriptor();
        self.coefficients
            .iter()
            .zip(&d.coefficient_elements)
            .enumerate()
            .map(|(index, (s, e))| {
                interpolate_coefficient(s, e, cell).map_err(|err| match err {
                    AssemblyError::Coefficient { message, .. } => AssemblyError::Coefficient { index, message },
                    other => other,
                })
            })
            .collect()
    }
}

/// Assembles the global tensor of `job`'s form: a scalar, vector or sparse
/// matrix for rank 0, 1 and 2.
pub fn assemble(job: &AssemblyJob) -> Result<GlobalTensor, AssemblyError> {
    job.validate()?;
    let form = job.form;
    let mesh = job.mesh;
    let shape: Vec<usize> = job.dofmaps.iter().map(DofMap::global_dimension).collect();
    let mut tensor = GlobalTensor::zeros(&shape)?;
    let mut element_tensor = Vec::new();
    let mut dofs: Vec<Vec<usize>> = vec![Vec::new(); job.dofmaps.len()];

    if !form.subdomains(IntegralKind::Cell).is_empty() {
        for c in 0..mesh.num_cells() {
            let Some(kernel) = form.kernel(IntegralKind::Cell, mesh.cell_marker(c)) else { continue };
            let cell = mesh.cell_view(c)?;
            for (m, out) in job.dofmaps.iter().zip(dofs.iter_mut()) {
                *out = m.tabulate_dofs(&cell);
            }
            let w = job.local_coefficients(&cell)?;
            let w: Vec<&[f64]> = w.iter().map(Vec::as_slice).collect();
            element_tensor.resize(kernel.tensor_size(), 0.0);
            kernel.tabulate_tensor(&mut element_tensor, &w, &IntegralDomain::Cell(&cell))?;
            let idx: Vec<&[usize]> = dofs.iter().map(Vec::as_slice).collect();
            tensor.add_block(&DenseBlock { values: &element_tensor, indices: &idx })?;
        }
    }

    if !form.subdomains(IntegralKind::ExteriorFacet).is_empty() {
        for f in mesh.exterior_facets() {
            let Some(kernel) = form.kernel(IntegralKind::ExteriorFacet, mesh.facet_marker(f.facet)) else { continue };
            let cell = mesh.cell_view(f.cell)?;
            for (m, out) in job.dofmaps.iter().zip(dofs.iter_mut()) {
                *out = m.tabulate_dofs(&cell);
            }
            let w = job.local_coefficients(&cell)?;
            let w: Vec<&[f64]> = w.iter().map(Vec::as_slice).collect();
            element_tensor.resize(kernel.tensor_size(), 0.0);
            let domain = IntegralDomain::ExteriorFacet { cell: &cell, local_facet: f.local_facet };
            kernel.tabulate_tensor(&mut element_tensor, &w, &domain)?;
            let idx: Vec<&[usize]> = dofs.iter().map(Vec::as_slice).collect();
            tensor.add_block(&DenseBlock { values: &element_tensor, indices: &idx })?;
        }
    }

    if !form.subdomains(IntegralKind::InteriorFacet).is_empty() {
        for f in mesh.interior_facets() {
            let Some(kernel) = form.kernel(IntegralKind::InteriorFacet, mesh.facet_marker(f.facet)) else { continue };
            let mc = mesh.macro_cell_view(f.facet)?;
            for (m, out) in job.dofmaps.iter().zip(dofs.iter_mut()) {
                *out = m.tabulate_dofs(&mc.plus);
                out.extend(m.tabulate_dofs(&mc.minus));
            }
            let wp = job.local_coefficients(&mc.plus)?;
            let wm = job.local_coefficients(&mc.minus)?;
            let w: Vec<Vec<f64>> = wp
                .into_iter()
                .zip(wm)
                .map(|(mut p, m)| {
                    p.extend(m);
                    p
                })
                .collect();
            let w: Vec<&[f64]> = w.iter().map(Vec::as_slice).collect();
            element_tensor.resize(kernel.tensor_size(), 0.0);
            let domain = IntegralDomain::InteriorFacet {
                plus: &mc.plus,
                plus_facet: mc.plus_facet,
                minus: &mc.minus,
                minus_facet: mc.minus_facet,
            };
            kernel.tabulate_tensor(&mut element_tensor, &w, &domain)?;
            let idx: Vec<&[usize]> = dofs.iter().map(Vec::as_slice).collect();
            tensor.add_block(&DenseBlock { values: &element_tensor, indices: &idx })?;
        }
    }
    Ok(tensor)
}

/// Sorted global dofs in the closure of exterior facets, optionally only
/// those with facet marker `marker`.
pub fn boundary_dofs(dofmap: &DofMap, mesh: &Mesh, marker: Option<usize>) -> Result<Vec<usize>, AssemblyError> {
    let mut out = Vec::new();
    for f in mesh.exterior_facets() {
        if marker.is_some_and(|k| mesh.facet_marker(f.facet) != k) {
            continue;
        }
        let cell = mesh.cell_view(f.cell)?;
        let dofs = dofmap.tabulate_dofs(&cell);
        out.extend(dofmap.tabulate_facet_dofs(f.local_facet)?.into_iter().map(|l| dofs[l]));
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Boundary dofs and the interpolated values of `g` there.
pub fn boundary_values(
    dofmap: &DofMap,
    mesh: &Mesh,
    marker: Option<usize>,
    g: &dyn PhysicalFunction,
) -> Result<(Vec<usize>, Vec<f64>), AssemblyError> {
    let mut pairs = Vec::new();
    for f in mesh.exterior_facets() {
        if marker.is_some_and(|k| mesh.facet_marker(f.facet) != k) {
            continue;
        }
        let cell = mesh.cell_view(f.cell)?;
        let dofs = dofmap.tabulate_dofs(&cell);
        let values = dofmap.element().evaluate_dofs(g, &cell)?;
        for l in dofmap.tabulate_facet_dofs(f.local_facet)? {
            pairs.push((dofs[l], values[l]));
        }
    }
    pairs.sort_by_key(|p| p.0);
    pairs.dedup_by_key(|p| p.0);
    Ok(pairs.into_iter().unzip())
}

/// Replaces row `d` of the system by the identity row and sets `rhs[d]`
/// to the prescribed value, for every constrained dof.
pub fn apply_dirichlet(matrix: &mut Csr, rhs: &mut [f64], dofs: &[usize], values: &[f64]) -> Result<(), AssemblyError> {
    if dofs.len() != values.len() {
        return Err(AssemblyError::BoundaryValueCount { dofs: dofs.len(), values: values.len() });
    }
    if matrix.nrows != rhs.len() {
        return Err(AssemblyError::SystemShape { rows: matrix.nrows, cols: matrix.ncols, rhs: rhs.len() });
    }
    let mut seen: std::collections::HashMap<usize, f64> = std::collections::HashMap::new();
    for (&d, &v) in dofs.iter().zip(values) {
        if d >= matrix.nrows {
            return Err(AssemblyError::BoundaryDofOutOfRange { dof: d, size: matrix.nrows });
        }
        if let Some(&first) = seen.get(&d) {
            if (first - v).abs() > 1e-12 {
                return Err(AssemblyError::ConflictingBoundaryValue { dof: d, first, second: v });
            }
        }
        seen.insert(d, v);
    }
    for (&d, &v) in dofs.iter().zip(values) {
        matrix.set_unit_row(d);
        rhs[d] = v;
    }
    Ok(())
}
