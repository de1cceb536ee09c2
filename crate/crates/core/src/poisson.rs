//! Dirichlet Poisson solves and the manufactured-solution convergence study.

use std::f64::consts::PI;
use std::sync::Arc;

use thiserror::Error;

use crate::assembler::{apply_dirichlet, assemble, boundary_values, AssemblyError, AssemblyJob, CoefficientSource};
use crate::dofmap::DofMap;
use crate::element::{Analytic, PhysicalFunction};
use crate::formlang::{compile_form, FormError};
use crate::forms::{error_norm_source, poisson_source};
use crate::kernels::{CompiledForm, KernelError, Representation};
use crate::linalg::{cg_solve, CgStats, LinalgError};
use crate::mesh::{unit_square_mesh, Mesh, MeshError};

#[derive(Debug, Error)]
pub enum PoissonError {
    #[error("unsupported polynomial degree {0}")]
    Degree(usize),
    #[error("a convergence study needs at least {min} levels, got {found}")]
    Levels { min: usize, found: usize },
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// Solver settings for [`solve_poisson`].
#[derive(Clone, Debug)]
pub struct PoissonOptions {
    pub degree: usize,
    /// Restrict the boundary condition to exterior facets with this marker.
    pub marker: Option<usize>,
    pub tolerance: f64,
    /// Defaults to ten times the number of dofs.
    pub max_iterations: Option<usize>,
    pub representation: Representation,
}

impl Default for PoissonOptions {
    fn default() -> Self {
        Self { degree: 1, marker: None, tolerance: 1e-10, max_iterations: None, representation: Representation::Auto }
    }
}

#[derive(Clone, Debug)]
pub struct PoissonSolution {
    pub dofmap: DofMap,
    pub values: Vec<f64>,
    pub stats: CgStats,
}

/// Solves `-Δu = f` with `u = g` on the (marked) boundary.
pub fn solve_poisson(
    mesh: &Mesh,
    f: Arc<dyn PhysicalFunction>,
    g: &dyn PhysicalFunction,
    options: &PoissonOptions,
) -> Result<PoissonSolution, PoissonError> {
    if !(1..=3).contains(&options.degree) {
        return Err(PoissonError::Degree(options.degree));
    }
    let src = poisson_source(mesh.shape(), options.degree);
    let a = CompiledForm::new(compile_form(&src, "a")?, options.representation)?;
    let l = CompiledForm::new(compile_form(&src, "L")?, options.representation)?;

    let job = AssemblyJob::new(&a, mesh)?;
    let mut matrix = assemble(&job)?.into_matrix().expect("rank 2");
    let mut rhs = assemble(&AssemblyJob::new(&l, mesh)?.coefficient(CoefficientSource::Analytic(f)))?
        .into_vector()
        .expect("rank 1");

    let dofmap = job.dofmaps[0].clone();
    let (dofs, values) = boundary_values(&dofmap, mesh, options.marker, g)?;
    apply_dirichlet(&mut matrix, &mut rhs, &dofs, &values)?;

    let max_iter = options.max_iterations.unwrap_or(10 * rhs.len().max(10));
    let (values, stats) = cg_solve(&matrix, &rhs, options.tolerance, max_iter)?;
    Ok(PoissonSolution { dofmap, values, stats })
}

/// `sin(πx) sin(πy)`
pub fn manufactured_solution() -> impl PhysicalFunction {
    Analytic::new(1, |x: &[f64], v: &mut [f64]| v[0] = (PI * x[0]).sin() * (PI * x[1]).sin())
}

/// `2π² sin(πx) sin(πy)`, the matching source term.
pub fn manufactured_source() -> impl PhysicalFunction {
    Analytic::new(1, |x: &[f64], v: &mut [f64]| v[0] = 2.0 * PI * PI * (PI * x[0]).sin() * (PI * x[1]).sin())
}

/// L2 and H1-seminorm errors of `uh` against `exact`, assembled as
/// functionals with quadrature of degree `2·degree + 3`.
pub fn error_norms(
    mesh: &Mesh,
    uh: &PoissonSolution,
    exact: Arc<dyn PhysicalFunction>,
) -> Result<(f64, f64), PoissonError> {
    let degree = uh.dofmap.element().degree();
    let src = error_norm_source(mesh.shape(), degree);
    let mut out = [0.0; 2];
    for (slot, name) in out.iter_mut().zip(["L2", "H1_semi"]) {
        let form = CompiledForm::with_quadrature_degree(
            compile_form(&src, name)?,
            Representation::Quadrature,
            Some(2 * degree + 3),
        )?;
        let job = AssemblyJob::new(&form, mesh)?
            .coefficient(CoefficientSource::Analytic(exact.clone()))
            .coefficient(CoefficientSource::discrete(uh.dofmap.clone(), uh.values.clone()));
        *slot = assemble(&job)?.as_scalar().expect("rank 0").max(0.0).sqrt();
    }
    Ok((out[0], out[1]))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceLevel {
    pub n: usize,
    pub dofs: usize,
    pub l2: f64,
    pub h1: f64,
    /// `log2(e_{2h} / e_h)`, absent on the coarsest level.
    pub l2_rate: Option<f64>,
    pub h1_rate: Option<f64>,
}

/// Manufactured Poisson problem on `unit_square_mesh(8·2^l)` for
/// `l = 0..levels`.
pub fn convergence_study(degree: usize, levels: usize) -> Result<Vec<ConvergenceLevel>, PoissonError> {
    if levels < 3 {
        return Err(PoissonError::Levels { min: 3, found: levels });
    }
    let exact: Arc<dyn PhysicalFunction> = Arc::new(manufactured_solution());
    let source: Arc<dyn PhysicalFunction> = Arc::new(manufactured_source());
    let zero = crate::element::Constant(vec![0.0]);
    let options = PoissonOptions { degree, ..Default::default() };
    let mut out: Vec<ConvergenceLevel> = Vec::with_capacity(levels);
    for l in 0..levels {
        let n = 8 << l;
        let mesh = unit_square_mesh(n)?;
        let uh = solve_poisson(&mesh, source.clone(), &zero, &options)?;
        let (l2, h1) = error_norms(&mesh, &uh, exact.clone())?;
        let prev = out.last();
        out.push(ConvergenceLevel {
            n,
            dofs: uh.values.len(),
            l2,
            h1,
            l2_rate: prev.map(|p| (p.l2 / l2).log2()),
            h1_rate: prev.map(|p| (p.h1 / h1).log2()),
        });
    }
    Ok(out)
}
