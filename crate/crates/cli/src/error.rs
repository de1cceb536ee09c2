use formfem::assembler::AssemblyError;
use formfem::kernels::KernelError;
use formfem::linalg::LinalgError;
use formfem::mesh::MeshError;
use formfem::poisson::PoissonError;
use formfem::FormError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Parse(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    pub fn input(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        CliError::Parse(format!("{}: {e}", path.display()))
    }
}

impl From<FormError> for CliError {
    fn from(e: FormError) -> Self {
        CliError::Parse(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Parse(e.to_string())
    }
}

impl From<MeshError> for CliError {
    fn from(e: MeshError) -> Self {
        match e {
            MeshError::ZeroResolution => CliError::Usage(e.to_string()),
            MeshError::Parse { .. } | MeshError::Io(_) => CliError::Parse(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<LinalgError> for CliError {
    fn from(e: LinalgError) -> Self {
        match e {
            LinalgError::Parse { .. } | LinalgError::Io(_) => CliError::Parse(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<KernelError> for CliError {
    fn from(e: KernelError) -> Self {
        match e {
            KernelError::DegenerateCell { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<AssemblyError> for CliError {
    fn from(e: AssemblyError) -> Self {
        match e {
            AssemblyError::Kernel(k) => k.into(),
            AssemblyError::Linalg(l) => l.into(),
            AssemblyError::Mesh(m) => m.into(),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<PoissonError> for CliError {
    fn from(e: PoissonError) -> Self {
        match e {
            PoissonError::Form(f) => f.into(),
            PoissonError::Kernel(k) => k.into(),
            PoissonError::Assembly(a) => a.into(),
            PoissonError::Linalg(l) => l.into(),
            PoissonError::Mesh(m) => m.into(),
            PoissonError::Degree(_) | PoissonError::Levels { .. } => CliError::Usage(e.to_string()),
        }
    }
}
