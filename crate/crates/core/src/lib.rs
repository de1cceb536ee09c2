//! Finite element forms: a small form language, compiled element kernels,
//! dof maps and global assembly on simplex meshes.

pub mod assembler;
pub mod dofmap;
pub mod element;
pub mod formlang;
pub mod forms;
pub mod kernels;
pub mod linalg;
pub mod mesh;
pub mod poisson;
pub mod selfcheck;

pub use assembler::{assemble, AssemblyError, AssemblyJob, CoefficientSource};
pub use dofmap::DofMap;
pub use element::{FiniteElement, PhysicalFunction};
pub use formlang::{compile_form, FormDescriptor, FormError, IntegralKind};
pub use kernels::{CompiledForm, IntegralKernel, Representation};
pub use linalg::{Csr, GlobalTensor};
pub use mesh::{Mesh, ReferenceShape};
