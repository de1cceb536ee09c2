use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::formlang::{FormDescriptor, IntegralKind};

use super::contraction::ContractionKernel;
use super::quadrature_kernel::QuadratureKernel;
use super::{IntegralKernel, KernelError};

/// How integrals are evaluated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Representation {
    /// Tensor contraction for polynomial cell integrals, quadrature otherwise.
    #[default]
    Auto,
    Quadrature,
    /// Tensor contraction everywhere; fails on facet or non-polynomial integrals.
    Contraction,
}

impl fmt::Display for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Representation::Auto => "auto",
            Representation::Quadrature => "quadrature",
            Representation::Contraction => "contraction",
        })
    }
}

impl FromStr for Representation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "auto" => Ok(Representation::Auto),
            "quadrature" => Ok(Representation::Quadrature),
            "contraction" | "tensor" => Ok(Representation::Contraction),
            _ => Err(format!("unknown representation '{s}' (expected auto, quadrature or contraction)")),
        }
    }
}

/// A form with one kernel per integral.
#[derive(Clone)]
pub struct CompiledForm {
    descriptor: FormDescriptor,
    kernels: BTreeMap<(IntegralKind, usize), (Representation, Arc<dyn IntegralKernel>)>,
}

impl fmt::Debug for CompiledForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let plan: Vec<String> =
            self.kernels.iter().map(|((k, id), (r, _))| format!("{} {id}: {r}", k.name())).collect();
        f.debug_struct("CompiledForm").field("form", &self.descriptor.name).field("kernels", &plan).finish()
    }
}

impl CompiledForm {
    pub fn new(descriptor: FormDescriptor, representation: Representation) -> Result<Self, KernelError> {
        Self::with_quadrature_degree(descriptor, representation, None)
    }

    /// `degree` overrides the quadrature degree of every quadrature kernel.
    pub fn with_quadrature_degree(
        descriptor: FormDescriptor,
        representation: Representation,
        degree: Option<usize>,
    ) -> Result<Self, KernelError> {
        let mut kernels = BTreeMap::new();
        for kind in IntegralKind::ALL {
            for (&id, integrand) in descriptor.integrals(kind) {
                let contraction = match representation {
                    Representation::Quadrature => None,
                    Representation::Contraction => Some(ContractionKernel::new(&descriptor, kind, integrand)?),
                    Representation::Auto => ContractionKernel::new(&descriptor, kind, integrand).ok(),
                };
                let entry: (Representation, Arc<dyn IntegralKernel>) = match contraction {
                    Some(k) => (Representation::Contraction, Arc::new(k)),
                    None => (
                        Representation::Quadrature,
                        Arc::new(QuadratureKernel::new(&descriptor, kind, integrand, degree)?),
                    ),
                };
                kernels.insert((kind, id), entry);
            }
        }
        Ok(Self { descriptor, kernels })
    }

    pub fn descriptor(&self) -> &FormDescriptor {
        &self.descriptor
    }

    pub fn rank(&self) -> usize {
        self.descriptor.rank
    }

    pub fn kernel(&self, kind: IntegralKind, subdomain: usize) -> Option<&dyn IntegralKernel> {
        self.kernels.get(&(kind, subdomain)).map(|(_, k)| k.as_ref())
    }

    /// Representation used for one integral.
    pub fn representation(&self, kind: IntegralKind, subdomain: usize) -> Option<Representation> {
        self.kernels.get(&(kind, subdomain)).map(|(r, _)| *r)
    }

    /// Subdomain ids with a kernel of the given kind.
    pub fn subdomains(&self, kind: IntegralKind) -> Vec<usize> {
        self.kernels.keys().filter(|(k, _)| *k == kind).map(|(_, id)| *id).collect()
    }

    /// Replaces (or installs) the kernel of one integral.
    pub fn set_kernel(
        &mut self,
        kind: IntegralKind,
        subdomain: usize,
        representation: Representation,
        kernel: Arc<dyn IntegralKernel>,
    ) {
        self.kernels.insert((kind, subdomain), (representation, kernel));
    }

    pub fn remove_kernel(&mut self, kind: IntegralKind, subdomain: usize) -> Option<Arc<dyn IntegralKernel>> {
        self.kernels.remove(&(kind, subdomain)).map(|(_, k)| k)
    }
}
