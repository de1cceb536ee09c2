//! Built-in form files and generated variants.

use crate::mesh::ReferenceShape;

pub const POISSON: &str = include_str!("../forms/poisson.frm");
pub const CONVECTION: &str = include_str!("../forms/convection.frm");
pub const HELMHOLTZ: &str = include_str!("../forms/helmholtz.frm");
pub const WEIGHTED_POISSON: &str = include_str!("../forms/weighted_poisson.frm");
pub const MASS: &str = include_str!("../forms/mass.frm");
pub const DIVERGENCE: &str = include_str!("../forms/divergence.frm");
pub const POWER_LAW: &str = include_str!("../forms/power_law.frm");
pub const H1_ERROR: &str = include_str!("../forms/h1_error.frm");
pub const ACTION: &str = include_str!("../forms/action.frm");
pub const DG_JUMP: &str = include_str!("../forms/dg_jump.frm");

/// `(file stem, source)` for every bundled form file.
pub const BUILTIN: &[(&str, &str)] = &[
    ("poisson", POISSON),
    ("convection", CONVECTION),
    ("helmholtz", HELMHOLTZ),
    ("weighted_poisson", WEIGHTED_POISSON),
    ("mass", MASS),
    ("divergence", DIVERGENCE),
    ("power_law", POWER_LAW),
    ("h1_error", H1_ERROR),
    ("action", ACTION),
    ("dg_jump", DG_JUMP),
];

pub fn builtin(name: &str) -> Option<&'static str> {
    BUILTIN.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

/// Degree used for manufactured right-hand sides and exact solutions.
pub const EXACT_DEGREE: usize = 3;

/// Poisson pair `a`, `L` on `shape` with Lagrange elements of `degree`; the
/// source `f` lives in a cubic space.
pub fn poisson_source(shape: ReferenceShape, degree: usize) -> String {
    format!(
        "element = FiniteElement(\"Lagrange\", \"{shape}\", {degree})\n\
         source_element = FiniteElement(\"Lagrange\", \"{shape}\", {EXACT_DEGREE})\n\
         v = TestFunction(element)\n\
         u = TrialFunction(element)\n\
         f = Function(source_element)\n\
         a = dot(grad(v), grad(u))*dx\n\
         L = v*f*dx\n"
    )
}

/// Error functionals `L2` and `H1_semi` comparing a cubic `u` with `uh` of
/// `degree`.
pub fn error_norm_source(shape: ReferenceShape, degree: usize) -> String {
    format!(
        "exact_element = FiniteElement(\"Lagrange\", \"{shape}\", {EXACT_DEGREE})\n\
         element = FiniteElement(\"Lagrange\", \"{shape}\", {degree})\n\
         u = Function(exact_element)\n\
         uh = Function(element)\n\
         e = u - uh\n\
         L2 = e*e*dx\n\
         H1_semi = dot(grad(e), grad(e))*dx\n"
    )
}
