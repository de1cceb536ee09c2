//! Fixtures shared by the benchmarks.

use formfem::formlang::compile_form;
use formfem::forms;
use formfem::kernels::{CompiledForm, Representation};
use formfem::mesh::{CellView, ReferenceShape};

/// Form `name` from a bundled form file, compiled with `repr`.
pub fn builtin_form(file: &str, name: &str, repr: Representation) -> CompiledForm {
    let src = forms::builtin(file).expect("bundled form file");
    CompiledForm::new(compile_form(src, name).expect("valid form"), repr).expect("kernels")
}

/// A fixed, well-shaped physical triangle.
pub fn sample_triangle() -> CellView {
    CellView::from_coordinates(ReferenceShape::Triangle, vec![0.1, 0.2, 1.3, 0.1, 0.4, 1.1])
}
