use formfem::assembler::{
    apply_dirichlet, assemble, boundary_dofs, boundary_values, interpolate, interpolate_coefficient, AssemblyError,
    AssemblyJob, CoefficientSource,
};
use formfem::dofmap::DofMap;
use formfem::element::{Analytic, Constant, FiniteElement};
use formfem::formlang::compile_form;
use formfem::forms;
use formfem::kernels::{CompiledForm, Representation};
use formfem::linalg::{cg_solve, Csr};
use formfem::mesh::{unit_interval_mesh, unit_square_mesh, Mesh, ReferenceShape};
use proptest::prelude::*;

fn compiled(src: &str, name: &str) -> CompiledForm {
    CompiledForm::new(compile_form(src, name).unwrap(), Representation::Auto).unwrap()
}

fn matrix(form: &CompiledForm, mesh: &Mesh) -> Csr {
    assemble(&AssemblyJob::new(form, mesh).unwrap()).unwrap().into_matrix().unwrap()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn dense_diff(a: &Csr, b: &[Vec<f64>]) -> f64 {
    a.to_dense().iter().zip(b).map(|(r, s)| max_diff(r, s)).fold(0.0, f64::max)
}

fn p1(shape: ReferenceShape) -> FiniteElement {
    FiniteElement::lagrange(shape, 1).unwrap()
}

#[test]
fn laplacian_is_symmetric_with_zero_row_sums() {
    let mesh = unit_square_mesh(8).unwrap();
    let a = matrix(&compiled(forms::POISSON, "a"), &mesh);
    assert_eq!((a.nrows, a.ncols), (81, 81));
    assert!(a.max_asymmetry() <= 1e-12);
    assert!(a.row_sums().iter().all(|s| s.abs() <= 1e-12));
}

#[test]
fn mass_matrix_sums_to_area() {
    let mesh = unit_square_mesh(8).unwrap();
    let m = matrix(&compiled(forms::MASS, "a"), &mesh);
    assert!((m.sum() - 1.0).abs() <= 1e-12);
}

#[test]
fn error_functional_vanishes_for_equal_fields() {
    let mesh = unit_square_mesh(4).unwrap();
    let form = compiled(forms::H1_ERROR, "M");
    let d = form.descriptor();
    let g = Analytic::new(1, |x: &[f64], v: &mut [f64]| v[0] = 1.0 + 2.0 * x[0] - x[1]);
    let fields: Vec<CoefficientSource> = d
        .coefficient_elements
        .iter()
        .map(|e| {
            let map = DofMap::for_mesh(&mesh, e).unwrap();
            let values = interpolate(&map, &mesh, &g).unwrap();
            CoefficientSource::discrete(map, values)
        })
        .collect();
    let mut job = AssemblyJob::new(&form, &mesh).unwrap();
    job.coefficients = fields;
    let value = assemble(&job).unwrap().as_scalar().unwrap();
    assert!(value.abs() <= 1e-12, "{value}");
}

#[test]
fn coefficient_interpolation_examples() {
    let mesh = unit_square_mesh(2).unwrap();
    let cell = mesh.cell_view(3).unwrap();
    let e = p1(ReferenceShape::Triangle);
    let c = interpolate_coefficient(&CoefficientSource::analytic(Constant(vec![100.0])), &e, &cell).unwrap();
    assert_eq!(c, vec![100.0; 3]);

    let map = DofMap::for_mesh(&mesh, &e).unwrap();
    let x0 = interpolate(&map, &mesh, &Analytic::new(1, |x: &[f64], v: &mut [f64]| v[0] = x[0])).unwrap();
    let source = CoefficientSource::discrete(map, x0);
    for k in 0..mesh.num_cells() {
        let cell = mesh.cell_view(k).unwrap();
        let got = interpolate_coefficient(&source, &e, &cell).unwrap();
        let xs: Vec<f64> = (0..3).map(|i| cell.vertex(i)[0]).collect();
        assert_eq!(got, xs);
    }

    let ve = FiniteElement::vector_lagrange(ReferenceShape::Triangle, 1, 2).unwrap();
    let got = interpolate_coefficient(&CoefficientSource::analytic(Constant(vec![1.0, 2.0])), &ve, &cell).unwrap();
    assert_eq!(got, vec![1.0, 1.0, 1.0, 2.0, 2.0, 2.0]);

    let err = interpolate_coefficient(&CoefficientSource::analytic(Constant(vec![1.0, 2.0])), &e, &cell);
    assert!(matches!(err, Err(AssemblyError::Coefficient { .. })));
}

#[test]
fn source_vector_sums_to_integral() {
    let mesh = unit_square_mesh(3).unwrap();
    let form = compiled(forms::POISSON, "L");
    let job = AssemblyJob::new(&form, &mesh).unwrap().coefficient(CoefficientSource::analytic(Constant(vec![100.0])));
    let b = assemble(&job).unwrap().into_vector().unwrap();
    assert!((b.iter().sum::<f64>() - 100.0).abs() <= 1e-11);
}

#[test]
fn dirichlet_on_interval_gives_linear_solution() {
    let mesh = unit_interval_mesh(4).unwrap();
    let src = forms::poisson_source(ReferenceShape::Interval, 1);
    let mut a = matrix(&compiled(&src, "a"), &mesh);
    let mut b = vec![0.0; a.nrows];
    let map = DofMap::for_mesh(&mesh, &p1(ReferenceShape::Interval)).unwrap();
    let g = Analytic::new(1, |x: &[f64], v: &mut [f64]| v[0] = x[0]);
    let (dofs, values) = boundary_values(&map, &mesh, None, &g).unwrap();
    assert_eq!(dofs.len(), 2);
    apply_dirichlet(&mut a, &mut b, &dofs, &values).unwrap();
    for &d in &dofs {
        let row: Vec<f64> = (0..a.ncols).map(|j| a.get(d, j)).collect();
        let unit: Vec<f64> = (0..a.ncols).map(|j| if j == d { 1.0 } else { 0.0 }).collect();
        assert_eq!(row, unit);
    }
    let (u, _) = cg_solve(&a, &b, 1e-12, 100).unwrap();
    let mut by_x: Vec<(f64, f64)> = (0..5).map(|v| (mesh.vertex(v)[0], u[v])).collect();
    by_x.sort_by(|p, q| p.0.total_cmp(&q.0));
    let got: Vec<f64> = by_x.iter().map(|p| p.1).collect();
    assert!(max_diff(&got, &[0.0, 0.25, 0.5, 0.75, 1.0]) <= 1e-10, "{got:?}");
}

#[test]
fn constraining_every_dof_reproduces_the_data() {
    let mesh = unit_square_mesh(3).unwrap();
    let mut a = matrix(&compiled(forms::POISSON, "a"), &mesh);
    let n = a.nrows;
    let g: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
    let mut b = vec![0.0; n];
    let dofs: Vec<usize> = (0..n).collect();
    apply_dirichlet(&mut a, &mut b, &dofs, &g).unwrap();
    let (u, _) = cg_solve(&a, &b, 1e-12, 10).unwrap();
    assert!(max_diff(&u, &g) <= 1e-12);
}

#[test]
fn dirichlet_rejects_conflicts() {
    let mut a = Csr::identity(3);
    let mut b = vec![0.0; 3];
    assert!(apply_dirichlet(&mut a, &mut b, &[1, 1], &[2.0, 2.0]).is_ok());
    let err = apply_dirichlet(&mut a, &mut b, &[1, 1], &[2.0, 3.0]);
    assert!(matches!(err, Err(AssemblyError::ConflictingBoundaryValue { dof: 1, .. })));
    assert!(apply_dirichlet(&mut a, &mut b, &[5], &[0.0]).is_err());
}

#[test]
fn boundary_dof_counts() {
    let m2 = unit_square_mesh(2).unwrap();
    let m1 = unit_square_mesh(1).unwrap();
    let p1m = DofMap::for_mesh(&m2, &p1(ReferenceShape::Triangle)).unwrap();
    assert_eq!(boundary_dofs(&p1m, &m2, None).unwrap().len(), 8);
    let dg = DofMap::for_mesh(&m2, &FiniteElement::discontinuous(ReferenceShape::Triangle, 0).unwrap()).unwrap();
    assert!(boundary_dofs(&dg, &m2, None).unwrap().is_empty());
    let p2 = DofMap::for_mesh(&m1, &FiniteElement::lagrange(ReferenceShape::Triangle, 2).unwrap()).unwrap();
    assert_eq!(boundary_dofs(&p2, &m1, None).unwrap().len(), 8);
}

#[test]
fn boundary_dofs_respect_markers() {
    let mut mesh = unit_square_mesh(2).unwrap();
    mesh.mark_exterior_facets(|x| (x[0] < 1e-12).then_some(1));
    let map = DofMap::for_mesh(&mesh, &p1(ReferenceShape::Triangle)).unwrap();
    let left = boundary_dofs(&map, &mesh, Some(1)).unwrap();
    assert_eq!(left.len(), 3);
    assert!(left.iter().all(|&d| mesh.vertex(d)[0] == 0.0));
}

#[test]
fn dg_jump_on_two_cells() {
    let mesh = unit_square_mesh(1).unwrap();
    let a = matrix(&compiled(forms::DG_JUMP, "a"), &mesh);
    let s = 2f64.sqrt();
    assert!(dense_diff(&a, &[vec![s, -s], vec![-s, s]]) <= 1e-12);
}

#[test]
fn dg_jump_matches_weighted_dual_graph() {
    let mesh = unit_square_mesh(4).unwrap();
    let a = matrix(&compiled(forms::DG_JUMP, "a"), &mesh);
    let map = DofMap::for_mesh(&mesh, &FiniteElement::discontinuous(ReferenceShape::Triangle, 0).unwrap()).unwrap();
    let dof = |c: usize| map.tabulate_dofs(&mesh.cell_view(c).unwrap())[0];
    let n = mesh.num_cells();
    let mut oracle = vec![vec![0.0; n]; n];
    for f in mesh.interior_facets() {
        let v = mesh.entity_vertices(1, f.facet);
        let (p, q) = (mesh.vertex(v[0]), mesh.vertex(v[1]));
        let w = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
        let (i, j) = (dof(f.plus_cell), dof(f.minus_cell));
        oracle[i][i] += w;
        oracle[j][j] += w;
        oracle[i][j] -= w;
        oracle[j][i] -= w;
    }
    assert!(dense_diff(&a, &oracle) <= 1e-12);
}

#[test]
fn poisson_matches_brute_force_scatter() {
    let mesh = unit_square_mesh(1).unwrap();
    let a = matrix(&compiled(forms::POISSON, "a"), &mesh);
    let mut oracle = vec![vec![0.0; 4]; 4];
    for c in 0..mesh.num_cells() {
        let vs = mesh.cell_vertices(c);
        let x: Vec<&[f64]> = vs.iter().map(|&v| mesh.vertex(v)).collect();
        let det = (x[1][0] - x[0][0]) * (x[2][1] - x[0][1]) - (x[2][0] - x[0][0]) * (x[1][1] - x[0][1]);
        // gradient of the barycentric coordinate of vertex i
        let grads: Vec<[f64; 2]> = (0..3)
            .map(|i| {
                let (j, k) = ((i + 1) % 3, (i + 2) % 3);
                [(x[j][1] - x[k][1]) / det, (x[k][0] - x[j][0]) / det]
            })
            .collect();
        for i in 0..3 {
            for j in 0..3 {
                oracle[vs[i]][vs[j]] += 0.5 * det.abs() * (grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1]);
            }
        }
    }
    assert_eq!(dense_diff(&a, &oracle), 0.0);
}

#[test]
fn missing_kernel_and_bad_coefficients_are_reported() {
    let mesh = unit_square_mesh(2).unwrap();
    let mut form = compiled(forms::POISSON, "a");
    form.remove_kernel(formfem::formlang::IntegralKind::Cell, 0);
    assert!(matches!(assemble(&AssemblyJob::new(&form, &mesh).unwrap()), Err(AssemblyError::MissingKernel { .. })));

    let l = compiled(forms::POISSON, "L");
    let job = AssemblyJob::new(&l, &mesh).unwrap();
    assert!(matches!(assemble(&job), Err(AssemblyError::CoefficientCount { expected: 1, found: 0 })));
    let job = job.coefficient(CoefficientSource::analytic(Constant(vec![1.0, 1.0])));
    assert!(matches!(assemble(&job), Err(AssemblyError::Coefficient { index: 0, .. })));

    let interval = unit_interval_mesh(2).unwrap();
    assert!(matches!(AssemblyJob::new(&l, &interval), Err(AssemblyError::MeshShape { .. })));
}

#[test]
fn rank_zero_integrates_coefficients() {
    let mesh = unit_square_mesh(4).unwrap();
    let src = forms::error_norm_source(ReferenceShape::Triangle, 1);
    let form = compiled(&src, "L2");
    let job = AssemblyJob::new(&form, &mesh)
        .unwrap()
        .coefficient(CoefficientSource::analytic(Constant(vec![3.0])))
        .coefficient(CoefficientSource::analytic(Constant(vec![1.0])));
    let v = assemble(&job).unwrap().as_scalar().unwrap();
    assert!((v - 4.0).abs() <= 1e-12);
}

fn permuted_mesh(n: usize, perm: &[usize]) -> Mesh {
    let base = unit_square_mesh(n).unwrap();
    let cells: Vec<usize> = perm.iter().flat_map(|&c| base.cell_vertices(c).to_vec()).collect();
    Mesh::from_flat(ReferenceShape::Triangle, 2, base.coordinates().to_vec(), cells).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn source_assembly_is_linear(alpha in -10.0f64..10.0, w in proptest::collection::vec(-1.0f64..1.0, 25)) {
        let mesh = unit_square_mesh(4).unwrap();
        let form = compiled(forms::WEIGHTED_POISSON, "L");
        let e = &form.descriptor().coefficient_elements[0];
        let map = DofMap::for_mesh(&mesh, e).unwrap();
        prop_assume!(map.global_dimension() == 25);
        let scaled: Vec<f64> = w.iter().map(|x| alpha * x).collect();
        let run = |values: Vec<f64>| {
            let job = AssemblyJob::new(&form, &mesh).unwrap().coefficient(CoefficientSource::discrete(map.clone(), values));
            assemble(&job).unwrap().into_vector().unwrap()
        };
        let base: Vec<f64> = run(w).iter().map(|x| alpha * x).collect();
        prop_assert!(max_diff(&run(scaled), &base) <= 1e-12);
    }

    #[test]
    fn assembly_is_cell_order_independent(perm in Just((0..18).collect::<Vec<usize>>()).prop_shuffle()) {
        let form = compiled(forms::POISSON, "a");
        let reference = matrix(&form, &unit_square_mesh(3).unwrap());
        let permuted = matrix(&form, &permuted_mesh(3, &perm));
        prop_assert_eq!(&reference.row_ptr, &permuted.row_ptr);
        prop_assert_eq!(&reference.col_idx, &permuted.col_idx);
        prop_assert!(max_diff(&reference.values, &permuted.values) <= 1e-12);
    }
}
