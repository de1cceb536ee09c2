use formfem::formlang::{compile_form, FormDescriptor, IntegralKind};
use formfem::forms;
use formfem::kernels::{
    AffineMap, ClosedFormPoissonKernel, CompiledForm, ContractionKernel, IntegralDomain, IntegralKernel, KernelError,
    QuadratureKernel, Representation,
};
use formfem::mesh::{CellView, ReferenceShape};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const UNIT_STIFFNESS: [f64; 9] = [1.0, -0.5, -0.5, -0.5, 0.5, 0.0, -0.5, 0.0, 0.5];

fn descriptor(src: &str, name: &str) -> FormDescriptor {
    compile_form(src, name).unwrap()
}

fn cell_kernels(d: &FormDescriptor) -> (QuadratureKernel, ContractionKernel) {
    let e = &d.cell_integrals[&0];
    (
        QuadratureKernel::new(d, IntegralKind::Cell, e, None).unwrap(),
        ContractionKernel::new(d, IntegralKind::Cell, e).unwrap(),
    )
}

fn eval(k: &dyn IntegralKernel, w: &[&[f64]], cell: &CellView) -> Vec<f64> {
    let mut a = vec![0.0; k.tensor_size()];
    k.tabulate_tensor(&mut a, w, &IntegralDomain::Cell(cell)).unwrap();
    a
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn random_cell(rng: &mut StdRng, shape: ReferenceShape) -> CellView {
    let n = shape.num_vertices() * shape.tdim();
    loop {
        let coords: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let cell = CellView::from_coordinates(shape, coords);
        if AffineMap::new(&cell).is_ok_and(|m| m.scale > 0.1) {
            return cell;
        }
    }
}

#[test]
fn reference_triangle_stiffness() {
    let d = descriptor(forms::POISSON, "a");
    let (q, c) = cell_kernels(&d);
    let cell = CellView::reference(ReferenceShape::Triangle);
    for k in [&q as &dyn IntegralKernel, &c, &ClosedFormPoissonKernel] {
        assert!(max_diff(&eval(k, &[], &cell), &UNIT_STIFFNESS) <= 1e-14);
    }
}

#[test]
fn poisson_geometry_tensor_has_four_entries() {
    let d = descriptor(forms::POISSON, "a");
    let (_, c) = cell_kernels(&d);
    assert_eq!(c.geometry_size(), 4);
    let cell = CellView::from_coordinates(ReferenceShape::Triangle, vec![0.1, 0.0, 1.2, 0.3, 0.4, 0.9]);
    let m = AffineMap::new(&cell).unwrap();
    let g = c.geometry_tensor(&m, &[]);
    let mut expected = Vec::new();
    for a in 0..2 {
        for b in 0..2 {
            expected.push(m.scale * (0..2).map(|r| m.jinv(a, r) * m.jinv(b, r)).sum::<f64>());
        }
    }
    let mut got = g.clone();
    got.sort_by(f64::total_cmp);
    expected.sort_by(f64::total_cmp);
    assert!(max_diff(&got, &expected) < 1e-14);
}

#[test]
fn poisson_kernels_agree_on_random_triangles() {
    let d = descriptor(forms::POISSON, "a");
    let (q, c) = cell_kernels(&d);
    let mut rng = StdRng::seed_from_u64(7);
    for _ in 0..100 {
        let cell = random_cell(&mut rng, ReferenceShape::Triangle);
        let p = eval(&ClosedFormPoissonKernel, &[], &cell);
        assert!(max_diff(&p, &eval(&q, &[], &cell)) <= 1e-13);
        assert!(max_diff(&p, &eval(&c, &[], &cell)) <= 1e-13);
        let mut shifted = cell.clone();
        for (k, x) in shifted.coordinates.iter_mut().enumerate() {
            *x += if k % 2 == 0 { 5.0 } else { 7.0 };
        }
        assert!(max_diff(&p, &eval(&ClosedFormPoissonKernel, &[], &shifted)) <= 1e-12);
    }
}

#[test]
fn mass_and_source_on_reference_triangle() {
    let cell = CellView::reference(ReferenceShape::Triangle);
    let (q, c) = cell_kernels(&descriptor(forms::MASS, "a"));
    let expected: Vec<f64> = (0..9).map(|k| if k % 4 == 0 { 1.0 / 12.0 } else { 1.0 / 24.0 }).collect();
    assert!(max_diff(&eval(&q, &[], &cell), &expected) < 1e-15);
    assert!(max_diff(&eval(&c, &[], &cell), &expected) < 1e-15);
    let (q, c) = cell_kernels(&descriptor(forms::POISSON, "L"));
    let f: &[f64] = &[100.0, 100.0, 100.0];
    for a in [eval(&q, &[f], &cell), eval(&c, &[f], &cell)] {
        assert!(a.iter().all(|v| (v - 100.0 / 6.0).abs() < 1e-12));
    }
}

#[test]
fn builtin_forms_agree_across_representations() {
    let cases = [
        (forms::POISSON, "a"),
        (forms::POISSON, "L"),
        (forms::WEIGHTED_POISSON, "a"),
        (forms::MASS, "a"),
        (forms::DIVERGENCE, "a"),
        (forms::CONVECTION, "a"),
        (forms::ACTION, "a"),
        (forms::HELMHOLTZ, "a"),
        (forms::H1_ERROR, "M"),
    ];
    let mut rng = StdRng::seed_from_u64(11);
    for (src, name) in cases {
        let d = descriptor(src, name);
        let (q, c) = cell_kernels(&d);
        for _ in 0..100 {
            let cell = random_cell(&mut rng, d.shape());
            let w: Vec<Vec<f64>> = d
                .coefficient_elements
                .iter()
                .map(|e| (0..e.space_dimension()).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect();
            let w: Vec<&[f64]> = w.iter().map(Vec::as_slice).collect();
            let diff = max_diff(&eval(&q, &w, &cell), &eval(&c, &w, &cell));
            assert!(diff <= 1e-12, "{name}: {diff:e}");
        }
    }
}

#[test]
fn affine_covariance_and_symmetry() {
    let mass = cell_kernels(&descriptor(forms::MASS, "a")).1;
    let stiff = cell_kernels(&descriptor(forms::POISSON, "a")).1;
    let mut rng = StdRng::seed_from_u64(3);
    for _ in 0..20 {
        let cell = random_cell(&mut rng, ReferenceShape::Triangle);
        let s = rng.gen_range(0.2..3.0);
        let scaled = CellView::from_coordinates(cell.shape, cell.coordinates.iter().map(|x| s * x).collect());
        let m1: Vec<f64> = eval(&mass, &[], &cell).iter().map(|v| s * s * v).collect();
        assert!(max_diff(&m1, &eval(&mass, &[], &scaled)) < 1e-12);
        assert!(max_diff(&eval(&stiff, &[], &cell), &eval(&stiff, &[], &scaled)) < 1e-12);
        for k in [&mass, &stiff] {
            let a = eval(k, &[], &cell);
            for i in 0..3 {
                for j in 0..3 {
                    assert!((a[3 * i + j] - a[3 * j + i]).abs() < 1e-14);
                }
            }
        }
    }
}

#[test]
fn three_dimensional_and_interval_kernels() {
    for shape in [ReferenceShape::Interval, ReferenceShape::Tetrahedron] {
        for degree in 1..=2 {
            let src = forms::poisson_source(shape, degree);
            let d = descriptor(&src, "a");
            let (q, c) = cell_kernels(&d);
            let mut rng = StdRng::seed_from_u64(5);
            for _ in 0..10 {
                let cell = random_cell(&mut rng, shape);
                let a = eval(&q, &[], &cell);
                assert!(max_diff(&a, &eval(&c, &[], &cell)) < 1e-12);
                let n = d.argument_elements[0].space_dimension();
                for i in 0..n {
                    assert!(a[i * n..(i + 1) * n].iter().sum::<f64>().abs() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn contraction_rejects_what_it_cannot_represent() {
    let power = descriptor(forms::POWER_LAW, "F");
    assert!(matches!(
        ContractionKernel::new(&power, IntegralKind::Cell, &power.cell_integrals[&0]),
        Err(KernelError::NonPolynomial)
    ));
    let jump = descriptor(forms::DG_JUMP, "a");
    let e = &jump.interior_facet_integrals[&0];
    assert!(matches!(
        ContractionKernel::new(&jump, IntegralKind::InteriorFacet, e),
        Err(KernelError::UnsupportedKind(_))
    ));
    let auto = CompiledForm::new(power.clone(), Representation::Auto).unwrap();
    assert_eq!(auto.representation(IntegralKind::Cell, 0), Some(Representation::Quadrature));
    assert!(CompiledForm::new(power, Representation::Contraction).is_err());
    let stiff = CompiledForm::new(descriptor(forms::POISSON, "a"), Representation::Auto).unwrap();
    assert_eq!(stiff.representation(IntegralKind::Cell, 0), Some(Representation::Contraction));
}

#[test]
fn kernel_call_errors() {
    let d = descriptor(forms::POISSON, "L");
    let (q, _) = cell_kernels(&d);
    let cell = CellView::reference(ReferenceShape::Triangle);
    let mut a = vec![0.0; 3];
    assert!(matches!(
        q.tabulate_tensor(&mut a, &[], &IntegralDomain::Cell(&cell)),
        Err(KernelError::CoefficientCount { .. })
    ));
    assert!(matches!(
        q.tabulate_tensor(&mut a, &[&[1.0, 2.0]], &IntegralDomain::Cell(&cell)),
        Err(KernelError::CoefficientSize { .. })
    ));
    let mut short = vec![0.0; 2];
    assert!(matches!(
        q.tabulate_tensor(&mut short, &[&[1.0; 3]], &IntegralDomain::Cell(&cell)),
        Err(KernelError::BufferSize { .. })
    ));
    let flat = CellView::from_coordinates(ReferenceShape::Triangle, vec![0.0, 0.0, 1.0, 1.0, 2.0, 2.0]);
    assert!(matches!(
        q.tabulate_tensor(&mut a, &[&[1.0; 3]], &IntegralDomain::Cell(&flat)),
        Err(KernelError::DegenerateCell { .. })
    ));
    assert!(matches!(
        q.tabulate_tensor(&mut a, &[&[1.0; 3]], &IntegralDomain::ExteriorFacet { cell: &cell, local_facet: 0 }),
        Err(KernelError::DomainMismatch { .. })
    ));
}

#[test]
fn facet_kernels() {
    let src = "e = FiniteElement(\"Lagrange\", \"triangle\", 1)\nv = TestFunction(e)\nu = TrialFunction(e)\n\
               a = v*u*ds\n";
    let d = descriptor(src, "a");
    let k = QuadratureKernel::new(&d, IntegralKind::ExteriorFacet, &d.exterior_facet_integrals[&0], None).unwrap();
    let cell = CellView::from_coordinates(ReferenceShape::Triangle, vec![0.0, 0.0, 2.0, 0.0, 0.0, 2.0]);
    let mut a = vec![0.0; 9];
    k.tabulate_tensor(&mut a, &[], &IntegralDomain::ExteriorFacet { cell: &cell, local_facet: 2 }).unwrap();
    // Facet 2 is the edge from vertex 0 to vertex 1, length 2: mass matrix L/6 * [[2,1],[1,2]].
    let expected = [2.0 / 3.0, 1.0 / 3.0, 0.0, 1.0 / 3.0, 2.0 / 3.0, 0.0, 0.0, 0.0, 0.0];
    assert!(max_diff(&a, &expected) < 1e-14);
}
