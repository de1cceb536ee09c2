use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use formfem::assembler::{assemble, AssemblyJob, CoefficientSource};
use formfem::element::Constant;
use formfem::formlang::{compile_all, IntegralKind};
use formfem::forms;
use formfem::kernels::{ClosedFormPoissonKernel, IntegralDomain, IntegralKernel, Representation};
use formfem::mesh::unit_square_mesh;
use formfem_bench::{builtin_form, sample_triangle};
use std::hint::black_box;

fn element_kernels(c: &mut Criterion) {
    let cell = sample_triangle();
    let domain = IntegralDomain::Cell(&cell);
    let mut group = c.benchmark_group("poisson_p1_element_tensor");
    let mut a = [0.0; 9];
    group.bench_function("closed_form", |b| {
        b.iter(|| ClosedFormPoissonKernel.tabulate_tensor(black_box(&mut a), &[], &domain).unwrap())
    });
    for repr in [Representation::Contraction, Representation::Quadrature] {
        let form = builtin_form("poisson", "a", repr);
        let kernel = form.kernel(IntegralKind::Cell, 0).unwrap();
        group.bench_function(repr.to_string(), |b| {
            b.iter(|| kernel.tabulate_tensor(black_box(&mut a), &[], &domain).unwrap())
        });
    }
    group.finish();
}

fn global_assembly(c: &mut Criterion) {
    let mut group = c.benchmark_group("assemble_poisson_unit_square");
    group.sample_size(20);
    for n in [16, 32] {
        let mesh = unit_square_mesh(n).unwrap();
        for repr in [Representation::Contraction, Representation::Quadrature] {
            let form = builtin_form("poisson", "a", repr);
            group.bench_with_input(BenchmarkId::new(repr.to_string(), n), &mesh, |b, mesh| {
                b.iter(|| {
                    let tensor = assemble(&AssemblyJob::new(&form, mesh).unwrap()).unwrap();
                    black_box(tensor.into_matrix().unwrap().nnz())
                })
            });
        }
    }
    group.finish();

    let mesh = unit_square_mesh(16).unwrap();
    let form = builtin_form("power_law", "F", Representation::Auto);
    c.bench_function("assemble_power_law_residual_16", |b| {
        b.iter(|| {
            let job = AssemblyJob::new(&form, &mesh)
                .unwrap()
                .coefficient(CoefficientSource::analytic(Constant(vec![1.0, 0.5])))
                .coefficient(CoefficientSource::analytic(Constant(vec![2.0])))
                .coefficient(CoefficientSource::analytic(Constant(vec![1.0])));
            black_box(assemble(&job).unwrap())
        })
    });
}

fn form_compilation(c: &mut Criterion) {
    c.bench_function("compile_convection", |b| b.iter(|| compile_all(black_box(forms::CONVECTION)).unwrap()));
}

criterion_group!(benches, element_kernels, global_assembly, form_compilation);
criterion_main!(benches);
