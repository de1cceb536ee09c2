use formfem::formlang::{
    compile_all, compile_form, integrand_polynomial_degree, parse, pretty_print, FormError, PolynomialDegree, Role,
};
use formfem::forms;
use proptest::prelude::*;

#[test]
fn classification_of_builtin_forms() {
    let cases: &[(&str, &str, (usize, usize))] = &[
        (forms::POISSON, "a", (2, 0)),
        (forms::POISSON, "L", (1, 1)),
        (forms::CONVECTION, "a", (2, 2)),
        (forms::ACTION, "a", (1, 2)),
        (forms::DIVERGENCE, "a", (2, 0)),
        (forms::POWER_LAW, "F", (1, 3)),
        (forms::H1_ERROR, "M", (0, 2)),
        (forms::WEIGHTED_POISSON, "a", (2, 1)),
        (forms::HELMHOLTZ, "a", (2, 0)),
        (forms::MASS, "a", (2, 0)),
        (forms::DG_JUMP, "a", (2, 0)),
    ];
    for (src, name, arity) in cases {
        let d = compile_form(src, name).unwrap();
        assert_eq!(d.arity(), *arity, "{name}:\n{}", d.dump());
    }
}

#[test]
fn convection_coefficients_follow_declaration_order() {
    let d = compile_form(forms::CONVECTION, "a").unwrap();
    assert_eq!(d.coefficient_names, vec!["w", "rho"]);
    assert!(d.coefficient_elements[0].is_vector());
    assert_eq!(d.coefficient_elements[1].value_size(), 1);
    assert_eq!(d.argument_names, vec!["v", "u"]);
    let e = &d.cell_integrals[&0];
    assert_eq!(integrand_polynomial_degree(e, &d), PolynomialDegree::Polynomial(3));
}

#[test]
fn polynomial_degrees() {
    let a = compile_form(forms::POISSON, "a").unwrap();
    assert_eq!(integrand_polynomial_degree(&a.cell_integrals[&0], &a), PolynomialDegree::Polynomial(0));
    let l = compile_form(forms::POISSON, "L").unwrap();
    assert_eq!(integrand_polynomial_degree(&l.cell_integrals[&0], &l), PolynomialDegree::Polynomial(2));
    let f = compile_form(forms::POWER_LAW, "F").unwrap();
    assert_eq!(integrand_polynomial_degree(&f.cell_integrals[&0], &f), PolynomialDegree::NonPolynomial);
}

#[test]
fn every_builtin_round_trips_through_the_printer() {
    for (name, src) in forms::BUILTIN {
        let mut ast = parse(src).unwrap();
        let printed = pretty_print(&ast);
        let mut again = parse(&printed).unwrap_or_else(|e| panic!("{name}: {e}\n{printed}"));
        ast.strip_spans();
        again.strip_spans();
        assert_eq!(ast, again, "{name}");
    }
}

#[test]
fn dump_is_stable() {
    let d = compile_form(forms::POISSON, "L").unwrap();
    let expected = "form L\nrank 1\nnum_coefficients 1\nargument 0 v Lagrange;triangle;1\n\
                    coefficient 0 f Lagrange;triangle;1\nintegral cell 0 v0[0]*w0[0]\n";
    assert_eq!(d.dump(), expected);
}

#[test]
fn compile_all_finds_both_poisson_forms() {
    let all = compile_all(forms::POISSON).unwrap();
    let names: Vec<&str> = all.iter().map(|d| d.name.as_str()).collect();
    assert_eq!(names, ["a", "L"]);
}

#[test]
fn subdomains_and_measures() {
    let src = "e = FiniteElement(\"Lagrange\", \"triangle\", 1)\nv = TestFunction(e)\n\
               a = v*dx(0) + 2*v*dx(1) + v*ds(3)\n";
    let d = compile_form(src, "a").unwrap();
    assert_eq!(d.cell_integrals.keys().copied().collect::<Vec<_>>(), vec![0, 1]);
    assert_eq!(d.exterior_facet_integrals.keys().copied().collect::<Vec<_>>(), vec![3]);
    assert!(d.interior_facet_integrals.is_empty());
}

const HEADER: &str = "e = FiniteElement(\"Lagrange\", \"triangle\", 1)\n\
                      ve = VectorElement(\"Lagrange\", \"triangle\", 1)\n\
                      v = TestFunction(e)\nu = TrialFunction(e)\nf = Function(e)\n\
                      vv = TestFunction(ve)\nw = Function(ve)\n";

fn analyze_tail(tail: &str) -> Result<(usize, usize), FormError> {
    compile_form(&format!("{HEADER}{tail}\n"), "a").map(|d| d.arity())
}

#[test]
fn semantic_errors() {
    assert!(matches!(analyze_tail("a = u*f*dx"), Err(FormError::TrialWithoutTest { .. })));
    assert!(matches!(analyze_tail("a = dot(grad(v), w)*dx + v*dot(w, w)*dx"), Ok((1, 1))));
    assert!(matches!(analyze_tail("a = dot(v, w)*dx"), Err(FormError::Shape { .. })));
    assert!(matches!(analyze_tail("a = inner(grad(vv), w)*dx"), Err(FormError::Shape { .. })));
    assert!(matches!(analyze_tail("a = div(v)*dx"), Err(FormError::Shape { .. })));
    assert!(matches!(analyze_tail("a = w[i]*dx"), Err(FormError::IndexArity { .. })));
    assert!(matches!(analyze_tail("a = vv[i]*w[i]*w[i]*dx"), Err(FormError::IndexArity { .. })));
    assert!(matches!(analyze_tail("a = v*u*dS"), Err(FormError::Unrestricted { .. })));
    assert!(matches!(analyze_tail("a = pos(v)*u*dx"), Err(FormError::RestrictedOutsideInteriorFacet { .. })));
    assert!(matches!(analyze_tail("a = v*u*u*dx"), Err(FormError::NotLinear { .. })));
    assert!(matches!(analyze_tail("a = v*u*dx + v*f*dx"), Err(FormError::NotLinear { .. })));
    assert!(matches!(analyze_tail("a = 1*dx"), Err(FormError::NoArguments { .. })));
    assert!(matches!(analyze_tail("a = grad(v).dx(0)[0]*dx"), Err(FormError::Type { .. })));
    assert!(matches!(analyze_tail("a = v*f**w*dx"), Err(FormError::Type { .. })));
    assert!(matches!(analyze_tail("b = v*dx"), Err(FormError::UnknownForm { .. })));
    assert!(matches!(analyze_tail("v2 = TestFunction(e)\na = v*v2*dx"), Err(FormError::MultipleArguments { .. })));
    let mixed =
        "e = FiniteElement(\"Lagrange\", \"triangle\", 1)\nt = FiniteElement(\"Lagrange\", \"tetrahedron\", 1)\n\
                 v = TestFunction(e)\nf = Function(t)\na = v*f*dx\n";
    assert!(matches!(compile_form(mixed, "a"), Err(FormError::MixedCells { .. })));
}

#[test]
fn index_forms_agree_with_operators() {
    let by_index = compile_form(&format!("{HEADER}a = vv[i].dx(j)*w[i].dx(j)*dx\n"), "a").unwrap();
    let by_inner = compile_form(&format!("{HEADER}a = inner(grad(vv), grad(w))*dx\n"), "a").unwrap();
    assert_eq!(by_index.cell_integrals, by_inner.cell_integrals);
    let div1 = compile_form(&format!("{HEADER}a = v*w[i].dx(i)*dx\n"), "a").unwrap();
    let div2 = compile_form(&format!("{HEADER}a = v*div(w)*dx\n"), "a").unwrap();
    assert_eq!(div1.cell_integrals, div2.cell_integrals);
    let k = compile_form(&format!("{HEADER}m = Index()\na = vv[m]*w[m]*dx\n"), "a").unwrap();
    let d = compile_form(&format!("{HEADER}a = dot(vv, w)*dx\n"), "a").unwrap();
    assert_eq!(k.cell_integrals, d.cell_integrals);
}

#[test]
fn jump_and_average() {
    let src = "e = FiniteElement(\"DG\", \"triangle\", 1)\nv = TestFunction(e)\nu = TrialFunction(e)\n\
               a = avg(v)*jump(u)*dS + v*u*ds\n";
    let d = compile_form(src, "a").unwrap();
    assert_eq!(d.arity(), (2, 0));
    let e = &d.interior_facet_integrals[&0];
    assert_eq!(e.terminals().len(), 4);
    assert!(e.terminals().iter().all(|t| t.restriction.is_some()));
    assert_eq!(e.degree_in(Role::Argument(0)), Some(1));
}

const TERMS: &[&str] =
    &["dot(grad(v), grad(u))*dx", "f*v*u*dx", "2.5*v.dx(0)*u*dx", "v*u*ds", "v*u*dx(1)", "w[0]*v*u.dx(1)*ds(2)"];

proptest! {
    #[test]
    fn term_order_does_not_change_the_descriptor(perm in Just((0..TERMS.len()).collect::<Vec<_>>()).prop_shuffle()) {
        let forward = format!("{HEADER}a = {}\n", TERMS.join(" + "));
        let shuffled: Vec<&str> = perm.iter().map(|&k| TERMS[k]).collect();
        let permuted = format!("{HEADER}a = {}\n", shuffled.join(" + "));
        let d1 = compile_form(&forward, "a").unwrap();
        let d2 = compile_form(&permuted, "a").unwrap();
        prop_assert_eq!(d1.dump(), d2.dump());
        prop_assert_eq!(d1, d2);
    }
}
