use std::collections::BTreeSet;

use formfem::dofmap::DofMap;
use formfem::element::{supported_elements, Family, FiniteElement};
use formfem::mesh::{unit_cube_mesh, unit_interval_mesh, unit_square_mesh, Mesh, ReferenceShape};
use proptest::prelude::*;

fn mesh_for(shape: ReferenceShape, n: usize) -> Mesh {
    match shape {
        ReferenceShape::Interval => unit_interval_mesh(n),
        ReferenceShape::Triangle => unit_square_mesh(n),
        ReferenceShape::Tetrahedron => unit_cube_mesh(n),
    }
    .unwrap()
}

fn shuffled(mesh: &Mesh, keys: &[u32]) -> Mesh {
    let mut order: Vec<usize> = (0..mesh.num_cells()).collect();
    order.sort_by_key(|&c| keys[c % keys.len()].wrapping_mul(c as u32 + 1));
    let cells: Vec<usize> = order.iter().flat_map(|&c| mesh.cell_vertices(c).to_vec()).collect();
    Mesh::from_flat(mesh.shape(), mesh.gdim(), mesh.coordinates().to_vec(), cells).unwrap()
}

#[test]
fn p1_dofs_are_vertex_indices() {
    let mesh = unit_square_mesh(4).unwrap();
    let p1 = DofMap::for_mesh(&mesh, &FiniteElement::lagrange(ReferenceShape::Triangle, 1).unwrap()).unwrap();
    let vp1 =
        DofMap::for_mesh(&mesh, &FiniteElement::vector_lagrange(ReferenceShape::Triangle, 1, 2).unwrap()).unwrap();
    let nv = mesh.num_vertices();
    for c in 0..mesh.num_cells() {
        let cell = mesh.cell_view(c).unwrap();
        let v = &cell.entity_indices[0];
        assert_eq!(&p1.tabulate_dofs(&cell), v);
        let expected: Vec<usize> = v.iter().copied().chain(v.iter().map(|i| nv + i)).collect();
        assert_eq!(vp1.tabulate_dofs(&cell), expected);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn shared_entities_get_shared_dofs(
        element in proptest::sample::select(supported_elements()),
        n in 1usize..4,
        keys in proptest::collection::vec(any::<u32>(), 1..8),
    ) {
        let n = if element.shape() == ReferenceShape::Tetrahedron { n.min(2) } else { n };
        let mesh = shuffled(&mesh_for(element.shape(), n), &keys);
        let map = DofMap::for_mesh(&mesh, &element).unwrap();
        let continuous = element.family() != Family::DiscontinuousLagrange;
        for f in mesh.interior_facets() {
            let plus = mesh.cell_view(f.plus_cell).unwrap();
            let minus = mesh.cell_view(f.minus_cell).unwrap();
            let dp = map.tabulate_dofs(&plus);
            let dm = map.tabulate_dofs(&minus);
            let sp: BTreeSet<usize> = map.tabulate_facet_dofs(f.plus_facet).unwrap().iter().map(|&l| dp[l]).collect();
            let sm: BTreeSet<usize> = map.tabulate_facet_dofs(f.minus_facet).unwrap().iter().map(|&l| dm[l]).collect();
            prop_assert_eq!(&sp, &sm);
            if continuous {
                prop_assert!(!sp.is_empty());
                for l in map.tabulate_facet_dofs(f.plus_facet).unwrap() {
                    let k = dm.iter().position(|&d| d == dp[l]).unwrap();
                    let x = plus.push_forward(&element.dofs()[l].point);
                    let y = minus.push_forward(&element.dofs()[k].point);
                    prop_assert!(x.iter().zip(&y).all(|(a, b)| (a - b).abs() < 1e-12));
                    prop_assert_eq!(element.dofs()[l].component, element.dofs()[k].component);
                }
            }
        }
    }

    #[test]
    fn every_global_dof_is_used(
        element in proptest::sample::select(supported_elements()),
        n in 1usize..4,
    ) {
        let n = if element.shape() == ReferenceShape::Tetrahedron { n.min(2) } else { n };
        let mesh = mesh_for(element.shape(), n);
        let map = DofMap::for_mesh(&mesh, &element).unwrap();
        let mut seen = vec![false; map.global_dimension()];
        for c in 0..mesh.num_cells() {
            let dofs = map.tabulate_dofs(&mesh.cell_view(c).unwrap());
            prop_assert_eq!(dofs.len(), element.space_dimension());
            let unique: BTreeSet<usize> = dofs.iter().copied().collect();
            prop_assert_eq!(unique.len(), dofs.len());
            for d in dofs {
                prop_assert!(d < seen.len());
                seen[d] = true;
            }
        }
        prop_assert!(seen.iter().all(|&s| s));
    }
}
