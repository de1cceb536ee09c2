//! Local-to-global dof numbering from mesh entity indices.
//!
//! Global dofs are laid out in blocks by entity dimension (`d = 0, 1, ...`),
//! then by global entity index, then by position on the entity. Vector
//! elements repeat that scalar layout once per component, component `c`
//! occupying `[c * stride, (c + 1) * stride)`.

use thiserror::Error;

use crate::element::FiniteElement;
use crate::mesh::{CellView, Mesh, MeshDimensions};

#[derive(Debug, Error, PartialEq)]
pub enum DofMapError {
    #[error("element is defined on {element} cells but the mesh has topological dimension {mesh}")]
    ShapeMismatch { element: String, mesh: usize },
    #[error("local facet {facet} out of range ({count} facets)")]
    FacetOutOfRange { facet: usize, count: usize },
    #[error("scalar dof map has no sub-maps")]
    NoSubMaps,
    #[error("component {index} out of range ({count} components)")]
    ComponentOutOfRange { index: usize, count: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct DofMap {
    element: FiniteElement,
    dimensions: MeshDimensions,
    global_dimension: usize,
    dofs_per_entity: Vec<usize>,
    entity_offsets: Vec<usize>,
    component_stride: usize,
}

impl DofMap {
    /// Computes the entity offsets for `element` on a mesh of the given size.
    pub fn new(dimensions: &MeshDimensions, element: &FiniteElement) -> Result<Self, DofMapError> {
        let tdim = element.tdim();
        if dimensions.tdim() != tdim {
            return Err(DofMapError::ShapeMismatch { element: element.shape().to_string(), mesh: dimensions.tdim() });
        }
        let dofs_per_entity: Vec<usize> = (0..=tdim).map(|d| element.dofs_per_entity(d)).collect();
        let mut entity_offsets = Vec::with_capacity(tdim + 1);
        let mut offset = 0;
        for (per, count) in dofs_per_entity.iter().zip(&dimensions.num_entities) {
            entity_offsets.push(offset);
            offset += per * count;
        }
        let components = element.value_size();
        Ok(Self {
            element: element.clone(),
            dimensions: dimensions.clone(),
            global_dimension: offset * components,
            dofs_per_entity,
            entity_offsets,
            component_stride: offset,
        })
    }

    pub fn for_mesh(mesh: &Mesh, element: &FiniteElement) -> Result<Self, DofMapError> {
        Self::new(&mesh.dimensions(), element)
    }

    /// Entity-based maps never need the per-cell initialization pass.
    pub fn requires_cell_init(&self) -> bool {
        false
    }

    pub fn element(&self) -> &FiniteElement {
        &self.element
    }

    pub fn global_dimension(&self) -> usize {
        self.global_dimension
    }

    pub fn local_dimension(&self) -> usize {
        self.element.space_dimension()
    }

    pub fn dofs_per_entity(&self) -> &[usize] {
        &self.dofs_per_entity
    }

    pub fn entity_offsets(&self) -> &[usize] {
        &self.entity_offsets
    }

    /// Global dimension of one component block.
    pub fn component_stride(&self) -> usize {
        self.component_stride
    }

    pub fn num_sub_dofmaps(&self) -> usize {
        self.element.num_sub_elements()
    }

    /// Global dof numbers of the cell's local dofs.
    pub fn tabulate_dofs(&self, cell: &CellView) -> Vec<usize> {
        let mut dofs = vec![0; self.local_dimension()];
        self.tabulate_dofs_into(cell, &mut dofs);
        dofs
    }

    pub fn tabulate_dofs_into(&self, cell: &CellView, dofs: &mut [usize]) {
        let tdim = self.element.tdim();
        let edge_verts = cell.shape.entity_vertices(1);
        for (i, dof) in self.element.dofs().iter().enumerate() {
            let (d, e) = dof.entity;
            let per = self.dofs_per_entity[d];
            let mut s = dof.sub_index;
            // Edge dofs follow the edge from its lower to its higher global vertex.
            if d == 1 && d < tdim && per > 1 {
                let (a, b) = (edge_verts[e][0], edge_verts[e][1]);
                if cell.entity_indices[0][a] > cell.entity_indices[0][b] {
                    s = per - 1 - s;
                }
            }
            dofs[i] =
                dof.component * self.component_stride + self.entity_offsets[d] + cell.entity_indices[d][e] * per + s;
        }
    }

    /// Local dofs attached to entities in the closure of local facet `facet`.
    pub fn tabulate_facet_dofs(&self, facet: usize) -> Result<Vec<usize>, DofMapError> {
        let shape = self.element.shape();
        if facet >= shape.num_facets() {
            return Err(DofMapError::FacetOutOfRange { facet, count: shape.num_facets() });
        }
        let closure = shape.facet_vertices(facet);
        let tdim = shape.tdim();
        Ok(self
            .element
            .dofs()
            .iter()
            .enumerate()
            .filter(|(_, dof)| {
                let (d, e) = dof.entity;
                d < tdim && shape.entity_vertices(d)[e].iter().all(|v| closure.contains(v))
            })
            .map(|(i, _)| i)
            .collect())
    }

    /// The scalar map of component `component`; its numbering is the parent's
    /// component block shifted down by `component * stride`.
    pub fn sub_dofmap(&self, component: usize) -> Result<DofMap, DofMapError> {
        if !self.element.is_vector() {
            return Err(DofMapError::NoSubMaps);
        }
        let sub = self
            .element
            .sub_element(component)
            .map_err(|_| DofMapError::ComponentOutOfRange { index: component, count: self.num_sub_dofmaps() })?;
        DofMap::new(&self.dimensions, &sub)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{unit_square_mesh, ReferenceShape};

    const TRI: ReferenceShape = ReferenceShape::Triangle;

    fn cell_with_vertices(v: [usize; 3]) -> CellView {
        let mut cell = CellView::reference(TRI);
        cell.entity_indices[0] = v.to_vec();
        cell.entity_indices[2] = vec![5];
        cell
    }

    #[test]
    fn global_dimensions() {
        let m = unit_square_mesh(2).unwrap();
        let p1 = DofMap::for_mesh(&m, &FiniteElement::lagrange(TRI, 1).unwrap()).unwrap();
        assert_eq!(p1.global_dimension(), 9);
        let v1 = DofMap::for_mesh(&m, &FiniteElement::vector_lagrange(TRI, 1, 2).unwrap()).unwrap();
        assert_eq!((v1.global_dimension(), v1.component_stride()), (18, 9));
        let dg0 = DofMap::for_mesh(&m, &FiniteElement::discontinuous(TRI, 0).unwrap()).unwrap();
        assert_eq!(dg0.global_dimension(), 8);
        assert!(!dg0.requires_cell_init());
    }

    #[test]
    fn tabulation_follows_vertex_numbers() {
        let dims = MeshDimensions { num_entities: vec![9, 16, 8] };
        let cell = cell_with_vertices([7, 2, 4]);
        let p1 = DofMap::new(&dims, &FiniteElement::lagrange(TRI, 1).unwrap()).unwrap();
        assert_eq!(p1.tabulate_dofs(&cell), vec![7, 2, 4]);
        let v1 = DofMap::new(&dims, &FiniteElement::vector_lagrange(TRI, 1, 2).unwrap()).unwrap();
        assert_eq!(v1.tabulate_dofs(&cell), vec![7, 2, 4, 16, 11, 13]);
        let dg0 = DofMap::new(&dims, &FiniteElement::discontinuous(TRI, 0).unwrap()).unwrap();
        assert_eq!(dg0.tabulate_dofs(&cell), vec![5]);
    }

    #[test]
    fn facet_dofs() {
        let dims = MeshDimensions { num_entities: vec![3, 3, 1] };
        let p1 = DofMap::new(&dims, &FiniteElement::lagrange(TRI, 1).unwrap()).unwrap();
        assert_eq!(p1.tabulate_facet_dofs(0).unwrap(), vec![1, 2]);
        let p2e = FiniteElement::lagrange(TRI, 2).unwrap();
        let p2 = DofMap::new(&dims, &p2e).unwrap();
        let edge0 = p2e.dofs().iter().position(|d| d.entity == (1, 0)).unwrap();
        assert_eq!(p2.tabulate_facet_dofs(0).unwrap(), vec![1, 2, edge0]);
        let dg0 = DofMap::new(&dims, &FiniteElement::discontinuous(TRI, 0).unwrap()).unwrap();
        assert!(dg0.tabulate_facet_dofs(1).unwrap().is_empty());
        assert_eq!(p1.tabulate_facet_dofs(3), Err(DofMapError::FacetOutOfRange { facet: 3, count: 3 }));
    }

    #[test]
    fn sub_maps_partition_parent() {
        let m = unit_square_mesh(2).unwrap();
        let v1 = DofMap::for_mesh(&m, &FiniteElement::vector_lagrange(TRI, 1, 2).unwrap()).unwrap();
        let sub1 = v1.sub_dofmap(1).unwrap();
        assert_eq!(sub1.global_dimension(), v1.component_stride());
        let cell = m.cell_view(3).unwrap();
        let parent = v1.tabulate_dofs(&cell);
        let shifted: Vec<usize> = sub1.tabulate_dofs(&cell).iter().map(|d| d + v1.component_stride()).collect();
        assert_eq!(shifted, parent[3..].to_vec());
        let sub0 = v1.sub_dofmap(0).unwrap();
        assert_eq!(sub0.tabulate_dofs(&cell), parent[..3].to_vec());
        assert_eq!(sub0.sub_dofmap(0), Err(DofMapError::NoSubMaps));
        assert!(matches!(v1.sub_dofmap(2), Err(DofMapError::ComponentOutOfRange { .. })));
    }

    #[test]
    fn shape_mismatch() {
        let m = unit_square_mesh(1).unwrap();
        let e = FiniteElement::lagrange(ReferenceShape::Tetrahedron, 1).unwrap();
        assert!(matches!(DofMap::for_mesh(&m, &e), Err(DofMapError::ShapeMismatch { .. })));
    }
}
