//! Simplicial meshes with deterministic global entity numbering.
//!
//! Every entity of dimension `d` is identified by its sorted vertex tuple and
//! numbered by the lexicographic rank of that tuple. Cells are entities too,
//! so the stored cell order is canonical: permuting the input cell list yields
//! an identical mesh (each cell keeps its own vertex order).

mod io;
mod shape;
mod structured;

use std::collections::HashMap;

use thiserror::Error;

pub use io::{read_mesh, read_mesh_file, write_mesh, write_mesh_file};
pub use shape::ReferenceShape;
pub use structured::{unit_cube_mesh, unit_interval_mesh, unit_square_mesh, KUHN_PERMUTATIONS};

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("cell {cell} has {found} vertices, expected {expected}")]
    CellArity { cell: usize, found: usize, expected: usize },
    #[error("cell {cell} references vertex {vertex}, but the mesh has {num_vertices} vertices")]
    VertexOutOfRange { cell: usize, vertex: usize, num_vertices: usize },
    #[error("cell {cell} repeats vertex {vertex}")]
    RepeatedVertex { cell: usize, vertex: usize },
    #[error("cells {first} and {second} have the same vertices")]
    DuplicateCell { first: usize, second: usize },
    #[error("cell {cell} is degenerate (measure {measure:e})")]
    DegenerateCell { cell: usize, measure: f64 },
    #[error("facet {facet:?} is shared by more than two cells")]
    NonManifold { facet: Vec<usize> },
    #[error("unsupported mesh: {0}")]
    Unsupported(String),
    #[error("cell index {index} out of range ({num_cells} cells)")]
    CellOutOfRange { index: usize, num_cells: usize },
    #[error("facet {0} is on the boundary and has no neighbour")]
    ExteriorFacet(usize),
    #[error("facet index {index} out of range ({num_facets} facets)")]
    FacetOutOfRange { index: usize, num_facets: usize },
    #[error("marker array has length {found}, expected {expected}")]
    MarkerLength { found: usize, expected: usize },
    #[error("structured mesh needs n >= 1")]
    ZeroResolution,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Global entity counts, indexed by topological dimension.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MeshDimensions {
    pub num_entities: Vec<usize>,
}

impl MeshDimensions {
    pub fn tdim(&self) -> usize {
        self.num_entities.len() - 1
    }

    pub fn num_cells(&self) -> usize {
        self.num_entities[self.tdim()]
    }
}

/// A facet on the boundary, seen from its only incident cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExteriorFacet {
    pub facet: usize,
    pub cell: usize,
    pub local_facet: usize,
}

/// A facet shared by two cells; `plus_cell < minus_cell`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InteriorFacet {
    pub facet: usize,
    pub plus_cell: usize,
    pub plus_facet: usize,
    pub minus_cell: usize,
    pub minus_facet: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum FacetClass {
    Exterior(usize),
    Interior(usize),
}

/// Geometry and global numbering of a single cell.
#[derive(Clone, Debug, PartialEq)]
pub struct CellView {
    pub shape: ReferenceShape,
    pub index: usize,
    pub gdim: usize,
    /// Global indices of the cell's dimension-`d` entities in local entity
    /// order. `entity_indices[0]` follows the cell's stored vertex order and
    /// `entity_indices[tdim]` holds the cell's own index.
    pub entity_indices: Vec<Vec<usize>>,
    /// Vertex coordinates, `gdim` reals per local vertex.
    pub coordinates: Vec<f64>,
}

impl CellView {
    /// The reference cell itself, with trivial global numbering.
    pub fn reference(shape: ReferenceShape) -> Self {
        let coordinates = (0..shape.num_vertices()).flat_map(|v| shape.reference_vertex(v)).collect();
        Self::from_coordinates(shape, coordinates)
    }

    /// A stand-alone cell whose entities are numbered locally.
    pub fn from_coordinates(shape: ReferenceShape, coordinates: Vec<f64>) -> Self {
        let gdim = coordinates.len() / shape.num_vertices();
        let entity_indices = (0..=shape.tdim()).map(|d| (0..shape.num_entities(d)).collect()).collect();
        Self { shape, index: 0, gdim, entity_indices, coordinates }
    }

    pub fn tdim(&self) -> usize {
        self.shape.tdim()
    }

    pub fn vertex(&self, i: usize) -> &[f64] {
        &self.coordinates[i * self.gdim..(i + 1) * self.gdim]
    }

    pub fn global_vertices(&self) -> &[usize] {
        &self.entity_indices[0]
    }

    /// Physical image of a reference point under the cell's affine map.
    pub fn push_forward(&self, reference: &[f64]) -> Vec<f64> {
        let x0 = self.vertex(0);
        let mut x = x0.to_vec();
        for (k, &xi) in reference.iter().enumerate() {
            let xk = self.vertex(k + 1);
            for c in 0..self.gdim {
                x[c] += xi * (xk[c] - x0[c]);
            }
        }
        x
    }
}

/// The pair of cells around an interior facet.
#[derive(Clone, Debug, PartialEq)]
pub struct MacroCell {
    pub plus: CellView,
    pub minus: CellView,
    pub plus_facet: usize,
    pub minus_facet: usize,
}

#[derive(Clone, Debug)]
pub struct Mesh {
    shape: ReferenceShape,
    gdim: usize,
    coordinates: Vec<f64>,
    /// Sorted vertex tuples per dimension; empty for `d = 0`.
    entity_vertices: Vec<Vec<usize>>,
    /// Per dimension, `num_cells * shape.num_entities(d)` global indices.
    cell_entities: Vec<Vec<usize>>,
    num_entities: Vec<usize>,
    cell_markers: Vec<usize>,
    facet_markers: Vec<usize>,
    exterior: Vec<ExteriorFacet>,
    interior: Vec<InteriorFacet>,
    facet_class: Vec<FacetClass>,
    input_order: Vec<usize>,
}

impl Mesh {
    /// Builds a mesh from vertex points and cells given as vertex tuples.
    pub fn build(vertices: &[Vec<f64>], cells: &[Vec<usize>]) -> Result<Self, MeshError> {
        let gdim = vertices.first().map(Vec::len).unwrap_or(0);
        if vertices.iter().any(|v| v.len() != gdim) {
            return Err(MeshError::Unsupported("vertices have inconsistent dimensions".into()));
        }
        let coordinates: Vec<f64> = vertices.iter().flatten().copied().collect();
        let nv = cells.first().map(Vec::len).unwrap_or(0);
        let shape = ReferenceShape::from_tdim(nv.saturating_sub(1))
            .ok_or_else(|| MeshError::Unsupported(format!("cells with {nv} vertices")))?;
        let flat: Vec<usize> = cells.iter().flatten().copied().collect();
        for (c, cell) in cells.iter().enumerate() {
            if cell.len() != nv {
                return Err(MeshError::CellArity { cell: c, found: cell.len(), expected: nv });
            }
        }
        Self::from_flat(shape, gdim, coordinates, flat)
    }

    /// Builds a mesh from flat coordinate and connectivity arrays.
    pub fn from_flat(
        shape: ReferenceShape,
        gdim: usize,
        coordinates: Vec<f64>,
        cells: Vec<usize>,
    ) -> Result<Self, MeshError> {
        let tdim = shape.tdim();
        let nv = shape.num_vertices();
        if gdim < tdim {
            return Err(MeshError::Unsupported(format!(
                "geometric dimension {gdim} below topological dimension {tdim}"
            )));
        }
        if cells.is_empty() || !cells.len().is_multiple_of(nv) {
            return Err(MeshError::Unsupported("empty or ragged cell list".into()));
        }
        let num_vertices = coordinates.len() / gdim;
        let num_input = cells.len() / nv;

        let mut keys = Vec::with_capacity(num_input);
        for (c, cell) in cells.chunks(nv).enumerate() {
            for &v in cell {
                if v >= num_vertices {
                    return Err(MeshError::VertexOutOfRange { cell: c, vertex: v, num_vertices });
                }
            }
            let mut key = cell.to_vec();
            key.sort_unstable();
            if let Some(w) = key.windows(2).find(|w| w[0] == w[1]) {
                return Err(MeshError::RepeatedVertex { cell: c, vertex: w[0] });
            }
            let points: Vec<&[f64]> = cell.iter().map(|&v| &coordinates[v * gdim..(v + 1) * gdim]).collect();
            let measure = simplex_measure(&points);
            let scale = points[1..].iter().map(|p| distance(p, points[0])).fold(0.0, f64::max);
            if measure.is_nan() || measure <= 1e-14 * scale.powi(tdim as i32) {
                return Err(MeshError::DegenerateCell { cell: c, measure });
            }
            keys.push(key);
        }

        let mut input_order: Vec<usize> = (0..num_input).collect();
        input_order.sort_by(|&a, &b| keys[a].cmp(&keys[b]));
        for w in input_order.windows(2) {
            if keys[w[0]] == keys[w[1]] {
                return Err(MeshError::DuplicateCell { first: w[0].min(w[1]), second: w[0].max(w[1]) });
            }
        }
        let ordered_cells: Vec<usize> =
            input_order.iter().flat_map(|&c| cells[c * nv..(c + 1) * nv].iter().copied()).collect();
        let num_cells = num_input;

        let mut entity_vertices = vec![Vec::new(); tdim + 1];
        let mut cell_entities = vec![Vec::new(); tdim + 1];
        let mut num_entities = vec![0; tdim + 1];
        num_entities[0] = num_vertices;
        cell_entities[0] = ordered_cells.clone();
        for d in 1..=tdim {
            let local = shape.entity_vertices(d);
            let mut tuples: Vec<Vec<usize>> = Vec::with_capacity(num_cells * local.len());
            for cell in ordered_cells.chunks(nv) {
                for ent in local {
                    let mut t: Vec<usize> = ent.iter().map(|&l| cell[l]).collect();
                    t.sort_unstable();
                    tuples.push(t);
                }
            }
            let mut unique = tuples.clone();
            unique.sort_unstable();
            unique.dedup();
            let rank: HashMap<&[usize], usize> = unique.iter().enumerate().map(|(i, t)| (t.as_slice(), i)).collect();
            cell_entities[d] = tuples.iter().map(|t| rank[t.as_slice()]).collect();
            num_entities[d] = unique.len();
            entity_vertices[d] = unique.into_iter().flatten().collect();
        }

        let fd = tdim - 1;
        let num_facets = num_entities[fd];
        let mut incident: Vec<Vec<(usize, usize)>> = vec![Vec::new(); num_facets];
        for cell in 0..num_cells {
            for lf in 0..shape.num_facets() {
                let ent = shape.facet_entity(lf);
                let f = cell_entities[fd][cell * shape.num_entities(fd) + ent];
                incident[f].push((cell, lf));
            }
        }
        let mut exterior = Vec::new();
        let mut interior = Vec::new();
        let mut facet_class = Vec::with_capacity(num_facets);
        for (f, inc) in incident.iter().enumerate() {
            match inc.as_slice() {
                [(cell, lf)] => {
                    facet_class.push(FacetClass::Exterior(exterior.len()));
                    exterior.push(ExteriorFacet { facet: f, cell: *cell, local_facet: *lf });
                }
                [a, b] => {
                    let (p, m) = if a.0 < b.0 { (a, b) } else { (b, a) };
                    facet_class.push(FacetClass::Interior(interior.len()));
                    interior.push(InteriorFacet {
                        facet: f,
                        plus_cell: p.0,
                        plus_facet: p.1,
                        minus_cell: m.0,
                        minus_facet: m.1,
                    });
                }
                _ => {
                    let verts = if fd == 0 { vec![f] } else { entity_vertices[fd][f * tdim..(f + 1) * tdim].to_vec() };
                    return Err(MeshError::NonManifold { facet: verts });
                }
            }
        }

        Ok(Self {
            shape,
            gdim,
            coordinates,
            entity_vertices,
            cell_entities,
            num_entities,
            cell_markers: vec![0; num_cells],
            facet_markers: vec![0; num_facets],
            exterior,
            interior,
            facet_class,
            input_order,
        })
    }

    pub fn shape(&self) -> ReferenceShape {
        self.shape
    }

    pub fn tdim(&self) -> usize {
        self.shape.tdim()
    }

    pub fn gdim(&self) -> usize {
        self.gdim
    }

    pub fn num_vertices(&self) -> usize {
        self.num_entities[0]
    }

    pub fn num_cells(&self) -> usize {
        self.num_entities[self.tdim()]
    }

    pub fn num_facets(&self) -> usize {
        self.num_entities[self.tdim() - 1]
    }

    pub fn num_entities(&self, d: usize) -> usize {
        self.num_entities[d]
    }

    pub fn dimensions(&self) -> MeshDimensions {
        MeshDimensions { num_entities: self.num_entities.clone() }
    }

    pub fn vertex(&self, v: usize) -> &[f64] {
        &self.coordinates[v * self.gdim..(v + 1) * self.gdim]
    }

    pub fn coordinates(&self) -> &[f64] {
        &self.coordinates
    }

    /// Vertices of cell `c` in stored order.
    pub fn cell_vertices(&self, c: usize) -> &[usize] {
        let nv = self.shape.num_vertices();
        &self.cell_entities[0][c * nv..(c + 1) * nv]
    }

    /// Global indices of the dimension-`d` entities of cell `c`.
    pub fn cell_entities(&self, c: usize, d: usize) -> &[usize] {
        let n = self.shape.num_entities(d);
        &self.cell_entities[d][c * n..(c + 1) * n]
    }

    /// Sorted vertex tuple of global entity `e` of dimension `d`.
    pub fn entity_vertices(&self, d: usize, e: usize) -> Vec<usize> {
        if d == 0 {
            vec![e]
        } else {
            self.entity_vertices[d][e * (d + 1)..(e + 1) * (d + 1)].to_vec()
        }
    }

    /// Global index of the entity with the given (unsorted) vertex tuple.
    pub fn find_entity(&self, vertices: &[usize]) -> Option<usize> {
        let d = vertices.len().checked_sub(1)?;
        if d > self.tdim() {
            return None;
        }
        let mut key = vertices.to_vec();
        key.sort_unstable();
        if d == 0 {
            return (key[0] < self.num_vertices()).then_some(key[0]);
        }
        let table = &self.entity_vertices[d];
        let n = self.num_entities[d];
        let (mut lo, mut hi) = (0, n);
        while lo < hi {
            let mid = (lo + hi) / 2;
            match table[mid * (d + 1)..(mid + 1) * (d + 1)].cmp(key.as_slice()) {
                std::cmp::Ordering::Less => lo = mid + 1,
                std::cmp::Ordering::Greater => hi = mid,
                std::cmp::Ordering::Equal => return Some(mid),
            }
        }
        None
    }

    /// Position of mesh cell `c` in the cell list the mesh was built from.
    pub fn input_cell_index(&self, c: usize) -> usize {
        self.input_order[c]
    }

    pub fn exterior_facets(&self) -> &[ExteriorFacet] {
        &self.exterior
    }

    pub fn interior_facets(&self) -> &[InteriorFacet] {
        &self.interior
    }

    pub fn is_exterior_facet(&self, facet: usize) -> bool {
        matches!(self.facet_class.get(facet), Some(FacetClass::Exterior(_)))
    }

    pub fn cell_markers(&self) -> &[usize] {
        &self.cell_markers
    }

    pub fn cell_marker(&self, c: usize) -> usize {
        self.cell_markers[c]
    }

    /// Sets markers indexed by mesh cell order.
    pub fn set_cell_markers(&mut self, markers: Vec<usize>) -> Result<(), MeshError> {
        if markers.len() != self.num_cells() {
            return Err(MeshError::MarkerLength { found: markers.len(), expected: self.num_cells() });
        }
        self.cell_markers = markers;
        Ok(())
    }

    /// Sets markers indexed by the order of the cell list given to [`Mesh::build`].
    pub fn set_input_cell_markers(&mut self, markers: &[usize]) -> Result<(), MeshError> {
        if markers.len() != self.num_cells() {
            return Err(MeshError::MarkerLength { found: markers.len(), expected: self.num_cells() });
        }
        self.cell_markers = self.input_order.iter().map(|&i| markers[i]).collect();
        Ok(())
    }

    /// Marker of global facet `f`; interior and exterior facets share one array.
    pub fn facet_marker(&self, f: usize) -> usize {
        self.facet_markers[f]
    }

    pub fn facet_markers(&self) -> &[usize] {
        &self.facet_markers
    }

    pub fn set_facet_marker(&mut self, facet: usize, marker: usize) -> Result<(), MeshError> {
        let n = self.num_facets();
        let slot =
            self.facet_markers.get_mut(facet).ok_or(MeshError::FacetOutOfRange { index: facet, num_facets: n })?;
        *slot = marker;
        Ok(())
    }

    /// Marks every exterior facet for which `f(midpoint)` returns a marker.
    pub fn mark_exterior_facets(&mut self, f: impl Fn(&[f64]) -> Option<usize>) {
        let fd = self.tdim() - 1;
        for i in 0..self.exterior.len() {
            let facet = self.exterior[i].facet;
            let verts = self.entity_vertices(fd, facet);
            let mut mid = vec![0.0; self.gdim];
            for &v in &verts {
                for (m, x) in mid.iter_mut().zip(self.vertex(v)) {
                    *m += x / verts.len() as f64;
                }
            }
            if let Some(k) = f(&mid) {
                self.facet_markers[facet] = k;
            }
        }
    }

    pub fn cell_view(&self, c: usize) -> Result<CellView, MeshError> {
        if c >= self.num_cells() {
            return Err(MeshError::CellOutOfRange { index: c, num_cells: self.num_cells() });
        }
        let tdim = self.tdim();
        let mut entity_indices: Vec<Vec<usize>> = (0..tdim).map(|d| self.cell_entities(c, d).to_vec()).collect();
        entity_indices.push(vec![c]);
        let coordinates = self.cell_vertices(c).iter().flat_map(|&v| self.vertex(v).iter().copied()).collect();
        Ok(CellView { shape: self.shape, index: c, gdim: self.gdim, entity_indices, coordinates })
    }

    /// Both cells around global facet `facet`, `plus` having the lower index.
    pub fn macro_cell_view(&self, facet: usize) -> Result<MacroCell, MeshError> {
        match self.facet_class.get(facet) {
            None => Err(MeshError::FacetOutOfRange { index: facet, num_facets: self.num_facets() }),
            Some(FacetClass::Exterior(_)) => Err(MeshError::ExteriorFacet(facet)),
            Some(FacetClass::Interior(i)) => {
                let f = self.interior[*i];
                Ok(MacroCell {
                    plus: self.cell_view(f.plus_cell)?,
                    minus: self.cell_view(f.minus_cell)?,
                    plus_facet: f.plus_facet,
                    minus_facet: f.minus_facet,
                })
            }
        }
    }

    /// Sorted global vertices of local facet `local_facet` of cell `c`.
    pub fn facet_global_vertices(&self, c: usize, local_facet: usize) -> Vec<usize> {
        let cell = self.cell_vertices(c);
        let mut v: Vec<usize> = self.shape.facet_vertices(local_facet).iter().map(|&l| cell[l]).collect();
        v.sort_unstable();
        v
    }

    /// Unsigned measure of cell `c`.
    pub fn cell_volume(&self, c: usize) -> f64 {
        let points: Vec<&[f64]> = self.cell_vertices(c).iter().map(|&v| self.vertex(v)).collect();
        simplex_measure(&points)
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Unsigned `k`-dimensional measure of the simplex spanned by `k + 1` points,
/// from the Gram determinant of its edge vectors.
pub fn simplex_measure(points: &[&[f64]]) -> f64 {
    let k = points.len() - 1;
    if k == 0 {
        return 1.0;
    }
    let edges: Vec<Vec<f64>> =
        points[1..].iter().map(|p| p.iter().zip(points[0]).map(|(a, b)| a - b).collect()).collect();
    let mut gram = [0.0; 9];
    for i in 0..k {
        for j in 0..k {
            gram[i * k + j] = edges[i].iter().zip(&edges[j]).map(|(a, b)| a * b).sum();
        }
    }
    let det = match k {
        1 => gram[0],
        2 => gram[0] * gram[3] - gram[1] * gram[2],
        3 => {
            gram[0] * (gram[4] * gram[8] - gram[5] * gram[7]) - gram[1] * (gram[3] * gram[8] - gram[5] * gram[6])
                + gram[2] * (gram[3] * gram[7] - gram[4] * gram[6])
        }
        _ => unreachable!("simplices up to dimension 3"),
    };
    let factorial = (1..=k).product::<usize>() as f64;
    det.max(0.0).sqrt() / factorial
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_triangles() -> Mesh {
        Mesh::build(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]], &[vec![0, 1, 2], vec![1, 3, 2]])
            .unwrap()
    }

    #[test]
    fn single_triangle_counts() {
        let m = Mesh::build(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]], &[vec![0, 1, 2]]).unwrap();
        assert_eq!(m.dimensions().num_entities, vec![3, 3, 1]);
        assert_eq!(m.exterior_facets().len(), 3);
        assert!(m.interior_facets().is_empty());
    }

    #[test]
    fn shared_edge_is_the_only_interior_facet() {
        let m = two_triangles();
        assert_eq!(m.num_facets(), 5);
        assert_eq!(m.exterior_facets().len(), 4);
        let f = m.interior_facets()[0];
        assert_eq!(f.plus_cell, 0);
        assert_eq!(m.entity_vertices(1, f.facet), vec![1, 2]);
    }

    #[test]
    fn rejects_bad_cells() {
        let v = [vec![0.0, 0.0], vec![1.0, 0.0], vec![2.0, 0.0], vec![0.0, 1.0]];
        assert!(matches!(Mesh::build(&v, &[vec![0, 1, 2]]), Err(MeshError::DegenerateCell { .. })));
        assert!(matches!(Mesh::build(&v, &[vec![0, 1, 3], vec![3, 1, 0]]), Err(MeshError::DuplicateCell { .. })));
        assert!(matches!(Mesh::build(&v, &[vec![0, 1, 7]]), Err(MeshError::VertexOutOfRange { .. })));
        assert!(matches!(Mesh::build(&v, &[vec![0, 1, 1]]), Err(MeshError::RepeatedVertex { .. })));
    }

    #[test]
    fn cell_order_is_canonical() {
        let a = two_triangles();
        let b = Mesh::build(
            &[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]],
            &[vec![1, 3, 2], vec![0, 1, 2]],
        )
        .unwrap();
        for c in 0..2 {
            assert_eq!(a.cell_view(c).unwrap(), b.cell_view(c).unwrap());
        }
        assert_eq!(b.input_cell_index(0), 1);
    }

    #[test]
    fn macro_cell_rejects_exterior_facets() {
        let m = two_triangles();
        let ext = m.exterior_facets()[0].facet;
        assert!(matches!(m.macro_cell_view(ext), Err(MeshError::ExteriorFacet(_))));
        let mc = m.macro_cell_view(m.interior_facets()[0].facet).unwrap();
        assert_eq!(
            m.facet_global_vertices(mc.plus.index, mc.plus_facet),
            m.facet_global_vertices(mc.minus.index, mc.minus_facet)
        );
    }

    #[test]
    fn cell_view_self_index_and_range() {
        let m = two_triangles();
        let v = m.cell_view(1).unwrap();
        assert_eq!(v.entity_indices[2], vec![1]);
        assert!(matches!(m.cell_view(2), Err(MeshError::CellOutOfRange { .. })));
    }

    #[test]
    fn input_markers_follow_cells() {
        let mut m = Mesh::build(
            &[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]],
            &[vec![1, 3, 2], vec![0, 1, 2]],
        )
        .unwrap();
        m.set_input_cell_markers(&[5, 7]).unwrap();
        assert_eq!(m.cell_markers(), &[7, 5]);
    }
}
