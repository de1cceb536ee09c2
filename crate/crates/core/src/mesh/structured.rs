use super::{Mesh, MeshError, ReferenceShape};

/// Axis orderings of the Kuhn split. Tetrahedron `p` of a sub-cube walks from
/// the lower corner along axes `p[0]`, `p[1]`, `p[2]` to the upper corner.
pub const KUHN_PERMUTATIONS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

/// `n` equal cells on `[0, 1]`.
pub fn unit_interval_mesh(n: usize) -> Result<Mesh, MeshError> {
    if n == 0 {
        return Err(MeshError::ZeroResolution);
    }
    let coords = (0..=n).map(|i| i as f64 / n as f64).collect();
    let cells = (0..n).flat_map(|i| [i, i + 1]).collect();
    Mesh::from_flat(ReferenceShape::Interval, 1, coords, cells)
}

/// `n x n` squares on `[0, 1]^2`, each split along the diagonal from its
/// lower-left to its upper-right corner.
pub fn unit_square_mesh(n: usize) -> Result<Mesh, MeshError> {
    if n == 0 {
        return Err(MeshError::ZeroResolution);
    }
    let h = n as f64;
    let mut coords = Vec::with_capacity(2 * (n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            coords.extend([i as f64 / h, j as f64 / h]);
        }
    }
    let v = |i: usize, j: usize| j * (n + 1) + i;
    let mut cells = Vec::with_capacity(6 * n * n);
    for j in 0..n {
        for i in 0..n {
            cells.extend([v(i, j), v(i + 1, j), v(i + 1, j + 1)]);
            cells.extend([v(i, j), v(i + 1, j + 1), v(i, j + 1)]);
        }
    }
    Mesh::from_flat(ReferenceShape::Triangle, 2, coords, cells)
}

/// `n^3` sub-cubes on `[0, 1]^3`, each split into six tetrahedra sharing the
/// main diagonal (see [`KUHN_PERMUTATIONS`]).
pub fn unit_cube_mesh(n: usize) -> Result<Mesh, MeshError> {
    if n == 0 {
        return Err(MeshError::ZeroResolution);
    }
    let h = n as f64;
    let mut coords = Vec::with_capacity(3 * (n + 1).pow(3));
    for k in 0..=n {
        for j in 0..=n {
            for i in 0..=n {
                coords.extend([i as f64 / h, j as f64 / h, k as f64 / h]);
            }
        }
    }
    let v = |p: [usize; 3]| (p[2] * (n + 1) + p[1]) * (n + 1) + p[0];
    let mut cells = Vec::with_capacity(24 * n * n * n);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                for perm in KUHN_PERMUTATIONS {
                    let mut p = [i, j, k];
                    cells.push(v(p));
                    for axis in perm {
                        p[axis] += 1;
                        cells.push(v(p));
                    }
                }
            }
        }
    }
    Mesh::from_flat(ReferenceShape::Tetrahedron, 3, coords, cells)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_counts() {
        let m = unit_interval_mesh(4).unwrap();
        assert_eq!((m.num_vertices(), m.num_cells()), (5, 4));
        assert_eq!(m.interior_facets().len(), 3);
    }

    #[test]
    fn square_counts() {
        let m = unit_square_mesh(1).unwrap();
        assert_eq!((m.num_vertices(), m.num_cells(), m.interior_facets().len()), (4, 2, 1));
        let m = unit_square_mesh(2).unwrap();
        assert_eq!(m.dimensions().num_entities, vec![9, 16, 8]);
        assert_eq!(m.interior_facets().len(), 8);
    }

    #[test]
    fn square_areas_sum_to_one() {
        let m = unit_square_mesh(8).unwrap();
        let total: f64 = (0..m.num_cells()).map(|c| m.cell_volume(c)).sum();
        assert!((total - 1.0).abs() < 1e-14);
    }

    #[test]
    fn cube_counts_and_volume() {
        let m = unit_cube_mesh(1).unwrap();
        // 12 cube edges, 6 face diagonals, 1 body diagonal
        assert_eq!(m.dimensions().num_entities, vec![8, 19, 18, 6]);
        assert_eq!(m.exterior_facets().len(), 12);
        let m = unit_cube_mesh(3).unwrap();
        let total: f64 = (0..m.num_cells()).map(|c| m.cell_volume(c)).sum();
        assert!((total - 1.0).abs() < 1e-13);
        let f = m.num_facets();
        assert_eq!(m.exterior_facets().len() + m.interior_facets().len(), f);
        // Euler characteristic of a ball
        let e = m.dimensions().num_entities;
        assert_eq!(e[0] as i64 - e[1] as i64 + e[2] as i64 - e[3] as i64, 1);
    }

    #[test]
    fn zero_resolution_is_an_error() {
        assert!(matches!(unit_interval_mesh(0), Err(MeshError::ZeroResolution)));
        assert!(matches!(unit_square_mesh(0), Err(MeshError::ZeroResolution)));
        assert!(matches!(unit_cube_mesh(0), Err(MeshError::ZeroResolution)));
    }
}
