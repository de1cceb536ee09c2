use crate::mesh::{simplex_measure, CellView};

use super::KernelError;

/// Affine map from the reference cell onto a physical cell.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineMap {
    pub tdim: usize,
    /// `j[r * tdim + k]`: derivative of physical coordinate `r` along reference axis `k`.
    pub j: Vec<f64>,
    pub det: f64,
    /// `jinv[k * gdim + r]`, the inverse of `j`.
    pub jinv: Vec<f64>,
    /// `|det|`
    pub scale: f64,
}

impl AffineMap {
    pub fn new(cell: &CellView) -> Result<Self, KernelError> {
        let tdim = cell.tdim();
        if cell.gdim != tdim {
            return Err(KernelError::Dimension { tdim, gdim: cell.gdim });
        }
        let x = |v: usize, r: usize| cell.coordinates[v * tdim + r];
        let mut j = vec![0.0; tdim * tdim];
        for r in 0..tdim {
            for k in 0..tdim {
                j[r * tdim + k] = x(k + 1, r) - x(0, r);
            }
        }
        let (det, jinv) = match tdim {
            1 => (j[0], vec![1.0 / j[0]]),
            2 => {
                let det = j[0] * j[3] - j[1] * j[2];
                (det, vec![j[3] / det, -j[1] / det, -j[2] / det, j[0] / det])
            }
            3 => {
                let m = |r: usize, c: usize| j[r * 3 + c];
                let cof = [
                    m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1),
                    m(1, 2) * m(2, 0) - m(1, 0) * m(2, 2),
                    m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0),
                    m(0, 2) * m(2, 1) - m(0, 1) * m(2, 2),
                    m(0, 0) * m(2, 2) - m(0, 2) * m(2, 0),
                    m(0, 1) * m(2, 0) - m(0, 0) * m(2, 1),
                    m(0, 1) * m(1, 2) - m(0, 2) * m(1, 1),
                    m(0, 2) * m(1, 0) - m(0, 0) * m(1, 2),
                    m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0),
                ];
                let det = m(0, 0) * cof[0] + m(0, 1) * cof[1] + m(0, 2) * cof[2];
                // inverse = adjugate / det, adjugate = cofactor transpose
                let mut inv = vec![0.0; 9];
                for r in 0..3 {
                    for c in 0..3 {
                        inv[c * 3 + r] = cof[r * 3 + c] / det;
                    }
                }
                (det, inv)
            }
            _ => unreachable!("cells have dimension 1 to 3"),
        };
        let coordinate_scale = j.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if det.is_nan() || det.abs() < 1e-14 * coordinate_scale.powi(tdim as i32) || coordinate_scale == 0.0 {
            return Err(KernelError::DegenerateCell { index: cell.index, det });
        }
        Ok(Self { tdim, j, det, jinv, scale: det.abs() })
    }

    pub fn gdim(&self) -> usize {
        self.tdim
    }

    pub fn jinv(&self, k: usize, r: usize) -> f64 {
        self.jinv[k * self.tdim + r]
    }
}

/// Physical facet measure divided by the reference facet measure.
pub fn facet_scale(cell: &CellView, local_facet: usize) -> f64 {
    let shape = cell.shape;
    let Some(facet_shape) = shape.facet_shape() else { return 1.0 };
    let points: Vec<&[f64]> = shape.facet_vertices(local_facet).iter().map(|&v| cell.vertex(v)).collect();
    simplex_measure(&points) / facet_shape.reference_volume()
}

/// Local vertices of `local_facet`, ordered by ascending global vertex.
/// Both cells sharing a facet list its vertices in the same physical order.
pub fn aligned_facet_vertices(cell: &CellView, local_facet: usize) -> Vec<usize> {
    let mut v = cell.shape.facet_vertices(local_facet);
    v.sort_by_key(|&l| cell.entity_indices[0][l]);
    v
}

/// Maps a point of the reference facet onto the reference cell through the
/// facet's vertices in the given order.
pub fn facet_point_to_cell(cell: &CellView, facet_vertices: &[usize], s: &[f64]) -> Vec<f64> {
    let shape = cell.shape;
    let mut x = shape.reference_vertex(facet_vertices[0]);
    let first = x.clone();
    for (k, &sk) in s.iter().enumerate() {
        let vk = shape.reference_vertex(facet_vertices[k + 1]);
        for (xi, (a, b)) in x.iter_mut().zip(vk.iter().zip(&first)) {
            *xi += sk * (a - b);
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::ReferenceShape;

    fn tri(c: [f64; 6]) -> CellView {
        CellView::from_coordinates(ReferenceShape::Triangle, c.to_vec())
    }

    #[test]
    fn triangle_maps() {
        let m = AffineMap::new(&CellView::reference(ReferenceShape::Triangle)).unwrap();
        assert_eq!((m.j.clone(), m.det), (vec![1.0, 0.0, 0.0, 1.0], 1.0));
        let m = AffineMap::new(&tri([0.0, 0.0, 2.0, 0.0, 0.0, 2.0])).unwrap();
        assert_eq!((m.det, m.scale), (4.0, 4.0));
        let m = AffineMap::new(&tri([0.0, 0.0, 0.0, 1.0, 1.0, 0.0])).unwrap();
        assert_eq!((m.det, m.scale), (-1.0, 1.0));
        assert!(matches!(
            AffineMap::new(&tri([0.0, 0.0, 1.0, 1.0, 2.0, 2.0])),
            Err(KernelError::DegenerateCell { .. })
        ));
    }

    #[test]
    fn tetrahedron_inverse() {
        let cell = CellView::from_coordinates(
            ReferenceShape::Tetrahedron,
            vec![0.1, 0.2, 0.0, 1.3, 0.1, 0.2, 0.2, 0.9, -0.1, 0.3, 0.4, 1.7],
        );
        let m = AffineMap::new(&cell).unwrap();
        for r in 0..3 {
            for c in 0..3 {
                let v: f64 = (0..3).map(|k| m.j[r * 3 + k] * m.jinv[k * 3 + c]).sum();
                assert!((v - f64::from(u8::from(r == c))).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn facet_scales() {
        let cell = tri([0.0, 0.0, 2.0, 0.0, 0.0, 2.0]);
        assert!((facet_scale(&cell, 0) - 8f64.sqrt()).abs() < 1e-14);
        assert!((facet_scale(&cell, 1) - 2.0).abs() < 1e-14);
        let tet = CellView::reference(ReferenceShape::Tetrahedron);
        assert!((facet_scale(&tet, 3) - 1.0).abs() < 1e-14);
    }
}
