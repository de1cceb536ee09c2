use std::fmt;
use std::str::FromStr;

/// Reference simplex a cell is mapped from.
///
/// Vertex `i` of the reference cell is the origin for `i = 0` and the unit
/// vector `e_{i-1}` otherwise. Local facet `i` is the sub-simplex opposite
/// local vertex `i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ReferenceShape {
    Interval,
    Triangle,
    Tetrahedron,
}

const INTERVAL_ENTITIES: [&[&[usize]]; 2] = [&[&[0], &[1]], &[&[0, 1]]];

const TRIANGLE_ENTITIES: [&[&[usize]]; 3] = [&[&[0], &[1], &[2]], &[&[1, 2], &[0, 2], &[0, 1]], &[&[0, 1, 2]]];

const TETRAHEDRON_ENTITIES: [&[&[usize]]; 4] = [
    &[&[0], &[1], &[2], &[3]],
    &[&[0, 1], &[0, 2], &[0, 3], &[1, 2], &[1, 3], &[2, 3]],
    &[&[1, 2, 3], &[0, 2, 3], &[0, 1, 3], &[0, 1, 2]],
    &[&[0, 1, 2, 3]],
];

impl ReferenceShape {
    pub fn from_tdim(tdim: usize) -> Option<Self> {
        match tdim {
            1 => Some(Self::Interval),
            2 => Some(Self::Triangle),
            3 => Some(Self::Tetrahedron),
            _ => None,
        }
    }

    pub fn tdim(self) -> usize {
        match self {
            Self::Interval => 1,
            Self::Triangle => 2,
            Self::Tetrahedron => 3,
        }
    }

    pub fn num_vertices(self) -> usize {
        self.tdim() + 1
    }

    pub fn num_facets(self) -> usize {
        self.tdim() + 1
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Interval => "interval",
            Self::Triangle => "triangle",
            Self::Tetrahedron => "tetrahedron",
        }
    }

    /// Local vertex tuples of all dimension-`d` entities, in local entity order.
    ///
    /// Triangle edges and tetrahedron faces follow the opposite-vertex rule;
    /// tetrahedron edges are ordered by sorted local vertex pairs.
    pub fn entity_vertices(self, d: usize) -> &'static [&'static [usize]] {
        match self {
            Self::Interval => INTERVAL_ENTITIES[d],
            Self::Triangle => TRIANGLE_ENTITIES[d],
            Self::Tetrahedron => TETRAHEDRON_ENTITIES[d],
        }
    }

    pub fn num_entities(self, d: usize) -> usize {
        self.entity_vertices(d).len()
    }

    /// Local vertices of facet `i`: every vertex except `i`, ascending.
    pub fn facet_vertices(self, facet: usize) -> Vec<usize> {
        (0..self.num_vertices()).filter(|&v| v != facet).collect()
    }

    /// Index of local facet `facet` among the dimension `tdim - 1` entities.
    ///
    /// Coincides with `facet` except on intervals, where facet `i` is vertex `1 - i`.
    pub fn facet_entity(self, facet: usize) -> usize {
        let verts = self.facet_vertices(facet);
        self.entity_vertices(self.tdim() - 1)
            .iter()
            .position(|e| *e == verts.as_slice())
            .expect("every facet is a local entity")
    }

    pub fn facet_shape(self) -> Option<ReferenceShape> {
        Self::from_tdim(self.tdim() - 1)
    }

    /// Reference vertex coordinates, `tdim` reals each.
    pub fn reference_vertex(self, i: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.tdim()];
        if i > 0 {
            x[i - 1] = 1.0;
        }
        x
    }

    /// Volume of the reference cell: 1, 1/2, 1/6.
    pub fn reference_volume(self) -> f64 {
        match self {
            Self::Interval => 1.0,
            Self::Triangle => 0.5,
            Self::Tetrahedron => 1.0 / 6.0,
        }
    }

    pub fn contains(self, point: &[f64], tol: f64) -> bool {
        point.iter().all(|&x| x >= -tol) && point.iter().sum::<f64>() <= 1.0 + tol
    }
}

impl fmt::Display for ReferenceShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ReferenceShape {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "interval" => Ok(Self::Interval),
            "triangle" => Ok(Self::Triangle),
            "tetrahedron" => Ok(Self::Tetrahedron),
            other => Err(format!("unknown cell shape '{other}'")),
        }
    }
}
