use crate::mesh::ReferenceShape;

/// Points and weights on a reference simplex.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    /// `None` for the single point of a vertex facet.
    pub shape: Option<ReferenceShape>,
    pub degree: usize,
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// The one-point rule on a vertex.
    pub fn point() -> Self {
        Self { shape: None, degree: usize::MAX, points: vec![vec![]], weights: vec![1.0] }
    }

    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(p, w)| w * f(p)).sum()
    }
}

/// `n`-point Gauss-Legendre rule on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "at least one point");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = 0.5 * (1.0 - z);
        x[n - 1 - i] = 0.5 * (1.0 + z);
        w[i] = 0.5 * wi;
        w[n - 1 - i] = 0.5 * wi;
    }
    (x, w)
}

fn points_for(degree: usize) -> usize {
    (degree + 2) / 2
}

/// A rule on `shape` exact for polynomials of total degree `degree`.
///
/// Triangles and tetrahedra use Gauss-Legendre products under the collapsed
/// map `x = u, y = v (1 - u), z = w (1 - u) (1 - v)`.
pub fn quadrature_rule(shape: ReferenceShape, degree: usize) -> QuadratureRule {
    let mut points = Vec::new();
    let mut weights = Vec::new();
    match shape {
        ReferenceShape::Interval => {
            let (x, w) = gauss_legendre(points_for(degree));
            points = x.into_iter().map(|p| vec![p]).collect();
            weights = w;
        }
        ReferenceShape::Triangle => {
            let (u, wu) = gauss_legendre(points_for(degree + 1));
            let (v, wv) = gauss_legendre(points_for(degree));
            for (a, wa) in u.iter().zip(&wu) {
                for (b, wb) in v.iter().zip(&wv) {
                    points.push(vec![*a, b * (1.0 - a)]);
                    weights.push(wa * wb * (1.0 - a));
                }
            }
        }
        ReferenceShape::Tetrahedron => {
            let (u, wu) = gauss_legendre(points_for(degree + 2));
            let (v, wv) = gauss_legendre(points_for(degree + 1));
            let (t, wt) = gauss_legendre(points_for(degree));
            for (a, wa) in u.iter().zip(&wu) {
                for (b, wb) in v.iter().zip(&wv) {
                    for (c, wc) in t.iter().zip(&wt) {
                        points.push(vec![*a, b * (1.0 - a), c * (1.0 - a) * (1.0 - b)]);
                        weights.push(wa * wb * wc * (1.0 - a) * (1.0 - a) * (1.0 - b));
                    }
                }
            }
        }
    }
    QuadratureRule { shape: Some(shape), degree, points, weights }
}

/// A rule on the facets of `shape`.
pub fn facet_quadrature_rule(shape: ReferenceShape, degree: usize) -> QuadratureRule {
    match shape.facet_shape() {
        Some(f) => quadrature_rule(f, degree),
        None => QuadratureRule::point(),
    }
}

/// Exact integral of `x^a y^b z^c` over the reference simplex of dimension
/// `exponents.len()`: `a! b! c! / (a + b + c + d)!`.
pub fn monomial_integral(exponents: &[u32]) -> f64 {
    let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
    let num: f64 = exponents.iter().map(|&e| fact(e)).product();
    let total: u32 = exponents.iter().sum::<u32>() + exponents.len() as u32;
    num / fact(total)
}

/// All exponent tuples of total degree at most `degree` in `dim` variables.
pub fn monomial_exponents(dim: usize, degree: u32) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|e: Vec<u32>| {
                let used: u32 = e.iter().sum();
                (0..=degree - used).map(move |k| {
                    let mut f = e.clone();
                    f.push(k);
                    f
                })
            })
            .collect();
    }
    out
}
