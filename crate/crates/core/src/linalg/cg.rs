use super::{Csr, LinalgError};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CgStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Unit rows (a single diagonal entry equal to one) mark constrained dofs.
fn is_unit_row(a: &Csr, i: usize) -> bool {
    let (cols, vals) = a.row(i);
    let mut diag = false;
    for (&j, &v) in cols.iter().zip(vals) {
        if j == i && v == 1.0 {
            diag = true;
        } else if v != 0.0 {
            return false;
        }
    }
    diag
}

/// Conjugate gradients from a zero start, except that dofs whose matrix row is
/// the unit row start at their right-hand-side value. With that start the
/// iteration never touches constrained dofs, so row-replaced Dirichlet systems
/// are solved as the symmetric system on the free dofs.
pub fn cg_solve(a: &Csr, b: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, CgStats), LinalgError> {
    if a.nrows != a.ncols || b.len() != a.nrows {
        return Err(LinalgError::Dimension(format!(
            "matrix {}x{} with right-hand side of length {}",
            a.nrows,
            a.ncols,
            b.len()
        )));
    }
    let x0: Vec<f64> = (0..a.nrows).map(|i| if is_unit_row(a, i) { b[i] } else { 0.0 }).collect();
    cg_solve_with_guess(a, b, x0, tol, max_iter)
}

pub fn cg_solve_with_guess(
    a: &Csr,
    b: &[f64],
    mut x: Vec<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, CgStats), LinalgError> {
    let n = b.len();
    if a.nrows != n || a.ncols != n || x.len() != n {
        return Err(LinalgError::Dimension(format!(
            "matrix {}x{}, right-hand side {}, initial guess {}",
            a.nrows,
            a.ncols,
            n,
            x.len()
        )));
    }
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        return Ok((vec![0.0; n], CgStats { iterations: 0, relative_residual: 0.0 }));
    }
    let mut r = vec![0.0; n];
    a.matvec(&x, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rr = dot(&r, &r);
    let mut iterations = 0;
    while rr.sqrt() / bnorm > tol {
        if iterations == max_iter {
            return Err(LinalgError::NotConverged { iterations, residual: rr.sqrt() / bnorm });
        }
        a.matvec(&p, &mut ap);
        let alpha = rr / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_new;
        iterations += 1;
    }
    Ok((x, CgStats { iterations, relative_residual: rr.sqrt() / bnorm }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_needs_no_iterations() {
        let (x, stats) = cg_solve(&Csr::identity(3), &[1.0, -2.0, 3.0], 1e-12, 10).unwrap();
        assert_eq!(x, vec![1.0, -2.0, 3.0]);
        assert!(stats.iterations <= 1);
    }

    #[test]
    fn tridiagonal_by_hand() {
        let a = Csr::from_dense(&[vec![2.0, -1.0, 0.0], vec![-1.0, 2.0, -1.0], vec![0.0, -1.0, 2.0]]);
        let (x, _) = cg_solve(&a, &[1.0, 1.0, 1.0], 1e-14, 10).unwrap();
        for (xi, e) in x.iter().zip([1.5, 2.0, 1.5]) {
            assert!((xi - e).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_rhs_and_errors() {
        let a = Csr::identity(2);
        assert_eq!(cg_solve(&a, &[0.0, 0.0], 1e-10, 5).unwrap().0, vec![0.0, 0.0]);
        assert!(matches!(cg_solve(&a, &[1.0], 1e-10, 5), Err(LinalgError::Dimension(_))));
        let b = Csr::from_dense(&[vec![4.0, 1.0], vec![1.0, 3.0]]);
        assert!(matches!(cg_solve(&b, &[1.0, 2.0], 1e-14, 1), Err(LinalgError::NotConverged { .. })));
    }
}
