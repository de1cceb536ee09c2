use crate::formlang::IntegralKind;
use crate::mesh::ReferenceShape;

use super::{check_call, check_shape, IntegralDomain, IntegralKernel, KernelError};

/// Closed-form P1 Laplacian on triangles: nine entries written out against
/// four geometry tensor components.
#[derive(Clone, Copy, Debug, Default)]
pub struct ClosedFormPoissonKernel;

impl IntegralKernel for ClosedFormPoissonKernel {
    fn kind(&self) -> IntegralKind {
        IntegralKind::Cell
    }

    fn axis_dimensions(&self) -> &[usize] {
        &[3, 3]
    }

    #[allow(non_snake_case)]
    fn tabulate_tensor(
        &self,
        A: &mut [f64],
        coefficients: &[&[f64]],
        domain: &IntegralDomain,
    ) -> Result<(), KernelError> {
        check_call(IntegralKind::Cell, 9, &[], A, coefficients, domain)?;
        check_shape(ReferenceShape::Triangle, domain)?;
        let IntegralDomain::Cell(cell) = domain else { unreachable!("checked above") };
        if cell.gdim != 2 {
            return Err(KernelError::Dimension { tdim: 2, gdim: cell.gdim });
        }
        let x = |v: usize| cell.vertex(v);

        let J_00 = x(1)[0] - x(0)[0];
        let J_01 = x(2)[0] - x(0)[0];
        let J_10 = x(1)[1] - x(0)[1];
        let J_11 = x(2)[1] - x(0)[1];

        let detJ = J_00 * J_11 - J_01 * J_10;
        let coordinate_scale = [J_00, J_01, J_10, J_11].iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if detJ.is_nan() || detJ.abs() < 1e-14 * coordinate_scale * coordinate_scale || coordinate_scale == 0.0 {
            return Err(KernelError::DegenerateCell { index: cell.index, det: detJ });
        }

        let Jinv_00 = J_11 / detJ;
        let Jinv_01 = -J_01 / detJ;
        let Jinv_10 = -J_10 / detJ;
        let Jinv_11 = J_00 / detJ;

        let det = detJ.abs();

        let G0_0_0 = det * (Jinv_00 * Jinv_00 + Jinv_01 * Jinv_01);
        let G0_0_1 = det * (Jinv_00 * Jinv_10 + Jinv_01 * Jinv_11);
        let G0_1_0 = det * (Jinv_10 * Jinv_00 + Jinv_11 * Jinv_01);
        let G0_1_1 = det * (Jinv_10 * Jinv_10 + Jinv_11 * Jinv_11);

        A[0] = 0.5 * G0_0_0 + 0.5 * G0_0_1 + 0.5 * G0_1_0 + 0.5 * G0_1_1;
        A[1] = -0.5 * G0_0_0 - 0.5 * G0_1_0;
        A[2] = -0.5 * G0_0_1 - 0.5 * G0_1_1;
        A[3] = -0.5 * G0_0_0 - 0.5 * G0_0_1;
        A[4] = 0.5 * G0_0_0;
        A[5] = 0.5 * G0_0_1;
        A[6] = -0.5 * G0_1_0 - 0.5 * G0_1_1;
        A[7] = 0.5 * G0_1_0;
        A[8] = 0.5 * G0_1_1;
        Ok(())
    }
}
