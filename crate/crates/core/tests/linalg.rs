use formfem::linalg::{cg_solve, read_matrix_market, write_matrix_market, Csr, DenseBlock, GlobalTensor, MatrixMarket};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

type Block = (Vec<usize>, Vec<usize>, Vec<f64>);

fn block_strategy(n: usize) -> impl Strategy<Value = Block> {
    (1usize..4, 1usize..4).prop_flat_map(move |(r, c)| {
        (
            proptest::collection::vec(0..n, r),
            proptest::collection::vec(0..n, c),
            proptest::collection::vec(-10.0f64..10.0, r * c),
        )
    })
}

fn finalize(blocks: &[Block], n: usize) -> Csr {
    let mut t = GlobalTensor::zeros(&[n, n]).unwrap();
    for (rows, cols, values) in blocks {
        t.add_block(&DenseBlock { values, indices: &[rows, cols] }).unwrap();
    }
    t.into_matrix().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn block_order_does_not_matter(
        blocks in proptest::collection::vec(block_strategy(8), 1..12),
        shuffled in any::<u64>(),
    ) {
        let mut order: Vec<usize> = (0..blocks.len()).collect();
        let mut state = shuffled | 1;
        for i in (1..order.len()).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            order.swap(i, ((state >> 33) % (i as u64 + 1)) as usize);
        }
        let permuted: Vec<Block> = order.iter().map(|&i| blocks[i].clone()).collect();
        let a = finalize(&blocks, 8);
        let b = finalize(&permuted, 8);
        prop_assert_eq!(&a.row_ptr, &b.row_ptr);
        prop_assert_eq!(&a.col_idx, &b.col_idx);
        for (x, y) in a.values.iter().zip(&b.values) {
            prop_assert!((x - y).abs() <= 1e-15 * x.abs().max(1.0) * 10.0);
        }
        for r in 0..a.nrows {
            let (cols, _) = a.row(r);
            prop_assert!(cols.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn cg_matches_direct_solve(
        n in 1usize..40,
        entries in proptest::collection::vec(-1.0f64..1.0, 1600),
        rhs in proptest::collection::vec(-1.0f64..1.0, 40),
    ) {
        let m = DMatrix::from_fn(n, n, |i, j| entries[i * 40 + j]);
        let spd = &m * m.transpose() + DMatrix::identity(n, n) * (n as f64);
        let rows: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| spd[(i, j)]).collect()).collect();
        let a = Csr::from_dense(&rows);
        let b = &rhs[..n];
        let (x, _) = cg_solve(&a, b, 1e-12, 10 * n).unwrap();
        let direct = spd.lu().solve(&DVector::from_column_slice(b)).unwrap();
        let err = (DVector::from_vec(x) - &direct).norm() / direct.norm().max(1e-300);
        prop_assert!(err <= 1e-8, "{err}");
    }

    #[test]
    fn matrix_market_round_trip(
        entries in proptest::collection::vec((0usize..10, 0usize..10, -1e6f64..1e6), 0..60),
    ) {
        let mut t = GlobalTensor::zeros(&[10, 10]).unwrap();
        for (i, j, v) in &entries {
            t.add_block(&DenseBlock { values: &[*v], indices: &[&[*i], &[*j]] }).unwrap();
        }
        let mut bytes = Vec::new();
        write_matrix_market(&t, &mut bytes).unwrap();
        let MatrixMarket::Matrix(back) = read_matrix_market(&bytes[..]).unwrap() else {
            return Err(TestCaseError::fail("expected a matrix"));
        };
        prop_assert_eq!(&back, t.as_matrix().unwrap());
    }
}
