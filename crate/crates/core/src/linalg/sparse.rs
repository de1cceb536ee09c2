use std::sync::OnceLock;

use super::LinalgError;

/// Compressed sparse row matrix with strictly increasing columns per row.
#[derive(Clone, Debug, PartialEq)]
pub struct Csr {
    pub nrows: usize,
    pub ncols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl Csr {
    pub fn identity(n: usize) -> Self {
        Self { nrows: n, ncols: n, row_ptr: (0..=n).collect(), col_idx: (0..n).collect(), values: vec![1.0; n] }
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut b = SparseMatrix::new(nrows, ncols);
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    b.push(i, j, v);
                }
            }
        }
        b.into_csr()
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map_or(0.0, |k| vals[k])
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.nrows) {
            let (cols, vals) = self.row(i);
            *yi = cols.iter().zip(vals).map(|(&j, v)| v * x[j]).sum();
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, row) in out.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                row[j] = v;
            }
        }
        out
    }

    pub fn transpose(&self) -> Csr {
        let mut b = SparseMatrix::new(self.ncols, self.nrows);
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                b.push(j, i, v);
            }
        }
        b.into_csr()
    }

    /// `max |A - A^T|` over all entries; infinite for non-square matrices.
    pub fn max_asymmetry(&self) -> f64 {
        if self.nrows != self.ncols {
            return f64::INFINITY;
        }
        let mut worst: f64 = 0.0;
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.nrows).map(|i| self.row(i).1.iter().sum()).collect()
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Replaces row `i` by the unit row `e_i`, inserting the diagonal if absent.
    pub fn set_unit_row(&mut self, i: usize) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        if let Ok(k) = self.col_idx[r.clone()].binary_search(&i) {
            for v in &mut self.values[r.clone()] {
                *v = 0.0;
            }
            self.values[r.start + k] = 1.0;
            return;
        }
        let pos = r.start + self.col_idx[r.clone()].partition_point(|&j| j < i);
        for v in &mut self.values[r] {
            *v = 0.0;
        }
        self.col_idx.insert(pos, i);
        self.values.insert(pos, 1.0);
        for p in &mut self.row_ptr[i + 1..] {
            *p += 1;
        }
    }
}

/// Triplet buffer converted to CSR on first read.
///
/// Duplicates are summed in insertion order after a stable sort by
/// (row, column), so the result does not depend on how additions interleave
/// across rows.
#[derive(Debug, Default)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    triplets: Vec<(usize, usize, f64)>,
    csr: OnceLock<Csr>,
}

impl Clone for SparseMatrix {
    fn clone(&self) -> Self {
        let csr = OnceLock::new();
        if let Some(c) = self.csr.get() {
            let _ = csr.set(c.clone());
        }
        Self { nrows: self.nrows, ncols: self.ncols, triplets: self.triplets.clone(), csr }
    }
}

impl SparseMatrix {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, triplets: Vec::new(), csr: OnceLock::new() }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nrows, self.ncols)
    }

    fn push(&mut self, i: usize, j: usize, v: f64) {
        self.triplets.push((i, j, v));
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) -> Result<(), LinalgError> {
        if i >= self.nrows || j >= self.ncols {
            return Err(LinalgError::IndexOutOfRange { index: vec![i, j], shape: vec![self.nrows, self.ncols] });
        }
        if let Some(csr) = self.csr.take() {
            self.triplets = csr_to_triplets(&csr);
        }
        self.push(i, j, v);
        Ok(())
    }

    pub fn csr(&self) -> &Csr {
        self.csr.get_or_init(|| finalize(self.nrows, self.ncols, &self.triplets))
    }

    pub fn into_csr(self) -> Csr {
        match self.csr.into_inner() {
            Some(c) => c,
            None => finalize(self.nrows, self.ncols, &self.triplets),
        }
    }
}

fn csr_to_triplets(csr: &Csr) -> Vec<(usize, usize, f64)> {
    let mut t = Vec::with_capacity(csr.nnz());
    for i in 0..csr.nrows {
        let (cols, vals) = csr.row(i);
        t.extend(cols.iter().zip(vals).map(|(&j, &v)| (i, j, v)));
    }
    t
}

fn finalize(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Csr {
    let mut order: Vec<usize> = (0..triplets.len()).collect();
    order.sort_by_key(|&k| (triplets[k].0, triplets[k].1));
    let mut row_ptr = vec![0; nrows + 1];
    let mut col_idx = Vec::new();
    let mut values = Vec::new();
    let mut last: Option<(usize, usize)> = None;
    for k in order {
        let (i, j, v) = triplets[k];
        if last == Some((i, j)) {
            *values.last_mut().expect("entry exists") += v;
        } else {
            col_idx.push(j);
            values.push(v);
            row_ptr[i + 1] += 1;
            last = Some((i, j));
        }
    }
    for i in 0..nrows {
        row_ptr[i + 1] += row_ptr[i];
    }
    Csr { nrows, ncols, row_ptr, col_idx, values }
}

/// A dense element tensor together with the global indices of each axis.
#[derive(Clone, Copy, Debug)]
pub struct DenseBlock<'a> {
    /// Row-major over the axes.
    pub values: &'a [f64],
    pub indices: &'a [&'a [usize]],
}

/// The global rank-0, rank-1 or rank-2 tensor a form assembles into.
#[derive(Clone, Debug)]
pub enum GlobalTensor {
    Scalar(f64),
    Vector(Vec<f64>),
    Matrix(SparseMatrix),
}

impl GlobalTensor {
    /// Zero tensor with one axis per entry of `shape`.
    pub fn zeros(shape: &[usize]) -> Result<Self, LinalgError> {
        match *shape {
            [] => Ok(Self::Scalar(0.0)),
            [n] => Ok(Self::Vector(vec![0.0; n])),
            [m, n] => Ok(Self::Matrix(SparseMatrix::new(m, n))),
            _ => Err(LinalgError::UnsupportedRank(shape.len())),
        }
    }

    pub fn rank(&self) -> usize {
        match self {
            Self::Scalar(_) => 0,
            Self::Vector(_) => 1,
            Self::Matrix(_) => 2,
        }
    }

    pub fn shape(&self) -> Vec<usize> {
        match self {
            Self::Scalar(_) => vec![],
            Self::Vector(v) => vec![v.len()],
            Self::Matrix(m) => vec![m.nrows, m.ncols],
        }
    }

    /// Accumulates `block` into the tensor (`+=`).
    pub fn add_block(&mut self, block: &DenseBlock<'_>) -> Result<(), LinalgError> {
        let rank = self.rank();
        if rank > 0 && block.indices.len() != rank {
            return Err(LinalgError::RankMismatch { tensor: rank, block: block.indices.len() });
        }
        let expected: usize = block.indices.iter().map(|a| a.len()).product();
        if block.values.len() != expected {
            return Err(LinalgError::BlockSize { values: block.values.len(), expected });
        }
        let shape = self.shape();
        for (axis, idx) in block.indices.iter().enumerate().take(rank) {
            if let Some(&bad) = idx.iter().find(|&&i| i >= shape[axis]) {
                return Err(LinalgError::IndexOutOfRange { index: vec![bad], shape: shape.clone() });
            }
        }
        match self {
            Self::Scalar(s) => *s += block.values.iter().sum::<f64>(),
            Self::Vector(v) => {
                for (&i, &a) in block.indices[0].iter().zip(block.values) {
                    v[i] += a;
                }
            }
            Self::Matrix(m) => {
                if let Some(csr) = m.csr.take() {
                    m.triplets = csr_to_triplets(&csr);
                }
                let cols = block.indices[1];
                for (r, &i) in block.indices[0].iter().enumerate() {
                    for (c, &j) in cols.iter().enumerate() {
                        m.push(i, j, block.values[r * cols.len() + c]);
                    }
                }
            }
        }
        Ok(())
    }

    pub fn as_scalar(&self) -> Option<f64> {
        match self {
            Self::Scalar(s) => Some(*s),
            _ => None,
        }
    }

    pub fn as_vector(&self) -> Option<&[f64]> {
        match self {
            Self::Vector(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_matrix(&self) -> Option<&Csr> {
        match self {
            Self::Matrix(m) => Some(m.csr()),
            _ => None,
        }
    }

    pub fn into_vector(self) -> Option<Vec<f64>> {
        match self {
            Self::Vector(v) => Some(v),
            _ => None,
        }
    }

    pub fn into_matrix(self) -> Option<Csr> {
        match self {
            Self::Matrix(m) => Some(m.into_csr()),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank2_accumulates() {
        let mut t = GlobalTensor::zeros(&[2, 2]).unwrap();
        let idx: [&[usize]; 2] = [&[0, 1], &[0, 1]];
        let block = DenseBlock { values: &[1.0, 2.0, 3.0, 4.0], indices: &idx };
        t.add_block(&block).unwrap();
        t.add_block(&block).unwrap();
        assert_eq!(t.as_matrix().unwrap().values, vec![2.0, 4.0, 6.0, 8.0]);
        // adding after a read keeps earlier contributions
        t.add_block(&block).unwrap();
        assert_eq!(t.as_matrix().unwrap().values, vec![3.0, 6.0, 9.0, 12.0]);
    }

    #[test]
    fn rank1_and_rank0() {
        let mut v = GlobalTensor::zeros(&[4]).unwrap();
        let idx: [&[usize]; 1] = [&[3]];
        v.add_block(&DenseBlock { values: &[5.0], indices: &idx }).unwrap();
        assert_eq!(v.as_vector().unwrap(), &[0.0, 0.0, 0.0, 5.0]);
        let mut s = GlobalTensor::zeros(&[]).unwrap();
        for _ in 0..3 {
            s.add_block(&DenseBlock { values: &[0.5], indices: &[] }).unwrap();
        }
        assert_eq!(s.as_scalar(), Some(1.5));
    }

    #[test]
    fn errors() {
        let mut v = GlobalTensor::zeros(&[2]).unwrap();
        let idx: [&[usize]; 1] = [&[2]];
        assert!(matches!(
            v.add_block(&DenseBlock { values: &[1.0], indices: &idx }),
            Err(LinalgError::IndexOutOfRange { .. })
        ));
        let idx2: [&[usize]; 2] = [&[0], &[0]];
        assert!(matches!(
            v.add_block(&DenseBlock { values: &[1.0], indices: &idx2 }),
            Err(LinalgError::RankMismatch { .. })
        ));
        assert!(matches!(GlobalTensor::zeros(&[1, 1, 1]), Err(LinalgError::UnsupportedRank(3))));
    }

    #[test]
    fn unit_row_inserts_missing_diagonal() {
        let mut a = Csr::from_dense(&[vec![0.0, 2.0], vec![3.0, 4.0]]);
        a.set_unit_row(0);
        assert_eq!(a.to_dense(), vec![vec![1.0, 0.0], vec![3.0, 4.0]]);
        a.set_unit_row(1);
        assert_eq!(a.to_dense(), vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(a.max_asymmetry(), 0.0);
    }
}
