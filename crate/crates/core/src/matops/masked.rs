use std::ops::Range;
use std::sync::Arc;

use super::dense::{dot, DenseMatrix};
use crate::error::{LrmcError, Result};

/// A set of observed positions `Ω`, stored row-major (CSR-style offsets)
/// with a secondary column-major permutation so that both `M·X` and `Mᵀ·X`
/// run in `O(|Ω|·k)`.
#[derive(Debug, Clone)]
pub struct IndexSet {
    n1: usize,
    n2: usize,
    rows: Vec<u32>,
    cols: Vec<u32>,
    row_ptr: Vec<usize>,
    col_perm: Vec<u32>,
    col_ptr: Vec<usize>,
}

impl PartialEq for IndexSet {
    fn eq(&self, other: &Self) -> bool {
        self.n1 == other.n1
            && self.n2 == other.n2
            && self.rows == other.rows
            && self.cols == other.cols
    }
}

impl IndexSet {
    /// Canonicalizes an arbitrary list of positions: sorts row-major and
    /// drops duplicates.
    pub fn new(n1: usize, n2: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        check_dims(n1, n2)?;
        let mut entries: Vec<(u32, u32)> = Vec::new();
        for (i, j) in pairs {
            if i >= n1 || j >= n2 {
                return Err(LrmcError::InvalidShape(format!(
                    "index ({i}, {j}) out of bounds for {n1}x{n2}"
                )));
            }
            entries.push((i as u32, j as u32));
        }
        entries.sort_unstable();
        entries.dedup();
        Ok(Self::from_sorted(n1, n2, entries))
    }

    /// Every position of an `n1 × n2` matrix.
    pub fn full(n1: usize, n2: usize) -> Result<Self> {
        check_dims(n1, n2)?;
        let entries = (0..n1 as u32)
            .flat_map(|i| (0..n2 as u32).map(move |j| (i, j)))
            .collect();
        Ok(Self::from_sorted(n1, n2, entries))
    }

    pub(crate) fn from_sorted(n1: usize, n2: usize, entries: Vec<(u32, u32)>) -> Self {
        assert!(entries.len() < u32::MAX as usize, "index set too large");
        let (rows, cols): (Vec<u32>, Vec<u32>) = entries.into_iter().unzip();

        let mut row_ptr = vec![0usize; n1 + 1];
        for &i in &rows {
            row_ptr[i as usize + 1] += 1;
        }
        for i in 0..n1 {
            row_ptr[i + 1] += row_ptr[i];
        }

        let mut col_ptr = vec![0usize; n2 + 1];
        for &j in &cols {
            col_ptr[j as usize + 1] += 1;
        }
        for j in 0..n2 {
            col_ptr[j + 1] += col_ptr[j];
        }
        // Counting sort keeps row order within each column.
        let mut fill = col_ptr.clone();
        let mut col_perm = vec![0u32; cols.len()];
        for (idx, &j) in cols.iter().enumerate() {
            col_perm[fill[j as usize]] = idx as u32;
            fill[j as usize] += 1;
        }

        IndexSet {
            n1,
            n2,
            rows,
            cols,
            row_ptr,
            col_perm,
            col_ptr,
        }
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.n1, self.n2)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Position of the `idx`-th stored entry.
    #[inline]
    pub fn entry(&self, idx: usize) -> (usize, usize) {
        (self.rows[idx] as usize, self.cols[idx] as usize)
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = (usize, usize)> + '_ {
        self.rows
            .iter()
            .zip(&self.cols)
            .map(|(i, j)| (*i as usize, *j as usize))
    }

    /// Storage range of row `i`.
    #[inline]
    pub fn row_range(&self, i: usize) -> Range<usize> {
        self.row_ptr[i]..self.row_ptr[i + 1]
    }

    /// Storage indices of column `j`, in increasing row order.
    #[inline]
    pub fn col_entries(&self, j: usize) -> &[u32] {
        &self.col_perm[self.col_ptr[j]..self.col_ptr[j + 1]]
    }

    #[inline]
    pub(crate) fn col_of(&self, idx: usize) -> usize {
        self.cols[idx] as usize
    }

    /// Storage index of `(i, j)` if it is in the set.
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        if i >= self.n1 || j >= self.n2 {
            return None;
        }
        let range = self.row_range(i);
        let start = range.start;
        self.cols[range]
            .binary_search(&(j as u32))
            .ok()
            .map(|p| start + p)
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.position(i, j).is_some()
    }

    pub fn is_subset_of(&self, other: &IndexSet) -> bool {
        self.shape() == other.shape() && self.iter().all(|(i, j)| other.contains(i, j))
    }

    /// Entries whose storage index satisfies `keep`.
    pub fn filter(&self, mut keep: impl FnMut(usize) -> bool) -> IndexSet {
        let entries = (0..self.len())
            .filter(|&idx| keep(idx))
            .map(|idx| (self.rows[idx], self.cols[idx]))
            .collect();
        IndexSet::from_sorted(self.n1, self.n2, entries)
    }

    pub fn row_count(&self, i: usize) -> usize {
        self.row_ptr[i + 1] - self.row_ptr[i]
    }

    pub fn col_count(&self, j: usize) -> usize {
        self.col_ptr[j + 1] - self.col_ptr[j]
    }
}

fn check_dims(n1: usize, n2: usize) -> Result<()> {
    if n1 == 0 || n2 == 0 {
        return Err(LrmcError::InvalidShape(format!(
            "matrix dimensions must be positive, got {n1}x{n2}"
        )));
    }
    if n1 > u32::MAX as usize || n2 > u32::MAX as usize {
        return Err(LrmcError::InvalidShape("dimension exceeds u32 range".into()));
    }
    Ok(())
}

/// `Π_Ω(M)`: one value per position of a shared index set, implicitly zero
/// elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedMatrix {
    support: Arc<IndexSet>,
    values: Vec<f64>,
}

impl MaskedMatrix {
    pub fn new(support: Arc<IndexSet>, values: Vec<f64>) -> Result<Self> {
        if values.len() != support.len() {
            return Err(LrmcError::InvalidShape(format!(
                "{} values for {} support entries",
                values.len(),
                support.len()
            )));
        }
        if let Some(idx) = values.iter().position(|v| !v.is_finite()) {
            let (i, j) = support.entry(idx);
            return Err(LrmcError::param("values", format!("non-finite entry at ({i}, {j})")));
        }
        Ok(MaskedMatrix { support, values })
    }

    pub(crate) fn from_parts_unchecked(support: Arc<IndexSet>, values: Vec<f64>) -> Self {
        debug_assert_eq!(support.len(), values.len());
        MaskedMatrix { support, values }
    }

    pub fn zeros(support: Arc<IndexSet>) -> Self {
        let values = vec![0.0; support.len()];
        MaskedMatrix { support, values }
    }

    /// Projection of a dense matrix onto `support`.
    pub fn project(dense: &DenseMatrix, support: Arc<IndexSet>) -> Result<Self> {
        if dense.shape() != support.shape() {
            return Err(LrmcError::InvalidShape(format!(
                "projecting {:?} onto a {:?} index set",
                dense.shape(),
                support.shape()
            )));
        }
        let values = support.iter().map(|(i, j)| dense.get(i, j)).collect();
        Ok(MaskedMatrix { support, values })
    }

    pub fn from_fn(support: Arc<IndexSet>, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let values = support.iter().map(|(i, j)| f(i, j)).collect();
        MaskedMatrix { support, values }
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        self.support.shape()
    }

    #[inline]
    pub fn support(&self) -> &Arc<IndexSet> {
        &self.support
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Entry `(i, j)`, zero off the support.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.support.position(i, j).map_or(0.0, |p| self.values[p])
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let (n1, n2) = self.shape();
        let mut out = DenseMatrix::zeros(n1, n2);
        for (idx, (i, j)) in self.support.iter().enumerate() {
            out.set(i, j, self.values[idx]);
        }
        out
    }

    /// Whether both matrices are defined over the same index set.
    pub fn same_support(&self, other: &MaskedMatrix) -> bool {
        Arc::ptr_eq(&self.support, &other.support) || *self.support == *other.support
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        MaskedMatrix {
            support: Arc::clone(&self.support),
            values: self.values.iter().map(|v| f(*v)).collect(),
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    /// Entrywise `self - other` over a shared support.
    pub fn sub(&self, other: &MaskedMatrix) -> Result<Self> {
        if !self.same_support(other) {
            return Err(LrmcError::InvalidShape("masked operands have different supports".into()));
        }
        Ok(MaskedMatrix {
            support: Arc::clone(&self.support),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    /// Number of stored entries that are nonzero.
    pub fn nnz(&self) -> usize {
        self.values.iter().filter(|v| **v != 0.0).count()
    }

    /// Positions of the nonzero entries.
    pub fn nonzero_support(&self) -> IndexSet {
        self.support.filter(|idx| self.values[idx] != 0.0)
    }

    /// `M · X` for a dense `X` with `n2` rows.
    pub fn mul_dense(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        let (n1, n2) = self.shape();
        if x.rows() != n2 {
            return Err(LrmcError::InvalidShape(format!(
                "masked {n1}x{n2} · dense {:?}",
                x.shape()
            )));
        }
        let k = x.cols();
        let mut out = DenseMatrix::zeros(n1, k);
        for i in 0..n1 {
            let acc = out.row_mut(i);
            for idx in self.support.row_range(i) {
                let v = self.values[idx];
                let xr = x.row(self.support.col_of(idx));
                for (a, b) in acc.iter_mut().zip(xr) {
                    *a += v * b;
                }
            }
        }
        Ok(out)
    }

    /// `Mᵀ · X` for a dense `X` with `n1` rows.
    pub fn t_mul_dense(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        let (n1, n2) = self.shape();
        if x.rows() != n1 {
            return Err(LrmcError::InvalidShape(format!(
                "masked ({n1}x{n2})ᵀ · dense {:?}",
                x.shape()
            )));
        }
        let k = x.cols();
        let mut out = DenseMatrix::zeros(n2, k);
        // row-major scatter; each output row still accumulates in increasing i
        for i in 0..n1 {
            let xr = x.row(i);
            for idx in self.support.row_range(i) {
                let v = self.values[idx];
                let acc = out.row_mut(self.support.col_of(idx));
                for (a, b) in acc.iter_mut().zip(xr) {
                    *a += v * b;
                }
            }
        }
        Ok(out)
    }

    /// `Π_Ω(L Rᵀ)` without forming the dense product.
    pub fn from_factors(l: &DenseMatrix, r: &DenseMatrix, support: Arc<IndexSet>) -> Result<Self> {
        if l.cols() != r.cols() || (l.rows(), r.rows()) != support.shape() {
            return Err(LrmcError::InvalidShape(format!(
                "factors {:?}, {:?} do not match a {:?} index set",
                l.shape(),
                r.shape(),
                support.shape()
            )));
        }
        let values = support.iter().map(|(i, j)| dot(l.row(i), r.row(j))).collect();
        Ok(MaskedMatrix { support, values })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> MaskedMatrix {
        let s = Arc::new(IndexSet::new(3, 3, [(2, 1), (0, 0), (1, 2), (0, 2), (0, 0)]).unwrap());
        MaskedMatrix::new(s, vec![1.0, 2.0, 3.0, 4.0]).unwrap()
    }

    #[test]
    fn index_set_is_canonical() {
        let m = sample();
        let entries: Vec<_> = m.support().iter().collect();
        assert_eq!(entries, vec![(0, 0), (0, 2), (1, 2), (2, 1)]);
        assert_eq!(m.support().col_entries(2), &[1, 2]);
        assert_eq!(m.get(1, 2), 3.0);
        assert_eq!(m.get(1, 1), 0.0);
        assert!(IndexSet::new(2, 2, [(2, 0)]).is_err());
    }

    #[test]
    fn products_match_dense() {
        let m = sample();
        let x = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![-1.0, 0.5], vec![3.0, 1.0]]).unwrap();
        let dense = m.to_dense();
        assert_eq!(m.mul_dense(&x).unwrap(), dense.matmul(&x).unwrap());
        assert_eq!(m.t_mul_dense(&x).unwrap(), dense.t_matmul(&x).unwrap());
    }

    #[test]
    fn subset_and_filter() {
        let m = sample();
        let nz = m.map(|v| if v > 2.0 { v } else { 0.0 }).nonzero_support();
        assert_eq!(nz.len(), 2);
        assert!(nz.is_subset_of(m.support()));
        assert!(!m.support().is_subset_of(&nz));
    }
}
