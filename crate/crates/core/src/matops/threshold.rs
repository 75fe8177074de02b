//! Entrywise outlier operators: soft-thresholding and the per-row/column
//! top-fraction sparsifier used by the ScaledGD baseline.

use std::sync::Arc;

use super::dense::DenseMatrix;
use super::masked::{IndexSet, MaskedMatrix};
use crate::error::{LrmcError, Result};

/// Matrices whose stored values can be rewritten in place of a copy.
pub trait MatrixValues: Sized {
    fn shape(&self) -> (usize, usize);
    fn values(&self) -> &[f64];
    fn with_values(&self, values: Vec<f64>) -> Self;
}

impl MatrixValues for DenseMatrix {
    fn shape(&self) -> (usize, usize) {
        DenseMatrix::shape(self)
    }
    fn values(&self) -> &[f64] {
        self.as_slice()
    }
    fn with_values(&self, values: Vec<f64>) -> Self {
        let (r, c) = self.shape();
        let mut m = DenseMatrix::zeros(r, c);
        m.as_mut_slice().copy_from_slice(&values);
        m
    }
}

impl MatrixValues for MaskedMatrix {
    fn shape(&self) -> (usize, usize) {
        MaskedMatrix::shape(self)
    }
    fn values(&self) -> &[f64] {
        MaskedMatrix::values(self)
    }
    fn with_values(&self, values: Vec<f64>) -> Self {
        MaskedMatrix::from_parts_unchecked(Arc::clone(self.support()), values)
    }
}

/// `sign(x)·max(0, |x| − ζ)`; exactly zero at the kink `|x| = ζ`.
#[inline]
pub fn shrink(x: f64, zeta: f64) -> f64 {
    let mag = x.abs() - zeta;
    if mag > 0.0 {
        mag.copysign(x)
    } else {
        0.0
    }
}

fn check_threshold(zeta: f64) -> Result<()> {
    if !zeta.is_finite() || zeta < 0.0 {
        return Err(LrmcError::param("zeta", format!("must be finite and >= 0, got {zeta}")));
    }
    Ok(())
}

/// Entrywise soft-thresholding `S_ζ(M)`.
pub fn soft_threshold<M: MatrixValues>(m: &M, zeta: f64) -> Result<M> {
    check_threshold(zeta)?;
    Ok(m.with_values(m.values().iter().map(|v| shrink(*v, zeta)).collect()))
}

/// `⌈frac·n⌉`, snapping products that land within rounding error of an
/// integer (so `0.1·30` counts as 3, not 4).
pub fn ceil_count(frac: f64, n: usize) -> usize {
    let x = frac * n as f64;
    let nearest = x.round();
    if (x - nearest).abs() <= 1e-9 * (n as f64).max(1.0) {
        nearest as usize
    } else {
        x.ceil() as usize
    }
}

/// Magnitude of the `k`-th largest (1-based) entry among `values` padded
/// with `implicit_zeros` zeros. `k = 0` yields `+∞` (nothing passes).
///
/// Uses a bounded min-heap of size `k`, so the cost grows as `O(m log k)`.
pub(crate) fn kth_largest_magnitude(
    values: impl Iterator<Item = f64>,
    implicit_zeros: usize,
    k: usize,
    heap: &mut Vec<f64>,
) -> f64 {
    if k == 0 {
        return f64::INFINITY;
    }
    heap.clear();
    for v in values {
        let a = v.abs();
        if heap.len() < k {
            heap.push(a);
            let last = heap.len() - 1;
            sift_up(heap, last);
        } else if a > heap[0] {
            heap[0] = a;
            sift_down(heap, 0);
        }
    }
    if heap.len() < k {
        // The k-th largest is one of the implicit zeros.
        debug_assert!(heap.len() + implicit_zeros >= k);
        return 0.0;
    }
    heap[0]
}

fn sift_up(heap: &mut [f64], mut i: usize) {
    while i > 0 {
        let parent = (i - 1) / 2;
        if heap[i] < heap[parent] {
            heap.swap(i, parent);
            i = parent;
        } else {
            break;
        }
    }
}

fn sift_down(heap: &mut [f64], mut i: usize) {
    let n = heap.len();
    loop {
        let l = 2 * i + 1;
        let r = l + 1;
        let mut smallest = i;
        if l < n && heap[l] < heap[smallest] {
            smallest = l;
        }
        if r < n && heap[r] < heap[smallest] {
            smallest = r;
        }
        if smallest == i {
            return;
        }
        heap.swap(i, smallest);
        i = smallest;
    }
}

/// Top-fraction sparsification `T_α̃` over the support of a masked matrix.
///
/// Entry `(i, j)` survives iff its magnitude is at least the `⌈α̃·n₂⌉`-th
/// largest magnitude of row `i` and at least the `⌈α̃·n₁⌉`-th largest of
/// column `j`. Unobserved positions count as zeros when ranking.
pub fn sparsify_top_fraction(m: &MaskedMatrix, alpha_tilde: f64) -> Result<MaskedMatrix> {
    if !(0.0..=1.0).contains(&alpha_tilde) {
        return Err(LrmcError::param(
            "alpha_tilde",
            format!("must lie in [0, 1], got {alpha_tilde}"),
        ));
    }
    let support: &IndexSet = m.support();
    let (n1, n2) = support.shape();
    let k_row = ceil_count(alpha_tilde, n2);
    let k_col = ceil_count(alpha_tilde, n1);
    let values = m.values();
    let mut heap = Vec::with_capacity(k_row.max(k_col).min(n1.max(n2)));

    let row_cut: Vec<f64> = (0..n1)
        .map(|i| {
            let range = support.row_range(i);
            let stored = range.len();
            kth_largest_magnitude(values[range].iter().copied(), n2 - stored, k_row, &mut heap)
        })
        .collect();
    let col_cut: Vec<f64> = (0..n2)
        .map(|j| {
            let entries = support.col_entries(j);
            kth_largest_magnitude(
                entries.iter().map(|&idx| values[idx as usize]),
                n1 - entries.len(),
                k_col,
                &mut heap,
            )
        })
        .collect();

    let out = support
        .iter()
        .zip(values)
        .map(|((i, j), v)| {
            let a = v.abs();
            if a >= row_cut[i] && a >= col_cut[j] {
                *v
            } else {
                0.0
            }
        })
        .collect();
    Ok(m.with_values(out))
}

/// Dense convenience wrapper around [`sparsify_top_fraction`].
pub fn sparsify_top_fraction_dense(m: &DenseMatrix, alpha_tilde: f64) -> Result<DenseMatrix> {
    let (n1, n2) = m.shape();
    let full = Arc::new(IndexSet::full(n1, n2)?);
    let masked = MaskedMatrix::project(m, full)?;
    Ok(sparsify_top_fraction(&masked, alpha_tilde)?.to_dense())
}
