//! Dense symmetric linear algebra on row-major buffers.

use rayon::prelude::*;

use crate::scalar::Scalar;

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// In-place Cholesky (Crout order): on success the lower triangle of `a`
/// holds `L` with `L Lᵀ = A` and the strict upper triangle is zeroed.
/// On failure returns the index of the first non-positive pivot.
pub fn cholesky_in_place<T: Scalar>(n: usize, a: &mut [T]) -> std::result::Result<(), usize> {
    assert_eq!(a.len(), n * n);
    for j in 0..n {
        let (head, tail) = a.split_at_mut((j + 1) * n);
        let row_j = &mut head[j * n..];
        let d = row_j[j] - dot(&row_j[..j], &row_j[..j]);
        if !(d > T::zero()) || !d.is_finite() {
            return Err(j);
        }
        let pivot = d.sqrt();
        row_j[j] = pivot;
        for v in &mut row_j[j + 1..] {
            *v = T::zero();
        }
        let row_j: &[T] = row_j;
        let update = |row_i: &mut [T]| {
            let s = row_i[j] - dot(&row_i[..j], &row_j[..j]);
            row_i[j] = s / pivot;
        };
        if (n - j) * j > 1 << 15 {
            tail.par_chunks_mut(n).for_each(update);
        } else {
            tail.chunks_mut(n).for_each(update);
        }
    }
    Ok(())
}

/// `out = L z` for a row-major lower-triangular `L`.
pub fn lower_mul<T: Scalar>(n: usize, l: &[T], z: &[T], out: &mut [T]) {
    for i in 0..n {
        out[i] = dot(&l[i * n..i * n + i + 1], &z[..=i]);
    }
}

/// Rough estimate of the smallest eigenvalue of a symmetric matrix by power
/// iteration on `sI − A`, `s` a Gershgorin bound.
pub fn min_eigenvalue_estimate<T: Scalar>(n: usize, a: &[T]) -> T {
    if n == 0 {
        return T::zero();
    }
    let s =
        (0..n).map(|i| a[i * n..(i + 1) * n].iter().fold(T::zero(), |acc, v| acc + v.abs())).fold(T::zero(), T::max);
    let mut v: Vec<T> = (0..n).map(|i| T::one() + T::lit(0.01) * T::from_usize_lossy(i % 7)).collect();
    let mut w = vec![T::zero(); n];
    let mut lambda = T::zero();
    for _ in 0..500 {
        let norm = dot(&v, &v).sqrt();
        if norm == T::zero() {
            break;
        }
        for x in &mut v {
            *x = *x / norm;
        }
        for i in 0..n {
            w[i] = s * v[i] - dot(&a[i * n..(i + 1) * n], &v);
        }
        lambda = dot(&v, &w);
        std::mem::swap(&mut v, &mut w);
    }
    s - lambda
}
