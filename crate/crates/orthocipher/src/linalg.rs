//! Dense square-matrix and vector arithmetic, permutation matrices,
//! orthogonality testing, and matrix powers with cyclic order reduction.
//!
//! Everything here is plain `f64`, row-major, and sized for the small
//! dimensions the cipher uses (blocks of a few symbols up to a few dozen).

use crate::error::{Error, Result};

/// Dense square matrix of doubles, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    /// All-zero matrix.
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "matrix dimension must be at least 1");
        SquareMatrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    /// Identity matrix.
    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    /// Builds a matrix from rows, validating shape and finiteness.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::InvalidDimension {
                dim: 0,
                reason: "matrix must have at least one row",
            });
        }
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    left: dim,
                    right: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        if let Some(position) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { position });
        }
        Ok(SquareMatrix { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim).map(|i| self.row(i).to_vec()).collect()
    }

    /// Standard matrix product.
    pub fn multiply(&self, other: &SquareMatrix) -> Result<SquareMatrix> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        let n = self.dim;
        let mut out = Self::zeros(n);
        // ikj order: accumulate scaled rows of `other` into each output row.
        for i in 0..n {
            for k in 0..n {
                let aik = self.data[i * n + k];
                let dst = &mut out.data[i * n..(i + 1) * n];
                let src = &other.data[k * n..(k + 1) * n];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += aik * s;
                }
            }
        }
        Ok(out)
    }

    /// Matrix-vector product.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: x.len(),
            });
        }
        Ok((0..self.dim)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn transpose(&self) -> SquareMatrix {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.data[j * n + i] = self.data[i * n + j];
            }
        }
        out
    }

    pub fn add(&self, other: &SquareMatrix) -> Result<SquareMatrix> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        let mut out = self.clone();
        for (d, s) in out.data.iter_mut().zip(&other.data) {
            *d += s;
        }
        Ok(out)
    }

    pub fn scale(&self, s: f64) -> SquareMatrix {
        let mut out = self.clone();
        for d in out.data.iter_mut() {
            *d *= s;
        }
        out
    }

    /// Largest absolute entry difference against `other`.
    pub fn max_abs_diff(&self, other: &SquareMatrix) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Max-abs entry of `M*M^T - I`; zero for a perfectly orthogonal matrix.
    pub fn orthogonality_deviation(&self) -> f64 {
        let product = self
            .multiply(&self.transpose())
            .expect("dimensions match by construction");
        product.max_abs_diff(&SquareMatrix::identity(self.dim))
    }

    /// True iff `M*M^T` is within `tol` of the identity in the max-abs norm.
    pub fn is_orthogonal(&self, tol: f64) -> bool {
        self.orthogonality_deviation() <= tol
    }

    /// `M^j` by repeated squaring; `M^0` is the identity.
    pub fn power(&self, j: u64) -> SquareMatrix {
        let mut result = Self::identity(self.dim);
        let mut base = self.clone();
        let mut j = j;
        while j > 0 {
            if j & 1 == 1 {
                result = result.multiply(&base).expect("same dimension");
            }
            j >>= 1;
            if j > 0 {
                base = base.multiply(&base).expect("same dimension");
            }
        }
        result
    }

    /// `M^(j mod order)` when the multiplicative order is known, plain
    /// `M^j` otherwise.
    pub fn power_reduced(&self, j: u64, order: Option<u64>) -> SquareMatrix {
        match order {
            Some(k) => self.power(j % k),
            None => self.power(j),
        }
    }

    /// Smallest `k <= k_max` with `‖M^k - I‖∞ <= tol`, if any.
    ///
    /// Callers should pass an orthogonal matrix; a contractive or expansive
    /// one never cycles back to the identity.
    pub fn multiplicative_order(&self, k_max: u64, tol: f64) -> Option<u64> {
        let identity = Self::identity(self.dim);
        let mut acc = self.clone();
        for k in 1..=k_max {
            if acc.max_abs_diff(&identity) <= tol {
                return Some(k);
            }
            acc = acc.multiply(self).expect("same dimension");
        }
        None
    }
}

/// A permutation of `0..dim`, stored as its image: `i` maps to `image[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    image: Vec<usize>,
}

impl Permutation {
    pub fn identity(dim: usize) -> Self {
        assert!(dim >= 1, "permutation dimension must be at least 1");
        Permutation {
            image: (0..dim).collect(),
        }
    }

    /// Validates that `image` is a bijection on `0..image.len()`.
    pub fn from_image(image: Vec<usize>) -> Result<Self> {
        let dim = image.len();
        if dim == 0 {
            return Err(Error::InvalidDimension {
                dim: 0,
                reason: "permutation must have at least one element",
            });
        }
        let mut seen = vec![false; dim];
        for &target in &image {
            if target >= dim || seen[target] {
                return Err(Error::InvalidDimension {
                    dim,
                    reason: "image is not a bijection on 0..dim",
                });
            }
            seen[target] = true;
        }
        Ok(Permutation { image })
    }

    pub fn dim(&self) -> usize {
        self.image.len()
    }

    pub fn image(&self) -> &[usize] {
        &self.image
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.image.len()];
        for (i, &target) in self.image.iter().enumerate() {
            inv[target] = i;
        }
        Permutation { image: inv }
    }

    /// Composition matching matrix order: `p.compose(q)` sends `i` to
    /// `p(q(i))`, so `p.compose(q).to_matrix() = p.to_matrix() * q.to_matrix()`.
    pub fn compose(&self, other: &Permutation) -> Result<Permutation> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        Ok(Permutation {
            image: other.image.iter().map(|&i| self.image[i]).collect(),
        })
    }

    /// `p^j` by repeated squaring on composition.
    pub fn pow(&self, j: u64) -> Permutation {
        let mut result = Self::identity(self.dim());
        let mut base = self.clone();
        let mut j = j;
        while j > 0 {
            if j & 1 == 1 {
                result = result.compose(&base).expect("same dimension");
            }
            j >>= 1;
            if j > 0 {
                base = base.compose(&base).expect("same dimension");
            }
        }
        result
    }

    /// Applies the permutation to a vector exactly (index shuffle, no
    /// floating-point arithmetic): `out[image[i]] = x[i]`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: x.len(),
            });
        }
        let mut out = vec![0.0; x.len()];
        for (i, &target) in self.image.iter().enumerate() {
            out[target] = x[i];
        }
        Ok(out)
    }

    /// The 0/1 matrix sending basis vector `i` to basis vector `image[i]`;
    /// orthogonal by construction.
    pub fn to_matrix(&self) -> SquareMatrix {
        let mut m = SquareMatrix::zeros(self.dim());
        for (i, &target) in self.image.iter().enumerate() {
            m.set(target, i, 1.0);
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    /// Two 45-degree plane rotations stacked on the diagonal; orthogonal
    /// with multiplicative order 8.
    pub(crate) fn rot45_pair() -> SquareMatrix {
        let s = FRAC_1_SQRT_2;
        SquareMatrix::from_rows(&[
            vec![s, -s, 0.0, 0.0],
            vec![s, s, 0.0, 0.0],
            vec![0.0, 0.0, s, -s],
            vec![0.0, 0.0, s, s],
        ])
        .unwrap()
    }

    fn assert_close(got: f64, want: f64, tol: f64) {
        let scale = want.abs().max(1.0);
        assert!(
            (got - want).abs() <= tol * scale,
            "got {got}, want {want} (tol {tol})"
        );
    }

    #[test]
    fn multiply_identity_is_noop() {
        let c = rot45_pair();
        let i = SquareMatrix::identity(4);
        assert_eq!(i.multiply(&c).unwrap(), c);
        assert_eq!(c.multiply(&i).unwrap(), c);
    }

    #[test]
    fn multiply_dimension_mismatch() {
        let a = SquareMatrix::identity(3);
        let b = SquareMatrix::identity(4);
        assert!(matches!(
            a.multiply(&b),
            Err(Error::DimensionMismatch { left: 3, right: 4 })
        ));
    }

    #[test]
    fn squared_rotation_is_quarter_turn() {
        // 45 + 45 degrees: each block becomes the 90-degree rotation.
        let c2 = rot45_pair().power(2);
        let want = SquareMatrix::from_rows(&[
            vec![0.0, -1.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, -1.0],
            vec![0.0, 0.0, 1.0, 0.0],
        ])
        .unwrap();
        assert!(c2.max_abs_diff(&want) <= 1e-15);
    }

    #[test]
    fn multiply_matches_naive_triple_loop() {
        // Independent oracle: textbook ijk loops on indexed entries.
        let a = SquareMatrix::from_rows(&[
            vec![1.5, -2.0, 0.25],
            vec![3.0, 0.5, -1.0],
            vec![-0.75, 2.25, 4.0],
        ])
        .unwrap();
        let b = SquareMatrix::from_rows(&[
            vec![0.5, 1.0, -3.0],
            vec![2.0, -0.25, 0.125],
            vec![-1.5, 0.75, 2.5],
        ])
        .unwrap();
        let got = a.multiply(&b).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let mut want = 0.0;
                for k in 0..3 {
                    want += a.get(i, k) * b.get(k, j);
                }
                assert_close(got.get(i, j), want, 1e-14);
            }
        }
    }

    #[test]
    fn apply_identity_and_zero() {
        let i = SquareMatrix::identity(4);
        let x = vec![3.0, 18.0, 25.0, 16.0];
        assert_eq!(i.apply(&x).unwrap(), x);
        assert_eq!(i.apply(&[0.0; 4]).unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn apply_rotates_code_vector() {
        // Hand arithmetic: (3-18, 3+18, 25-16, 25+16) / sqrt(2).
        let y = rot45_pair().apply(&[3.0, 18.0, 25.0, 16.0]).unwrap();
        let want = [-15.0, 21.0, 9.0, 41.0].map(|v| v * FRAC_1_SQRT_2);
        for (g, w) in y.iter().zip(want) {
            assert_close(*g, w, 1e-14);
        }
    }

    #[test]
    fn transpose_swaps_entries() {
        let c = rot45_pair();
        let t = c.transpose();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(t.get(i, j), c.get(j, i));
            }
        }
        assert_eq!(t.transpose(), c);
        // A symmetric matrix is its own transpose.
        let sym = SquareMatrix::from_rows(&[vec![2.0, 5.0], vec![5.0, -1.0]]).unwrap();
        assert_eq!(sym.transpose(), sym);
    }

    #[test]
    fn orthogonality_test_accepts_and_rejects() {
        assert!(SquareMatrix::identity(5).is_orthogonal(1e-15));
        assert!(rot45_pair().is_orthogonal(1e-12));
        let mut perturbed = rot45_pair();
        perturbed.set(0, 0, perturbed.get(0, 0) + 0.1);
        assert!(!perturbed.is_orthogonal(1e-12));
    }

    #[test]
    fn permutation_matrix_cases() {
        assert_eq!(
            Permutation::identity(4).to_matrix(),
            SquareMatrix::identity(4)
        );
        // Cyclic shift 0->3, 1->0, 2->1, 3->2.
        let p = Permutation::from_image(vec![3, 0, 1, 2]).unwrap();
        let want = SquareMatrix::from_rows(&[
            vec![0.0, 1.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, 0.0],
            vec![0.0, 0.0, 0.0, 1.0],
            vec![1.0, 0.0, 0.0, 0.0],
        ])
        .unwrap();
        assert_eq!(p.to_matrix(), want);
        assert_eq!(p.inverse().to_matrix(), p.to_matrix().transpose());
    }

    #[test]
    fn permutation_rejects_non_bijections() {
        assert!(Permutation::from_image(vec![0, 0, 1]).is_err());
        assert!(Permutation::from_image(vec![0, 3]).is_err());
        assert!(Permutation::from_image(vec![]).is_err());
    }

    #[test]
    fn permutation_inverse_cancels_exactly() {
        let p = Permutation::from_image(vec![2, 0, 3, 1, 4]).unwrap();
        let product = p.to_matrix().multiply(&p.inverse().to_matrix()).unwrap();
        // 0/1 arithmetic: exact equality, no tolerance.
        assert_eq!(product, SquareMatrix::identity(5));
    }

    #[test]
    fn permutation_apply_matches_matrix() {
        let p = Permutation::from_image(vec![3, 0, 1, 2]).unwrap();
        let x = [10.0, 20.0, 30.0, 40.0];
        assert_eq!(p.apply(&x).unwrap(), p.to_matrix().apply(&x).unwrap());
        assert_eq!(
            p.pow(3).apply(&x).unwrap(),
            p.to_matrix().power(3).apply(&x).unwrap()
        );
    }

    #[test]
    fn power_zero_is_identity() {
        assert_eq!(rot45_pair().power(0), SquareMatrix::identity(4));
    }

    #[test]
    fn power_three_is_135_degree_rotation() {
        // Each 2x2 block of C^3: (1/sqrt(2)) * [[-1, -1], [1, -1]].
        let c3 = rot45_pair().power(3);
        let s = FRAC_1_SQRT_2;
        let want = SquareMatrix::from_rows(&[
            vec![-s, -s, 0.0, 0.0],
            vec![s, -s, 0.0, 0.0],
            vec![0.0, 0.0, -s, -s],
            vec![0.0, 0.0, s, -s],
        ])
        .unwrap();
        assert!(c3.max_abs_diff(&want) <= 1e-14);
    }

    #[test]
    fn power_eight_returns_to_identity() {
        let c8 = rot45_pair().power(8);
        assert!(c8.max_abs_diff(&SquareMatrix::identity(4)) <= 1e-12);
    }

    #[test]
    fn order_detection() {
        assert_eq!(
            SquareMatrix::identity(3).multiplicative_order(10, 1e-9),
            Some(1)
        );
        assert_eq!(rot45_pair().multiplicative_order(1024, 1e-9), Some(8));
    }

    #[test]
    fn irrational_rotation_has_no_order() {
        // 1 radian is not a rational multiple of 2*pi, so no power up to
        // k_max returns to the identity. Verified against the direct
        // repeated-multiplication oracle.
        let (s, c) = 1.0_f64.sin_cos();
        let r = SquareMatrix::from_rows(&[vec![c, -s], vec![s, c]]).unwrap();
        assert_eq!(r.multiplicative_order(100, 1e-9), None);

        let identity = SquareMatrix::identity(2);
        let mut acc = r.clone();
        for _ in 1..=100 {
            assert!(acc.max_abs_diff(&identity) > 1e-9);
            acc = acc.multiply(&r).unwrap();
        }
    }

    #[test]
    fn reduced_power_uses_cycle() {
        let c = rot45_pair();
        // 9 = 8 + 1, so C^9 reduces to C.
        assert!(c.power_reduced(9, Some(8)).max_abs_diff(&c) <= 1e-12);
        assert!(
            c.power_reduced(8, Some(8))
                .max_abs_diff(&SquareMatrix::identity(4))
                <= 1e-15
        );
        // Without a known order the plain power is returned.
        assert_eq!(c.power_reduced(5, None), c.power(5));
    }

    #[test]
    fn reduced_power_tracks_plain_power() {
        let c = rot45_pair();
        for j in 0..=100 {
            let direct = c.power(j);
            let reduced = c.power_reduced(j, Some(8));
            assert!(direct.max_abs_diff(&reduced) <= 1e-9, "j = {j}");
        }
    }
}
