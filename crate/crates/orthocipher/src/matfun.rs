//! Matrix functions of symmetric matrices via spectral decomposition, with
//! a truncated Taylor series as an independent cross-check.
//!
//! A symmetric matrix factors as `A = Q Λ Qᵀ` with orthogonal `Q`, and any
//! scalar function then lifts to `f(A) = Q f(Λ) Qᵀ`. Only symmetric input
//! is accepted: a general orthogonal matrix (a rotation, say) has no real
//! eigendecomposition, so the spectral route simply does not exist there.

use crate::encoding::Codec;
use crate::error::{Error, Result};
use crate::linalg::SquareMatrix;

const MAX_SWEEPS: usize = 100;
const SYMMETRY_REL_TOL: f64 = 1e-12;
const OFF_DIAGONAL_REL_TOL: f64 = 1e-12;

/// `A = Q Λ Qᵀ`: orthogonal eigenvector columns and ascending eigenvalues.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub q: SquareMatrix,
    pub lambda: Vec<f64>,
}

impl SpectralDecomposition {
    /// Reassembles `Q diag(f(λ)) Qᵀ` for an arbitrary scalar map.
    pub fn assemble(&self, f: impl Fn(f64) -> f64) -> SquareMatrix {
        let n = self.q.dim();
        let mut scaled = self.q.clone();
        for k in 0..n {
            let g = f(self.lambda[k]);
            for i in 0..n {
                scaled.set(i, k, scaled.get(i, k) * g);
            }
        }
        scaled
            .multiply(&self.q.transpose())
            .expect("same dimension")
    }
}

fn max_asymmetry(a: &SquareMatrix) -> f64 {
    let n = a.dim();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((a.get(i, j) - a.get(j, i)).abs());
        }
    }
    worst
}

fn off_diagonal_norm(a: &SquareMatrix) -> f64 {
    let n = a.dim();
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += a.get(i, j) * a.get(i, j);
            }
        }
    }
    sum.sqrt()
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Sweeps plane rotations over all (p, q) pairs until the off-diagonal
/// Frobenius norm drops below `1e-12 * ‖A‖F`, then sorts the eigenpairs
/// ascending. Robust and plenty fast for the small dimensions in scope.
pub fn jacobi_eigen(a: &SquareMatrix) -> Result<SpectralDecomposition> {
    let deviation = max_asymmetry(a);
    if deviation > SYMMETRY_REL_TOL * (1.0 + a.max_abs()) {
        return Err(Error::NotSymmetric { deviation });
    }

    let n = a.dim();
    let mut work = a.clone();
    let mut q = SquareMatrix::identity(n);
    let threshold = OFF_DIAGONAL_REL_TOL * a.frobenius_norm();

    let mut converged = off_diagonal_norm(&work) <= threshold;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        for p in 0..n {
            for r in (p + 1)..n {
                let apr = work.get(p, r);
                if apr == 0.0 {
                    continue;
                }
                let app = work.get(p, p);
                let arr = work.get(r, r);
                let theta = (arr - app) / (2.0 * apr);
                // tan of the rotation angle; the guarded form avoids
                // overflow in theta^2.
                let t = if theta.abs() > 1e10 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);

                work.set(p, p, app - t * apr);
                work.set(r, r, arr + t * apr);
                work.set(p, r, 0.0);
                work.set(r, p, 0.0);
                for i in 0..n {
                    if i != p && i != r {
                        let g = work.get(i, p);
                        let h = work.get(i, r);
                        let rotated_p = g - s * (h + g * tau);
                        let rotated_r = h + s * (g - h * tau);
                        work.set(i, p, rotated_p);
                        work.set(p, i, rotated_p);
                        work.set(i, r, rotated_r);
                        work.set(r, i, rotated_r);
                    }
                }
                for i in 0..n {
                    let g = q.get(i, p);
                    let h = q.get(i, r);
                    q.set(i, p, g - s * (h + g * tau));
                    q.set(i, r, h + s * (g - h * tau));
                }
            }
        }
        converged = off_diagonal_norm(&work) <= threshold;
    }
    if !converged {
        return Err(Error::NoConvergence { sweeps: MAX_SWEEPS });
    }

    let mut pairs: Vec<(f64, usize)> = (0..n).map(|i| (work.get(i, i), i)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let lambda: Vec<f64> = pairs.iter().map(|(v, _)| *v).collect();
    let mut sorted_q = SquareMatrix::zeros(n);
    for (new_col, (_, old_col)) in pairs.iter().enumerate() {
        for i in 0..n {
            sorted_q.set(i, new_col, q.get(i, *old_col));
        }
    }
    Ok(SpectralDecomposition {
        q: sorted_q,
        lambda,
    })
}

/// `f(A)` for a symmetric matrix via the spectral route `Q f(Λ) Qᵀ`.
pub fn mat_func(a: &SquareMatrix, codec: Codec) -> Result<SquareMatrix> {
    Ok(jacobi_eigen(a)?.assemble(|x| codec.forward(x)))
}

/// Truncated power series for `f(A)`: `terms` summands of the exp series,
/// or of the odd (sinh) / even (cosh) halves. The independent oracle for
/// [`mat_func`]; no symmetry requirement.
pub fn taylor_func(a: &SquareMatrix, codec: Codec, terms: usize) -> SquareMatrix {
    assert!(terms >= 1, "need at least one series term");
    let n = a.dim();
    let identity = SquareMatrix::identity(n);
    match codec {
        Codec::Exp => {
            let mut sum = identity.clone();
            let mut term = identity;
            for k in 1..terms as u64 {
                term = term
                    .multiply(a)
                    .expect("same dimension")
                    .scale(1.0 / k as f64);
                sum = sum.add(&term).expect("same dimension");
            }
            sum
        }
        Codec::Sinh | Codec::Cosh => {
            let a2 = a.multiply(a).expect("same dimension");
            let (mut term, offset) = match codec {
                Codec::Sinh => (a.clone(), 1.0),
                _ => (identity, 0.0),
            };
            let mut sum = term.clone();
            for k in 1..terms as u64 {
                // Next exponent is 2k + offset; divide by the two new
                // factorial factors.
                let top = 2.0 * k as f64 + offset;
                term = term
                    .multiply(&a2)
                    .expect("same dimension")
                    .scale(1.0 / (top * (top - 1.0)));
                sum = sum.add(&term).expect("same dimension");
            }
            sum
        }
    }
}
