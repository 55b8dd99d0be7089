//! Generation, composition, validation and serialization of orthogonal key
//! material.
//!
//! Keys are plain orthogonal matrices. The seeded generator exists so that
//! experiments are reproducible; it makes no pretence of cryptographic
//! randomness, and the scheme itself offers no real security (see the
//! `attack` module).

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SquareMatrix;

/// Orthogonality tolerance required of key matrices.
pub const KEY_ORTHO_TOL: f64 = 1e-10;
/// Tolerance for `M^order = I` checks.
pub const ORDER_TOL: f64 = 1e-9;
/// Default search cap for multiplicative-order detection.
pub const DEFAULT_ORDER_CAP: u64 = 1024;

/// How `random_orthogonal` builds its matrix.
///
/// `Structured` keys are conjugated block rotations by rational angles, so
/// they always have a known finite multiplicative order and the cipher can
/// reduce matrix powers cyclically. `General` keys are products of
/// random-angle plane rotations; they rarely have a finite order, in which
/// case powers are computed directly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeyMode {
    Structured,
    General,
}

impl fmt::Display for KeyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KeyMode::Structured => "structured",
            KeyMode::General => "general",
        })
    }
}

impl FromStr for KeyMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "structured" => Ok(KeyMode::Structured),
            "general" => Ok(KeyMode::General),
            other => Err(format!(
                "unknown key mode {other:?}; expected structured or general"
            )),
        }
    }
}

/// An orthogonal matrix plus its multiplicative order, when one is known.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalKey {
    matrix: SquareMatrix,
    order: Option<u64>,
}

impl OrthogonalKey {
    /// Wraps a matrix after checking orthogonality; detects the order up to
    /// [`DEFAULT_ORDER_CAP`].
    pub fn new(matrix: SquareMatrix) -> Result<Self> {
        let deviation = matrix.orthogonality_deviation();
        if deviation > KEY_ORTHO_TOL {
            return Err(Error::OrthogonalityViolation { deviation });
        }
        let order = matrix.multiplicative_order(DEFAULT_ORDER_CAP, ORDER_TOL);
        Ok(OrthogonalKey { matrix, order })
    }

    fn with_known_order(matrix: SquareMatrix, order: u64) -> Self {
        debug_assert!(
            matrix
                .power(order)
                .max_abs_diff(&SquareMatrix::identity(matrix.dim()))
                <= ORDER_TOL
        );
        OrthogonalKey {
            matrix,
            order: Some(order),
        }
    }

    pub fn matrix(&self) -> &SquareMatrix {
        &self.matrix
    }

    pub fn order(&self) -> Option<u64> {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// Writes the key as JSON with 17-significant-digit decimal entries,
    /// which round-trip `f64` bit-for-bit.
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = KeyFile {
            version: KEY_FILE_VERSION,
            dim: self.dim(),
            order: self.order,
            rows: self
                .matrix
                .to_rows()
                .iter()
                .map(|row| row.iter().map(|v| format!("{v:.16e}")).collect())
                .collect(),
        };
        let json = serde_json::to_string_pretty(&file).expect("key file serializes");
        fs::write(path, json)?;
        Ok(())
    }

    /// Reads a key back, re-validating orthogonality and the stored order.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let file: KeyFile =
            serde_json::from_str(&text).map_err(|e| Error::MalformedKeyFile(e.to_string()))?;
        if file.version != KEY_FILE_VERSION {
            return Err(Error::MalformedKeyFile(format!(
                "unsupported version {}",
                file.version
            )));
        }
        if file.rows.len() != file.dim {
            return Err(Error::MalformedKeyFile(format!(
                "declared dim {} but found {} rows",
                file.dim,
                file.rows.len()
            )));
        }
        let mut rows = Vec::with_capacity(file.dim);
        for row in &file.rows {
            let parsed: std::result::Result<Vec<f64>, _> =
                row.iter().map(|s| s.parse::<f64>()).collect();
            let parsed = parsed.map_err(|e| Error::MalformedKeyFile(format!("bad entry: {e}")))?;
            if parsed.len() != file.dim {
                return Err(Error::MalformedKeyFile(format!(
                    "row of length {} in a dim-{} key",
                    parsed.len(),
                    file.dim
                )));
            }
            rows.push(parsed);
        }
        let matrix =
            SquareMatrix::from_rows(&rows).map_err(|e| Error::MalformedKeyFile(e.to_string()))?;
        let deviation = matrix.orthogonality_deviation();
        if deviation > KEY_ORTHO_TOL {
            return Err(Error::OrthogonalityViolation { deviation });
        }
        if let Some(order) = file.order {
            let drift = matrix
                .power(order)
                .max_abs_diff(&SquareMatrix::identity(matrix.dim()));
            if order == 0 || drift > ORDER_TOL {
                return Err(Error::MalformedKeyFile(format!(
                    "stored order {order} is not satisfied (drift {drift:.3e})"
                )));
            }
        }
        Ok(OrthogonalKey {
            matrix,
            order: file.order,
        })
    }
}

const KEY_FILE_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct KeyFile {
    version: u32,
    dim: usize,
    order: Option<u64>,
    rows: Vec<Vec<String>>,
}

/// A public/private pair of orthogonal keys of equal dimension.
#[derive(Debug, Clone)]
pub struct KeyPair {
    pub public: OrthogonalKey,
    pub private: OrthogonalKey,
}

impl KeyPair {
    /// Draws both keys from one seeded stream, public first.
    pub fn generate(dim: usize, seed: u64, mode: KeyMode) -> Result<Self> {
        let mut rng = StdRng::seed_from_u64(seed);
        let public = random_orthogonal_from_rng(&mut rng, dim, mode)?;
        let private = random_orthogonal_from_rng(&mut rng, dim, mode)?;
        Ok(KeyPair { public, private })
    }

    /// The cipher matrix `C = public * private`.
    ///
    /// The product of two orthogonal matrices is orthogonal, and the same
    /// product can arise from many different pairs, so `C` reveals nothing
    /// about its factors. The factor order is fixed as public-then-private.
    pub fn compose(&self) -> Result<SquareMatrix> {
        let product = self.public.matrix().multiply(self.private.matrix())?;
        let deviation = product.orthogonality_deviation();
        if deviation > KEY_ORTHO_TOL {
            return Err(Error::OrthogonalityViolation { deviation });
        }
        Ok(product)
    }
}

/// Deterministically generates an orthogonal key from a seed.
///
/// Structured mode requires an even dimension: the matrix is `Q R Qᵀ` with
/// `R` block-diagonal 2x2 rotations by angles `2π k/m` (`m <= 16`) and `Q`
/// a random signed permutation. Its order is the lcm of the reduced block
/// orders. General mode multiplies `dim(dim-1)/2` random-angle plane
/// rotations and detects the order, which is usually absent.
pub fn random_orthogonal(dim: usize, seed: u64, mode: KeyMode) -> Result<OrthogonalKey> {
    let mut rng = StdRng::seed_from_u64(seed);
    random_orthogonal_from_rng(&mut rng, dim, mode)
}

fn random_orthogonal_from_rng(
    rng: &mut StdRng,
    dim: usize,
    mode: KeyMode,
) -> Result<OrthogonalKey> {
    if dim < 2 {
        return Err(Error::InvalidDimension {
            dim,
            reason: "keys need dimension at least 2",
        });
    }
    match mode {
        KeyMode::Structured => {
            if !dim.is_multiple_of(2) {
                return Err(Error::InvalidDimension {
                    dim,
                    reason: "structured keys need an even dimension",
                });
            }
            Ok(structured_from_rng(rng, dim))
        }
        KeyMode::General => Ok(general_from_rng(rng, dim)),
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

fn structured_from_rng(rng: &mut StdRng, dim: usize) -> OrthogonalKey {
    let mut rotations = SquareMatrix::zeros(dim);
    let mut order = 1u64;
    for block in 0..dim / 2 {
        let m: u64 = rng.gen_range(2..=16);
        let k: u64 = rng.gen_range(1..m);
        order = lcm(order, m / gcd(k, m));
        let angle = std::f64::consts::TAU * k as f64 / m as f64;
        let (s, c) = angle.sin_cos();
        let i = 2 * block;
        rotations.set(i, i, c);
        rotations.set(i, i + 1, -s);
        rotations.set(i + 1, i, s);
        rotations.set(i + 1, i + 1, c);
    }

    let q = signed_permutation(rng, dim);
    let matrix = q
        .multiply(&rotations)
        .and_then(|qr| qr.multiply(&q.transpose()))
        .expect("same dimension");

    // Conjugation preserves the order; verify the construction numerically.
    let drift = matrix
        .power(order)
        .max_abs_diff(&SquareMatrix::identity(dim));
    assert!(
        drift <= ORDER_TOL,
        "structured key drifted from its order: {drift:.3e}"
    );
    OrthogonalKey::with_known_order(matrix, order)
}

fn signed_permutation(rng: &mut StdRng, dim: usize) -> SquareMatrix {
    let mut targets: Vec<usize> = (0..dim).collect();
    targets.shuffle(rng);
    let mut m = SquareMatrix::zeros(dim);
    for (i, &target) in targets.iter().enumerate() {
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        m.set(target, i, sign);
    }
    m
}

fn general_from_rng(rng: &mut StdRng, dim: usize) -> OrthogonalKey {
    let mut matrix = SquareMatrix::identity(dim);
    for p in 0..dim {
        for q in (p + 1)..dim {
            let angle: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let (s, c) = angle.sin_cos();
            // Left-multiply by the plane rotation G(p, q, angle).
            for col in 0..dim {
                let vp = matrix.get(p, col);
                let vq = matrix.get(q, col);
                matrix.set(p, col, c * vp - s * vq);
                matrix.set(q, col, s * vp + c * vq);
            }
        }
    }
    let order = matrix.multiplicative_order(DEFAULT_ORDER_CAP, ORDER_TOL);
    OrthogonalKey { matrix, order }
}

/// The composed cipher matrix `C` with its order, ready for block
/// encryption. Built either from a key pair or from a single orthogonal
/// matrix used directly as `C`.
#[derive(Debug, Clone)]
pub struct EncodingKey {
    matrix: SquareMatrix,
    order: Option<u64>,
}

impl EncodingKey {
    /// Wraps a matrix with an externally known order (or none, forcing
    /// plain powers). Both the orthogonality and the order claim are
    /// validated.
    pub fn new(matrix: SquareMatrix, order: Option<u64>) -> Result<Self> {
        let deviation = matrix.orthogonality_deviation();
        if deviation > KEY_ORTHO_TOL {
            return Err(Error::OrthogonalityViolation { deviation });
        }
        if let Some(k) = order {
            let drift = matrix
                .power(k)
                .max_abs_diff(&SquareMatrix::identity(matrix.dim()));
            if k == 0 || drift > ORDER_TOL {
                return Err(Error::InvalidDimension {
                    dim: k as usize,
                    reason: "claimed order is not satisfied by the matrix",
                });
            }
        }
        Ok(EncodingKey { matrix, order })
    }

    pub fn from_pair(pair: &KeyPair) -> Result<Self> {
        let matrix = pair.compose()?;
        let order = matrix.multiplicative_order(DEFAULT_ORDER_CAP, ORDER_TOL);
        Ok(EncodingKey { matrix, order })
    }

    pub fn from_key(key: &OrthogonalKey) -> Self {
        EncodingKey {
            matrix: key.matrix().clone(),
            order: key.order(),
        }
    }

    /// Validates orthogonality and detects the order of a raw matrix.
    pub fn from_matrix(matrix: SquareMatrix) -> Result<Self> {
        let key = OrthogonalKey::new(matrix)?;
        Ok(Self::from_key(&key))
    }

    pub fn matrix(&self) -> &SquareMatrix {
        &self.matrix
    }

    pub fn order(&self) -> Option<u64> {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// `C^j`, cyclically reduced when the order is known. Block `j` of a
    /// message is encrypted in the space carried by this power.
    pub fn block_matrix(&self, j: u64) -> SquareMatrix {
        self.matrix.power_reduced(j, self.order)
    }
}
