//! The block pipeline: text → code blocks → per-block conjugated-diagonal
//! encryption with an optional permutation layer → ciphertext, and the
//! inverse with candidate-search decoding.
//!
//! Block `j` (1-based) of a message is encrypted as
//! `y = Pʲ Mᵀ D M x` with `M = Cʲ`, `D = diag(g(x_i))` and the permutation
//! factor present only when a permutation layer is configured. Because `C`
//! is orthogonal, `Mᵀ` serves as `M⁻¹`. Decryption strips `Pʲ`, forms
//! `T = M y` (algebraically `D M x`) and recovers the code vector whose
//! predicted magnitudes match `|T|`.
//!
//! Structural quirks of the scheme surface here rather than being papered
//! over:
//!
//! * A block is *degenerate* when `M x` has a zero component: that
//!   position's symbol is multiplied into nothing and cannot be recovered.
//!   Strict mode (the default) refuses to encrypt such blocks.
//! * Degeneracy also comes in a numerical flavour. The mixing step stores
//!   sums of terms `wᵢ·g(xᵢ)` in plain doubles, so a term more than ~10⁸
//!   times smaller than what it is summed with falls below the mantissa
//!   and is *gone from the ciphertext*; with the exp codec that happens
//!   whenever codes roughly 18 apart share a mixing plane. Strict mode
//!   rejects those positions too (same `DegenerateBlock` error), because
//!   every accepted block must actually decrypt.
//! * When the key's order divides a block index, `M` collapses to the
//!   identity and the block is encrypted as a bare `D x`, which leaks its
//!   symbols to anyone with the decode table. The CLI warns when a message
//!   is long enough for this to happen.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::encoding::{Alphabet, Codec, ALPHABET_SIZE, SPACE_CODE};
use crate::error::{Error, Result};
use crate::keys::EncodingKey;
use crate::linalg::{Permutation, SquareMatrix};

/// Coefficient window searched during decoding: a candidate exponent is
/// kept only if the implied coefficient `|T_i| / g(c)` lands inside it.
const COEFF_MIN: f64 = 0.01;
const COEFF_MAX: f64 = 1000.0;
/// Cap on joint candidate assignments tried per block.
const MAX_JOINT_ASSIGNMENTS: u128 = 1_000_000;
/// Smallest coefficient strict mode will encrypt: twice the decode window
/// floor, so the decoder always sees the true coefficient inside [`COEFF_MIN`].
const MIN_ENCODE_COEFF: f64 = 2.0 * COEFF_MIN;
/// A position whose magnitude is at most this fraction of the values it is
/// summed with has (mostly) fallen out of the 52-bit mantissa; decoding at
/// the default verification tolerance needs a couple of decades of
/// headroom above machine epsilon.
const COLLAPSE_FLOOR: f64 = 3e-8;

/// Everything that parameterizes one encryption run.
#[derive(Debug, Clone, PartialEq)]
pub struct CipherParams {
    pub dim: usize,
    pub codec: Codec,
    pub permutation: Option<Permutation>,
    /// Refuse to encrypt degenerate blocks (default). The permissive
    /// setting encrypts them anyway; decryption then fails on those blocks.
    pub strict_degenerate: bool,
    /// Relative tolerance for matching predicted against observed
    /// magnitudes during decoding.
    pub verify_rel_tol: f64,
    /// Magnitudes at or below this are treated as vanished.
    pub zero_tol: f64,
}

impl CipherParams {
    pub fn new(dim: usize, codec: Codec) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidDimension {
                dim,
                reason: "blocks need at least 2 symbols",
            });
        }
        Ok(CipherParams {
            dim,
            codec,
            permutation: None,
            strict_degenerate: true,
            verify_rel_tol: 1e-6,
            zero_tol: 1e-9,
        })
    }

    pub fn with_permutation(mut self, permutation: Permutation) -> Result<Self> {
        if permutation.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: permutation.dim(),
            });
        }
        self.permutation = Some(permutation);
        Ok(self)
    }

    pub fn permissive(mut self) -> Self {
        self.strict_degenerate = false;
        self
    }
}

/// One block of symbol codes, each in 1..=63.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlaintextBlock {
    codes: Vec<u8>,
}

impl PlaintextBlock {
    pub fn new(codes: Vec<u8>) -> Result<Self> {
        if codes.is_empty() {
            return Err(Error::InvalidDimension {
                dim: 0,
                reason: "blocks cannot be empty",
            });
        }
        for (position, &code) in codes.iter().enumerate() {
            if code == 0 || code > ALPHABET_SIZE {
                return Err(Error::InvalidCode { position, code });
            }
        }
        Ok(PlaintextBlock { codes })
    }

    pub fn codes(&self) -> &[u8] {
        &self.codes
    }
}

/// One block of real ciphertext values.
#[derive(Debug, Clone, PartialEq)]
pub struct CiphertextBlock {
    values: Vec<f64>,
}

impl CiphertextBlock {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidDimension {
                dim: 0,
                reason: "blocks cannot be empty",
            });
        }
        if let Some(position) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { position });
        }
        Ok(CiphertextBlock { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// A framed sequence of ciphertext blocks plus the parameters needed to
/// invert them (everything except the key).
#[derive(Debug, Clone, PartialEq)]
pub struct CiphertextMessage {
    dim: usize,
    codec: Codec,
    permutation: Option<Permutation>,
    pad_count: usize,
    blocks: Vec<CiphertextBlock>,
}

impl CiphertextMessage {
    pub fn new(
        dim: usize,
        codec: Codec,
        permutation: Option<Permutation>,
        pad_count: usize,
        blocks: Vec<CiphertextBlock>,
    ) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidDimension {
                dim,
                reason: "blocks need at least 2 symbols",
            });
        }
        if pad_count >= dim {
            return Err(Error::MalformedCiphertext(format!(
                "pad_count {pad_count} not below dim {dim}"
            )));
        }
        if let Some(p) = &permutation {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch {
                    left: dim,
                    right: p.dim(),
                });
            }
        }
        for (i, block) in blocks.iter().enumerate() {
            if block.values().len() != dim {
                return Err(Error::MalformedCiphertext(format!(
                    "block {} has {} values, expected {dim}",
                    i + 1,
                    block.values().len()
                )));
            }
        }
        Ok(CiphertextMessage {
            dim,
            codec,
            permutation,
            pad_count,
            blocks,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn codec(&self) -> Codec {
        self.codec
    }

    pub fn permutation(&self) -> Option<&Permutation> {
        self.permutation.as_ref()
    }

    pub fn pad_count(&self) -> usize {
        self.pad_count
    }

    pub fn blocks(&self) -> &[CiphertextBlock] {
        &self.blocks
    }

    /// Serializes to JSON with 17-significant-digit decimal values for
    /// bit-exact round trips.
    pub fn to_json(&self) -> String {
        let file = CiphertextFile {
            version: CIPHERTEXT_FILE_VERSION,
            dim: self.dim,
            codec: self.codec,
            permuted: self.permutation.is_some(),
            perm_image: self.permutation.as_ref().map(|p| p.image().to_vec()),
            pad_count: self.pad_count,
            blocks: self
                .blocks
                .iter()
                .map(|b| b.values().iter().map(|v| format!("{v:.16e}")).collect())
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("ciphertext serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: CiphertextFile =
            serde_json::from_str(text).map_err(|e| Error::MalformedCiphertext(e.to_string()))?;
        if file.version != CIPHERTEXT_FILE_VERSION {
            return Err(Error::MalformedCiphertext(format!(
                "unsupported version {}",
                file.version
            )));
        }
        if file.permuted != file.perm_image.is_some() {
            return Err(Error::MalformedCiphertext(
                "permuted flag disagrees with perm_image".into(),
            ));
        }
        let permutation = match file.perm_image {
            Some(image) => Some(
                Permutation::from_image(image)
                    .map_err(|e| Error::MalformedCiphertext(e.to_string()))?,
            ),
            None => None,
        };
        let mut blocks = Vec::with_capacity(file.blocks.len());
        for raw in &file.blocks {
            let parsed: std::result::Result<Vec<f64>, _> =
                raw.iter().map(|s| s.parse::<f64>()).collect();
            let values =
                parsed.map_err(|e| Error::MalformedCiphertext(format!("bad value: {e}")))?;
            blocks.push(
                CiphertextBlock::new(values)
                    .map_err(|e| Error::MalformedCiphertext(e.to_string()))?,
            );
        }
        Self::new(file.dim, file.codec, permutation, file.pad_count, blocks)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

const CIPHERTEXT_FILE_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct CiphertextFile {
    version: u32,
    dim: usize,
    codec: Codec,
    permuted: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    perm_image: Option<Vec<usize>>,
    pad_count: usize,
    blocks: Vec<Vec<String>>,
}

/// Splits codes into blocks of `dim`, padding the last block with spaces.
/// Returns the blocks and how many pad symbols were appended.
pub fn split_pad(codes: &[u8], dim: usize) -> Result<(Vec<PlaintextBlock>, usize)> {
    if codes.is_empty() {
        return Err(Error::EmptyMessage);
    }
    let pad_count = (dim - codes.len() % dim) % dim;
    let mut blocks = Vec::with_capacity(codes.len() / dim + 1);
    let mut padded = codes.to_vec();
    padded.resize(codes.len() + pad_count, SPACE_CODE);
    for chunk in padded.chunks(dim) {
        blocks.push(PlaintextBlock::new(chunk.to_vec())?);
    }
    Ok((blocks, pad_count))
}

fn check_dims(key: &EncodingKey, params: &CipherParams) -> Result<()> {
    if key.dim() != params.dim {
        return Err(Error::DimensionMismatch {
            left: key.dim(),
            right: params.dim,
        });
    }
    if let Some(p) = &params.permutation {
        if p.dim() != params.dim {
            return Err(Error::DimensionMismatch {
                left: params.dim,
                right: p.dim(),
            });
        }
    }
    Ok(())
}

/// Sum of `|M[i][k]| * |y[k]|`: everything position `i`'s term was mixed
/// with, and therefore the scale of the rounding noise in recovering it.
fn interference(m: &SquareMatrix, y: &[f64], i: usize) -> f64 {
    m.row(i).iter().zip(y).map(|(a, b)| (a * b).abs()).sum()
}

/// Encrypts one block: `y = [Pʲ] Mᵀ D M x` with `M = Cʲ`.
///
/// In strict mode the block is refused with `DegenerateBlock` when any
/// position is unrecoverable: its component of `w = M x` vanishes, falls
/// below the decoder's coefficient window, or its term `wᵢ·g(xᵢ)` is so
/// far below the values it is summed into that double precision drops it.
pub fn encrypt_block(
    x: &PlaintextBlock,
    key: &EncodingKey,
    block_index: u64,
    params: &CipherParams,
) -> Result<CiphertextBlock> {
    check_dims(key, params)?;
    if x.codes().len() != params.dim {
        return Err(Error::DimensionMismatch {
            left: params.dim,
            right: x.codes().len(),
        });
    }

    let m = key.block_matrix(block_index);
    let x_real: Vec<f64> = x.codes().iter().map(|&c| f64::from(c)).collect();
    let w = m.apply(&x_real)?;
    let scaled: Vec<f64> = w
        .iter()
        .zip(x.codes())
        .map(|(wi, &code)| wi * params.codec.forward(f64::from(code)))
        .collect();
    let y = m.transpose().apply(&scaled)?;

    if params.strict_degenerate {
        let vanished: Vec<usize> = (0..params.dim)
            .filter(|&i| {
                w[i].abs() <= params.zero_tol.max(MIN_ENCODE_COEFF)
                    || scaled[i].abs() <= COLLAPSE_FLOOR * interference(&m, &y, i)
            })
            .collect();
        if !vanished.is_empty() {
            return Err(Error::DegenerateBlock {
                block: block_index,
                positions: vanished,
            });
        }
    }

    let y = match &params.permutation {
        Some(p) => p.pow(block_index).apply(&y)?,
        None => y,
    };
    CiphertextBlock::new(y)
}

/// Decrypts one block by candidate search.
///
/// After stripping the permutation, `T = M y` has `|T_i| = |(M x)_i| g(x_i)`.
/// For each position the exponent codes whose implied coefficient falls in
/// a plausible window are enumerated, and the joint assignments are
/// verified against that magnitude identity; exactly one must survive.
/// No integer rounding of coefficients is involved, so the search works
/// for any codec and any orthogonal key.
pub fn decrypt_block(
    y: &CiphertextBlock,
    key: &EncodingKey,
    block_index: u64,
    params: &CipherParams,
) -> Result<PlaintextBlock> {
    check_dims(key, params)?;
    let dim = params.dim;
    if y.values().len() != dim {
        return Err(Error::DimensionMismatch {
            left: dim,
            right: y.values().len(),
        });
    }

    let m = key.block_matrix(block_index);
    let unpermuted = match &params.permutation {
        Some(p) => p.pow(block_index).inverse().apply(y.values())?,
        None => y.values().to_vec(),
    };
    let t = m.apply(&unpermuted)?;
    let magnitudes: Vec<f64> = t.iter().map(|v| v.abs()).collect();

    // A magnitude that vanished outright, or sits below the rounding noise
    // of the components it was recovered from, carries no information.
    let vanished: Vec<usize> = (0..dim)
        .filter(|&i| {
            magnitudes[i] <= params.zero_tol
                || magnitudes[i] <= COLLAPSE_FLOOR * interference(&m, &unpermuted, i)
        })
        .collect();
    if !vanished.is_empty() {
        return Err(Error::DegenerateBlock {
            block: block_index,
            positions: vanished,
        });
    }

    // Forward values of every code, indexed by code.
    let mut forward = [0.0f64; ALPHABET_SIZE as usize + 1];
    for (code, slot) in forward.iter_mut().enumerate().skip(1) {
        *slot = params.codec.forward(code as f64);
    }

    // Candidate exponents per position, with the log of the coefficient
    // each would imply.
    let window_centre = (COEFF_MIN.ln() + COEFF_MAX.ln()) / 2.0;
    let mut candidates: Vec<Vec<(u8, f64)>> = Vec::with_capacity(dim);
    for (i, &mag) in magnitudes.iter().enumerate() {
        let mut list: Vec<(u8, f64)> = (1..=ALPHABET_SIZE)
            .filter_map(|code| {
                let coeff = mag / forward[code as usize];
                (COEFF_MIN..=COEFF_MAX)
                    .contains(&coeff)
                    .then(|| (code, coeff.ln()))
            })
            .collect();
        if list.is_empty() {
            return Err(Error::DecodeFailure {
                block: block_index,
                reason: format!("position {i} admits no candidate codes"),
            });
        }
        list.sort_by(|a, b| a.1.total_cmp(&b.1));
        candidates.push(list);
    }

    // Rank candidates by closeness of their implied log-coefficient to the
    // block's empirical scale, so plausible assignments are tried first.
    let mut anchors: Vec<f64> = candidates
        .iter()
        .map(|list| {
            list.iter()
                .map(|&(_, lc)| lc)
                .min_by(|a, b| {
                    (a - window_centre)
                        .abs()
                        .total_cmp(&(b - window_centre).abs())
                })
                .expect("list is nonempty")
        })
        .collect();
    anchors.sort_by(f64::total_cmp);
    let scale = anchors[anchors.len() / 2];
    for list in &mut candidates {
        list.sort_by(|a, b| (a.1 - scale).abs().total_cmp(&(b.1 - scale).abs()));
    }

    let total: u128 = candidates.iter().map(|l| l.len() as u128).product();
    if total > MAX_JOINT_ASSIGNMENTS {
        return Err(Error::DecodeFailure {
            block: block_index,
            reason: format!(
                "joint candidate space of {total} assignments exceeds the \
                 {MAX_JOINT_ASSIGNMENTS} cap"
            ),
        });
    }

    let verify = |codes: &[f64]| -> bool {
        for i in 0..dim {
            let w_i: f64 = m.row(i).iter().zip(codes).map(|(a, b)| a * b).sum();
            let code = codes[i] as usize;
            let predicted = w_i.abs() * forward[code];
            if (predicted - magnitudes[i]).abs() > params.verify_rel_tol * magnitudes[i] {
                return false;
            }
        }
        true
    };

    // Odometer over the ranked candidate lists; stop as soon as a second
    // consistent assignment proves ambiguity.
    let mut indices = vec![0usize; dim];
    let mut codes_real = vec![0.0f64; dim];
    let mut survivor: Option<Vec<u8>> = None;
    'outer: loop {
        for i in 0..dim {
            codes_real[i] = f64::from(candidates[i][indices[i]].0);
        }
        if verify(&codes_real) {
            let found: Vec<u8> = (0..dim).map(|i| candidates[i][indices[i]].0).collect();
            if survivor.is_some() {
                return Err(Error::AmbiguousDecode {
                    block: block_index,
                    count: 2,
                });
            }
            survivor = Some(found);
        }
        // Advance the odometer.
        for i in (0..dim).rev() {
            indices[i] += 1;
            if indices[i] < candidates[i].len() {
                continue 'outer;
            }
            indices[i] = 0;
        }
        break;
    }

    match survivor {
        Some(codes) => PlaintextBlock::new(codes),
        None => Err(Error::DecodeFailure {
            block: block_index,
            reason: "no consistent plaintext assignment found".into(),
        }),
    }
}

/// Encrypts a whole message: encode, split into padded blocks, then
/// encrypt block `j` with `Cʲ` (and `Pʲ` when configured). Blocks are
/// independent and processed in parallel when the `parallel` feature is
/// enabled.
pub fn encrypt_message(
    text: &str,
    key: &EncodingKey,
    params: &CipherParams,
) -> Result<CiphertextMessage> {
    check_dims(key, params)?;
    let codes = Alphabet.encode(text)?;
    let (blocks, pad_count) = split_pad(&codes, params.dim)?;

    #[cfg(feature = "parallel")]
    let results: Vec<Result<CiphertextBlock>> = {
        use rayon::prelude::*;
        blocks
            .par_iter()
            .enumerate()
            .map(|(i, block)| encrypt_block(block, key, i as u64 + 1, params))
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<CiphertextBlock>> = blocks
        .iter()
        .enumerate()
        .map(|(i, block)| encrypt_block(block, key, i as u64 + 1, params))
        .collect();

    let encrypted = results.into_iter().collect::<Result<Vec<_>>>()?;
    CiphertextMessage::new(
        params.dim,
        params.codec,
        params.permutation.clone(),
        pad_count,
        encrypted,
    )
}

/// Decrypts a whole message and strips the padding. `params` must agree
/// with the ciphertext header on dimension, codec and permutation.
pub fn decrypt_message(
    ct: &CiphertextMessage,
    key: &EncodingKey,
    params: &CipherParams,
) -> Result<String> {
    check_dims(key, params)?;
    if params.dim != ct.dim() {
        return Err(Error::ParamsMismatch(format!(
            "params dim {} vs ciphertext dim {}",
            params.dim,
            ct.dim()
        )));
    }
    if params.codec != ct.codec() {
        return Err(Error::ParamsMismatch(format!(
            "params codec {} vs ciphertext codec {}",
            params.codec,
            ct.codec()
        )));
    }
    if params.permutation.as_ref() != ct.permutation() {
        return Err(Error::ParamsMismatch(
            "permutation layer differs between params and ciphertext".into(),
        ));
    }

    #[cfg(feature = "parallel")]
    let results: Vec<Result<PlaintextBlock>> = {
        use rayon::prelude::*;
        ct.blocks()
            .par_iter()
            .enumerate()
            .map(|(i, block)| decrypt_block(block, key, i as u64 + 1, params))
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<PlaintextBlock>> = ct
        .blocks()
        .iter()
        .enumerate()
        .map(|(i, block)| decrypt_block(block, key, i as u64 + 1, params))
        .collect();

    let blocks = results.into_iter().collect::<Result<Vec<_>>>()?;
    let mut codes: Vec<u8> = blocks
        .iter()
        .flat_map(|b| b.codes().iter().copied())
        .collect();
    codes.truncate(codes.len().saturating_sub(ct.pad_count()));
    Alphabet.decode(&codes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    /// Two 45-degree plane rotations on the diagonal: orthogonal, order 8.
    fn rot45_key() -> EncodingKey {
        let s = FRAC_1_SQRT_2;
        let c = SquareMatrix::from_rows(&[
            vec![s, -s, 0.0, 0.0],
            vec![s, s, 0.0, 0.0],
            vec![0.0, 0.0, s, -s],
            vec![0.0, 0.0, s, s],
        ])
        .unwrap();
        EncodingKey::from_matrix(c).unwrap()
    }

    fn shift_perm() -> Permutation {
        Permutation::from_image(vec![3, 0, 1, 2]).unwrap()
    }

    fn params4() -> CipherParams {
        CipherParams::new(4, Codec::Exp).unwrap()
    }

    fn assert_components(got: &CiphertextBlock, want: &[f64]) {
        assert_eq!(got.values().len(), want.len());
        for (i, (g, w)) in got.values().iter().zip(want).enumerate() {
            assert!(
                (g - w).abs() <= 1e-12 * w.abs(),
                "component {i}: got {g:e}, want {w:e}"
            );
        }
    }

    fn e(x: f64) -> f64 {
        x.exp()
    }

    #[test]
    fn splits_the_worked_example_into_three_blocks() {
        let codes = Alphabet.encode("CRYPTOGRAPHY").unwrap();
        let (blocks, pad) = split_pad(&codes, 4).unwrap();
        assert_eq!(pad, 0);
        let codes: Vec<&[u8]> = blocks.iter().map(|b| b.codes()).collect();
        assert_eq!(
            codes,
            vec![
                &[3, 18, 25, 16][..],
                &[20, 15, 7, 18][..],
                &[1, 16, 8, 25][..]
            ]
        );
    }

    #[test]
    fn pads_the_tail_block_with_spaces() {
        let (blocks, pad) = split_pad(&[1, 2, 3, 4, 5], 4).unwrap();
        assert_eq!(pad, 3);
        assert_eq!(blocks.len(), 2);
        assert_eq!(blocks[1].codes(), &[5, SPACE_CODE, SPACE_CODE, SPACE_CODE]);

        let (blocks, pad) = split_pad(&[1, 2, 3, 4], 4).unwrap();
        assert_eq!((blocks.len(), pad), (1, 0));

        assert!(matches!(split_pad(&[], 4), Err(Error::EmptyMessage)));
    }

    #[test]
    fn encrypts_block_one_of_the_worked_example() {
        let x = PlaintextBlock::new(vec![3, 18, 25, 16]).unwrap();
        let y = encrypt_block(&x, &rot45_key(), 1, &params4()).unwrap();
        let want = [
            0.5 * (21.0 * e(18.0) - 15.0 * e(3.0)),
            0.5 * (21.0 * e(18.0) + 15.0 * e(3.0)),
            0.5 * (41.0 * e(16.0) + 9.0 * e(25.0)),
            0.5 * (41.0 * e(16.0) - 9.0 * e(25.0)),
        ];
        assert_components(&y, &want);
    }

    #[test]
    fn encrypts_block_two_through_the_quarter_turn() {
        let x = PlaintextBlock::new(vec![20, 15, 7, 18]).unwrap();
        let y = encrypt_block(&x, &rot45_key(), 2, &params4()).unwrap();
        let want = [20.0 * e(15.0), 15.0 * e(20.0), 7.0 * e(18.0), 18.0 * e(7.0)];
        assert_components(&y, &want);
    }

    #[test]
    fn permutation_layer_rotates_the_output() {
        let x = PlaintextBlock::new(vec![3, 18, 25, 16]).unwrap();
        let params = params4().with_permutation(shift_perm()).unwrap();
        let y = encrypt_block(&x, &rot45_key(), 1, &params).unwrap();
        let want = [
            0.5 * (21.0 * e(18.0) + 15.0 * e(3.0)),
            0.5 * (41.0 * e(16.0) + 9.0 * e(25.0)),
            0.5 * (41.0 * e(16.0) - 9.0 * e(25.0)),
            0.5 * (21.0 * e(18.0) - 15.0 * e(3.0)),
        ];
        assert_components(&y, &want);
    }

    #[test]
    fn decrypts_the_worked_example_blocks() {
        let key = rot45_key();
        let params = params4();
        for (j, codes) in [
            (1u64, vec![3u8, 18, 25, 16]),
            (2, vec![20, 15, 7, 18]),
            (3, vec![1, 16, 8, 25]),
        ] {
            let x = PlaintextBlock::new(codes.clone()).unwrap();
            let y = encrypt_block(&x, &key, j, &params).unwrap();
            let back = decrypt_block(&y, &key, j, &params).unwrap();
            assert_eq!(back.codes(), &codes[..], "block {j}");
        }
    }

    #[test]
    fn repeated_letters_can_vanish_under_the_key() {
        // "AAAA": (C x) = (0, sqrt(2), 0, sqrt(2)); positions 0 and 2 are
        // annihilated, so strict mode refuses.
        let x = PlaintextBlock::new(vec![1, 1, 1, 1]).unwrap();
        let err = encrypt_block(&x, &rot45_key(), 1, &params4()).unwrap_err();
        match err {
            Error::DegenerateBlock { block, positions } => {
                assert_eq!(block, 1);
                assert_eq!(positions, vec![0, 2]);
            }
            other => panic!("expected DegenerateBlock, got {other:?}"),
        }
    }

    #[test]
    fn permissive_mode_encrypts_but_cannot_decrypt_degenerates() {
        let x = PlaintextBlock::new(vec![1, 1, 1, 1]).unwrap();
        let params = params4().permissive();
        let y = encrypt_block(&x, &rot45_key(), 1, &params).unwrap();
        let err = decrypt_block(&y, &rot45_key(), 1, &params).unwrap_err();
        assert!(matches!(err, Error::DegenerateBlock { .. }));
    }

    #[test]
    fn decoding_ignores_component_signs() {
        // Flipping signs of T's components must not change the decode:
        // rebuild y' = M^T S T for sign patterns S and compare.
        let key = rot45_key();
        let params = params4();
        let x = PlaintextBlock::new(vec![5, 12, 53, 61]).unwrap();
        let j = 3;
        let y = encrypt_block(&x, &key, j, &params).unwrap();
        let m = key.block_matrix(j);
        let t = m.apply(y.values()).unwrap();
        for pattern in 0u32..16 {
            let flipped: Vec<f64> = t
                .iter()
                .enumerate()
                .map(|(i, v)| if pattern & (1 << i) != 0 { -v } else { *v })
                .collect();
            let y2 = CiphertextBlock::new(m.transpose().apply(&flipped).unwrap()).unwrap();
            let back = decrypt_block(&y2, &key, j, &params).unwrap();
            assert_eq!(back.codes(), x.codes(), "pattern {pattern:04b}");
        }
    }

    #[test]
    fn magnitude_identity_holds_per_component() {
        // |T_i| = |(Mx)_i| g(x_i) up to the rounding noise of whatever the
        // term was mixed with; with tightly spread codes that noise stays
        // under 1e-12 relative.
        let key = rot45_key();
        let params = params4();
        for (codes, relative_only) in [(vec![20u8, 22, 19, 23], true), (vec![9, 21, 17, 28], false)]
        {
            let x = PlaintextBlock::new(codes).unwrap();
            for j in 1..=9 {
                let y = encrypt_block(&x, &key, j, &params).unwrap();
                let m = key.block_matrix(j);
                let t = m.apply(y.values()).unwrap();
                let w = m
                    .apply(&x.codes().iter().map(|&c| f64::from(c)).collect::<Vec<_>>())
                    .unwrap();
                for i in 0..4 {
                    let want = w[i].abs() * params.codec.forward(f64::from(x.codes()[i]));
                    let noise = if relative_only {
                        0.0
                    } else {
                        16.0 * f64::EPSILON * interference(&m, y.values(), i)
                    };
                    assert!(
                        (t[i].abs() - want).abs() <= 1e-12 * want + noise,
                        "j={j} i={i}"
                    );
                }
            }
        }
    }

    #[test]
    fn block_index_at_the_key_order_collapses_to_diagonal() {
        // j = 8 with an order-8 key: M = I, so y_i = g(x_i) * x_i. The
        // block still round-trips, it just offers no mixing at all.
        let key = rot45_key();
        let params = params4();
        let x = PlaintextBlock::new(vec![2, 9, 27, 40]).unwrap();
        let y = encrypt_block(&x, &key, 8, &params).unwrap();
        for (i, &code) in x.codes().iter().enumerate() {
            let want = f64::from(code) * e(f64::from(code));
            assert!((y.values()[i] - want).abs() <= 1e-12 * want);
        }
        let back = decrypt_block(&y, &key, 8, &params).unwrap();
        assert_eq!(back.codes(), x.codes());
    }

    #[test]
    fn six_symbol_blocks_exceed_the_search_cap() {
        // Mid-table magnitudes admit ~12 candidate exponents per position,
        // so six positions put the joint space past the 10^6 cap and the
        // decoder refuses rather than grind. Practical block sizes are 2-5.
        let key = EncodingKey::from_key(
            &crate::keys::random_orthogonal(6, 9, crate::keys::KeyMode::General).unwrap(),
        );
        let params = CipherParams::new(6, Codec::Exp).unwrap();
        let x = PlaintextBlock::new(vec![30, 33, 36, 31, 34, 38]).unwrap();
        let y = encrypt_block(&x, &key, 1, &params).unwrap();
        match decrypt_block(&y, &key, 1, &params) {
            Err(Error::DecodeFailure { reason, .. }) => {
                assert!(reason.contains("cap"), "{reason}");
            }
            other => panic!("expected the cap to trip, got {other:?}"),
        }
    }

    #[test]
    fn whole_message_round_trips_with_and_without_permutation() {
        let key = rot45_key();
        for permuted in [false, true] {
            let mut params = params4();
            if permuted {
                params = params.with_permutation(shift_perm()).unwrap();
            }
            let ct = encrypt_message("CRYPTOGRAPHY", &key, &params).unwrap();
            assert_eq!(ct.blocks().len(), 3);
            assert_eq!(ct.pad_count(), 0);
            let back = decrypt_message(&ct, &key, &params).unwrap();
            assert_eq!(back, "CRYPTOGRAPHY");
        }
    }

    #[test]
    fn single_symbol_message_is_padded_out() {
        // A quarter-turn key mixes nothing (each plane is a signed
        // permutation), so even the wide code spread of "C" against three
        // pad spaces survives.
        let quarter = EncodingKey::from_matrix(rot45_key().matrix().power(2)).unwrap();
        let params = params4();
        let ct = encrypt_message("C", &quarter, &params).unwrap();
        assert_eq!(ct.blocks().len(), 1);
        assert_eq!(ct.pad_count(), 3);
        assert_eq!(decrypt_message(&ct, &quarter, &params).unwrap(), "C");
    }

    #[test]
    fn wide_code_spread_in_a_mixing_plane_is_rejected() {
        // Codes 3 and 53 share a 45-degree plane: the small term is about
        // e^50 below what it is summed with, far outside the mantissa, so
        // strict mode refuses rather than emit an undecryptable block.
        let err = encrypt_message("C", &rot45_key(), &params4()).unwrap_err();
        match err {
            Error::DegenerateBlock {
                block: 1,
                positions,
            } => {
                // Position 2 also vanishes outright: the two pad spaces are
                // equal, so their difference is zero.
                assert!(positions.contains(&2));
            }
            other => panic!("expected DegenerateBlock, got {other:?}"),
        }
    }

    #[test]
    fn general_keys_round_trip_too() {
        // A general-mode key mixes every position with every other, so the
        // narrow code band keeps all blocks recoverable.
        let key = EncodingKey::from_key(
            &crate::keys::random_orthogonal(4, 5, crate::keys::KeyMode::General).unwrap(),
        );
        assert_eq!(key.order(), None);
        let params = params4();
        let message: String = (0..24u8).map(|i| char::from(b'H' + (i * 3) % 12)).collect();
        let ct = encrypt_message(&message, &key, &params).unwrap();
        assert_eq!(decrypt_message(&ct, &key, &params).unwrap(), message);
    }

    #[test]
    fn sinh_codec_round_trips_too() {
        let key = rot45_key();
        let params = CipherParams::new(4, Codec::Sinh)
            .unwrap()
            .with_permutation(shift_perm())
            .unwrap();
        let ct = encrypt_message("knights", &key, &params).unwrap();
        assert_eq!(decrypt_message(&ct, &key, &params).unwrap(), "knights");
    }

    #[test]
    fn cosh_codec_round_trips_too() {
        // Not a default anywhere, but injective on codes >= 1 so the
        // pipeline contract holds.
        let key = rot45_key();
        let params = CipherParams::new(4, Codec::Cosh).unwrap();
        let ct = encrypt_message("knights", &key, &params).unwrap();
        assert_eq!(ct.codec(), Codec::Cosh);
        assert_eq!(decrypt_message(&ct, &key, &params).unwrap(), "knights");
    }

    #[test]
    fn wrong_key_fails_to_decode() {
        let key = rot45_key();
        let params = params4();
        let ct = encrypt_message("HEROGOES", &key, &params).unwrap();
        let wrong = EncodingKey::from_key(
            &crate::keys::random_orthogonal(4, 12345, crate::keys::KeyMode::General).unwrap(),
        );
        let err = decrypt_message(&ct, &wrong, &params).unwrap_err();
        assert!(
            matches!(
                err,
                Error::DecodeFailure { .. } | Error::AmbiguousDecode { .. }
            ),
            "got {err:?}"
        );
    }

    #[test]
    fn params_must_match_the_ciphertext_header() {
        let key = rot45_key();
        let params = params4();
        let ct = encrypt_message("CRYPTOGRAPHY", &key, &params).unwrap();
        let other = params4().with_permutation(shift_perm()).unwrap();
        assert!(matches!(
            decrypt_message(&ct, &key, &other),
            Err(Error::ParamsMismatch(_))
        ));
        let sinh_params = CipherParams::new(4, Codec::Sinh).unwrap();
        assert!(matches!(
            decrypt_message(&ct, &key, &sinh_params),
            Err(Error::ParamsMismatch(_))
        ));
    }

    #[test]
    fn ciphertext_json_round_trips_bit_for_bit() {
        let key = rot45_key();
        let params = params4().with_permutation(shift_perm()).unwrap();
        let ct = encrypt_message("CRYPTOID", &key, &params).unwrap();
        let back = CiphertextMessage::from_json(&ct.to_json()).unwrap();
        assert_eq!(back, ct);
    }

    #[test]
    fn malformed_ciphertext_json_is_rejected() {
        assert!(matches!(
            CiphertextMessage::from_json("{"),
            Err(Error::MalformedCiphertext(_))
        ));
        // permuted flag without an image
        let bad = r#"{"version":1,"dim":4,"codec":"exp","permuted":true,
                      "pad_count":0,"blocks":[]}"#;
        assert!(matches!(
            CiphertextMessage::from_json(bad),
            Err(Error::MalformedCiphertext(_))
        ));
        // pad_count out of range
        let bad = r#"{"version":1,"dim":4,"codec":"exp","permuted":false,
                      "pad_count":4,"blocks":[]}"#;
        assert!(CiphertextMessage::from_json(bad).is_err());
    }
}
