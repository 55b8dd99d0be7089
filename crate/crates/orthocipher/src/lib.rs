//! An orthogonal-matrix block cipher laboratory.
//!
//! Plaintext symbols map to integer codes, and each block of codes `x` is
//! encrypted as `y = Pʲ (Cʲ)ᵀ D Cʲ x`, where `C` is an orthogonal key
//! matrix, `D = diag(g(xᵢ))` applies a strictly increasing codec function
//! to the codes, and `Pʲ` is an optional permutation layer. Decryption
//! inverts the pipeline with a table-driven candidate search. Key powers
//! reduce cyclically when `C` has finite multiplicative order.
//!
//! The crate also ships the spectral machinery behind the construction
//! ([`matfun`]: `f(A) = Q f(Λ) Qᵀ` for symmetric `A`) and a ciphertext-only
//! attack ([`attack`]) that recovers symbols from small linear combinations
//! of ciphertext components.
//!
//! This is a research artifact for studying *why the construction fails*,
//! not a secure cipher. Do not protect anything with it.
//!
//! Message-level operations run blocks in parallel via rayon when the
//! default `parallel` feature is enabled; disable default features for a
//! fully sequential build.
//!
//! ```
//! use orthocipher::{encrypt_message, decrypt_message, CipherParams, Codec, EncodingKey};
//! use orthocipher::keys::{random_orthogonal, KeyMode};
//!
//! let key = EncodingKey::from_key(&random_orthogonal(4, 7, KeyMode::Structured)?);
//! let params = CipherParams::new(4, Codec::Exp)?;
//! let ct = encrypt_message("CRYPTOGRAPHY", &key, &params)?;
//! assert_eq!(decrypt_message(&ct, &key, &params)?, "CRYPTOGRAPHY");
//! # Ok::<(), orthocipher::Error>(())
//! ```

pub mod attack;
pub mod cipher;
pub mod encoding;
pub mod error;
pub mod keys;
pub mod linalg;
pub mod matfun;

pub use cipher::{
    decrypt_block, decrypt_message, encrypt_block, encrypt_message, split_pad, CipherParams,
    CiphertextBlock, CiphertextMessage, PlaintextBlock,
};
pub use encoding::{Alphabet, Codec, DecodeTable, LookupCandidate};
pub use error::{Error, Result};
pub use keys::{random_orthogonal, EncodingKey, KeyMode, KeyPair, OrthogonalKey};
pub use linalg::{Permutation, SquareMatrix};
