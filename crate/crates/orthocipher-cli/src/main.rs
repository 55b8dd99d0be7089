//! Command-line front end for the orthogonal-matrix block cipher: key
//! generation, encryption, decryption, the ciphertext-only attack, and the
//! decode-table export.
//!
//! Every library error maps to its own exit code and a diagnostic naming
//! the failing block or position; malformed input never panics.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand};

use orthocipher::attack::attack_report;
use orthocipher::cipher::{decrypt_message, encrypt_message, CipherParams, CiphertextMessage};
use orthocipher::encoding::{Codec, DecodeTable, DEFAULT_C_MAX, DEFAULT_F_MAX};
use orthocipher::keys::{EncodingKey, KeyMode, KeyPair, OrthogonalKey};
use orthocipher::linalg::Permutation;
use orthocipher::Error;

#[derive(Parser)]
#[command(
    name = "orthocipher",
    about = "Orthogonal-matrix block cipher laboratory (research toy, not secure)",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a public/private pair of orthogonal keys.
    Keygen {
        /// Block size; must be even in structured mode.
        #[arg(long)]
        dim: usize,
        /// Seed for the deterministic generator.
        #[arg(long)]
        seed: u64,
        /// structured (known finite order) or general (random rotations).
        #[arg(long, default_value = "structured", value_parser = KeyMode::from_str)]
        mode: KeyMode,
        /// Two comma-separated paths: public.key,private.key
        #[arg(long)]
        out: String,
    },
    /// Encrypt a text file into a ciphertext JSON file.
    Encrypt {
        /// Two comma-separated paths: public.key,private.key
        #[arg(long)]
        key: String,
        /// Plaintext file (alphabet symbols only; trailing newline ignored).
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Permutation image, e.g. "1,2,3,0"; omitted = no permutation layer.
        #[arg(long)]
        perm: Option<String>,
        #[arg(long, default_value = "exp", value_parser = Codec::from_str)]
        codec: Codec,
        /// Encrypt degenerate blocks instead of refusing (decryption will
        /// fail on them).
        #[arg(long)]
        permissive: bool,
    },
    /// Decrypt a ciphertext JSON file back to text.
    Decrypt {
        /// Two comma-separated paths: public.key,private.key
        #[arg(long)]
        key: String,
        #[arg(long = "in")]
        input: PathBuf,
        /// Output file; omitted prints the plaintext to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Search ciphertext blocks for pure table terms without a key.
    Attack {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 1)]
        coeff_bound: i64,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Export the decode table as CSV.
    Table {
        #[arg(long, default_value = "exp", value_parser = Codec::from_str)]
        codec: Codec,
        #[arg(long, default_value_t = DEFAULT_F_MAX)]
        f_max: u32,
        #[arg(long, default_value_t = DEFAULT_C_MAX)]
        c_max: u32,
        #[arg(long)]
        out: PathBuf,
    },
}

enum CliError {
    Usage(String),
    Lib(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

/// One exit code per failure class, so scripts can tell them apart.
fn exit_code(err: &CliError) -> u8 {
    match err {
        CliError::Usage(_) => 2,
        CliError::Lib(e) => match e {
            Error::Io(_) => 3,
            Error::DimensionMismatch { .. } => 4,
            Error::InvalidDimension { .. } => 5,
            Error::NonFinite { .. } => 6,
            Error::OrthogonalityViolation { .. } => 7,
            Error::UnknownSymbol { .. } => 8,
            Error::InvalidCode { .. } => 9,
            Error::DegenerateBlock { .. } => 10,
            Error::DecodeFailure { .. } => 11,
            Error::AmbiguousDecode { .. } => 12,
            Error::NotSymmetric { .. } => 13,
            Error::NoConvergence { .. } => 14,
            Error::CombinationSpaceTooLarge { .. } => 15,
            Error::MalformedKeyFile(_) => 16,
            Error::MalformedCiphertext(_) => 17,
            Error::EmptyMessage => 18,
            Error::ParamsMismatch(_) => 19,
        },
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let message = match &err {
                CliError::Usage(m) => m.clone(),
                CliError::Lib(e) => e.to_string(),
            };
            eprintln!("error: {message}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn split_key_paths(spec: &str) -> Result<(PathBuf, PathBuf), CliError> {
    match spec.split_once(',') {
        Some((public, private)) if !public.is_empty() && !private.is_empty() => {
            Ok((PathBuf::from(public), PathBuf::from(private)))
        }
        _ => Err(CliError::Usage(format!(
            "--key/--out expects two comma-separated paths, got {spec:?}"
        ))),
    }
}

fn load_encoding_key(spec: &str) -> Result<EncodingKey, CliError> {
    let (public_path, private_path) = split_key_paths(spec)?;
    let pair = KeyPair {
        public: OrthogonalKey::load(&public_path)?,
        private: OrthogonalKey::load(&private_path)?,
    };
    Ok(EncodingKey::from_pair(&pair)?)
}

fn parse_permutation(spec: &str, dim: usize) -> Result<Permutation, CliError> {
    let image: Result<Vec<usize>, _> = spec.split(',').map(|s| s.trim().parse()).collect();
    let image = image.map_err(|e| CliError::Usage(format!("bad permutation {spec:?}: {e}")))?;
    if image.len() != dim {
        return Err(CliError::Usage(format!(
            "permutation has {} entries but the key dimension is {dim}",
            image.len()
        )));
    }
    Ok(Permutation::from_image(image)?)
}

fn read_message(path: &Path) -> Result<String, CliError> {
    let raw = fs::read_to_string(path).map_err(Error::from)?;
    Ok(raw.trim_end_matches(['\n', '\r']).to_string())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Keygen {
            dim,
            seed,
            mode,
            out,
        } => {
            let (public_path, private_path) = split_key_paths(&out)?;
            let pair = KeyPair::generate(dim, seed, mode)?;
            pair.public.save(&public_path)?;
            pair.private.save(&private_path)?;
            let order = match EncodingKey::from_pair(&pair)?.order() {
                Some(k) => format!("order {k}"),
                None => "no detected order".to_string(),
            };
            println!(
                "wrote {} and {} (dim {dim}, composed key has {order})",
                public_path.display(),
                private_path.display()
            );
            Ok(())
        }

        Command::Encrypt {
            key,
            input,
            out,
            perm,
            codec,
            permissive,
        } => {
            let key = load_encoding_key(&key)?;
            let message = read_message(&input)?;
            let mut params = CipherParams::new(key.dim(), codec)?;
            if let Some(spec) = perm {
                params = params.with_permutation(parse_permutation(&spec, key.dim())?)?;
            }
            if permissive {
                params = params.permissive();
            }
            let ct = encrypt_message(&message, &key, &params)?;
            if let Some(order) = key.order() {
                if ct.blocks().len() as u64 >= order {
                    eprintln!(
                        "warning: block indices divisible by the key order {order} encrypt \
                         through the identity matrix and leak their diagonal directly"
                    );
                }
            }
            ct.save(&out)?;
            println!("wrote {} ({} blocks)", out.display(), ct.blocks().len());
            Ok(())
        }

        Command::Decrypt { key, input, out } => {
            let key = load_encoding_key(&key)?;
            let ct = CiphertextMessage::load(&input)?;
            let mut params = CipherParams::new(ct.dim(), ct.codec())?;
            if let Some(p) = ct.permutation() {
                params = params.with_permutation(p.clone())?;
            }
            let plaintext = decrypt_message(&ct, &key, &params)?;
            match out {
                Some(path) => {
                    fs::write(&path, &plaintext).map_err(Error::from)?;
                    println!("wrote {}", path.display());
                }
                None => println!("{plaintext}"),
            }
            Ok(())
        }

        Command::Attack {
            input,
            coeff_bound,
            tol,
            out,
        } => {
            if coeff_bound < 1 {
                return Err(CliError::Usage("--coeff-bound must be at least 1".into()));
            }
            if tol <= 0.0 {
                return Err(CliError::Usage("--tol must be positive".into()));
            }
            let ct = CiphertextMessage::load(&input)?;
            let table = DecodeTable::with_defaults(ct.codec());
            let report = attack_report(&ct, &table, coeff_bound, tol)?;
            for block in &report.blocks {
                let status = if block.resolved {
                    "resolved"
                } else {
                    "unresolved"
                };
                let hypotheses: String = block.symbols.iter().map(|s| s.unwrap_or('?')).collect();
                println!(
                    "block {}: {} findings, {status}{}{}",
                    block.block,
                    block.findings.len(),
                    if hypotheses.is_empty() {
                        ""
                    } else {
                        ", symbols "
                    },
                    hypotheses
                );
            }
            report.save(&out)?;
            println!("wrote {}", out.display());
            Ok(())
        }

        Command::Table {
            codec,
            f_max,
            c_max,
            out,
        } => {
            if f_max < 1 || c_max < 1 {
                return Err(CliError::Usage("table bounds must be at least 1".into()));
            }
            let table = DecodeTable::build(codec, f_max, c_max);
            let mut buf = Vec::new();
            table.write_csv(&mut buf).map_err(Error::from)?;
            fs::write(&out, buf).map_err(Error::from)?;
            println!("wrote {} ({f_max} rows x {c_max} columns)", out.display());
            Ok(())
        }
    }
}
