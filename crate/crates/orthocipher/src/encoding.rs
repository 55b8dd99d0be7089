//! The 63-symbol alphabet, the scalar codec functions, and the `f * g(c)`
//! decode table with ambiguity-aware lookup.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of symbols in the fixed alphabet.
pub const ALPHABET_SIZE: u8 = 63;
/// Code of the space symbol, also used as block padding.
pub const SPACE_CODE: u8 = 53;
/// Default number of coefficient rows in the decode table.
pub const DEFAULT_F_MAX: u32 = 64;
/// Default number of exponent columns in the decode table.
pub const DEFAULT_C_MAX: u32 = 65;

/// The fixed symbol table: `'A'..='Z'` map to 1..=26, `'a'..='z'` to
/// 27..=52, space to 53 and `'0'..='9'` to 54..=63. A bijection by
/// construction; nothing outside these 63 symbols is representable.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Alphabet;

impl Alphabet {
    pub fn code_of(&self, symbol: char) -> Option<u8> {
        match symbol {
            'A'..='Z' => Some(1 + (symbol as u8 - b'A')),
            'a'..='z' => Some(27 + (symbol as u8 - b'a')),
            ' ' => Some(SPACE_CODE),
            '0'..='9' => Some(54 + (symbol as u8 - b'0')),
            _ => None,
        }
    }

    pub fn symbol_of(&self, code: u8) -> Option<char> {
        match code {
            1..=26 => Some((b'A' + code - 1) as char),
            27..=52 => Some((b'a' + code - 27) as char),
            SPACE_CODE => Some(' '),
            54..=63 => Some((b'0' + code - 54) as char),
            _ => None,
        }
    }

    /// All symbols in code order, 1 through 63.
    pub fn symbols(&self) -> impl Iterator<Item = char> + '_ {
        (1..=ALPHABET_SIZE).map(|code| self.symbol_of(code).expect("codes 1..=63 are total"))
    }

    /// Text to integer codes, order preserved.
    pub fn encode(&self, text: &str) -> Result<Vec<u8>> {
        text.chars()
            .enumerate()
            .map(|(position, symbol)| {
                self.code_of(symbol)
                    .ok_or(Error::UnknownSymbol { position, symbol })
            })
            .collect()
    }

    /// Integer codes back to text; the inverse of [`Alphabet::encode`].
    pub fn decode(&self, codes: &[u8]) -> Result<String> {
        codes
            .iter()
            .enumerate()
            .map(|(position, &code)| {
                self.symbol_of(code)
                    .ok_or(Error::InvalidCode { position, code })
            })
            .collect()
    }
}

/// Scalar codec applied to symbol codes before they enter the diagonal
/// matrix. All three are strictly increasing on `[1, ∞)`, so codes map to
/// distinct magnitudes.
///
/// `exp` is the default. `sinh` is the non-periodic alternative; `cosh` is
/// provided for completeness but is not a default anywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Codec {
    Exp,
    Sinh,
    Cosh,
}

impl Codec {
    pub fn forward(self, c: f64) -> f64 {
        match self {
            Codec::Exp => c.exp(),
            Codec::Sinh => c.sinh(),
            Codec::Cosh => c.cosh(),
        }
    }
}

impl fmt::Display for Codec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Codec::Exp => "exp",
            Codec::Sinh => "sinh",
            Codec::Cosh => "cosh",
        })
    }
}

impl FromStr for Codec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "exp" => Ok(Codec::Exp),
            "sinh" => Ok(Codec::Sinh),
            "cosh" => Ok(Codec::Cosh),
            other => Err(format!(
                "unknown codec {other:?}; expected exp, sinh or cosh"
            )),
        }
    }
}

/// The grid `value[f][c] = f * g(c)` for coefficients `f = 1..=f_max` and
/// exponent codes `c = 1..=c_max`. Strictly increasing along both axes.
#[derive(Debug, Clone)]
pub struct DecodeTable {
    codec: Codec,
    f_max: u32,
    c_max: u32,
    values: Vec<f64>,
}

/// One `(f, c)` cell matching a looked-up value.
#[derive(Debug, Clone, PartialEq)]
pub struct LookupCandidate {
    pub f: u32,
    pub c: u32,
    pub relative_error: f64,
}

impl DecodeTable {
    /// Builds the full grid. With the defaults (64 rows, 65 columns) the
    /// largest entry is 64·e⁶⁵ ≈ 1.08e30, comfortably inside f64 range.
    pub fn build(codec: Codec, f_max: u32, c_max: u32) -> DecodeTable {
        assert!(f_max >= 1 && c_max >= 1, "table bounds must be positive");
        let mut values = Vec::with_capacity((f_max * c_max) as usize);
        for f in 1..=f_max {
            for c in 1..=c_max {
                let v = f as f64 * codec.forward(c as f64);
                assert!(v.is_finite(), "table overflow at f={f}, c={c}");
                values.push(v);
            }
        }
        DecodeTable {
            codec,
            f_max,
            c_max,
            values,
        }
    }

    pub fn with_defaults(codec: Codec) -> DecodeTable {
        Self::build(codec, DEFAULT_F_MAX, DEFAULT_C_MAX)
    }

    pub fn codec(&self) -> Codec {
        self.codec
    }

    pub fn f_max(&self) -> u32 {
        self.f_max
    }

    pub fn c_max(&self) -> u32 {
        self.c_max
    }

    /// Cell value for `1 <= f <= f_max`, `1 <= c <= c_max`.
    pub fn value(&self, f: u32, c: u32) -> f64 {
        assert!((1..=self.f_max).contains(&f) && (1..=self.c_max).contains(&c));
        self.values[((f - 1) * self.c_max + (c - 1)) as usize]
    }

    /// All cells `(f, c)` with `|v - f·g(c)| <= rel_tol · f·g(c)`, sorted by
    /// ascending relative error.
    ///
    /// Scans the `c_max` columns and tests the integer coefficients nearest
    /// `v / g(c)`, so a lookup is O(c_max) rather than a full-grid pass.
    /// An empty result means no cell matches; several results mean the
    /// value is ambiguous at this tolerance.
    pub fn lookup(&self, v: f64, rel_tol: f64) -> Vec<LookupCandidate> {
        assert!(v > 0.0, "lookup values must be positive");
        assert!(rel_tol > 0.0, "tolerance must be positive");
        let mut out = Vec::new();
        for c in 1..=self.c_max {
            let forward = self.codec.forward(c as f64);
            let ratio = v / forward;
            // Outside these bounds no coefficient in 1..=f_max can satisfy
            // the tolerance predicate for this column.
            if ratio < 1.0 - rel_tol || ratio > self.f_max as f64 * (1.0 + rel_tol) {
                continue;
            }
            let nearest = ratio.round().min(self.f_max as f64 + 1.0) as i64;
            // The rounded coefficient plus its neighbours covers every f
            // whose tolerance window can contain v.
            for f in [nearest - 1, nearest, nearest + 1] {
                if f < 1 || f > self.f_max as i64 {
                    continue;
                }
                let cell = self.value(f as u32, c);
                let err = (v - cell).abs();
                if err <= rel_tol * cell {
                    out.push(LookupCandidate {
                        f: f as u32,
                        c,
                        relative_error: err / cell,
                    });
                }
            }
        }
        out.sort_by(|a, b| {
            a.relative_error
                .total_cmp(&b.relative_error)
                .then(a.f.cmp(&b.f))
                .then(a.c.cmp(&b.c))
        });
        out.dedup_by(|a, b| a.f == b.f && a.c == b.c);
        out
    }

    /// CSV export: header row of `c` values, one row per `f`, entries at
    /// full double precision (17 significant digits).
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        write!(w, "f")?;
        for c in 1..=self.c_max {
            write!(w, ",{c}")?;
        }
        writeln!(w)?;
        for f in 1..=self.f_max {
            write!(w, "{f}")?;
            for c in 1..=self.c_max {
                write!(w, ",{:.16e}", self.value(f, c))?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}
