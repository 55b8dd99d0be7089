//! The worked reference example, end to end: encrypt CRYPTOGRAPHY under a
//! 4x4 orthogonal key of order 8, decrypt it, show what the degeneracy
//! guard refuses, then break the ciphertext without the key.
//!
//! Run with `cargo run -p orthocipher --example walkthrough`.

use std::f64::consts::FRAC_1_SQRT_2;

use orthocipher::attack::attack_report;
use orthocipher::cipher::{decrypt_message, encrypt_message, CipherParams};
use orthocipher::encoding::{Alphabet, Codec, DecodeTable};
use orthocipher::keys::EncodingKey;
use orthocipher::linalg::{Permutation, SquareMatrix};
use orthocipher::Error;

fn main() -> Result<(), Error> {
    // Two 45-degree plane rotations stacked on the diagonal: orthogonal,
    // with multiplicative order 8.
    let s = FRAC_1_SQRT_2;
    let c = SquareMatrix::from_rows(&[
        vec![s, -s, 0.0, 0.0],
        vec![s, s, 0.0, 0.0],
        vec![0.0, 0.0, s, -s],
        vec![0.0, 0.0, s, s],
    ])?;
    let key = EncodingKey::from_matrix(c)?;
    println!(
        "key: 4x4 orthogonal, detected order {:?}",
        key.order().unwrap()
    );

    let message = "CRYPTOGRAPHY";
    let codes = Alphabet.encode(message)?;
    println!("message: {message}  codes: {codes:?}");

    // Cyclic-shift permutation layer: block j is scrambled by its j-th power.
    let params = CipherParams::new(4, Codec::Exp)?
        .with_permutation(Permutation::from_image(vec![3, 0, 1, 2])?)?;

    let ct = encrypt_message(message, &key, &params)?;
    println!("\nciphertext ({} blocks):", ct.blocks().len());
    for (i, block) in ct.blocks().iter().enumerate() {
        let rendered: Vec<String> = block.values().iter().map(|v| format!("{v:.6e}")).collect();
        println!("  block {}: [{}]", i + 1, rendered.join(", "));
    }

    let recovered = decrypt_message(&ct, &key, &params)?;
    println!("\ndecrypted: {recovered}");
    assert_eq!(recovered, message);

    // The scheme cannot represent every block: equal codes meeting a
    // 45-degree plane are annihilated outright, and a code ~18 below its
    // plane partner falls out of the double-precision mantissa. Strict
    // mode refuses both up front.
    match encrypt_message("AAAA", &key, &params) {
        Err(Error::DegenerateBlock { block, positions }) => {
            println!("\nAAAA refused: block {block} loses positions {positions:?}");
        }
        other => panic!("expected a degenerate block, got {other:?}"),
    }

    // Now the attack: no key, just +/-1 combinations of ciphertext
    // components looked up in the f*g(c) table.
    let table = DecodeTable::with_defaults(Codec::Exp);
    let report = attack_report(&ct, &table, 1, 1e-4)?;
    println!("\nciphertext-only attack (coefficient bound 1, tolerance 1e-4):");
    for block in &report.blocks {
        let status = if block.resolved {
            "resolved"
        } else {
            "unresolved"
        };
        println!("  block {} ({status}):", block.block);
        for (finding, symbol) in block.findings.iter().zip(&block.symbols) {
            println!(
                "    combo {:?} = {:.4e}  ->  {} * g({})  symbol {}",
                finding.combo,
                finding.matched_value,
                finding.coefficient,
                finding.exponent,
                symbol.map_or("?".to_string(), |c| c.to_string()),
            );
        }
    }
    println!("\nEvery block leaks its symbols to plain +/-1 sums; so much for the key.");
    Ok(())
}
