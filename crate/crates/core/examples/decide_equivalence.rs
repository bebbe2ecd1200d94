//! Decide bisimilarity of words in a simple grammar, with certificates and
//! witnesses.

use std::error::Error;

use session_equiv::grammar::format_word;
use session_equiv::lts::format_trace;
use session_equiv::{
    bounded_word_bisim, build_shared_grammar, decide, parse_signature, parse_type, replay_witness, to_gnf, BisimVerdict,
};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let sig = parse_signature(include_str!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/examples/data/sec5.sig"
    )))?;
    let roots = [parse_type("T")?, parse_type("U")?, parse_type("W")?, parse_type("W;W")?];
    let g = to_gnf(&build_shared_grammar(&roots, &sig)?)?;
    let word = |i| g.start_word(i);

    match decide(&g, &word(0), &word(1))? {
        BisimVerdict::NotEquivalent(w) => {
            println!("T, U: NO, witness {}", format_trace(&w));
            assert!(replay_witness(&g, &word(0), &word(1), &w));
        }
        BisimVerdict::Equivalent(_) => unreachable!("T and U differ"),
    }

    match decide(&g, &word(2), &word(3))? {
        BisimVerdict::Equivalent(cert) => {
            println!("W, W;W: YES");
            println!("{} ~ {}", format_word(&word(2)), format_word(&word(3)));
            print!("{cert}");
            assert!(cert.verify(&g));
        }
        BisimVerdict::NotEquivalent(_) => unreachable!("W never ends"),
    }

    // The bounded approximants agree up to the length of the witness.
    assert!(bounded_word_bisim(&g, &word(0), &word(1), 2));
    assert!(!bounded_word_bisim(&g, &word(0), &word(1), 3));
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
