//! Translate types into grammars and normalize them into simple grammars.

use std::error::Error;

use session_equiv::{build_grammar, parse_signature, parse_type, to_gnf};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let sig = parse_signature(include_str!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/examples/data/input_tree.sig"
    )))?;
    let t = parse_type("InputTree")?;

    let raw = build_grammar(&t, &sig)?;
    println!("raw:\n{}", raw.dump());

    let gnf = to_gnf(&raw)?;
    println!("normalized:\n{}", gnf.dump_reachable());
    println!("{}", gnf.names(&gnf.reachable()));
    assert!(gnf.is_simple());
    assert_eq!(gnf.canonical_dump().lines().count(), 7);

    // Each nonterminal has a norm: the length of a shortest run to the
    // empty word.
    for x in gnf.reachable() {
        println!("|{x}| = {}", gnf.norm_of(x));
    }

    // Transitions of words are read off the productions.
    for (label, w) in gnf.word_step(&[gnf.start()]) {
        println!("X0 --{label}--> {}", session_equiv::grammar::format_word(&w));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
