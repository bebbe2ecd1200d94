//! The labelled transition system on types, bounded bisimilarity and
//! distinguishing traces.

use std::error::Error;

use session_equiv::lts::format_trace;
use session_equiv::{distinguishing_trace, k_bisimilar, parse_signature, parse_type, step};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let sig = parse_signature(include_str!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/examples/data/sec5.sig"
    )))?;
    let t = parse_type("T")?;
    let u = parse_type("U")?;

    for (label, next) in step(&t, &sig)? {
        println!("T --{label}--> {next}");
    }

    for k in 0..=3 {
        println!("T ~{k} U: {}", k_bisimilar(&t, &u, k, &sig)?);
    }
    assert!(k_bisimilar(&t, &u, 2, &sig)?);
    assert!(!k_bisimilar(&t, &u, 3, &sig)?);

    let trace = distinguishing_trace(&t, &u, 10, &sig)?.expect("T and U differ");
    println!("distinguishing trace: {}", format_trace(&trace));
    assert_eq!(format_trace(&trace), "!d +go +go");
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
