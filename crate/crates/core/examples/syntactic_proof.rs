//! Search for derivations in the syntactic equivalence rules.

use std::error::Error;

use session_equiv::{parse_signature, parse_type, syntactic_check, Verdict};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let sig = parse_signature("X = +{go: X}\nY = +{go: +{go: Y}}")?;
    let pairs = [
        ("+{a: !int, b: skip};?int", "+{a: !int;?int, b: ?int}"),
        ("X", "Y"),
        ("!int;skip", "!int"),
        ("unit;skip", "skip"),
        ("X", "+{go: skip}"),
    ];
    for (t, u) in pairs {
        let v = syntactic_check(&parse_type(t)?, &parse_type(u)?, &sig, 10_000)?;
        match v {
            Verdict::Proven(d) => print!("{t} ~= {u}: proven\n{d}"),
            Verdict::Refuted(g) => println!("{t} ~= {u}: refuted at {g}"),
            Verdict::Unknown => println!("{t} ~= {u}: unknown"),
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
