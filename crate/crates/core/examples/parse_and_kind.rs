//! Parse types and signatures, then kind them.

use std::error::Error;

use session_equiv::{kind_of, parse_signature, parse_type, validate_signature, Kind, KindContext};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let sig = parse_signature(include_str!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/examples/data/input_tree.sig"
    )))?;
    assert!(validate_signature(&sig).is_empty());

    let empty = KindContext::empty();
    for (src, expected) in [
        ("InputTree", Kind::Session),
        ("InputTree;!int", Kind::Session),
        ("all[S] !unit;0", Kind::Functional),
        ("{fst: unit, snd: int -> int}", Kind::Functional),
    ] {
        let t = parse_type(src)?;
        let k = kind_of(&t, &empty, &sig)?;
        println!("{src} : {k}");
        assert_eq!(k, expected);
    }

    // Sequencing a functional type is not a type at all.
    let e = kind_of(&parse_type("skip;unit")?, &empty, &sig).unwrap_err();
    println!("skip;unit : {e}");
    assert!(e.is_ill_kinded());

    // Open types need kinds for their free indices.
    let open = parse_type("!1;0")?;
    let ctx = KindContext::from_kinds([Kind::Session, Kind::Functional]);
    println!("!1;0 : {} under [S, T]", kind_of(&open, &ctx, &sig)?);

    // Equations whose right-hand side never reaches a constructor are rejected.
    let bad = parse_signature("X = Y\nY = X")?;
    for d in validate_signature(&bad) {
        println!("{d}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
