//! End to end checks, as the `check` command runs them.

use std::error::Error;

use session_equiv::{parse_signature, parse_type, type_equiv, CheckVerdict};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let sig = parse_signature(include_str!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/examples/data/sec5.sig"
    )))?;
    let cases = [
        ("T", "U", "NO"),
        ("W", "+{go: W};W", "YES"),
        ("skip;V", "V", "YES"),
        ("all[T] 0 -> all[S] !1;0 -> 0", "all[T] all[S] 1 -> !1;0 -> 0", "NO"),
        ("unit;!unit", "skip", "ERROR"),
    ];
    for (t, u, expected) in cases {
        let report = type_equiv(&parse_type(t)?, &parse_type(u)?, &sig);
        println!("{t}  vs  {u}: {report}  [{:?}]", report.timings.total());
        if let CheckVerdict::Equivalent(cert) = &report.verdict {
            println!("  certificate of {} pairs", cert.len());
        }
        assert_eq!(report.answer(), expected);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
