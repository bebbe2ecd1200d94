//! The whole check: validate, kind, translate, normalize, decide.

use std::fmt;
use std::time::{Duration, Instant};

use crate::bisim::{decide_with, BisimError, BisimVerdict, Certificate, DecideOptions};
use crate::grammar::{build_shared_grammar, to_gnf, Grammar, GrammarError, Word};
use crate::kinding::{KindError, Kinder};
use crate::lts::{format_trace, TransitionLabel};
use crate::types::{Kind, KindContext, Signature, TypeExpr};
use crate::wellformed::{validate_signature, Diagnostic};

/// Why a check produced no verdict.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CheckError {
    Signature(Diagnostic),
    /// Kinding failed for the left (`0`) or right (`1`) type.
    Kind(usize, KindError),
    Grammar(GrammarError),
    Decide(BisimError),
}

impl fmt::Display for CheckError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CheckError::Signature(d) => write!(f, "signature: {d}"),
            CheckError::Kind(side, e) => {
                let side = if *side == 0 { "left" } else { "right" };
                write!(f, "{side} type: {e}")
            }
            CheckError::Grammar(e) => write!(f, "grammar: {e}"),
            CheckError::Decide(e) => write!(f, "decide: {e}"),
        }
    }
}

#[derive(Debug, Clone)]
pub enum CheckVerdict {
    Equivalent(Certificate),
    NotEquivalent(Vec<TransitionLabel>),
    Error(Vec<CheckError>),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Timings {
    pub validate: Duration,
    pub kinding: Duration,
    pub grammar: Duration,
    pub gnf: Duration,
    pub decide: Duration,
}

impl Timings {
    pub fn total(&self) -> Duration {
        self.validate + self.kinding + self.grammar + self.gnf + self.decide
    }
}

#[derive(Debug, Clone)]
pub struct CheckReport {
    /// Present once both types have been kinded.
    pub kinds: Option<(Kind, Kind)>,
    pub verdict: CheckVerdict,
    pub timings: Timings,
    /// The normalized grammar and the two start words, when it was built.
    pub grammar: Option<(Grammar, Word, Word)>,
}

impl CheckReport {
    pub fn is_equivalent(&self) -> bool {
        matches!(self.verdict, CheckVerdict::Equivalent(_))
    }

    pub fn is_error(&self) -> bool {
        matches!(self.verdict, CheckVerdict::Error(_))
    }

    /// `YES`, `NO` or `ERROR`.
    pub fn answer(&self) -> &'static str {
        match self.verdict {
            CheckVerdict::Equivalent(_) => "YES",
            CheckVerdict::NotEquivalent(_) => "NO",
            CheckVerdict::Error(_) => "ERROR",
        }
    }

    pub fn witness(&self) -> Option<&[TransitionLabel]> {
        match &self.verdict {
            CheckVerdict::NotEquivalent(w) => Some(w),
            _ => None,
        }
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.answer())?;
        match &self.verdict {
            CheckVerdict::NotEquivalent(w) => write!(f, " ({})", format_trace(w)),
            CheckVerdict::Error(es) => {
                for e in es {
                    write!(f, "\n  {e}")?;
                }
                Ok(())
            }
            CheckVerdict::Equivalent(_) => Ok(()),
        }
    }
}

/// Checks `t ≃ u` for closed types.
pub fn type_equiv(t: &TypeExpr, u: &TypeExpr, sig: &Signature) -> CheckReport {
    type_equiv_in(t, u, &KindContext::empty(), sig, DecideOptions::default())
}

/// Checks `t ≃ u` with free indices kinded by `ctx`.
pub fn type_equiv_in(
    t: &TypeExpr,
    u: &TypeExpr,
    ctx: &KindContext,
    sig: &Signature,
    opts: DecideOptions,
) -> CheckReport {
    let mut timings = Timings::default();
    let error = |errors: Vec<CheckError>, kinds, timings| CheckReport {
        kinds,
        verdict: CheckVerdict::Error(errors),
        timings,
        grammar: None,
    };

    let clock = Instant::now();
    let diags = validate_signature(sig);
    timings.validate = clock.elapsed();
    if !diags.is_empty() {
        return error(diags.into_iter().map(CheckError::Signature).collect(), None, timings);
    }

    // Equivalence agrees with bisimilarity only on types, so kinding comes
    // first.
    let clock = Instant::now();
    let mut kinder = match Kinder::new(sig) {
        Ok(k) => k,
        Err(e) => return error(vec![CheckError::Kind(0, e)], None, timings),
    };
    let kt = kinder.kind(t, ctx);
    let ku = kinder.kind(u, ctx);
    timings.kinding = clock.elapsed();
    let kinds = match (kt, ku) {
        (Ok(a), Ok(b)) => (a, b),
        (kt, ku) => {
            let errors = [kt.err(), ku.err()]
                .into_iter()
                .enumerate()
                .filter_map(|(i, e)| e.map(|e| CheckError::Kind(i, e)))
                .collect();
            return error(errors, None, timings);
        }
    };

    let clock = Instant::now();
    let raw = build_shared_grammar(&[t.clone(), u.clone()], sig);
    timings.grammar = clock.elapsed();
    let raw = match raw {
        Ok(g) => g,
        Err(e) => return error(vec![CheckError::Grammar(e)], Some(kinds), timings),
    };
    let clock = Instant::now();
    let gnf = to_gnf(&raw);
    timings.gnf = clock.elapsed();
    let g = match gnf {
        Ok(g) => g,
        Err(e) => return error(vec![CheckError::Grammar(e)], Some(kinds), timings),
    };

    let (left, right) = (g.start_word(0), g.start_word(1));
    let clock = Instant::now();
    let verdict = decide_with(&g, &left, &right, opts);
    timings.decide = clock.elapsed();
    let verdict = match verdict {
        Ok(BisimVerdict::Equivalent(cert)) => CheckVerdict::Equivalent(cert),
        Ok(BisimVerdict::NotEquivalent(w)) => CheckVerdict::NotEquivalent(w),
        Err(e) => return error(vec![CheckError::Decide(e)], Some(kinds), timings),
    };
    CheckReport {
        kinds: Some(kinds),
        verdict,
        timings,
        grammar: Some((g, left, right)),
    }
}
