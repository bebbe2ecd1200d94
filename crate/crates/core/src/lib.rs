//! Equivalence checking for higher-order context-free session types.
//!
//! Types are translated into simple grammars whose bisimilarity is decided
//! directly. Two bounded oracles, one over the transition system on types
//! and one searching for derivations in the equivalence rules, are provided
//! for cross-checking.

pub mod bisim;
pub mod cli;
pub mod grammar;
pub mod kinding;
pub mod lts;
pub mod parse;
pub mod pipeline;
pub mod syntactic;
pub mod types;
pub mod wellformed;

pub use bisim::{
    bounded_word_bisim, bounded_word_bisim_within, decide, decide_with, replay_witness, BisimError, BisimVerdict,
    Certificate, DecideOptions,
};
pub use grammar::{
    build_grammar, build_shared_grammar, to_gnf, Grammar, GrammarError, Nonterminal, Production, Symbol,
};
pub use kinding::{kind_of, KindError};
pub use lts::{distinguishing_trace, k_bisimilar, step, TransitionLabel};
pub use parse::{parse_signature, parse_type, ParseError};
pub use pipeline::{type_equiv, type_equiv_in, CheckReport, CheckVerdict};
pub use syntactic::{syntactic_check, Derivation, Verdict};
pub use types::{Kind, KindContext, Label, Signature, TypeExpr, TypeIdent, TypeNode};
pub use wellformed::{is_contractive, is_terminated, validate_signature, Diagnostic};
