mod common;

use std::collections::{HashSet, VecDeque};

use proptest::prelude::*;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use session_equiv::grammar::{Norm, Symbol, Word};
use session_equiv::lts::BoundedBisim;
use session_equiv::types::{subterms, Polarity};
use session_equiv::*;

use common::{Env, Gen};

const ORACLE_PAIRS: usize = 200_000;

fn env_and_session(seed: u64) -> (Env, TypeExpr) {
    let mut g = Gen::new(seed);
    let env = g.env();
    let t = g.session(&env, &[], 5);
    (env, t)
}

fn only_skip_seq_ident(t: &TypeExpr, sig: &Signature, seen: &mut HashSet<TypeIdent>) -> bool {
    match t.node() {
        TypeNode::Skip => true,
        TypeNode::Seq(a, b) => only_skip_seq_ident(a, sig, seen) && only_skip_seq_ident(b, sig, seen),
        TypeNode::Ident(x) => !seen.insert(x.clone()) || only_skip_seq_ident(sig.get(x).unwrap(), sig, seen),
        _ => false,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn terminated_types_are_built_from_skip_seq_and_identifiers(seed in any::<u64>()) {
        let mut g = Gen::new(seed);
        let env = g.env();
        for _ in 0..8 {
            let t = g.session(&env, &[], 3);
            if is_terminated(&t, &env.sig).unwrap() {
                prop_assert!(only_skip_seq_ident(&t, &env.sig, &mut HashSet::new()), "{t}");
            }
        }
    }

    #[test]
    fn kinds_are_unique_and_follow_the_rule_shapes(seed in any::<u64>()) {
        let mut g = Gen::new(seed);
        let env = g.env();
        let t = g.any(&env, &[], 5);
        let empty = KindContext::empty();
        let k = kind_of(&t, &empty, &env.sig);
        prop_assert_eq!(&k, &kind_of(&t, &empty, &env.sig));
        prop_assert!(k.is_ok(), "generated types are well kinded: {t}: {k:?}");
        for s in subterms(&t) {
            // Subterms under binders are kinded in their own context below.
            let Ok(ks) = kind_of(&s, &empty, &env.sig) else { continue };
            match s.node() {
                TypeNode::Seq(a, b) => {
                    prop_assert_eq!(ks, Kind::Session);
                    prop_assert_eq!(kind_of(a, &empty, &env.sig), Ok(Kind::Session));
                    prop_assert_eq!(kind_of(b, &empty, &env.sig), Ok(Kind::Session));
                }
                TypeNode::Quant(_, k, body) => {
                    prop_assert_eq!(ks, Kind::Functional);
                    prop_assert!(kind_of(body, &empty.extended(*k), &env.sig).is_ok());
                }
                _ => {}
            }
        }
    }

    #[test]
    fn printing_then_parsing_is_the_identity(seed in any::<u64>()) {
        let mut g = Gen::new(seed);
        let env = g.env();
        let t = g.any(&env, &[], 6);
        prop_assert_eq!(parse_type(&t.to_string()).unwrap(), t.clone());
        let printed = env.sig.to_string();
        prop_assert_eq!(parse_signature(&printed).unwrap().to_string(), printed);
    }

    #[test]
    fn subterms_contain_the_type_and_are_closed_under_children(seed in any::<u64>()) {
        let mut g = Gen::new(seed);
        let env = g.env();
        let t = g.any(&env, &[], 6);
        let subs = subterms(&t);
        prop_assert!(subs.contains(&t));
        for s in &subs {
            for c in s.children() {
                prop_assert!(subs.contains(c));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn transitions_are_deterministic_and_repeatable(seed in any::<u64>()) {
        let (env, t) = env_and_session(seed);
        let mut frontier = vec![t];
        for _ in 0..4 {
            let mut next = Vec::new();
            for s in frontier {
                let a = step(&s, &env.sig).unwrap();
                prop_assert_eq!(&a, &step(&s, &env.sig).unwrap());
                next.extend(a.into_values());
            }
            next.truncate(16);
            frontier = next;
        }
    }

    #[test]
    fn bounded_bisimilarity_is_antitone_in_depth(seed in any::<u64>()) {
        let mut g = Gen::new(seed);
        let env = g.env();
        let (t, u) = g.pair(&env);
        let mut bb = BoundedBisim::with_limit(&env.sig, 100_000);
        let mut failed = false;
        for k in 0..12 {
            let Ok(ok) = bb.check(&t, &u, k) else { return Ok(()) };
            prop_assert!(!(failed && ok), "k = {k}");
            failed |= !ok;
        }
    }

    #[test]
    fn traces_exist_exactly_when_bounded_bisimilarity_fails(seed in any::<u64>(), k in 0usize..10) {
        let mut g = Gen::new(seed);
        let env = g.env();
        let (t, u) = g.pair(&env);
        let Ok(trace) = lts::distinguishing_trace_within(&t, &u, k, 100_000, &env.sig) else { return Ok(()) };
        let Ok(ok) = BoundedBisim::with_limit(&env.sig, 100_000).check(&t, &u, k) else { return Ok(()) };
        prop_assert_eq!(trace.is_none(), ok);
        if let Some(w) = trace {
            prop_assert!(w.len() <= k);
        }
    }

    #[test]
    fn skip_prefix_is_bisimilar_at_every_depth(seed in any::<u64>()) {
        let (env, t) = env_and_session(seed);
        let s = TypeExpr::seq(TypeExpr::skip(), t.clone());
        let mut bb = BoundedBisim::with_limit(&env.sig, 100_000);
        if let Ok(ok) = bb.check(&s, &t, 8) {
            prop_assert!(ok);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn syntactic_verdicts_agree_with_the_decider(seed in any::<u64>()) {
        let mut g = Gen::new(seed);
        let env = g.env();
        let (t, u) = g.pair(&env);
        let report = type_equiv(&t, &u, &env.sig);
        prop_assert!(!report.is_error(), "{report}");
        match syntactic_check(&t, &u, &env.sig, 5_000).unwrap() {
            Verdict::Proven(d) => {
                prop_assert!(report.is_equivalent(), "{t} ~= {u}");
                prop_assert!(d.is_closed());
                let (kt, ku) = report.kinds.unwrap();
                prop_assert_eq!(kt, ku);
            }
            Verdict::Refuted(_) => prop_assert!(!report.is_equivalent(), "{t} ~= {u}"),
            Verdict::Unknown => {}
        }
    }

    #[test]
    fn syntactic_reflexivity(seed in any::<u64>()) {
        let mut g = Gen::new(seed);
        let env = g.env();
        let t = g.any(&env, &[], 5);
        prop_assert!(syntactic_check(&t, &t, &env.sig, 100_000).unwrap().is_proven(), "{t}");
    }

    #[test]
    fn syntactic_monoid_and_distribution_laws(seed in any::<u64>()) {
        let mut g = Gen::new(seed);
        let env = g.env();
        let t = g.session(&env, &[], 3);
        let u = g.session(&env, &[], 3);
        let v = g.session(&env, &[], 3);
        let seq = TypeExpr::seq;
        let branches = [("a", t.clone()), ("b", u.clone())];
        let distributed = branches.clone().map(|(l, x)| (l, seq(x, v.clone())));
        let laws = [
            (seq(seq(t.clone(), u.clone()), v.clone()), seq(t.clone(), seq(u.clone(), v.clone()))),
            (seq(TypeExpr::skip(), t.clone()), t.clone()),
            (seq(t.clone(), TypeExpr::skip()), t.clone()),
            (seq(TypeExpr::internal(branches), v.clone()), TypeExpr::internal(distributed)),
        ];
        for (a, b) in laws {
            // The search may run out of fuel on non-regular types, never
            // refute a law.
            let verdict = syntactic_check(&a, &b, &env.sig, 20_000).unwrap();
            prop_assert!(!verdict.is_refuted(), "{a} ~= {b}");
            if a.idents().is_empty() && b.idents().is_empty() {
                prop_assert!(verdict.is_proven(), "{a} ~= {b}");
            }
        }
    }
}

/// Shortest run from `w` to the empty word, by breadth-first search over
/// words no longer than `cap`.
fn brute_norm(g: &Grammar, w: Word, cap: usize) -> Option<usize> {
    let mut seen = HashSet::new();
    let mut queue = VecDeque::from([(w.clone(), 0)]);
    seen.insert(w);
    while let Some((w, d)) = queue.pop_front() {
        if w.is_empty() {
            return Some(d);
        }
        for (_, w2) in g.word_step(&w) {
            if w2.len() <= cap && seen.insert(w2.clone()) {
                queue.push_back((w2, d + 1));
            }
        }
    }
    None
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn normalization_yields_simple_grammars(seed in any::<u64>()) {
        let mut g = Gen::new(seed);
        let env = g.env();
        let (t, u) = g.pair(&env);
        let raw = build_shared_grammar(&[t, u], &env.sig).unwrap();
        let gnf = to_gnf(&raw).unwrap();
        prop_assert!(gnf.is_simple());
        prop_assert!(gnf.is_gnf());
        prop_assert!(gnf.productions_of(grammar::Nonterminal::BOTTOM).is_empty());
    }

    #[test]
    fn norms_add_up_and_match_a_brute_force_search(seed in any::<u64>()) {
        let (env, t) = env_and_session(seed);
        let gnf = to_gnf(&build_grammar(&t, &env.sig).unwrap()).unwrap();
        let norms = gnf.norms();
        let reach = gnf.reachable();
        for &x in &reach {
            let n = gnf.norm_of(x);
            match brute_norm(&gnf, vec![x], 12) {
                Some(d) => prop_assert_eq!(n, Norm::Finite(d as u64), "{}", x),
                None => prop_assert!(n == Norm::Infinite || matches!(n, Norm::Finite(m) if m > 6), "{}", x),
            }
            prop_assert_eq!(norms[x.index().unwrap()], n);
        }
        // A word's norm is the sum of its symbols' norms.
        for w in reach.windows(2) {
            let sum = gnf.norm_of(w[0]) + gnf.norm_of(w[1]);
            if let Some(d) = brute_norm(&gnf, w.to_vec(), 12) {
                prop_assert_eq!(sum, Norm::Finite(d as u64));
            } else {
                prop_assert!(sum == Norm::Infinite || matches!(sum, Norm::Finite(m) if m > 6));
            }
        }
    }

    #[test]
    fn normalization_preserves_bounded_behaviour(seed in any::<u64>()) {
        let mut g = Gen::new(seed);
        let env = g.env();
        let (t, u) = g.pair(&env);
        let raw = build_shared_grammar(&[t.clone(), u.clone()], &env.sig).unwrap();
        let gnf = to_gnf(&raw).unwrap();
        let (rl, rr) = (vec![raw.starts()[0]], vec![raw.starts()[1]]);
        let (gl, gr) = (gnf.start_word(0), gnf.start_word(1));
        let mut bb = BoundedBisim::with_limit(&env.sig, 100_000);
        for k in [1, 3, 6] {
            let Ok(types) = bb.check(&t, &u, k) else { return Ok(()) };
            prop_assert_eq!(bounded_word_bisim(&raw, &rl, &rr, k), types, "raw, k = {}", k);
            prop_assert_eq!(bounded_word_bisim(&gnf, &gl, &gr, k), types, "gnf, k = {}", k);
        }
    }

    #[test]
    fn messages_separate_payload_and_continuation(seed in any::<u64>()) {
        let (env, t) = env_and_session(seed);
        let raw = build_grammar(&t, &env.sig).unwrap();
        for x in raw.nonterminals() {
            if let Some(TypeNode::Message(..)) = raw.origin(x).map(|o| o.node()) {
                let bodies = raw.productions_of(x);
                prop_assert_eq!(bodies.len(), 2);
                let data = bodies.iter().find(|b| b.len() == 3).unwrap();
                prop_assert_eq!(&data[2], &Symbol::N(grammar::Nonterminal::BOTTOM));
            }
        }
    }
}

#[test]
fn sending_in_sequence_differs_from_sending_a_sequence() {
    let t = TypeExpr::seq(TypeExpr::send(TypeExpr::skip()), TypeExpr::send(TypeExpr::skip()));
    let u = TypeExpr::send(TypeExpr::seq(TypeExpr::skip(), TypeExpr::send(TypeExpr::skip())));
    let g = to_gnf(&build_shared_grammar(&[t, u], &Signature::new()).unwrap()).unwrap();
    let verdict = decide(&g, &g.start_word(0), &g.start_word(1)).unwrap();
    assert!(!verdict.is_equivalent());
    assert_eq!(
        TypeExpr::message(Polarity::Out, TypeExpr::skip()),
        TypeExpr::send(TypeExpr::skip())
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn decisions_match_bounded_word_bisimilarity(seed in any::<u64>()) {
        let mut g = Gen::new(seed);
        let env = g.env();
        let (t, u) = g.pair(&env);
        let gnf = to_gnf(&build_shared_grammar(&[t, u], &env.sig).unwrap()).unwrap();
        let (l, r) = (gnf.start_word(0), gnf.start_word(1));
        let verdict = decide(&gnf, &l, &r).unwrap();
        match &verdict {
            BisimVerdict::Equivalent(cert) => {
                prop_assert!(cert.verify(&gnf));
                // Words grow along non-tail recursion; a run that gives up says nothing.
                prop_assert!(bounded_word_bisim_within(&gnf, &l, &r, 30, ORACLE_PAIRS).unwrap_or(true));
                let norm = |w: &[grammar::Nonterminal]| w.iter().fold(Norm::Finite(0), |n, x| n + gnf.norm_of(*x));
                let (nl, nr) = (norm(&l), norm(&r));
                if nl.is_finite() && nr.is_finite() {
                    prop_assert_eq!(nl, nr);
                }
            }
            BisimVerdict::NotEquivalent(w) => {
                prop_assert!(replay_witness(&gnf, &l, &r, w));
                prop_assert!(!bounded_word_bisim_within(&gnf, &l, &r, w.len(), ORACLE_PAIRS).unwrap_or(false));
            }
        }
        let again = decide(&gnf, &l, &r).unwrap();
        match (&verdict, &again) {
            (BisimVerdict::Equivalent(a), BisimVerdict::Equivalent(b)) => prop_assert_eq!(a, b),
            (BisimVerdict::NotEquivalent(a), BisimVerdict::NotEquivalent(b)) => prop_assert_eq!(a, b),
            _ => prop_assert!(false, "verdict changed between runs"),
        }
    }

    #[test]
    fn decisions_terminate_on_random_simple_grammars(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=100);
        let gram = common::simple_grammar(&mut rng, n);
        prop_assert!(gram.is_simple());
        let x = Grammar::nonterminal(rng.gen_range(0..n));
        let mirror = Grammar::nonterminal(x.index().unwrap() + n);
        let y = Grammar::nonterminal(rng.gen_range(0..2 * n));
        let verdict = decide(&gram, &[x], &[mirror]).unwrap();
        prop_assert!(verdict.is_equivalent());
        match decide(&gram, &[x, y], &[mirror]).unwrap() {
            BisimVerdict::Equivalent(cert) => {
                prop_assert!(cert.verify(&gram));
                prop_assert!(bounded_word_bisim_within(&gram, &[x, y], &[mirror], 12, ORACLE_PAIRS).unwrap_or(true));
            }
            BisimVerdict::NotEquivalent(w) => prop_assert!(replay_witness(&gram, &[x, y], &[mirror], &w)),
        }
    }
}
