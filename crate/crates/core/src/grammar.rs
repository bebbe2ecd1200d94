//! Grammars over the transition alphabet: construction from types, Greibach
//! normal form, simplicity, norms and the word transition system.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fmt;

use indexmap::IndexSet;
use thiserror::Error;

use crate::lts::TransitionLabel;
use crate::types::{collect_subterms, Signature, TypeExpr, TypeIdent, TypeNode};

/// A nonterminal: either the symbol of some subterm, or the productionless
/// separator printed `BOT`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Nonterminal(u32);

impl Nonterminal {
    pub const BOTTOM: Nonterminal = Nonterminal(u32::MAX);

    pub fn index(self) -> Option<usize> {
        (self != Self::BOTTOM).then_some(self.0 as usize)
    }

    pub fn is_bottom(self) -> bool {
        self == Self::BOTTOM
    }

    fn at(i: usize) -> Nonterminal {
        Nonterminal(u32::try_from(i).expect("fewer than 2^32 nonterminals"))
    }
}

impl fmt::Display for Nonterminal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_bottom() {
            f.write_str("BOT")
        } else {
            write!(f, "X{}", self.0)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Symbol {
    T(TransitionLabel),
    N(Nonterminal),
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::T(a) => write!(f, "{a}"),
            Symbol::N(x) => write!(f, "{x}"),
        }
    }
}

/// A state of the word transition system; the empty word is terminated.
pub type Word = Vec<Nonterminal>;

pub fn format_word(w: &[Nonterminal]) -> String {
    if w.is_empty() {
        return "eps".into();
    }
    w.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Production {
    pub head: Nonterminal,
    pub body: Vec<Symbol>,
}

impl fmt::Display for Production {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ->", self.head)?;
        if self.body.is_empty() {
            return f.write_str(" eps");
        }
        for s in &self.body {
            write!(f, " {s}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GrammarError {
    #[error("unbound type identifier `{0}`")]
    UnboundIdent(TypeIdent),
    #[error("nonterminal {0} has an empty production next to others")]
    MixedNullable(Nonterminal),
    #[error("ContractivityViolation: nonterminal {0} reaches itself without emitting a terminal")]
    ContractivityViolation(Nonterminal),
}

/// Norm of a nonterminal or word: the length of a shortest terminating
/// trace, or infinite. Finite norms saturate at `u64::MAX`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Norm {
    Finite(u64),
    Infinite,
}

impl Norm {
    pub fn is_finite(self) -> bool {
        matches!(self, Norm::Finite(_))
    }
}

impl std::ops::Add for Norm {
    type Output = Norm;

    fn add(self, other: Norm) -> Norm {
        match (self, other) {
            (Norm::Finite(a), Norm::Finite(b)) => Norm::Finite(a.saturating_add(b)),
            _ => Norm::Infinite,
        }
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Norm::Finite(n) => write!(f, "{n}"),
            Norm::Infinite => f.write_str("inf"),
        }
    }
}

/// A grammar with one or more start symbols.
///
/// Nonterminal `Xi` is the symbol of the `i`-th subterm collected; `BOT` is
/// separate and never has productions.
#[derive(Debug, Clone)]
pub struct Grammar {
    origins: Vec<Option<TypeExpr>>,
    productions: Vec<Vec<Vec<Symbol>>>,
    erased: Vec<bool>,
    starts: Vec<Nonterminal>,
}

/// Builds the grammar of `t`.
pub fn build_grammar(t: &TypeExpr, sig: &Signature) -> Result<Grammar, GrammarError> {
    build_shared_grammar(std::slice::from_ref(t), sig)
}

/// Builds one grammar for several types over the same signature, with one
/// start symbol per type. Subterms are numbered in order of first
/// occurrence: the roots first, then the equations in identifier order.
pub fn build_shared_grammar(roots: &[TypeExpr], sig: &Signature) -> Result<Grammar, GrammarError> {
    let mut subs: IndexSet<TypeExpr> = IndexSet::new();
    for r in roots {
        collect_subterms(r, &mut subs);
    }
    for (_, body) in sig.iter() {
        collect_subterms(body, &mut subs);
    }
    let nt = |t: &TypeExpr| Symbol::N(Nonterminal::at(subs.get_index_of(t).expect("collected")));
    let mut productions = Vec::with_capacity(subs.len());
    for u in &subs {
        let term = |a: TransitionLabel| Symbol::T(a);
        let prods: Vec<Vec<Symbol>> = match u.node() {
            TypeNode::Unit => vec![vec![term(TransitionLabel::Unit)]],
            TypeNode::Base(b) => vec![vec![term(TransitionLabel::Base(b.clone()))]],
            TypeNode::Arrow(v, w) => vec![
                vec![term(TransitionLabel::ArrowDomain), nt(v)],
                vec![term(TransitionLabel::ArrowRange), nt(w)],
            ],
            TypeNode::Labeled(shape, bs) => bs
                .iter()
                .map(|(l, b)| vec![term(TransitionLabel::Field(*shape, l.clone())), nt(b)])
                .collect(),
            TypeNode::Quant(q, k, body) => vec![vec![term(TransitionLabel::Quant(*q, *k)), nt(body)]],
            TypeNode::Skip => vec![vec![]],
            TypeNode::Message(p, v) => vec![
                vec![
                    term(TransitionLabel::MsgData(*p)),
                    nt(v),
                    Symbol::N(Nonterminal::BOTTOM),
                ],
                vec![term(TransitionLabel::MsgCont(*p))],
            ],
            TypeNode::Choice(view, bs) => bs
                .iter()
                .map(|(l, b)| vec![term(TransitionLabel::Choice(*view, l.clone())), nt(b)])
                .collect(),
            TypeNode::Seq(v, w) => vec![vec![nt(v), nt(w)]],
            TypeNode::Index(n) => vec![vec![term(TransitionLabel::Index(*n))]],
            TypeNode::Ident(x) => {
                let body = sig.get(x).ok_or_else(|| GrammarError::UnboundIdent(x.clone()))?;
                vec![vec![nt(body)]]
            }
        };
        productions.push(prods);
    }
    let starts = roots.iter().map(|r| match nt(r) {
        Symbol::N(x) => x,
        Symbol::T(_) => unreachable!(),
    });
    Ok(Grammar {
        starts: starts.collect(),
        erased: vec![false; subs.len()],
        origins: subs.into_iter().map(Some).collect(),
        productions,
    })
}

impl Grammar {
    /// A grammar given directly by its productions over nonterminals
    /// `X0..X{n-1}`. Useful for tests and hand-written examples.
    pub fn from_productions(n: usize, starts: &[Nonterminal], productions: &[Production]) -> Grammar {
        let mut prods = vec![Vec::new(); n];
        for p in productions {
            let i = p.head.index().expect("BOT has no productions");
            prods[i].push(p.body.clone());
        }
        Grammar {
            origins: vec![None; n],
            productions: prods,
            erased: vec![false; n],
            starts: starts.to_vec(),
        }
    }

    pub fn nonterminal(i: usize) -> Nonterminal {
        Nonterminal::at(i)
    }

    /// The first start symbol.
    pub fn start(&self) -> Nonterminal {
        self.starts[0]
    }

    pub fn starts(&self) -> &[Nonterminal] {
        &self.starts
    }

    /// The word the `i`-th start symbol stands for: empty if the symbol was
    /// erased as terminated.
    pub fn start_word(&self, i: usize) -> Word {
        let x = self.starts[i];
        if self.is_erased(x) {
            Vec::new()
        } else {
            vec![x]
        }
    }

    pub fn is_erased(&self, x: Nonterminal) -> bool {
        x.index().is_some_and(|i| self.erased[i])
    }

    /// Number of nonterminals other than `BOT`.
    pub fn len(&self) -> usize {
        self.productions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.productions.is_empty()
    }

    /// All nonterminals, `BOT` last.
    pub fn nonterminals(&self) -> Vec<Nonterminal> {
        let mut v: Vec<_> = (0..self.len()).map(Nonterminal::at).collect();
        v.push(Nonterminal::BOTTOM);
        v
    }

    /// The subterm a nonterminal was created for.
    pub fn origin(&self, x: Nonterminal) -> Option<&TypeExpr> {
        x.index().and_then(|i| self.origins[i].as_ref())
    }

    pub fn productions_of(&self, x: Nonterminal) -> &[Vec<Symbol>] {
        match x.index() {
            Some(i) => &self.productions[i],
            None => &[],
        }
    }

    /// All productions, ordered by head and then body.
    pub fn productions(&self) -> Vec<Production> {
        let mut out = Vec::new();
        for i in 0..self.len() {
            out.extend(self.sorted_productions(Nonterminal::at(i)));
        }
        out
    }

    fn sorted_productions(&self, x: Nonterminal) -> Vec<Production> {
        let mut ps: Vec<Production> = self
            .productions_of(x)
            .iter()
            .map(|b| Production {
                head: x,
                body: b.clone(),
            })
            .collect();
        ps.sort_by_key(|a| body_key(&a.body));
        ps
    }

    /// Terminals occurring in some production, in label order.
    pub fn terminals(&self) -> Vec<TransitionLabel> {
        let mut set: Vec<TransitionLabel> = self
            .productions
            .iter()
            .flatten()
            .flatten()
            .filter_map(|s| match s {
                Symbol::T(a) => Some(a.clone()),
                Symbol::N(_) => None,
            })
            .collect::<HashSet<_>>()
            .into_iter()
            .collect();
        set.sort();
        set
    }

    /// Every production has the form `X -> a Y1 .. Yn`.
    pub fn is_gnf(&self) -> bool {
        self.productions
            .iter()
            .flatten()
            .all(|b| matches!(b.first(), Some(Symbol::T(_))) && b[1..].iter().all(|s| matches!(s, Symbol::N(_))))
    }

    /// In normal form, with at most one production per nonterminal and
    /// leading terminal.
    pub fn is_simple(&self) -> bool {
        self.is_gnf()
            && self.productions.iter().all(|ps| {
                let mut seen = HashSet::new();
                ps.iter().all(|b| seen.insert(&b[0]))
            })
    }

    /// Transitions of a word. In normal form these are `X δ -a-> γ δ` for
    /// each `X -> a γ`; leading nonterminals and empty productions are
    /// expanded first otherwise, so the same function also runs grammars
    /// straight out of [`build_grammar`].
    pub fn word_step(&self, w: &[Nonterminal]) -> BTreeMap<TransitionLabel, Word> {
        let mut out = BTreeMap::new();
        self.expand_into(w.to_vec(), &mut out, 0);
        out
    }

    fn expand_into(&self, w: Word, out: &mut BTreeMap<TransitionLabel, Word>, depth: usize) {
        let Some(&x) = w.first() else { return };
        // Contractive grammars reach a terminal in fewer than `len` leading
        // expansions; the cap keeps other input from looping.
        if depth > self.len() + 1 {
            return;
        }
        for body in self.productions_of(x) {
            match body.first() {
                Some(Symbol::T(a)) => {
                    let mut next: Word = body[1..]
                        .iter()
                        .map(|s| match s {
                            Symbol::N(y) => *y,
                            Symbol::T(_) => panic!("terminal after the head of a production"),
                        })
                        .collect();
                    next.extend_from_slice(&w[1..]);
                    out.entry(a.clone()).or_insert(next);
                }
                _ => {
                    let mut next: Word = body
                        .iter()
                        .map(|s| match s {
                            Symbol::N(y) => *y,
                            Symbol::T(_) => panic!("terminal after the head of a production"),
                        })
                        .collect();
                    next.extend_from_slice(&w[1..]);
                    self.expand_into(next, out, depth + 1);
                }
            }
        }
    }

    /// Norms of all nonterminals, indexed like [`Grammar::nonterminals`]
    /// without `BOT`, whose norm is always infinite.
    pub fn norms(&self) -> Vec<Norm> {
        let mut norm = vec![Norm::Infinite; self.len()];
        let nt_norm = |norm: &[Norm], y: Nonterminal| y.index().map_or(Norm::Infinite, |j| norm[j]);
        loop {
            let mut changed = false;
            for (i, ps) in self.productions.iter().enumerate() {
                for b in ps {
                    let mut n = Norm::Finite(0);
                    for s in b {
                        n = n + match s {
                            Symbol::T(_) => Norm::Finite(1),
                            Symbol::N(y) => nt_norm(&norm, *y),
                        };
                    }
                    if n < norm[i] {
                        norm[i] = n;
                        changed = true;
                    }
                }
            }
            if !changed {
                return norm;
            }
        }
    }

    /// Norm of a single nonterminal.
    pub fn norm_of(&self, x: Nonterminal) -> Norm {
        x.index().map_or(Norm::Infinite, |i| self.norms()[i])
    }

    /// Nonterminals reachable from the start symbols, in discovery order.
    pub fn reachable(&self) -> Vec<Nonterminal> {
        let mut seen = HashSet::new();
        let mut order = Vec::new();
        let mut queue: VecDeque<Nonterminal> = VecDeque::new();
        for &s in &self.starts {
            if !s.is_bottom() && !self.is_erased(s) && seen.insert(s) {
                queue.push_back(s);
            }
        }
        while let Some(x) = queue.pop_front() {
            order.push(x);
            for p in self.sorted_productions(x) {
                for s in p.body {
                    if let Symbol::N(y) = s {
                        if !y.is_bottom() && seen.insert(y) {
                            queue.push_back(y);
                        }
                    }
                }
            }
        }
        order
    }

    /// One production per line, `X3 -> !d X4 BOT X5`, sorted by head and
    /// then body; empty bodies print as `eps`.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for p in self.productions() {
            s.push_str(&p.to_string());
            s.push('\n');
        }
        s
    }

    /// Like [`Grammar::dump`], restricted to nonterminals reachable from the
    /// start symbols.
    pub fn dump_reachable(&self) -> String {
        let mut heads = self.reachable();
        heads.sort();
        let mut s = String::new();
        for x in heads {
            for p in self.sorted_productions(x) {
                s.push_str(&p.to_string());
                s.push('\n');
            }
        }
        s
    }

    /// `Xi = <subterm>` for every nonterminal in `heads`.
    pub fn names(&self, heads: &[Nonterminal]) -> String {
        let mut s = String::new();
        for &x in heads {
            if let Some(t) = self.origin(x) {
                s.push_str(&format!("{x} = {t}\n"));
            }
        }
        s
    }

    /// The reachable productions with nonterminals renamed `N0, N1, ..` in
    /// breadth first discovery order from the start symbols. Two grammars
    /// that differ only in naming give the same text.
    pub fn canonical_dump(&self) -> String {
        let order = self.reachable();
        let rename: HashMap<Nonterminal, usize> = order.iter().enumerate().map(|(i, x)| (*x, i)).collect();
        let name = |x: Nonterminal| {
            if x.is_bottom() {
                "BOT".to_string()
            } else {
                format!("N{}", rename[&x])
            }
        };
        let mut s = String::new();
        for &x in &order {
            for p in self.sorted_productions(x) {
                s.push_str(&name(x));
                s.push_str(" ->");
                if p.body.is_empty() {
                    s.push_str(" eps");
                }
                for sym in &p.body {
                    s.push(' ');
                    match sym {
                        Symbol::T(a) => s.push_str(&a.to_string()),
                        Symbol::N(y) => s.push_str(&name(*y)),
                    }
                }
                s.push('\n');
            }
        }
        s
    }
}

fn body_key(b: &[Symbol]) -> Vec<(u8, String, u32)> {
    b.iter()
        .map(|s| match s {
            Symbol::T(a) => (0, a.to_string(), 0),
            Symbol::N(y) => (1, String::new(), y.0),
        })
        .collect()
}

/// Converts a grammar built from types into Greibach normal form.
///
/// First every nonterminal whose only production is a word of two or more
/// nonterminals (the symbol of a `;`) is replaced by that word wherever it
/// occurs. Then empty productions are removed and their heads erased from
/// all bodies, repeatedly, and finally leading nonterminals are replaced by
/// their productions.
pub fn to_gnf(g: &Grammar) -> Result<Grammar, GrammarError> {
    let n = g.len();
    let mut prods = g.productions.clone();

    // Inline sequence symbols.
    let is_seq =
        |ps: &Vec<Vec<Symbol>>| ps.len() == 1 && ps[0].len() >= 2 && ps[0].iter().all(|s| matches!(s, Symbol::N(_)));
    let seq_body: Vec<Option<Vec<Symbol>>> = prods.iter().map(|ps| is_seq(ps).then(|| ps[0].clone())).collect();
    let mut flat_memo: HashMap<usize, Vec<Symbol>> = HashMap::new();
    fn flatten(
        i: usize,
        seq_body: &[Option<Vec<Symbol>>],
        memo: &mut HashMap<usize, Vec<Symbol>>,
        open: &mut Vec<usize>,
    ) -> Result<Vec<Symbol>, GrammarError> {
        if let Some(b) = memo.get(&i) {
            return Ok(b.clone());
        }
        if open.contains(&i) {
            return Err(GrammarError::ContractivityViolation(Nonterminal::at(i)));
        }
        open.push(i);
        let mut out = Vec::new();
        for s in seq_body[i].as_ref().expect("sequence symbol") {
            match s {
                Symbol::N(y) if y.index().is_some_and(|j| seq_body[j].is_some()) => {
                    out.extend(flatten(y.index().unwrap(), seq_body, memo, open)?);
                }
                _ => out.push(s.clone()),
            }
        }
        open.pop();
        memo.insert(i, out.clone());
        Ok(out)
    }
    for ps in prods.iter_mut() {
        for b in ps.iter_mut() {
            let mut nb = Vec::with_capacity(b.len());
            for s in b.iter() {
                match s {
                    Symbol::N(y) if y.index().is_some_and(|j| seq_body[j].is_some()) => {
                        nb.extend(flatten(y.index().unwrap(), &seq_body, &mut flat_memo, &mut Vec::new())?);
                    }
                    _ => nb.push(s.clone()),
                }
            }
            *b = nb;
        }
    }

    // Remove empty productions.
    let mut erased = g.erased.clone();
    loop {
        let mut changed = false;
        for i in 0..n {
            if erased[i] {
                continue;
            }
            if prods[i].iter().any(Vec::is_empty) {
                if prods[i].len() > 1 {
                    return Err(GrammarError::MixedNullable(Nonterminal::at(i)));
                }
                erased[i] = true;
                prods[i].clear();
                changed = true;
            }
        }
        if !changed {
            break;
        }
        for ps in prods.iter_mut() {
            for b in ps.iter_mut() {
                b.retain(|s| !matches!(s, Symbol::N(y) if y.index().is_some_and(|j| erased[j])));
            }
        }
    }

    // Substitute leading nonterminals.
    let mut done: Vec<Option<Vec<Vec<Symbol>>>> = vec![None; n];
    let mut open = vec![false; n];
    fn lead(
        i: usize,
        prods: &[Vec<Vec<Symbol>>],
        done: &mut Vec<Option<Vec<Vec<Symbol>>>>,
        open: &mut Vec<bool>,
    ) -> Result<Vec<Vec<Symbol>>, GrammarError> {
        if let Some(ps) = &done[i] {
            return Ok(ps.clone());
        }
        if open[i] {
            return Err(GrammarError::ContractivityViolation(Nonterminal::at(i)));
        }
        open[i] = true;
        let mut out: Vec<Vec<Symbol>> = Vec::new();
        for b in &prods[i] {
            match &b[0] {
                Symbol::T(_) => out.push(b.clone()),
                Symbol::N(y) => {
                    let Some(j) = y.index() else { continue };
                    for sigma in lead(j, prods, done, open)? {
                        let mut nb = sigma;
                        nb.extend_from_slice(&b[1..]);
                        out.push(nb);
                    }
                }
            }
        }
        let mut seen = HashSet::new();
        out.retain(|b| seen.insert(b.clone()));
        open[i] = false;
        done[i] = Some(out.clone());
        Ok(out)
    }
    let mut gnf = Vec::with_capacity(n);
    for i in 0..n {
        gnf.push(lead(i, &prods, &mut done, &mut open)?);
    }
    Ok(Grammar {
        origins: g.origins.clone(),
        productions: gnf,
        erased,
        starts: g.starts.clone(),
    })
}
