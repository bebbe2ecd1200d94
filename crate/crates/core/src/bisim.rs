//! Bisimilarity of words in a simple grammar.
//!
//! Simple grammars are deterministic, so a pair of words is explored by
//! matching single steps. The state space is infinite in general; it is kept
//! finite by splitting a pair `Xα, Yβ` at the canonical terminating trace of
//! the head with the smaller norm, which reduces it to a pair of heads with
//! short residues and a pair of tails.
//!
//! Productionless symbols such as `BOT` make a word stuck for good once they
//! reach the head, so nothing to their right is ever observable. Words are
//! kept truncated there, with a flag saying the word can no longer be
//! extended. Two norms are used:
//! the *open* norm counts the steps to consume a word completely, which is
//! what splitting needs, and the *stuck* norm counts the steps to a state
//! with no transitions, which every bisimulation preserves.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::grammar::{format_word, Grammar, Nonterminal, Symbol, Word};
use crate::lts::TransitionLabel;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BisimError {
    #[error("InputNotSimple: the grammar is not simple")]
    InputNotSimple,
    #[error("ResourceExhausted: gave up after {0} steps")]
    ResourceExhausted(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecideOptions {
    /// Upper bound on pairs examined and trace steps simulated.
    pub budget: usize,
    /// Upper bound on nesting of subgoals.
    pub max_depth: usize,
}

impl Default for DecideOptions {
    fn default() -> Self {
        DecideOptions {
            budget: 1_000_000,
            max_depth: 100_000,
        }
    }
}

#[derive(Debug, Clone)]
pub enum BisimVerdict {
    Equivalent(Certificate),
    NotEquivalent(Vec<TransitionLabel>),
}

impl BisimVerdict {
    pub fn is_equivalent(&self) -> bool {
        matches!(self, BisimVerdict::Equivalent(_))
    }
}

/// How a pair in a certificate is justified.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Justification {
    /// Both sides enable the same labels and each pair of successors is
    /// equal or listed in the certificate.
    Expanded,
    /// The pair `X α, Y β` follows by congruence from `X ρ ~ Y` and
    /// `α ~ ρ β`, both equal or listed earlier.
    Split {
        swapped: bool,
        residue: Word,
        residue_closed: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CertEntry {
    pub left: Word,
    pub right: Word,
    pub justification: Justification,
}

/// A finite relation whose pairs are bisimilar; see [`Certificate::verify`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Certificate {
    pub entries: Vec<CertEntry>,
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            let how = match &e.justification {
                Justification::Expanded => "expanded".to_string(),
                Justification::Split { residue, .. } => format!("split, residue {}", format_word(residue)),
            };
            writeln!(f, "{} ~ {}  [{}]", format_word(&e.left), format_word(&e.right), how)?;
        }
        Ok(())
    }
}

impl Certificate {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Replays the certificate: every expanded pair must have matching
    /// labels and successors that are equal or listed, and every split pair
    /// must be assembled from its two subgoals, each equal or listed before
    /// it. Such a relation is contained in bisimilarity.
    pub fn verify(&self, g: &Grammar) -> bool {
        let c = Compiled::new(g);
        let norm = |w: &Word| c.normalize(w.iter().map(|x| c.id(*x)), false).syms;
        let mut first: HashMap<(Vec<u32>, Vec<u32>), usize> = HashMap::new();
        for (i, e) in self.entries.iter().enumerate() {
            first.entry(pair_key(&norm(&e.left), &norm(&e.right))).or_insert(i);
        }
        let listed_before =
            |a: &[u32], b: &[u32], limit: usize| a == b || first.get(&pair_key(a, b)).is_some_and(|&j| j < limit);
        for (i, e) in self.entries.iter().enumerate() {
            let a = c.normalize(e.left.iter().map(|x| c.id(*x)), false);
            let b = c.normalize(e.right.iter().map(|x| c.id(*x)), false);
            match &e.justification {
                Justification::Expanded => {
                    if a.syms.is_empty() || b.syms.is_empty() {
                        return false;
                    }
                    if c.labels_of(a.syms[0]) != c.labels_of(b.syms[0]) {
                        return false;
                    }
                    for l in c.labels_of(a.syms[0]) {
                        let a2 = c.step(&a, l).expect("enabled");
                        let b2 = c.step(&b, l).expect("enabled");
                        if !listed_before(&a2.syms, &b2.syms, usize::MAX) {
                            return false;
                        }
                    }
                }
                Justification::Split {
                    swapped,
                    residue,
                    residue_closed,
                } => {
                    let (x, y) = if *swapped { (&b, &a) } else { (&a, &b) };
                    if x.syms.is_empty() || y.syms.is_empty() {
                        return false;
                    }
                    let rho = c.normalize(residue.iter().map(|s| c.id(*s)), *residue_closed);
                    let head_x = c.normalize(std::iter::once(x.syms[0]), false);
                    let base_l = c.concat(&head_x, &rho);
                    let base_r = c.normalize(std::iter::once(y.syms[0]), false);
                    let tail_l = c.normalize(x.syms[1..].iter().copied(), x.closed);
                    let tail_r = c.concat(&rho, &c.normalize(y.syms[1..].iter().copied(), y.closed));
                    if !listed_before(&base_l.syms, &base_r.syms, i) || !listed_before(&tail_l.syms, &tail_r.syms, i) {
                        return false;
                    }
                }
            }
        }
        true
    }
}

fn pair_key(a: &[u32], b: &[u32]) -> (Vec<u32>, Vec<u32>) {
    if a <= b {
        (a.to_vec(), b.to_vec())
    } else {
        (b.to_vec(), a.to_vec())
    }
}

/// A normalised word: `syms` holds the observable prefix and `closed` says
/// that whatever is appended will never be reached.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct W {
    syms: Vec<u32>,
    closed: bool,
}

const INF: u64 = u64::MAX;

fn add(a: u64, b: u64) -> u64 {
    if a == INF || b == INF {
        INF
    } else {
        a.saturating_add(b).min(INF - 1)
    }
}

struct Compiled {
    nts: Vec<Nonterminal>,
    labels: Vec<TransitionLabel>,
    // Per symbol, productions sorted by label id.
    prods: Vec<Vec<(u32, Vec<u32>)>>,
    erased: Vec<bool>,
    dead: Vec<bool>,
    open: Vec<u64>,
    // Steps to get stuck before the symbol is used up.
    stuck: Vec<u64>,
    can_close: Vec<bool>,
}

impl Compiled {
    fn new(g: &Grammar) -> Compiled {
        let n = g.len();
        let labels = g.terminals();
        let label_id: HashMap<&TransitionLabel, u32> = labels.iter().enumerate().map(|(i, l)| (l, i as u32)).collect();
        let mut nts: Vec<Nonterminal> = (0..n).map(Grammar::nonterminal).collect();
        nts.push(Nonterminal::BOTTOM);
        let id = |x: Nonterminal| x.index().map_or(n as u32, |i| i as u32);
        let mut prods = Vec::with_capacity(n + 1);
        for &x in &nts {
            let mut ps: Vec<(u32, Vec<u32>)> = g
                .productions_of(x)
                .iter()
                .map(|b| {
                    let a = match &b[0] {
                        Symbol::T(a) => label_id[a],
                        Symbol::N(_) => unreachable!("normal form"),
                    };
                    let body = b[1..]
                        .iter()
                        .map(|s| match s {
                            Symbol::N(y) => id(*y),
                            Symbol::T(_) => unreachable!("normal form"),
                        })
                        .collect();
                    (a, body)
                })
                .collect();
            ps.sort_by_key(|p| p.0);
            prods.push(ps);
        }
        let erased: Vec<bool> = nts.iter().map(|x| g.is_erased(*x)).collect();
        let dead: Vec<bool> = (0..=n).map(|i| prods[i].is_empty() && !erased[i]).collect();
        let mut c = Compiled {
            nts,
            labels,
            prods,
            erased,
            dead,
            open: vec![INF; n + 1],
            stuck: vec![INF; n + 1],
            can_close: vec![false; n + 1],
        };
        c.compute_norms();
        c
    }

    fn compute_norms(&mut self) {
        let m = self.prods.len();
        // Open norm: consume the whole body, so no productionless symbol may
        // occur in it.
        loop {
            let mut changed = false;
            for i in 0..m {
                for (_, body) in &self.prods[i] {
                    let mut n = 1;
                    for &s in body {
                        if self.erased[s as usize] {
                            continue;
                        }
                        n = add(n, self.open[s as usize]);
                    }
                    if n < self.open[i] {
                        self.open[i] = n;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        loop {
            let mut changed = false;
            for i in 0..m {
                for (_, body) in &self.prods[i] {
                    let w = self.normalize(body.iter().copied(), false);
                    let n = add(1, self.stuck_within(&w));
                    if n < self.stuck[i] {
                        self.stuck[i] = n;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        loop {
            let mut changed = false;
            for i in 0..m {
                if self.can_close[i] {
                    continue;
                }
                let closes = self.prods[i].iter().any(|(_, body)| {
                    body.iter()
                        .any(|&s| self.dead[s as usize] || self.can_close[s as usize])
                });
                if closes {
                    self.can_close[i] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
    }

    fn id(&self, x: Nonterminal) -> u32 {
        x.index().map_or((self.nts.len() - 1) as u32, |i| i as u32)
    }

    /// Drops erased symbols and cuts the word at the first symbol after
    /// which nothing is observable.
    fn normalize(&self, raw: impl IntoIterator<Item = u32>, tail_closed: bool) -> W {
        let mut syms = Vec::new();
        for s in raw {
            let i = s as usize;
            if self.erased[i] {
                continue;
            }
            if self.dead[i] {
                return W { syms, closed: true };
            }
            syms.push(s);
            if self.open[i] == INF {
                return W { syms, closed: true };
            }
        }
        W {
            syms,
            closed: tail_closed,
        }
    }

    fn concat(&self, a: &W, b: &W) -> W {
        if a.closed {
            a.clone()
        } else {
            let mut syms = a.syms.clone();
            syms.extend_from_slice(&b.syms);
            W { syms, closed: b.closed }
        }
    }

    fn labels_of(&self, x: u32) -> Vec<u32> {
        self.prods[x as usize].iter().map(|p| p.0).collect()
    }

    fn step(&self, w: &W, label: u32) -> Option<W> {
        let (&x, rest) = w.syms.split_first()?;
        let ps = &self.prods[x as usize];
        let i = ps.binary_search_by_key(&label, |p| p.0).ok()?;
        let raw = ps[i].1.iter().chain(rest.iter()).copied();
        Some(self.normalize(raw, w.closed))
    }

    /// Steps to a state with no transitions: get stuck inside some symbol,
    /// having consumed the ones before it, or consume the whole word.
    fn stuck_norm(&self, w: &W) -> u64 {
        let (inside, all) = self.stuck_parts(w);
        inside.min(all)
    }

    /// Steps to get stuck before `w`, the body of a production, is used up.
    /// A body cut at a productionless symbol gets stuck once the symbols
    /// before it are consumed.
    fn stuck_within(&self, w: &W) -> u64 {
        let (inside, all) = self.stuck_parts(w);
        if w.closed {
            inside.min(all)
        } else {
            inside
        }
    }

    fn stuck_parts(&self, w: &W) -> (u64, u64) {
        let mut best = INF;
        let mut prefix = 0;
        for &s in &w.syms {
            best = best.min(add(prefix, self.stuck[s as usize]));
            prefix = add(prefix, self.open[s as usize]);
            if prefix == INF {
                break;
            }
        }
        (best, prefix)
    }

    /// The least label of a production of `x` realising its open norm.
    fn open_step(&self, x: u32) -> Option<u32> {
        let target = self.open[x as usize];
        if target == INF {
            return None;
        }
        self.prods[x as usize]
            .iter()
            .find(|(_, body)| {
                let mut n = 1;
                for &s in body {
                    if !self.erased[s as usize] {
                        n = add(n, self.open[s as usize]);
                    }
                }
                n == target
            })
            .map(|p| p.0)
    }

    /// The least label leading to a state one step closer to being stuck.
    fn stuck_step(&self, w: &W) -> Option<u32> {
        let target = self.stuck_norm(w);
        if target == 0 || target == INF {
            return None;
        }
        self.labels_of(*w.syms.first()?)
            .into_iter()
            .find(|&l| self.step(w, l).is_some_and(|w2| self.stuck_norm(&w2) == target - 1))
    }

    fn word(&self, w: &W) -> Word {
        w.syms.iter().map(|&s| self.nts[s as usize]).collect()
    }
}

struct Decider<'c> {
    c: &'c Compiled,
    opts: DecideOptions,
    trail: Vec<CertEntry>,
    holds: HashSet<(Vec<u32>, Vec<u32>)>,
    trail_keys: Vec<(Vec<u32>, Vec<u32>)>,
    refuted: HashMap<(Vec<u32>, Vec<u32>), Why>,
    splitting: HashSet<(Vec<u32>, Vec<u32>)>,
    work: usize,
    depth: usize,
}

/// Why a pair was refuted, as a way to build a trace telling it apart.
enum Why {
    /// Empty side, different labels or different stuck norms.
    Plain,
    /// One side cannot follow these labels; the last one is missing.
    Trace(Vec<u32>),
    /// After these labels, both sides reach the given refuted pair. With no
    /// labels, the pair is one that any trace separating it also
    /// separates the original, as long as the assumptions made on the way
    /// hold up.
    Then(Vec<u32>, W, W),
}

impl<'c> Decider<'c> {
    fn tick(&mut self, n: usize) -> Result<(), BisimError> {
        self.work = self.work.saturating_add(n);
        if self.work > self.opts.budget {
            Err(BisimError::ResourceExhausted(self.work))
        } else {
            Ok(())
        }
    }

    fn record(&mut self, a: &W, b: &W, justification: Justification) {
        let key = pair_key(&a.syms, &b.syms);
        self.holds.insert(key.clone());
        self.trail_keys.push(key);
        self.trail.push(CertEntry {
            left: self.c.word(a),
            right: self.c.word(b),
            justification,
        });
    }

    fn undo_to(&mut self, mark: usize) {
        while self.trail.len() > mark {
            self.trail.pop();
            let key = self.trail_keys.pop().expect("parallel");
            self.holds.remove(&key);
        }
    }

    fn check(&mut self, a: &W, b: &W) -> Result<bool, BisimError> {
        if a.syms == b.syms {
            return Ok(true);
        }
        let key = pair_key(&a.syms, &b.syms);
        if self.holds.contains(&key) {
            return Ok(true);
        }
        if self.refuted.contains_key(&key) {
            return Ok(false);
        }
        if a.syms.is_empty()
            || b.syms.is_empty()
            || self.c.labels_of(a.syms[0]) != self.c.labels_of(b.syms[0])
            || self.c.stuck_norm(a) != self.c.stuck_norm(b)
        {
            self.refuted.insert(key, Why::Plain);
            return Ok(false);
        }
        self.tick(1)?;
        self.depth += 1;
        if self.depth > self.opts.max_depth {
            return Err(BisimError::ResourceExhausted(self.work));
        }
        let r = self.check_inner(a, b, key);
        self.depth -= 1;
        r
    }

    fn check_inner(&mut self, a: &W, b: &W, key: (Vec<u32>, Vec<u32>)) -> Result<bool, BisimError> {
        let (x, y) = (a.syms[0], b.syms[0]);
        let (ox, oy) = (self.c.open[x as usize], self.c.open[y as usize]);
        if (ox == INF && oy == INF) || self.splitting.contains(&key) {
            return self.expand(a, b, key);
        }
        let swapped = oy < ox;
        let (xs, ys) = if swapped { (b, a) } else { (a, b) };
        let head_x = xs.syms[0];
        let head_y = ys.syms[0];

        // Run the canonical consuming trace of the smaller head on the other.
        let mut xw = self.c.normalize([head_x], false);
        let mut yw = self.c.normalize([head_y], false);
        let mut trace = Vec::new();
        while !xw.syms.is_empty() {
            self.tick(1)?;
            let l = self.c.open_step(xw.syms[0]).expect("finite open norm");
            trace.push(l);
            xw = self.c.step(&xw, l).expect("enabled");
            match self.c.step(&yw, l) {
                Some(next) => yw = next,
                None => {
                    self.refuted.insert(key, Why::Trace(trace));
                    return Ok(false);
                }
            }
        }
        let rho = yw;
        let x_tail = self.c.normalize(xs.syms[1..].iter().copied(), xs.closed);
        let y_tail = self.c.normalize(ys.syms[1..].iter().copied(), ys.closed);
        let base_l = self.c.concat(&self.c.normalize([head_x], false), &rho);
        let base_r = self.c.normalize([head_y], false);
        let tail_r = self.c.concat(&rho, &y_tail);

        // The head goal follows from the pair when nothing follows Y, or
        // when the tail is normed and neither side of the head goal can get
        // stuck before being consumed.
        let necessary = y_tail.syms.is_empty()
            || (self.c.stuck_norm(&y_tail) != INF
                && !rho.closed
                && !base_l
                    .syms
                    .iter()
                    .chain(base_r.syms.iter())
                    .any(|&s| self.c.can_close[s as usize]));

        let mark = self.trail.len();
        self.splitting.insert(key.clone());
        // Both sides reach the tail goal by the same trace, so its failure
        // settles the pair.
        if !self.check(&x_tail, &tail_r)? {
            self.splitting.remove(&key);
            self.undo_to(mark);
            self.refuted.insert(key, Why::Then(trace, x_tail, tail_r));
            return Ok(false);
        }
        let ok = self.check(&base_l, &base_r)?;
        self.splitting.remove(&key);
        if ok {
            let residue = self.c.word(&rho);
            self.record(
                a,
                b,
                Justification::Split {
                    swapped,
                    residue,
                    residue_closed: rho.closed,
                },
            );
            return Ok(true);
        }
        self.undo_to(mark);
        if necessary {
            self.refuted.insert(key, Why::Then(Vec::new(), base_l, base_r));
            return Ok(false);
        }
        self.expand(a, b, key)
    }

    fn expand(&mut self, a: &W, b: &W, key: (Vec<u32>, Vec<u32>)) -> Result<bool, BisimError> {
        let mark = self.trail.len();
        self.record(a, b, Justification::Expanded);
        for l in self.c.labels_of(a.syms[0]) {
            let a2 = self.c.step(a, l).expect("enabled");
            let b2 = self.c.step(b, l).expect("enabled");
            if !self.check(&a2, &b2)? {
                self.undo_to(mark);
                self.refuted.insert(key, Why::Then(vec![l], a2, b2));
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Decides whether two words are bisimilar.
pub fn decide(g: &Grammar, left: &[Nonterminal], right: &[Nonterminal]) -> Result<BisimVerdict, BisimError> {
    decide_with(g, left, right, DecideOptions::default())
}

pub fn decide_with(
    g: &Grammar,
    left: &[Nonterminal],
    right: &[Nonterminal],
    opts: DecideOptions,
) -> Result<BisimVerdict, BisimError> {
    if !g.is_simple() {
        return Err(BisimError::InputNotSimple);
    }
    let c = Compiled::new(g);
    let a = c.normalize(left.iter().map(|x| c.id(*x)), false);
    let b = c.normalize(right.iter().map(|x| c.id(*x)), false);
    // Subgoals nest deeply on long words; give the search its own stack.
    let verdict = std::thread::scope(|s| {
        std::thread::Builder::new()
            .stack_size(1 << 29)
            .spawn_scoped(s, || {
                let mut d = Decider {
                    c: &c,
                    opts,
                    trail: Vec::new(),
                    holds: HashSet::new(),
                    trail_keys: Vec::new(),
                    refuted: HashMap::new(),
                    splitting: HashSet::new(),
                    work: 0,
                    depth: 0,
                };
                let ok = d.check(&a, &b)?;
                Ok::<_, BisimError>(if ok {
                    Ok(Certificate { entries: d.trail })
                } else {
                    Err(d.refuted)
                })
            })
            .expect("spawn decider thread")
            .join()
            .expect("decider thread panicked")
    })?;
    match verdict {
        Ok(cert) => Ok(BisimVerdict::Equivalent(cert)),
        Err(why) => witness(&c, &a, &b, &why, opts.budget).map(BisimVerdict::NotEquivalent),
    }
}

/// Pairs visited looking for a short witness before falling back on the
/// reasons recorded by the decider.
const SHORT_SEARCH: usize = 10_000;

/// A trace telling apart two words found not bisimilar: a shortest one if
/// it turns up quickly, otherwise one assembled from the reasons the
/// decider recorded, otherwise a shortest one after all.
fn witness(
    c: &Compiled,
    a: &W,
    b: &W,
    why: &HashMap<(Vec<u32>, Vec<u32>), Why>,
    budget: usize,
) -> Result<Vec<TransitionLabel>, BisimError> {
    let to_labels = |w: Vec<u32>| w.into_iter().map(|l| c.labels[l as usize].clone()).collect();
    if let Some(w) = shortest_witness(c, a, b, budget.min(SHORT_SEARCH)) {
        return Ok(to_labels(w));
    }
    if let Some(w) = guided_witness(c, a, b, why, budget) {
        if separates(c, a, b, &w) {
            return Ok(to_labels(w));
        }
    }
    shortest_witness(c, a, b, budget)
        .map(to_labels)
        .ok_or(BisimError::ResourceExhausted(budget))
}

/// Breadth first search over pairs in label order. A pair whose stuck norms
/// differ is settled by following the shorter side to a stuck state.
fn shortest_witness(c: &Compiled, a: &W, b: &W, budget: usize) -> Option<Vec<u32>> {
    let mut visited: HashSet<(Vec<u32>, Vec<u32>)> = HashSet::new();
    let mut queue: VecDeque<(W, W, Vec<u32>)> = VecDeque::new();
    visited.insert((a.syms.clone(), b.syms.clone()));
    queue.push_back((a.clone(), b.clone(), Vec::new()));
    let mut work = 0usize;
    while let Some((a, b, path)) = queue.pop_front() {
        work += 1;
        if work > budget {
            return None;
        }
        if a.syms == b.syms {
            continue;
        }
        if let Some(w) = settle(c, &a, &b, &path) {
            return Some(w);
        }
        for l in c.labels_of(a.syms[0]) {
            let a2 = c.step(&a, l).expect("enabled");
            let b2 = c.step(&b, l).expect("enabled");
            if visited.insert((a2.syms.clone(), b2.syms.clone())) {
                let mut p = path.clone();
                p.push(l);
                queue.push_back((a2, b2, p));
            }
        }
    }
    None
}

/// Follows the reasons recorded for refuted pairs.
fn guided_witness(
    c: &Compiled,
    a: &W,
    b: &W,
    why: &HashMap<(Vec<u32>, Vec<u32>), Why>,
    limit: usize,
) -> Option<Vec<u32>> {
    let (mut a, mut b) = (a.clone(), b.clone());
    let mut path = Vec::new();
    for _ in 0..limit {
        if a.syms == b.syms {
            return None;
        }
        if let Some(w) = settle(c, &a, &b, &path) {
            return Some(w);
        }
        match why.get(&pair_key(&a.syms, &b.syms))? {
            Why::Plain => return None,
            Why::Trace(labels) => {
                path.extend_from_slice(labels);
                return Some(path);
            }
            Why::Then(labels, a2, b2) => {
                path.extend_from_slice(labels);
                a = a2.clone();
                b = b2.clone();
            }
        }
    }
    None
}

/// The trace ending at `a, b` extended to a witness, when the two differ
/// in their labels right away or in their stuck norms.
fn settle(c: &Compiled, a: &W, b: &W, path: &[u32]) -> Option<Vec<u32>> {
    if let Some(l) = first_mismatch(c, a, b) {
        return Some(path.iter().copied().chain([l]).collect());
    }
    let (na, nb) = (c.stuck_norm(a), c.stuck_norm(b));
    if na == nb {
        return None;
    }
    let (mut short, mut long) = if na < nb {
        (a.clone(), b.clone())
    } else {
        (b.clone(), a.clone())
    };
    let mut path = path.to_vec();
    loop {
        let l = c.stuck_step(&short).expect("finite stuck norm above zero");
        path.push(l);
        short = c.step(&short, l).expect("enabled");
        long = c.step(&long, l).expect("labels matched");
        if let Some(l) = first_mismatch(c, &short, &long) {
            path.push(l);
            return Some(path);
        }
    }
}

fn first_mismatch(c: &Compiled, a: &W, b: &W) -> Option<u32> {
    let la: BTreeSet<u32> = a
        .syms
        .first()
        .map(|&x| c.labels_of(x))
        .unwrap_or_default()
        .into_iter()
        .collect();
    let lb: BTreeSet<u32> = b
        .syms
        .first()
        .map(|&x| c.labels_of(x))
        .unwrap_or_default()
        .into_iter()
        .collect();
    la.symmetric_difference(&lb).next().copied()
}

fn separates(c: &Compiled, a: &W, b: &W, w: &[u32]) -> bool {
    let Some((&last, prefix)) = w.split_last() else {
        return false;
    };
    let (mut a, mut b) = (a.clone(), b.clone());
    for &l in prefix {
        match (c.step(&a, l), c.step(&b, l)) {
            (Some(a2), Some(b2)) => {
                a = a2;
                b = b2;
            }
            _ => return false,
        }
    }
    c.step(&a, last).is_some() != c.step(&b, last).is_some()
}

/// Checks that `witness` separates the words: every label but the last is
/// enabled on both sides, and the last on exactly one.
pub fn replay_witness(g: &Grammar, left: &[Nonterminal], right: &[Nonterminal], witness: &[TransitionLabel]) -> bool {
    let Some((last, prefix)) = witness.split_last() else {
        return false;
    };
    let mut a: Word = left.to_vec();
    let mut b: Word = right.to_vec();
    for l in prefix {
        match (g.word_step(&a).remove(l), g.word_step(&b).remove(l)) {
            (Some(a2), Some(b2)) => {
                a = a2;
                b = b2;
            }
            _ => return false,
        }
    }
    g.word_step(&a).contains_key(last) != g.word_step(&b).contains_key(last)
}

/// The `k`-th approximant of bisimilarity, by unrolling the word transition
/// system directly.
pub fn bounded_word_bisim(g: &Grammar, left: &[Nonterminal], right: &[Nonterminal], k: usize) -> bool {
    bounded_word_bisim_within(g, left, right, k, usize::MAX).expect("no limit")
}

/// [`bounded_word_bisim`], failing with [`BisimError::ResourceExhausted`]
/// once more than `max_pairs` pairs of words have been examined.
pub fn bounded_word_bisim_within(
    g: &Grammar,
    left: &[Nonterminal],
    right: &[Nonterminal],
    k: usize,
    max_pairs: usize,
) -> Result<bool, BisimError> {
    let mut memo: HashMap<(Word, Word), (usize, usize)> = HashMap::new();
    bounded(g, left.to_vec(), right.to_vec(), k, &mut memo, max_pairs)
}

fn bounded(
    g: &Grammar,
    a: Word,
    b: Word,
    k: usize,
    memo: &mut HashMap<(Word, Word), (usize, usize)>,
    limit: usize,
) -> Result<bool, BisimError> {
    if k == 0 || a == b {
        return Ok(true);
    }
    let key = (a, b);
    let (holds, fails) = memo.get(&key).copied().unwrap_or((0, usize::MAX));
    if k <= holds {
        return Ok(true);
    }
    if k >= fails {
        return Ok(false);
    }
    if memo.len() >= limit {
        return Err(BisimError::ResourceExhausted(limit));
    }
    let sa = g.word_step(&key.0);
    let sb = g.word_step(&key.1);
    let mut ok = sa.len() == sb.len() && sa.keys().zip(sb.keys()).all(|(x, y)| x == y);
    if ok {
        for (l, a2) in sa {
            let b2 = sb[&l].clone();
            if !bounded(g, a2, b2, k - 1, memo, limit)? {
                ok = false;
                break;
            }
        }
    }
    let e = memo.entry(key).or_insert((0, usize::MAX));
    if ok {
        e.0 = e.0.max(k);
    } else {
        e.1 = e.1.min(k);
    }
    Ok(ok)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::{build_shared_grammar, to_gnf, Production};
    use crate::lts::format_trace;
    use crate::parse::parse_signature;
    use crate::types::{Label, TypeExpr, View};

    fn sec5() -> Grammar {
        let sig = parse_signature("T = !V;W\nU = !(V;V);W\nV = +{go: skip}\nW = +{go: W}").unwrap();
        to_gnf(&build_shared_grammar(&[TypeExpr::ident("T"), TypeExpr::ident("U")], &sig).unwrap()).unwrap()
    }

    #[test]
    fn sec5_not_equivalent() {
        let g = sec5();
        let (t, u) = (g.start_word(0), g.start_word(1));
        match decide(&g, &t, &u).unwrap() {
            BisimVerdict::NotEquivalent(w) => {
                assert_eq!(format_trace(&w), "!d +go +go");
                assert!(replay_witness(&g, &t, &u, &w));
            }
            BisimVerdict::Equivalent(_) => panic!("expected a witness"),
        }
        assert!(bounded_word_bisim(&g, &t, &u, 2));
        assert!(!bounded_word_bisim(&g, &t, &u, 3));
    }

    #[test]
    fn reflexive_and_stuck_pairs() {
        let g = sec5();
        let t = g.start_word(0);
        assert!(decide(&g, &t, &t).unwrap().is_equivalent());
        // X_W is the nonterminal reached from T by !c.
        let w = g.word_step(&t)[&TransitionLabel::MsgCont(crate::types::Polarity::Out)].clone();
        let stuck = [Nonterminal::BOTTOM, w[0]];
        assert!(decide(&g, &stuck, &[Nonterminal::BOTTOM]).unwrap().is_equivalent());
    }

    #[test]
    fn closing_symbol_against_open_end() {
        // A -> a BOT | b B, B -> c   against   C -> a | b B
        let a = Symbol::T(TransitionLabel::Choice(View::Internal, Label::new("a")));
        let b = Symbol::T(TransitionLabel::Choice(View::Internal, Label::new("b")));
        let cc = Symbol::T(TransitionLabel::Choice(View::Internal, Label::new("c")));
        let x = |i| Grammar::nonterminal(i);
        let g = Grammar::from_productions(
            3,
            &[x(0), x(2)],
            &[
                Production {
                    head: x(0),
                    body: vec![a.clone(), Symbol::N(Nonterminal::BOTTOM)],
                },
                Production {
                    head: x(0),
                    body: vec![b.clone(), Symbol::N(x(1))],
                },
                Production {
                    head: x(1),
                    body: vec![cc],
                },
                Production {
                    head: x(2),
                    body: vec![a],
                },
                Production {
                    head: x(2),
                    body: vec![b, Symbol::N(x(1))],
                },
            ],
        );
        let v = decide(&g, &[x(0)], &[x(2)]).unwrap();
        match v {
            BisimVerdict::Equivalent(cert) => assert!(cert.verify(&g)),
            BisimVerdict::NotEquivalent(w) => panic!("unexpected witness {}", format_trace(&w)),
        }
        // Followed by something observable, the two differ.
        let v = decide(&g, &[x(0), x(1)], &[x(2), x(1)]).unwrap();
        assert!(!v.is_equivalent());
    }

    #[test]
    fn rejects_non_simple() {
        let a = Symbol::T(TransitionLabel::Unit);
        let x = Grammar::nonterminal(0);
        let g = Grammar::from_productions(
            1,
            &[x],
            &[
                Production {
                    head: x,
                    body: vec![a.clone()],
                },
                Production {
                    head: x,
                    body: vec![a, Symbol::N(x)],
                },
            ],
        );
        assert!(matches!(decide(&g, &[x], &[x]), Err(BisimError::InputNotSimple)));
    }
}
