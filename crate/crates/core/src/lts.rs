//! The labelled transition system on types, and two bounded bisimulation
//! checks over it.
//!
//! The system is deterministic: each type has at most one successor per
//! label.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::types::{Kind, Label, Polarity, Quantifier, Shape, Signature, TypeExpr, TypeIdent, TypeNode, View};

/// A transition label; also the terminal alphabet of the grammars.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TransitionLabel {
    Unit,
    Base(String),
    ArrowDomain,
    ArrowRange,
    Field(Shape, Label),
    Quant(Quantifier, Kind),
    MsgData(Polarity),
    MsgCont(Polarity),
    Choice(View, Label),
    Index(usize),
}

impl fmt::Display for TransitionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransitionLabel::Unit => f.write_str("unit"),
            TransitionLabel::Base(b) => f.write_str(b),
            TransitionLabel::ArrowDomain => f.write_str("->d"),
            TransitionLabel::ArrowRange => f.write_str("->r"),
            TransitionLabel::Field(Shape::Record, l) => write!(f, "{{}}{l}"),
            TransitionLabel::Field(Shape::Variant, l) => write!(f, "<>{l}"),
            TransitionLabel::Quant(q, k) => write!(f, "{}[{k}]", q.keyword()),
            TransitionLabel::MsgData(p) => write!(f, "{}d", p.symbol()),
            TransitionLabel::MsgCont(p) => write!(f, "{}c", p.symbol()),
            TransitionLabel::Choice(v, l) => write!(f, "{}{l}", v.symbol()),
            TransitionLabel::Index(n) => write!(f, "{n}"),
        }
    }
}

// Labels are ordered by their printed form so that witnesses are
// reproducible and read naturally; the structural comparison only separates
// labels that print alike (a base type named like a label, say).
impl Ord for TransitionLabel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.to_string()
            .cmp(&other.to_string())
            .then_with(|| self.rank().cmp(&other.rank()))
    }
}

impl PartialOrd for TransitionLabel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl TransitionLabel {
    fn rank(&self) -> u8 {
        match self {
            TransitionLabel::Unit => 0,
            TransitionLabel::Base(_) => 1,
            TransitionLabel::ArrowDomain => 2,
            TransitionLabel::ArrowRange => 3,
            TransitionLabel::Field(..) => 4,
            TransitionLabel::Quant(..) => 5,
            TransitionLabel::MsgData(_) => 6,
            TransitionLabel::MsgCont(_) => 7,
            TransitionLabel::Choice(..) => 8,
            TransitionLabel::Index(_) => 9,
        }
    }
}

/// Formats a trace as space separated labels.
pub fn format_trace(trace: &[TransitionLabel]) -> String {
    trace.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LtsError {
    #[error("unbound type identifier `{0}`")]
    UnboundIdent(TypeIdent),
    #[error("NotContractive: `{0}` never reaches a type constructor")]
    NotContractive(TypeExpr),
    #[error("gave up after visiting {0} pairs of types")]
    LimitReached(usize),
}

pub type Transitions = BTreeMap<TransitionLabel, TypeExpr>;

/// All transitions of `t`.
pub fn step(t: &TypeExpr, sig: &Signature) -> Result<Transitions, LtsError> {
    let (head, rest) = head_normalize(t, sig)?;
    let mut out = Transitions::new();
    let Some(head) = head else {
        return Ok(out);
    };
    match rest {
        None => match head.node() {
            TypeNode::Unit => {
                out.insert(TransitionLabel::Unit, TypeExpr::skip());
            }
            TypeNode::Base(b) => {
                out.insert(TransitionLabel::Base(b.clone()), TypeExpr::skip());
            }
            TypeNode::Arrow(a, b) => {
                out.insert(TransitionLabel::ArrowDomain, a.clone());
                out.insert(TransitionLabel::ArrowRange, b.clone());
            }
            TypeNode::Labeled(shape, bs) => {
                for (l, b) in bs {
                    out.insert(TransitionLabel::Field(*shape, l.clone()), b.clone());
                }
            }
            TypeNode::Quant(q, k, body) => {
                out.insert(TransitionLabel::Quant(*q, *k), body.clone());
            }
            TypeNode::Message(p, payload) => {
                out.insert(TransitionLabel::MsgData(*p), payload.clone());
                out.insert(TransitionLabel::MsgCont(*p), TypeExpr::skip());
            }
            TypeNode::Choice(v, bs) => {
                for (l, b) in bs {
                    out.insert(TransitionLabel::Choice(*v, l.clone()), b.clone());
                }
            }
            TypeNode::Index(n) => {
                out.insert(TransitionLabel::Index(*n), TypeExpr::skip());
            }
            TypeNode::Skip | TypeNode::Seq(..) | TypeNode::Ident(_) => unreachable!("head is normal"),
        },
        Some(rest) => match head.node() {
            TypeNode::Message(p, payload) => {
                out.insert(TransitionLabel::MsgData(*p), payload.clone());
                out.insert(TransitionLabel::MsgCont(*p), rest);
            }
            TypeNode::Choice(v, bs) => {
                for (l, b) in bs {
                    out.insert(
                        TransitionLabel::Choice(*v, l.clone()),
                        TypeExpr::seq(b.clone(), rest.clone()),
                    );
                }
            }
            TypeNode::Index(n) => {
                out.insert(TransitionLabel::Index(*n), rest);
            }
            // A functional type followed by `;` is not a type and has no
            // transitions.
            _ => {}
        },
    }
    Ok(out)
}

/// Rewrites `t` to `head` or `head;rest` where `head` is a constructor other
/// than `skip` and `;`, following the rules for skip, nested sequence and
/// identifiers. Returns no head when `t` is terminated.
fn head_normalize(t: &TypeExpr, sig: &Signature) -> Result<(Option<TypeExpr>, Option<TypeExpr>), LtsError> {
    // Each stretch between two `skip` pops unfolds every identifier at most
    // once on a contractive input. Terminated identifiers can still expand to
    // exponentially many pops, so the overall cap is only a guard against
    // non-contractive input that keeps popping forever.
    let per_stretch = sig.len() + 1;
    let mut total_cap: usize = 1 << 24;
    let mut stretch = 0;
    let mut stack: Vec<TypeExpr> = Vec::new();
    let mut cur = t.clone();
    loop {
        match cur.node() {
            TypeNode::Seq(a, b) => {
                stack.push(b.clone());
                cur = a.clone();
            }
            TypeNode::Ident(x) => {
                stretch += 1;
                if stretch > per_stretch || total_cap == 0 {
                    return Err(LtsError::NotContractive(t.clone()));
                }
                total_cap -= 1;
                cur = sig.get(x).ok_or_else(|| LtsError::UnboundIdent(x.clone()))?.clone();
            }
            TypeNode::Skip => match stack.pop() {
                None => return Ok((None, None)),
                Some(next) => {
                    stretch = 0;
                    cur = next;
                }
            },
            _ => {
                // Pending right operands, outermost at the bottom; rebuild
                // them right nested, as reassociation would.
                let mut pending = stack.into_iter();
                let rest = pending
                    .next()
                    .map(|bottom| pending.fold(bottom, |acc, b| TypeExpr::seq(b, acc)));
                return Ok((Some(cur), rest));
            }
        }
    }
}

/// The `k`-th approximant of bisimilarity.
pub fn k_bisimilar(t: &TypeExpr, u: &TypeExpr, k: usize, sig: &Signature) -> Result<bool, LtsError> {
    BoundedBisim::new(sig).check(t, u, k)
}

/// Memoised `k`-bisimilarity; reuse one value for several queries over the
/// same signature.
pub struct BoundedBisim<'a> {
    sig: &'a Signature,
    steps: HashMap<TypeExpr, Transitions>,
    // For each pair: the largest depth known to hold and the smallest known
    // to fail.
    known: HashMap<(TypeExpr, TypeExpr), (usize, usize)>,
    limit: usize,
}

impl<'a> BoundedBisim<'a> {
    pub fn new(sig: &'a Signature) -> Self {
        Self::with_limit(sig, usize::MAX)
    }

    /// Fails with [`LtsError::LimitReached`] once more than `max_pairs`
    /// pairs have been examined.
    pub fn with_limit(sig: &'a Signature, max_pairs: usize) -> Self {
        BoundedBisim {
            sig,
            steps: HashMap::new(),
            known: HashMap::new(),
            limit: max_pairs,
        }
    }

    fn step(&mut self, t: &TypeExpr) -> Result<Transitions, LtsError> {
        if let Some(s) = self.steps.get(t) {
            return Ok(s.clone());
        }
        let s = step(t, self.sig)?;
        self.steps.insert(t.clone(), s.clone());
        Ok(s)
    }

    pub fn check(&mut self, t: &TypeExpr, u: &TypeExpr, k: usize) -> Result<bool, LtsError> {
        if k == 0 || t == u {
            return Ok(true);
        }
        let key = (t.clone(), u.clone());
        let (holds, fails) = self.known.get(&key).copied().unwrap_or((0, usize::MAX));
        if k <= holds {
            return Ok(true);
        }
        if k >= fails {
            return Ok(false);
        }
        if self.known.len() >= self.limit {
            return Err(LtsError::LimitReached(self.known.len()));
        }
        let st = self.step(t)?;
        let su = self.step(u)?;
        let mut ok = st.len() == su.len() && st.keys().zip(su.keys()).all(|(a, b)| a == b);
        if ok {
            for (a, t2) in &st {
                if !self.check(t2, &su[a], k - 1)? {
                    ok = false;
                    break;
                }
            }
        }
        let entry = self.known.entry(key).or_insert((0, usize::MAX));
        if ok {
            entry.0 = entry.0.max(k);
        } else {
            entry.1 = entry.1.min(k);
        }
        Ok(ok)
    }
}

/// A shortest trace of at most `max_depth` labels after which the enabled
/// labels of the two sides differ, the last label being enabled on one side
/// only. Ties are broken by label order.
pub fn distinguishing_trace(
    t: &TypeExpr,
    u: &TypeExpr,
    max_depth: usize,
    sig: &Signature,
) -> Result<Option<Vec<TransitionLabel>>, LtsError> {
    distinguishing_trace_within(t, u, max_depth, usize::MAX, sig)
}

/// [`distinguishing_trace`], failing with [`LtsError::LimitReached`] once
/// more than `max_pairs` pairs have been visited.
pub fn distinguishing_trace_within(
    t: &TypeExpr,
    u: &TypeExpr,
    max_depth: usize,
    max_pairs: usize,
    sig: &Signature,
) -> Result<Option<Vec<TransitionLabel>>, LtsError> {
    let mut visited: HashSet<(TypeExpr, TypeExpr)> = HashSet::new();
    let mut queue: VecDeque<(TypeExpr, TypeExpr, Vec<TransitionLabel>)> = VecDeque::new();
    visited.insert((t.clone(), u.clone()));
    queue.push_back((t.clone(), u.clone(), Vec::new()));
    while let Some((a, b, path)) = queue.pop_front() {
        if path.len() >= max_depth || a == b {
            continue;
        }
        let sa = step(&a, sig)?;
        let sb = step(&b, sig)?;
        let la: BTreeSet<&TransitionLabel> = sa.keys().collect();
        let lb: BTreeSet<&TransitionLabel> = sb.keys().collect();
        if let Some(first) = la.symmetric_difference(&lb).min() {
            let mut w = path;
            w.push((*first).clone());
            return Ok(Some(w));
        }
        for (l, a2) in sa {
            let b2 = sb[&l].clone();
            if visited.insert((a2.clone(), b2.clone())) {
                if visited.len() > max_pairs {
                    return Err(LtsError::LimitReached(visited.len()));
                }
                let mut p = path.clone();
                p.push(l);
                queue.push_back((a2, b2, p));
            }
        }
    }
    Ok(None)
}

/// Follows `trace` from `t`; `None` if some label is not enabled.
pub fn run_trace(t: &TypeExpr, trace: &[TransitionLabel], sig: &Signature) -> Result<Option<TypeExpr>, LtsError> {
    let mut cur = t.clone();
    for l in trace {
        match step(&cur, sig)?.remove(l) {
            Some(next) => cur = next,
            None => return Ok(None),
        }
    }
    Ok(Some(cur))
}

/// Every transition reachable from `t` in at most `depth` steps, breadth
/// first, each state expanded once.
pub fn reachable_transitions(
    t: &TypeExpr,
    depth: usize,
    sig: &Signature,
) -> Result<Vec<(TypeExpr, TransitionLabel, TypeExpr)>, LtsError> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    let mut queue = VecDeque::new();
    seen.insert(t.clone());
    queue.push_back((t.clone(), 0));
    while let Some((s, d)) = queue.pop_front() {
        if d >= depth {
            continue;
        }
        for (l, s2) in step(&s, sig)? {
            out.push((s.clone(), l, s2.clone()));
            if seen.insert(s2.clone()) {
                queue.push_back((s2, d + 1));
            }
        }
    }
    Ok(out)
}
