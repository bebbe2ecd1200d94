//! Goal-directed search for derivations of `T ≃ U` in the syntactic
//! equivalence rules, read coinductively.
//!
//! At most one rule applies to a goal in the fixed order used here, and
//! every rule is invertible on types, so a goal no rule matches refutes the
//! whole search. A goal met again on its own path is discharged only when a
//! rule that consumes a constructor lies in between; otherwise the rules
//! would merely be shuffling syntax.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::types::{Signature, TypeExpr, TypeIdent, TypeNode};
use crate::wellformed::{unbound_in, Facts};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rule {
    Unit,
    Base,
    Arrow,
    Rcd,
    Quant,
    Skip,
    Msg,
    Choice,
    Index,
    IdL,
    IdR,
    SkipSeqL,
    SkipSeqR,
    MsgSeq1L,
    MsgSeq1R,
    MsgSeq2,
    ChoiceSeqL,
    ChoiceSeqR,
    SeqSeqL,
    SeqSeqR,
    IndexSeq1L,
    IndexSeq1R,
    IndexSeq2,
    IdSeqL,
    IdSeqR,
    /// Identical sides mentioning an identifier. Reflexivity is admissible,
    /// and for non-regular types it has no finite cyclic derivation.
    Refl,
    /// Discharged by an ancestor with the same goal.
    Cycle,
}

impl Rule {
    /// Rules that consume a type constructor.
    pub fn is_productive(self) -> bool {
        matches!(
            self,
            Rule::Unit
                | Rule::Base
                | Rule::Arrow
                | Rule::Rcd
                | Rule::Quant
                | Rule::Skip
                | Rule::Msg
                | Rule::Choice
                | Rule::Index
                | Rule::MsgSeq1L
                | Rule::MsgSeq1R
                | Rule::MsgSeq2
                | Rule::IndexSeq1L
                | Rule::IndexSeq1R
                | Rule::IndexSeq2
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            Rule::Unit => "E-UNIT",
            Rule::Base => "E-BASE",
            Rule::Arrow => "E-ARROW",
            Rule::Rcd => "E-RCD",
            Rule::Quant => "E-QUANT",
            Rule::Skip => "E-SKIP",
            Rule::Msg => "E-MSG",
            Rule::Choice => "E-CHOICE",
            Rule::Index => "E-INDEX",
            Rule::IdL => "E-IDL",
            Rule::IdR => "E-IDR",
            Rule::SkipSeqL => "E-SKIPSEQL",
            Rule::SkipSeqR => "E-SKIPSEQR",
            Rule::MsgSeq1L => "E-MSGSEQ1L",
            Rule::MsgSeq1R => "E-MSGSEQ1R",
            Rule::MsgSeq2 => "E-MSGSEQ2",
            Rule::ChoiceSeqL => "E-CHOICESEQL",
            Rule::ChoiceSeqR => "E-CHOICESEQR",
            Rule::SeqSeqL => "E-SEQSEQL",
            Rule::SeqSeqR => "E-SEQSEQR",
            Rule::IndexSeq1L => "E-INDEXSEQ1L",
            Rule::IndexSeq1R => "E-INDEXSEQ1R",
            Rule::IndexSeq2 => "E-INDEXSEQ2",
            Rule::IdSeqL => "E-IDSEQL",
            Rule::IdSeqR => "E-IDSEQR",
            Rule::Refl => "REFL",
            Rule::Cycle => "CYCLE",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Goal {
    pub left: TypeExpr,
    pub right: TypeExpr,
}

impl fmt::Display for Goal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ~= {}", self.left, self.right)
    }
}

/// A rule application with derivations of its premises. Side conditions
/// (terminated, contractive) are checked, not derived.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Derivation {
    pub rule: Rule,
    pub goal: Goal,
    pub premises: Vec<Arc<Derivation>>,
}

impl Derivation {
    /// Distinct nodes, counting shared subderivations once per occurrence.
    pub fn size(&self) -> usize {
        1 + self.premises.iter().map(|p| p.size()).sum::<usize>()
    }

    /// Leaves are axioms, reflexive goals or cycles.
    pub fn is_closed(&self) -> bool {
        if self.premises.is_empty() {
            matches!(
                self.rule,
                Rule::Unit
                    | Rule::Base
                    | Rule::Skip
                    | Rule::Index
                    | Rule::MsgSeq1L
                    | Rule::MsgSeq1R
                    | Rule::IndexSeq1L
                    | Rule::IndexSeq1R
                    | Rule::Refl
                    | Rule::Cycle
            )
        } else {
            self.premises.iter().all(|p| p.is_closed())
        }
    }

    fn write_indented(&self, f: &mut fmt::Formatter<'_>, depth: usize) -> fmt::Result {
        writeln!(f, "{:indent$}{}  {}", "", self.rule, self.goal, indent = 2 * depth)?;
        for p in &self.premises {
            p.write_indented(f, depth + 1)?;
        }
        Ok(())
    }
}

impl fmt::Display for Derivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_indented(f, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Proven(Arc<Derivation>),
    /// No rule applies to this goal.
    Refuted(Goal),
    /// Fuel ran out, or the search went in circles without consuming
    /// anything.
    Unknown,
}

impl Verdict {
    pub fn is_proven(&self) -> bool {
        matches!(self, Verdict::Proven(_))
    }

    pub fn is_refuted(&self) -> bool {
        matches!(self, Verdict::Refuted(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SyntacticError {
    #[error("unbound type identifier `{0}`")]
    UnboundIdent(TypeIdent),
}

/// Searches for a derivation of `t ≃ u`, spending at most `fuel` rule
/// applications.
pub fn syntactic_check(t: &TypeExpr, u: &TypeExpr, sig: &Signature, fuel: usize) -> Result<Verdict, SyntacticError> {
    let facts = Facts::new(sig).map_err(|e| SyntacticError::UnboundIdent(e.0))?;
    if let Some(x) = unbound_in(t, sig).into_iter().chain(unbound_in(u, sig)).next() {
        return Err(SyntacticError::UnboundIdent(x));
    }
    let goal = Goal {
        left: t.clone(),
        right: u.clone(),
    };
    let verdict = std::thread::scope(|s| {
        std::thread::Builder::new()
            .stack_size(1 << 28)
            .spawn_scoped(s, || {
                let mut search = Search {
                    sig,
                    facts: &facts,
                    fuel,
                    path: HashMap::new(),
                    proven: HashMap::new(),
                    refuted: HashMap::new(),
                    depth: 0,
                };
                match search.solve(goal, 0) {
                    Outcome::Proven(d, _) => Verdict::Proven(d),
                    Outcome::Refuted(g) => Verdict::Refuted(g),
                    Outcome::Unknown => Verdict::Unknown,
                }
            })
            .expect("spawn search thread")
            .join()
            .expect("search thread panicked")
    });
    Ok(verdict)
}

/// Longest path explored before giving up with `Unknown`.
const MAX_PATH: usize = 20_000;

enum Outcome {
    /// The derivation, and the shallowest ancestor depth a cycle in it
    /// refers to (`usize::MAX` if none).
    Proven(Arc<Derivation>, usize),
    Refuted(Goal),
    Unknown,
}

struct Search<'a> {
    sig: &'a Signature,
    facts: &'a Facts,
    fuel: usize,
    // Goals on the current path: depth and productive count on entry.
    path: HashMap<Goal, (usize, usize)>,
    proven: HashMap<Goal, Arc<Derivation>>,
    refuted: HashMap<Goal, Goal>,
    depth: usize,
}

enum Plan {
    Axiom(Rule),
    Premises(Rule, Vec<Goal>),
    Stuck,
}

fn goal(left: TypeExpr, right: TypeExpr) -> Goal {
    Goal { left, right }
}

impl<'a> Search<'a> {
    fn body(&self, x: &TypeIdent) -> TypeExpr {
        self.sig.get(x).expect("checked bound").clone()
    }

    fn solve(&mut self, g: Goal, productive: usize) -> Outcome {
        if g.left == g.right && !g.left.idents().is_empty() {
            return Outcome::Proven(
                Arc::new(Derivation {
                    rule: Rule::Refl,
                    goal: g,
                    premises: Vec::new(),
                }),
                usize::MAX,
            );
        }
        if let Some(d) = self.proven.get(&g) {
            return Outcome::Proven(d.clone(), usize::MAX);
        }
        if let Some(stuck) = self.refuted.get(&g) {
            return Outcome::Refuted(stuck.clone());
        }
        if let Some(&(depth, count)) = self.path.get(&g) {
            if count < productive {
                return Outcome::Proven(
                    Arc::new(Derivation {
                        rule: Rule::Cycle,
                        goal: g,
                        premises: Vec::new(),
                    }),
                    depth,
                );
            }
            // Back at the same goal having consumed nothing: the rules only
            // rearrange here and would do so forever.
            return Outcome::Unknown;
        }
        if self.fuel == 0 || self.depth >= MAX_PATH {
            return Outcome::Unknown;
        }
        self.fuel -= 1;

        let (rule, premises) = match self.plan(&g) {
            Plan::Stuck => {
                self.refuted.insert(g.clone(), g.clone());
                return Outcome::Refuted(g);
            }
            Plan::Axiom(rule) => (rule, Vec::new()),
            Plan::Premises(rule, ps) => (rule, ps),
        };
        let depth = self.depth;
        let next = productive + usize::from(rule.is_productive());
        self.path.insert(g.clone(), (depth, productive));
        self.depth += 1;
        let mut low = usize::MAX;
        let mut derived = Vec::with_capacity(premises.len());
        let mut result = None;
        for p in premises {
            match self.solve(p, next) {
                Outcome::Proven(d, l) => {
                    low = low.min(l);
                    derived.push(d);
                }
                Outcome::Refuted(stuck) => {
                    result = Some(Outcome::Refuted(stuck));
                    break;
                }
                Outcome::Unknown => {
                    result = Some(Outcome::Unknown);
                    break;
                }
            }
        }
        self.depth -= 1;
        self.path.remove(&g);
        match result {
            Some(Outcome::Refuted(stuck)) => {
                self.refuted.insert(g, stuck.clone());
                Outcome::Refuted(stuck)
            }
            Some(other) => other,
            None => {
                let d = Arc::new(Derivation {
                    rule,
                    goal: g.clone(),
                    premises: derived,
                });
                // Cycles back to this goal are closed within the derivation;
                // only references further up keep it from standing alone.
                if low >= depth {
                    self.proven.insert(g, d.clone());
                    low = usize::MAX;
                }
                Outcome::Proven(d, low)
            }
        }
    }

    /// The single rule applicable to `g`: first rearrangements of the left
    /// side, then of the right side, then congruence and the rules for
    /// messages and indices in front of `;`.
    fn plan(&self, g: &Goal) -> Plan {
        let (t, u) = (&g.left, &g.right);
        if let Some((rule, t2)) = self.rearrange(t) {
            let rule = match rule {
                Side::Id => Rule::IdL,
                Side::SkipSeq => Rule::SkipSeqL,
                Side::SeqSeq => Rule::SeqSeqL,
                Side::ChoiceSeq => Rule::ChoiceSeqL,
                Side::IdSeq => Rule::IdSeqL,
            };
            return Plan::Premises(rule, vec![goal(t2, u.clone())]);
        }
        if let Some((rule, u2)) = self.rearrange(u) {
            let rule = match rule {
                Side::Id => Rule::IdR,
                Side::SkipSeq => Rule::SkipSeqR,
                Side::SeqSeq => Rule::SeqSeqR,
                Side::ChoiceSeq => Rule::ChoiceSeqR,
                Side::IdSeq => Rule::IdSeqR,
            };
            return Plan::Premises(rule, vec![goal(t.clone(), u2)]);
        }
        use TypeNode as N;
        match (t.node(), u.node()) {
            (N::Unit, N::Unit) => Plan::Axiom(Rule::Unit),
            (N::Base(a), N::Base(b)) if a == b => Plan::Axiom(Rule::Base),
            (N::Skip, N::Skip) => Plan::Axiom(Rule::Skip),
            (N::Index(m), N::Index(n)) if m == n => Plan::Axiom(Rule::Index),
            (N::Arrow(t1, t2), N::Arrow(u1, u2)) => Plan::Premises(
                Rule::Arrow,
                vec![goal(t1.clone(), u1.clone()), goal(t2.clone(), u2.clone())],
            ),
            (N::Labeled(s1, b1), N::Labeled(s2, b2)) if s1 == s2 && b1.keys().eq(b2.keys()) => Plan::Premises(
                Rule::Rcd,
                b1.values()
                    .zip(b2.values())
                    .map(|(x, y)| goal(x.clone(), y.clone()))
                    .collect(),
            ),
            (N::Quant(q1, k1, b1), N::Quant(q2, k2, b2)) if q1 == q2 && k1 == k2 => {
                Plan::Premises(Rule::Quant, vec![goal(b1.clone(), b2.clone())])
            }
            (N::Message(p1, a), N::Message(p2, b)) if p1 == p2 => {
                Plan::Premises(Rule::Msg, vec![goal(a.clone(), b.clone())])
            }
            (N::Choice(v1, b1), N::Choice(v2, b2)) if v1 == v2 && b1.keys().eq(b2.keys()) => Plan::Premises(
                Rule::Choice,
                b1.values()
                    .zip(b2.values())
                    .map(|(x, y)| goal(x.clone(), y.clone()))
                    .collect(),
            ),
            (N::Seq(h1, v), N::Seq(h2, w)) => match (h1.node(), h2.node()) {
                (N::Message(p1, a), N::Message(p2, b)) if p1 == p2 => Plan::Premises(
                    Rule::MsgSeq2,
                    vec![goal(a.clone(), b.clone()), goal(v.clone(), w.clone())],
                ),
                (N::Index(m), N::Index(n)) if m == n => {
                    Plan::Premises(Rule::IndexSeq2, vec![goal(v.clone(), w.clone())])
                }
                _ => Plan::Stuck,
            },
            (N::Seq(h, v), other) => match (h.node(), other) {
                (N::Message(p1, a), N::Message(p2, b)) if p1 == p2 && self.facts.terminated(v) => {
                    Plan::Premises(Rule::MsgSeq1L, vec![goal(a.clone(), b.clone())])
                }
                (N::Index(m), N::Index(n)) if m == n && self.facts.terminated(v) => Plan::Axiom(Rule::IndexSeq1L),
                _ => Plan::Stuck,
            },
            (other, N::Seq(h, w)) => match (other, h.node()) {
                (N::Message(p1, a), N::Message(p2, b)) if p1 == p2 && self.facts.terminated(w) => {
                    Plan::Premises(Rule::MsgSeq1R, vec![goal(a.clone(), b.clone())])
                }
                (N::Index(m), N::Index(n)) if m == n && self.facts.terminated(w) => Plan::Axiom(Rule::IndexSeq1R),
                _ => Plan::Stuck,
            },
            _ => Plan::Stuck,
        }
    }

    /// The rearrangement that applies to one side of a goal, if any.
    fn rearrange(&self, t: &TypeExpr) -> Option<(Side, TypeExpr)> {
        match t.node() {
            TypeNode::Ident(x) if self.facts.ident_contractive(x) => Some((Side::Id, self.body(x))),
            TypeNode::Seq(h, v) => match h.node() {
                TypeNode::Skip => Some((Side::SkipSeq, v.clone())),
                TypeNode::Seq(a, b) => Some((
                    Side::SeqSeq,
                    TypeExpr::seq(a.clone(), TypeExpr::seq(b.clone(), v.clone())),
                )),
                TypeNode::Choice(view, bs) => Some((
                    Side::ChoiceSeq,
                    TypeExpr::choice(
                        *view,
                        bs.iter()
                            .map(|(l, b)| (l.clone(), TypeExpr::seq(b.clone(), v.clone())))
                            .collect(),
                    ),
                )),
                TypeNode::Ident(x) if self.facts.ident_contractive(x) => {
                    Some((Side::IdSeq, TypeExpr::seq(self.body(x), v.clone())))
                }
                _ => None,
            },
            _ => None,
        }
    }
}

enum Side {
    Id,
    SkipSeq,
    SeqSeq,
    ChoiceSeq,
    IdSeq,
}
