//! Seeded generators of signatures, types and type pairs, shared by the
//! integration, property and acceptance tests.

#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use session_equiv::types::{Polarity, Quantifier, Shape, View};
use session_equiv::wellformed::validate_signature;
use session_equiv::{Kind, Label, Signature, TypeExpr, TypeIdent, TypeNode};

pub const LABELS: [&str; 3] = ["a", "b", "c"];
pub const BASES: [&str; 2] = ["int", "bool"];

/// A signature together with the kind of each identifier.
#[derive(Clone, Debug)]
pub struct Env {
    pub sig: Signature,
    pub kinds: BTreeMap<TypeIdent, Kind>,
}

impl Env {
    fn idents(&self, k: Kind) -> Vec<TypeIdent> {
        self.kinds
            .iter()
            .filter(|(_, kk)| **kk == k)
            .map(|(x, _)| x.clone())
            .collect()
    }
}

pub struct Gen {
    pub rng: ChaCha8Rng,
    pub max_equations: usize,
}

impl Gen {
    pub fn new(seed: u64) -> Self {
        Gen {
            rng: ChaCha8Rng::seed_from_u64(seed),
            max_equations: 5,
        }
    }

    fn chance(&mut self, p: f64) -> bool {
        self.rng.gen_bool(p)
    }

    /// Up to `max_equations` contractive equations, mostly session kinded.
    pub fn env(&mut self) -> Env {
        let n = self.rng.gen_range(0..=self.max_equations);
        let mut kinds = BTreeMap::new();
        for i in 0..n {
            let k = if i > 0 && self.chance(0.2) {
                Kind::Functional
            } else {
                Kind::Session
            };
            let name = match k {
                Kind::Session => format!("X{i}"),
                Kind::Functional => format!("F{i}"),
            };
            kinds.insert(TypeIdent::new(&name), k);
        }
        let mut env = Env {
            sig: Signature::new(),
            kinds,
        };
        let entries: Vec<(TypeIdent, Kind)> = env.kinds.iter().map(|(x, k)| (x.clone(), *k)).collect();
        for (x, k) in &entries {
            let body = self.equation_body(&env, *k);
            env.sig.insert(x.clone(), body).expect("fresh identifier");
        }
        // Replace offending equations until the signature is contractive.
        for _ in 0..20 {
            let bad: Vec<TypeIdent> = validate_signature(&env.sig)
                .into_iter()
                .filter_map(|d| match d {
                    session_equiv::Diagnostic::NotContractive(x) => Some(x),
                    session_equiv::Diagnostic::Unbound(_) => None,
                })
                .collect();
            if bad.is_empty() {
                return env;
            }
            let mut sig = Signature::new();
            for (x, body) in env.sig.iter() {
                let body = if bad.contains(x) {
                    self.equation_body(&env, env.kinds[x])
                } else {
                    body.clone()
                };
                sig.insert(x.clone(), body).expect("fresh identifier");
            }
            env.sig = sig;
        }
        // Give up on recursion for stubborn equations.
        let mut sig = Signature::new();
        let bad: Vec<TypeIdent> = validate_signature(&env.sig)
            .into_iter()
            .map(|d| match d {
                session_equiv::Diagnostic::NotContractive(x) | session_equiv::Diagnostic::Unbound(x) => x,
            })
            .collect();
        for (x, body) in env.sig.iter() {
            let body = if bad.contains(x) {
                match env.kinds[x] {
                    Kind::Session => TypeExpr::skip(),
                    Kind::Functional => TypeExpr::unit(),
                }
            } else {
                body.clone()
            };
            sig.insert(x.clone(), body).expect("fresh identifier");
        }
        env.sig = sig;
        env
    }

    fn equation_body(&mut self, env: &Env, k: Kind) -> TypeExpr {
        // Equations start with a constructor most of the time, which keeps
        // contractivity failures rare.
        match k {
            Kind::Session => {
                let head = self.session_constructor(env, &[], 3);
                if self.chance(0.5) {
                    let tail = self.session(env, &[], 2);
                    TypeExpr::seq(head, tail)
                } else {
                    head
                }
            }
            Kind::Functional => self.functional(env, &[], 3),
        }
    }

    /// A closed session type of depth at most `depth`.
    pub fn session(&mut self, env: &Env, ctx: &[Kind], depth: usize) -> TypeExpr {
        if depth == 0 || self.chance(0.25) {
            return self.session_leaf(env, ctx);
        }
        match self.rng.gen_range(0..3) {
            0 => {
                let a = self.session(env, ctx, depth - 1);
                let b = self.session(env, ctx, depth - 1);
                TypeExpr::seq(a, b)
            }
            _ => self.session_constructor(env, ctx, depth),
        }
    }

    fn session_constructor(&mut self, env: &Env, ctx: &[Kind], depth: usize) -> TypeExpr {
        let depth = depth.max(1);
        if self.chance(0.5) {
            let view = if self.chance(0.5) {
                View::Internal
            } else {
                View::External
            };
            let n = self.rng.gen_range(1..=3);
            let mut labels = LABELS.to_vec();
            labels.shuffle(&mut self.rng);
            let branches = labels[..n]
                .iter()
                .map(|l| (Label::new(*l), self.session(env, ctx, depth - 1)))
                .collect();
            TypeExpr::choice(view, branches)
        } else {
            let p = self.polarity();
            let payload = self.payload(env, ctx, depth - 1);
            TypeExpr::message(p, payload)
        }
    }

    fn polarity(&mut self) -> Polarity {
        if self.chance(0.5) {
            Polarity::Out
        } else {
            Polarity::In
        }
    }

    fn session_leaf(&mut self, env: &Env, ctx: &[Kind]) -> TypeExpr {
        let idents = env.idents(Kind::Session);
        let vars: Vec<usize> = (0..ctx.len()).filter(|&i| ctx[i] == Kind::Session).collect();
        match self.rng.gen_range(0..6) {
            0 | 1 if !idents.is_empty() => TypeExpr::ident(idents.choose(&mut self.rng).unwrap().as_str()),
            2 if !vars.is_empty() => TypeExpr::index(*vars.choose(&mut self.rng).unwrap()),
            3 => TypeExpr::skip(),
            _ => {
                let p = self.polarity();
                let base = self.base();
                TypeExpr::message(p, base)
            }
        }
    }

    fn base(&mut self) -> TypeExpr {
        if self.chance(0.3) {
            TypeExpr::unit()
        } else {
            TypeExpr::base(*BASES.choose(&mut self.rng).unwrap())
        }
    }

    fn payload(&mut self, env: &Env, ctx: &[Kind], depth: usize) -> TypeExpr {
        match self.rng.gen_range(0..4) {
            0 => self.session(env, ctx, depth.min(2)),
            1 => self.functional(env, ctx, depth.min(2)),
            _ => self.base(),
        }
    }

    /// A functional type; quantifiers bind fresh indices.
    pub fn functional(&mut self, env: &Env, ctx: &[Kind], depth: usize) -> TypeExpr {
        if depth == 0 || self.chance(0.3) {
            let idents = env.idents(Kind::Functional);
            let vars: Vec<usize> = (0..ctx.len()).filter(|&i| ctx[i] == Kind::Functional).collect();
            return match self.rng.gen_range(0..4) {
                0 if !idents.is_empty() => TypeExpr::ident(idents.choose(&mut self.rng).unwrap().as_str()),
                1 if !vars.is_empty() => TypeExpr::index(*vars.choose(&mut self.rng).unwrap()),
                _ => self.base(),
            };
        }
        match self.rng.gen_range(0..4) {
            0 => {
                let a = self.any(env, ctx, depth - 1);
                let b = self.any(env, ctx, depth - 1);
                TypeExpr::arrow(a, b)
            }
            1 => {
                let shape = if self.chance(0.5) {
                    Shape::Record
                } else {
                    Shape::Variant
                };
                let n = self.rng.gen_range(1..=2);
                let branches = LABELS[..n]
                    .iter()
                    .map(|l| (Label::new(*l), self.any(env, ctx, depth - 1)))
                    .collect();
                TypeExpr::labeled(shape, branches)
            }
            _ => {
                let q = if self.chance(0.7) {
                    Quantifier::Forall
                } else {
                    Quantifier::Exists
                };
                let k = if self.chance(0.5) {
                    Kind::Session
                } else {
                    Kind::Functional
                };
                let mut inner = vec![k];
                inner.extend_from_slice(ctx);
                let body = self.any(env, &inner, depth - 1);
                TypeExpr::quant(q, k, body)
            }
        }
    }

    pub fn any(&mut self, env: &Env, ctx: &[Kind], depth: usize) -> TypeExpr {
        if self.chance(0.5) {
            self.session(env, ctx, depth)
        } else {
            self.functional(env, ctx, depth)
        }
    }

    /// A pair of closed types of the same kind: equal up to rewriting with
    /// the equivalence laws, perturbed, or unrelated.
    pub fn pair(&mut self, env: &Env) -> (TypeExpr, TypeExpr) {
        let functional = self.chance(0.25);
        let t = if functional {
            self.functional(env, &[], 4)
        } else {
            self.session(env, &[], 5)
        };
        let u = match self.rng.gen_range(0..10) {
            0..=4 => self.rewrite(env, &t, &[]),
            5..=7 => {
                let r = self.rewrite(env, &t, &[]);
                self.perturb(env, &r, &[])
            }
            _ if functional => self.functional(env, &[], 4),
            _ => self.session(env, &[], 5),
        };
        if self.chance(0.5) {
            (t, u)
        } else {
            (u, t)
        }
    }

    /// Rewrites `t` by laws that preserve equivalence, at random positions.
    pub fn rewrite(&mut self, env: &Env, t: &TypeExpr, ctx: &[Kind]) -> TypeExpr {
        let t = self.rewrite_children(env, t, ctx);
        if !self.chance(0.3) || !is_session(env, &t, ctx) {
            return t;
        }
        match t.node() {
            TypeNode::Seq(a, b) => match (a.node(), self.rng.gen_range(0..3)) {
                (TypeNode::Seq(a1, a2), 0) => TypeExpr::seq(a1.clone(), TypeExpr::seq(a2.clone(), b.clone())),
                (TypeNode::Choice(v, bs), 1) => TypeExpr::choice(
                    *v,
                    bs.iter()
                        .map(|(l, x)| (l.clone(), TypeExpr::seq(x.clone(), b.clone())))
                        .collect(),
                ),
                (TypeNode::Skip, _) => b.clone(),
                _ => TypeExpr::seq(TypeExpr::skip(), t.clone()),
            },
            TypeNode::Ident(x) if self.chance(0.5) => env.sig.get(x).expect("bound").clone(),
            _ => {
                if self.chance(0.5) {
                    TypeExpr::seq(TypeExpr::skip(), t)
                } else {
                    TypeExpr::seq(t, TypeExpr::skip())
                }
            }
        }
    }

    fn rewrite_children(&mut self, env: &Env, t: &TypeExpr, ctx: &[Kind]) -> TypeExpr {
        match t.node() {
            TypeNode::Arrow(a, b) => TypeExpr::arrow(self.rewrite(env, a, ctx), self.rewrite(env, b, ctx)),
            TypeNode::Labeled(s, bs) => TypeExpr::labeled(
                *s,
                bs.iter().map(|(l, x)| (l.clone(), self.rewrite(env, x, ctx))).collect(),
            ),
            TypeNode::Quant(q, k, body) => {
                let mut inner = vec![*k];
                inner.extend_from_slice(ctx);
                TypeExpr::quant(*q, *k, self.rewrite(env, body, &inner))
            }
            TypeNode::Message(p, x) => TypeExpr::message(*p, self.rewrite(env, x, ctx)),
            TypeNode::Choice(v, bs) => TypeExpr::choice(
                *v,
                bs.iter().map(|(l, x)| (l.clone(), self.rewrite(env, x, ctx))).collect(),
            ),
            TypeNode::Seq(a, b) => TypeExpr::seq(self.rewrite(env, a, ctx), self.rewrite(env, b, ctx)),
            _ => t.clone(),
        }
    }

    /// A small change that usually breaks equivalence.
    pub fn perturb(&mut self, env: &Env, t: &TypeExpr, ctx: &[Kind]) -> TypeExpr {
        let children = t.children().len();
        if children > 0 && self.chance(0.7) {
            let pick = self.rng.gen_range(0..children);
            return self.perturb_child(env, t, ctx, pick);
        }
        match t.node() {
            TypeNode::Message(p, x) => {
                let flipped = match p {
                    Polarity::Out => Polarity::In,
                    Polarity::In => Polarity::Out,
                };
                TypeExpr::message(flipped, x.clone())
            }
            TypeNode::Choice(v, bs) => {
                let flipped = match v {
                    View::Internal => View::External,
                    View::External => View::Internal,
                };
                TypeExpr::choice(flipped, bs.clone())
            }
            TypeNode::Base(_) | TypeNode::Unit => TypeExpr::base(if self.chance(0.5) { "int" } else { "bool" }),
            _ if is_session(env, t, ctx) => self.session(env, ctx, 2),
            _ => self.functional(env, ctx, 2),
        }
    }

    fn perturb_child(&mut self, env: &Env, t: &TypeExpr, ctx: &[Kind], pick: usize) -> TypeExpr {
        match t.node() {
            TypeNode::Arrow(a, b) => {
                if pick == 0 {
                    TypeExpr::arrow(self.perturb(env, a, ctx), b.clone())
                } else {
                    TypeExpr::arrow(a.clone(), self.perturb(env, b, ctx))
                }
            }
            TypeNode::Labeled(s, bs) => TypeExpr::labeled(*s, self.perturb_branches(env, bs, ctx, pick)),
            TypeNode::Choice(v, bs) => TypeExpr::choice(*v, self.perturb_branches(env, bs, ctx, pick)),
            TypeNode::Quant(q, k, body) => {
                let mut inner = vec![*k];
                inner.extend_from_slice(ctx);
                TypeExpr::quant(*q, *k, self.perturb(env, body, &inner))
            }
            TypeNode::Message(p, x) => TypeExpr::message(*p, self.perturb(env, x, ctx)),
            TypeNode::Seq(a, b) => {
                if pick == 0 {
                    TypeExpr::seq(self.perturb(env, a, ctx), b.clone())
                } else {
                    TypeExpr::seq(a.clone(), self.perturb(env, b, ctx))
                }
            }
            _ => t.clone(),
        }
    }

    fn perturb_branches(
        &mut self,
        env: &Env,
        bs: &BTreeMap<Label, TypeExpr>,
        ctx: &[Kind],
        pick: usize,
    ) -> BTreeMap<Label, TypeExpr> {
        bs.iter()
            .enumerate()
            .map(|(i, (l, x))| {
                (
                    l.clone(),
                    if i == pick {
                        self.perturb(env, x, ctx)
                    } else {
                        x.clone()
                    },
                )
            })
            .collect()
    }
}

/// Kind of a generated type, read off its head.
pub fn is_session(env: &Env, t: &TypeExpr, ctx: &[Kind]) -> bool {
    match t.node() {
        TypeNode::Skip | TypeNode::Message(..) | TypeNode::Choice(..) | TypeNode::Seq(..) => true,
        TypeNode::Ident(x) => env.kinds.get(x) == Some(&Kind::Session),
        TypeNode::Index(n) => ctx.get(*n) == Some(&Kind::Session),
        _ => false,
    }
}

/// A corpus of `n` environments with one pair each, from `seed`.
pub fn corpus(seed: u64, n: usize) -> Vec<(Env, TypeExpr, TypeExpr)> {
    let mut g = Gen::new(seed);
    (0..n)
        .map(|_| {
            let env = g.env();
            let (t, u) = g.pair(&env);
            (env, t, u)
        })
        .collect()
}

/// A random simple grammar over `n` nonterminals, doubled: symbols
/// `n..2n` copy `0..n` with their bodies renamed, so `[i]` and `[n + i]`
/// are bisimilar. Bodies occasionally contain `BOT`.
pub fn simple_grammar(rng: &mut ChaCha8Rng, n: usize) -> session_equiv::Grammar {
    use session_equiv::grammar::{Nonterminal, Production, Symbol};
    use session_equiv::lts::TransitionLabel;
    use session_equiv::Grammar;

    let terminals: Vec<TransitionLabel> = LABELS
        .iter()
        .map(|l| TransitionLabel::Choice(View::Internal, Label::new(*l)))
        .collect();
    let mut prods = Vec::new();
    for i in 0..n {
        let k = rng.gen_range(1..=terminals.len());
        let mut ts = terminals.clone();
        ts.shuffle(rng);
        for t in &ts[..k] {
            let len = rng.gen_range(0..=3);
            let body: Vec<Option<usize>> = (0..len)
                .map(|_| {
                    if rng.gen_bool(0.05) {
                        None
                    } else {
                        Some(rng.gen_range(0..n))
                    }
                })
                .collect();
            for copy in [0, n] {
                let mut b = vec![Symbol::T(t.clone())];
                b.extend(body.iter().map(|s| match s {
                    Some(j) => Symbol::N(Grammar::nonterminal(copy + j)),
                    None => Symbol::N(Nonterminal::BOTTOM),
                }));
                prods.push(Production {
                    head: Grammar::nonterminal(copy + i),
                    body: b,
                });
            }
        }
    }
    Grammar::from_productions(2 * n, &[Grammar::nonterminal(0), Grammar::nonterminal(n)], &prods)
}
