//! Coinductive kinding `Δ ⊢ T : κ`.
//!
//! Every rule but the one for identifiers is syntax directed, so the only
//! source of cycles is an identifier goal met again while its own body is
//! being checked. Such a goal is assumed to hold with the kind read off the
//! head constructor of its unfolding, which is the greatest fixed point
//! reading of the rules.

use std::collections::HashMap;

use thiserror::Error;

use crate::types::{Kind, KindContext, Signature, TypeExpr, TypeIdent, TypeNode};
use crate::wellformed::{unbound_in, Facts};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KindError {
    #[error("unbound type identifier `{0}`")]
    UnboundIdent(TypeIdent),
    #[error("ill-kinded: index {index} is not bound in a context of length {depth}")]
    UnboundIndex { index: usize, depth: usize },
    #[error("NotContractive: equation for `{0}` is not contractive")]
    NotContractive(TypeIdent),
    #[error("ill-kinded: `{at}` has kind {found}, expected {expected}")]
    Mismatch { at: TypeExpr, expected: Kind, found: Kind },
}

impl KindError {
    /// True for the errors that say the object is not a type, as opposed to
    /// a problem with the signature.
    pub fn is_ill_kinded(&self) -> bool {
        matches!(self, KindError::UnboundIndex { .. } | KindError::Mismatch { .. })
    }
}

/// The unique kind of `t` under `delta`, if `t` is a type.
pub fn kind_of(t: &TypeExpr, delta: &KindContext, sig: &Signature) -> Result<Kind, KindError> {
    Kinder::new(sig)?.kind(t, delta)
}

/// Reusable kinding state for one signature.
pub struct Kinder<'a> {
    sig: &'a Signature,
    facts: Facts,
    width: HashMap<TypeIdent, usize>,
    goals: HashMap<(TypeIdent, Vec<Kind>), Goal>,
}

#[derive(Debug, Clone, Copy)]
enum Goal {
    Open(Kind),
    Done(Kind),
}

impl<'a> Kinder<'a> {
    pub fn new(sig: &'a Signature) -> Result<Self, KindError> {
        let facts = Facts::new(sig).map_err(|e| KindError::UnboundIdent(e.0))?;
        Ok(Kinder {
            sig,
            width: scope_widths(sig),
            facts,
            goals: HashMap::new(),
        })
    }

    pub fn kind(&mut self, t: &TypeExpr, delta: &KindContext) -> Result<Kind, KindError> {
        if let Some(x) = unbound_in(t, self.sig).into_iter().next() {
            return Err(KindError::UnboundIdent(x));
        }
        let r = self.go(t, delta.kinds());
        if r.is_err() {
            self.goals.clear();
        }
        r
    }

    fn go(&mut self, t: &TypeExpr, delta: &[Kind]) -> Result<Kind, KindError> {
        match t.node() {
            TypeNode::Unit | TypeNode::Base(_) => Ok(Kind::Functional),
            TypeNode::Arrow(a, b) => {
                self.go(a, delta)?;
                self.go(b, delta)?;
                Ok(Kind::Functional)
            }
            TypeNode::Labeled(_, bs) => {
                for b in bs.values() {
                    self.go(b, delta)?;
                }
                Ok(Kind::Functional)
            }
            TypeNode::Quant(_, k, body) => {
                let mut inner = Vec::with_capacity(delta.len() + 1);
                inner.push(*k);
                inner.extend_from_slice(delta);
                self.go(body, &inner)?;
                Ok(Kind::Functional)
            }
            TypeNode::Skip => Ok(Kind::Session),
            TypeNode::Message(_, payload) => {
                self.go(payload, delta)?;
                Ok(Kind::Session)
            }
            TypeNode::Choice(_, bs) => {
                for b in bs.values() {
                    self.expect(b, delta, Kind::Session)?;
                }
                Ok(Kind::Session)
            }
            TypeNode::Seq(a, b) => {
                self.expect(a, delta, Kind::Session)?;
                self.expect(b, delta, Kind::Session)?;
                Ok(Kind::Session)
            }
            TypeNode::Index(n) => delta.get(*n).copied().ok_or(KindError::UnboundIndex {
                index: *n,
                depth: delta.len(),
            }),
            TypeNode::Ident(x) => self.ident(x, delta),
        }
    }

    fn expect(&mut self, t: &TypeExpr, delta: &[Kind], expected: Kind) -> Result<(), KindError> {
        let found = self.go(t, delta)?;
        if found == expected {
            Ok(())
        } else {
            Err(KindError::Mismatch {
                at: t.clone(),
                expected,
                found,
            })
        }
    }

    fn ident(&mut self, x: &TypeIdent, delta: &[Kind]) -> Result<Kind, KindError> {
        if !self.facts.ident_contractive(x) {
            return Err(KindError::NotContractive(x.clone()));
        }
        // Indices beyond the scope width of `x` cannot be reached from its
        // body, so goals that differ only there are the same goal.
        let w = self.width[x].min(delta.len());
        let key = (x.clone(), delta[..w].to_vec());
        match self.goals.get(&key) {
            Some(Goal::Open(k)) | Some(Goal::Done(k)) => return Ok(*k),
            None => {}
        }
        let body = self.sig.get(x).expect("bound").clone();
        let proposed = self.head_kind(&body, delta)?;
        self.goals.insert(key.clone(), Goal::Open(proposed));
        let k = self.go(&body, delta)?;
        if k != proposed {
            return Err(KindError::Mismatch {
                at: TypeExpr::ident(x.as_str()),
                expected: proposed,
                found: k,
            });
        }
        self.goals.insert(key, Goal::Done(k));
        Ok(k)
    }

    /// The kind the outermost rule would conclude, found by unfolding
    /// identifiers in head position. Terminates on contractive equations.
    fn head_kind(&self, t: &TypeExpr, delta: &[Kind]) -> Result<Kind, KindError> {
        let mut t = t.clone();
        loop {
            match t.node() {
                TypeNode::Unit
                | TypeNode::Base(_)
                | TypeNode::Arrow(..)
                | TypeNode::Labeled(..)
                | TypeNode::Quant(..) => return Ok(Kind::Functional),
                TypeNode::Skip | TypeNode::Message(..) | TypeNode::Choice(..) | TypeNode::Seq(..) => {
                    return Ok(Kind::Session)
                }
                TypeNode::Index(n) => {
                    return delta.get(*n).copied().ok_or(KindError::UnboundIndex {
                        index: *n,
                        depth: delta.len(),
                    })
                }
                TypeNode::Ident(x) => {
                    if !self.facts.ident_contractive(x) {
                        return Err(KindError::NotContractive(x.clone()));
                    }
                    t = self.sig.get(x).expect("bound").clone();
                }
            }
        }
    }
}

/// For each identifier, one more than the largest free index its unfolding
/// can mention; zero for closed equations.
fn scope_widths(sig: &Signature) -> HashMap<TypeIdent, usize> {
    let mut width: HashMap<TypeIdent, usize> = sig.iter().map(|(x, _)| (x.clone(), 0)).collect();
    loop {
        let mut changed = false;
        for (x, body) in sig.iter() {
            let w = free_width(body, &width);
            if w > width[x] {
                width.insert(x.clone(), w);
                changed = true;
            }
        }
        if !changed {
            return width;
        }
    }
}

fn free_width(t: &TypeExpr, width: &HashMap<TypeIdent, usize>) -> usize {
    match t.node() {
        TypeNode::Index(n) => n + 1,
        TypeNode::Quant(_, _, body) => free_width(body, width).saturating_sub(1),
        TypeNode::Ident(x) => width.get(x).copied().unwrap_or(0),
        _ => t
            .children()
            .into_iter()
            .map(|c| free_width(c, width))
            .max()
            .unwrap_or(0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse_signature, parse_type};

    fn kind(t: &str, sig: &str) -> Result<Kind, KindError> {
        kind_of(
            &parse_type(t).unwrap(),
            &KindContext::empty(),
            &parse_signature(sig).unwrap(),
        )
    }

    #[test]
    fn basic_kinds() {
        assert_eq!(kind("skip", ""), Ok(Kind::Session));
        assert_eq!(kind("unit", ""), Ok(Kind::Functional));
        assert_eq!(kind("all[T] 0 -> all[S] !1;0 -> 0", ""), Ok(Kind::Functional));
        assert_eq!(kind("!(unit -> unit);?int", ""), Ok(Kind::Session));
    }

    #[test]
    fn seq_with_functional_operand_is_ill_kinded() {
        let e = kind("skip;unit", "").unwrap_err();
        assert!(e.is_ill_kinded());
        assert!(kind("unit;!unit", "").unwrap_err().is_ill_kinded());
    }

    #[test]
    fn free_index_needs_context() {
        assert!(matches!(
            kind("0", ""),
            Err(KindError::UnboundIndex { index: 0, depth: 0 })
        ));
        let t = parse_type("!1;0").unwrap();
        let ctx = KindContext::from_kinds([Kind::Session, Kind::Functional]);
        assert_eq!(kind_of(&t, &ctx, &Signature::new()), Ok(Kind::Session));
        let ctx = KindContext::from_kinds([Kind::Functional, Kind::Functional]);
        assert!(kind_of(&t, &ctx, &Signature::new()).unwrap_err().is_ill_kinded());
    }

    #[test]
    fn recursive_identifiers() {
        let sig = "Tree = +{Node: Tree;!int;Tree, Leaf: skip}\nW = +{go: W}";
        assert_eq!(kind("Tree", sig), Ok(Kind::Session));
        assert_eq!(kind("W;Tree", sig), Ok(Kind::Session));
        assert_eq!(kind("F", "F = unit -> F"), Ok(Kind::Functional));
        // A recursive quantifier keeps growing the context; the scope width
        // cut keeps the goal set finite.
        assert_eq!(kind("P", "P = all[S] !P;0"), Ok(Kind::Functional));
        assert!(kind("Q", "Q = all[S] !unit;Q;0").unwrap_err().is_ill_kinded());
        // The body of a quantifier starts over at the head.
        assert_eq!(
            kind("R", "R = all[S] R;0"),
            Err(KindError::NotContractive(TypeIdent::new("R")))
        );
    }

    #[test]
    fn signature_errors() {
        assert_eq!(
            kind("X", "X = Y\nY = X"),
            Err(KindError::NotContractive(TypeIdent::new("X")))
        );
        assert_eq!(kind("Z", ""), Err(KindError::UnboundIdent(TypeIdent::new("Z"))));
    }

    #[test]
    fn functional_recursion_under_seq_is_ill_kinded() {
        assert!(kind("X", "X = +{a: X;unit}").unwrap_err().is_ill_kinded());
    }
}
