//! The inductive predicates on types: is-terminated and contractivity, and
//! validation of signatures.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use thiserror::Error;

use crate::types::{Signature, TypeExpr, TypeIdent, TypeNode};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unbound type identifier `{0}`")]
pub struct UnboundIdent(pub TypeIdent);

/// A problem found by [`validate_signature`].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Diagnostic {
    Unbound(TypeIdent),
    NotContractive(TypeIdent),
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::Unbound(x) => write!(f, "unbound type identifier `{x}`"),
            Diagnostic::NotContractive(x) => write!(f, "NotContractive: equation for `{x}` is not contractive"),
        }
    }
}

fn lookup<'a>(sig: &'a Signature, x: &TypeIdent) -> Result<&'a TypeExpr, UnboundIdent> {
    sig.get(x).ok_or_else(|| UnboundIdent(x.clone()))
}

/// `t` is terminated: built from `skip`, `;` and identifiers only, with every
/// identifier reached terminating in turn. Derivations are finite, so an
/// identifier met again while its own check is still open counts as false.
pub fn is_terminated(t: &TypeExpr, sig: &Signature) -> Result<bool, UnboundIdent> {
    terminated_in(t, sig, &mut Vec::new())
}

fn terminated_in(t: &TypeExpr, sig: &Signature, open: &mut Vec<TypeIdent>) -> Result<bool, UnboundIdent> {
    match t.node() {
        TypeNode::Skip => Ok(true),
        TypeNode::Seq(a, b) => Ok(terminated_in(a, sig, open)? && terminated_in(b, sig, open)?),
        TypeNode::Ident(x) => {
            let body = lookup(sig, x)?;
            if open.contains(x) {
                return Ok(false);
            }
            open.push(x.clone());
            let r = terminated_in(body, sig, open);
            open.pop();
            r
        }
        _ => Ok(false),
    }
}

/// `t` is contractive: unfolding identifiers in head position reaches a type
/// constructor in finitely many steps.
pub fn is_contractive(t: &TypeExpr, sig: &Signature) -> Result<bool, UnboundIdent> {
    contractive_in(t, sig, &mut Vec::new())
}

fn contractive_in(t: &TypeExpr, sig: &Signature, open: &mut Vec<TypeIdent>) -> Result<bool, UnboundIdent> {
    match t.node() {
        TypeNode::Quant(_, _, body) => contractive_in(body, sig, open),
        TypeNode::Seq(a, b) => {
            if is_terminated(a, sig)? {
                contractive_in(b, sig, open)
            } else {
                contractive_in(a, sig, open)
            }
        }
        TypeNode::Ident(x) => {
            let body = lookup(sig, x)?;
            if open.contains(x) {
                return Ok(false);
            }
            open.push(x.clone());
            let r = contractive_in(body, sig, open);
            open.pop();
            r
        }
        _ => Ok(true),
    }
}

/// Checks that every identifier mentioned is bound and every right-hand side
/// is contractive. Contractivity is only reported once all identifiers are
/// bound.
pub fn validate_signature(sig: &Signature) -> Vec<Diagnostic> {
    let unbound: BTreeSet<TypeIdent> = sig
        .iter()
        .flat_map(|(_, body)| body.idents())
        .filter(|x| !sig.contains(x))
        .collect();
    if !unbound.is_empty() {
        return unbound.into_iter().map(Diagnostic::Unbound).collect();
    }
    let facts = Facts::new(sig).expect("identifiers checked above");
    sig.iter()
        .filter(|(x, _)| !facts.ident_contractive(x))
        .map(|(x, _)| Diagnostic::NotContractive(x.clone()))
        .collect()
}

/// Identifiers of `t` that the signature does not bind, in first-seen order.
pub fn unbound_in(t: &TypeExpr, sig: &Signature) -> Vec<TypeIdent> {
    let mut seen = HashSet::new();
    t.idents()
        .into_iter()
        .filter(|x| !sig.contains(x) && seen.insert(x.clone()))
        .collect()
}

/// Terminatedness and contractivity of every identifier in a signature,
/// computed as least fixed points over the equations.
///
/// This is a second route to the same predicates: the path-based functions
/// above search derivations per query, `Facts` iterates the rules to
/// saturation once and then answers in time linear in the type.
#[derive(Debug, Clone)]
pub struct Facts {
    terminated: BTreeMap<TypeIdent, bool>,
    contractive: BTreeMap<TypeIdent, bool>,
}

impl Facts {
    pub fn new(sig: &Signature) -> Result<Facts, UnboundIdent> {
        for (_, body) in sig.iter() {
            if let Some(x) = unbound_in(body, sig).into_iter().next() {
                return Err(UnboundIdent(x));
            }
        }
        let mut facts = Facts {
            terminated: sig.iter().map(|(x, _)| (x.clone(), false)).collect(),
            contractive: sig.iter().map(|(x, _)| (x.clone(), false)).collect(),
        };
        loop {
            let mut changed = false;
            for (x, body) in sig.iter() {
                if !facts.terminated[x] && facts.terminated(body) {
                    facts.terminated.insert(x.clone(), true);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        loop {
            let mut changed = false;
            for (x, body) in sig.iter() {
                if !facts.contractive[x] && facts.contractive(body) {
                    facts.contractive.insert(x.clone(), true);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        Ok(facts)
    }

    pub fn ident_terminated(&self, x: &TypeIdent) -> bool {
        self.terminated.get(x).copied().unwrap_or(false)
    }

    pub fn ident_contractive(&self, x: &TypeIdent) -> bool {
        self.contractive.get(x).copied().unwrap_or(false)
    }

    pub fn terminated(&self, t: &TypeExpr) -> bool {
        match t.node() {
            TypeNode::Skip => true,
            TypeNode::Seq(a, b) => self.terminated(a) && self.terminated(b),
            TypeNode::Ident(x) => self.ident_terminated(x),
            _ => false,
        }
    }

    pub fn contractive(&self, t: &TypeExpr) -> bool {
        match t.node() {
            TypeNode::Quant(_, _, body) => self.contractive(body),
            TypeNode::Seq(a, b) => {
                if self.terminated(a) {
                    self.contractive(b)
                } else {
                    self.contractive(a)
                }
            }
            TypeNode::Ident(x) => self.ident_contractive(x),
            _ => true,
        }
    }
}
