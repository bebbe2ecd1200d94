//! Type syntax: kinds, labels, identifiers, type expressions, signatures and
//! kind contexts.
//!
//! Bound type variables are De Bruijn indices, so structural equality of
//! [`TypeExpr`] values is identity up to renaming of bound variables. It is
//! never used as a stand-in for semantic equivalence.

use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use indexmap::IndexSet;
use thiserror::Error;

/// Kind of a type: session (`S`) or functional (`T`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Kind {
    Session,
    Functional,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::Session => "S",
            Kind::Functional => "T",
        })
    }
}

/// A record, variant or choice label.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Label(String);

impl Label {
    pub fn new(name: impl Into<String>) -> Self {
        let name = name.into();
        debug_assert!(!name.is_empty(), "labels are nonempty");
        Label(name)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Name of a recursive type equation `X = T`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TypeIdent(String);

impl TypeIdent {
    pub fn new(name: impl Into<String>) -> Self {
        let name = name.into();
        debug_assert!(!name.is_empty(), "type identifiers are nonempty");
        TypeIdent(name)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for TypeIdent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Polarity {
    /// `!`
    Out,
    /// `?`
    In,
}

impl Polarity {
    pub fn symbol(self) -> char {
        match self {
            Polarity::Out => '!',
            Polarity::In => '?',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum View {
    /// `+{..}`, internal choice.
    Internal,
    /// `&{..}`, external choice.
    External,
}

impl View {
    pub fn symbol(self) -> char {
        match self {
            View::Internal => '+',
            View::External => '&',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Shape {
    Record,
    Variant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Quantifier {
    Forall,
    Exists,
}

impl Quantifier {
    pub fn keyword(self) -> &'static str {
        match self {
            Quantifier::Forall => "all",
            Quantifier::Exists => "ex",
        }
    }
}

pub type Branches = BTreeMap<Label, TypeExpr>;

/// The constructors of the type language.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TypeNode {
    Unit,
    /// A base type such as `int`; behaves like `unit` with its own label.
    Base(String),
    Arrow(TypeExpr, TypeExpr),
    Labeled(Shape, Branches),
    Quant(Quantifier, Kind, TypeExpr),
    Skip,
    Message(Polarity, TypeExpr),
    Choice(View, Branches),
    Seq(TypeExpr, TypeExpr),
    Index(usize),
    Ident(TypeIdent),
}

/// An immutable, shared type expression with a cached structural hash.
#[derive(Clone)]
pub struct TypeExpr {
    node: Arc<TypeNode>,
    hash: u64,
}

impl TypeExpr {
    pub fn new(node: TypeNode) -> Self {
        if let TypeNode::Labeled(_, b) | TypeNode::Choice(_, b) = &node {
            debug_assert!(!b.is_empty(), "branch maps are nonempty");
        }
        let mut hasher = DefaultHasher::new();
        node.hash(&mut hasher);
        TypeExpr {
            hash: hasher.finish(),
            node: Arc::new(node),
        }
    }

    pub fn node(&self) -> &TypeNode {
        &self.node
    }

    pub fn unit() -> Self {
        Self::new(TypeNode::Unit)
    }

    pub fn base(name: impl Into<String>) -> Self {
        Self::new(TypeNode::Base(name.into()))
    }

    pub fn arrow(domain: TypeExpr, range: TypeExpr) -> Self {
        Self::new(TypeNode::Arrow(domain, range))
    }

    pub fn labeled(shape: Shape, branches: Branches) -> Self {
        Self::new(TypeNode::Labeled(shape, branches))
    }

    pub fn record<L: Into<String>>(branches: impl IntoIterator<Item = (L, TypeExpr)>) -> Self {
        Self::labeled(Shape::Record, collect_branches(branches))
    }

    pub fn variant<L: Into<String>>(branches: impl IntoIterator<Item = (L, TypeExpr)>) -> Self {
        Self::labeled(Shape::Variant, collect_branches(branches))
    }

    pub fn quant(quantifier: Quantifier, kind: Kind, body: TypeExpr) -> Self {
        Self::new(TypeNode::Quant(quantifier, kind, body))
    }

    pub fn forall(kind: Kind, body: TypeExpr) -> Self {
        Self::quant(Quantifier::Forall, kind, body)
    }

    pub fn exists(kind: Kind, body: TypeExpr) -> Self {
        Self::quant(Quantifier::Exists, kind, body)
    }

    pub fn skip() -> Self {
        Self::new(TypeNode::Skip)
    }

    pub fn message(polarity: Polarity, payload: TypeExpr) -> Self {
        Self::new(TypeNode::Message(polarity, payload))
    }

    pub fn send(payload: TypeExpr) -> Self {
        Self::message(Polarity::Out, payload)
    }

    pub fn recv(payload: TypeExpr) -> Self {
        Self::message(Polarity::In, payload)
    }

    pub fn choice(view: View, branches: Branches) -> Self {
        Self::new(TypeNode::Choice(view, branches))
    }

    pub fn internal<L: Into<String>>(branches: impl IntoIterator<Item = (L, TypeExpr)>) -> Self {
        Self::choice(View::Internal, collect_branches(branches))
    }

    pub fn external<L: Into<String>>(branches: impl IntoIterator<Item = (L, TypeExpr)>) -> Self {
        Self::choice(View::External, collect_branches(branches))
    }

    pub fn seq(first: TypeExpr, second: TypeExpr) -> Self {
        Self::new(TypeNode::Seq(first, second))
    }

    pub fn index(n: usize) -> Self {
        Self::new(TypeNode::Index(n))
    }

    pub fn ident(name: impl Into<String>) -> Self {
        Self::new(TypeNode::Ident(TypeIdent::new(name)))
    }

    /// Immediate children, left to right.
    pub fn children(&self) -> Vec<&TypeExpr> {
        match self.node() {
            TypeNode::Unit | TypeNode::Base(_) | TypeNode::Skip | TypeNode::Index(_) | TypeNode::Ident(_) => Vec::new(),
            TypeNode::Arrow(a, b) | TypeNode::Seq(a, b) => vec![a, b],
            TypeNode::Labeled(_, bs) | TypeNode::Choice(_, bs) => bs.values().collect(),
            TypeNode::Quant(_, _, body) => vec![body],
            TypeNode::Message(_, p) => vec![p],
        }
    }

    /// Number of constructor nodes.
    pub fn size(&self) -> usize {
        1 + self.children().into_iter().map(TypeExpr::size).sum::<usize>()
    }

    /// Identifiers occurring anywhere in the expression.
    pub fn idents(&self) -> Vec<TypeIdent> {
        let mut out = Vec::new();
        self.visit(&mut |t| {
            if let TypeNode::Ident(x) = t.node() {
                out.push(x.clone());
            }
        });
        out
    }

    fn visit(&self, f: &mut impl FnMut(&TypeExpr)) {
        f(self);
        for c in self.children() {
            c.visit(f);
        }
    }
}

fn collect_branches<L: Into<String>>(branches: impl IntoIterator<Item = (L, TypeExpr)>) -> Branches {
    branches.into_iter().map(|(l, t)| (Label::new(l), t)).collect()
}

impl PartialEq for TypeExpr {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.node, &other.node) || (self.hash == other.hash && self.node == other.node)
    }
}

impl Eq for TypeExpr {}

impl Hash for TypeExpr {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.hash);
    }
}

impl fmt::Debug for TypeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "`{self}`")
    }
}

/// All syntactic subterms of `t`, `t` first, in pre-order of first occurrence.
/// Identifiers are leaves; their equations are not entered.
pub fn subterms(t: &TypeExpr) -> IndexSet<TypeExpr> {
    let mut out = IndexSet::new();
    collect_subterms(t, &mut out);
    out
}

pub(crate) fn collect_subterms(t: &TypeExpr, out: &mut IndexSet<TypeExpr>) {
    if !out.insert(t.clone()) {
        return;
    }
    for c in t.children() {
        collect_subterms(c, out);
    }
}

// Printing follows the concrete syntax accepted by `parse_type`:
//   type   ::= quant | seqexp [ "->" type ]
//   seqexp ::= prefix { ";" prefix }
//   prefix ::= ("!" | "?") prefix | atom
impl fmt::Display for TypeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_type(self, f)
    }
}

fn write_type(t: &TypeExpr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match t.node() {
        TypeNode::Quant(q, k, body) => {
            write!(f, "{}[{}] ", q.keyword(), k)?;
            write_type(body, f)
        }
        TypeNode::Arrow(a, b) => {
            write_seq(a, f)?;
            f.write_str(" -> ")?;
            write_type(b, f)
        }
        _ => write_seq(t, f),
    }
}

fn write_seq(t: &TypeExpr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match t.node() {
        TypeNode::Seq(a, b) => {
            write_seq(a, f)?;
            f.write_str(";")?;
            write_prefix(b, f)
        }
        _ => write_prefix(t, f),
    }
}

fn write_prefix(t: &TypeExpr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match t.node() {
        TypeNode::Message(p, payload) => {
            write!(f, "{}", p.symbol())?;
            write_prefix(payload, f)
        }
        _ => write_atom(t, f),
    }
}

fn write_atom(t: &TypeExpr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match t.node() {
        TypeNode::Unit => f.write_str("unit"),
        TypeNode::Base(b) => f.write_str(b),
        TypeNode::Skip => f.write_str("skip"),
        TypeNode::Index(n) => write!(f, "{n}"),
        TypeNode::Ident(x) => write!(f, "{x}"),
        TypeNode::Labeled(Shape::Record, bs) => write_branches(f, "{", bs, "}"),
        TypeNode::Labeled(Shape::Variant, bs) => write_branches(f, "<", bs, ">"),
        TypeNode::Choice(v, bs) => {
            write!(f, "{}", v.symbol())?;
            write_branches(f, "{", bs, "}")
        }
        TypeNode::Arrow(..) | TypeNode::Quant(..) | TypeNode::Seq(..) | TypeNode::Message(..) => {
            f.write_str("(")?;
            write_type(t, f)?;
            f.write_str(")")
        }
    }
}

fn write_branches(f: &mut fmt::Formatter<'_>, open: &str, bs: &Branches, close: &str) -> fmt::Result {
    f.write_str(open)?;
    for (i, (l, t)) in bs.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{l}: ")?;
        write_type(t, f)?;
    }
    f.write_str(close)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("type identifier `{0}` defined twice")]
pub struct DuplicateIdent(pub TypeIdent);

/// A finite set of equations `X = T`, at most one per identifier.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Signature {
    equations: BTreeMap<TypeIdent, TypeExpr>,
}

impl Signature {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_equations<I, S>(equations: I) -> Result<Self, DuplicateIdent>
    where
        I: IntoIterator<Item = (S, TypeExpr)>,
        S: Into<String>,
    {
        let mut sig = Signature::new();
        for (x, t) in equations {
            sig.insert(TypeIdent::new(x), t)?;
        }
        Ok(sig)
    }

    pub fn insert(&mut self, ident: TypeIdent, body: TypeExpr) -> Result<(), DuplicateIdent> {
        if self.equations.contains_key(&ident) {
            return Err(DuplicateIdent(ident));
        }
        self.equations.insert(ident, body);
        Ok(())
    }

    pub fn get(&self, ident: &TypeIdent) -> Option<&TypeExpr> {
        self.equations.get(ident)
    }

    pub fn contains(&self, ident: &TypeIdent) -> bool {
        self.equations.contains_key(ident)
    }

    /// Equations in identifier order.
    pub fn iter(&self) -> impl Iterator<Item = (&TypeIdent, &TypeExpr)> {
        self.equations.iter()
    }

    pub fn len(&self) -> usize {
        self.equations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.equations.is_empty()
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (x, t) in &self.equations {
            writeln!(f, "{x} = {t}")?;
        }
        Ok(())
    }
}

/// Kinds of the free De Bruijn indices: position `n` holds the kind of index `n`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct KindContext {
    bindings: Vec<Kind>,
}

impl KindContext {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_kinds(kinds: impl IntoIterator<Item = Kind>) -> Self {
        KindContext {
            bindings: kinds.into_iter().collect(),
        }
    }

    pub fn lookup(&self, n: usize) -> Option<Kind> {
        self.bindings.get(n).copied()
    }

    /// The context under one more binder: every index shifts up by one and
    /// index 0 gets `kind`.
    pub fn extended(&self, kind: Kind) -> Self {
        let mut bindings = Vec::with_capacity(self.bindings.len() + 1);
        bindings.push(kind);
        bindings.extend_from_slice(&self.bindings);
        KindContext { bindings }
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn kinds(&self) -> &[Kind] {
        &self.bindings
    }
}
