//! Temporal-epistemic formulas and their satisfaction relation over finite runs.
//!
//! Concrete syntax (whitespace is insignificant between tokens):
//!
//! ```text
//! formula ::= disj [ "->" formula ]                 right associative
//! disj    ::= conj { "|" conj }
//! conj    ::= until { "&" until }
//! until   ::= unary [ "U[0," INT "]" until ]        right associative
//! unary   ::= "!" unary
//!           | "K" INT unary | "P" INT unary
//!           | "E{" INT { "," INT } "}" unary
//!           | "G[0," INT ")" unary
//!           | primary
//! primary ::= "true" | IDENT | "(" formula ")"
//! IDENT   ::= [A-Za-z_][A-Za-z0-9_]*   (except the reserved K P E G U true)
//! ```
//!
//! Horizons are strictly positive; agent ids are 1-based.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::kripke::Relation;
use crate::{AgentId, WorldId};

/// Abstract syntax of the language. `And`, `Implies`, `Possible` and `Mutual`
/// are sugar over the core `Top/Atom/Not/Or/Globally/Until/Knows`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    Top,
    Atom(String),
    Not(Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    /// `G[0,β) φ`: φ at every step of `t..t+β`.
    Globally(usize, Box<Formula>),
    /// `φ₁ U[0,α] φ₂`: φ₂ at some `t'' ∈ [t, t+α]`, φ₁ on `[t, t'')`.
    Until(usize, Box<Formula>, Box<Formula>),
    Knows(AgentId, Box<Formula>),
    Possible(AgentId, Box<Formula>),
    /// Everyone in the (sorted, deduplicated) group knows φ.
    Mutual(Vec<AgentId>, Box<Formula>),
}

impl Formula {
    pub fn atom(name: impl Into<String>) -> Self {
        Formula::Atom(name.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Self {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    /// Panics if `beta == 0`; use [`parse`] for untrusted input.
    pub fn globally(beta: usize, f: Formula) -> Self {
        assert!(beta > 0, "globally horizon must be positive");
        Formula::Globally(beta, Box::new(f))
    }

    /// Panics if `alpha == 0`.
    pub fn until(alpha: usize, hold: Formula, goal: Formula) -> Self {
        assert!(alpha > 0, "until horizon must be positive");
        Formula::Until(alpha, Box::new(hold), Box::new(goal))
    }

    pub fn knows(agent: AgentId, f: Formula) -> Self {
        Formula::Knows(agent, Box::new(f))
    }

    pub fn possible(agent: AgentId, f: Formula) -> Self {
        Formula::Possible(agent, Box::new(f))
    }

    pub fn mutual(agents: impl IntoIterator<Item = AgentId>, f: Formula) -> Self {
        let set: BTreeSet<AgentId> = agents.into_iter().collect();
        Formula::Mutual(set.into_iter().collect(), Box::new(f))
    }

    /// Conjunction of all items; `Top` when empty.
    pub fn conjunction(items: impl IntoIterator<Item = Formula>) -> Self {
        let mut it = items.into_iter();
        match it.next() {
            None => Formula::Top,
            Some(first) => it.fold(first, Formula::and),
        }
    }

    /// Number of nodes in the syntax tree.
    pub fn size(&self) -> usize {
        match self {
            Formula::Top | Formula::Atom(_) => 1,
            Formula::Not(f)
            | Formula::Globally(_, f)
            | Formula::Knows(_, f)
            | Formula::Possible(_, f)
            | Formula::Mutual(_, f) => 1 + f.size(),
            Formula::Or(a, b)
            | Formula::And(a, b)
            | Formula::Implies(a, b)
            | Formula::Until(_, a, b) => 1 + a.size() + b.size(),
        }
    }

    fn is_binary(&self) -> bool {
        matches!(
            self,
            Formula::Or(..) | Formula::And(..) | Formula::Implies(..) | Formula::Until(..)
        )
    }
}

/// Rewrite into the core grammar (`Top, Atom, Not, Or, Globally, Until, Knows`).
pub fn desugar(f: &Formula) -> Formula {
    use Formula::*;
    match f {
        Top => Top,
        Atom(a) => Atom(a.clone()),
        Not(g) => Formula::not(desugar(g)),
        Or(a, b) => Formula::or(desugar(a), desugar(b)),
        And(a, b) => Formula::not(Formula::or(
            Formula::not(desugar(a)),
            Formula::not(desugar(b)),
        )),
        Implies(a, b) => Formula::or(Formula::not(desugar(a)), desugar(b)),
        Globally(beta, g) => Globally(*beta, Box::new(desugar(g))),
        Until(alpha, a, b) => Until(*alpha, Box::new(desugar(a)), Box::new(desugar(b))),
        Knows(i, g) => Formula::knows(*i, desugar(g)),
        Possible(i, g) => Formula::not(Formula::knows(*i, Formula::not(desugar(g)))),
        Mutual(group, g) => {
            let sugared =
                Formula::conjunction(group.iter().map(|&i| Formula::knows(i, (**g).clone())));
            desugar(&sugared)
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        struct Wrap<'a>(&'a Formula);
        impl fmt::Display for Wrap<'_> {
            fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
                if self.0.is_binary() {
                    write!(out, "({})", self.0)
                } else {
                    write!(out, "{}", self.0)
                }
            }
        }
        match self {
            Formula::Top => write!(out, "true"),
            Formula::Atom(a) => write!(out, "{a}"),
            Formula::Not(g) => write!(out, "!{}", Wrap(g)),
            Formula::Or(a, b) => write!(out, "{} | {}", Wrap(a), Wrap(b)),
            Formula::And(a, b) => write!(out, "{} & {}", Wrap(a), Wrap(b)),
            Formula::Implies(a, b) => write!(out, "{} -> {}", Wrap(a), Wrap(b)),
            Formula::Globally(beta, g) => write!(out, "G[0,{beta}) {}", Wrap(g)),
            Formula::Until(alpha, a, b) => write!(out, "{} U[0,{alpha}] {}", Wrap(a), Wrap(b)),
            Formula::Knows(i, g) => write!(out, "K {i} {}", Wrap(g)),
            Formula::Possible(i, g) => write!(out, "P {i} {}", Wrap(g)),
            Formula::Mutual(group, g) => {
                let ids: Vec<String> = group.iter().map(|i| i.to_string()).collect();
                write!(out, "E{{{}}} {}", ids.join(","), Wrap(g))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at {pos}: expected {expected}, found {found}")]
    Syntax {
        pos: usize,
        expected: String,
        found: String,
    },
    #[error("unknown operator `{name}` at {pos}")]
    UnknownOperator { pos: usize, name: String },
    #[error("horizon must be positive at {pos}")]
    NonPositiveHorizon { pos: usize },
    #[error("only intervals starting at 0 are supported (at {pos})")]
    UnsupportedInterval { pos: usize },
    #[error("agent ids are 1-based (at {pos})")]
    InvalidAgent { pos: usize },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(u64),
    Sym(&'static str),
}

impl fmt::Display for Tok {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(out, "`{s}`"),
            Tok::Int(v) => write!(out, "`{v}`"),
            Tok::Sym(s) => write!(out, "`{s}`"),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            toks.push((start, Tok::Ident(text[start..i].to_string())));
        } else if c.is_ascii_digit() {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let v = text[start..i].parse().map_err(|_| ParseError::Syntax {
                pos: start,
                expected: "integer".into(),
                found: text[start..i].to_string(),
            })?;
            toks.push((start, Tok::Int(v)));
        } else if text[i..].starts_with("->") {
            toks.push((start, Tok::Sym("->")));
            i += 2;
        } else {
            let sym = match c {
                b'(' => "(",
                b')' => ")",
                b'[' => "[",
                b']' => "]",
                b'{' => "{",
                b'}' => "}",
                b',' => ",",
                b'!' => "!",
                b'|' => "|",
                b'&' => "&",
                _ => {
                    return Err(ParseError::Syntax {
                        pos: start,
                        expected: "token".into(),
                        found: (c as char).to_string(),
                    })
                }
            };
            toks.push((start, Tok::Sym(sym)));
            i += 1;
        }
    }
    Ok(toks)
}

const RESERVED: [&str; 6] = ["K", "P", "E", "G", "U", "true"];

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn found(&self) -> String {
        self.peek()
            .map(|t| t.to_string())
            .unwrap_or_else(|| "end of input".into())
    }

    fn fail<T>(&self, expected: &str) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            pos: self.offset(),
            expected: expected.into(),
            found: self.found(),
        })
    }

    fn eat_sym(&mut self, sym: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Sym(s)) if *s == sym) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, sym: &str) -> Result<(), ParseError> {
        if self.eat_sym(sym) {
            Ok(())
        } else {
            self.fail(&format!("`{sym}`"))
        }
    }

    fn expect_int(&mut self) -> Result<(usize, u64), ParseError> {
        match self.peek() {
            Some(Tok::Int(v)) => {
                let v = *v;
                let at = self.offset();
                self.pos += 1;
                Ok((at, v))
            }
            _ => self.fail("integer"),
        }
    }

    fn agent(&mut self) -> Result<AgentId, ParseError> {
        let (at, v) = self.expect_int()?;
        if v == 0 {
            return Err(ParseError::InvalidAgent { pos: at });
        }
        Ok(v as AgentId)
    }

    /// `[0,` INT then the given closing bracket.
    fn horizon(&mut self, close: &str) -> Result<usize, ParseError> {
        self.expect_sym("[")?;
        let (at, lo) = self.expect_int()?;
        if lo != 0 {
            return Err(ParseError::UnsupportedInterval { pos: at });
        }
        self.expect_sym(",")?;
        let (at, hi) = self.expect_int()?;
        if hi == 0 {
            return Err(ParseError::NonPositiveHorizon { pos: at });
        }
        self.expect_sym(close)?;
        Ok(hi as usize)
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.disj()?;
        if self.eat_sym("->") {
            let rhs = self.formula()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disj(&mut self) -> Result<Formula, ParseError> {
        let mut acc = self.conj()?;
        while self.eat_sym("|") {
            acc = Formula::or(acc, self.conj()?);
        }
        Ok(acc)
    }

    fn conj(&mut self) -> Result<Formula, ParseError> {
        let mut acc = self.until()?;
        while self.eat_sym("&") {
            acc = Formula::and(acc, self.until()?);
        }
        Ok(acc)
    }

    fn until(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.unary()?;
        if matches!(self.peek(), Some(Tok::Ident(s)) if s == "U") {
            self.pos += 1;
            let alpha = self.horizon("]")?;
            let rhs = self.until()?;
            return Ok(Formula::Until(alpha, Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        if self.eat_sym("!") {
            return Ok(Formula::not(self.unary()?));
        }
        let (at, name) = match self.toks.get(self.pos) {
            Some((at, Tok::Ident(name))) => (*at, name.clone()),
            _ => return self.primary(),
        };
        match name.as_str() {
            "K" | "P" => {
                self.pos += 1;
                let i = self.agent()?;
                let body = self.unary()?;
                Ok(if name == "K" {
                    Formula::knows(i, body)
                } else {
                    Formula::possible(i, body)
                })
            }
            "E" => {
                self.pos += 1;
                self.expect_sym("{")?;
                let mut group = vec![self.agent()?];
                while self.eat_sym(",") {
                    group.push(self.agent()?);
                }
                self.expect_sym("}")?;
                let body = self.unary()?;
                Ok(Formula::mutual(group, body))
            }
            "G" => {
                self.pos += 1;
                let beta = self.horizon(")")?;
                Ok(Formula::Globally(beta, Box::new(self.unary()?)))
            }
            "U" => self.fail("formula"),
            _ if matches!(self.peek_at(1), Some(Tok::Sym("[")) | Some(Tok::Sym("{"))) => {
                Err(ParseError::UnknownOperator { pos: at, name })
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Formula, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Sym("(")) => {
                self.pos += 1;
                let f = self.formula()?;
                self.expect_sym(")")?;
                Ok(f)
            }
            Some(Tok::Ident(name)) if name == "true" => {
                self.pos += 1;
                Ok(Formula::Top)
            }
            Some(Tok::Ident(name)) if !RESERVED.contains(&name.as_str()) => {
                self.pos += 1;
                Ok(Formula::Atom(name))
            }
            _ => self.fail("formula"),
        }
    }
}

/// Parse the concrete syntax documented at the top of this module.
pub fn parse(text: &str) -> Result<Formula, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: text.len(),
    };
    let f = p.formula()?;
    if p.pos != p.toks.len() {
        return p.fail("end of input");
    }
    Ok(f)
}

impl std::str::FromStr for Formula {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("temporal window runs past the end of the trace (length {len})")]
    HorizonExceeded { len: usize },
    #[error("time {t} outside trace of length {len}")]
    OutOfRange { t: usize, len: usize },
    #[error("unknown atom `{0}`")]
    UnknownAtom(String),
    #[error("unknown agent {0}")]
    UnknownAgent(AgentId),
}

/// A finite run over a fixed set of worlds: what the satisfaction relation reads.
///
/// Atoms are resolved once per formula (`resolve`) and then looked up by handle.
pub trait Structure {
    type Atom: Copy;

    /// Number of steps; valid times are `0..len()`.
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    fn n_agents(&self) -> usize;
    /// The run's world at time `t`.
    fn world_at(&self, t: usize) -> WorldId;
    fn resolve(&self, atom: &str) -> Option<Self::Atom>;
    fn holds(&self, atom: Self::Atom, t: usize, world: WorldId) -> bool;
    /// `R_{i,t}`.
    fn relation(&self, agent: AgentId, t: usize) -> &Relation;
}

/// Persistent list of world substitutions `r[t ↦ w]`.
#[derive(Clone, Copy)]
struct Overrides<'a> {
    t: usize,
    world: WorldId,
    next: Option<&'a Overrides<'a>>,
}

fn world_at<S: Structure>(s: &S, t: usize, ov: Option<&Overrides<'_>>) -> WorldId {
    let mut cur = ov;
    while let Some(o) = cur {
        if o.t == t {
            return o.world;
        }
        cur = o.next;
    }
    s.world_at(t)
}

#[derive(Clone, Debug)]
enum Node<A> {
    Top,
    Atom(A),
    Not(Box<Node<A>>),
    Or(Box<Node<A>>, Box<Node<A>>),
    And(Box<Node<A>>, Box<Node<A>>),
    Implies(Box<Node<A>>, Box<Node<A>>),
    Globally(usize, Box<Node<A>>),
    Until(usize, Box<Node<A>>, Box<Node<A>>),
    Knows(AgentId, Box<Node<A>>),
    Possible(AgentId, Box<Node<A>>),
    Mutual(Vec<AgentId>, Box<Node<A>>),
}

/// A formula whose atoms and agents have been checked against a structure.
#[derive(Clone, Debug)]
pub struct Compiled<A> {
    root: Node<A>,
}

/// Resolve atoms and validate agent ids of `f` against `s`.
pub fn compile<S: Structure>(s: &S, f: &Formula) -> Result<Compiled<S::Atom>, EvalError> {
    fn go<S: Structure>(s: &S, f: &Formula) -> Result<Node<S::Atom>, EvalError> {
        let agent = |i: AgentId| {
            if i >= 1 && i <= s.n_agents() {
                Ok(i)
            } else {
                Err(EvalError::UnknownAgent(i))
            }
        };
        Ok(match f {
            Formula::Top => Node::Top,
            Formula::Atom(a) => Node::Atom(
                s.resolve(a)
                    .ok_or_else(|| EvalError::UnknownAtom(a.clone()))?,
            ),
            Formula::Not(g) => Node::Not(Box::new(go(s, g)?)),
            Formula::Or(a, b) => Node::Or(Box::new(go(s, a)?), Box::new(go(s, b)?)),
            Formula::And(a, b) => Node::And(Box::new(go(s, a)?), Box::new(go(s, b)?)),
            Formula::Implies(a, b) => Node::Implies(Box::new(go(s, a)?), Box::new(go(s, b)?)),
            Formula::Globally(beta, g) => Node::Globally(*beta, Box::new(go(s, g)?)),
            Formula::Until(alpha, a, b) => {
                Node::Until(*alpha, Box::new(go(s, a)?), Box::new(go(s, b)?))
            }
            Formula::Knows(i, g) => Node::Knows(agent(*i)?, Box::new(go(s, g)?)),
            Formula::Possible(i, g) => Node::Possible(agent(*i)?, Box::new(go(s, g)?)),
            Formula::Mutual(group, g) => {
                let ids = group
                    .iter()
                    .map(|&i| agent(i))
                    .collect::<Result<Vec<_>, _>>()?;
                Node::Mutual(ids, Box::new(go(s, g)?))
            }
        })
    }
    Ok(Compiled { root: go(s, f)? })
}

fn and3(a: Option<bool>, b: impl FnOnce() -> Option<bool>) -> Option<bool> {
    match a {
        Some(false) => Some(false),
        Some(true) => b(),
        None => match b() {
            Some(false) => Some(false),
            _ => None,
        },
    }
}

fn or3(a: Option<bool>, b: impl FnOnce() -> Option<bool>) -> Option<bool> {
    and3(a.map(|v| !v), || b().map(|v| !v)).map(|v| !v)
}

/// Kleene evaluation where every time `>= limit` is unknown.
fn eval3<S: Structure>(
    s: &S,
    node: &Node<S::Atom>,
    t: usize,
    ov: Option<&Overrides<'_>>,
    limit: usize,
) -> Option<bool> {
    if t >= limit {
        return match node {
            Node::Top => Some(true),
            _ => None,
        };
    }
    match node {
        Node::Top => Some(true),
        Node::Atom(a) => Some(s.holds(*a, t, world_at(s, t, ov))),
        Node::Not(g) => eval3(s, g, t, ov, limit).map(|v| !v),
        Node::Or(a, b) => or3(eval3(s, a, t, ov, limit), || eval3(s, b, t, ov, limit)),
        Node::And(a, b) => and3(eval3(s, a, t, ov, limit), || eval3(s, b, t, ov, limit)),
        Node::Implies(a, b) => or3(eval3(s, a, t, ov, limit).map(|v| !v), || {
            eval3(s, b, t, ov, limit)
        }),
        Node::Globally(beta, g) => {
            let mut acc = Some(true);
            for u in t..t + beta {
                if u >= limit {
                    return and3(acc, || None);
                }
                acc = and3(acc, || eval3(s, g, u, ov, limit));
                if acc == Some(false) {
                    return acc;
                }
            }
            acc
        }
        Node::Until(alpha, hold, goal) => {
            // OR over u of (goal(u) AND hold on [t, u)).
            let mut result = Some(false);
            let mut prefix = Some(true);
            for u in t..=t + alpha {
                if u >= limit {
                    return or3(result, || and3(prefix, || None));
                }
                let term = and3(prefix, || eval3(s, goal, u, ov, limit));
                result = or3(result, || term);
                if result == Some(true) {
                    return result;
                }
                prefix = and3(prefix, || eval3(s, hold, u, ov, limit));
                if prefix == Some(false) {
                    return result;
                }
            }
            result
        }
        Node::Knows(i, g) => knows3(s, *i, g, t, ov, limit),
        Node::Possible(i, g) => {
            // P i φ = !K i !φ, evaluated directly.
            let here = world_at(s, t, ov);
            let mut acc = Some(false);
            for w in s.relation(*i, t).row(here).iter() {
                let sub = Overrides {
                    t,
                    world: w,
                    next: ov,
                };
                acc = or3(acc, || eval3(s, g, t, Some(&sub), limit));
                if acc == Some(true) {
                    break;
                }
            }
            acc
        }
        Node::Mutual(group, g) => {
            let mut acc = Some(true);
            for &i in group {
                acc = and3(acc, || knows3(s, i, g, t, ov, limit));
                if acc == Some(false) {
                    break;
                }
            }
            acc
        }
    }
}

fn knows3<S: Structure>(
    s: &S,
    agent: AgentId,
    g: &Node<S::Atom>,
    t: usize,
    ov: Option<&Overrides<'_>>,
    limit: usize,
) -> Option<bool> {
    let here = world_at(s, t, ov);
    let mut acc = Some(true);
    for w in s.relation(agent, t).row(here).iter() {
        let sub = Overrides {
            t,
            world: w,
            next: ov,
        };
        acc = and3(acc, || eval3(s, g, t, Some(&sub), limit));
        if acc == Some(false) {
            break;
        }
    }
    acc
}

impl<A: Copy> Compiled<A> {
    /// Truth at `(r, t)`; errors if a temporal window runs past the trace.
    pub fn eval<S: Structure<Atom = A>>(&self, s: &S, t: usize) -> Result<bool, EvalError> {
        if t >= s.len() {
            return Err(EvalError::OutOfRange { t, len: s.len() });
        }
        eval3(s, &self.root, t, None, s.len()).ok_or(EvalError::HorizonExceeded { len: s.len() })
    }

    /// Truth at `(r[t ↦ world], t)`.
    pub fn eval_with_world<S: Structure<Atom = A>>(
        &self,
        s: &S,
        t: usize,
        world: WorldId,
    ) -> Result<bool, EvalError> {
        if t >= s.len() {
            return Err(EvalError::OutOfRange { t, len: s.len() });
        }
        let ov = Overrides {
            t,
            world,
            next: None,
        };
        eval3(s, &self.root, t, Some(&ov), s.len())
            .ok_or(EvalError::HorizonExceeded { len: s.len() })
    }

    /// Verdict using only steps `< limit` of the run; `None` if those steps do
    /// not determine it.
    pub fn eval_prefix<S: Structure<Atom = A>>(
        &self,
        s: &S,
        t: usize,
        limit: usize,
    ) -> Option<bool> {
        eval3(s, &self.root, t, None, limit.min(s.len()))
    }
}

/// One-shot evaluation of `f` at time `t`.
pub fn eval<S: Structure>(s: &S, t: usize, f: &Formula) -> Result<bool, EvalError> {
    compile(s, f)?.eval(s, t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_knowledge_atom() {
        assert_eq!(
            parse("K 1 (H1)").unwrap(),
            Formula::knows(1, Formula::atom("H1"))
        );
    }

    #[test]
    fn parses_resilience_shape() {
        let f = parse("(!E{1,2} phi2) U[0,550] (G[0,600) E{1,2} phi2)").unwrap();
        let ek = Formula::mutual([1, 2], Formula::atom("phi2"));
        let expected = Formula::until(550, Formula::not(ek.clone()), Formula::globally(600, ek));
        assert_eq!(f, expected);
    }

    #[test]
    fn rejects_zero_horizon() {
        assert!(matches!(
            parse("G[0,0) p"),
            Err(ParseError::NonPositiveHorizon { pos: 4 })
        ));
        assert!(matches!(
            parse("p U[0,0] q"),
            Err(ParseError::NonPositiveHorizon { .. })
        ));
    }

    #[test]
    fn rejects_unknown_operator_and_garbage() {
        assert!(matches!(
            parse("F[0,3) p"),
            Err(ParseError::UnknownOperator { pos: 0, .. })
        ));
        assert!(matches!(
            parse("p &"),
            Err(ParseError::Syntax { pos: 3, .. })
        ));
        assert!(matches!(
            parse("K 0 p"),
            Err(ParseError::InvalidAgent { .. })
        ));
        assert!(matches!(
            parse("G[1,3) p"),
            Err(ParseError::UnsupportedInterval { .. })
        ));
        assert!(parse("p q").is_err());
        assert!(parse("E{} p").is_err());
    }

    #[test]
    fn precedence_and_associativity() {
        let f = parse("a | b & c -> d -> e").unwrap();
        let expected = Formula::implies(
            Formula::or(
                Formula::atom("a"),
                Formula::and(Formula::atom("b"), Formula::atom("c")),
            ),
            Formula::implies(Formula::atom("d"), Formula::atom("e")),
        );
        assert_eq!(f, expected);
        let u = parse("a U[0,2] b U[0,3] c").unwrap();
        assert_eq!(
            u,
            Formula::until(
                2,
                Formula::atom("a"),
                Formula::until(3, Formula::atom("b"), Formula::atom("c"))
            )
        );
    }

    #[test]
    fn print_is_reparsable() {
        for text in [
            "true",
            "!(a | b)",
            "K 2 (P 1 !x)",
            "E{3,1} (a -> b)",
            "(a U[0,4] b) & G[0,2) c",
            "!G[0,5) (K 1 a | !b)",
        ] {
            let f = parse(text).unwrap();
            assert_eq!(parse(&f.to_string()).unwrap(), f, "{text} -> {f}");
        }
    }

    #[test]
    fn desugar_examples() {
        let p = Formula::atom("p");
        let q = Formula::atom("q");
        assert_eq!(
            desugar(&Formula::and(p.clone(), q.clone())),
            Formula::not(Formula::or(
                Formula::not(p.clone()),
                Formula::not(q.clone())
            ))
        );
        assert_eq!(
            desugar(&Formula::possible(1, p.clone())),
            Formula::not(Formula::knows(1, Formula::not(p.clone())))
        );
        assert_eq!(
            desugar(&Formula::mutual([2, 1], p.clone())),
            desugar(&Formula::and(
                Formula::knows(1, p.clone()),
                Formula::knows(2, p)
            ))
        );
    }
}
