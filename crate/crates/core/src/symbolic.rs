//! Symbolic terms and facts.
//!
//! Everything the agent knows about an episode is written as ground
//! s-expressions: `(holdsIn (StartFn E1) (valueOf (Attackers Region1) 2))`.
//! This module owns the term type, its textual format, substitution, and the
//! [`CaseFacts`] container that cases and probes are built from.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io;
use std::path::Path;
use std::sync::Arc;

use thiserror::Error;

/// Functor used for generalized entities introduced by generalization.
pub const GENENT_FUNCTOR: &str = "GenEntFn";

/// A non-empty atom name with no whitespace, parentheses, quotes, and no
/// numeric reading.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol(Arc<str>);

impl Symbol {
    /// Builds a symbol, panicking on an invalid name. Use [`Symbol::try_new`]
    /// for untrusted input.
    pub fn new(name: impl AsRef<str>) -> Self {
        match Self::try_new(name.as_ref()) {
            Ok(s) => s,
            Err(e) => panic!("{e}"),
        }
    }

    pub fn try_new(name: &str) -> Result<Self, ParseError> {
        if name.is_empty() {
            return Err(ParseError::new(0, ParseErrorKind::IllegalAtom(String::new())));
        }
        let bad = name.char_indices().find(|(_, c)| c.is_whitespace() || matches!(c, '(' | ')' | '"' | ';'));
        if let Some((pos, _)) = bad {
            return Err(ParseError::new(pos, ParseErrorKind::IllegalAtom(name.to_string())));
        }
        if looks_numeric(name) {
            return Err(ParseError::new(0, ParseErrorKind::IllegalAtom(name.to_string())));
        }
        Ok(Symbol(Arc::from(name)))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A finite decimal with total ordering and bitwise equality.
#[derive(Clone, Copy)]
pub struct Decimal(f64);

impl Decimal {
    pub fn new(v: f64) -> Option<Self> {
        if v.is_finite() {
            // fold -0.0 into 0.0 so equality matches ordering
            Some(Decimal(if v == 0.0 { 0.0 } else { v }))
        } else {
            None
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl PartialEq for Decimal {
    fn eq(&self, other: &Self) -> bool {
        self.0.to_bits() == other.0.to_bits()
    }
}
impl Eq for Decimal {}
impl std::hash::Hash for Decimal {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.0.to_bits().hash(state)
    }
}
impl PartialOrd for Decimal {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Decimal {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}
impl fmt::Debug for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Debug formatting of f64 is shortest-round-trip and always carries
        // a '.' or an exponent, so it never reads back as an integer.
        write!(f, "{:?}", self.0)
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Symbol(Symbol),
    Int(i64),
    Dec(Decimal),
    Str(Arc<str>),
    Compound(Symbol, Arc<[Term]>),
}

impl Term {
    pub fn sym(name: impl AsRef<str>) -> Term {
        Term::Symbol(Symbol::new(name))
    }

    /// Builds a compound; `args` must be non-empty.
    pub fn app(functor: impl AsRef<str>, args: Vec<Term>) -> Term {
        assert!(!args.is_empty(), "compound terms need at least one argument");
        Term::Compound(Symbol::new(functor), args.into())
    }

    pub fn genent(index: u32) -> Term {
        Term::app(GENENT_FUNCTOR, vec![Term::Int(index as i64)])
    }

    pub fn functor(&self) -> Option<&Symbol> {
        match self {
            Term::Compound(f, _) => Some(f),
            _ => None,
        }
    }

    pub fn args(&self) -> &[Term] {
        match self {
            Term::Compound(_, args) => args,
            _ => &[],
        }
    }

    pub fn as_symbol(&self) -> Option<&Symbol> {
        match self {
            Term::Symbol(s) => Some(s),
            _ => None,
        }
    }

    pub fn is_atom(&self) -> bool {
        !matches!(self, Term::Compound(..))
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            Term::Int(i) => Some(*i as f64),
            Term::Dec(d) => Some(d.value()),
            _ => None,
        }
    }

    /// Index of a `(GenEntFn i)` term.
    pub fn genent_index(&self) -> Option<u32> {
        match self {
            Term::Compound(f, args) if f.as_str() == GENENT_FUNCTOR && args.len() == 1 => match args[0] {
                Term::Int(i) if i >= 0 => Some(i as u32),
                _ => None,
            },
            _ => None,
        }
    }

    /// Depth-first visit of every subterm, including `self`.
    pub fn walk<'a>(&'a self, visit: &mut impl FnMut(&'a Term)) {
        visit(self);
        for a in self.args() {
            a.walk(visit);
        }
    }

    /// Height of the expression tree; atoms and first-order expressions over
    /// atoms have order 0.
    pub fn order(&self) -> u32 {
        match self {
            Term::Compound(_, args) => args.iter().filter(|a| !a.is_atom()).map(|a| a.order() + 1).max().unwrap_or(0),
            _ => 0,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Symbol(s) => write!(f, "{s}"),
            Term::Int(i) => write!(f, "{i}"),
            Term::Dec(d) => write!(f, "{d:?}"),
            Term::Str(s) => {
                f.write_str("\"")?;
                for c in s.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str("\"")
            }
            Term::Compound(functor, args) => {
                write!(f, "({functor}")?;
                for a in args.iter() {
                    write!(f, " {a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at offset {offset}: {kind}")]
pub struct ParseError {
    pub offset: usize,
    pub kind: ParseErrorKind,
}

impl ParseError {
    fn new(offset: usize, kind: ParseErrorKind) -> Self {
        ParseError { offset, kind }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("empty input")]
    Empty,
    #[error("unbalanced parentheses")]
    Unbalanced,
    #[error("illegal atom {0:?}")]
    IllegalAtom(String),
    #[error("compound needs a symbol functor and at least one argument")]
    BadCompound,
    #[error("unterminated string")]
    UnterminatedString,
    #[error("trailing input after term")]
    Trailing,
}

fn is_digits(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit())
}

fn strip_sign(s: &str) -> &str {
    s.strip_prefix(['+', '-']).unwrap_or(s)
}

fn looks_integer(s: &str) -> bool {
    is_digits(strip_sign(s))
}

fn looks_decimal(s: &str) -> bool {
    let body = strip_sign(s);
    let (mantissa, exponent) = match body.find(['e', 'E']) {
        Some(i) => (&body[..i], Some(&body[i + 1..])),
        None => (body, None),
    };
    let mantissa_ok = match mantissa.split_once('.') {
        Some((a, b)) => {
            (is_digits(a) || a.is_empty()) && (is_digits(b) || b.is_empty()) && !(a.is_empty() && b.is_empty())
        }
        None => is_digits(mantissa),
    };
    let exponent_ok = exponent.is_none_or(|e| is_digits(strip_sign(e)));
    mantissa_ok && exponent_ok && (mantissa.contains('.') || exponent.is_some())
}

fn looks_numeric(s: &str) -> bool {
    looks_integer(s) || looks_decimal(s)
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        loop {
            let rest = &self.src[self.pos..];
            let trimmed = rest.trim_start();
            self.pos += rest.len() - trimmed.len();
            if trimmed.starts_with(';') {
                self.pos += trimmed.find('\n').unwrap_or(trimmed.len());
            } else {
                break;
            }
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        self.skip_ws();
        match self.peek() {
            None => Err(ParseError::new(self.pos, ParseErrorKind::Unbalanced)),
            Some('(') => {
                let open = self.pos;
                self.pos += 1;
                let mut items = Vec::new();
                loop {
                    self.skip_ws();
                    match self.peek() {
                        None => return Err(ParseError::new(self.pos, ParseErrorKind::Unbalanced)),
                        Some(')') => {
                            self.pos += 1;
                            break;
                        }
                        Some(_) => items.push(self.term()?),
                    }
                }
                let mut items = items.into_iter();
                match (items.next(), items.len()) {
                    (Some(Term::Symbol(functor)), n) if n > 0 => {
                        Ok(Term::Compound(functor, items.collect::<Vec<_>>().into()))
                    }
                    _ => Err(ParseError::new(open, ParseErrorKind::BadCompound)),
                }
            }
            Some(')') => Err(ParseError::new(self.pos, ParseErrorKind::Unbalanced)),
            Some('"') => self.string(),
            Some(_) => self.atom(),
        }
    }

    fn string(&mut self) -> Result<Term, ParseError> {
        let start = self.pos;
        self.pos += 1;
        let mut out = String::new();
        let mut chars = self.src[self.pos..].char_indices();
        while let Some((i, c)) = chars.next() {
            match c {
                '"' => {
                    self.pos += i + 1;
                    return Ok(Term::Str(out.into()));
                }
                '\\' => match chars.next() {
                    Some((_, e @ ('"' | '\\'))) => out.push(e),
                    _ => return Err(ParseError::new(start, ParseErrorKind::UnterminatedString)),
                },
                c => out.push(c),
            }
        }
        Err(ParseError::new(start, ParseErrorKind::UnterminatedString))
    }

    fn atom(&mut self) -> Result<Term, ParseError> {
        let start = self.pos;
        let rest = &self.src[start..];
        let len = rest.find(|c: char| c.is_whitespace() || matches!(c, '(' | ')')).unwrap_or(rest.len());
        let token = &rest[..len];
        self.pos += len;
        let illegal = || ParseError::new(start, ParseErrorKind::IllegalAtom(token.to_string()));
        if looks_integer(token) {
            token.parse::<i64>().map(Term::Int).map_err(|_| illegal())
        } else if looks_decimal(token) {
            token.parse::<f64>().ok().and_then(Decimal::new).map(Term::Dec).ok_or_else(illegal)
        } else {
            Symbol::try_new(token).map(Term::Symbol).map_err(|e| ParseError::new(start + e.offset, e.kind))
        }
    }
}

/// Parses exactly one term from `text`.
pub fn parse_term(text: &str) -> Result<Term, ParseError> {
    let mut p = Parser { src: text, pos: 0 };
    p.skip_ws();
    if p.peek().is_none() {
        return Err(ParseError::new(0, ParseErrorKind::Empty));
    }
    let t = p.term()?;
    p.skip_ws();
    if p.pos < text.len() {
        let kind = if p.peek() == Some(')') { ParseErrorKind::Unbalanced } else { ParseErrorKind::Trailing };
        return Err(ParseError::new(p.pos, kind));
    }
    Ok(t)
}

/// Parses a sequence of terms (with `;` comments) from `text`.
pub fn parse_terms(text: &str) -> Result<Vec<Term>, ParseError> {
    let mut p = Parser { src: text, pos: 0 };
    let mut out = Vec::new();
    loop {
        p.skip_ws();
        if p.peek().is_none() {
            return Ok(out);
        }
        out.push(p.term()?);
    }
}

pub fn print_term(t: &Term) -> String {
    t.to_string()
}

/// Replaces every bound symbol, at any depth. Functors are not atoms and are
/// never replaced.
pub fn substitute(t: &Term, bindings: &BTreeMap<Symbol, Term>) -> Term {
    if bindings.is_empty() {
        return t.clone();
    }
    substitute_with(t, &mut |atom| match atom {
        Term::Symbol(s) => bindings.get(s).cloned(),
        _ => None,
    })
}

/// Rebuilds `t`, replacing each argument subterm for which `f` returns a
/// value. Replacements are not revisited.
pub fn substitute_with(t: &Term, f: &mut impl FnMut(&Term) -> Option<Term>) -> Term {
    if let Some(r) = f(t) {
        return r;
    }
    match t {
        Term::Compound(functor, args) => {
            let new_args: Vec<Term> = args.iter().map(|a| substitute_with(a, f)).collect();
            Term::Compound(functor.clone(), new_args.into())
        }
        _ => t.clone(),
    }
}

/// Whether the atom/term at hand is a generalization placeholder.
pub fn is_genent(t: &Term) -> bool {
    t.genent_index().is_some()
}

/// Symbols used as the collection argument of `isa`; they name types and are
/// matched only against themselves.
pub fn collection_symbols<'a>(facts: impl IntoIterator<Item = &'a Term>) -> BTreeSet<Symbol> {
    facts
        .into_iter()
        .filter(|f| f.functor().is_some_and(|s| s.as_str() == "isa") && f.args().len() == 2)
        .filter_map(|f| f.args()[1].as_symbol().cloned())
        .collect()
}

/// The "value slot" of a quantity statement: the numeric position of a
/// `(valueOf Q v)` or `(valueOf Q (Wrapper v))` expression.
pub fn value_slot(expr: &Term) -> Option<&Term> {
    if expr.functor().map(Symbol::as_str) != Some("valueOf") || expr.args().len() != 2 {
        return None;
    }
    let v = &expr.args()[1];
    if v.as_number().is_some() || is_genent(v) {
        return Some(v);
    }
    match v {
        Term::Compound(_, inner) if inner.len() == 1 && (inner[0].as_number().is_some() || is_genent(&inner[0])) => {
            Some(&inner[0])
        }
        _ => None,
    }
}

/// A set of ground facts describing one case, with its entity index.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CaseFacts {
    facts: BTreeSet<Term>,
    entities: BTreeSet<Symbol>,
}

impl CaseFacts {
    pub fn new(facts: impl IntoIterator<Item = Term>) -> Self {
        let facts: BTreeSet<Term> = facts.into_iter().collect();
        let collections = collection_symbols(&facts);
        let mut entities = BTreeSet::new();
        for f in &facts {
            for a in f.args() {
                a.walk(&mut |t| {
                    if let Term::Symbol(s) = t {
                        if !collections.contains(s) {
                            entities.insert(s.clone());
                        }
                    }
                });
            }
        }
        CaseFacts { facts, entities }
    }

    pub fn facts(&self) -> &BTreeSet<Term> {
        &self.facts
    }

    pub fn entities(&self) -> &BTreeSet<Symbol> {
        &self.entities
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Term> {
        self.facts.iter()
    }

    pub fn contains(&self, fact: &Term) -> bool {
        self.facts.contains(fact)
    }

    /// Facts sorted by printed form, the archive order.
    pub fn sorted_lines(&self) -> Vec<String> {
        let mut lines: Vec<String> = self.facts.iter().map(Term::to_string).collect();
        lines.sort();
        lines
    }
}

impl FromIterator<Term> for CaseFacts {
    fn from_iter<I: IntoIterator<Item = Term>>(iter: I) -> Self {
        CaseFacts::new(iter)
    }
}

#[derive(Debug, Error)]
pub enum ArchiveError {
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {source}")]
    Parse { line: usize, source: ParseError },
}

/// Renders facts in the archive line format: `;` comment header, then one
/// fact per line in lexicographic order of printed form.
pub fn render_archive(comments: &[String], facts: &CaseFacts) -> String {
    let mut out = String::new();
    for c in comments {
        out.push_str("; ");
        out.push_str(c);
        out.push('\n');
    }
    for line in facts.sorted_lines() {
        out.push_str(&line);
        out.push('\n');
    }
    out
}

/// Reads an archive back; returns the comment lines (without `; `) and facts.
pub fn parse_archive(text: &str) -> Result<(Vec<String>, CaseFacts), ArchiveError> {
    let mut comments = Vec::new();
    let mut facts = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(c) = trimmed.strip_prefix(';') {
            comments.push(c.strip_prefix(' ').unwrap_or(c).to_string());
            continue;
        }
        let fact = parse_term(trimmed).map_err(|source| ArchiveError::Parse { line: i + 1, source })?;
        facts.push(fact);
    }
    Ok((comments, CaseFacts::new(facts)))
}

pub fn write_archive(path: &Path, comments: &[String], facts: &CaseFacts) -> Result<(), ArchiveError> {
    std::fs::write(path, render_archive(comments, facts))?;
    Ok(())
}

pub fn read_archive(path: &Path) -> Result<(Vec<String>, CaseFacts), ArchiveError> {
    parse_archive(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(s: &str) -> Term {
        parse_term(s).unwrap()
    }

    #[test]
    fn parses_simple_compound() {
        assert_eq!(p("(UnitCount 3)"), Term::app("UnitCount", vec![Term::Int(3)]));
        assert_eq!(p("  ( UnitCount\n 3 ) "), p("(UnitCount 3)"));
    }

    #[test]
    fn parses_nested_quantity_statement() {
        let t = p("(holdsIn (StartFn E1) (valueOf (Attackers Region1) 2))");
        let expected = Term::app(
            "holdsIn",
            vec![
                Term::app("StartFn", vec![Term::sym("E1")]),
                Term::app("valueOf", vec![Term::app("Attackers", vec![Term::sym("Region1")]), Term::Int(2)]),
            ],
        );
        assert_eq!(t, expected);
        assert_eq!(t.order(), 2);
    }

    #[test]
    fn malformed_inputs_report_offsets() {
        let e = parse_term("((").unwrap_err();
        assert_eq!(e.offset, 2);
        assert_eq!(e.kind, ParseErrorKind::Unbalanced);
        assert_eq!(parse_term("   ").unwrap_err().kind, ParseErrorKind::Empty);
        assert_eq!(parse_term("(a b))").unwrap_err().offset, 5);
        assert_eq!(parse_term("()").unwrap_err().kind, ParseErrorKind::BadCompound);
        assert_eq!(parse_term("(3 a)").unwrap_err().kind, ParseErrorKind::BadCompound);
        assert!(matches!(parse_term("99999999999999999999").unwrap_err().kind, ParseErrorKind::IllegalAtom(_)));
        assert_eq!(parse_term("(a \"b)").unwrap_err().kind, ParseErrorKind::UnterminatedString);
        assert_eq!(parse_term("a b").unwrap_err().kind, ParseErrorKind::Trailing);
    }

    #[test]
    fn atom_classes() {
        assert_eq!(p("-4"), Term::Int(-4));
        assert_eq!(p("2.5"), Term::Dec(Decimal::new(2.5).unwrap()));
        assert_eq!(p("1e3"), Term::Dec(Decimal::new(1000.0).unwrap()));
        assert_eq!(p("x1.5"), Term::sym("x1.5"));
        assert_eq!(p("\"a \\\"q\\\"\""), Term::Str("a \"q\"".into()));
        assert!(Symbol::try_new("12").is_err());
        assert!(Symbol::try_new("a b").is_err());
    }

    #[test]
    fn prints_canonically() {
        assert_eq!(print_term(&Term::app("UnitCount", vec![Term::Int(0)])), "(UnitCount 0)");
        assert_eq!(print_term(&Term::sym("E1")), "E1");
        assert_eq!(print_term(&Term::Dec(Decimal::new(1.0).unwrap())), "1.0");
        assert_eq!(print_term(&p("( f   a\t(g  b) )")), "(f a (g b))");
    }

    #[test]
    fn substitution_lifts_entity() {
        let t = p("(isa STEntity1 DefensiveEpisodeFailure)");
        let mut b = BTreeMap::new();
        b.insert(Symbol::new("STEntity1"), p("(GEFn 2)"));
        assert_eq!(substitute(&t, &b), p("(isa (GEFn 2) DefensiveEpisodeFailure)"));
        assert_eq!(substitute(&t, &BTreeMap::new()), t);
    }

    #[test]
    fn substitution_reaches_every_depth() {
        // naive reference walker over the printed token stream
        fn reference(t: &Term, from: &str, to: &str) -> String {
            match t {
                Term::Symbol(s) if s.as_str() == from => to.to_string(),
                Term::Compound(f, args) => {
                    let inner: Vec<String> = args.iter().map(|a| reference(a, from, to)).collect();
                    format!("({f} {})", inner.join(" "))
                }
                other => other.to_string(),
            }
        }
        let t = p("(a x (b x (c (d x) y)) x)");
        let mut b = BTreeMap::new();
        b.insert(Symbol::new("x"), p("(GenEntFn 7)"));
        assert_eq!(substitute(&t, &b).to_string(), reference(&t, "x", "(GenEntFn 7)"));
    }

    #[test]
    fn entity_index_excludes_functors_and_collections() {
        let c = CaseFacts::new(vec![
            p("(isa City1 CityFootprint)"),
            p("(valueOf (milUnits City1) (UnitCount 1))"),
            p("(isa City1 CityFootprint)"),
        ]);
        assert_eq!(c.len(), 2);
        let names: Vec<&str> = c.entities().iter().map(Symbol::as_str).collect();
        assert_eq!(names, vec!["City1"]);
    }

    #[test]
    fn value_slots() {
        assert_eq!(value_slot(&p("(valueOf (Attackers R) 2)")), Some(&Term::Int(2)));
        assert_eq!(value_slot(&p("(valueOf milUnits (UnitCount 1))")), Some(&Term::Int(1)));
        assert_eq!(value_slot(&p("(valueOf q (UnitCount (GenEntFn 3)))")), Some(&Term::genent(3)));
        assert_eq!(value_slot(&p("(valueOf q (Pair 1 2))")), None);
    }

    #[test]
    fn archive_round_trip_is_sorted() {
        let facts = CaseFacts::new(vec![p("(b x)"), p("(a y)"), p("(a \"s; t\")")]);
        let text = render_archive(&["outcome Failure".into()], &facts);
        assert_eq!(text, "; outcome Failure\n(a \"s; t\")\n(a y)\n(b x)\n");
        let (comments, back) = parse_archive(&text).unwrap();
        assert_eq!(comments, vec!["outcome Failure"]);
        assert_eq!(back, facts);
    }

    fn arb_symbol() -> impl Strategy<Value = Symbol> {
        "[A-Za-z][A-Za-z0-9_.+-]{0,6}".prop_filter_map("numeric", |s| Symbol::try_new(&s).ok())
    }

    pub(crate) fn arb_term() -> impl Strategy<Value = Term> {
        let leaf = prop_oneof![
            arb_symbol().prop_map(Term::Symbol),
            any::<i64>().prop_map(Term::Int),
            (-1e12f64..1e12).prop_map(|v| Term::Dec(Decimal::new(v).unwrap())),
            "[ -~]{0,5}".prop_map(|s| Term::Str(s.into())),
        ];
        leaf.prop_recursive(4, 32, 4, |inner| {
            (arb_symbol(), prop::collection::vec(inner, 1..4)).prop_map(|(f, args)| Term::Compound(f, args.into()))
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn print_parse_round_trip(t in arb_term()) {
            let text = print_term(&t);
            prop_assert_eq!(parse_term(&text).unwrap(), t);
        }

        #[test]
        fn substitution_idempotent(t in arb_term(), target in arb_symbol()) {
            let mut b = BTreeMap::new();
            b.insert(target, Term::genent(1));
            let once = substitute(&t, &b);
            prop_assert_eq!(substitute(&once, &b), once);
        }
    }
}
