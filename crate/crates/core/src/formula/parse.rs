//! Recursive-descent parser for the formula grammar in the README.
//!
//! Binding strength, loosest first: `->` (right associative), then the
//! disjunctions `v`/`vs`/`vv`, then `&`, then the prefix negations. The
//! quantifiers take the longest formula to their right, so `E x P(x) & Q(x)`
//! reads `E x (P(x) & Q(x))`, even directly under a negation.

use crate::error::{Error, Result};
use crate::formula::{Formula, Term};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    LParen,
    RParen,
    Comma,
    Semi,
    Pipe,
    Eq,
    Neq,
    Amp,
    Arrow,
    WeakNeg,
    ClassNeg,
    Bang,
    Ident(String),
    Kw(Kw),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kw {
    V,
    Vs,
    Vv,
    E,
    Es,
    E1,
    A,
    A1,
    Dep,
    Inc,
    Indep,
    Excl,
}

const KEYWORDS: &[(&str, Kw)] = &[
    ("v", Kw::V),
    ("vs", Kw::Vs),
    ("vv", Kw::Vv),
    ("E", Kw::E),
    ("Es", Kw::Es),
    ("E1", Kw::E1),
    ("A", Kw::A),
    ("A1", Kw::A1),
    ("dep", Kw::Dep),
    ("inc", Kw::Inc),
    ("indep", Kw::Indep),
    ("excl", Kw::Excl),
];

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(input: &str) -> Result<Vec<Spanned>> {
    let mut out = Vec::new();
    let chars: Vec<char> = input.chars().collect();
    let mut i = 0;
    let mut line = 1;
    let mut col = 1;
    while i < chars.len() {
        let (l, c) = (line, col);
        let ch = chars[i];
        // single- and two-character tokens; None falls through to words
        let simple: Option<(Tok, usize)> = match ch {
            '(' => Some((Tok::LParen, 1)),
            ')' => Some((Tok::RParen, 1)),
            ',' => Some((Tok::Comma, 1)),
            ';' => Some((Tok::Semi, 1)),
            '|' => Some((Tok::Pipe, 1)),
            '=' => Some((Tok::Eq, 1)),
            '&' => Some((Tok::Amp, 1)),
            '!' if chars.get(i + 1) == Some(&'=') => Some((Tok::Neq, 2)),
            '!' => Some((Tok::Bang, 1)),
            '~' if chars.get(i + 1) == Some(&'.') => Some((Tok::WeakNeg, 2)),
            '~' => Some((Tok::ClassNeg, 1)),
            '-' if chars.get(i + 1) == Some(&'>') => Some((Tok::Arrow, 2)),
            '-' => {
                return Err(Error::Syntax {
                    line: l,
                    col: c,
                    msg: "expected `->`".into(),
                })
            }
            _ => None,
        };
        if let Some((tok, width)) = simple {
            out.push(Spanned { tok, line: l, col: c });
            i += width;
            col += width;
            continue;
        }
        match ch {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            ch if ch.is_whitespace() => {
                i += 1;
                col += 1;
            }
            ch if ch.is_ascii_alphabetic() || ch == '_' || ch == '$' => {
                let start = i;
                i += 1;
                col += 1;
                while i < chars.len()
                    && (chars[i].is_ascii_alphanumeric() || chars[i] == '_')
                {
                    i += 1;
                    col += 1;
                }
                let word: String = chars[start..i].iter().collect();
                let tok = KEYWORDS
                    .iter()
                    .find(|(kw, _)| *kw == word)
                    .map(|(_, kw)| Tok::Kw(*kw))
                    .unwrap_or(Tok::Ident(word));
                out.push(Spanned { tok, line: l, col: c });
            }
            other => {
                return Err(Error::Syntax {
                    line: l,
                    col: c,
                    msg: format!("unexpected character `{other}`"),
                })
            }
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    /// whether `$`-prefixed identifiers (internal fresh names) are accepted
    internal: bool,
    end_line: usize,
    end_col: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn here(&self) -> (usize, usize) {
        self.toks
            .get(self.pos)
            .map(|s| (s.line, s.col))
            .unwrap_or((self.end_line, self.end_col))
    }

    fn error(&self, msg: impl Into<String>) -> Error {
        let (line, col) = self.here();
        Error::Syntax {
            line,
            col,
            msg: msg.into(),
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<()> {
        if self.eat(&tok) {
            Ok(())
        } else {
            Err(self.error(format!("expected {what}")))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String> {
        match self.peek() {
            Some(Tok::Ident(name)) => {
                if name.starts_with('$') && !self.internal {
                    return Err(self.error(format!(
                        "names starting with `$` are reserved: `{name}`"
                    )));
                }
                let name = name.clone();
                self.pos += 1;
                Ok(name)
            }
            Some(Tok::Kw(_)) => Err(self.error(format!(
                "reserved word where {what} was expected"
            ))),
            _ => Err(self.error(format!("expected {what}"))),
        }
    }

    // term := ident [ "(" [term {"," term}] ")" ]
    fn term(&mut self) -> Result<Term> {
        let name = self.ident("a term")?;
        if self.eat(&Tok::LParen) {
            let mut args = Vec::new();
            if !self.eat(&Tok::RParen) {
                loop {
                    args.push(self.term()?);
                    if self.eat(&Tok::RParen) {
                        break;
                    }
                    self.expect(Tok::Comma, "`,` or `)` in argument list")?;
                }
            }
            Ok(Term::App(name, args))
        } else {
            Ok(Term::Var(name))
        }
    }

    fn term_list(&mut self, what: &str) -> Result<Vec<Term>> {
        let mut terms = vec![self.term().map_err(|e| match e {
            Error::Syntax { line, col, .. } => Error::Syntax {
                line,
                col,
                msg: format!("expected {what}"),
            },
            other => other,
        })?];
        while self.eat(&Tok::Comma) {
            terms.push(self.term()?);
        }
        Ok(terms)
    }

    // formula := impl
    fn formula(&mut self) -> Result<Formula> {
        self.impl_()
    }

    // impl := or [ "->" impl ]
    fn impl_(&mut self) -> Result<Formula> {
        let lhs = self.or()?;
        if self.eat(&Tok::Arrow) {
            let rhs = self.impl_()?;
            Ok(Formula::int_impl(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    // or := and { ("v" | "vs" | "vv") and }
    fn or(&mut self) -> Result<Formula> {
        let mut lhs = self.and()?;
        loop {
            let build = match self.peek() {
                Some(Tok::Kw(Kw::V)) => Formula::tensor,
                Some(Tok::Kw(Kw::Vs)) => Formula::tensor_strict,
                Some(Tok::Kw(Kw::Vv)) => Formula::int_or,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.and()?;
            lhs = build(lhs, rhs);
        }
        Ok(lhs)
    }

    // and := unary { "&" unary }
    fn and(&mut self) -> Result<Formula> {
        let mut lhs = self.unary()?;
        while self.eat(&Tok::Amp) {
            let rhs = self.unary()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    // unary := "~" unary | "~." unary | "!" relation | quantifier | primary
    fn unary(&mut self) -> Result<Formula> {
        match self.peek() {
            Some(Tok::ClassNeg) => {
                self.pos += 1;
                Ok(Formula::class_neg(self.unary()?))
            }
            Some(Tok::WeakNeg) => {
                self.pos += 1;
                Ok(Formula::weak_neg(self.unary()?))
            }
            Some(Tok::Bang) => {
                self.pos += 1;
                let name = self.ident("a relation name after `!`")?;
                self.expect(Tok::LParen, "`(` after negated relation name")?;
                let mut args = Vec::new();
                if !self.eat(&Tok::RParen) {
                    loop {
                        args.push(self.term()?);
                        if self.eat(&Tok::RParen) {
                            break;
                        }
                        self.expect(Tok::Comma, "`,` or `)` in argument list")?;
                    }
                }
                Ok(Formula::NegRel(name, args))
            }
            Some(Tok::Kw(kw @ (Kw::E | Kw::Es | Kw::E1 | Kw::A | Kw::A1))) => {
                let kw = *kw;
                self.pos += 1;
                let var = self.ident("a variable after the quantifier")?;
                // the body is the longest formula to the right
                let body = self.formula()?;
                Ok(match kw {
                    Kw::E => Formula::exists(var, body),
                    Kw::Es => Formula::exists_strict(var, body),
                    Kw::E1 => Formula::exists1(var, body),
                    Kw::A => Formula::forall(var, body),
                    Kw::A1 => Formula::forall1(var, body),
                    _ => unreachable!(),
                })
            }
            _ => self.primary(),
        }
    }

    // primary := "(" formula ")" | atom
    fn primary(&mut self) -> Result<Formula> {
        match self.peek() {
            Some(Tok::LParen) => {
                self.pos += 1;
                let inner = self.formula()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Some(Tok::Kw(Kw::Dep)) => {
                self.pos += 1;
                self.dep_atom()
            }
            Some(Tok::Kw(Kw::Inc)) => {
                self.pos += 1;
                let (xs, ys) = self.two_sided_atom("inc")?;
                Ok(Formula::Incl(xs, ys))
            }
            Some(Tok::Kw(Kw::Excl)) => {
                self.pos += 1;
                let (xs, ys) = self.two_sided_atom("excl")?;
                Ok(Formula::Excl(xs, ys))
            }
            Some(Tok::Kw(Kw::Indep)) => {
                self.pos += 1;
                self.indep_atom()
            }
            Some(Tok::Ident(_)) => {
                let term = self.term()?;
                if self.eat(&Tok::Eq) {
                    let rhs = self.term()?;
                    Ok(Formula::Eq(term, rhs))
                } else if self.eat(&Tok::Neq) {
                    let rhs = self.term()?;
                    Ok(Formula::Neq(term, rhs))
                } else {
                    match term {
                        Term::App(name, args) => Ok(Formula::Rel(name, args)),
                        Term::Var(name) => Err(self.error(format!(
                            "`{name}` alone is not a formula; expected `=`, `!=`, or `(`"
                        ))),
                    }
                }
            }
            _ => Err(self.error("expected a formula")),
        }
    }

    // dep := "dep" "(" [terms] ";" terms ")", several targets meaning a
    // conjunction of single-target atoms
    fn dep_atom(&mut self) -> Result<Formula> {
        self.expect(Tok::LParen, "`(` after `dep`")?;
        let xs = if self.peek() == Some(&Tok::Semi) {
            Vec::new()
        } else {
            self.term_list("a term or `;` in dep(...)")?
        };
        self.expect(Tok::Semi, "`;` in dep(...)")?;
        let targets = self.term_list("a target term in dep(...)")?;
        self.expect(Tok::RParen, "`)`")?;
        let mut atoms = targets
            .into_iter()
            .map(|y| Formula::Dep(xs.clone(), y));
        let first = atoms.next().unwrap();
        Ok(atoms.fold(first, Formula::and))
    }

    fn two_sided_atom(&mut self, name: &str) -> Result<(Vec<Term>, Vec<Term>)> {
        self.expect(Tok::LParen, &format!("`(` after `{name}`"))?;
        let xs = self.term_list(&format!("a term in {name}(...)"))?;
        self.expect(Tok::Semi, &format!("`;` in {name}(...)"))?;
        let ys = self.term_list(&format!("a term in {name}(...)"))?;
        self.expect(Tok::RParen, "`)`")?;
        if xs.len() != ys.len() {
            return Err(self.error(format!(
                "{name}(...) sides have lengths {} and {}; they must match",
                xs.len(),
                ys.len()
            )));
        }
        Ok((xs, ys))
    }

    // indep := "indep" "(" terms ";" terms [ "|" terms ] ")"
    fn indep_atom(&mut self) -> Result<Formula> {
        self.expect(Tok::LParen, "`(` after `indep`")?;
        let xs = self.term_list("a term in indep(...)")?;
        self.expect(Tok::Semi, "`;` in indep(...)")?;
        let ys = self.term_list("a term in indep(...)")?;
        let zs = if self.eat(&Tok::Pipe) {
            self.term_list("a term after `|` in indep(...)")?
        } else {
            Vec::new()
        };
        self.expect(Tok::RParen, "`)`")?;
        Ok(Formula::Indep(xs, ys, zs))
    }
}

fn parse_with(input: &str, internal: bool) -> Result<Formula> {
    let toks = lex(input)?;
    let end_line = input.lines().count().max(1);
    let end_col = input.lines().last().map(|l| l.chars().count() + 1).unwrap_or(1);
    let mut parser = Parser {
        toks,
        pos: 0,
        internal,
        end_line,
        end_col,
    };
    let formula = parser.formula()?;
    if parser.peek().is_some() {
        return Err(parser.error("unexpected trailing input"));
    }
    Ok(formula)
}

/// Parse a formula. Names starting with `$` are reserved for internally
/// generated variables and rejected here.
pub fn parse(input: &str) -> Result<Formula> {
    parse_with(input, false)
}

/// Parse accepting `$`-prefixed variables; used for round-tripping formulas
/// that contain internally generated names.
pub fn parse_internal(input: &str) -> Result<Formula> {
    parse_with(input, true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(name: &str) -> Term {
        Term::var(name)
    }

    fn p(x: &str) -> Formula {
        Formula::Rel("P".into(), vec![v(x)])
    }

    fn q(x: &str) -> Formula {
        Formula::Rel("Q".into(), vec![v(x)])
    }

    fn r(x: &str) -> Formula {
        Formula::Rel("R".into(), vec![v(x)])
    }

    #[test]
    fn precedence_ladder() {
        // & over v over ->
        assert_eq!(
            parse("P(x) & Q(x) v R(x) -> P(y)").unwrap(),
            Formula::int_impl(
                Formula::tensor(Formula::and(p("x"), q("x")), r("x")),
                p("y")
            )
        );
    }

    #[test]
    fn or_family_left_assoc() {
        assert_eq!(
            parse("P(x) v Q(x) vs R(x) vv P(y)").unwrap(),
            Formula::int_or(
                Formula::tensor_strict(Formula::tensor(p("x"), q("x")), r("x")),
                p("y")
            )
        );
    }

    #[test]
    fn impl_right_assoc() {
        assert_eq!(
            parse("P(x) -> Q(x) -> R(x)").unwrap(),
            Formula::int_impl(p("x"), Formula::int_impl(q("x"), r("x")))
        );
    }

    #[test]
    fn quantifier_scope_is_maximal() {
        assert_eq!(
            parse("E x P(x) & Q(x)").unwrap(),
            Formula::exists("x", Formula::and(p("x"), q("x")))
        );
        assert_eq!(
            parse("(E x P(x)) & Q(x)").unwrap(),
            Formula::and(Formula::exists("x", p("x")), q("x"))
        );
        // also when the quantifier sits under a negation
        assert_eq!(
            parse("~ A x P(x) v Q(x)").unwrap(),
            Formula::class_neg(Formula::forall("x", Formula::tensor(p("x"), q("x"))))
        );
    }

    #[test]
    fn negations_bind_tighter_than_and() {
        assert_eq!(
            parse("~P(x) & ~.Q(x)").unwrap(),
            Formula::and(
                Formula::class_neg(p("x")),
                Formula::weak_neg(q("x"))
            )
        );
        assert_eq!(
            parse("~~P(x)").unwrap(),
            Formula::class_neg(Formula::class_neg(p("x")))
        );
    }

    #[test]
    fn literals() {
        assert_eq!(
            parse("x != y & ! R(x, y)").unwrap(),
            Formula::and(
                Formula::Neq(v("x"), v("y")),
                Formula::NegRel("R".into(), vec![v("x"), v("y")])
            )
        );
        assert_eq!(
            parse("f(x) = c()").unwrap(),
            Formula::Eq(Term::app("f", vec![v("x")]), Term::constant("c"))
        );
    }

    #[test]
    fn dependency_atoms() {
        assert_eq!(
            parse("dep(x, y; z)").unwrap(),
            Formula::Dep(vec![v("x"), v("y")], v("z"))
        );
        assert_eq!(parse("dep(; x)").unwrap(), Formula::Dep(vec![], v("x")));
        // several targets sugar a conjunction
        assert_eq!(
            parse("dep(x; y, z)").unwrap(),
            Formula::and(
                Formula::Dep(vec![v("x")], v("y")),
                Formula::Dep(vec![v("x")], v("z"))
            )
        );
        assert_eq!(
            parse("inc(x, y; u, w)").unwrap(),
            Formula::Incl(vec![v("x"), v("y")], vec![v("u"), v("w")])
        );
        assert_eq!(
            parse("excl(x; y)").unwrap(),
            Formula::Excl(vec![v("x")], vec![v("y")])
        );
        assert_eq!(
            parse("indep(x; y)").unwrap(),
            Formula::Indep(vec![v("x")], vec![v("y")], vec![])
        );
        assert_eq!(
            parse("indep(x; y | z, w)").unwrap(),
            Formula::Indep(vec![v("x")], vec![v("y")], vec![v("z"), v("w")])
        );
        // atoms take arbitrary terms
        assert_eq!(
            parse("dep(f(x); c())").unwrap(),
            Formula::Dep(vec![Term::app("f", vec![v("x")])], Term::constant("c"))
        );
    }

    #[test]
    fn length_mismatch_rejected() {
        assert!(parse("inc(x, y; u)").is_err());
        assert!(parse("excl(x; y, z)").is_err());
    }

    #[test]
    fn quantifier_variants() {
        assert_eq!(
            parse("Es x E1 y A1 z x = y").unwrap(),
            Formula::exists_strict(
                "x",
                Formula::exists1("y", Formula::forall1("z", Formula::Eq(v("x"), v("y"))))
            )
        );
    }

    #[test]
    fn reserved_words_rejected_as_names() {
        assert!(parse("E v P(v)").is_err());
        assert!(parse("dep = x").is_err());
        assert!(parse("P(vs)").is_err());
    }

    #[test]
    fn internal_names_gated() {
        assert!(parse("$u0 = x").is_err());
        assert_eq!(
            parse_internal("$u0 = x").unwrap(),
            Formula::Eq(v("$u0"), v("x"))
        );
    }

    #[test]
    fn error_positions() {
        let err = parse("P(x) &\n& Q(x)").unwrap_err();
        match err {
            Error::Syntax { line, col, .. } => {
                assert_eq!(line, 2);
                assert_eq!(col, 1);
            }
            other => panic!("unexpected error: {other:?}"),
        }
        // bare variable is not a formula
        assert!(parse("x").is_err());
        // trailing input
        assert!(parse("P(x) Q(x)").is_err());
        // unclosed paren reports at end of input
        assert!(parse("(P(x)").is_err());
    }
}
