//! Formula printing. Output re-parses to the same tree: parentheses are
//! inserted exactly where a subterm binds looser than its context, and
//! quantified operands of a negation are always parenthesized because a bare
//! quantifier would swallow the rest of the line on re-parse.

use crate::formula::{Formula, Term};

const LVL_IMPL: u8 = 0;
const LVL_OR: u8 = 1;
const LVL_AND: u8 = 2;
const LVL_NEG: u8 = 3;
const LVL_ATOM: u8 = 4;

fn level(formula: &Formula) -> u8 {
    match formula {
        Formula::IntImpl(..) => LVL_IMPL,
        // quantifier bodies extend maximally, so the whole quantified formula
        // binds loosest of all
        Formula::Exists(..)
        | Formula::ExistsStrict(..)
        | Formula::Exists1(..)
        | Formula::Forall(..)
        | Formula::Forall1(..) => LVL_IMPL,
        Formula::TensorOr(..) | Formula::TensorOrStrict(..) | Formula::IntOr(..) => LVL_OR,
        Formula::And(..) => LVL_AND,
        Formula::WeakNeg(..) | Formula::ClassNeg(..) => LVL_NEG,
        _ => LVL_ATOM,
    }
}

pub fn format_term(term: &Term) -> String {
    match term {
        Term::Var(name) => name.clone(),
        Term::App(name, args) => {
            let parts: Vec<String> = args.iter().map(format_term).collect();
            format!("{name}({})", parts.join(", "))
        }
    }
}

fn format_terms(terms: &[Term]) -> String {
    let parts: Vec<String> = terms.iter().map(format_term).collect();
    parts.join(", ")
}

fn go(formula: &Formula, ctx: u8, out: &mut String) {
    let lvl = level(formula);
    if lvl < ctx {
        out.push('(');
        go(formula, LVL_IMPL, out);
        out.push(')');
        return;
    }
    match formula {
        Formula::Rel(name, args) => {
            out.push_str(name);
            out.push('(');
            out.push_str(&format_terms(args));
            out.push(')');
        }
        Formula::NegRel(name, args) => {
            out.push('!');
            out.push_str(name);
            out.push('(');
            out.push_str(&format_terms(args));
            out.push(')');
        }
        Formula::Eq(a, b) => {
            out.push_str(&format!("{} = {}", format_term(a), format_term(b)));
        }
        Formula::Neq(a, b) => {
            out.push_str(&format!("{} != {}", format_term(a), format_term(b)));
        }
        Formula::Dep(xs, y) => {
            out.push_str("dep(");
            out.push_str(&format_terms(xs));
            out.push_str("; ");
            out.push_str(&format_term(y));
            out.push(')');
        }
        Formula::Incl(xs, ys) => {
            out.push_str(&format!(
                "inc({}; {})",
                format_terms(xs),
                format_terms(ys)
            ));
        }
        Formula::Indep(xs, ys, zs) => {
            out.push_str(&format!(
                "indep({}; {}",
                format_terms(xs),
                format_terms(ys)
            ));
            if !zs.is_empty() {
                out.push_str(&format!(" | {}", format_terms(zs)));
            }
            out.push(')');
        }
        Formula::Excl(xs, ys) => {
            out.push_str(&format!(
                "excl({}; {})",
                format_terms(xs),
                format_terms(ys)
            ));
        }
        Formula::And(a, b) => {
            go(a, LVL_AND, out);
            out.push_str(" & ");
            go(b, LVL_AND + 1, out);
        }
        Formula::TensorOr(a, b) => {
            go(a, LVL_OR, out);
            out.push_str(" v ");
            go(b, LVL_OR + 1, out);
        }
        Formula::TensorOrStrict(a, b) => {
            go(a, LVL_OR, out);
            out.push_str(" vs ");
            go(b, LVL_OR + 1, out);
        }
        Formula::IntOr(a, b) => {
            go(a, LVL_OR, out);
            out.push_str(" vv ");
            go(b, LVL_OR + 1, out);
        }
        Formula::IntImpl(a, b) => {
            go(a, LVL_IMPL + 1, out);
            out.push_str(" -> ");
            go(b, LVL_IMPL, out);
        }
        Formula::WeakNeg(a) => {
            out.push_str("~.");
            go(a, LVL_NEG, out);
        }
        Formula::ClassNeg(a) => {
            out.push('~');
            go(a, LVL_NEG, out);
        }
        Formula::Exists(x, body) => quantifier("E", x, body, out),
        Formula::ExistsStrict(x, body) => quantifier("Es", x, body, out),
        Formula::Exists1(x, body) => quantifier("E1", x, body, out),
        Formula::Forall(x, body) => quantifier("A", x, body, out),
        Formula::Forall1(x, body) => quantifier("A1", x, body, out),
    }
}

fn quantifier(kw: &str, var: &str, body: &Formula, out: &mut String) {
    out.push_str(kw);
    out.push(' ');
    out.push_str(var);
    out.push(' ');
    go(body, LVL_IMPL, out);
}

pub fn format(formula: &Formula) -> String {
    let mut out = String::new();
    go(formula, LVL_IMPL, &mut out);
    out
}
