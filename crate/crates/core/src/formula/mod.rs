//! Formula syntax: terms, the connective/atom repertoire, substitution, and
//! fragment classification. Parsing and printing live in the `parse` and
//! `print` submodules; the concrete grammar is documented in the README.

pub mod parse;
pub mod print;

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::model::Signature;

/// First-order terms over variables and function applications. Constants are
/// 0-ary applications (written `c()` in concrete syntax).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    App(String, Vec<Term>),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Term {
        Term::Var(name.into())
    }

    pub fn app(name: impl Into<String>, args: Vec<Term>) -> Term {
        Term::App(name.into(), args)
    }

    pub fn constant(name: impl Into<String>) -> Term {
        Term::App(name.into(), Vec::new())
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Var(name) => {
                out.insert(name.clone());
            }
            Term::App(_, args) => {
                for arg in args {
                    arg.collect_vars(out);
                }
            }
        }
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn contains_var(&self, name: &str) -> bool {
        match self {
            Term::Var(v) => v == name,
            Term::App(_, args) => args.iter().any(|a| a.contains_var(name)),
        }
    }

    /// The term with every occurrence of `var` replaced by `t`.
    pub fn substitute(&self, var: &str, t: &Term) -> Term {
        match self {
            Term::Var(v) if v == var => t.clone(),
            Term::Var(_) => self.clone(),
            Term::App(name, args) => Term::App(
                name.clone(),
                args.iter().map(|a| a.substitute(var, t)).collect(),
            ),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", print::format_term(self))
    }
}

/// Team-logic formulas. The split connectives (`v`/`vs`, `E`/`Es`) share
/// classical readings on flat formulas but differ in general; `vv`, `->`,
/// `~.` and `~` are the team-level connectives.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    /// R(t1, ..., tk)
    Rel(String, Vec<Term>),
    /// !R(t1, ..., tk)
    NegRel(String, Vec<Term>),
    Eq(Term, Term),
    Neq(Term, Term),
    /// dep(t1, ..., tk; u): rows agreeing on the t's agree on u.
    Dep(Vec<Term>, Term),
    /// inc(t1, ..., tk; u1, ..., uk): every t-tuple occurs as a u-tuple.
    Incl(Vec<Term>, Vec<Term>),
    /// indep(xs; ys | zs): fixing the z-values, x-values and y-values vary
    /// freely of each other. `zs` empty is plain independence.
    Indep(Vec<Term>, Vec<Term>, Vec<Term>),
    /// excl(t1, ..., tk; u1, ..., uk): no t-tuple of any row equals a u-tuple
    /// of any row (including the same row).
    Excl(Vec<Term>, Vec<Term>),
    And(Box<Formula>, Box<Formula>),
    /// `v`: the team splits into two covering subteams.
    TensorOr(Box<Formula>, Box<Formula>),
    /// `vs`: like `v` but the subteams must be disjoint.
    TensorOrStrict(Box<Formula>, Box<Formula>),
    /// `vv`: one of the disjuncts holds of the whole team.
    IntOr(Box<Formula>, Box<Formula>),
    /// `->`: every subteam satisfying the left side satisfies the right.
    IntImpl(Box<Formula>, Box<Formula>),
    /// `~.`: the team is empty or fails the operand.
    WeakNeg(Box<Formula>),
    /// `~`: the team fails the operand.
    ClassNeg(Box<Formula>),
    /// `E x`: extend each row by a nonempty set of witnesses.
    Exists(String, Box<Formula>),
    /// `Es x`: extend each row by exactly one witness.
    ExistsStrict(String, Box<Formula>),
    /// `E1 x`: extend every row by one shared witness.
    Exists1(String, Box<Formula>),
    /// `A x`: extend each row by every element.
    Forall(String, Box<Formula>),
    /// `A1 x`: the `A x` team property holds when tested one shared value at
    /// a time.
    Forall1(String, Box<Formula>),
}

impl Formula {
    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn tensor(a: Formula, b: Formula) -> Formula {
        Formula::TensorOr(Box::new(a), Box::new(b))
    }

    pub fn tensor_strict(a: Formula, b: Formula) -> Formula {
        Formula::TensorOrStrict(Box::new(a), Box::new(b))
    }

    pub fn int_or(a: Formula, b: Formula) -> Formula {
        Formula::IntOr(Box::new(a), Box::new(b))
    }

    pub fn int_impl(a: Formula, b: Formula) -> Formula {
        Formula::IntImpl(Box::new(a), Box::new(b))
    }

    pub fn weak_neg(a: Formula) -> Formula {
        Formula::WeakNeg(Box::new(a))
    }

    pub fn class_neg(a: Formula) -> Formula {
        Formula::ClassNeg(Box::new(a))
    }

    pub fn exists(x: impl Into<String>, body: Formula) -> Formula {
        Formula::Exists(x.into(), Box::new(body))
    }

    pub fn exists_strict(x: impl Into<String>, body: Formula) -> Formula {
        Formula::ExistsStrict(x.into(), Box::new(body))
    }

    pub fn exists1(x: impl Into<String>, body: Formula) -> Formula {
        Formula::Exists1(x.into(), Box::new(body))
    }

    pub fn forall(x: impl Into<String>, body: Formula) -> Formula {
        Formula::Forall(x.into(), Box::new(body))
    }

    pub fn forall1(x: impl Into<String>, body: Formula) -> Formula {
        Formula::Forall1(x.into(), Box::new(body))
    }

    /// Name of the outermost construct, for error messages.
    pub fn construct_name(&self) -> &'static str {
        match self {
            Formula::Rel(..) => "relation",
            Formula::NegRel(..) => "negated relation",
            Formula::Eq(..) => "equation",
            Formula::Neq(..) => "negated equation",
            Formula::Dep(..) => "dep",
            Formula::Incl(..) => "inc",
            Formula::Indep(..) => "indep",
            Formula::Excl(..) => "excl",
            Formula::And(..) => "&",
            Formula::TensorOr(..) => "v",
            Formula::TensorOrStrict(..) => "vs",
            Formula::IntOr(..) => "vv",
            Formula::IntImpl(..) => "->",
            Formula::WeakNeg(..) => "~.",
            Formula::ClassNeg(..) => "~",
            Formula::Exists(..) => "E",
            Formula::ExistsStrict(..) => "Es",
            Formula::Exists1(..) => "E1",
            Formula::Forall(..) => "A",
            Formula::Forall1(..) => "A1",
        }
    }

    /// Argument tuples of a dependency-family atom, or `None` for anything
    /// else. The groups preserve the atom's own order.
    pub fn atom_groups(&self) -> Option<Vec<&[Term]>> {
        match self {
            Formula::Dep(xs, y) => Some(vec![xs.as_slice(), std::slice::from_ref(y)]),
            Formula::Incl(xs, ys) | Formula::Excl(xs, ys) => {
                Some(vec![xs.as_slice(), ys.as_slice()])
            }
            Formula::Indep(xs, ys, zs) => {
                Some(vec![xs.as_slice(), ys.as_slice(), zs.as_slice()])
            }
            _ => None,
        }
    }

    pub fn is_dependency_atom(&self) -> bool {
        self.atom_groups().is_some()
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free_vars(&mut out);
        out
    }

    fn collect_free_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::Rel(_, args) | Formula::NegRel(_, args) => {
                for t in args {
                    t.collect_vars(out);
                }
            }
            Formula::Eq(a, b) | Formula::Neq(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            _ if self.is_dependency_atom() => {
                for group in self.atom_groups().unwrap() {
                    for t in group {
                        t.collect_vars(out);
                    }
                }
            }
            Formula::And(a, b)
            | Formula::TensorOr(a, b)
            | Formula::TensorOrStrict(a, b)
            | Formula::IntOr(a, b)
            | Formula::IntImpl(a, b) => {
                a.collect_free_vars(out);
                b.collect_free_vars(out);
            }
            Formula::WeakNeg(a) | Formula::ClassNeg(a) => a.collect_free_vars(out),
            Formula::Exists(x, body)
            | Formula::ExistsStrict(x, body)
            | Formula::Exists1(x, body)
            | Formula::Forall(x, body)
            | Formula::Forall1(x, body) => {
                let mut inner = BTreeSet::new();
                body.collect_free_vars(&mut inner);
                inner.remove(x);
                out.extend(inner);
            }
            _ => unreachable!("atom cases covered above"),
        }
    }

    /// Rewrite the splitting connectives to their strict forms throughout.
    pub fn to_strict(&self) -> Formula {
        let s = |f: &Formula| Box::new(f.to_strict());
        match self {
            Formula::TensorOr(a, b) => Formula::TensorOrStrict(s(a), s(b)),
            Formula::Exists(x, body) => Formula::ExistsStrict(x.clone(), s(body)),
            Formula::And(a, b) => Formula::And(s(a), s(b)),
            Formula::TensorOrStrict(a, b) => Formula::TensorOrStrict(s(a), s(b)),
            Formula::IntOr(a, b) => Formula::IntOr(s(a), s(b)),
            Formula::IntImpl(a, b) => Formula::IntImpl(s(a), s(b)),
            Formula::WeakNeg(a) => Formula::WeakNeg(s(a)),
            Formula::ClassNeg(a) => Formula::ClassNeg(s(a)),
            Formula::ExistsStrict(x, body) => Formula::ExistsStrict(x.clone(), s(body)),
            Formula::Exists1(x, body) => Formula::Exists1(x.clone(), s(body)),
            Formula::Forall(x, body) => Formula::Forall(x.clone(), s(body)),
            Formula::Forall1(x, body) => Formula::Forall1(x.clone(), s(body)),
            atom => atom.clone(),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", print::format(self))
    }
}

// --- substitution -----------------------------------------------------------

fn substitute_terms(terms: &[Term], var: &str, t: &Term) -> Vec<Term> {
    terms.iter().map(|a| a.substitute(var, t)).collect()
}

fn atom_mentions(formula: &Formula, var: &str) -> bool {
    formula
        .atom_groups()
        .map(|groups| {
            groups
                .iter()
                .any(|g| g.iter().any(|term| term.contains_var(var)))
        })
        .unwrap_or(false)
}

/// `formula` with `t` substituted for free occurrences of `var`.
///
/// Fails with `Capture` when a binder in scope of an occurrence binds a
/// variable of `t`, and with `AtomSubstitution` when a non-variable `t`
/// would land inside a dependency-family atom (use [`substitute_desugared`]
/// for that case).
pub fn substitute(formula: &Formula, var: &str, t: &Term) -> Result<Formula> {
    substitute_inner(formula, var, t, false)
}

/// Like [`substitute`], but dependency-family atoms mentioning `var` are
/// first rewritten through fresh existentially bound variables so the
/// substitution only touches ordinary equations.
pub fn substitute_desugared(formula: &Formula, var: &str, t: &Term) -> Result<Formula> {
    substitute_inner(formula, var, t, true)
}

fn substitute_inner(formula: &Formula, var: &str, t: &Term, desugar: bool) -> Result<Formula> {
    // No free occurrence: nothing to do (and no spurious capture errors).
    if !formula.free_vars().contains(var) {
        return Ok(formula.clone());
    }
    match formula {
        Formula::Rel(name, args) => Ok(Formula::Rel(
            name.clone(),
            substitute_terms(args, var, t),
        )),
        Formula::NegRel(name, args) => Ok(Formula::NegRel(
            name.clone(),
            substitute_terms(args, var, t),
        )),
        Formula::Eq(a, b) => Ok(Formula::Eq(a.substitute(var, t), b.substitute(var, t))),
        Formula::Neq(a, b) => Ok(Formula::Neq(a.substitute(var, t), b.substitute(var, t))),
        atom if atom.is_dependency_atom() => {
            if !atom_mentions(atom, var) {
                return Ok(atom.clone());
            }
            if t.is_var() {
                // plain renaming keeps the atom an atom
                return Ok(match atom {
                    Formula::Dep(xs, y) => Formula::Dep(
                        substitute_terms(xs, var, t),
                        y.substitute(var, t),
                    ),
                    Formula::Incl(xs, ys) => Formula::Incl(
                        substitute_terms(xs, var, t),
                        substitute_terms(ys, var, t),
                    ),
                    Formula::Indep(xs, ys, zs) => Formula::Indep(
                        substitute_terms(xs, var, t),
                        substitute_terms(ys, var, t),
                        substitute_terms(zs, var, t),
                    ),
                    Formula::Excl(xs, ys) => Formula::Excl(
                        substitute_terms(xs, var, t),
                        substitute_terms(ys, var, t),
                    ),
                    _ => unreachable!(),
                });
            }
            if !desugar {
                return Err(Error::AtomSubstitution { var: var.into() });
            }
            // Route the substitution through the desugared form; the atom's
            // argument slots become fresh bound variables and `var` survives
            // only in equations.
            substitute_inner(&desugar_term_atom(atom, true), var, t, desugar)
        }
        Formula::And(a, b) => Ok(Formula::and(
            substitute_inner(a, var, t, desugar)?,
            substitute_inner(b, var, t, desugar)?,
        )),
        Formula::TensorOr(a, b) => Ok(Formula::tensor(
            substitute_inner(a, var, t, desugar)?,
            substitute_inner(b, var, t, desugar)?,
        )),
        Formula::TensorOrStrict(a, b) => Ok(Formula::tensor_strict(
            substitute_inner(a, var, t, desugar)?,
            substitute_inner(b, var, t, desugar)?,
        )),
        Formula::IntOr(a, b) => Ok(Formula::int_or(
            substitute_inner(a, var, t, desugar)?,
            substitute_inner(b, var, t, desugar)?,
        )),
        Formula::IntImpl(a, b) => Ok(Formula::int_impl(
            substitute_inner(a, var, t, desugar)?,
            substitute_inner(b, var, t, desugar)?,
        )),
        Formula::WeakNeg(a) => Ok(Formula::weak_neg(substitute_inner(a, var, t, desugar)?)),
        Formula::ClassNeg(a) => Ok(Formula::class_neg(substitute_inner(a, var, t, desugar)?)),
        Formula::Exists(x, body)
        | Formula::ExistsStrict(x, body)
        | Formula::Exists1(x, body)
        | Formula::Forall(x, body)
        | Formula::Forall1(x, body) => {
            // free_vars check above rules out x == var
            debug_assert_ne!(x, var);
            if t.contains_var(x) {
                return Err(Error::Capture { var: x.clone() });
            }
            let new_body = substitute_inner(body, var, t, desugar)?;
            Ok(match formula {
                Formula::Exists(..) => Formula::exists(x.clone(), new_body),
                Formula::ExistsStrict(..) => Formula::exists_strict(x.clone(), new_body),
                Formula::Exists1(..) => Formula::exists1(x.clone(), new_body),
                Formula::Forall(..) => Formula::forall(x.clone(), new_body),
                Formula::Forall1(..) => Formula::forall1(x.clone(), new_body),
                _ => unreachable!(),
            })
        }
        _ => unreachable!("atom cases covered above"),
    }
}

// --- term-atom desugaring ---------------------------------------------------

/// Rewrite a dependency-family atom over arbitrary terms into the pure-
/// variable form: fresh variables `$u0, $u1, ...` are existentially bound,
/// the atom is restated over them, and each is pinned to its term by an
/// equation. Non-atoms, and all-variable atoms when `force` is false, are
/// returned unchanged.
pub fn desugar_term_atom(formula: &Formula, force: bool) -> Formula {
    let Some(groups) = formula.atom_groups() else {
        return formula.clone();
    };
    let flat: Vec<Term> = groups.iter().flat_map(|g| g.iter().cloned()).collect();
    if !force && flat.iter().all(Term::is_var) {
        return formula.clone();
    }

    // Fresh names: skip past any internal names already present in the args.
    let mut next = 0usize;
    for term in &flat {
        for v in term.vars() {
            if let Some(rest) = v.strip_prefix("$u") {
                if let Ok(k) = rest.parse::<usize>() {
                    next = next.max(k + 1);
                }
            }
        }
    }
    let names: Vec<String> = (0..flat.len()).map(|i| format!("$u{}", next + i)).collect();

    // Rebuild the atom with the groups' shape over the fresh variables.
    let mut fresh = names.iter().map(|n| Term::var(n.clone()));
    let rebuilt = match formula {
        Formula::Dep(xs, _) => {
            let new_xs: Vec<Term> = (0..xs.len()).map(|_| fresh.next().unwrap()).collect();
            Formula::Dep(new_xs, fresh.next().unwrap())
        }
        Formula::Incl(xs, ys) => {
            let new_xs: Vec<Term> = (0..xs.len()).map(|_| fresh.next().unwrap()).collect();
            let new_ys: Vec<Term> = (0..ys.len()).map(|_| fresh.next().unwrap()).collect();
            Formula::Incl(new_xs, new_ys)
        }
        Formula::Indep(xs, ys, zs) => {
            let new_xs: Vec<Term> = (0..xs.len()).map(|_| fresh.next().unwrap()).collect();
            let new_ys: Vec<Term> = (0..ys.len()).map(|_| fresh.next().unwrap()).collect();
            let new_zs: Vec<Term> = (0..zs.len()).map(|_| fresh.next().unwrap()).collect();
            Formula::Indep(new_xs, new_ys, new_zs)
        }
        Formula::Excl(xs, ys) => {
            let new_xs: Vec<Term> = (0..xs.len()).map(|_| fresh.next().unwrap()).collect();
            let new_ys: Vec<Term> = (0..ys.len()).map(|_| fresh.next().unwrap()).collect();
            Formula::Excl(new_xs, new_ys)
        }
        _ => unreachable!(),
    };

    let mut body = rebuilt;
    for (name, term) in names.iter().zip(&flat) {
        body = Formula::and(body, Formula::Eq(Term::var(name.clone()), term.clone()));
    }
    for name in names.iter().rev() {
        body = Formula::exists(name.clone(), body);
    }
    body
}

// --- fragments ----------------------------------------------------------------

/// Which atoms and connectives occur in a formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FragmentLabel {
    pub dep: bool,
    pub indep: bool,
    pub incl: bool,
    pub excl: bool,
    pub tensor: bool,
    pub tensor_strict: bool,
    pub exists: bool,
    pub exists_strict: bool,
    pub forall: bool,
    pub int_or: bool,
    pub int_impl: bool,
    pub weak_neg: bool,
    pub class_neg: bool,
    pub exists1: bool,
    pub forall1: bool,
}

impl FragmentLabel {
    fn merge(self, other: FragmentLabel) -> FragmentLabel {
        FragmentLabel {
            dep: self.dep || other.dep,
            indep: self.indep || other.indep,
            incl: self.incl || other.incl,
            excl: self.excl || other.excl,
            tensor: self.tensor || other.tensor,
            tensor_strict: self.tensor_strict || other.tensor_strict,
            exists: self.exists || other.exists,
            exists_strict: self.exists_strict || other.exists_strict,
            forall: self.forall || other.forall,
            int_or: self.int_or || other.int_or,
            int_impl: self.int_impl || other.int_impl,
            weak_neg: self.weak_neg || other.weak_neg,
            class_neg: self.class_neg || other.class_neg,
            exists1: self.exists1 || other.exists1,
            forall1: self.forall1 || other.forall1,
        }
    }

    pub fn has_dependency_atom(&self) -> bool {
        self.dep || self.indep || self.incl || self.excl
    }

    /// Literals plus `&`, the splitting disjunctions, the supplementing
    /// quantifiers, and `A`. Everything here is flat: the team satisfies the
    /// formula exactly when every singleton subteam does.
    pub fn is_flat_fragment(&self) -> bool {
        !self.has_dependency_atom()
            && !self.int_or
            && !self.int_impl
            && !self.weak_neg
            && !self.class_neg
            && !self.exists1
            && !self.forall1
    }

    /// The flat fragment extended with `dep` and `excl` atoms. Everything
    /// here defines a downward closed team property.
    pub fn is_downward_closed_fragment(&self) -> bool {
        !self.indep
            && !self.incl
            && !self.int_or
            && !self.int_impl
            && !self.weak_neg
            && !self.class_neg
            && !self.exists1
            && !self.forall1
    }

    /// Fragments where the team-level product commutes with satisfaction in
    /// both directions rather than only right to left. The splitting
    /// connectives and `->` are excluded; this is deliberately conservative.
    pub fn strong_los_eligible(&self) -> bool {
        !self.tensor
            && !self.tensor_strict
            && !self.exists
            && !self.exists_strict
            && !self.int_impl
    }
}

pub fn fragment_of(formula: &Formula) -> FragmentLabel {
    let mut label = FragmentLabel::default();
    match formula {
        Formula::Rel(..) | Formula::NegRel(..) | Formula::Eq(..) | Formula::Neq(..) => {}
        Formula::Dep(..) => label.dep = true,
        Formula::Incl(..) => label.incl = true,
        Formula::Indep(..) => label.indep = true,
        Formula::Excl(..) => label.excl = true,
        Formula::And(a, b) => label = fragment_of(a).merge(fragment_of(b)),
        Formula::TensorOr(a, b) => {
            label = fragment_of(a).merge(fragment_of(b));
            label.tensor = true;
        }
        Formula::TensorOrStrict(a, b) => {
            label = fragment_of(a).merge(fragment_of(b));
            label.tensor_strict = true;
        }
        Formula::IntOr(a, b) => {
            label = fragment_of(a).merge(fragment_of(b));
            label.int_or = true;
        }
        Formula::IntImpl(a, b) => {
            label = fragment_of(a).merge(fragment_of(b));
            label.int_impl = true;
        }
        Formula::WeakNeg(a) => {
            label = fragment_of(a);
            label.weak_neg = true;
        }
        Formula::ClassNeg(a) => {
            label = fragment_of(a);
            label.class_neg = true;
        }
        Formula::Exists(_, body) => {
            label = fragment_of(body);
            label.exists = true;
        }
        Formula::ExistsStrict(_, body) => {
            label = fragment_of(body);
            label.exists_strict = true;
        }
        Formula::Exists1(_, body) => {
            label = fragment_of(body);
            label.exists1 = true;
        }
        Formula::Forall(_, body) => {
            label = fragment_of(body);
            label.forall = true;
        }
        Formula::Forall1(_, body) => {
            label = fragment_of(body);
            label.forall1 = true;
        }
    }
    label
}

// --- signature inference ------------------------------------------------------

fn infer_from_term(
    term: &Term,
    functions: &mut Vec<(String, usize)>,
    relations: &[(String, usize)],
) -> Result<()> {
    if let Term::App(name, args) = term {
        if relations.iter().any(|(n, _)| n == name) {
            return Err(Error::DuplicateSymbol { name: name.clone() });
        }
        match functions.iter().find(|(n, _)| n == name) {
            Some((_, k)) if *k != args.len() => {
                return Err(Error::ArityMismatch {
                    symbol: name.clone(),
                    expected: *k,
                    got: args.len(),
                })
            }
            Some(_) => {}
            None => functions.push((name.clone(), args.len())),
        }
        for arg in args {
            infer_from_term(arg, functions, relations)?;
        }
    }
    Ok(())
}

fn infer_walk(
    formula: &Formula,
    relations: &mut Vec<(String, usize)>,
    functions: &mut Vec<(String, usize)>,
) -> Result<()> {
    match formula {
        Formula::Rel(name, args) | Formula::NegRel(name, args) => {
            if functions.iter().any(|(n, _)| n == name) {
                return Err(Error::DuplicateSymbol { name: name.clone() });
            }
            match relations.iter().find(|(n, _)| n == name) {
                Some((_, k)) if *k != args.len() => {
                    return Err(Error::ArityMismatch {
                        symbol: name.clone(),
                        expected: *k,
                        got: args.len(),
                    })
                }
                Some(_) => {}
                None => relations.push((name.clone(), args.len())),
            }
            for arg in args {
                infer_from_term(arg, functions, relations)?;
            }
        }
        Formula::Eq(a, b) | Formula::Neq(a, b) => {
            infer_from_term(a, functions, relations)?;
            infer_from_term(b, functions, relations)?;
        }
        atom if atom.is_dependency_atom() => {
            for group in atom.atom_groups().unwrap() {
                for term in group {
                    infer_from_term(term, functions, relations)?;
                }
            }
        }
        Formula::And(a, b)
        | Formula::TensorOr(a, b)
        | Formula::TensorOrStrict(a, b)
        | Formula::IntOr(a, b)
        | Formula::IntImpl(a, b) => {
            infer_walk(a, relations, functions)?;
            infer_walk(b, relations, functions)?;
        }
        Formula::WeakNeg(a) | Formula::ClassNeg(a) => infer_walk(a, relations, functions)?,
        Formula::Exists(_, body)
        | Formula::ExistsStrict(_, body)
        | Formula::Exists1(_, body)
        | Formula::Forall(_, body)
        | Formula::Forall1(_, body) => infer_walk(body, relations, functions)?,
        _ => unreachable!("atom cases covered above"),
    }
    Ok(())
}

/// The smallest signature interpreting every relation and function symbol
/// occurring in `formulas`, erroring on inconsistent arities or a name used
/// both ways.
pub fn infer_signature<'a>(
    formulas: impl IntoIterator<Item = &'a Formula>,
) -> Result<Signature> {
    let mut relations = Vec::new();
    let mut functions = Vec::new();
    for formula in formulas {
        infer_walk(formula, &mut relations, &mut functions)?;
    }
    Signature::new(relations, functions)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(name: &str) -> Term {
        Term::var(name)
    }

    #[test]
    fn free_vars_respect_binders() {
        // E y (x = y & dep(z; y))
        let f = Formula::exists(
            "y",
            Formula::and(
                Formula::Eq(v("x"), v("y")),
                Formula::Dep(vec![v("z")], v("y")),
            ),
        );
        let fv: Vec<String> = f.free_vars().into_iter().collect();
        assert_eq!(fv, ["x".to_string(), "z".to_string()]);
    }

    #[test]
    fn substitute_plain() {
        // P(x) v x = c()  with  x := f(y)
        let f = Formula::tensor(
            Formula::Rel("P".into(), vec![v("x")]),
            Formula::Eq(v("x"), Term::constant("c")),
        );
        let g = substitute(&f, "x", &Term::app("f", vec![v("y")])).unwrap();
        assert_eq!(
            g,
            Formula::tensor(
                Formula::Rel("P".into(), vec![Term::app("f", vec![v("y")])]),
                Formula::Eq(Term::app("f", vec![v("y")]), Term::constant("c")),
            )
        );
    }

    #[test]
    fn substitute_shadowed_and_missing() {
        let f = Formula::exists("x", Formula::Eq(v("x"), v("y")));
        // x is bound: nothing happens
        assert_eq!(substitute(&f, "x", &v("z")).unwrap(), f);
        // no occurrence of w, even though t mentions the binder x
        assert_eq!(
            substitute(&f, "w", &Term::app("f", vec![v("x")])).unwrap(),
            f
        );
    }

    #[test]
    fn substitute_capture_detected() {
        let f = Formula::exists("y", Formula::Eq(v("x"), v("y")));
        assert_eq!(
            substitute(&f, "x", &Term::app("f", vec![v("y")])),
            Err(Error::Capture { var: "y".into() })
        );
        // variable-for-variable capture too
        assert_eq!(
            substitute(&f, "x", &v("y")),
            Err(Error::Capture { var: "y".into() })
        );
    }

    #[test]
    fn substitute_atom_strictness() {
        let f = Formula::Dep(vec![v("x")], v("y"));
        // renaming is fine
        assert_eq!(
            substitute(&f, "x", &v("z")).unwrap(),
            Formula::Dep(vec![v("z")], v("y"))
        );
        // a proper term is not
        assert_eq!(
            substitute(&f, "x", &Term::constant("c")),
            Err(Error::AtomSubstitution { var: "x".into() })
        );
    }

    #[test]
    fn substitute_desugared_routes_through_equations() {
        let f = Formula::Incl(vec![v("y")], vec![v("x")]);
        let t = Term::app("f", vec![v("y")]);
        let g = substitute_desugared(&f, "x", &t).unwrap();
        // E $u0 E $u1 (inc($u0; $u1) & $u0 = y & $u1 = f(y))
        let expected = Formula::exists(
            "$u0",
            Formula::exists(
                "$u1",
                Formula::and(
                    Formula::and(
                        Formula::Incl(vec![v("$u0")], vec![v("$u1")]),
                        Formula::Eq(v("$u0"), v("y")),
                    ),
                    Formula::Eq(v("$u1"), t.clone()),
                ),
            ),
        );
        assert_eq!(g, expected);
    }

    #[test]
    fn desugar_no_op_and_force() {
        let f = Formula::Dep(vec![v("x")], v("y"));
        assert_eq!(desugar_term_atom(&f, false), f);
        let forced = desugar_term_atom(&f, true);
        assert_ne!(forced, f);
        assert!(matches!(forced, Formula::Exists(..)));
        // free variables are preserved by the rewrite
        assert_eq!(forced.free_vars(), f.free_vars());
    }

    #[test]
    fn desugar_constancy_shape() {
        // dep(; f(x)) -> E $u0 (dep(; $u0) & $u0 = f(x))
        let f = Formula::Dep(vec![], Term::app("f", vec![v("x")]));
        let d = desugar_term_atom(&f, false);
        let expected = Formula::exists(
            "$u0",
            Formula::and(
                Formula::Dep(vec![], v("$u0")),
                Formula::Eq(v("$u0"), Term::app("f", vec![v("x")])),
            ),
        );
        assert_eq!(d, expected);
    }

    #[test]
    fn desugar_avoids_existing_internal_names() {
        let f = Formula::Incl(vec![v("$u3")], vec![v("x")]);
        let d = desugar_term_atom(&f, true);
        // fresh names start above $u3
        assert!(d.free_vars().contains("$u3"));
        let printed = format!("{d}");
        assert!(printed.contains("$u4"));
        assert!(!printed.contains("$u0"));
    }

    #[test]
    fn fragment_classification() {
        let flat = parse::parse_internal("E x (P(x) v x != y) & A z Q(z, x)").unwrap();
        let label = fragment_of(&flat);
        assert!(label.is_flat_fragment());
        assert!(label.is_downward_closed_fragment());

        let dc = parse::parse_internal("dep(x; y) v excl(x; z)").unwrap();
        let label = fragment_of(&dc);
        assert!(!label.is_flat_fragment());
        assert!(label.is_downward_closed_fragment());

        let neither = parse::parse_internal("inc(x; y) & dep(x; y)").unwrap();
        let label = fragment_of(&neither);
        assert!(!label.is_flat_fragment());
        assert!(!label.is_downward_closed_fragment());

        assert!(!fragment_of(&parse::parse_internal("E1 x P(x)").unwrap())
            .is_flat_fragment());
        assert!(fragment_of(&parse::parse_internal("dep(x; y)").unwrap())
            .strong_los_eligible());
        assert!(!fragment_of(&parse::parse_internal("P(x) v Q(x)").unwrap())
            .strong_los_eligible());
    }

    #[test]
    fn to_strict_rewrites_split_forms() {
        let f = parse::parse_internal("E x (P(x) v Q(x)) & ~ E y P(y)").unwrap();
        let s = f.to_strict();
        assert_eq!(
            s,
            parse::parse_internal("Es x (P(x) vs Q(x)) & ~ Es y P(y)").unwrap()
        );
    }

    #[test]
    fn signature_inference() {
        let f = parse::parse_internal("P(x, f(y)) & g(c()) = y v R(x)").unwrap();
        let sig = infer_signature([&f]).unwrap();
        assert_eq!(sig.relation_arity("P"), Some(2));
        assert_eq!(sig.relation_arity("R"), Some(1));
        assert_eq!(sig.function_arity("f"), Some(1));
        assert_eq!(sig.function_arity("g"), Some(1));
        assert_eq!(sig.function_arity("c"), Some(0));

        // inconsistent arity
        let g = parse::parse_internal("P(x) & P(x, y)").unwrap();
        assert!(infer_signature([&g]).is_err());
        // relation and function with one name
        let h = parse::parse_internal("P(x) & P(x) = y").unwrap();
        assert!(infer_signature([&h]).is_err());
    }
}
