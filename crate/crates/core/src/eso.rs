//! Translation of team formulas into existential second-order sentences
//! over the base signature plus a team predicate, and the machinery to
//! check it: a Tarski evaluator with relation variables, a second-order
//! solver by relation enumeration, and the direct-vs-translated crosscheck.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::enumerate::{tuple_count, tuples};
use crate::error::{Error, Result};
use crate::eval::{EvalOptions, Evaluator};
use crate::formula::{fragment_of, Formula, Term};
use crate::model::Structure;
use crate::team::{Assignment, Team};

/// First-order formulas with full negation, over the base signature plus
/// named relation variables. Relation names starting with `$` are reserved
/// for generated relation variables, which keeps them disjoint from
/// anything a parsed formula can mention.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FO {
    True,
    False,
    Eq(Term, Term),
    Rel(String, Vec<Term>),
    Not(Box<FO>),
    And(Box<FO>, Box<FO>),
    Or(Box<FO>, Box<FO>),
    Implies(Box<FO>, Box<FO>),
    Iff(Box<FO>, Box<FO>),
    Exists(String, Box<FO>),
    Forall(String, Box<FO>),
}

impl FO {
    pub fn not(a: FO) -> FO {
        FO::Not(Box::new(a))
    }
    pub fn and(a: FO, b: FO) -> FO {
        FO::And(Box::new(a), Box::new(b))
    }
    pub fn or(a: FO, b: FO) -> FO {
        FO::Or(Box::new(a), Box::new(b))
    }
    pub fn implies(a: FO, b: FO) -> FO {
        FO::Implies(Box::new(a), Box::new(b))
    }
    pub fn iff(a: FO, b: FO) -> FO {
        FO::Iff(Box::new(a), Box::new(b))
    }
    pub fn exists(var: impl Into<String>, body: FO) -> FO {
        FO::Exists(var.into(), Box::new(body))
    }
    pub fn forall(var: impl Into<String>, body: FO) -> FO {
        FO::Forall(var.into(), Box::new(body))
    }

    /// Conjunction of a list, `True` when empty.
    pub fn all(parts: Vec<FO>) -> FO {
        let mut iter = parts.into_iter();
        match iter.next() {
            None => FO::True,
            Some(first) => iter.fold(first, FO::and),
        }
    }

    fn exists_chain(vars: &[String], body: FO) -> FO {
        vars.iter()
            .rev()
            .fold(body, |acc, v| FO::exists(v.clone(), acc))
    }

    fn forall_chain(vars: &[String], body: FO) -> FO {
        vars.iter()
            .rev()
            .fold(body, |acc, v| FO::forall(v.clone(), acc))
    }

    fn collect_relations(&self, out: &mut BTreeSet<String>) {
        match self {
            FO::True | FO::False | FO::Eq(..) => {}
            FO::Rel(name, _) => {
                out.insert(name.clone());
            }
            FO::Not(a) | FO::Exists(_, a) | FO::Forall(_, a) => a.collect_relations(out),
            FO::And(a, b) | FO::Or(a, b) | FO::Implies(a, b) | FO::Iff(a, b) => {
                a.collect_relations(out);
                b.collect_relations(out);
            }
        }
    }
}

impl fmt::Display for FO {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FO::True => write!(f, "true"),
            FO::False => write!(f, "false"),
            FO::Eq(a, b) => write!(f, "{a} = {b}"),
            FO::Rel(name, args) => {
                write!(f, "{name}(")?;
                for (i, t) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{t}")?;
                }
                write!(f, ")")
            }
            FO::Not(a) => write!(f, "!({a})"),
            FO::And(a, b) => write!(f, "({a} & {b})"),
            FO::Or(a, b) => write!(f, "({a} | {b})"),
            FO::Implies(a, b) => write!(f, "({a} -> {b})"),
            FO::Iff(a, b) => write!(f, "({a} <-> {b})"),
            FO::Exists(v, a) => write!(f, "E {v} ({a})"),
            FO::Forall(v, a) => write!(f, "A {v} ({a})"),
        }
    }
}

/// Interpretations for relation variables.
pub type RelationEnv = BTreeMap<String, (usize, BTreeSet<Vec<usize>>)>;

/// An existential second-order sentence: a quantifier prefix of relation
/// variables over a conjunctive matrix. The team predicate stays free.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ESOSentence {
    pub team_rel: String,
    pub team_arity: usize,
    pub prefix: Vec<(String, usize)>,
    pub matrix: Vec<FO>,
}

impl fmt::Display for ESOSentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, arity) in &self.prefix {
            write!(f, "E {name}:{arity} ")?;
        }
        for (i, clause) in self.matrix.iter().enumerate() {
            if i > 0 {
                write!(f, " & ")?;
            }
            write!(f, "({clause})")?;
        }
        if self.matrix.is_empty() {
            write!(f, "true")?;
        }
        Ok(())
    }
}

/// Search limits for the relation-enumeration solver.
#[derive(Debug, Clone, Copy)]
pub struct EsoBudget {
    /// Largest n^arity tuple space a quantified relation may range over
    /// (each such space yields 2^cells candidate tables).
    pub max_relation_cells: u64,
    /// Most candidate tables tried across the whole search.
    pub max_tables: u64,
}

impl Default for EsoBudget {
    fn default() -> Self {
        EsoBudget {
            max_relation_cells: 16,
            max_tables: 1 << 20,
        }
    }
}

fn primed(vars: &[String], marks: usize) -> Vec<String> {
    vars.iter()
        .map(|v| format!("{v}{}", "'".repeat(marks)))
        .collect()
}

fn rename_term(t: &Term, from: &[String], to: &[String]) -> Term {
    let mut out = t.clone();
    for (f, target) in from.iter().zip(to) {
        out = out.substitute(f, &Term::var(target.clone()));
    }
    out
}

fn rel_of(name: &str, vars: &[String]) -> FO {
    FO::Rel(
        name.to_string(),
        vars.iter().map(|v| Term::var(v.clone())).collect(),
    )
}

fn eq_all(left: &[Term], right: &[Term]) -> FO {
    FO::all(
        left.iter()
            .zip(right)
            .map(|(a, b)| FO::Eq(a.clone(), b.clone()))
            .collect(),
    )
}

struct Translator {
    next_rel: usize,
    prefix: Vec<(String, usize)>,
    matrix: Vec<FO>,
}

impl Translator {
    fn fresh_rel(&mut self, arity: usize) -> String {
        let name = format!("$R{}", self.next_rel);
        self.next_rel += 1;
        self.prefix.push((name.clone(), arity));
        name
    }

    /// Emit clauses forcing: rel holds the rows of a team satisfying
    /// `formula`, where the team's columns are `vars` in order.
    fn emit(&mut self, formula: &Formula, rel: &str, vars: &[String]) -> Result<()> {
        match formula {
            Formula::Rel(name, args) => {
                self.guarded(rel, vars, FO::Rel(name.clone(), args.clone()));
                Ok(())
            }
            Formula::NegRel(name, args) => {
                self.guarded(rel, vars, FO::not(FO::Rel(name.clone(), args.clone())));
                Ok(())
            }
            Formula::Eq(a, b) => {
                self.guarded(rel, vars, FO::Eq(a.clone(), b.clone()));
                Ok(())
            }
            Formula::Neq(a, b) => {
                self.guarded(rel, vars, FO::not(FO::Eq(a.clone(), b.clone())));
                Ok(())
            }
            Formula::Dep(xs, y) => {
                let vars2 = primed(vars, 1);
                let xs2: Vec<Term> = xs.iter().map(|t| rename_term(t, vars, &vars2)).collect();
                let y2 = rename_term(y, vars, &vars2);
                let premise = FO::and(
                    FO::and(rel_of(rel, vars), rel_of(rel, &vars2)),
                    eq_all(xs, &xs2),
                );
                let clause = FO::forall_chain(
                    vars,
                    FO::forall_chain(&vars2, FO::implies(premise, FO::Eq(y.clone(), y2))),
                );
                self.matrix.push(clause);
                Ok(())
            }
            Formula::Incl(xs, ys) => {
                if xs.len() != ys.len() {
                    return Err(Error::TupleLengthMismatch);
                }
                let vars2 = primed(vars, 1);
                let ys2: Vec<Term> = ys.iter().map(|t| rename_term(t, vars, &vars2)).collect();
                let witness =
                    FO::exists_chain(&vars2, FO::and(rel_of(rel, &vars2), eq_all(xs, &ys2)));
                let clause =
                    FO::forall_chain(vars, FO::implies(rel_of(rel, vars), witness));
                self.matrix.push(clause);
                Ok(())
            }
            Formula::Indep(xs, ys, zs) => {
                let vars2 = primed(vars, 1);
                let vars3 = primed(vars, 2);
                let re = |ts: &[Term], to: &Vec<String>| -> Vec<Term> {
                    ts.iter().map(|t| rename_term(t, vars, to)).collect()
                };
                let zs2 = re(zs, &vars2);
                let ys2 = re(ys, &vars2);
                let xs3 = re(xs, &vars3);
                let ys3 = re(ys, &vars3);
                let zs3 = re(zs, &vars3);
                let premise = FO::and(
                    FO::and(rel_of(rel, vars), rel_of(rel, &vars2)),
                    eq_all(zs, &zs2),
                );
                let combined = FO::and(
                    rel_of(rel, &vars3),
                    FO::and(
                        FO::and(eq_all(&xs3, xs), eq_all(&zs3, zs)),
                        eq_all(&ys3, &ys2),
                    ),
                );
                let clause = FO::forall_chain(
                    vars,
                    FO::forall_chain(
                        &vars2,
                        FO::implies(premise, FO::exists_chain(&vars3, combined)),
                    ),
                );
                self.matrix.push(clause);
                Ok(())
            }
            Formula::Excl(xs, ys) => {
                if xs.len() != ys.len() {
                    return Err(Error::TupleLengthMismatch);
                }
                let vars2 = primed(vars, 1);
                let ys2: Vec<Term> = ys.iter().map(|t| rename_term(t, vars, &vars2)).collect();
                let premise = FO::and(rel_of(rel, vars), rel_of(rel, &vars2));
                let clause = FO::forall_chain(
                    vars,
                    FO::forall_chain(
                        &vars2,
                        FO::implies(premise, FO::not(eq_all(xs, &ys2))),
                    ),
                );
                self.matrix.push(clause);
                Ok(())
            }
            Formula::And(a, b) => {
                self.emit(a, rel, vars)?;
                self.emit(b, rel, vars)
            }
            Formula::TensorOr(a, b) => {
                let left = self.fresh_rel(vars.len());
                let right = self.fresh_rel(vars.len());
                self.matrix.push(FO::forall_chain(
                    vars,
                    FO::implies(
                        rel_of(rel, vars),
                        FO::or(rel_of(&left, vars), rel_of(&right, vars)),
                    ),
                ));
                self.matrix.push(FO::forall_chain(
                    vars,
                    FO::implies(rel_of(&left, vars), rel_of(rel, vars)),
                ));
                self.matrix.push(FO::forall_chain(
                    vars,
                    FO::implies(rel_of(&right, vars), rel_of(rel, vars)),
                ));
                self.emit(a, &left, vars)?;
                self.emit(b, &right, vars)
            }
            Formula::Exists(x, body) => {
                if vars.contains(x) {
                    // the quantified column is replaced in place
                    let sup = self.fresh_rel(vars.len());
                    let fresh_x = format!("{x}'");
                    let replaced: Vec<String> = vars
                        .iter()
                        .map(|v| if v == x { fresh_x.clone() } else { v.clone() })
                        .collect();
                    self.matrix.push(FO::forall_chain(
                        vars,
                        FO::implies(
                            rel_of(rel, vars),
                            FO::exists(fresh_x.clone(), rel_of(&sup, &replaced)),
                        ),
                    ));
                    self.matrix.push(FO::forall_chain(
                        vars,
                        FO::implies(
                            rel_of(&sup, vars),
                            FO::exists(fresh_x.clone(), rel_of(rel, &replaced)),
                        ),
                    ));
                    self.emit(body, &sup, vars)
                } else {
                    let sup = self.fresh_rel(vars.len() + 1);
                    let mut extended = vars.to_vec();
                    extended.push(x.clone());
                    self.matrix.push(FO::forall_chain(
                        vars,
                        FO::implies(
                            rel_of(rel, vars),
                            FO::exists(x.clone(), rel_of(&sup, &extended)),
                        ),
                    ));
                    self.matrix.push(FO::forall_chain(
                        &extended,
                        FO::implies(rel_of(&sup, &extended), rel_of(rel, vars)),
                    ));
                    self.emit(body, &sup, &extended)
                }
            }
            Formula::Forall(x, body) => {
                if vars.contains(x) {
                    let sup = self.fresh_rel(vars.len());
                    let fresh_x = format!("{x}'");
                    let replaced: Vec<String> = vars
                        .iter()
                        .map(|v| if v == x { fresh_x.clone() } else { v.clone() })
                        .collect();
                    self.matrix.push(FO::forall_chain(
                        vars,
                        FO::iff(
                            rel_of(&sup, vars),
                            FO::exists(fresh_x.clone(), rel_of(rel, &replaced)),
                        ),
                    ));
                    self.emit(body, &sup, vars)
                } else {
                    let sup = self.fresh_rel(vars.len() + 1);
                    let mut extended = vars.to_vec();
                    extended.push(x.clone());
                    self.matrix.push(FO::forall_chain(
                        &extended,
                        FO::iff(rel_of(&sup, &extended), rel_of(rel, vars)),
                    ));
                    self.emit(body, &sup, &extended)
                }
            }
            other => Err(Error::FragmentViolation {
                construct: other.construct_name().into(),
            }),
        }
    }

    fn guarded(&mut self, rel: &str, vars: &[String], body: FO) {
        self.matrix
            .push(FO::forall_chain(vars, FO::implies(rel_of(rel, vars), body)));
    }
}

/// Translate a lax team formula into an existential second-order sentence
/// with a free team predicate over the given columns. Strict operators and
/// the team-level connectives are outside this translation's fragment.
pub fn translate(formula: &Formula, team_vars: &[String]) -> Result<ESOSentence> {
    let label = fragment_of(formula);
    if label.tensor_strict || label.exists_strict {
        return Err(Error::FragmentViolation {
            construct: if label.tensor_strict { "vs" } else { "Es" }.into(),
        });
    }
    for name in formula.free_vars() {
        if !team_vars.contains(&name) {
            return Err(Error::UnboundVariable { name });
        }
    }
    {
        let mut seen = BTreeSet::new();
        for v in team_vars {
            if !seen.insert(v) {
                return Err(Error::DuplicateVariable { name: v.clone() });
            }
        }
    }
    let mut tr = Translator {
        next_rel: 1,
        prefix: Vec::new(),
        matrix: Vec::new(),
    };
    let team_rel = "$R0".to_string();
    tr.emit(formula, &team_rel, team_vars)?;
    Ok(ESOSentence {
        team_rel,
        team_arity: team_vars.len(),
        prefix: tr.prefix,
        matrix: tr.matrix,
    })
}

fn eval_fo_at(
    structure: &Structure,
    env: &RelationEnv,
    assignment: &Assignment,
    fo: &FO,
) -> Result<bool> {
    match fo {
        FO::True => Ok(true),
        FO::False => Ok(false),
        FO::Eq(a, b) => Ok(structure.eval_term(assignment, a)?
            == structure.eval_term(assignment, b)?),
        FO::Rel(name, args) => {
            let tuple: Vec<usize> = args
                .iter()
                .map(|t| structure.eval_term(assignment, t))
                .collect::<Result<_>>()?;
            match env.get(name) {
                Some((arity, table)) => {
                    if tuple.len() != *arity {
                        return Err(Error::ArityMismatch {
                            symbol: name.clone(),
                            expected: *arity,
                            got: tuple.len(),
                        });
                    }
                    Ok(table.contains(&tuple))
                }
                None => {
                    if name.starts_with('$') {
                        return Err(Error::UnknownSymbol { name: name.clone() });
                    }
                    structure.holds(name, &tuple)
                }
            }
        }
        FO::Not(a) => Ok(!eval_fo_at(structure, env, assignment, a)?),
        FO::And(a, b) => Ok(eval_fo_at(structure, env, assignment, a)?
            && eval_fo_at(structure, env, assignment, b)?),
        FO::Or(a, b) => Ok(eval_fo_at(structure, env, assignment, a)?
            || eval_fo_at(structure, env, assignment, b)?),
        FO::Implies(a, b) => Ok(!eval_fo_at(structure, env, assignment, a)?
            || eval_fo_at(structure, env, assignment, b)?),
        FO::Iff(a, b) => Ok(eval_fo_at(structure, env, assignment, a)?
            == eval_fo_at(structure, env, assignment, b)?),
        FO::Exists(x, body) => {
            for v in 0..structure.domain_size() {
                if eval_fo_at(structure, env, &assignment.bind(x, v), body)? {
                    return Ok(true);
                }
            }
            Ok(false)
        }
        FO::Forall(x, body) => {
            for v in 0..structure.domain_size() {
                if !eval_fo_at(structure, env, &assignment.bind(x, v), body)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
    }
}

/// Tarski evaluation of a sentence; relation variables resolve through
/// `env`, everything else through the structure.
pub fn eval_fo(structure: &Structure, env: &RelationEnv, fo: &FO) -> Result<bool> {
    eval_fo_at(structure, env, &Assignment::empty(), fo)
}

/// Decide an existential second-order sentence by depth-first enumeration
/// of tables for the prefix, with the team predicate fixed to `team_table`.
/// Matrix clauses are checked as soon as every relation they mention is
/// bound, pruning whole table subtrees.
pub fn eval_eso(
    structure: &Structure,
    sentence: &ESOSentence,
    team_table: &BTreeSet<Vec<usize>>,
    budget: EsoBudget,
) -> Result<bool> {
    let n = structure.domain_size();
    for row in team_table {
        if row.len() != sentence.team_arity {
            return Err(Error::ShapeMismatch {
                detail: format!(
                    "team predicate row of width {} for arity {}",
                    row.len(),
                    sentence.team_arity
                ),
            });
        }
        for &v in row {
            if v >= n {
                return Err(Error::ValueOutOfRange {
                    value: v,
                    domain: n,
                    place: Some("team predicate".into()),
                });
            }
        }
    }

    // schedule each clause at the latest prefix position it mentions
    let position: BTreeMap<&str, usize> = sentence
        .prefix
        .iter()
        .enumerate()
        .map(|(i, (name, _))| (name.as_str(), i))
        .collect();
    let mut scheduled: Vec<Vec<&FO>> = vec![Vec::new(); sentence.prefix.len() + 1];
    for clause in &sentence.matrix {
        let mut names = BTreeSet::new();
        clause.collect_relations(&mut names);
        let depth = names
            .iter()
            .filter_map(|name| position.get(name.as_str()).map(|p| p + 1))
            .max()
            .unwrap_or(0);
        scheduled[depth].push(clause);
    }

    let mut env: RelationEnv = BTreeMap::new();
    env.insert(
        sentence.team_rel.clone(),
        (sentence.team_arity, team_table.clone()),
    );

    for clause in &scheduled[0] {
        if !eval_fo(structure, &env, clause)? {
            return Ok(false);
        }
    }

    let spaces: Vec<Vec<Vec<usize>>> = sentence
        .prefix
        .iter()
        .map(|(name, arity)| {
            let cells = tuple_count(n, *arity).unwrap_or(u64::MAX);
            if cells > budget.max_relation_cells {
                return Err(Error::BudgetExceeded {
                    what: format!("tuple space of {name}"),
                    limit: budget.max_relation_cells,
                    actual: cells,
                });
            }
            Ok(tuples(n, *arity).collect())
        })
        .collect::<Result<_>>()?;

    let mut tried = 0u64;
    dfs(structure, sentence, &scheduled, &spaces, &mut env, 0, &mut tried, budget.max_tables)
}

#[allow(clippy::too_many_arguments)]
fn dfs(
    structure: &Structure,
    sentence: &ESOSentence,
    scheduled: &[Vec<&FO>],
    spaces: &[Vec<Vec<usize>>],
    env: &mut RelationEnv,
    depth: usize,
    tried: &mut u64,
    max_tables: u64,
) -> Result<bool> {
    if depth == sentence.prefix.len() {
        return Ok(true);
    }
    let (name, arity) = &sentence.prefix[depth];
    let space = &spaces[depth];
    'tables: for mask in 0..(1u64 << space.len()) {
        *tried += 1;
        if *tried > max_tables {
            return Err(Error::BudgetExceeded {
                what: "candidate tables".into(),
                limit: max_tables,
                actual: *tried,
            });
        }
        let table: BTreeSet<Vec<usize>> = space
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, t)| t.clone())
            .collect();
        env.insert(name.clone(), (*arity, table));
        for clause in &scheduled[depth + 1] {
            if !eval_fo(structure, env, clause)? {
                continue 'tables;
            }
        }
        if dfs(
            structure, sentence, scheduled, spaces, env, depth + 1, tried, max_tables,
        )? {
            return Ok(true);
        }
    }
    env.remove(name);
    Ok(false)
}

/// Both routes to one verdict: the team evaluator directly, and the
/// translated sentence through the second-order solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CrosscheckReport {
    pub direct: bool,
    pub via_eso: bool,
}

impl CrosscheckReport {
    pub fn agrees(&self) -> bool {
        self.direct == self.via_eso
    }
}

/// Evaluate the formula on the team directly and through its translation,
/// with the team's rows as the team predicate.
pub fn crosscheck(
    structure: &Structure,
    team: &Team,
    formula: &Formula,
    options: EvalOptions,
    budget: EsoBudget,
) -> Result<CrosscheckReport> {
    let sentence = translate(formula, team.vars())?;
    let direct = Evaluator::new(structure, options).eval(team, formula)?;
    let via_eso = eval_eso(structure, &sentence, team.rows(), budget)?;
    Ok(CrosscheckReport { direct, via_eso })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumerate::masked_subset;
    use crate::formula::parse::parse;
    use crate::model::Signature;

    fn pure(n: usize) -> Structure {
        Structure::pure(n).unwrap()
    }

    fn chain(n: usize) -> Structure {
        let sig = Signature::new(vec![("lt".into(), 2)], vec![]).unwrap();
        let table: BTreeSet<Vec<usize>> = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| i < j).map(move |j| vec![i, j]))
            .collect();
        Structure::new(
            sig,
            n,
            [("lt".to_string(), table)].into_iter().collect(),
            BTreeMap::new(),
        )
        .unwrap()
    }

    fn vars(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    fn env_with(name: &str, arity: usize, rows: &[Vec<usize>]) -> RelationEnv {
        [(name.to_string(), (arity, rows.iter().cloned().collect()))]
            .into_iter()
            .collect()
    }

    #[test]
    fn fo_evaluation() {
        let m = pure(2);
        let f = FO::exists("x", FO::Rel("S".into(), vec![Term::var("x")]));
        assert!(!eval_fo(&m, &env_with("S", 1, &[]), &f).unwrap());
        assert!(eval_fo(&m, &env_with("S", 1, &[vec![0]]), &f).unwrap());

        let c3 = chain(3);
        let no_top = FO::forall(
            "x",
            FO::exists(
                "y",
                FO::Rel("lt".into(), vec![Term::var("x"), Term::var("y")]),
            ),
        );
        assert!(!eval_fo(&c3, &RelationEnv::new(), &no_top).unwrap());

        // unbound relation variables are an error, missing base relations too
        let bad = FO::Rel("$R9".into(), vec![]);
        assert!(eval_fo(&m, &RelationEnv::new(), &FO::exists("x", bad.clone())).is_err());
    }

    #[test]
    fn eso_empty_prefix_is_fo() {
        let m = pure(2);
        let sentence = ESOSentence {
            team_rel: "$R0".into(),
            team_arity: 1,
            prefix: vec![],
            matrix: vec![FO::exists(
                "x",
                FO::Rel("$R0".into(), vec![Term::var("x")]),
            )],
        };
        let budget = EsoBudget::default();
        assert!(!eval_eso(&m, &sentence, &BTreeSet::new(), budget).unwrap());
        assert!(eval_eso(&m, &sentence, &[vec![1]].into_iter().collect(), budget).unwrap());
    }

    #[test]
    fn eso_complement_witness() {
        let m = pure(3);
        let sentence = ESOSentence {
            team_rel: "$R0".into(),
            team_arity: 1,
            prefix: vec![("$R1".into(), 1)],
            matrix: vec![FO::forall(
                "x",
                FO::iff(
                    FO::Rel("$R1".into(), vec![Term::var("x")]),
                    FO::not(FO::Rel("$R0".into(), vec![Term::var("x")])),
                ),
            )],
        };
        for table in [vec![], vec![vec![0]], vec![vec![0], vec![2]]] {
            assert!(eval_eso(
                &m,
                &sentence,
                &table.into_iter().collect(),
                EsoBudget::default()
            )
            .unwrap());
        }
    }

    #[test]
    fn translation_prefix_shape() {
        let f = parse("(E z (x = z)) v dep(x; y)").unwrap();
        let s = translate(&f, &vars(&["x", "y"])).unwrap();
        // one disjunction introduces two binary predicates, the quantifier
        // one ternary
        assert_eq!(
            s.prefix
                .iter()
                .map(|(_, arity)| *arity)
                .collect::<Vec<_>>(),
            vec![2, 2, 3]
        );
        assert_eq!(s.team_arity, 2);

        assert!(matches!(
            translate(&parse("x = y vs x != y").unwrap(), &vars(&["x", "y"])),
            Err(Error::FragmentViolation { .. })
        ));
        assert!(matches!(
            translate(&parse("~ dep(; x)").unwrap(), &vars(&["x"])),
            Err(Error::FragmentViolation { .. })
        ));
    }

    #[test]
    fn crosscheck_atoms_exhaustive() {
        let m = pure(2);
        let formulas = [
            "dep(x; y)",
            "dep(; x)",
            "inc(x; y)",
            "inc(x, y; y, x)",
            "excl(x; y)",
            "indep(x; y)",
            "x = y",
            "x != y v dep(x; y)",
        ];
        let space: Vec<Vec<usize>> = tuples(2, 2).collect();
        let opts = EvalOptions::default();
        let budget = EsoBudget::default();
        for text in formulas {
            let f = parse(text).unwrap();
            for mask in 0..(1u64 << 4) {
                let team = Team::new(vars(&["x", "y"]), masked_subset(&space, mask)).unwrap();
                let report = crosscheck(&m, &team, &f, opts, budget).unwrap();
                assert!(
                    report.agrees(),
                    "{text} disagrees at team {team}: direct {} eso {}",
                    report.direct,
                    report.via_eso
                );
            }
        }
    }

    #[test]
    fn crosscheck_quantifiers() {
        let m = pure(2);
        let formulas = [
            "E z dep(z; x)",
            "A z inc(z; x)",
            "E x (x = y)",
            "A x dep(; x) v A x dep(; x)",
        ];
        let space: Vec<Vec<usize>> = tuples(2, 2).collect();
        let opts = EvalOptions::default();
        let budget = EsoBudget::default();
        for text in formulas {
            let f = parse(text).unwrap();
            for mask in 0..(1u64 << 4) {
                let team = Team::new(vars(&["x", "y"]), masked_subset(&space, mask)).unwrap();
                let report = crosscheck(&m, &team, &f, opts, budget).unwrap();
                assert!(report.agrees(), "{text} disagrees at team {team}");
            }
        }
    }

    #[test]
    fn crosscheck_on_base_relations() {
        let m = chain(3);
        let opts = EvalOptions::default();
        let budget = EsoBudget::default();
        let f = parse("lt(x, y) v dep(x; y)").unwrap();
        let space: Vec<Vec<usize>> = tuples(3, 2).collect();
        for mask in [0u64, 1, 9, 73, 257, 511] {
            let team = Team::new(vars(&["x", "y"]), masked_subset(&space, mask)).unwrap();
            let report = crosscheck(&m, &team, &f, opts, budget).unwrap();
            assert!(report.agrees(), "disagrees at team {team}");
        }
    }

    #[test]
    fn eso_budget_trips() {
        let m = pure(3);
        // a quantifier over a 2-column team forces a ternary predicate:
        // 27 cells over domain 3
        let f = parse("E z dep(z; x)").unwrap();
        let team = Team::full(vars(&["x", "y"]), 3).unwrap();
        let err = crosscheck(&m, &team, &f, EvalOptions::default(), EsoBudget::default())
            .unwrap_err();
        assert!(err.is_budget());
    }

    #[test]
    fn sentence_display_is_stable() {
        let f = parse("dep(x; y)").unwrap();
        let s = translate(&f, &vars(&["x", "y"])).unwrap();
        let printed = s.to_string();
        assert!(printed.contains("$R0"));
        assert!(printed.contains("->"));
    }
}
