//! Fixture instances and seeded formula generators for the suite runners.
//!
//! Everything here is deterministic given a seed. Generated formulas pass
//! through a cost estimate that mirrors the evaluator's search tiers, so a
//! corpus never contains a formula whose evaluation would blow the time
//! budget at the scales the suites run at.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::compactness::CoherenceSystem;
use crate::enumerate::tuples;
use crate::formula::{fragment_of, Formula, Term};
use crate::model::{Signature, Structure};
use crate::team::Team;

/// The two-formula set of the walkthrough example: every element's value
/// occurs as an x-value, and the domain has two distinct elements.
pub fn running_example_gamma() -> Vec<Formula> {
    vec![
        Formula::forall("y", Formula::Incl(vec![Term::var("y")], vec![Term::var("x")])),
        Formula::exists(
            "y",
            Formula::exists("z", Formula::Neq(Term::var("y"), Term::var("z"))),
        ),
    ]
}

/// The team over {x} that satisfies the walkthrough set on a two-element
/// domain: both elements as x-values.
pub fn running_example_team() -> Team {
    Team::full(vec!["x".into()], 2).unwrap()
}

pub fn running_example_structure() -> Structure {
    Structure::pure(2).unwrap()
}

/// Constancy of x; joining it to the walkthrough set makes the set
/// unsatisfiable on every finite structure.
pub fn constancy() -> Formula {
    Formula::Dep(vec![], Term::var("x"))
}

/// Under strict semantics this formula sees more than the x-column: it
/// asks for a z-column with at least two values reachable from singleton
/// images, which a one-row restriction cannot supply while a two-row team
/// with a dummy column can.
pub fn strict_locality_witness() -> Formula {
    Formula::exists_strict(
        "z",
        Formula::and(
            Formula::Incl(vec![Term::var("x")], vec![Term::var("z")]),
            Formula::exists(
                "w",
                Formula::and(
                    Formula::Neq(Term::var("w"), Term::var("x")),
                    Formula::Incl(vec![Term::var("w")], vec![Term::var("z")]),
                ),
            ),
        ),
    )
}

fn rows(data: &[&[usize]]) -> BTreeSet<Vec<usize>> {
    data.iter().map(|r| r.to_vec()).collect()
}

fn set(indices: &[usize]) -> BTreeSet<usize> {
    indices.iter().copied().collect()
}

/// Three pairwise-disequality tables over a two-element domain, no
/// top-level table: every member relation is satisfiable, their join is
/// empty, and merging reports the empty index set as witness.
pub fn merge_triangle_fixture() -> CoherenceSystem {
    let neq = rows(&[&[0, 1], &[1, 0]]);
    let both = rows(&[&[0], &[1]]);
    let family: BTreeMap<_, _> = [
        (set(&[]), rows(&[&[]])),
        (set(&[0]), both.clone()),
        (set(&[1]), both.clone()),
        (set(&[2]), both),
        (set(&[0, 1]), neq.clone()),
        (set(&[0, 2]), neq.clone()),
        (set(&[1, 2]), neq),
    ]
    .into_iter()
    .collect();
    CoherenceSystem::new(vec!["x0".into(), "x1".into(), "x2".into()], 2, family).unwrap()
}

/// A two-variable system whose pair table cannot reproduce one of the
/// singleton tables: merging fails with witness {1}.
pub fn merge_incoherent_fixture() -> CoherenceSystem {
    let family: BTreeMap<_, _> = [
        (set(&[0]), rows(&[&[0]])),
        (set(&[1]), rows(&[&[0], &[1]])),
        (set(&[0, 1]), rows(&[&[0, 0]])),
    ]
    .into_iter()
    .collect();
    CoherenceSystem::new(vec!["x0".into(), "x1".into()], 2, family).unwrap()
}

/// One unary predicate; the base vocabulary of most corpora.
pub fn unary_signature() -> Signature {
    Signature::new(vec![("P".into(), 1)], vec![]).unwrap()
}

/// Unary predicate plus a unary function and a constant, for substitution
/// instances whose terms do something.
pub fn term_signature() -> Signature {
    Signature::new(
        vec![("P".into(), 1)],
        vec![("f".into(), 1), ("c".into(), 0)],
    )
    .unwrap()
}

// ---------------------------------------------------------------------
// cost model

fn pow_sat(base: u64, exp: u64) -> u64 {
    if exp >= 64 {
        return u64::MAX;
    }
    let mut out = 1u64;
    for _ in 0..exp {
        out = out.saturating_mul(base);
    }
    out
}

/// Per-row cost of one Tarski pass over a flat formula.
fn tarski_cost(formula: &Formula, n: u64) -> u64 {
    match formula {
        Formula::Rel(..) | Formula::NegRel(..) | Formula::Eq(..) | Formula::Neq(..) => 1,
        Formula::And(a, b) | Formula::TensorOr(a, b) | Formula::TensorOrStrict(a, b) => {
            tarski_cost(a, n).saturating_add(tarski_cost(b, n)).saturating_add(1)
        }
        Formula::Exists(_, a)
        | Formula::ExistsStrict(_, a)
        | Formula::Exists1(_, a)
        | Formula::Forall(_, a)
        | Formula::Forall1(_, a) => n.saturating_mul(tarski_cost(a, n)).saturating_add(1),
        _ => u64::MAX,
    }
}

/// Upper estimate of the evaluator's work on a team of `rows` rows over a
/// domain of size `n`, following the same tier choices the evaluator
/// makes (flat bodies evaluate per-row; downward-closed splits partition;
/// anything else sweeps the full candidate space).
pub fn eval_cost(formula: &Formula, n: usize, rows: u64) -> u64 {
    let n = n as u64;
    if fragment_of(formula).is_flat_fragment() {
        return rows.saturating_mul(tarski_cost(formula, n)).saturating_add(rows);
    }
    match formula {
        Formula::Rel(..) | Formula::NegRel(..) | Formula::Eq(..) | Formula::Neq(..) => rows,
        Formula::Dep(..) | Formula::Incl(..) | Formula::Indep(..) | Formula::Excl(..) => {
            rows.saturating_mul(rows).saturating_add(rows)
        }
        Formula::And(a, b) | Formula::IntOr(a, b) => {
            eval_cost(a, n as usize, rows).saturating_add(eval_cost(b, n as usize, rows))
        }
        Formula::IntImpl(a, b) => pow_sat(2, rows).saturating_mul(
            eval_cost(a, n as usize, rows).saturating_add(eval_cost(b, n as usize, rows)),
        ),
        Formula::WeakNeg(a) | Formula::ClassNeg(a) => eval_cost(a, n as usize, rows),
        Formula::TensorOr(a, b) | Formula::TensorOrStrict(a, b) => {
            let inner =
                eval_cost(a, n as usize, rows).saturating_add(eval_cost(b, n as usize, rows));
            let dc = fragment_of(a).is_downward_closed_fragment() && fragment_of(b).is_downward_closed_fragment();
            let strict = matches!(formula, Formula::TensorOrStrict(..));
            let flat_side = fragment_of(a).is_flat_fragment() || fragment_of(b).is_flat_fragment();
            if !strict && flat_side && dc {
                // greedy split: one Tarski pass plus the other side
                rows.saturating_mul(16).saturating_add(inner)
            } else if strict || dc {
                pow_sat(2, rows).saturating_mul(inner)
            } else {
                pow_sat(3, rows).saturating_mul(inner)
            }
        }
        Formula::Exists(_, body) | Formula::ExistsStrict(_, body) | Formula::Exists1(_, body) => {
            let inner = eval_cost(body, n as usize, rows);
            if fragment_of(body).is_flat_fragment() {
                rows.saturating_mul(n).saturating_mul(16)
            } else if matches!(formula, Formula::ExistsStrict(..) | Formula::Exists1(..))
                || fragment_of(body).is_downward_closed_fragment()
            {
                pow_sat(n, rows).saturating_mul(inner)
            } else {
                // singleton phase plus the full image sweep
                pow_sat(n, rows)
                    .saturating_add(pow_sat(pow_sat(2, n).saturating_sub(1), rows))
                    .saturating_mul(inner)
            }
        }
        Formula::Forall(_, body) => eval_cost(body, n as usize, rows.saturating_mul(n)),
        Formula::Forall1(_, body) => n.saturating_mul(eval_cost(body, n as usize, rows)),
    }
}

// ---------------------------------------------------------------------
// generators

/// Which constructs a generated formula may use. Free variables come from
/// `free_vars`; quantifiers introduce `q0`, `q1`, … on top of them.
#[derive(Debug, Clone)]
pub struct FormulaMenu {
    pub free_vars: Vec<String>,
    pub dep: bool,
    pub incl: bool,
    pub excl: bool,
    pub indep: bool,
    pub quantifier_depth: usize,
    pub max_depth: usize,
}

impl FormulaMenu {
    pub fn flat(free_vars: &[&str], max_depth: usize) -> Self {
        FormulaMenu {
            free_vars: free_vars.iter().map(|s| s.to_string()).collect(),
            dep: false,
            incl: false,
            excl: false,
            indep: false,
            quantifier_depth: 2,
            max_depth,
        }
    }

    pub fn with_atoms(mut self, dep: bool, incl: bool, excl: bool, indep: bool) -> Self {
        self.dep = dep;
        self.incl = incl;
        self.excl = excl;
        self.indep = indep;
        self
    }

    pub fn quantifier_free(mut self) -> Self {
        self.quantifier_depth = 0;
        self
    }
}

fn pick<'a, T>(rng: &mut ChaCha8Rng, items: &'a [T]) -> &'a T {
    &items[rng.gen_range(0..items.len())]
}

fn random_atom(rng: &mut ChaCha8Rng, menu: &FormulaMenu, scope: &[String]) -> Formula {
    let var = |rng: &mut ChaCha8Rng| Term::var(pick(rng, scope).clone());
    let mut choices: Vec<u8> = vec![0, 1, 2, 3];
    if menu.dep {
        choices.push(4);
    }
    if menu.incl {
        choices.push(5);
    }
    if menu.excl {
        choices.push(6);
    }
    if menu.indep {
        choices.push(7);
    }
    match *pick(rng, &choices) {
        0 => Formula::Rel("P".into(), vec![var(rng)]),
        1 => Formula::NegRel("P".into(), vec![var(rng)]),
        2 => Formula::Eq(var(rng), var(rng)),
        3 => Formula::Neq(var(rng), var(rng)),
        4 => {
            // zero or one controller
            if rng.gen_bool(0.3) {
                Formula::Dep(vec![], var(rng))
            } else {
                Formula::Dep(vec![var(rng)], var(rng))
            }
        }
        5 => {
            if rng.gen_bool(0.3) && scope.len() >= 2 {
                Formula::Incl(vec![var(rng), var(rng)], vec![var(rng), var(rng)])
            } else {
                Formula::Incl(vec![var(rng)], vec![var(rng)])
            }
        }
        6 => Formula::Excl(vec![var(rng)], vec![var(rng)]),
        _ => {
            if rng.gen_bool(0.4) {
                Formula::Indep(vec![var(rng)], vec![var(rng)], vec![var(rng)])
            } else {
                Formula::Indep(vec![var(rng)], vec![var(rng)], vec![])
            }
        }
    }
}

fn random_node(
    rng: &mut ChaCha8Rng,
    menu: &FormulaMenu,
    scope: &mut Vec<String>,
    depth: usize,
    q_left: usize,
) -> Formula {
    if depth == 0 {
        return random_atom(rng, menu, scope);
    }
    let quantifiers = q_left > 0;
    let roll = rng.gen_range(0..100);
    if roll < 30 {
        random_atom(rng, menu, scope)
    } else if roll < 50 {
        Formula::and(
            random_node(rng, menu, scope, depth - 1, q_left),
            random_node(rng, menu, scope, depth - 1, q_left),
        )
    } else if roll < 70 || !quantifiers {
        Formula::tensor(
            random_node(rng, menu, scope, depth - 1, q_left),
            random_node(rng, menu, scope, depth - 1, q_left),
        )
    } else {
        let bound = format!("q{}", menu.quantifier_depth - q_left);
        scope.push(bound.clone());
        let body = random_node(rng, menu, scope, depth - 1, q_left - 1);
        scope.pop();
        if roll < 85 {
            Formula::exists(bound, body)
        } else {
            Formula::forall(bound, body)
        }
    }
}

/// One random formula from the menu.
pub fn random_formula(rng: &mut ChaCha8Rng, menu: &FormulaMenu) -> Formula {
    let mut scope = menu.free_vars.clone();
    random_node(rng, menu, &mut scope, menu.max_depth, menu.quantifier_depth)
}

/// Total relation-variable cells the second-order solver would enumerate
/// for this formula's translation at domain size `n`, or `None` when the
/// formula leaves the translatable fragment. The solver's work is bounded
/// by two to the power of this sum.
pub fn translation_cells(formula: &Formula, n: usize) -> Option<u64> {
    let fv: Vec<String> = formula.free_vars().into_iter().collect();
    let sentence = crate::eso::translate(formula, &fv).ok()?;
    Some(
        sentence
            .prefix
            .iter()
            .map(|(_, arity)| pow_sat(n as u64, *arity as u64))
            .fold(0u64, u64::saturating_add),
    )
}

/// A deduplicated corpus of `count` menu formulas whose estimated
/// evaluation cost at (`cost_n`, `cost_rows`) stays within `cost_cap` and
/// which pass the extra `keep` filter.
pub fn build_corpus_filtered(
    seed: u64,
    count: usize,
    menu: &FormulaMenu,
    cost_n: usize,
    cost_rows: u64,
    cost_cap: u64,
    keep: impl Fn(&Formula) -> bool,
) -> Vec<Formula> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(count);
    let mut stale = 0usize;
    while out.len() < count {
        let formula = random_formula(&mut rng, menu);
        if eval_cost(&formula, cost_n, cost_rows) > cost_cap || !keep(&formula) {
            stale += 1;
            // menus over tiny scopes can exhaust their distinct formulas
            assert!(stale < 100_000, "corpus generation stopped making progress");
            continue;
        }
        if seen.insert(formula.to_string()) {
            out.push(formula);
            stale = 0;
        } else {
            stale += 1;
            assert!(stale < 100_000, "corpus generation stopped making progress");
        }
    }
    out
}

/// `build_corpus_filtered` with no extra filter.
pub fn build_corpus(
    seed: u64,
    count: usize,
    menu: &FormulaMenu,
    cost_n: usize,
    cost_rows: u64,
    cost_cap: u64,
) -> Vec<Formula> {
    build_corpus_filtered(seed, count, menu, cost_n, cost_rows, cost_cap, |_| true)
}

/// The 50-formula flat corpus: plain first-order connectives and
/// quantifiers over one unary predicate and two variables.
pub fn fo_corpus(seed: u64) -> Vec<Formula> {
    build_corpus(
        seed,
        50,
        &FormulaMenu::flat(&["x", "y"], 4),
        3,
        9,
        1 << 20,
    )
}

/// Thirty downward-closed-fragment formulas: functional dependence and
/// exclusion atoms under ∧, ∨ and quantifiers.
pub fn downward_corpus(seed: u64) -> Vec<Formula> {
    build_corpus(
        seed,
        30,
        &FormulaMenu::flat(&["x", "y"], 3).with_atoms(true, false, true, false),
        3,
        9,
        1 << 20,
    )
}

/// Thirty inclusion-fragment formulas, the union-closed family.
pub fn union_corpus(seed: u64) -> Vec<Formula> {
    build_corpus(
        seed,
        30,
        &FormulaMenu::flat(&["x", "y"], 3).with_atoms(false, true, false, false),
        3,
        9,
        1 << 20,
    )
}

/// Thirty one-free-variable formulas over the full lax atom menu, used
/// with a dummy column for the locality sweep.
pub fn locality_corpus(seed: u64) -> Vec<Formula> {
    build_corpus(
        seed,
        30,
        &FormulaMenu::flat(&["x"], 3).with_atoms(true, true, true, true),
        3,
        9,
        1 << 20,
    )
}

/// Lax formulas over every atom kind with shallow quantifiers, sized for
/// the second-order solver at domain two.
pub fn eso_corpus(seed: u64) -> Vec<Formula> {
    let mut menu = FormulaMenu::flat(&["x", "y"], 3).with_atoms(true, true, true, true);
    menu.quantifier_depth = 1;
    build_corpus_filtered(seed, 30, &menu, 2, 4, 1 << 20, |f| {
        translation_cells(f, 2).is_some_and(|cells| cells <= 16)
    })
}

/// Quantifier-free lax formulas for solver runs at domain three, where a
/// quantifier would push relation-variable arities past the cell budget.
pub fn eso_qf_corpus(seed: u64) -> Vec<Formula> {
    let menu = FormulaMenu::flat(&["x", "y"], 3)
        .with_atoms(true, true, true, true)
        .quantifier_free();
    build_corpus_filtered(seed, 30, &menu, 3, 4, 1 << 20, |f| {
        translation_cells(f, 3).is_some_and(|cells| cells <= 18)
    })
}

/// Random structure over `signature`: each relation tuple joins by coin
/// flip, each function cell picks a uniform value.
pub fn random_structure(rng: &mut ChaCha8Rng, signature: &Signature, n: usize) -> Structure {
    let mut relations = BTreeMap::new();
    for (name, arity) in signature.relations() {
        let table: BTreeSet<Vec<usize>> = tuples(n, *arity)
            .filter(|_| rng.gen_bool(0.5))
            .collect();
        relations.insert(name.clone(), table);
    }
    let mut functions = BTreeMap::new();
    for (name, arity) in signature.functions() {
        let table: BTreeMap<Vec<usize>, usize> = tuples(n, *arity)
            .map(|args| (args, rng.gen_range(0..n)))
            .collect();
        functions.insert(name.clone(), table);
    }
    Structure::new(signature.clone(), n, relations, functions).unwrap()
}

/// Random team over `vars` with between `min_rows` and `max_rows` distinct
/// rows (fewer when the tuple space runs out).
pub fn random_team(
    rng: &mut ChaCha8Rng,
    vars: &[String],
    n: usize,
    min_rows: usize,
    max_rows: usize,
) -> Team {
    let target = rng.gen_range(min_rows..=max_rows);
    let mut rows = BTreeSet::new();
    for _ in 0..target * 4 {
        if rows.len() >= target {
            break;
        }
        let row: Vec<usize> = (0..vars.len()).map(|_| rng.gen_range(0..n)).collect();
        rows.insert(row);
    }
    Team::new(vars.to_vec(), rows).unwrap()
}

/// Random term over `vars` and the term signature's function symbols,
/// nesting at most `depth` applications.
pub fn random_term(rng: &mut ChaCha8Rng, vars: &[String], depth: usize) -> Term {
    if depth == 0 || rng.gen_bool(0.5) {
        if rng.gen_bool(0.2) {
            Term::constant("c")
        } else {
            Term::var(pick(rng, vars).clone())
        }
    } else {
        Term::app("f", vec![random_term(rng, vars, depth - 1)])
    }
}
