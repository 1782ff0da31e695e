//! Numbered end-to-end checks at fixed desk scales. Each criterion sweeps
//! a seeded corpus or fixture, tallies individual checks, and reports the
//! first failure verbatim so a regression names its own witness. The CLI's
//! `suite` command and the acceptance tests both run these.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::compactness::{
    check_intuition, expand_model, formula_rel_name, index_set_rel_name, merge_teams,
    CoherenceSystem, GammaSpec,
};
use crate::corpus::{
    constancy, downward_corpus, eso_corpus, eso_qf_corpus, eval_cost, fo_corpus, locality_corpus,
    merge_incoherent_fixture, merge_triangle_fixture, random_formula, random_structure,
    random_team, random_term, running_example_gamma, running_example_structure,
    running_example_team, strict_locality_witness, term_signature, translation_cells,
    unary_signature, union_corpus, FormulaMenu,
};
use crate::enumerate::{masked_subset, tuples};
use crate::error::{Error, Result};
use crate::eso::{crosscheck, EsoBudget};
use crate::eval::{
    check_substitution, eval_flat_fo, eval_with_options, sat_search, EvalOptions, Evaluator,
};
use crate::formula::{infer_signature, substitute, substitute_desugared};
use crate::model::{enumerate_structures, Structure};
use crate::properties::{
    check_downward, check_empty_team, check_locality, check_union_closure,
    find_locality_violation, PropertySearch,
};
use crate::team::{SupplementFunction, Team};
use crate::ultraproduct::{
    check_los, check_principal_isomorphism, check_team_lemma, StructureFamily, TeamLemmaCase,
    Ultrafilter,
};

/// The criterion names, in id order, as `run_by_name` accepts them.
pub const CRITERIA: [&str; 9] = [
    "running-example",
    "flatness",
    "closure",
    "substitution",
    "team-product",
    "los",
    "translation",
    "coherence",
    "merge",
];

/// Outcome of one criterion run.
#[derive(Debug, Clone, Serialize)]
pub struct CriterionReport {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    /// Individual checks performed.
    pub cases: u64,
    /// Checks that failed.
    pub failures: u64,
    /// Candidate cases dropped by a cost gate before checking.
    pub skipped: u64,
    /// First failure (or error) in words; a summary when everything passed.
    pub detail: String,
    pub seconds: f64,
}

struct Tally {
    cases: u64,
    failures: u64,
    skipped: u64,
    first_failure: Option<String>,
}

impl Tally {
    fn new() -> Self {
        Tally {
            cases: 0,
            failures: 0,
            skipped: 0,
            first_failure: None,
        }
    }

    fn check(&mut self, ok: bool, context: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failures += 1;
            if self.first_failure.is_none() {
                self.first_failure = Some(context());
            }
        }
    }

    fn skip(&mut self) {
        self.skipped += 1;
    }
}

fn run(id: usize, name: &'static str, body: impl FnOnce(&mut Tally) -> Result<()>) -> CriterionReport {
    let started = Instant::now();
    let mut tally = Tally::new();
    let outcome = body(&mut tally);
    let seconds = started.elapsed().as_secs_f64();
    let passed = outcome.is_ok() && tally.failures == 0 && tally.cases > 0;
    let detail = match (&outcome, &tally.first_failure) {
        (Err(e), _) => format!("error: {e}"),
        (Ok(()), Some(first)) => first.clone(),
        (Ok(()), None) if tally.cases == 0 => "no checks ran".to_string(),
        (Ok(()), None) if tally.skipped > 0 => format!(
            "{} checks passed, {} candidates skipped by cost gates",
            tally.cases, tally.skipped
        ),
        (Ok(()), None) => format!("{} checks passed", tally.cases),
    };
    CriterionReport {
        id,
        name,
        passed,
        cases: tally.cases,
        failures: tally.failures,
        skipped: tally.skipped,
        detail,
        seconds,
    }
}

/// The walkthrough set has its least model at domain size two with the
/// full one-column team, and adding constancy of x kills satisfiability.
pub fn criterion_running_example(_seed: u64) -> CriterionReport {
    run(1, "running-example", |t| {
        let options = EvalOptions::default();
        let gamma = running_example_gamma();
        let signature = infer_signature(&gamma)?;
        match sat_search(&gamma, &signature, 3, options)? {
            Some((m, team)) => {
                t.check(m.domain_size() == 2, || {
                    format!("least satisfying domain size is {}", m.domain_size())
                });
                t.check(team == running_example_team(), || {
                    format!("search returned team {team}")
                });
            }
            None => t.check(false, || "no satisfying structure up to size 3".into()),
        }
        let m = running_example_structure();
        let mut ev = Evaluator::new(&m, options);
        for formula in &gamma {
            let ok = ev.eval(&running_example_team(), formula)?;
            t.check(ok, || format!("`{formula}` fails on the expected witness"));
        }
        let mut extended = gamma.clone();
        extended.push(constancy());
        let blocked = sat_search(&extended, &signature, 3, options)?;
        t.check(blocked.is_none(), || {
            "adding dep(; x) left the set satisfiable".into()
        });
        Ok(())
    })
}

/// First-order formulas evaluate the same through team descent and through
/// the row-by-row shortcut, on every unary structure up to size three and
/// every team over two variables; pruning never changes a verdict.
pub fn criterion_flatness(seed: u64) -> CriterionReport {
    run(2, "flatness", |t| {
        let formulas = fo_corpus(seed);
        let signature = unary_signature();
        let options = EvalOptions::default();
        let unpruned = EvalOptions {
            prune: false,
            memo: false,
            ..options
        };
        let vars: Vec<String> = vec!["x".into(), "y".into()];
        for n in 1..=3usize {
            let space: Vec<Vec<usize>> = tuples(n, vars.len()).collect();
            for m in enumerate_structures(&signature, n, 1 << 20)? {
                let mut ev = Evaluator::new(&m, options);
                for formula in &formulas {
                    for mask in 0..(1u64 << space.len()) {
                        let team = Team::new(vars.clone(), masked_subset(&space, mask))?;
                        let direct = ev.eval(&team, formula)?;
                        let rowwise = eval_flat_fo(&m, &team, formula)?;
                        t.check(direct == rowwise, || {
                            format!("`{formula}` disagrees with its rows on {team} (n = {n})")
                        });
                        // quantifiers multiply rows, so the exhaustive
                        // searches only fit the budget at small scales
                        if n <= 2 && team.len() <= 2 {
                            match eval_with_options(&m, &team, formula, unpruned) {
                                Ok(slow) => t.check(slow == direct, || {
                                    format!("`{formula}` changes verdict without pruning on {team}")
                                }),
                                Err(e) if e.is_budget() => t.skip(),
                                Err(e) => return Err(e),
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    })
}

/// Downward closure for dependence and exclusion formulas, union closure
/// for inclusion formulas, locality in a team with a dummy column, and the
/// empty team property, each swept exhaustively; plus one strict-semantics
/// formula whose verdict provably depends on the dummy column.
pub fn criterion_closure(seed: u64) -> CriterionReport {
    run(3, "closure", |t| {
        let signature = unary_signature();
        let search = PropertySearch::default();
        let vars: Vec<String> = vec!["x".into(), "y".into()];
        let mut structures = Vec::new();
        for n in 1..=3usize {
            structures.extend(enumerate_structures(&signature, n, 1 << 20)?);
        }
        let down = downward_corpus(seed);
        let union = union_corpus(seed);
        let local = locality_corpus(seed);
        let flat = fo_corpus(seed);
        for m in &structures {
            for formula in &down {
                let verdict = check_downward(m, formula, &vars, search)?;
                t.check(verdict.holds, || {
                    format!(
                        "`{formula}` is not downward closed on a size-{} structure",
                        m.domain_size()
                    )
                });
            }
            for formula in &union {
                let verdict = check_union_closure(m, formula, &vars, search)?;
                t.check(verdict.holds, || {
                    format!(
                        "`{formula}` is not union closed on a size-{} structure",
                        m.domain_size()
                    )
                });
            }
        }
        let extended: Vec<String> = vec!["u".into(), "x".into()];
        for m in &structures {
            for formula in &local {
                let verdict = check_locality(m, formula, &extended, search)?;
                t.check(verdict.holds, || {
                    format!(
                        "`{formula}` sees the dummy column on a size-{} structure",
                        m.domain_size()
                    )
                });
            }
        }
        for m in &structures {
            for formula in down.iter().chain(&union).chain(&local).chain(&flat) {
                let verdict = check_empty_team(m, formula, search.options)?;
                t.check(verdict.holds, || {
                    format!("`{formula}` rejects the empty team")
                });
            }
        }
        let witness = strict_locality_witness();
        let wsig = infer_signature([&witness])?;
        let hit = find_locality_violation(&wsig, &witness, "u", 3, search.options)?;
        t.check(hit.is_some(), || {
            "the strict witness formula stayed local up to size 3".into()
        });
        Ok(())
    })
}

/// Substituting a term for a variable inside the formula agrees with
/// rewriting the team's column instead, across random formulas, terms,
/// structures with a function symbol, and teams.
pub fn criterion_substitution(seed: u64) -> CriterionReport {
    run(4, "substitution", |t| {
        let options = EvalOptions::default();
        let signature = term_signature();
        let vars: Vec<String> = vec!["x".into(), "y".into()];
        let mut menu = FormulaMenu::flat(&["x", "y"], 2).with_atoms(true, true, true, true);
        menu.quantifier_depth = 1;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0004);
        let mut done = 0usize;
        while done < 500 {
            let formula = random_formula(&mut rng, &menu);
            let n = rng.gen_range(1..=3);
            if eval_cost(&formula, n, 4) > 200_000 {
                t.skip();
                continue;
            }
            let term = random_term(&mut rng, &vars, 2);
            let x = if rng.gen_bool(0.5) { "x" } else { "y" };
            let rewritten = match substitute(&formula, x, &term) {
                Ok(f) => f,
                Err(Error::AtomSubstitution { .. }) => substitute_desugared(&formula, x, &term)?,
                Err(e) => return Err(e),
            };
            if eval_cost(&rewritten, n, 4) > 200_000 {
                t.skip();
                continue;
            }
            let m = random_structure(&mut rng, &signature, n);
            let team = random_team(&mut rng, &vars, n, 0, 4);
            let ok = check_substitution(&m, &team, &formula, &term, x, options)?;
            t.check(ok, || {
                format!("substituting {term} for {x} in `{formula}` changes the verdict on {team}")
            });
            done += 1;
        }
        Ok(())
    })
}

/// The five product-team identities hold for random families under a
/// principal ultrafilter: pointwise union, forced disjointness, constant
/// supplements, duplication, and function supplements.
pub fn criterion_team_product(seed: u64) -> CriterionReport {
    run(5, "team-product", |t| {
        let signature = unary_signature();
        let vars: Vec<String> = vec!["x".into(), "y".into()];
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0005);
        for round in 0..200usize {
            let k = rng.gen_range(1..=3usize);
            let sizes: Vec<usize> = (0..k).map(|_| rng.gen_range(1..=3)).collect();
            let structures: Vec<Structure> = sizes
                .iter()
                .map(|&n| random_structure(&mut rng, &signature, n))
                .collect();
            let teams: Vec<Team> = sizes
                .iter()
                .map(|&n| random_team(&mut rng, &vars, n, 0, 3))
                .collect();
            let family = StructureFamily::new(structures)?.with_teams(teams.clone())?;
            let j = rng.gen_range(0..k);
            let u = Ultrafilter::principal(k, j)?;
            let case = match round % 5 {
                0 => TeamLemmaCase::Union {
                    other: sizes
                        .iter()
                        .map(|&n| random_team(&mut rng, &vars, n, 0, 3))
                        .collect(),
                },
                1 => {
                    let space: Vec<Vec<usize>> = tuples(sizes[j], vars.len()).collect();
                    let free: Vec<Vec<usize>> = space
                        .into_iter()
                        .filter(|row| !teams[j].rows().contains(row))
                        .collect();
                    if free.is_empty() {
                        // X_j already fills its row space; no disjoint
                        // nonempty partner exists, so check duplication
                        TeamLemmaCase::Duplicate { var: "z".into() }
                    } else {
                        let mut chosen: BTreeSet<Vec<usize>> = BTreeSet::new();
                        chosen.insert(free[rng.gen_range(0..free.len())].clone());
                        for row in &free {
                            if rng.gen_bool(0.4) {
                                chosen.insert(row.clone());
                            }
                        }
                        let other: Vec<Team> = sizes
                            .iter()
                            .enumerate()
                            .map(|(i, &n)| {
                                if i == j {
                                    Team::new(vars.clone(), chosen.clone())
                                } else {
                                    Ok(random_team(&mut rng, &vars, n, 0, 3))
                                }
                            })
                            .collect::<Result<_>>()?;
                        TeamLemmaCase::Disjointness { other }
                    }
                }
                2 => TeamLemmaCase::ConstSupplement {
                    values: sizes.iter().map(|&n| rng.gen_range(0..n)).collect(),
                    var: "z".into(),
                },
                3 => TeamLemmaCase::Duplicate { var: "z".into() },
                _ => {
                    let functions: Vec<SupplementFunction> = teams
                        .iter()
                        .zip(&sizes)
                        .map(|(team, &n)| {
                            let mut choices = BTreeMap::new();
                            for row in team.rows() {
                                let want = rng.gen_range(1..=n);
                                let mut image = BTreeSet::new();
                                image.insert(rng.gen_range(0..n));
                                while image.len() < want {
                                    image.insert(rng.gen_range(0..n));
                                }
                                choices.insert(row.clone(), image);
                            }
                            SupplementFunction::new("z".into(), choices)
                        })
                        .collect::<Result<_>>()?;
                    TeamLemmaCase::Supplement {
                        functions,
                        var: "z".into(),
                    }
                }
            };
            let report = check_team_lemma(&family, &u, &case)?;
            t.check(report.equal && report.moreover != Some(false), || {
                format!(
                    "{} identity fails at k = {k}, principal index {j}: left {} right {}",
                    report.kind, report.left, report.right
                )
            });
        }
        Ok(())
    })
}

/// Satisfaction transfers between a product at a principal ultrafilter and
/// its distinguished factor, and the product is isomorphic to that factor.
pub fn criterion_los(seed: u64) -> CriterionReport {
    run(6, "los", |t| {
        let signature = unary_signature();
        let vars: Vec<String> = vec!["x".into(), "y".into()];
        let formulas = eso_corpus(seed);
        let options = EvalOptions::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0006);
        for _ in 0..100usize {
            let k = if rng.gen_bool(0.8) {
                rng.gen_range(1..=2)
            } else {
                3
            };
            let sizes: Vec<usize> = (0..k).map(|_| rng.gen_range(1..=2)).collect();
            let structures: Vec<Structure> = sizes
                .iter()
                .map(|&n| random_structure(&mut rng, &signature, n))
                .collect();
            let teams: Vec<Team> = sizes
                .iter()
                .map(|&n| random_team(&mut rng, &vars, n, 0, 3))
                .collect();
            let family = StructureFamily::new(structures)?.with_teams(teams)?;
            let j = rng.gen_range(0..k);
            let u = Ultrafilter::principal(k, j)?;
            let product_n: usize = sizes.iter().product();
            for formula in &formulas {
                if eval_cost(formula, product_n, 3) > 200_000 {
                    t.skip();
                    continue;
                }
                let report = check_los(&family, &u, formula, options)?;
                t.check(report.lhs == report.rhs, || {
                    format!(
                        "`{formula}` splits the product from its factor (factor side {}, product side {})",
                        report.lhs, report.rhs
                    )
                });
            }
            t.check(check_principal_isomorphism(&family, &u)?, || {
                "product at a principal ultrafilter is not isomorphic to its factor".into()
            });
        }
        Ok(())
    })
}

/// Direct evaluation agrees with the second-order translation: every team
/// over the free variables at sizes one and two, then random teams at
/// size three for quantifier-free formulas.
pub fn criterion_translation(seed: u64) -> CriterionReport {
    run(7, "translation", |t| {
        let options = EvalOptions::default();
        let budget = EsoBudget::default();
        let signature = unary_signature();
        for formula in &eso_corpus(seed) {
            let fv: Vec<String> = formula.free_vars().into_iter().collect();
            for n in 1..=2usize {
                let space: Vec<Vec<usize>> = tuples(n, fv.len()).collect();
                for m in enumerate_structures(&signature, n, 1 << 20)? {
                    for mask in 0..(1u64 << space.len()) {
                        let team = Team::new(fv.clone(), masked_subset(&space, mask))?;
                        let report = crosscheck(&m, &team, formula, options, budget)?;
                        t.check(report.agrees(), || {
                            format!(
                                "`{formula}` disagrees with its translation on {team} (direct {}, translated {})",
                                report.direct, report.via_eso
                            )
                        });
                    }
                }
            }
        }
        let qf = eso_qf_corpus(seed.wrapping_add(1));
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0007);
        for round in 0..300usize {
            let formula = &qf[round % qf.len()];
            let fv: Vec<String> = formula.free_vars().into_iter().collect();
            let m = random_structure(&mut rng, &signature, 3);
            let team = random_team(&mut rng, &fv, 3, 0, 4);
            let report = crosscheck(&m, &team, formula, options, budget)?;
            t.check(report.agrees(), || {
                format!(
                    "`{formula}` disagrees with its translation on {team} (direct {}, translated {})",
                    report.direct, report.via_eso
                )
            });
        }
        Ok(())
    })
}

struct ExpansionInstance {
    gammas: Vec<crate::formula::Formula>,
    n: usize,
    structure: Structure,
    team: Team,
}

/// Rejection-sample a finite set of lax formulas together with a structure
/// and nonempty team satisfying all of them, sized for the checks here.
fn random_expansion_instance(
    rng: &mut ChaCha8Rng,
    options: EvalOptions,
) -> Result<ExpansionInstance> {
    let signature = unary_signature();
    let vars: Vec<String> = vec!["x".into(), "y".into()];
    for _ in 0..10_000 {
        let n = rng.gen_range(1..=3);
        let mut menu = FormulaMenu::flat(&["x", "y"], 2).with_atoms(true, true, true, true);
        // arity grows with quantifier depth; keep the solver spaces small
        menu.quantifier_depth = usize::from(n <= 2);
        let want = rng.gen_range(1..=2);
        let mut gammas = Vec::new();
        for _ in 0..60 {
            if gammas.len() == want {
                break;
            }
            let f = random_formula(rng, &menu);
            let cells_ok = translation_cells(&f, n).is_some_and(|cells| cells <= 14);
            if cells_ok && eval_cost(&f, n, 6) <= 100_000 {
                gammas.push(f);
            }
        }
        if gammas.len() < want {
            continue;
        }
        for _ in 0..60 {
            let m = random_structure(rng, &signature, n);
            let team = random_team(rng, &vars, n, 1, 3);
            let mut ev = Evaluator::new(&m, options);
            let mut all = true;
            for f in &gammas {
                if !ev.eval(&team, f)? {
                    all = false;
                    break;
                }
            }
            if all {
                return Ok(ExpansionInstance {
                    gammas,
                    n,
                    structure: m,
                    team,
                });
            }
        }
    }
    Err(Error::PreconditionFailed {
        detail: "instance sampling stalled".into(),
    })
}

/// Rebuild `base` with one relation table replaced.
fn with_table(base: &Structure, name: &str, table: BTreeSet<Vec<usize>>) -> Result<Structure> {
    let mut relations: BTreeMap<String, BTreeSet<Vec<usize>>> = base
        .signature()
        .relations()
        .iter()
        .map(|(r, _)| (r.clone(), base.relation_table(r).cloned().unwrap_or_default()))
        .collect();
    relations.insert(name.to_string(), table);
    let functions: BTreeMap<String, BTreeMap<Vec<usize>, usize>> = base
        .signature()
        .functions()
        .iter()
        .map(|(f, _)| (f.clone(), base.function_table(f).cloned().unwrap_or_default()))
        .collect();
    Structure::new(
        base.signature().clone(),
        base.domain_size(),
        relations,
        functions,
    )
}

/// Expansions built from satisfying teams model the generated sentence set
/// with all three table conditions true, and a single-table mutation that
/// falsifies the sentences also falsifies a condition.
pub fn criterion_coherence(seed: u64) -> CriterionReport {
    run(8, "coherence", |t| {
        let options = EvalOptions::default();
        let budget = EsoBudget::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0008);
        for _ in 0..100usize {
            let inst = random_expansion_instance(&mut rng, options)?;
            // a quarter of the rounds enumerate an extra padded variable
            let (spec, team) = if inst.n <= 2 && rng.gen_bool(0.25) {
                let team = inst.team.duplicate(inst.n, "z");
                let spec = GammaSpec::new(
                    inst.gammas.clone(),
                    vec!["x".into(), "y".into(), "z".into()],
                )?;
                (spec, team)
            } else {
                let spec = GammaSpec::new(inst.gammas.clone(), vec!["x".into(), "y".into()])?;
                (spec, inst.team.clone())
            };
            let expansion = expand_model(&inst.structure, &team, &spec, options, budget)?;
            let report = check_intuition(&expansion, &spec)?;
            t.check(report.models_delta && report.agrees(), || {
                format!(
                    "expansion fails the sentence check (sentences {}, conditions {} {} {})",
                    report.models_delta, report.cond1, report.cond2, report.cond3
                )
            });

            let names: Vec<String> = (0..spec.formulas().len())
                .map(formula_rel_name)
                .chain(spec.family().iter().map(|set| index_set_rel_name(set)))
                .collect();
            let mut flipped = false;
            for attempt in 0..50usize {
                let last = attempt + 1 == 50;
                // clearing the first formula predicate always breaks its
                // nonemptiness sentence, so the forced final try flips
                let name = if last {
                    formula_rel_name(0)
                } else {
                    names[rng.gen_range(0..names.len())].clone()
                };
                let arity = expansion.signature().relation_arity(&name).unwrap_or(0);
                let table = expansion.relation_table(&name).cloned().unwrap_or_default();
                let mutated_table: BTreeSet<Vec<usize>> = if last {
                    BTreeSet::new()
                } else {
                    match rng.gen_range(0..3usize) {
                        0 => BTreeSet::new(),
                        1 => {
                            let missing: Vec<Vec<usize>> = tuples(inst.n, arity)
                                .filter(|row| !table.contains(row))
                                .collect();
                            let mut next = table.clone();
                            if let Some(row) = pick(&mut rng, &missing) {
                                next.insert(row);
                            } else if let Some(row) = pick_set(&mut rng, &table) {
                                next.remove(&row);
                            }
                            next
                        }
                        _ => {
                            let mut next = table.clone();
                            if let Some(row) = pick_set(&mut rng, &table) {
                                next.remove(&row);
                            } else {
                                let all: Vec<Vec<usize>> = tuples(inst.n, arity).collect();
                                if let Some(row) = pick(&mut rng, &all) {
                                    next.insert(row);
                                }
                            }
                            next
                        }
                    }
                };
                if mutated_table == table {
                    continue;
                }
                let mutated = with_table(&expansion, &name, mutated_table)?;
                let after = check_intuition(&mutated, &spec)?;
                if !after.models_delta {
                    t.check(after.agrees(), || {
                        format!(
                            "mutating `{name}` breaks a sentence but every condition still holds"
                        )
                    });
                    flipped = true;
                    break;
                }
            }
            t.check(flipped, || {
                "no single-table mutation falsified the sentences".into()
            });
        }
        Ok(())
    })
}

fn pick(rng: &mut ChaCha8Rng, rows: &[Vec<usize>]) -> Option<Vec<usize>> {
    if rows.is_empty() {
        None
    } else {
        Some(rows[rng.gen_range(0..rows.len())].clone())
    }
}

fn pick_set(rng: &mut ChaCha8Rng, rows: &BTreeSet<Vec<usize>>) -> Option<Vec<usize>> {
    if rows.is_empty() {
        None
    } else {
        rows.iter().nth(rng.gen_range(0..rows.len())).cloned()
    }
}

/// Round trip: expand a satisfying team into index-set tables, merge the
/// tables back, and recover exactly the team's projection; plus the two
/// fixed systems where merging must report a failure witness.
pub fn criterion_merge(seed: u64) -> CriterionReport {
    run(9, "merge", |t| {
        let options = EvalOptions::default();
        let budget = EsoBudget::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0009);
        for _ in 0..100usize {
            let inst = random_expansion_instance(&mut rng, options)?;
            // enumeration from the free variables keeps every index used,
            // so the family reaches its top set and merging can recover
            let spec = GammaSpec::from_formulas(inst.gammas.clone())?;
            if spec.enumeration().is_empty() {
                // all sampled formulas are sentences; nothing to merge
                t.skip();
                continue;
            }
            let expansion = expand_model(&inst.structure, &inst.team, &spec, options, budget)?;
            let system = CoherenceSystem::from_expansion(&expansion, &spec)?;
            let report = merge_teams(&system)?;
            t.check(report.verified, || {
                format!(
                    "merge failed verification at index set {:?}",
                    report.failure
                )
            });
            let expected = inst.team.project(spec.enumeration())?;
            t.check(report.team.as_ref() == Some(&expected), || {
                format!(
                    "merge recovered {:?} instead of {expected}",
                    report.team
                )
            });
        }

        let triangle = merge_triangle_fixture();
        let report = merge_teams(&triangle)?;
        t.check(!report.verified && report.team.is_none(), || {
            "pairwise-consistent triangle system unexpectedly merged".into()
        });
        t.check(report.failure == Some(vec![]), || {
            format!("triangle failure witness is {:?}", report.failure)
        });

        let incoherent = merge_incoherent_fixture();
        let report = merge_teams(&incoherent)?;
        t.check(!report.verified, || {
            "incoherent system unexpectedly merged".into()
        });
        t.check(report.failure == Some(vec![1]), || {
            format!("incoherent failure witness is {:?}", report.failure)
        });
        Ok(())
    })
}

/// Run one criterion by its listed name.
pub fn run_by_name(name: &str, seed: u64) -> Option<CriterionReport> {
    match name {
        "running-example" => Some(criterion_running_example(seed)),
        "flatness" => Some(criterion_flatness(seed)),
        "closure" => Some(criterion_closure(seed)),
        "substitution" => Some(criterion_substitution(seed)),
        "team-product" => Some(criterion_team_product(seed)),
        "los" => Some(criterion_los(seed)),
        "translation" => Some(criterion_translation(seed)),
        "coherence" => Some(criterion_coherence(seed)),
        "merge" => Some(criterion_merge(seed)),
        _ => None,
    }
}

/// Run all nine criteria in id order.
pub fn run_all(seed: u64) -> Vec<CriterionReport> {
    CRITERIA
        .iter()
        .map(|name| run_by_name(name, seed).expect("listed criteria all dispatch"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_dispatch() {
        assert!(run_by_name("no-such-criterion", 7).is_none());
        assert_eq!(CRITERIA.len(), 9);
        let report = run_by_name("running-example", 7).unwrap();
        assert_eq!(report.id, 1);
    }

    #[test]
    fn running_example_criterion_passes() {
        let report = criterion_running_example(7);
        assert!(report.passed, "{}", report.detail);
        assert_eq!(report.failures, 0);
        assert!(report.cases >= 4);
    }

    #[test]
    fn reports_serialize() {
        let report = criterion_running_example(7);
        let text = serde_json::to_string(&report).unwrap();
        assert!(text.contains("\"running-example\""));
    }
}
