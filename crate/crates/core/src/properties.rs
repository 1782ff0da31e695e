//! Checkers for team-level closure properties: the empty team property,
//! downward closure, union closure, flatness, and locality.
//!
//! Each checker searches for a counterexample over teams of one structure.
//! Small search spaces are swept exhaustively; larger ones fall back to
//! seeded random sampling, and the verdict records which happened. A false
//! verdict always carries a counterexample that re-verifies by direct
//! evaluation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::enumerate::{masked_subset, tuple_count, tuples};
use crate::error::{Error, Result};
use crate::eval::{EvalOptions, Evaluator};
use crate::formula::{fragment_of, Formula};
use crate::model::{enumerate_structures, Signature, Structure};
use crate::team::Team;

/// Search effort limits for one property check.
#[derive(Debug, Clone, Copy)]
pub struct PropertySearch {
    pub options: EvalOptions,
    /// Most candidate teams (or team pairs) an exhaustive sweep may visit;
    /// beyond this the checker samples instead.
    pub max_iterations: u64,
    pub seed: u64,
    /// Samples drawn in randomized mode.
    pub trials: u64,
    /// Row cap for randomly sampled teams.
    pub max_rows: usize,
}

impl Default for PropertySearch {
    fn default() -> Self {
        PropertySearch {
            options: EvalOptions::default(),
            max_iterations: 1 << 20,
            seed: 2026,
            trials: 400,
            max_rows: 6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SearchCoverage {
    Exhaustive,
    Randomized { seed: u64, trials: u64 },
}

/// Witness that a property fails, shaped per property.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Counterexample {
    /// The team satisfies the formula, the subteam does not.
    Downward { team: Team, subteam: Team },
    /// Both parts satisfy the formula, their union does not.
    Union { left: Team, right: Team },
    /// Team verdict and per-row verdict disagree.
    Flatness {
        team: Team,
        team_verdict: bool,
        rows_verdict: bool,
    },
    /// Verdicts differ between a team and its restriction to the free
    /// variables.
    Locality { extended: Team, restricted: Team },
}

impl Counterexample {
    /// Re-establish the violation by direct evaluation.
    pub fn reverify(
        &self,
        structure: &Structure,
        formula: &Formula,
        options: EvalOptions,
    ) -> Result<bool> {
        let mut ev = Evaluator::new(structure, options);
        match self {
            Counterexample::Downward { team, subteam } => {
                if !subteam.rows().is_subset(team.rows()) {
                    return Ok(false);
                }
                Ok(ev.eval(team, formula)? && !ev.eval(subteam, formula)?)
            }
            Counterexample::Union { left, right } => {
                let union = left.union(right)?;
                Ok(ev.eval(left, formula)?
                    && ev.eval(right, formula)?
                    && !ev.eval(&union, formula)?)
            }
            Counterexample::Flatness {
                team,
                team_verdict,
                rows_verdict,
            } => {
                let whole = ev.eval(team, formula)?;
                let mut rows = true;
                for row in team.rows() {
                    if !ev.eval(&team.with_rows([row.clone()]), formula)? {
                        rows = false;
                        break;
                    }
                }
                Ok(whole == *team_verdict && rows == *rows_verdict && whole != rows)
            }
            Counterexample::Locality {
                extended,
                restricted,
            } => {
                let free: Vec<String> = {
                    let mut v: Vec<String> = formula.free_vars().into_iter().collect();
                    v.sort();
                    v
                };
                if extended.project(&free)? != *restricted {
                    return Ok(false);
                }
                Ok(ev.eval(extended, formula)? != ev.eval(restricted, formula)?)
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PropertyVerdict {
    pub property: &'static str,
    pub holds: bool,
    pub counterexample: Option<Counterexample>,
    pub coverage: SearchCoverage,
}

fn sorted_free_vars(formula: &Formula) -> Vec<String> {
    let mut v: Vec<String> = formula.free_vars().into_iter().collect();
    v.sort();
    v
}

fn check_team_domain(formula: &Formula, domain: &[String]) -> Result<()> {
    for name in formula.free_vars() {
        if !domain.contains(&name) {
            return Err(Error::UnboundVariable { name });
        }
    }
    Ok(())
}

/// Whether the formula holds of the empty team over its own free variables.
/// Refuses classical negation, the one construct that can distinguish the
/// empty team.
pub fn check_empty_team(
    structure: &Structure,
    formula: &Formula,
    options: EvalOptions,
) -> Result<PropertyVerdict> {
    if fragment_of(formula).class_neg {
        return Err(Error::FragmentViolation {
            construct: "~".into(),
        });
    }
    let empty = Team::empty(sorted_free_vars(formula))?;
    let holds = Evaluator::new(structure, options).eval(&empty, formula)?;
    Ok(PropertyVerdict {
        property: "empty-team",
        holds,
        counterexample: None,
        coverage: SearchCoverage::Exhaustive,
    })
}

struct TeamSpace {
    vars: Vec<String>,
    rows: Vec<Vec<usize>>,
}

impl TeamSpace {
    fn new(structure: &Structure, domain: &[String]) -> TeamSpace {
        let mut vars = domain.to_vec();
        vars.sort();
        vars.dedup();
        let rows = tuples(structure.domain_size(), vars.len()).collect();
        TeamSpace { vars, rows }
    }

    fn size(&self) -> usize {
        self.rows.len()
    }

    fn team(&self, mask: u64) -> Team {
        Team::new(self.vars.clone(), masked_subset(&self.rows, mask))
            .expect("rows lie in the domain")
    }

    fn random_team(&self, rng: &mut ChaCha8Rng, max_rows: usize) -> Team {
        let count = rng.gen_range(0..=max_rows);
        let rows = (0..count).map(|_| self.rows[rng.gen_range(0..self.rows.len())].clone());
        Team::new(self.vars.clone(), rows).expect("rows lie in the domain")
    }
}

/// Search for a satisfying team with a non-satisfying subteam.
pub fn check_downward(
    structure: &Structure,
    formula: &Formula,
    domain: &[String],
    search: PropertySearch,
) -> Result<PropertyVerdict> {
    check_team_domain(formula, domain)?;
    let space = TeamSpace::new(structure, domain);
    let mut ev = Evaluator::new(structure, search.options);

    // every (team, subteam) pair = a three-way choice per candidate row
    let pair_count = tuple_count(3, space.size()).unwrap_or(u64::MAX);
    if space.size() < 64 && pair_count <= search.max_iterations {
        for mask in 0..(1u64 << space.size()) {
            let team = space.team(mask);
            if !ev.eval(&team, formula)? {
                continue;
            }
            // proper submasks in descending order; 0 included, mask skipped
            let mut sub = (mask.wrapping_sub(1)) & mask;
            loop {
                let subteam = space.team(sub);
                if !ev.eval(&subteam, formula)? {
                    return Ok(PropertyVerdict {
                        property: "downward-closure",
                        holds: false,
                        counterexample: Some(Counterexample::Downward { team, subteam }),
                        coverage: SearchCoverage::Exhaustive,
                    });
                }
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & mask;
            }
        }
        return Ok(PropertyVerdict {
            property: "downward-closure",
            holds: true,
            counterexample: None,
            coverage: SearchCoverage::Exhaustive,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(search.seed);
    let coverage = SearchCoverage::Randomized {
        seed: search.seed,
        trials: search.trials,
    };
    for _ in 0..search.trials {
        let team = space.random_team(&mut rng, search.max_rows);
        if !ev.eval(&team, formula)? {
            continue;
        }
        let rows: Vec<Vec<usize>> = team.rows().iter().cloned().collect();
        let keep: Vec<Vec<usize>> = rows
            .into_iter()
            .filter(|_| rng.gen_bool(0.5))
            .collect();
        let subteam = team.with_rows(keep);
        if !ev.eval(&subteam, formula)? {
            return Ok(PropertyVerdict {
                property: "downward-closure",
                holds: false,
                counterexample: Some(Counterexample::Downward { team, subteam }),
                coverage,
            });
        }
    }
    Ok(PropertyVerdict {
        property: "downward-closure",
        holds: true,
        counterexample: None,
        coverage,
    })
}

/// Search for two satisfying teams whose union fails.
pub fn check_union_closure(
    structure: &Structure,
    formula: &Formula,
    domain: &[String],
    search: PropertySearch,
) -> Result<PropertyVerdict> {
    check_team_domain(formula, domain)?;
    let space = TeamSpace::new(structure, domain);
    let mut ev = Evaluator::new(structure, search.options);

    let team_count = tuple_count(2, space.size()).unwrap_or(u64::MAX);
    let pair_count = team_count.checked_mul(team_count).unwrap_or(u64::MAX);
    if space.size() < 32 && pair_count <= search.max_iterations {
        let mut satisfying: Vec<u64> = Vec::new();
        for mask in 0..(1u64 << space.size()) {
            if ev.eval(&space.team(mask), formula)? {
                satisfying.push(mask);
            }
        }
        for &a in &satisfying {
            for &b in &satisfying {
                if b <= a {
                    continue;
                }
                let union = space.team(a | b);
                if !ev.eval(&union, formula)? {
                    return Ok(PropertyVerdict {
                        property: "union-closure",
                        holds: false,
                        counterexample: Some(Counterexample::Union {
                            left: space.team(a),
                            right: space.team(b),
                        }),
                        coverage: SearchCoverage::Exhaustive,
                    });
                }
            }
        }
        return Ok(PropertyVerdict {
            property: "union-closure",
            holds: true,
            counterexample: None,
            coverage: SearchCoverage::Exhaustive,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(search.seed);
    let coverage = SearchCoverage::Randomized {
        seed: search.seed,
        trials: search.trials,
    };
    for _ in 0..search.trials {
        let left = space.random_team(&mut rng, search.max_rows);
        let right = space.random_team(&mut rng, search.max_rows);
        if !ev.eval(&left, formula)? || !ev.eval(&right, formula)? {
            continue;
        }
        let union = left.union(&right)?;
        if !ev.eval(&union, formula)? {
            return Ok(PropertyVerdict {
                property: "union-closure",
                holds: false,
                counterexample: Some(Counterexample::Union { left, right }),
                coverage,
            });
        }
    }
    Ok(PropertyVerdict {
        property: "union-closure",
        holds: true,
        counterexample: None,
        coverage,
    })
}

/// Search for a team whose verdict differs from the conjunction of its
/// singleton subteams' verdicts.
pub fn check_flatness(
    structure: &Structure,
    formula: &Formula,
    domain: &[String],
    search: PropertySearch,
) -> Result<PropertyVerdict> {
    check_team_domain(formula, domain)?;
    let space = TeamSpace::new(structure, domain);
    let mut ev = Evaluator::new(structure, search.options);

    let flatness_verdict = |ev: &mut Evaluator, team: Team| -> Result<Option<Counterexample>> {
        let whole = ev.eval(&team, formula)?;
        let mut rows = true;
        for row in team.rows() {
            if !ev.eval(&team.with_rows([row.clone()]), formula)? {
                rows = false;
                break;
            }
        }
        Ok(if whole == rows {
            None
        } else {
            Some(Counterexample::Flatness {
                team,
                team_verdict: whole,
                rows_verdict: rows,
            })
        })
    };

    let team_count = tuple_count(2, space.size()).unwrap_or(u64::MAX);
    if space.size() < 64 && team_count <= search.max_iterations {
        for mask in 0..(1u64 << space.size()) {
            if let Some(cx) = flatness_verdict(&mut ev, space.team(mask))? {
                return Ok(PropertyVerdict {
                    property: "flatness",
                    holds: false,
                    counterexample: Some(cx),
                    coverage: SearchCoverage::Exhaustive,
                });
            }
        }
        return Ok(PropertyVerdict {
            property: "flatness",
            holds: true,
            counterexample: None,
            coverage: SearchCoverage::Exhaustive,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(search.seed);
    let coverage = SearchCoverage::Randomized {
        seed: search.seed,
        trials: search.trials,
    };
    for _ in 0..search.trials {
        let team = space.random_team(&mut rng, search.max_rows);
        if let Some(cx) = flatness_verdict(&mut ev, team)? {
            return Ok(PropertyVerdict {
                property: "flatness",
                holds: false,
                counterexample: Some(cx),
                coverage,
            });
        }
    }
    Ok(PropertyVerdict {
        property: "flatness",
        holds: true,
        counterexample: None,
        coverage,
    })
}

/// Search for a team over `extended` (a strict superset of the free
/// variables) whose verdict differs from its restriction's verdict.
pub fn check_locality(
    structure: &Structure,
    formula: &Formula,
    extended: &[String],
    search: PropertySearch,
) -> Result<PropertyVerdict> {
    check_team_domain(formula, extended)?;
    let free = sorted_free_vars(formula);
    {
        let mut ext = extended.to_vec();
        ext.sort();
        ext.dedup();
        if ext == free {
            return Err(Error::PreconditionFailed {
                detail: "extended domain must add a variable beyond the free ones".into(),
            });
        }
    }
    let space = TeamSpace::new(structure, extended);
    let mut ev = Evaluator::new(structure, search.options);

    let locality_verdict = |ev: &mut Evaluator, team: Team| -> Result<Option<Counterexample>> {
        let restricted = team.project(&free)?;
        let outer = ev.eval(&team, formula)?;
        let inner = ev.eval(&restricted, formula)?;
        Ok(if outer == inner {
            None
        } else {
            Some(Counterexample::Locality {
                extended: team,
                restricted,
            })
        })
    };

    let team_count = tuple_count(2, space.size()).unwrap_or(u64::MAX);
    if space.size() < 64 && team_count <= search.max_iterations {
        for mask in 0..(1u64 << space.size()) {
            if let Some(cx) = locality_verdict(&mut ev, space.team(mask))? {
                return Ok(PropertyVerdict {
                    property: "locality",
                    holds: false,
                    counterexample: Some(cx),
                    coverage: SearchCoverage::Exhaustive,
                });
            }
        }
        return Ok(PropertyVerdict {
            property: "locality",
            holds: true,
            counterexample: None,
            coverage: SearchCoverage::Exhaustive,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(search.seed);
    let coverage = SearchCoverage::Randomized {
        seed: search.seed,
        trials: search.trials,
    };
    for _ in 0..search.trials {
        let team = space.random_team(&mut rng, search.max_rows);
        if let Some(cx) = locality_verdict(&mut ev, team)? {
            return Ok(PropertyVerdict {
                property: "locality",
                holds: false,
                counterexample: Some(cx),
                coverage,
            });
        }
    }
    Ok(PropertyVerdict {
        property: "locality",
        holds: true,
        counterexample: None,
        coverage,
    })
}

/// Hunt across structures for a locality violation: domain sizes 1..=max_n,
/// structures in enumeration order, teams over the free variables plus
/// `dummy` in canonical order. Strict-semantics formulas are the intended
/// prey; lax ones should make this return None.
pub fn find_locality_violation(
    signature: &Signature,
    formula: &Formula,
    dummy: &str,
    max_n: usize,
    options: EvalOptions,
) -> Result<Option<(Structure, Team, Team)>> {
    let free = sorted_free_vars(formula);
    if free.iter().any(|v| v == dummy) {
        return Err(Error::PreconditionFailed {
            detail: format!("dummy variable `{dummy}` occurs free in the formula"),
        });
    }
    let mut extended = free.clone();
    extended.push(dummy.to_string());
    extended.sort();
    for n in 1..=max_n {
        let space_size = tuple_count(n, extended.len()).unwrap_or(u64::MAX);
        if space_size > options.budget.max_team_space {
            return Err(Error::BudgetExceeded {
                what: "team space".into(),
                limit: options.budget.max_team_space,
                actual: space_size,
            });
        }
        let rows: Vec<Vec<usize>> = tuples(n, extended.len()).collect();
        for structure in enumerate_structures(signature, n, options.budget.max_structures)? {
            let mut ev = Evaluator::new(&structure, options);
            for mask in 0..(1u64 << rows.len()) {
                let team = Team::new(extended.clone(), masked_subset(&rows, mask))?;
                let restricted = team.project(&free)?;
                if ev.eval(&team, formula)? != ev.eval(&restricted, formula)? {
                    drop(ev);
                    return Ok(Some((structure, team, restricted)));
                }
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval;
    use crate::formula::parse::parse;

    fn pure(n: usize) -> Structure {
        Structure::pure(n).unwrap()
    }

    fn dom(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn empty_team_checker() {
        let m = pure(2);
        let opts = EvalOptions::default();
        for text in ["dep(; x)", "x != x", "inc(x; y) & excl(x; y)", "~. x = x"] {
            let v = check_empty_team(&m, &parse(text).unwrap(), opts).unwrap();
            assert!(v.holds, "{text}");
        }
        assert!(matches!(
            check_empty_team(&m, &parse("~(x = x)").unwrap(), opts),
            Err(Error::FragmentViolation { .. })
        ));
    }

    #[test]
    fn downward_holds_for_dep_and_excl() {
        let m = pure(2);
        let search = PropertySearch::default();
        for text in ["dep(x; y)", "excl(x; y)", "dep(x; y) v excl(y; x)"] {
            let v = check_downward(&m, &parse(text).unwrap(), &dom(&["x", "y"]), search).unwrap();
            assert!(v.holds, "{text}");
            assert_eq!(v.coverage, SearchCoverage::Exhaustive);
        }
    }

    #[test]
    fn downward_fails_for_forced_inclusion() {
        let m = pure(2);
        let search = PropertySearch::default();
        let f = parse("A y inc(y; x)").unwrap();
        let v = check_downward(&m, &f, &dom(&["x"]), search).unwrap();
        assert!(!v.holds);
        let cx = v.counterexample.unwrap();
        assert!(cx.reverify(&m, &f, search.options).unwrap());
        // the first satisfying team in canonical order is the full one
        if let Counterexample::Downward { team, subteam } = &cx {
            assert_eq!(team.len(), 2);
            assert_eq!(subteam.len(), 1);
        } else {
            panic!("wrong counterexample shape");
        }
    }

    #[test]
    fn union_holds_for_inclusion() {
        let m = pure(2);
        let search = PropertySearch::default();
        for text in ["inc(x; y)", "inc(x, y; y, x)", "x = y"] {
            let v =
                check_union_closure(&m, &parse(text).unwrap(), &dom(&["x", "y"]), search).unwrap();
            assert!(v.holds, "{text}");
        }
    }

    #[test]
    fn union_fails_for_constancy() {
        let m = pure(2);
        let search = PropertySearch::default();
        let f = parse("dep(; x)").unwrap();
        let v = check_union_closure(&m, &f, &dom(&["x"]), search).unwrap();
        assert!(!v.holds);
        let cx = v.counterexample.unwrap();
        assert!(cx.reverify(&m, &f, search.options).unwrap());
    }

    #[test]
    fn flatness_split() {
        let m = pure(2);
        let search = PropertySearch::default();
        let sig = Signature::new(vec![("R".into(), 1)], vec![]).unwrap();
        let mr = Structure::new(
            sig,
            2,
            [("R".to_string(), [vec![0]].into_iter().collect())]
                .into_iter()
                .collect(),
            Default::default(),
        )
        .unwrap();
        let v = check_flatness(&mr, &parse("R(x)").unwrap(), &dom(&["x"]), search).unwrap();
        assert!(v.holds);

        let f = parse("dep(x; y)").unwrap();
        let v = check_flatness(&m, &f, &dom(&["x", "y"]), search).unwrap();
        assert!(!v.holds);
        let cx = v.counterexample.unwrap();
        assert!(cx.reverify(&m, &f, search.options).unwrap());
        if let Counterexample::Flatness { rows_verdict, team_verdict, .. } = cx {
            // singletons always satisfy a dependence atom
            assert!(rows_verdict);
            assert!(!team_verdict);
        }
    }

    #[test]
    fn locality_lax_holds_strict_fails() {
        let m = pure(2);
        let search = PropertySearch::default();
        let lax = parse("E z (inc(x; z) & E w (w != x & inc(w; z)))").unwrap();
        let v = check_locality(&m, &lax, &dom(&["x", "u"]), search).unwrap();
        assert!(v.holds);

        let strict = parse("Es z (inc(x; z) & E w (w != x & inc(w; z)))").unwrap();
        let v = check_locality(&m, &strict, &dom(&["x", "u"]), search).unwrap();
        assert!(!v.holds);
        let cx = v.counterexample.unwrap();
        assert!(cx.reverify(&m, &strict, search.options).unwrap());
    }

    #[test]
    fn locality_requires_a_dummy() {
        let m = pure(2);
        let search = PropertySearch::default();
        assert!(matches!(
            check_locality(&m, &parse("x = y").unwrap(), &dom(&["x", "y"]), search),
            Err(Error::PreconditionFailed { .. })
        ));
    }

    #[test]
    fn locality_violation_finder() {
        let opts = EvalOptions::default();
        let strict = parse("Es z (inc(x; z) & E w (w != x & inc(w; z)))").unwrap();
        let found = find_locality_violation(&Signature::empty(), &strict, "u", 3, opts)
            .unwrap()
            .expect("strict splitting should break locality");
        let (m, team, restricted) = found;
        assert_eq!(m.domain_size(), 2);
        assert_eq!(team.vars(), ["u".to_string(), "x".into()]);
        assert_ne!(
            eval(&m, &team, &strict).unwrap(),
            eval(&m, &restricted, &strict).unwrap()
        );

        let lax = parse("E z (inc(x; z) & E w (w != x & inc(w; z)))").unwrap();
        assert!(find_locality_violation(&Signature::empty(), &lax, "u", 2, opts)
            .unwrap()
            .is_none());
    }

    #[test]
    fn sentences_are_local() {
        let m = pure(2);
        let search = PropertySearch::default();
        let f = parse("E x E y (x != y)").unwrap();
        let v = check_locality(&m, &f, &dom(&["u"]), search).unwrap();
        assert!(v.holds);
    }

    #[test]
    fn randomized_mode_reports_seed() {
        // three variables over n=3: 2^27 teams forces sampling
        let m = pure(3);
        let search = PropertySearch {
            trials: 50,
            ..PropertySearch::default()
        };
        let v = check_flatness(
            &m,
            &parse("x = y v y = z").unwrap(),
            &dom(&["x", "y", "z"]),
            search,
        )
        .unwrap();
        assert!(v.holds);
        assert_eq!(
            v.coverage,
            SearchCoverage::Randomized {
                seed: search.seed,
                trials: 50
            }
        );
    }
}
