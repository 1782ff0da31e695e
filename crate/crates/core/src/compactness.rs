//! Coherent families of teams, materialized first-order.
//!
//! Given a finite set of team formulas over an enumerated variable list,
//! this module generates a first-order sentence set over an expanded
//! vocabulary (one predicate per formula, one per index subset) whose
//! models are exactly the coherent directed systems of teams; expands a
//! satisfying model and team into such a structure; and merges a coherent
//! system back into a single team, reporting where merging breaks down
//! when the system is not coherent enough.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::enumerate::{tuple_count, tuples};
use crate::error::{Error, Result};
use crate::eso::{crosscheck, eval_fo, EsoBudget, RelationEnv, FO};
use crate::eval::{EvalOptions, Evaluator};
use crate::formula::{infer_signature, Formula, Term};
use crate::model::{Signature, Structure};
use crate::team::Team;

/// Index sets stay single-digit so predicate names like `S_01` are
/// unambiguous; the powerset family also caps the affordable size.
pub const MAX_KAPPA: usize = 8;

const MAX_MERGE_TUPLES: u64 = 1 << 20;

/// A finite formula set together with a fixed enumeration of the variables
/// it may mention. Position in the enumeration is the variable's index;
/// each formula carries the index set of its free variables.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaSpec {
    formulas: Vec<Formula>,
    enumeration: Vec<String>,
    index_sets: Vec<BTreeSet<usize>>,
}

impl GammaSpec {
    pub fn new(formulas: Vec<Formula>, enumeration: Vec<String>) -> Result<Self> {
        if enumeration.len() > MAX_KAPPA {
            return Err(Error::BudgetExceeded {
                what: "variable enumeration".into(),
                limit: MAX_KAPPA as u64,
                actual: enumeration.len() as u64,
            });
        }
        let mut seen = BTreeSet::new();
        for v in &enumeration {
            if !seen.insert(v.clone()) {
                return Err(Error::DuplicateVariable { name: v.clone() });
            }
        }
        let mut index_sets = Vec::with_capacity(formulas.len());
        for formula in &formulas {
            let mut indices = BTreeSet::new();
            for name in formula.free_vars() {
                match enumeration.iter().position(|v| *v == name) {
                    Some(i) => {
                        indices.insert(i);
                    }
                    None => return Err(Error::UnboundVariable { name }),
                }
            }
            index_sets.push(indices);
        }
        Ok(GammaSpec {
            formulas,
            enumeration,
            index_sets,
        })
    }

    /// Enumeration defaulted to the sorted union of free variables.
    pub fn from_formulas(formulas: Vec<Formula>) -> Result<Self> {
        let union: BTreeSet<String> = formulas.iter().flat_map(|f| f.free_vars()).collect();
        GammaSpec::new(formulas, union.into_iter().collect())
    }

    pub fn kappa(&self) -> usize {
        self.enumeration.len()
    }

    pub fn formulas(&self) -> &[Formula] {
        &self.formulas
    }

    pub fn enumeration(&self) -> &[String] {
        &self.enumeration
    }

    pub fn index_sets(&self) -> &[BTreeSet<usize>] {
        &self.index_sets
    }

    /// Indices actually used by some formula.
    pub fn used_indices(&self) -> BTreeSet<usize> {
        self.index_sets.iter().flatten().copied().collect()
    }

    /// All subsets of the used indices, smallest first, ties by contents.
    pub fn family(&self) -> Vec<BTreeSet<usize>> {
        let used: Vec<usize> = self.used_indices().into_iter().collect();
        let mut family: Vec<BTreeSet<usize>> = (0u64..(1 << used.len()))
            .map(|mask| {
                used.iter()
                    .enumerate()
                    .filter(|(bit, _)| mask & (1 << bit) != 0)
                    .map(|(_, &i)| i)
                    .collect()
            })
            .collect();
        family.sort_by_key(|s| (s.len(), s.iter().copied().collect::<Vec<_>>()));
        family
    }

    fn vars_at(&self, indices: &BTreeSet<usize>) -> Vec<String> {
        indices.iter().map(|&i| self.enumeration[i].clone()).collect()
    }
}

/// Predicate name for the formula at `position` in the spec.
pub fn formula_rel_name(position: usize) -> String {
    format!("R_{position}")
}

/// Predicate name for an index set, digits in increasing order.
pub fn index_set_rel_name(indices: &BTreeSet<usize>) -> String {
    let digits: String = indices.iter().map(|i| i.to_string()).collect();
    format!("S_{digits}")
}

/// The generated sentence set: nonemptiness of each formula predicate,
/// the link between formula predicates and their index-set predicates,
/// and the projection coherence of the index-set family.
#[derive(Debug, Clone)]
pub struct DeltaGamma {
    pub signature: Signature,
    pub family: Vec<BTreeSet<usize>>,
    pub nonemptiness: Vec<FO>,
    pub linking: Vec<FO>,
    pub projection: Vec<FO>,
}

impl DeltaGamma {
    pub fn sentences(&self) -> impl Iterator<Item = &FO> {
        self.nonemptiness
            .iter()
            .chain(&self.linking)
            .chain(&self.projection)
    }

    pub fn sentence_count(&self) -> usize {
        self.nonemptiness.len() + self.linking.len() + self.projection.len()
    }
}

fn rel_on(name: &str, vars: &[String]) -> FO {
    FO::Rel(
        name.to_string(),
        vars.iter().map(|v| Term::var(v.clone())).collect(),
    )
}

fn forall_chain(vars: &[String], body: FO) -> FO {
    vars.iter()
        .rev()
        .fold(body, |acc, v| FO::forall(v.clone(), acc))
}

fn exists_chain(vars: &[String], body: FO) -> FO {
    vars.iter()
        .rev()
        .fold(body, |acc, v| FO::exists(v.clone(), acc))
}

/// Instantiate the three schemas over the spec's powerset family.
pub fn build_delta_gamma(spec: &GammaSpec) -> Result<DeltaGamma> {
    let family = spec.family();
    let base = infer_signature(spec.formulas())?;
    let mut extra: Vec<(String, usize)> = spec
        .index_sets()
        .iter()
        .enumerate()
        .map(|(i, indices)| (formula_rel_name(i), indices.len()))
        .collect();
    extra.extend(
        family
            .iter()
            .map(|indices| (index_set_rel_name(indices), indices.len())),
    );
    let signature = base.extend_relations(&extra)?;

    let mut nonemptiness = Vec::new();
    let mut linking = Vec::new();
    for (i, indices) in spec.index_sets().iter().enumerate() {
        let rel = formula_rel_name(i);
        let fresh: Vec<String> = (0..indices.len()).map(|j| format!("v{j}")).collect();
        nonemptiness.push(exists_chain(&fresh, rel_on(&rel, &fresh)));
        let xs = spec.vars_at(indices);
        linking.push(forall_chain(
            &xs,
            FO::iff(rel_on(&rel, &xs), rel_on(&index_set_rel_name(indices), &xs)),
        ));
    }

    let mut projection = Vec::new();
    for j_set in &family {
        for i_set in &family {
            if !i_set.is_subset(j_set) {
                continue;
            }
            let xs_i = spec.vars_at(i_set);
            let xs_j = spec.vars_at(j_set);
            let bound: Vec<String> = spec.vars_at(&(j_set - i_set));
            projection.push(forall_chain(
                &xs_i,
                FO::iff(
                    rel_on(&index_set_rel_name(i_set), &xs_i),
                    exists_chain(&bound, rel_on(&index_set_rel_name(j_set), &xs_j)),
                ),
            ));
        }
    }

    Ok(DeltaGamma {
        signature,
        family,
        nonemptiness,
        linking,
        projection,
    })
}

/// Both sides of the coherence characterization, each computed on its own:
/// the sentence set's truth in the structure, and the three table-level
/// conditions it is meant to capture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct IntuitionReport {
    /// Every generated sentence holds in the structure.
    pub models_delta: bool,
    /// Each formula predicate is nonempty.
    pub cond1: bool,
    /// Each formula predicate equals its index-set predicate.
    pub cond2: bool,
    /// Every index-set predicate is the projection of every larger one.
    pub cond3: bool,
}

impl IntuitionReport {
    /// The characterization itself: sentence truth coincides with the
    /// conjunction of the table conditions.
    pub fn agrees(&self) -> bool {
        self.models_delta == (self.cond1 && self.cond2 && self.cond3)
    }
}

fn table_of<'a>(m: &'a Structure, name: &str) -> Result<&'a BTreeSet<Vec<usize>>> {
    m.relation_table(name)
        .ok_or_else(|| Error::UnknownSymbol { name: name.into() })
}

/// Positions of `i_set`'s members within the increasing enumeration of
/// `j_set`; requires `i_set` ⊆ `j_set`.
fn positions_within(i_set: &BTreeSet<usize>, j_set: &BTreeSet<usize>) -> Vec<usize> {
    let ordered: Vec<usize> = j_set.iter().copied().collect();
    i_set
        .iter()
        .map(|i| ordered.iter().position(|j| j == i).unwrap())
        .collect()
}

fn project_rows(rows: &BTreeSet<Vec<usize>>, positions: &[usize]) -> BTreeSet<Vec<usize>> {
    rows.iter()
        .map(|row| positions.iter().map(|&p| row[p]).collect())
        .collect()
}

/// Evaluate the generated sentences in `m` and, independently, the three
/// table conditions they characterize. The caller compares the sides.
pub fn check_intuition(m: &Structure, spec: &GammaSpec) -> Result<IntuitionReport> {
    let delta = build_delta_gamma(spec)?;
    for (name, arity) in delta.signature.relations() {
        match m.signature().relation_arity(name) {
            Some(found) if found == *arity => {}
            Some(found) => {
                return Err(Error::ArityMismatch {
                    symbol: name.clone(),
                    expected: *arity,
                    got: found,
                })
            }
            None => return Err(Error::UnknownSymbol { name: name.clone() }),
        }
    }

    let env = RelationEnv::new();
    let mut models_delta = true;
    for sentence in delta.sentences() {
        if !eval_fo(m, &env, sentence)? {
            models_delta = false;
            break;
        }
    }

    let mut cond1 = true;
    let mut cond2 = true;
    for (i, indices) in spec.index_sets().iter().enumerate() {
        let r_table = table_of(m, &formula_rel_name(i))?;
        if r_table.is_empty() {
            cond1 = false;
        }
        if r_table != table_of(m, &index_set_rel_name(indices))? {
            cond2 = false;
        }
    }

    let mut cond3 = true;
    'pairs: for j_set in &delta.family {
        let j_table = table_of(m, &index_set_rel_name(j_set))?;
        for i_set in &delta.family {
            if !i_set.is_subset(j_set) {
                continue;
            }
            let i_table = table_of(m, &index_set_rel_name(i_set))?;
            let projected = project_rows(j_table, &positions_within(i_set, j_set));
            if projected != *i_table {
                cond3 = false;
                break 'pairs;
            }
        }
    }

    Ok(IntuitionReport {
        models_delta,
        cond1,
        cond2,
        cond3,
    })
}

/// Rows of `team` at the columns named by `indices` of the enumeration,
/// in increasing index order.
fn team_rows_at(team: &Team, spec: &GammaSpec, indices: &BTreeSet<usize>) -> BTreeSet<Vec<usize>> {
    let cols: Vec<usize> = indices
        .iter()
        .map(|&i| {
            team.vars()
                .iter()
                .position(|v| *v == spec.enumeration[i])
                .unwrap()
        })
        .collect();
    team.rows()
        .iter()
        .map(|row| cols.iter().map(|&c| row[c]).collect())
        .collect()
}

/// Expand `m` with one predicate per formula and per index set, each
/// interpreted by the matching projection of `team`. The team must be
/// nonempty, cover the enumeration, and satisfy every formula; the result
/// is verified to satisfy the generated sentences, and each formula's
/// translated sentence is crosschecked on the projected team.
pub fn expand_model(
    m: &Structure,
    team: &Team,
    spec: &GammaSpec,
    options: EvalOptions,
    eso_budget: EsoBudget,
) -> Result<Structure> {
    if team.is_empty() {
        return Err(Error::PreconditionFailed {
            detail: "expansion needs a nonempty team".into(),
        });
    }
    for var in spec.enumeration() {
        if !team.vars().contains(var) {
            return Err(Error::PreconditionFailed {
                detail: format!("team does not cover enumerated variable `{var}`"),
            });
        }
    }
    {
        let mut evaluator = Evaluator::new(m, options);
        for formula in spec.formulas() {
            if !evaluator.eval(team, formula)? {
                return Err(Error::PreconditionFailed {
                    detail: format!("formula `{formula}` does not hold on the team"),
                });
            }
        }
    }

    let delta = build_delta_gamma(spec)?;
    let mut extra: Vec<(String, usize, BTreeSet<Vec<usize>>)> = Vec::new();
    for (i, indices) in spec.index_sets().iter().enumerate() {
        extra.push((
            formula_rel_name(i),
            indices.len(),
            team_rows_at(team, spec, indices),
        ));
    }
    for indices in &delta.family {
        extra.push((
            index_set_rel_name(indices),
            indices.len(),
            team_rows_at(team, spec, indices),
        ));
    }
    let expansion = m.with_relations(extra)?;

    let report = check_intuition(&expansion, spec)?;
    if !(report.models_delta && report.cond1 && report.cond2 && report.cond3) {
        return Err(Error::PostconditionFailed {
            detail: format!("expansion fails the coherence check: {report:?}"),
        });
    }
    for formula in spec.formulas() {
        let fv: Vec<String> = formula.free_vars().into_iter().collect();
        let restricted = team.project(&fv)?;
        let report = crosscheck(m, &restricted, formula, options, eso_budget)?;
        if !(report.direct && report.via_eso) {
            return Err(Error::PostconditionFailed {
                detail: format!(
                    "translated sentence disagrees on `{formula}`: direct {} translated {}",
                    report.direct, report.via_eso
                ),
            });
        }
    }
    Ok(expansion)
}

/// A family of relations indexed by subsets of an enumerated variable
/// list, each of matching arity, over a fixed domain size.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoherenceSystem {
    enumeration: Vec<String>,
    domain_size: usize,
    family: BTreeMap<BTreeSet<usize>, BTreeSet<Vec<usize>>>,
}

impl CoherenceSystem {
    pub fn new(
        enumeration: Vec<String>,
        domain_size: usize,
        family: BTreeMap<BTreeSet<usize>, BTreeSet<Vec<usize>>>,
    ) -> Result<Self> {
        if enumeration.len() > MAX_KAPPA {
            return Err(Error::BudgetExceeded {
                what: "variable enumeration".into(),
                limit: MAX_KAPPA as u64,
                actual: enumeration.len() as u64,
            });
        }
        let mut seen = BTreeSet::new();
        for v in &enumeration {
            if !seen.insert(v.clone()) {
                return Err(Error::DuplicateVariable { name: v.clone() });
            }
        }
        for (indices, rows) in &family {
            if let Some(&max) = indices.iter().max() {
                if max >= enumeration.len() {
                    return Err(Error::ValueOutOfRange {
                        value: max,
                        domain: enumeration.len(),
                        place: Some("family index set".into()),
                    });
                }
            }
            for row in rows {
                if row.len() != indices.len() {
                    return Err(Error::RowLengthMismatch {
                        expected: indices.len(),
                        got: row.len(),
                    });
                }
                for &value in row {
                    if value >= domain_size {
                        return Err(Error::ValueOutOfRange {
                            value,
                            domain: domain_size,
                            place: Some(format!(
                                "relation for {}",
                                index_set_rel_name(indices)
                            )),
                        });
                    }
                }
            }
        }
        Ok(CoherenceSystem {
            enumeration,
            domain_size,
            family,
        })
    }

    /// Read the index-set tables back off an expanded structure.
    pub fn from_expansion(expansion: &Structure, spec: &GammaSpec) -> Result<Self> {
        let mut family = BTreeMap::new();
        for indices in spec.family() {
            let table = table_of(expansion, &index_set_rel_name(&indices))?.clone();
            family.insert(indices, table);
        }
        CoherenceSystem::new(
            spec.enumeration().to_vec(),
            expansion.domain_size(),
            family,
        )
    }

    pub fn enumeration(&self) -> &[String] {
        &self.enumeration
    }

    pub fn domain_size(&self) -> usize {
        self.domain_size
    }

    pub fn family(&self) -> &BTreeMap<BTreeSet<usize>, BTreeSet<Vec<usize>>> {
        &self.family
    }
}

/// Outcome of merging a system into one team: the merged team when every
/// family relation is recovered by projection, otherwise the smallest
/// index set whose relation the merge fails to reproduce.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MergeReport {
    pub team: Option<Team>,
    pub verified: bool,
    pub failure: Option<Vec<usize>>,
}

/// Intersect the family's constraints over full-width tuples: a tuple
/// joins the merge when each of its projections lies in the matching
/// relation. Verification then projects the merge back and compares.
pub fn merge_teams(system: &CoherenceSystem) -> Result<MergeReport> {
    let kappa = system.enumeration.len();
    let n = system.domain_size;
    let space = tuple_count(n, kappa).unwrap_or(u64::MAX);
    if space > MAX_MERGE_TUPLES {
        return Err(Error::BudgetExceeded {
            what: "merge tuple space".into(),
            limit: MAX_MERGE_TUPLES,
            actual: space,
        });
    }

    let full: BTreeSet<usize> = (0..kappa).collect();
    let projections: Vec<(&BTreeSet<usize>, Vec<usize>, &BTreeSet<Vec<usize>>)> = system
        .family
        .iter()
        .map(|(indices, rows)| (indices, positions_within(indices, &full), rows))
        .collect();

    let merged: BTreeSet<Vec<usize>> = tuples(n, kappa)
        .filter(|tuple| {
            projections.iter().all(|(_, positions, rows)| {
                let projected: Vec<usize> = positions.iter().map(|&p| tuple[p]).collect();
                rows.contains(&projected)
            })
        })
        .collect();

    let mut failing: Vec<&BTreeSet<usize>> = Vec::new();
    for (indices, positions, rows) in &projections {
        if project_rows(&merged, positions) != **rows {
            failing.push(indices);
        }
    }
    failing.sort_by_key(|s| (s.len(), s.iter().copied().collect::<Vec<_>>()));

    match failing.first() {
        None => Ok(MergeReport {
            team: Some(Team::new(system.enumeration.clone(), merged)?),
            verified: true,
            failure: None,
        }),
        Some(least) => Ok(MergeReport {
            team: None,
            verified: false,
            failure: Some(least.iter().copied().collect()),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse::parse;

    fn pure(n: usize) -> Structure {
        Structure::pure(n).unwrap()
    }

    fn names(vs: &[&str]) -> Vec<String> {
        vs.iter().map(|s| s.to_string()).collect()
    }

    fn spec_of(texts: &[&str], enumeration: &[&str]) -> GammaSpec {
        let formulas = texts.iter().map(|t| parse(t).unwrap()).collect();
        GammaSpec::new(formulas, names(enumeration)).unwrap()
    }

    fn set(indices: &[usize]) -> BTreeSet<usize> {
        indices.iter().copied().collect()
    }

    fn rows(data: &[&[usize]]) -> BTreeSet<Vec<usize>> {
        data.iter().map(|r| r.to_vec()).collect()
    }

    /// Rebuild a structure with one relation table swapped out.
    fn with_table(m: &Structure, name: &str, table: BTreeSet<Vec<usize>>) -> Structure {
        let mut relations = BTreeMap::new();
        for (rel, _) in m.signature().relations() {
            relations.insert(rel.clone(), m.relation_table(rel).unwrap().clone());
        }
        relations.insert(name.to_string(), table);
        let mut functions = BTreeMap::new();
        for (f, _) in m.signature().functions() {
            functions.insert(f.clone(), m.function_table(f).unwrap().clone());
        }
        Structure::new(
            m.signature().clone(),
            m.domain_size(),
            relations,
            functions,
        )
        .unwrap()
    }

    #[test]
    fn sentence_counts_follow_the_family() {
        let spec = spec_of(&["dep(x0; x1)"], &["x0", "x1"]);
        let delta = build_delta_gamma(&spec).unwrap();
        assert_eq!(delta.family.len(), 4);
        assert_eq!(delta.nonemptiness.len(), 1);
        assert_eq!(delta.linking.len(), 1);
        // one projection sentence per nested pair: 3^2
        assert_eq!(delta.projection.len(), 9);
        assert!(delta
            .signature
            .relations()
            .iter()
            .any(|(name, arity)| name == "S_01" && *arity == 2));
        assert!(delta
            .signature
            .relations()
            .iter()
            .any(|(name, arity)| name == "S_" && *arity == 0));

        let empty = GammaSpec::new(vec![], vec![]).unwrap();
        let trivial = build_delta_gamma(&empty).unwrap();
        assert_eq!(trivial.sentence_count(), 1);

        let shared = spec_of(&["dep(x; y)", "inc(y; z)"], &["x", "y", "z"]);
        let linked = build_delta_gamma(&shared).unwrap();
        assert_eq!(linked.family.len(), 8);
        assert_eq!(linked.projection.len(), 27);
    }

    #[test]
    fn expansion_satisfies_the_sentences() {
        let m = pure(2);
        let spec = spec_of(&["A y inc(y; x)", "E y E z y != z"], &["x"]);
        let team = Team::full(names(&["x"]), 2).unwrap();
        let expansion = expand_model(
            &m,
            &team,
            &spec,
            EvalOptions::default(),
            EsoBudget::default(),
        )
        .unwrap();

        assert_eq!(
            expansion.relation_table("R_0").unwrap(),
            &rows(&[&[0], &[1]])
        );
        // the sentence's predicate is nullary and nonempty
        assert_eq!(expansion.relation_table("R_1").unwrap(), &rows(&[&[]]));

        let report = check_intuition(&expansion, &spec).unwrap();
        assert!(report.models_delta && report.cond1 && report.cond2 && report.cond3);
        assert!(report.agrees());
    }

    #[test]
    fn trivial_expansions() {
        let m = pure(2);
        let opts = EvalOptions::default();
        let budget = EsoBudget::default();

        // singleton team
        let spec = spec_of(&["dep(x; y)"], &["x", "y"]);
        let team = Team::new(names(&["x", "y"]), [vec![1, 0]]).unwrap();
        let expansion = expand_model(&m, &team, &spec, opts, budget).unwrap();
        assert_eq!(expansion.relation_table("S_01").unwrap().len(), 1);
        assert!(check_intuition(&expansion, &spec).unwrap().agrees());

        // no formulas at all
        let empty = GammaSpec::new(vec![], names(&["x"])).unwrap();
        let expansion = expand_model(&m, &team.project(&names(&["x"])).unwrap(), &empty, opts, budget)
            .unwrap();
        let report = check_intuition(&expansion, &empty).unwrap();
        assert!(report.models_delta && report.agrees());
    }

    #[test]
    fn expansion_preconditions() {
        let m = pure(2);
        let opts = EvalOptions::default();
        let budget = EsoBudget::default();
        let spec = spec_of(&["dep(; x)"], &["x"]);

        let team = Team::full(names(&["x"]), 2).unwrap();
        let err = expand_model(&m, &team, &spec, opts, budget).unwrap_err();
        assert!(matches!(err, Error::PreconditionFailed { ref detail }
            if detail.contains("dep(; x)")));

        let empty = Team::empty(names(&["x"])).unwrap();
        assert!(expand_model(&m, &empty, &spec, opts, budget).is_err());

        let wrong_cols = Team::full(names(&["y"]), 2).unwrap();
        assert!(expand_model(&m, &wrong_cols, &spec, opts, budget).is_err());
    }

    #[test]
    fn intuition_is_a_biconditional_under_mutations() {
        let m = pure(2);
        let spec = spec_of(&["dep(x; y)"], &["x", "y"]);
        let team = Team::new(names(&["x", "y"]), [vec![0, 1], vec![1, 0]]).unwrap();
        let expansion = expand_model(
            &m,
            &team,
            &spec,
            EvalOptions::default(),
            EsoBudget::default(),
        )
        .unwrap();

        // empty formula predicate: nonemptiness schema fails
        let mutated = with_table(&expansion, "R_0", BTreeSet::new());
        let report = check_intuition(&mutated, &spec).unwrap();
        assert!(!report.models_delta && !report.cond1);
        assert!(report.agrees());

        // formula predicate out of step with its index-set predicate
        let mutated = with_table(&expansion, "R_0", rows(&[&[0, 1]]));
        let report = check_intuition(&mutated, &spec).unwrap();
        assert!(!report.models_delta && !report.cond2);
        assert!(report.agrees());

        // break a projection: S_0 no longer the shadow of S_01
        let mutated = with_table(&expansion, "S_0", rows(&[&[0]]));
        let report = check_intuition(&mutated, &spec).unwrap();
        assert!(!report.models_delta && !report.cond3);
        assert!(report.agrees());

        // grow S_01 past R_0: both the link and the projections break
        let mutated = with_table(&expansion, "S_01", rows(&[&[0, 1], &[1, 0], &[0, 0]]));
        let report = check_intuition(&mutated, &spec).unwrap();
        assert!(!report.models_delta && !report.cond2);
        assert!(report.agrees());
    }

    #[test]
    fn merge_round_trips_an_expansion() {
        let m = pure(2);
        let spec = spec_of(&["dep(x; y)", "inc(y; x)"], &["x", "y"]);
        let team = Team::new(names(&["x", "y"]), [vec![0, 0], vec![1, 1]]).unwrap();
        let expansion = expand_model(
            &m,
            &team,
            &spec,
            EvalOptions::default(),
            EsoBudget::default(),
        )
        .unwrap();
        let system = CoherenceSystem::from_expansion(&expansion, &spec).unwrap();
        let report = merge_teams(&system).unwrap();
        assert!(report.verified);
        assert_eq!(report.failure, None);
        assert_eq!(report.team.unwrap(), team);
    }

    #[test]
    fn merge_direct_example() {
        let family: BTreeMap<_, _> = [
            (set(&[]), rows(&[&[]])),
            (set(&[0]), rows(&[&[0], &[1]])),
            (set(&[1]), rows(&[&[0], &[1]])),
            (set(&[0, 1]), rows(&[&[0, 0], &[1, 1]])),
        ]
        .into_iter()
        .collect();
        let system = CoherenceSystem::new(names(&["x0", "x1"]), 2, family).unwrap();
        let report = merge_teams(&system).unwrap();
        assert!(report.verified);
        let team = report.team.unwrap();
        assert_eq!(team.rows(), &rows(&[&[0, 0], &[1, 1]]));
    }

    #[test]
    fn merge_detects_incoherence() {
        // the pair relation cannot reproduce Y_1 = {0,1}
        let family: BTreeMap<_, _> = [
            (set(&[0]), rows(&[&[0]])),
            (set(&[1]), rows(&[&[0], &[1]])),
            (set(&[0, 1]), rows(&[&[0, 0]])),
        ]
        .into_iter()
        .collect();
        let system = CoherenceSystem::new(names(&["x0", "x1"]), 2, family).unwrap();
        let report = merge_teams(&system).unwrap();
        assert!(!report.verified);
        assert_eq!(report.team, None);
        assert_eq!(report.failure, Some(vec![1]));
    }

    #[test]
    fn merge_without_the_top_level_can_fail() {
        // pairwise disequality over two elements: every pair relation is
        // satisfiable, no triple is
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
        let system = CoherenceSystem::new(names(&["x0", "x1", "x2"]), 2, family).unwrap();
        let report = merge_teams(&system).unwrap();
        assert!(!report.verified);
        // nothing merges at all, so even the empty projection is missing
        assert_eq!(report.failure, Some(vec![]));
    }

    #[test]
    fn system_validation() {
        assert!(CoherenceSystem::new(
            names(&["x"]),
            2,
            [(set(&[0]), rows(&[&[0, 1]]))].into_iter().collect(),
        )
        .is_err());
        assert!(CoherenceSystem::new(
            names(&["x"]),
            2,
            [(set(&[1]), rows(&[&[0]]))].into_iter().collect(),
        )
        .is_err());
        assert!(CoherenceSystem::new(
            names(&["x"]),
            2,
            [(set(&[0]), rows(&[&[5]]))].into_iter().collect(),
        )
        .is_err());
        let spec = GammaSpec::new(
            vec![parse("P(x9)").unwrap()],
            names(&["x0", "x1", "x2", "x3", "x4", "x5", "x6", "x7", "x9"]),
        );
        assert!(spec.is_err());
    }
}
