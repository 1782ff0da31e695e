//! Ultrafilters on finite index sets, ultraproducts of structures and
//! teams, and checkers for the identities the product construction
//! satisfies.
//!
//! On a finite index set every ultrafilter is principal, so the products
//! here are isomorphic to one factor. The point of the module is that the
//! constructions are computed from their definitions (full product,
//! explicit quotient) and the shortcuts are what get *checked*, not what
//! gets built.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use serde::Serialize;

use crate::enumerate::Odometer;
use crate::error::{Error, Result};
use crate::eval::{EvalOptions, Evaluator};
use crate::formula::{fragment_of, Formula};
use crate::model::Structure;
use crate::team::{SupplementFunction, Team};

/// Largest index set an ultrafilter may live on (sets are stored as
/// bitmasks, and families of structures are enumerated in full).
pub const MAX_INDEX_SIZE: usize = 16;

/// Largest full product domain before quotienting.
pub const MAX_PRODUCT_TUPLES: u64 = 4096;

/// An ultrafilter on {0, .., index_size-1}, stored extensionally as the
/// family of member sets. On a finite index set this is always the
/// principal filter at some index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ultrafilter {
    index_size: usize,
    members: BTreeSet<u64>,
    generator: usize,
}

fn mask_of(set: &BTreeSet<usize>, index_size: usize) -> Result<u64> {
    let mut mask = 0u64;
    for &i in set {
        if i >= index_size {
            return Err(Error::ValueOutOfRange {
                value: i,
                domain: index_size,
                place: Some("index set".into()),
            });
        }
        mask |= 1 << i;
    }
    Ok(mask)
}

impl Ultrafilter {
    /// The filter of all sets containing `generator`.
    pub fn principal(index_size: usize, generator: usize) -> Result<Ultrafilter> {
        if index_size == 0 || index_size > MAX_INDEX_SIZE {
            return Err(Error::BudgetExceeded {
                what: "index set size".into(),
                limit: MAX_INDEX_SIZE as u64,
                actual: index_size as u64,
            });
        }
        if generator >= index_size {
            return Err(Error::ValueOutOfRange {
                value: generator,
                domain: index_size,
                place: Some("principal generator".into()),
            });
        }
        let members = (0..(1u64 << index_size))
            .filter(|mask| mask & (1 << generator) != 0)
            .collect();
        Ok(Ultrafilter {
            index_size,
            members,
            generator,
        })
    }

    /// Extend a family of sets with the finite intersection property to an
    /// ultrafilter: the principal filter at the least element of the
    /// family's intersection. An empty intersection means no ultrafilter on
    /// this finite index set extends the family.
    pub fn from_fip(index_size: usize, family: &[BTreeSet<usize>]) -> Result<Ultrafilter> {
        if index_size == 0 || index_size > MAX_INDEX_SIZE {
            return Err(Error::BudgetExceeded {
                what: "index set size".into(),
                limit: MAX_INDEX_SIZE as u64,
                actual: index_size as u64,
            });
        }
        let full: u64 = (1u64 << index_size) - 1;
        let mut intersection = full;
        for set in family {
            intersection &= mask_of(set, index_size)?;
        }
        if intersection == 0 {
            return Err(Error::NonPrincipalRequired);
        }
        Self::principal(index_size, intersection.trailing_zeros() as usize)
    }

    pub fn index_size(&self) -> usize {
        self.index_size
    }

    pub fn generator(&self) -> usize {
        self.generator
    }

    pub fn contains_mask(&self, mask: u64) -> bool {
        self.members.contains(&mask)
    }

    pub fn contains(&self, set: &BTreeSet<usize>) -> Result<bool> {
        Ok(self.contains_mask(mask_of(set, self.index_size)?))
    }

    /// Check the defining axioms by brute force over the power set: the
    /// empty set is out, the index set is in, members are closed under
    /// intersection and superset, and of every set and its complement
    /// exactly one is a member.
    pub fn verify_axioms(&self) -> bool {
        let full: u64 = (1u64 << self.index_size) - 1;
        if self.members.contains(&0) || !self.members.contains(&full) {
            return false;
        }
        for mask in 0..=full {
            if self.members.contains(&mask) == self.members.contains(&(full ^ mask)) {
                return false;
            }
        }
        for &a in &self.members {
            for &b in &self.members {
                if !self.members.contains(&(a & b)) {
                    return false;
                }
            }
            for mask in 0..=full {
                if mask & a == a && !self.members.contains(&mask) {
                    return false;
                }
            }
        }
        true
    }
}

/// A family of structures over one signature, optionally each carrying a
/// team over one shared variable domain.
#[derive(Debug, Clone)]
pub struct StructureFamily {
    structures: Vec<Structure>,
    teams: Option<Vec<Team>>,
}

impl StructureFamily {
    pub fn new(structures: Vec<Structure>) -> Result<StructureFamily> {
        if structures.is_empty() {
            return Err(Error::ShapeMismatch {
                detail: "a structure family needs at least one index".into(),
            });
        }
        if structures.len() > MAX_INDEX_SIZE {
            return Err(Error::BudgetExceeded {
                what: "index set size".into(),
                limit: MAX_INDEX_SIZE as u64,
                actual: structures.len() as u64,
            });
        }
        let sig = structures[0].signature();
        if structures.iter().any(|m| m.signature() != sig) {
            return Err(Error::ShapeMismatch {
                detail: "family members disagree on the signature".into(),
            });
        }
        Ok(StructureFamily {
            structures,
            teams: None,
        })
    }

    pub fn with_teams(mut self, teams: Vec<Team>) -> Result<StructureFamily> {
        if teams.len() != self.structures.len() {
            return Err(Error::ShapeMismatch {
                detail: format!(
                    "{} teams for {} structures",
                    teams.len(),
                    self.structures.len()
                ),
            });
        }
        let vars = teams[0].vars().to_vec();
        for (team, structure) in teams.iter().zip(&self.structures) {
            if team.vars() != vars {
                return Err(Error::ShapeMismatch {
                    detail: "family teams disagree on the variable domain".into(),
                });
            }
            team.check_domain(structure.domain_size())?;
        }
        self.teams = Some(teams);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.structures.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn structures(&self) -> &[Structure] {
        &self.structures
    }

    pub fn teams(&self) -> Option<&[Team]> {
        self.teams.as_deref()
    }

    fn teams_required(&self) -> Result<&[Team]> {
        self.teams.as_deref().ok_or_else(|| Error::ShapeMismatch {
            detail: "this operation needs a team per index".into(),
        })
    }
}

/// The quotient of the full product domain by U-almost-everywhere equality.
/// Class ids follow the lexicographic order of first representatives.
#[derive(Debug, Clone, Serialize)]
pub struct Quotient {
    #[serde(skip)]
    class_of: BTreeMap<Vec<usize>, usize>,
    representatives: Vec<Vec<usize>>,
}

impl Quotient {
    pub fn class_of(&self, tuple: &[usize]) -> Option<usize> {
        self.class_of.get(tuple).copied()
    }

    pub fn representatives(&self) -> &[Vec<usize>] {
        &self.representatives
    }

    pub fn len(&self) -> usize {
        self.representatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.representatives.is_empty()
    }
}

fn agreement_mask(f: &[usize], g: &[usize]) -> u64 {
    f.iter()
        .zip(g)
        .enumerate()
        .filter(|(_, (a, b))| a == b)
        .fold(0u64, |mask, (i, _)| mask | (1 << i))
}

/// The ultraproduct of the family: domain = product tuples quotiented by
/// agreement on a U-member, relations and functions decided coordinatewise
/// through U. Also returns the quotient map.
pub fn product_structure(
    family: &StructureFamily,
    u: &Ultrafilter,
) -> Result<(Structure, Quotient)> {
    let structures = family.structures();
    if u.index_size() != structures.len() {
        return Err(Error::ShapeMismatch {
            detail: format!(
                "ultrafilter on {} indices, family of {}",
                u.index_size(),
                structures.len()
            ),
        });
    }
    let sizes: Vec<usize> = structures.iter().map(|m| m.domain_size()).collect();
    sizes
        .iter()
        .try_fold(1u64, |acc, &n| {
            acc.checked_mul(n as u64)
                .filter(|&v| v <= MAX_PRODUCT_TUPLES)
        })
        .ok_or(Error::BudgetExceeded {
            what: "product tuple space".into(),
            limit: MAX_PRODUCT_TUPLES,
            actual: u64::MAX,
        })?;

    let mut class_of: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
    let mut representatives: Vec<Vec<usize>> = Vec::new();
    for tuple in Odometer::new(sizes.clone()) {
        let class = representatives
            .iter()
            .position(|rep| u.contains_mask(agreement_mask(rep, &tuple)));
        match class {
            Some(c) => {
                class_of.insert(tuple, c);
            }
            None => {
                class_of.insert(tuple.clone(), representatives.len());
                representatives.push(tuple);
            }
        }
    }
    let quotient = Quotient {
        class_of,
        representatives,
    };

    let signature = structures[0].signature().clone();
    let domain_size = quotient.len();

    let mut relations: BTreeMap<String, BTreeSet<Vec<usize>>> = BTreeMap::new();
    for (name, arity) in signature.relations() {
        let mut table = BTreeSet::new();
        for classes in Odometer::new(vec![domain_size; *arity]) {
            let mut holds_at = 0u64;
            for (i, m) in structures.iter().enumerate() {
                let coord: Vec<usize> = classes
                    .iter()
                    .map(|&c| quotient.representatives[c][i])
                    .collect();
                if m.holds(name, &coord)? {
                    holds_at |= 1 << i;
                }
            }
            if u.contains_mask(holds_at) {
                table.insert(classes);
            }
        }
        relations.insert(name.clone(), table);
    }

    let mut functions: BTreeMap<String, BTreeMap<Vec<usize>, usize>> = BTreeMap::new();
    for (name, arity) in signature.functions() {
        let mut table = BTreeMap::new();
        for classes in Odometer::new(vec![domain_size; *arity]) {
            let mut value_tuple = Vec::with_capacity(structures.len());
            for (i, m) in structures.iter().enumerate() {
                let coord: Vec<usize> = classes
                    .iter()
                    .map(|&c| quotient.representatives[c][i])
                    .collect();
                value_tuple.push(m.apply(name, &coord)?);
            }
            let value = quotient
                .class_of(&value_tuple)
                .expect("value tuple lies in the product");
            table.insert(classes, value);
        }
        functions.insert(name.clone(), table);
    }

    let product = Structure::new(signature, domain_size, relations, functions)?;
    Ok((product, quotient))
}

/// Assignments into the product: every family (s_i) of assignments whose
/// set of indices with s_i in X_i is a U-member, quotiented pointwise.
pub fn team_ultraproduct(
    family: &StructureFamily,
    u: &Ultrafilter,
    quotient: &Quotient,
) -> Result<Team> {
    let teams = family.teams_required()?;
    team_ultraproduct_of(family.structures(), teams, u, quotient)
}

fn team_ultraproduct_of(
    structures: &[Structure],
    teams: &[Team],
    u: &Ultrafilter,
    quotient: &Quotient,
) -> Result<Team> {
    let vars = teams[0].vars().to_vec();
    let width = vars.len();
    // all assignments over `vars` per index, as rows
    let per_index: Vec<Vec<Vec<usize>>> = structures
        .iter()
        .map(|m| Odometer::new(vec![m.domain_size(); width]).collect())
        .collect();
    let family_space = per_index.iter().try_fold(1u64, |acc, rows| {
        acc.checked_mul(rows.len() as u64)
            .filter(|&v| v <= 1 << 20)
    });
    if family_space.is_none() {
        return Err(Error::BudgetExceeded {
            what: "assignment family space".into(),
            limit: 1 << 20,
            actual: u64::MAX,
        });
    }

    let mut rows: BTreeSet<Vec<usize>> = BTreeSet::new();
    for choice in Odometer::new(per_index.iter().map(|r| r.len()).collect::<Vec<_>>()) {
        let mut support = 0u64;
        for (i, (team, rows_i)) in teams.iter().zip(&per_index).enumerate() {
            if team.contains(&rows_i[choice[i]]) {
                support |= 1 << i;
            }
        }
        if !u.contains_mask(support) {
            continue;
        }
        let row: Vec<usize> = (0..width)
            .map(|v| {
                let tuple: Vec<usize> = (0..structures.len())
                    .map(|i| per_index[i][choice[i]][v])
                    .collect();
                quotient.class_of(&tuple).expect("tuple lies in the product")
            })
            .collect();
        rows.insert(row);
    }
    Team::new(vars, rows)
}

/// One instance of a product identity to check. The family's teams are the
/// X_i; each case carries whatever else its identity mentions.
#[derive(Debug, Clone)]
pub enum TeamLemmaCase {
    /// Product of pointwise unions vs union of products; `other` is the
    /// second family of teams.
    Union { other: Vec<Team> },
    /// Pointwise disjointness on a U-member forces disjoint products.
    Disjointness { other: Vec<Team> },
    /// Supplementing each X_i with the fixed element a_i vs supplementing
    /// the product with the class of (a_i).
    ConstSupplement { values: Vec<usize>, var: String },
    /// Duplicating each X_i over its whole domain vs duplicating the
    /// product over the product domain.
    Duplicate { var: String },
    /// Supplementing each X_i with F_i vs supplementing the product with
    /// the induced function.
    Supplement {
        functions: Vec<SupplementFunction>,
        var: String,
    },
}

/// Both sides of a checked identity.
#[derive(Debug, Clone, Serialize)]
pub struct LemmaReport {
    pub kind: &'static str,
    pub equal: bool,
    pub left: Team,
    pub right: Team,
    /// For the supplement case: whether pointwise singleton functions
    /// induced a singleton function, when they were singleton.
    pub moreover: Option<bool>,
}

pub fn check_team_lemma(
    family: &StructureFamily,
    u: &Ultrafilter,
    case: &TeamLemmaCase,
) -> Result<LemmaReport> {
    let teams = family.teams_required()?;
    let structures = family.structures();
    let (product, quotient) = product_structure(family, u)?;
    let product_team = team_ultraproduct_of(structures, teams, u, &quotient)?;

    match case {
        TeamLemmaCase::Union { other } => {
            check_other_family(structures, teams, other)?;
            let pointwise: Vec<Team> = teams
                .iter()
                .zip(other)
                .map(|(x, y)| x.union(y))
                .collect::<Result<_>>()?;
            let left = team_ultraproduct_of(structures, &pointwise, u, &quotient)?;
            let other_product = team_ultraproduct_of(structures, other, u, &quotient)?;
            let right = product_team.union(&other_product)?;
            Ok(LemmaReport {
                kind: "union",
                equal: left == right,
                left,
                right,
                moreover: None,
            })
        }
        TeamLemmaCase::Disjointness { other } => {
            check_other_family(structures, teams, other)?;
            let mut disjoint_at = 0u64;
            for (i, (x, y)) in teams.iter().zip(other).enumerate() {
                if x.rows().intersection(y.rows()).next().is_none() {
                    disjoint_at |= 1 << i;
                }
            }
            if !u.contains_mask(disjoint_at) {
                return Err(Error::PreconditionFailed {
                    detail: "teams are not pointwise disjoint on a member of the ultrafilter"
                        .into(),
                });
            }
            let left = product_team;
            let right = team_ultraproduct_of(structures, other, u, &quotient)?;
            let equal = left.rows().intersection(right.rows()).next().is_none();
            Ok(LemmaReport {
                kind: "disjointness",
                equal,
                left,
                right,
                moreover: None,
            })
        }
        TeamLemmaCase::ConstSupplement { values, var } => {
            if values.len() != structures.len() {
                return Err(Error::ShapeMismatch {
                    detail: "one element per index required".into(),
                });
            }
            for (value, m) in values.iter().zip(structures) {
                if *value >= m.domain_size() {
                    return Err(Error::ValueOutOfRange {
                        value: *value,
                        domain: m.domain_size(),
                        place: Some("constant supplement".into()),
                    });
                }
            }
            let pointwise: Vec<Team> = teams
                .iter()
                .zip(values)
                .map(|(x, &a)| x.supplement_const(a, var))
                .collect();
            let left = team_ultraproduct_of(structures, &pointwise, u, &quotient)?;
            let class = quotient.class_of(values).expect("values lie in the product");
            let right = product_team.supplement_const(class, var);
            Ok(LemmaReport {
                kind: "const-supplement",
                equal: left == right,
                left,
                right,
                moreover: None,
            })
        }
        TeamLemmaCase::Duplicate { var } => {
            let pointwise: Vec<Team> = teams
                .iter()
                .zip(structures)
                .map(|(x, m)| x.duplicate(m.domain_size(), var))
                .collect();
            let left = team_ultraproduct_of(structures, &pointwise, u, &quotient)?;
            let right = product_team.duplicate(product.domain_size(), var);
            Ok(LemmaReport {
                kind: "duplicate",
                equal: left == right,
                left,
                right,
                moreover: None,
            })
        }
        TeamLemmaCase::Supplement { functions, var } => {
            if functions.len() != structures.len() {
                return Err(Error::ShapeMismatch {
                    detail: "one supplement function per index required".into(),
                });
            }
            for ((f, x), m) in functions.iter().zip(teams).zip(structures) {
                if f.var() != var {
                    return Err(Error::ShapeMismatch {
                        detail: "supplement functions disagree on the variable".into(),
                    });
                }
                f.check_against(x)?;
                for value in f.choices().values().flatten() {
                    if *value >= m.domain_size() {
                        return Err(Error::ValueOutOfRange {
                            value: *value,
                            domain: m.domain_size(),
                            place: Some("supplement image".into()),
                        });
                    }
                }
            }
            let pointwise: Vec<Team> = teams
                .iter()
                .zip(functions)
                .map(|(x, f)| x.supplement(f))
                .collect::<Result<_>>()?;
            let left = team_ultraproduct_of(structures, &pointwise, u, &quotient)?;

            // induce the product-level function: a class is in the image of
            // a product row exactly when its representative hits F_i(s_i)
            // on a U-member of indices
            let j = u.generator();
            let mut choices: BTreeMap<Vec<usize>, BTreeSet<usize>> = BTreeMap::new();
            for row in product_team.rows() {
                // lift through the principal coordinate
                let lifted: Vec<usize> = row
                    .iter()
                    .map(|&class| quotient.representatives()[class][j])
                    .collect();
                let image_j = functions[j]
                    .choices()
                    .get(&lifted)
                    .ok_or_else(|| Error::ShapeMismatch {
                        detail: "product row does not lift into the generator's team".into(),
                    })?;
                let mut image = BTreeSet::new();
                for class in 0..product.domain_size() {
                    if image_j.contains(&quotient.representatives()[class][j]) {
                        image.insert(class);
                    }
                }
                choices.insert(row.clone(), image);
            }
            let induced = SupplementFunction::new(var.clone(), choices)?;
            let right = product_team.supplement(&induced)?;

            let pointwise_singleton = functions[j]
                .choices()
                .values()
                .all(|image| image.len() == 1);
            let induced_singleton = induced.choices().values().all(|image| image.len() == 1);
            Ok(LemmaReport {
                kind: "supplement",
                equal: left == right,
                left,
                right,
                moreover: Some(!pointwise_singleton || induced_singleton),
            })
        }
    }
}

fn check_other_family(structures: &[Structure], teams: &[Team], other: &[Team]) -> Result<()> {
    if other.len() != structures.len() {
        return Err(Error::ShapeMismatch {
            detail: "one team per index required".into(),
        });
    }
    let vars = teams[0].vars();
    for (y, m) in other.iter().zip(structures) {
        if y.vars() != vars {
            return Err(Error::ShapeMismatch {
                detail: "teams disagree on the variable domain".into(),
            });
        }
        y.check_domain(m.domain_size())?;
    }
    Ok(())
}

/// Both sides of the product satisfaction equivalence for one formula.
#[derive(Debug, Clone, Serialize)]
pub struct LosReport {
    /// The set of indices whose factor satisfies the formula is a member
    /// of the ultrafilter.
    pub lhs: bool,
    /// The product satisfies the formula on the product team.
    pub rhs: bool,
    /// The formula's fragment transfers in both directions even over
    /// infinite index sets; on finite index sets lhs = rhs regardless.
    pub strong_claimed: bool,
}

pub fn check_los(
    family: &StructureFamily,
    u: &Ultrafilter,
    formula: &Formula,
    options: EvalOptions,
) -> Result<LosReport> {
    let teams = family.teams_required()?;
    let mut sat = 0u64;
    for (i, (m, x)) in family.structures().iter().zip(teams).enumerate() {
        if Evaluator::new(m, options).eval(x, formula)? {
            sat |= 1 << i;
        }
    }
    let lhs = u.contains_mask(sat);
    let (product, quotient) = product_structure(family, u)?;
    let product_team = team_ultraproduct(family, u, &quotient)?;
    let rhs = Evaluator::new(&product, options).eval(&product_team, formula)?;
    Ok(LosReport {
        lhs,
        rhs,
        strong_claimed: fragment_of(formula).strong_los_eligible(),
    })
}

/// Verify that the product at a principal ultrafilter is isomorphic to the
/// generating factor via class -> representative coordinate, carrying the
/// product team to that factor's team when teams are present.
pub fn check_principal_isomorphism(family: &StructureFamily, u: &Ultrafilter) -> Result<bool> {
    let (product, quotient) = product_structure(family, u)?;
    let j = u.generator();
    let factor = &family.structures()[j];
    if product.domain_size() != factor.domain_size() {
        return Ok(false);
    }
    let map: Vec<usize> = (0..product.domain_size())
        .map(|c| quotient.representatives()[c][j])
        .collect();
    {
        let mut seen = vec![false; factor.domain_size()];
        for &v in &map {
            if seen[v] {
                return Ok(false);
            }
            seen[v] = true;
        }
    }
    let signature = product.signature().clone();
    for (name, arity) in signature.relations() {
        for classes in Odometer::new(vec![product.domain_size(); *arity]) {
            let mapped: Vec<usize> = classes.iter().map(|&c| map[c]).collect();
            if product.holds(name, &classes)? != factor.holds(name, &mapped)? {
                return Ok(false);
            }
        }
    }
    for (name, arity) in signature.functions() {
        for classes in Odometer::new(vec![product.domain_size(); *arity]) {
            let mapped: Vec<usize> = classes.iter().map(|&c| map[c]).collect();
            if map[product.apply(name, &classes)?] != factor.apply(name, &mapped)? {
                return Ok(false);
            }
        }
    }
    if let Some(teams) = family.teams() {
        let product_team = team_ultraproduct(family, u, &quotient)?;
        let mapped = product_team.with_rows(
            product_team
                .rows()
                .iter()
                .map(|row| row.iter().map(|&c| map[c]).collect::<Vec<usize>>()),
        );
        if mapped != teams[j] {
            return Ok(false);
        }
    }
    Ok(true)
}
