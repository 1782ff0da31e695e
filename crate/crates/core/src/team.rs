//! Assignments and teams.
//!
//! A team is a set of assignments over a fixed variable domain. Variables are
//! kept in sorted order and rows are column-aligned to that order, so two
//! teams describing the same set of assignments compare equal regardless of
//! how their columns were listed on input.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::enumerate::tuples;
use crate::error::{Error, Result};

/// A single assignment: a finite map from variable names to domain elements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    vars: Vec<String>,
    values: Vec<usize>,
}

impl Assignment {
    pub fn new(vars: Vec<String>, values: Vec<usize>) -> Result<Self> {
        if vars.len() != values.len() {
            return Err(Error::RowLengthMismatch {
                expected: vars.len(),
                got: values.len(),
            });
        }
        let mut seen = BTreeSet::new();
        for v in &vars {
            if !seen.insert(v.clone()) {
                return Err(Error::DuplicateVariable { name: v.clone() });
            }
        }
        Ok(Assignment { vars, values })
    }

    pub fn empty() -> Self {
        Assignment {
            vars: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn get(&self, name: &str) -> Option<usize> {
        self.vars
            .iter()
            .position(|v| v == name)
            .map(|i| self.values[i])
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn values(&self) -> &[usize] {
        &self.values
    }

    /// The assignment with `name` (re)bound to `value`.
    pub fn bind(&self, name: &str, value: usize) -> Assignment {
        let mut out = self.clone();
        match out.vars.iter().position(|v| v == name) {
            Some(i) => out.values[i] = value,
            None => {
                out.vars.push(name.to_string());
                out.values.push(value);
            }
        }
        out
    }
}

/// A set of assignments sharing one variable domain.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Team {
    vars: Vec<String>,
    rows: BTreeSet<Vec<usize>>,
}

/// Sorted deduplicated copy of `vars`; errors on duplicates.
fn canonical_vars(vars: &[String]) -> Result<Vec<String>> {
    let mut sorted: Vec<String> = vars.to_vec();
    sorted.sort();
    for pair in sorted.windows(2) {
        if pair[0] == pair[1] {
            return Err(Error::DuplicateVariable {
                name: pair[0].clone(),
            });
        }
    }
    Ok(sorted)
}

impl Team {
    /// Build a team from rows column-aligned with `vars` (any order; columns
    /// are permuted into sorted variable order internally).
    pub fn new(vars: Vec<String>, rows: impl IntoIterator<Item = Vec<usize>>) -> Result<Self> {
        let sorted = canonical_vars(&vars)?;
        // perm[i] = index in `vars` of the i-th sorted variable
        let perm: Vec<usize> = sorted
            .iter()
            .map(|v| vars.iter().position(|w| w == v).unwrap())
            .collect();
        let mut out_rows = BTreeSet::new();
        for row in rows {
            if row.len() != vars.len() {
                return Err(Error::RowLengthMismatch {
                    expected: vars.len(),
                    got: row.len(),
                });
            }
            out_rows.insert(perm.iter().map(|&i| row[i]).collect());
        }
        Ok(Team {
            vars: sorted,
            rows: out_rows,
        })
    }

    /// The empty team over `vars`.
    pub fn empty(vars: Vec<String>) -> Result<Self> {
        Team::new(vars, std::iter::empty())
    }

    /// The team of all assignments `vars -> 0..domain_size`.
    pub fn full(vars: Vec<String>, domain_size: usize) -> Result<Self> {
        let width = vars.len();
        Team::new(vars, tuples(domain_size, width))
    }

    /// The team containing exactly `assignment`, with domain `assignment`'s
    /// variables.
    pub fn singleton(assignment: &Assignment) -> Result<Self> {
        Team::new(
            assignment.vars().to_vec(),
            std::iter::once(assignment.values().to_vec()),
        )
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn rows(&self) -> &BTreeSet<Vec<usize>> {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn col(&self, var: &str) -> Option<usize> {
        self.vars.iter().position(|v| v == var)
    }

    /// Column indices for `names`, erroring on variables outside the domain.
    pub fn cols(&self, names: &[String]) -> Result<Vec<usize>> {
        names
            .iter()
            .map(|name| {
                self.col(name)
                    .ok_or_else(|| Error::UnboundVariable { name: name.clone() })
            })
            .collect()
    }

    pub fn contains(&self, row: &[usize]) -> bool {
        self.rows.contains(row)
    }

    pub fn assignment(&self, row: &[usize]) -> Assignment {
        Assignment {
            vars: self.vars.clone(),
            values: row.to_vec(),
        }
    }

    pub fn assignments(&self) -> impl Iterator<Item = Assignment> + '_ {
        self.rows.iter().map(|row| self.assignment(row))
    }

    /// Check every row value lies in `0..domain_size`.
    pub fn check_domain(&self, domain_size: usize) -> Result<()> {
        for row in &self.rows {
            for &v in row {
                if v >= domain_size {
                    return Err(Error::ValueOutOfRange {
                        value: v,
                        domain: domain_size,
                        place: Some("team row".into()),
                    });
                }
            }
        }
        Ok(())
    }

    /// Restriction to a variable subset: keep the named columns, drop the
    /// rest, and deduplicate rows.
    pub fn project(&self, vars: &[String]) -> Result<Team> {
        let sorted = canonical_vars(vars)?;
        let idx: Vec<usize> = sorted
            .iter()
            .map(|v| {
                self.col(v)
                    .ok_or_else(|| Error::UnboundVariable { name: v.clone() })
            })
            .collect::<Result<_>>()?;
        let rows: BTreeSet<Vec<usize>> = self
            .rows
            .iter()
            .map(|row| idx.iter().map(|&i| row[i]).collect())
            .collect();
        Ok(Team { vars: sorted, rows })
    }

    /// Duplication: every row extended with every element for `var`. If `var`
    /// is already in the domain its column is overwritten.
    pub fn duplicate(&self, domain_size: usize, var: &str) -> Team {
        self.map_extend(var, |_| (0..domain_size).collect())
    }

    /// Constant supplement: every row extended with the single value `a`.
    pub fn supplement_const(&self, a: usize, var: &str) -> Team {
        self.map_extend(var, |_| vec![a])
    }

    /// Supplement along `f`: each row extended with each element of its image
    /// under `f`. `f` must name every row of this team exactly, with nonempty
    /// images.
    pub fn supplement(&self, f: &SupplementFunction) -> Result<Team> {
        f.check_against(self)?;
        Ok(self.map_extend(&f.var, |row| f.choices[row].iter().copied().collect()))
    }

    /// Shared worker for duplicate/supplement: extends (or overwrites) the
    /// `var` column with `images(row)`.
    fn map_extend(&self, var: &str, images: impl Fn(&[usize]) -> Vec<usize>) -> Team {
        let existing = self.col(var);
        let mut vars = self.vars.clone();
        let slot = match existing {
            Some(i) => i,
            None => {
                let i = vars
                    .binary_search(&var.to_string())
                    .expect_err("var not present");
                vars.insert(i, var.to_string());
                i
            }
        };
        let mut rows = BTreeSet::new();
        for row in &self.rows {
            for a in images(row) {
                let mut new_row = row.clone();
                match existing {
                    Some(_) => new_row[slot] = a,
                    None => new_row.insert(slot, a),
                }
                rows.insert(new_row);
            }
        }
        Team { vars, rows }
    }

    /// Union of two teams over the same variable domain.
    pub fn union(&self, other: &Team) -> Result<Team> {
        if self.vars != other.vars {
            return Err(Error::ShapeMismatch {
                detail: format!(
                    "team domains differ: {:?} vs {:?}",
                    self.vars, other.vars
                ),
            });
        }
        Ok(Team {
            vars: self.vars.clone(),
            rows: self.rows.union(&other.rows).cloned().collect(),
        })
    }

    /// The subteam of rows selected by `keep`.
    pub fn filter_rows(&self, keep: impl Fn(&[usize]) -> bool) -> Team {
        Team {
            vars: self.vars.clone(),
            rows: self.rows.iter().filter(|r| keep(r)).cloned().collect(),
        }
    }

    /// Team with the given raw rows (already column-aligned to this team's
    /// sorted variable order).
    pub fn with_rows(&self, rows: impl IntoIterator<Item = Vec<usize>>) -> Team {
        Team {
            vars: self.vars.clone(),
            rows: rows.into_iter().collect(),
        }
    }
}

impl fmt::Display for Team {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, row) in self.rows.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "(")?;
            for (j, (var, val)) in self.vars.iter().zip(row).enumerate() {
                if j > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{var}:{val}")?;
            }
            write!(f, ")")?;
        }
        write!(f, "}}")
    }
}

/// A choice of nonempty image for every row of a team, used to extend the
/// team along a new variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupplementFunction {
    var: String,
    /// keyed by full rows of the team being supplemented
    choices: BTreeMap<Vec<usize>, BTreeSet<usize>>,
}

impl SupplementFunction {
    pub fn new(var: String, choices: BTreeMap<Vec<usize>, BTreeSet<usize>>) -> Result<Self> {
        for (row, image) in &choices {
            if image.is_empty() {
                return Err(Error::EmptyImage);
            }
            let _ = row;
        }
        Ok(SupplementFunction { var, choices })
    }

    pub fn var(&self) -> &str {
        &self.var
    }

    pub fn choices(&self) -> &BTreeMap<Vec<usize>, BTreeSet<usize>> {
        &self.choices
    }

    /// Every row of `team` must have exactly one (nonempty) image.
    pub fn check_against(&self, team: &Team) -> Result<()> {
        if self.choices.len() != team.len() {
            return Err(Error::SupplementMismatch {
                detail: format!(
                    "{} images for {} team rows",
                    self.choices.len(),
                    team.len()
                ),
            });
        }
        for row in team.rows() {
            if !self.choices.contains_key(row) {
                return Err(Error::SupplementMismatch {
                    detail: format!("no image for row {row:?}"),
                });
            }
        }
        Ok(())
    }
}

// --- JSON file formats ----------------------------------------------------

#[derive(Serialize, Deserialize)]
struct TeamFile {
    vars: Vec<String>,
    rows: Vec<Vec<usize>>,
}

impl Serialize for Team {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        TeamFile {
            vars: self.vars.clone(),
            rows: self.rows.iter().cloned().collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Team {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let file = TeamFile::deserialize(deserializer)?;
        Team::new(file.vars, file.rows).map_err(D::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct ChoiceEntry {
    row: Vec<usize>,
    image: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct SupplementFile {
    var: String,
    choice: Vec<ChoiceEntry>,
}

impl Serialize for SupplementFunction {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        SupplementFile {
            var: self.var.clone(),
            choice: self
                .choices
                .iter()
                .map(|(row, image)| ChoiceEntry {
                    row: row.clone(),
                    image: image.iter().copied().collect(),
                })
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SupplementFunction {
    fn deserialize<D: Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let file = SupplementFile::deserialize(deserializer)?;
        let mut choices = BTreeMap::new();
        for entry in file.choice {
            if choices
                .insert(entry.row.clone(), entry.image.into_iter().collect())
                .is_some()
            {
                return Err(D::Error::custom(format!(
                    "duplicate row {:?} in supplement",
                    entry.row
                )));
            }
        }
        SupplementFunction::new(file.var, choices).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn team_xy() -> Team {
        Team::new(
            vec!["x".into(), "y".into()],
            vec![vec![0, 1], vec![1, 1], vec![2, 0]],
        )
        .unwrap()
    }

    #[test]
    fn columns_canonicalized() {
        // same assignments listed with swapped columns
        let a = Team::new(vec!["y".into(), "x".into()], vec![vec![1, 0], vec![0, 2]]).unwrap();
        let b = Team::new(vec!["x".into(), "y".into()], vec![vec![0, 1], vec![2, 0]]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.vars(), ["x".to_string(), "y".to_string()]);
    }

    #[test]
    fn duplicate_rows_collapse() {
        let t = Team::new(vec!["x".into()], vec![vec![1], vec![1], vec![0]]).unwrap();
        assert_eq!(t.len(), 2);
    }

    #[test]
    fn empty_domain_team() {
        // over no variables there are exactly two teams
        let none = Team::empty(vec![]).unwrap();
        let unit = Team::new(vec![], vec![vec![]]).unwrap();
        assert!(none.is_empty());
        assert_eq!(unit.len(), 1);
        assert_ne!(none, unit);
        // projecting a nonempty team onto no variables gives the unit team
        assert_eq!(team_xy().project(&[]).unwrap(), unit);
        assert_eq!(none.clone().project(&[]).unwrap(), none);
    }

    #[test]
    fn project_drops_and_dedups() {
        let t = team_xy();
        let p = t.project(&["y".into()]).unwrap();
        assert_eq!(p, Team::new(vec!["y".into()], vec![vec![0], vec![1]]).unwrap());
        assert!(t.project(&["z".into()]).is_err());
    }

    #[test]
    fn duplicate_and_const_supplement() {
        let t = Team::new(vec!["x".into()], vec![vec![0], vec![1]]).unwrap();
        let d = t.duplicate(2, "y");
        assert_eq!(
            d,
            Team::new(
                vec!["x".into(), "y".into()],
                vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]],
            )
            .unwrap()
        );
        let c = t.supplement_const(1, "y");
        assert_eq!(
            c,
            Team::new(vec!["x".into(), "y".into()], vec![vec![0, 1], vec![1, 1]]).unwrap()
        );
        // overwriting an existing column
        let o = t.supplement_const(0, "x");
        assert_eq!(o, Team::new(vec!["x".into()], vec![vec![0]]).unwrap());
    }

    #[test]
    fn duplicate_keeps_sorted_columns() {
        let t = Team::new(vec!["y".into()], vec![vec![1]]).unwrap();
        let d = t.duplicate(2, "x");
        assert_eq!(d.vars(), ["x".to_string(), "y".to_string()]);
        assert!(d.contains(&[0, 1]));
        assert!(d.contains(&[1, 1]));
    }

    #[test]
    fn supplement_function_applies() {
        let t = Team::new(vec!["x".into()], vec![vec![0], vec![1]]).unwrap();
        let f = SupplementFunction::new(
            "y".into(),
            [
                (vec![0], [0, 1].into_iter().collect()),
                (vec![1], [1].into_iter().collect()),
            ]
            .into_iter()
            .collect(),
        )
        .unwrap();
        let s = t.supplement(&f).unwrap();
        assert_eq!(
            s,
            Team::new(
                vec!["x".into(), "y".into()],
                vec![vec![0, 0], vec![0, 1], vec![1, 1]],
            )
            .unwrap()
        );
    }

    #[test]
    fn supplement_validation() {
        let t = Team::new(vec!["x".into()], vec![vec![0], vec![1]]).unwrap();
        // missing a row
        let f = SupplementFunction::new(
            "y".into(),
            [(vec![0], [0].into_iter().collect())].into_iter().collect(),
        )
        .unwrap();
        assert!(matches!(
            t.supplement(&f),
            Err(Error::SupplementMismatch { .. })
        ));
        // empty image rejected at construction
        assert_eq!(
            SupplementFunction::new(
                "y".into(),
                [(vec![0], BTreeSet::new())].into_iter().collect(),
            )
            .unwrap_err(),
            Error::EmptyImage
        );
    }

    #[test]
    fn union_requires_same_domain() {
        let a = Team::new(vec!["x".into()], vec![vec![0]]).unwrap();
        let b = Team::new(vec!["x".into()], vec![vec![1]]).unwrap();
        assert_eq!(
            a.union(&b).unwrap(),
            Team::new(vec!["x".into()], vec![vec![0], vec![1]]).unwrap()
        );
        let c = Team::new(vec!["y".into()], vec![vec![0]]).unwrap();
        assert!(a.union(&c).is_err());
    }

    #[test]
    fn full_team_size() {
        let t = Team::full(vec!["x".into(), "y".into()], 3).unwrap();
        assert_eq!(t.len(), 9);
    }

    #[test]
    fn json_round_trip() {
        let t = team_xy();
        let text = serde_json::to_string(&t).unwrap();
        let back: Team = serde_json::from_str(&text).unwrap();
        assert_eq!(t, back);
        // reversed column order on input canonicalizes
        let swapped: Team = serde_json::from_str(
            r#"{"vars":["y","x"],"rows":[[1,0],[1,1],[0,2]]}"#,
        )
        .unwrap();
        assert_eq!(swapped, t);
    }

    #[test]
    fn supplement_json_round_trip() {
        let f = SupplementFunction::new(
            "y".into(),
            [
                (vec![0], [0, 1].into_iter().collect()),
                (vec![1], [1].into_iter().collect()),
            ]
            .into_iter()
            .collect(),
        )
        .unwrap();
        let text = serde_json::to_string(&f).unwrap();
        let back: SupplementFunction = serde_json::from_str(&text).unwrap();
        assert_eq!(f, back);
    }
}
