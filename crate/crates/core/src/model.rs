//! Signatures and finite structures.
//!
//! Domain elements are `0..n`. Relation tables are sets of tuples; function
//! tables are total maps from tuples to elements. Constants are 0-ary
//! functions. The JSON file format is documented in the README.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::enumerate::{tuple_count, tuples, Odometer};
use crate::error::{Error, Result};
use crate::formula::Term;
use crate::team::Assignment;

/// Named relation and function symbols with arities. Names are unique across
/// the whole signature.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Signature {
    relations: Vec<(String, usize)>,
    functions: Vec<(String, usize)>,
}

impl Signature {
    pub fn new(relations: Vec<(String, usize)>, functions: Vec<(String, usize)>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for (name, _) in relations.iter().chain(functions.iter()) {
            if !seen.insert(name.clone()) {
                return Err(Error::DuplicateSymbol { name: name.clone() });
            }
        }
        Ok(Signature {
            relations,
            functions,
        })
    }

    pub fn empty() -> Self {
        Signature::default()
    }

    pub fn relations(&self) -> &[(String, usize)] {
        &self.relations
    }

    pub fn functions(&self) -> &[(String, usize)] {
        &self.functions
    }

    pub fn relation_arity(&self, name: &str) -> Option<usize> {
        self.relations
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, k)| *k)
    }

    pub fn function_arity(&self, name: &str) -> Option<usize> {
        self.functions
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, k)| *k)
    }

    pub fn has_symbol(&self, name: &str) -> bool {
        self.relation_arity(name).is_some() || self.function_arity(name).is_some()
    }

    /// Signature extended with more relation symbols; errors on name clashes.
    pub fn extend_relations(&self, extra: &[(String, usize)]) -> Result<Signature> {
        let mut relations = self.relations.clone();
        relations.extend(extra.iter().cloned());
        Signature::new(relations, self.functions.clone())
    }
}

/// A finite structure: a signature, a domain `0..n`, and tables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Structure {
    signature: Signature,
    domain_size: usize,
    relations: BTreeMap<String, BTreeSet<Vec<usize>>>,
    functions: BTreeMap<String, BTreeMap<Vec<usize>, usize>>,
}

impl Structure {
    /// Missing relation tables default to empty; every function table must be
    /// total over its tuple space.
    pub fn new(
        signature: Signature,
        domain_size: usize,
        relations: BTreeMap<String, BTreeSet<Vec<usize>>>,
        functions: BTreeMap<String, BTreeMap<Vec<usize>, usize>>,
    ) -> Result<Self> {
        if domain_size == 0 {
            return Err(Error::PreconditionFailed {
                detail: "domain size must be positive".into(),
            });
        }
        for name in relations.keys() {
            if signature.relation_arity(name).is_none() {
                return Err(Error::UnknownSymbol { name: name.clone() });
            }
        }
        for name in functions.keys() {
            if signature.function_arity(name).is_none() {
                return Err(Error::UnknownSymbol { name: name.clone() });
            }
        }
        let mut rel_tables = BTreeMap::new();
        for (name, arity) in signature.relations() {
            let table = relations.get(name).cloned().unwrap_or_default();
            for tuple in &table {
                if tuple.len() != *arity {
                    return Err(Error::ArityMismatch {
                        symbol: name.clone(),
                        expected: *arity,
                        got: tuple.len(),
                    });
                }
                for &v in tuple {
                    if v >= domain_size {
                        return Err(Error::ValueOutOfRange {
                            value: v,
                            domain: domain_size,
                            place: Some(format!("relation `{name}`")),
                        });
                    }
                }
            }
            rel_tables.insert(name.clone(), table);
        }
        let mut fn_tables = BTreeMap::new();
        for (name, arity) in signature.functions() {
            let table = functions
                .get(name)
                .cloned()
                .ok_or_else(|| Error::FunctionNotTotal { name: name.clone() })?;
            let expected = tuple_count(domain_size, *arity).ok_or_else(|| {
                Error::BudgetExceeded {
                    what: format!("function table for `{name}`"),
                    limit: u64::MAX,
                    actual: u64::MAX,
                }
            })?;
            if table.len() as u64 != expected {
                return Err(Error::FunctionNotTotal { name: name.clone() });
            }
            for (tuple, &value) in &table {
                if tuple.len() != *arity {
                    return Err(Error::ArityMismatch {
                        symbol: name.clone(),
                        expected: *arity,
                        got: tuple.len(),
                    });
                }
                if value >= domain_size || tuple.iter().any(|&v| v >= domain_size) {
                    return Err(Error::ValueOutOfRange {
                        value,
                        domain: domain_size,
                        place: Some(format!("function `{name}`")),
                    });
                }
            }
            fn_tables.insert(name.clone(), table);
        }
        Ok(Structure {
            signature,
            domain_size,
            relations: rel_tables,
            functions: fn_tables,
        })
    }

    /// Structure over the empty signature (pure equality).
    pub fn pure(domain_size: usize) -> Result<Self> {
        Structure::new(
            Signature::empty(),
            domain_size,
            BTreeMap::new(),
            BTreeMap::new(),
        )
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn domain_size(&self) -> usize {
        self.domain_size
    }

    pub fn relation_table(&self, name: &str) -> Option<&BTreeSet<Vec<usize>>> {
        self.relations.get(name)
    }

    pub fn function_table(&self, name: &str) -> Option<&BTreeMap<Vec<usize>, usize>> {
        self.functions.get(name)
    }

    pub fn holds(&self, relation: &str, tuple: &[usize]) -> Result<bool> {
        let arity = self
            .signature
            .relation_arity(relation)
            .ok_or_else(|| Error::UnknownSymbol {
                name: relation.into(),
            })?;
        if tuple.len() != arity {
            return Err(Error::ArityMismatch {
                symbol: relation.into(),
                expected: arity,
                got: tuple.len(),
            });
        }
        Ok(self.relations[relation].contains(tuple))
    }

    pub fn apply(&self, function: &str, args: &[usize]) -> Result<usize> {
        let arity = self
            .signature
            .function_arity(function)
            .ok_or_else(|| Error::UnknownSymbol {
                name: function.into(),
            })?;
        if args.len() != arity {
            return Err(Error::ArityMismatch {
                symbol: function.into(),
                expected: arity,
                got: args.len(),
            });
        }
        Ok(self.functions[function][args])
    }

    /// Value of `term` under `assignment`, by structural induction.
    pub fn eval_term(&self, assignment: &Assignment, term: &Term) -> Result<usize> {
        match term {
            Term::Var(name) => assignment
                .get(name)
                .ok_or_else(|| Error::UnboundVariable { name: name.clone() }),
            Term::App(name, args) => {
                let mut values = Vec::with_capacity(args.len());
                for arg in args {
                    values.push(self.eval_term(assignment, arg)?);
                }
                self.apply(name, &values)
            }
        }
    }

    /// Extend this structure with new relation symbols and tables.
    pub fn with_relations(
        &self,
        extra: Vec<(String, usize, BTreeSet<Vec<usize>>)>,
    ) -> Result<Structure> {
        let names: Vec<(String, usize)> =
            extra.iter().map(|(n, k, _)| (n.clone(), *k)).collect();
        let signature = self.signature.extend_relations(&names)?;
        let mut relations = self.relations.clone();
        for (name, _, table) in extra {
            relations.insert(name, table);
        }
        Structure::new(signature, self.domain_size, relations, self.functions.clone())
    }
}

/// How many structures `enumerate_structures` would yield, or `None` on
/// overflow.
pub fn structure_count(signature: &Signature, domain_size: usize) -> Option<u64> {
    let mut total: u64 = 1;
    for (_, arity) in signature.relations() {
        let cells = tuple_count(domain_size, *arity)?;
        if cells >= 63 {
            return None;
        }
        total = total.checked_mul(1u64 << cells)?;
    }
    for (_, arity) in signature.functions() {
        let cells = tuple_count(domain_size, *arity)?;
        let choices = tuple_count(domain_size, cells as usize)?;
        total = total.checked_mul(choices)?;
    }
    Some(total)
}

/// All structures over `signature` with domain `0..domain_size`, in a fixed
/// canonical order: relation tables advance as ascending bitmasks over the
/// lexicographic tuple space, function tables as mixed-radix counters, with
/// the last symbol in the signature varying fastest.
pub fn enumerate_structures(
    signature: &Signature,
    domain_size: usize,
    max_structures: u64,
) -> Result<Vec<Structure>> {
    let count = structure_count(signature, domain_size).ok_or(Error::BudgetExceeded {
        what: "structure enumeration".into(),
        limit: max_structures,
        actual: u64::MAX,
    })?;
    if count > max_structures {
        return Err(Error::BudgetExceeded {
            what: "structure enumeration".into(),
            limit: max_structures,
            actual: count,
        });
    }

    // Pre-materialize per-symbol tuple spaces.
    let rel_spaces: Vec<(String, Vec<Vec<usize>>)> = signature
        .relations()
        .iter()
        .map(|(n, k)| (n.clone(), tuples(domain_size, *k).collect()))
        .collect();
    let fn_spaces: Vec<(String, Vec<Vec<usize>>)> = signature
        .functions()
        .iter()
        .map(|(n, k)| (n.clone(), tuples(domain_size, *k).collect()))
        .collect();

    let mut sizes: Vec<usize> = Vec::new();
    for (_, space) in &rel_spaces {
        sizes.push(1usize << space.len());
    }
    for (_, space) in &fn_spaces {
        sizes.push(
            tuple_count(domain_size, space.len())
                .expect("counted above") as usize,
        );
    }

    let mut out = Vec::with_capacity(count as usize);
    for choice in Odometer::new(sizes) {
        let mut relations = BTreeMap::new();
        let mut functions = BTreeMap::new();
        let mut idx = 0;
        for (name, space) in &rel_spaces {
            let mask = choice[idx];
            idx += 1;
            let table: BTreeSet<Vec<usize>> = space
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, t)| t.clone())
                .collect();
            relations.insert(name.clone(), table);
        }
        for (name, space) in &fn_spaces {
            let mut code = choice[idx];
            idx += 1;
            // mixed-radix decode, last tuple varying fastest
            let mut values = vec![0usize; space.len()];
            for slot in (0..space.len()).rev() {
                values[slot] = code % domain_size;
                code /= domain_size;
            }
            let table: BTreeMap<Vec<usize>, usize> = space
                .iter()
                .cloned()
                .zip(values)
                .collect();
            functions.insert(name.clone(), table);
        }
        out.push(Structure::new(
            signature.clone(),
            domain_size,
            relations,
            functions,
        )?);
    }
    Ok(out)
}

// --- JSON file format ---------------------------------------------------

/// Relation table as written to JSON: plain list of tuples, or the extended
/// `{arity, tuples}` object (needed to round-trip empty tables of nonzero
/// arity).
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RelationFile {
    Tuples(Vec<Vec<usize>>),
    Explicit { arity: usize, tuples: Vec<Vec<usize>> },
}

#[derive(Serialize, Deserialize)]
struct StructureFile {
    domain: usize,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    relations: BTreeMap<String, RelationFile>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    functions: BTreeMap<String, BTreeMap<String, usize>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    constants: BTreeMap<String, usize>,
}

fn parse_tuple_key(key: &str) -> Option<Vec<usize>> {
    let inner = key.strip_prefix('(')?.strip_suffix(')')?;
    let inner = inner.trim();
    if inner.is_empty() {
        return Some(Vec::new());
    }
    inner
        .split(',')
        .map(|part| part.trim().parse::<usize>().ok())
        .collect()
}

fn format_tuple_key(tuple: &[usize]) -> String {
    let parts: Vec<String> = tuple.iter().map(|v| v.to_string()).collect();
    format!("({})", parts.join(","))
}

impl Structure {
    fn to_file(&self) -> StructureFile {
        let mut relations = BTreeMap::new();
        for (name, arity) in self.signature.relations() {
            let table = &self.relations[name];
            let tuples: Vec<Vec<usize>> = table.iter().cloned().collect();
            let entry = if tuples.is_empty() && *arity > 0 {
                RelationFile::Explicit {
                    arity: *arity,
                    tuples,
                }
            } else {
                RelationFile::Tuples(tuples)
            };
            relations.insert(name.clone(), entry);
        }
        let mut functions = BTreeMap::new();
        let mut constants = BTreeMap::new();
        for (name, arity) in self.signature.functions() {
            let table = &self.functions[name];
            if *arity == 0 {
                constants.insert(name.clone(), table[&Vec::new()]);
            } else {
                let entries: BTreeMap<String, usize> = table
                    .iter()
                    .map(|(t, &v)| (format_tuple_key(t), v))
                    .collect();
                functions.insert(name.clone(), entries);
            }
        }
        StructureFile {
            domain: self.domain_size,
            relations,
            functions,
            constants,
        }
    }

    fn from_file(file: StructureFile) -> Result<Structure> {
        let mut rel_sig = Vec::new();
        let mut relations = BTreeMap::new();
        for (name, entry) in file.relations {
            let (arity, tuples) = match entry {
                RelationFile::Explicit { arity, tuples } => (arity, tuples),
                RelationFile::Tuples(tuples) => {
                    // infer arity from the first tuple; empty list reads 0-ary
                    let arity = tuples.first().map(|t| t.len()).unwrap_or(0);
                    (arity, tuples)
                }
            };
            rel_sig.push((name.clone(), arity));
            relations.insert(name, tuples.into_iter().collect::<BTreeSet<_>>());
        }
        let mut fn_sig = Vec::new();
        let mut functions: BTreeMap<String, BTreeMap<Vec<usize>, usize>> = BTreeMap::new();
        for (name, entries) in file.functions {
            let mut table = BTreeMap::new();
            let mut arity = None;
            for (key, value) in entries {
                let tuple = parse_tuple_key(&key).ok_or_else(|| Error::ShapeMismatch {
                    detail: format!("bad tuple key `{key}` in function `{name}`"),
                })?;
                match arity {
                    None => arity = Some(tuple.len()),
                    Some(k) if k != tuple.len() => {
                        return Err(Error::ShapeMismatch {
                            detail: format!("mixed tuple lengths in function `{name}`"),
                        })
                    }
                    _ => {}
                }
                table.insert(tuple, value);
            }
            let arity = arity.ok_or_else(|| Error::FunctionNotTotal { name: name.clone() })?;
            fn_sig.push((name.clone(), arity));
            functions.insert(name, table);
        }
        for (name, value) in file.constants {
            fn_sig.push((name.clone(), 0));
            functions.insert(name, [(Vec::new(), value)].into_iter().collect());
        }
        let signature = Signature::new(rel_sig, fn_sig)?;
        Structure::new(signature, file.domain, relations, functions)
    }
}

impl Serialize for Structure {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_file().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Structure {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let file = StructureFile::deserialize(deserializer)?;
        Structure::from_file(file).map_err(D::Error::custom)
    }
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "structure(n={}", self.domain_size)?;
        for (name, _) in self.signature.relations() {
            write!(f, ", {}:{}", name, self.relations[name].len())?;
        }
        write!(f, ")")
    }
}
