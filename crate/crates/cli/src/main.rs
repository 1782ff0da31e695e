//! Single-binary frontend over the workbench library. Every subcommand
//! prints one JSON report to standard output. Exit codes: 0 for a true
//! verdict or success, 1 for a false verdict or a found counterexample,
//! 2 for usage and input errors, 3 for an exceeded search budget. Errors
//! are reported as `{"error": {"kind": ..., "detail": ...}}`.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::{json, Value};

use teamlog_core::compactness::{
    build_delta_gamma, check_intuition, expand_model, merge_teams, CoherenceSystem, GammaSpec,
};
use teamlog_core::error::Error;
use teamlog_core::eso::{crosscheck, translate, EsoBudget};
use teamlog_core::eval::{sat_search, EvalBudget, EvalOptions, Evaluator};
use teamlog_core::formula::{infer_signature, parse::parse, Formula};
use teamlog_core::model::Structure;
use teamlog_core::properties::{
    check_downward, check_empty_team, check_flatness, check_locality, check_union_closure,
    PropertySearch,
};
use teamlog_core::suite::{run_all, run_by_name, CriterionReport, CRITERIA};
use teamlog_core::team::{SupplementFunction, Team};
use teamlog_core::ultraproduct::{
    check_los, check_principal_isomorphism, check_team_lemma, product_structure,
    team_ultraproduct, StructureFamily, TeamLemmaCase, Ultrafilter,
};

#[derive(Parser)]
#[command(
    name = "teamlog",
    version,
    about = "Finite-model workbench for team semantics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a formula on a structure and team
    Eval(EvalArgs),
    /// Search for a satisfying structure and team
    Sat(SatArgs),
    /// Check closure properties of a formula on one structure
    Props(PropsArgs),
    /// Product constructions over a family of structures
    Up(UpArgs),
    /// Translate a formula to its second-order sentence
    Translate(TranslateArgs),
    /// Compare direct evaluation against the translated sentence
    Crosscheck(CrosscheckArgs),
    /// Generate and check the coherence sentence set of a formula family
    Delta(DeltaArgs),
    /// Run the numbered acceptance criteria
    Suite(SuiteArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok((report, code)) => {
            println!(
                "{}",
                serde_json::to_string_pretty(&report).expect("reports serialize")
            );
            ExitCode::from(code)
        }
        Err(failure) => {
            let report = json!({"error": {"kind": failure.kind, "detail": failure.detail}});
            println!(
                "{}",
                serde_json::to_string_pretty(&report).expect("reports serialize")
            );
            ExitCode::from(failure.code)
        }
    }
}

fn dispatch(command: Command) -> CmdResult {
    match command {
        Command::Eval(args) => run_eval(args),
        Command::Sat(args) => run_sat(args),
        Command::Props(args) => run_props(args),
        Command::Up(args) => match args.command {
            UpCommand::Product(a) => run_up_product(a),
            UpCommand::CheckLemma(a) => run_up_lemma(*a),
            UpCommand::CheckLos(a) => run_up_los(a),
        },
        Command::Translate(args) => run_translate(args),
        Command::Crosscheck(args) => run_crosscheck(args),
        Command::Delta(args) => match args.command {
            DeltaCommand::Print(a) => run_delta_print(a),
            DeltaCommand::Expand(a) => run_delta_expand(a),
            DeltaCommand::Check(a) => run_delta_check(a),
            DeltaCommand::Merge(a) => run_delta_merge(a),
        },
        Command::Suite(args) => run_suite(args),
    }
}

// --- failure plumbing -----------------------------------------------------

struct Failure {
    kind: String,
    detail: String,
    code: u8,
}

impl Failure {
    fn input(detail: String) -> Self {
        Failure {
            kind: "input".into(),
            detail,
            code: 2,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            kind: e.kind().to_string(),
            detail: e.to_string(),
            code: if e.is_budget() { 3 } else { 2 },
        }
    }
}

type CmdResult = Result<(Value, u8), Failure>;

// --- options and file I/O ---------------------------------------------------

/// Optional budget overrides read from the TEAMLOG_BUDGET environment
/// variable, a JSON object with any subset of the budget fields.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BudgetOverride {
    max_split_rows: Option<usize>,
    max_candidates: Option<u64>,
    max_team_space: Option<u64>,
    max_structures: Option<u64>,
}

fn budget_from_env() -> Result<EvalBudget, Failure> {
    let mut budget = EvalBudget::default();
    if let Ok(text) = std::env::var("TEAMLOG_BUDGET") {
        let over: BudgetOverride = serde_json::from_str(&text)
            .map_err(|e| Failure::input(format!("TEAMLOG_BUDGET: {e}")))?;
        if let Some(v) = over.max_split_rows {
            budget.max_split_rows = v;
        }
        if let Some(v) = over.max_candidates {
            budget.max_candidates = v;
        }
        if let Some(v) = over.max_team_space {
            budget.max_team_space = v;
        }
        if let Some(v) = over.max_structures {
            budget.max_structures = v;
        }
    }
    Ok(budget)
}

fn options_from(no_prune: bool, no_memo: bool) -> Result<EvalOptions, Failure> {
    Ok(EvalOptions {
        prune: !no_prune,
        memo: !no_memo,
        budget: budget_from_env()?,
    })
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

/// One formula per line; blank lines and `#` comments are skipped.
fn load_formula_file(path: &Path) -> Result<Vec<Formula>, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let formula = parse(line)
            .map_err(|e| Failure::input(format!("{}:{}: {e}", path.display(), i + 1)))?;
        out.push(formula);
    }
    Ok(out)
}

fn parse_formula(text: &str, strict: bool) -> Result<Formula, Failure> {
    let formula = parse(text)?;
    Ok(if strict { formula.to_strict() } else { formula })
}

fn collect_formulas(
    inline: &[String],
    file: &Option<PathBuf>,
    strict: bool,
) -> Result<Vec<Formula>, Failure> {
    let mut out = Vec::new();
    for text in inline {
        out.push(parse_formula(text, strict)?);
    }
    if let Some(path) = file {
        for formula in load_formula_file(path)? {
            out.push(if strict { formula.to_strict() } else { formula });
        }
    }
    if out.is_empty() {
        return Err(Failure::input(
            "no formulas given; pass -f or --file".into(),
        ));
    }
    Ok(out)
}

/// Reject team values outside the structure's domain up front, naming the
/// offending row and column.
fn check_team_against(structure: &Structure, team: &Team) -> Result<(), Failure> {
    for (r, row) in team.rows().iter().enumerate() {
        for (c, &value) in row.iter().enumerate() {
            if value >= structure.domain_size() {
                return Err(Failure::input(format!(
                    "team value {value} at row {r}, column {c} (variable `{}`) lies outside domain 0..{}",
                    team.vars()[c],
                    structure.domain_size()
                )));
            }
        }
    }
    Ok(())
}

fn sorted_free_vars(formula: &Formula) -> Vec<String> {
    formula.free_vars().into_iter().collect()
}

// --- eval -------------------------------------------------------------------

#[derive(Args)]
struct EvalArgs {
    /// Structure JSON file
    #[arg(short = 'm', long = "model", value_name = "FILE")]
    model: PathBuf,
    /// Team JSON file
    #[arg(short = 't', long = "team", value_name = "FILE")]
    team: PathBuf,
    /// Formula text
    #[arg(short = 'f', long = "formula", value_name = "FORMULA")]
    formula: String,
    /// Rewrite lax disjunctions and existentials to strict before evaluating
    #[arg(long)]
    strict: bool,
    /// Include a witness for the outermost connective when the verdict is true
    #[arg(long)]
    certificate: bool,
    /// Disable fragment-based search shortcuts
    #[arg(long)]
    no_prune: bool,
    /// Disable the verdict cache
    #[arg(long)]
    no_memo: bool,
}

fn run_eval(args: EvalArgs) -> CmdResult {
    let structure: Structure = read_json(&args.model)?;
    let team: Team = read_json(&args.team)?;
    check_team_against(&structure, &team)?;
    let formula = parse_formula(&args.formula, args.strict)?;
    let options = options_from(args.no_prune, args.no_memo)?;
    let mut ev = Evaluator::new(&structure, options);
    let (verdict, certificate) = if args.certificate {
        ev.eval_with_certificate(&team, &formula)?
    } else {
        (ev.eval(&team, &formula)?, None)
    };
    let mut report = json!({
        "command": "eval",
        "formula": formula.to_string(),
        "verdict": verdict,
        "options": options,
    });
    if args.certificate {
        report["certificate"] =
            serde_json::to_value(&certificate).expect("certificates serialize");
    }
    Ok((report, u8::from(!verdict)))
}

// --- sat --------------------------------------------------------------------

#[derive(Args)]
struct SatArgs {
    /// Formula text; repeatable
    #[arg(short = 'f', long = "formula", value_name = "FORMULA")]
    formulas: Vec<String>,
    /// File of formulas, one per line, # comments
    #[arg(long = "file", value_name = "FILE")]
    file: Option<PathBuf>,
    /// Largest domain size to try
    #[arg(long = "max-n", default_value_t = 3)]
    max_n: usize,
    /// Rewrite lax operators to strict before searching
    #[arg(long)]
    strict: bool,
    /// Disable fragment-based search shortcuts
    #[arg(long)]
    no_prune: bool,
    /// Disable the verdict cache
    #[arg(long)]
    no_memo: bool,
}

fn run_sat(args: SatArgs) -> CmdResult {
    let gamma = collect_formulas(&args.formulas, &args.file, args.strict)?;
    let signature = infer_signature(&gamma)?;
    let options = options_from(args.no_prune, args.no_memo)?;
    let found = sat_search(&gamma, &signature, args.max_n, options)?;
    let formulas: Vec<String> = gamma.iter().map(|f| f.to_string()).collect();
    match found {
        Some((structure, team)) => {
            let report = json!({
                "command": "sat",
                "formulas": formulas,
                "max_n": args.max_n,
                "found": true,
                "domain_size": structure.domain_size(),
                "structure": structure,
                "team": team,
                "options": options,
            });
            Ok((report, 0))
        }
        None => {
            let report = json!({
                "command": "sat",
                "formulas": formulas,
                "max_n": args.max_n,
                "found": false,
                "options": options,
            });
            Ok((report, 1))
        }
    }
}

// --- props --------------------------------------------------------------------

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PropertyKind {
    Downward,
    Union,
    Locality,
    Empty,
    Flatness,
}

#[derive(Args)]
struct PropsArgs {
    /// Structure JSON file
    #[arg(short = 'm', long = "model", value_name = "FILE")]
    model: PathBuf,
    /// Formula text
    #[arg(short = 'f', long = "formula", value_name = "FORMULA")]
    formula: String,
    /// Properties to check, comma separated
    #[arg(long = "check", value_delimiter = ',', required = true)]
    check: Vec<PropertyKind>,
    /// Team variable domain (defaults to the formula's free variables)
    #[arg(long, value_delimiter = ',')]
    domain: Option<Vec<String>>,
    /// Dummy variable the locality check extends the domain with
    #[arg(long)]
    dummy: Option<String>,
    /// Seed for sampled sweeps
    #[arg(long, default_value_t = 2026)]
    seed: u64,
    /// Samples drawn when a sweep is too large to be exhaustive
    #[arg(long, default_value_t = 400)]
    trials: u64,
    /// Rewrite lax operators to strict before checking
    #[arg(long)]
    strict: bool,
}

fn run_props(args: PropsArgs) -> CmdResult {
    let structure: Structure = read_json(&args.model)?;
    let formula = parse_formula(&args.formula, args.strict)?;
    let mut search = PropertySearch::default();
    search.options.budget = budget_from_env()?;
    search.seed = args.seed;
    search.trials = args.trials;
    let domain = match &args.domain {
        Some(vars) => vars.clone(),
        None => sorted_free_vars(&formula),
    };
    let dummy = match &args.dummy {
        Some(name) => name.clone(),
        None => ["u", "v", "w", "u0", "u1"]
            .iter()
            .map(|s| s.to_string())
            .find(|name| !domain.contains(name))
            .expect("some candidate dummy is unused"),
    };
    let mut verdicts = Vec::new();
    let mut all_hold = true;
    for kind in &args.check {
        let verdict = match kind {
            PropertyKind::Downward => check_downward(&structure, &formula, &domain, search)?,
            PropertyKind::Union => check_union_closure(&structure, &formula, &domain, search)?,
            PropertyKind::Locality => {
                let mut extended = domain.clone();
                extended.push(dummy.clone());
                check_locality(&structure, &formula, &extended, search)?
            }
            PropertyKind::Empty => check_empty_team(&structure, &formula, search.options)?,
            PropertyKind::Flatness => check_flatness(&structure, &formula, &domain, search)?,
        };
        all_hold &= verdict.holds;
        verdicts.push(serde_json::to_value(&verdict).expect("verdicts serialize"));
    }
    let report = json!({
        "command": "props",
        "formula": formula.to_string(),
        "domain": domain,
        "seed": args.seed,
        "budget": search.options.budget,
        "verdicts": verdicts,
    });
    Ok((report, u8::from(!all_hold)))
}

// --- up ---------------------------------------------------------------------

#[derive(Args)]
struct UpArgs {
    #[command(subcommand)]
    command: UpCommand,
}

#[derive(Subcommand)]
enum UpCommand {
    /// Build the product structure and team at a principal ultrafilter
    Product(UpFamilyArgs),
    /// Check one product-team identity
    CheckLemma(Box<UpLemmaArgs>),
    /// Check satisfaction transfer for one formula
    CheckLos(UpLosArgs),
}

#[derive(Args)]
struct UpFamilyArgs {
    /// Structure JSON files, one per index
    #[arg(long = "structures", value_name = "FILE", num_args = 1.., required = true)]
    structures: Vec<PathBuf>,
    /// Team JSON files, one per index
    #[arg(long = "teams", value_name = "FILE", num_args = 1..)]
    teams: Vec<PathBuf>,
    /// Index whose principal ultrafilter to use
    #[arg(long)]
    principal: usize,
}

fn load_family(args: &UpFamilyArgs) -> Result<(StructureFamily, Ultrafilter), Failure> {
    let structures: Vec<Structure> = args
        .structures
        .iter()
        .map(|p| read_json(p))
        .collect::<Result<_, _>>()?;
    let k = structures.len();
    let mut family = StructureFamily::new(structures)?;
    if !args.teams.is_empty() {
        if args.teams.len() != k {
            return Err(Failure::input(format!(
                "{} structures but {} teams",
                k,
                args.teams.len()
            )));
        }
        let teams: Vec<Team> = args
            .teams
            .iter()
            .map(|p| read_json(p))
            .collect::<Result<_, _>>()?;
        family = family.with_teams(teams)?;
    }
    let u = Ultrafilter::principal(k, args.principal)?;
    Ok((family, u))
}

fn run_up_product(args: UpFamilyArgs) -> CmdResult {
    let (family, u) = load_family(&args)?;
    let (product, quotient) = product_structure(&family, &u)?;
    let mut report = json!({
        "command": "up-product",
        "principal": args.principal,
        "product": product,
        "classes": quotient.representatives(),
    });
    if !args.teams.is_empty() {
        let team = team_ultraproduct(&family, &u, &quotient)?;
        report["team"] = serde_json::to_value(&team).expect("teams serialize");
        report["isomorphic_to_factor"] =
            Value::Bool(check_principal_isomorphism(&family, &u)?);
    }
    Ok((report, 0))
}

#[derive(Clone, Copy, ValueEnum)]
enum LemmaKind {
    Union,
    Disjointness,
    ConstSupplement,
    Duplicate,
    Supplement,
}

#[derive(Args)]
struct UpLemmaArgs {
    #[command(flatten)]
    family: UpFamilyArgs,
    /// Which identity to check
    #[arg(long)]
    kind: LemmaKind,
    /// Second team family, one JSON file per index (union, disjointness)
    #[arg(long = "other", value_name = "FILE", num_args = 1..)]
    other: Vec<PathBuf>,
    /// One domain element per index (const-supplement)
    #[arg(long, value_delimiter = ',')]
    values: Option<Vec<usize>>,
    /// Variable the supplement or duplication introduces
    #[arg(long, default_value = "z")]
    var: String,
    /// JSON file with one supplement function per index (supplement)
    #[arg(long, value_name = "FILE")]
    functions: Option<PathBuf>,
}

/// Wire format for a supplement function: its variable and the image of
/// each row.
#[derive(Deserialize)]
struct SupplementFile {
    var: String,
    choices: Vec<SupplementChoice>,
}

#[derive(Deserialize)]
struct SupplementChoice {
    row: Vec<usize>,
    image: Vec<usize>,
}

fn load_supplements(path: &Path) -> Result<Vec<SupplementFunction>, Failure> {
    let files: Vec<SupplementFile> = read_json(path)?;
    let mut out = Vec::new();
    for file in files {
        let mut choices = BTreeMap::new();
        for choice in file.choices {
            choices.insert(choice.row, choice.image.into_iter().collect::<BTreeSet<_>>());
        }
        out.push(SupplementFunction::new(file.var, choices)?);
    }
    Ok(out)
}

fn run_up_lemma(args: UpLemmaArgs) -> CmdResult {
    let (family, u) = load_family(&args.family)?;
    let other_teams = || -> Result<Vec<Team>, Failure> {
        if args.other.is_empty() {
            return Err(Failure::input(
                "this identity needs --other with one team file per index".into(),
            ));
        }
        args.other.iter().map(|p| read_json(p)).collect()
    };
    let case = match args.kind {
        LemmaKind::Union => TeamLemmaCase::Union {
            other: other_teams()?,
        },
        LemmaKind::Disjointness => TeamLemmaCase::Disjointness {
            other: other_teams()?,
        },
        LemmaKind::ConstSupplement => TeamLemmaCase::ConstSupplement {
            values: args.values.clone().ok_or_else(|| {
                Failure::input("const-supplement needs --values with one element per index".into())
            })?,
            var: args.var.clone(),
        },
        LemmaKind::Duplicate => TeamLemmaCase::Duplicate {
            var: args.var.clone(),
        },
        LemmaKind::Supplement => {
            let path = args.functions.as_ref().ok_or_else(|| {
                Failure::input("supplement needs --functions FILE".into())
            })?;
            TeamLemmaCase::Supplement {
                functions: load_supplements(path)?,
                var: args.var.clone(),
            }
        }
    };
    let lemma = check_team_lemma(&family, &u, &case)?;
    let ok = lemma.equal && lemma.moreover != Some(false);
    let report = json!({
        "command": "up-check-lemma",
        "principal": args.family.principal,
        "report": lemma,
    });
    Ok((report, u8::from(!ok)))
}

#[derive(Args)]
struct UpLosArgs {
    #[command(flatten)]
    family: UpFamilyArgs,
    /// Formula text
    #[arg(short = 'f', long = "formula", value_name = "FORMULA")]
    formula: String,
    /// Rewrite lax operators to strict first
    #[arg(long)]
    strict: bool,
}

fn run_up_los(args: UpLosArgs) -> CmdResult {
    let (family, u) = load_family(&args.family)?;
    let formula = parse_formula(&args.formula, args.strict)?;
    let options = options_from(false, false)?;
    let report = check_los(&family, &u, &formula, options)?;
    let equal = report.lhs == report.rhs;
    let payload = json!({
        "command": "up-check-los",
        "formula": formula.to_string(),
        "principal": args.family.principal,
        "report": report,
        "options": options,
    });
    Ok((payload, u8::from(!equal)))
}

// --- translate and crosscheck -------------------------------------------------

#[derive(Args)]
struct TranslateArgs {
    /// Formula text
    #[arg(short = 'f', long = "formula", value_name = "FORMULA")]
    formula: String,
    /// Team predicate columns (defaults to the formula's free variables)
    #[arg(long, value_delimiter = ',')]
    vars: Option<Vec<String>>,
}

fn run_translate(args: TranslateArgs) -> CmdResult {
    let formula = parse_formula(&args.formula, false)?;
    let vars = match &args.vars {
        Some(vars) => vars.clone(),
        None => sorted_free_vars(&formula),
    };
    let sentence = translate(&formula, &vars)?;
    let prefix: Vec<Value> = sentence
        .prefix
        .iter()
        .map(|(name, arity)| json!({"name": name, "arity": arity}))
        .collect();
    let clauses: Vec<String> = sentence.matrix.iter().map(|c| c.to_string()).collect();
    let report = json!({
        "command": "translate",
        "formula": formula.to_string(),
        "team_relation": sentence.team_rel,
        "team_arity": sentence.team_arity,
        "columns": vars,
        "prefix": prefix,
        "clauses": clauses,
        "sentence": sentence.to_string(),
    });
    Ok((report, 0))
}

#[derive(Args)]
struct CrosscheckArgs {
    /// Structure JSON file
    #[arg(short = 'm', long = "model", value_name = "FILE")]
    model: PathBuf,
    /// Team JSON file
    #[arg(short = 't', long = "team", value_name = "FILE")]
    team: PathBuf,
    /// Formula text
    #[arg(short = 'f', long = "formula", value_name = "FORMULA")]
    formula: String,
}

fn run_crosscheck(args: CrosscheckArgs) -> CmdResult {
    let structure: Structure = read_json(&args.model)?;
    let team: Team = read_json(&args.team)?;
    check_team_against(&structure, &team)?;
    let formula = parse_formula(&args.formula, false)?;
    let options = options_from(false, false)?;
    let budget = EsoBudget::default();
    let report = crosscheck(&structure, &team, &formula, options, budget)?;
    let payload = json!({
        "command": "crosscheck",
        "formula": formula.to_string(),
        "direct": report.direct,
        "via_translation": report.via_eso,
        "agrees": report.agrees(),
        "options": options,
    });
    Ok((payload, u8::from(!report.agrees())))
}

// --- delta ---------------------------------------------------------------------

#[derive(Args)]
struct DeltaArgs {
    #[command(subcommand)]
    command: DeltaCommand,
}

#[derive(Subcommand)]
enum DeltaCommand {
    /// Print the generated sentence set
    Print(DeltaSpecArgs),
    /// Expand a model and team into predicate tables and check them
    Expand(DeltaExpandArgs),
    /// Check an expanded structure against the sentences
    Check(DeltaCheckArgs),
    /// Merge a family of projected teams back into one team
    Merge(DeltaMergeArgs),
}

#[derive(Args)]
struct DeltaSpecArgs {
    /// Formula text; repeatable
    #[arg(short = 'f', long = "formula", value_name = "FORMULA")]
    formulas: Vec<String>,
    /// File of formulas, one per line, # comments
    #[arg(long = "file", value_name = "FILE")]
    file: Option<PathBuf>,
    /// Variable enumeration (defaults to the sorted free variables)
    #[arg(long, value_delimiter = ',')]
    enumeration: Option<Vec<String>>,
}

fn load_spec(args: &DeltaSpecArgs) -> Result<GammaSpec, Failure> {
    let gammas = collect_formulas(&args.formulas, &args.file, false)?;
    let spec = match &args.enumeration {
        Some(vars) => GammaSpec::new(gammas, vars.clone())?,
        None => GammaSpec::from_formulas(gammas)?,
    };
    Ok(spec)
}

fn spec_json(spec: &GammaSpec) -> Value {
    let formulas: Vec<String> = spec.formulas().iter().map(|f| f.to_string()).collect();
    let family: Vec<Vec<usize>> = spec
        .family()
        .iter()
        .map(|set| set.iter().copied().collect())
        .collect();
    json!({
        "formulas": formulas,
        "enumeration": spec.enumeration(),
        "kappa": spec.kappa(),
        "family": family,
    })
}

fn run_delta_print(args: DeltaSpecArgs) -> CmdResult {
    let spec = load_spec(&args)?;
    let delta = build_delta_gamma(&spec)?;
    let sentences: Vec<String> = delta.sentences().map(|s| s.to_string()).collect();
    let report = json!({
        "command": "delta-print",
        "spec": spec_json(&spec),
        "sentence_count": delta.sentence_count(),
        "sentences": sentences,
    });
    Ok((report, 0))
}

#[derive(Args)]
struct DeltaExpandArgs {
    #[command(flatten)]
    spec: DeltaSpecArgs,
    /// Structure JSON file
    #[arg(short = 'm', long = "model", value_name = "FILE")]
    model: PathBuf,
    /// Team JSON file; must satisfy every formula
    #[arg(short = 't', long = "team", value_name = "FILE")]
    team: PathBuf,
}

fn run_delta_expand(args: DeltaExpandArgs) -> CmdResult {
    let spec = load_spec(&args.spec)?;
    let structure: Structure = read_json(&args.model)?;
    let team: Team = read_json(&args.team)?;
    check_team_against(&structure, &team)?;
    let options = options_from(false, false)?;
    let expansion = expand_model(&structure, &team, &spec, options, EsoBudget::default())?;
    let check = check_intuition(&expansion, &spec)?;
    let ok = check.models_delta && check.agrees();
    let report = json!({
        "command": "delta-expand",
        "spec": spec_json(&spec),
        "expansion": expansion,
        "check": check,
    });
    Ok((report, u8::from(!ok)))
}

#[derive(Args)]
struct DeltaCheckArgs {
    #[command(flatten)]
    spec: DeltaSpecArgs,
    /// Expanded structure JSON file (with the generated predicate tables)
    #[arg(short = 'm', long = "model", value_name = "FILE")]
    model: PathBuf,
}

fn run_delta_check(args: DeltaCheckArgs) -> CmdResult {
    let spec = load_spec(&args.spec)?;
    let expansion: Structure = read_json(&args.model)?;
    let check = check_intuition(&expansion, &spec)?;
    let report = json!({
        "command": "delta-check",
        "spec": spec_json(&spec),
        "check": check,
    });
    Ok((report, u8::from(!check.models_delta)))
}

#[derive(Args)]
struct DeltaMergeArgs {
    /// Coherence system JSON file
    #[arg(short = 's', long = "system", value_name = "FILE")]
    system: PathBuf,
}

/// Wire format for a coherence system: the variable enumeration, the
/// domain size, and each index set with its rows.
#[derive(Deserialize)]
struct SystemFile {
    enumeration: Vec<String>,
    domain: usize,
    family: Vec<SystemEntry>,
}

#[derive(Deserialize)]
struct SystemEntry {
    indices: Vec<usize>,
    rows: Vec<Vec<usize>>,
}

fn run_delta_merge(args: DeltaMergeArgs) -> CmdResult {
    let file: SystemFile = read_json(&args.system)?;
    let mut family: BTreeMap<BTreeSet<usize>, BTreeSet<Vec<usize>>> = BTreeMap::new();
    for entry in file.family {
        let indices: BTreeSet<usize> = entry.indices.iter().copied().collect();
        if family
            .insert(indices, entry.rows.into_iter().collect())
            .is_some()
        {
            return Err(Failure::input(format!(
                "index set {:?} appears twice in the family",
                entry.indices
            )));
        }
    }
    let system = CoherenceSystem::new(file.enumeration, file.domain, family)?;
    let merge = merge_teams(&system)?;
    let report = json!({
        "command": "delta-merge",
        "report": merge,
    });
    Ok((report, u8::from(!merge.verified)))
}

// --- suite ---------------------------------------------------------------------

#[derive(Args)]
struct SuiteArgs {
    /// Criterion name; all criteria when omitted
    #[arg(long)]
    name: Option<String>,
    /// Seed shared by every sweep in the run
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

fn run_suite(args: SuiteArgs) -> CmdResult {
    let reports: Vec<CriterionReport> = match &args.name {
        Some(name) => {
            let report = run_by_name(name, args.seed).ok_or_else(|| {
                Failure::input(format!(
                    "unknown criterion `{name}`; known: {}",
                    CRITERIA.join(", ")
                ))
            })?;
            vec![report]
        }
        None => run_all(args.seed),
    };
    let mut all_passed = true;
    for report in &reports {
        eprintln!(
            "criterion {} {:<16} {} ({} checks, {} failures, {} skipped, {:.2}s)",
            report.id,
            report.name,
            if report.passed { "pass" } else { "FAIL" },
            report.cases,
            report.failures,
            report.skipped,
            report.seconds,
        );
        all_passed &= report.passed;
    }
    let payload = json!({
        "command": "suite",
        "seed": args.seed,
        "budget": EvalBudget::default(),
        "criteria": reports,
    });
    Ok((payload, u8::from(!all_passed)))
}
