//! `causal-hierarchy`: batch front end over JSON files.
//!
//! Exit codes: 0 success, 1 usage / IO / parse errors, 2 model validation
//! failure (report on stderr), 3 infeasible data, 4 failed precondition.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use causal_hierarchy::bounds::{bound_query, check_collapse, response_interventions, BoundsOptions};
use causal_hierarchy::causation::{
    check_feasible_2ve, check_y_good, probabilities_from_table, probabilities_of_causation, realize_2ve, Roles,
};
use causal_hierarchy::hierarchy::{all_interventions, interventional_family, project_2ve, project_l3, TwoVarFamily};
use causal_hierarchy::io::{
    from_json, BoundsFile, CausationFile, CheckFile, CollapseFile, DistFile, Level2File, Level3File, ModelFile,
    PlanFile, QueryFile, ReductionFile, SeparateFile, SimFile, SplitFile, StandardFormFile,
};
use causal_hierarchy::rational::parse_rational;
use causal_hierarchy::scm::{observational, parse_intervention_list, DistTable, Intervention, ScmModel, StructuralModel};
use causal_hierarchy::separation::{separate, verify_pair};
use causal_hierarchy::standard_form::{
    canonicalize, monotonic_reduce, split_cell, split_l1, PinnedTerm, StandardFormModel,
};
use causal_hierarchy::verify::{simulate_verification, y_good_hypothesis, Hypothesis, TestConfig};
use causal_hierarchy::{
    hierarchy::{CounterfactualTable, InterventionalFamily},
    io::HypothesisFile,
    Error,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

/// Largest model for which `--interventions all` is expanded (3^6 = 729).
const ALL_INTERVENTIONS_CAP: usize = 6;

#[derive(Parser)]
#[command(name = "causal-hierarchy", version, about = "Exact computations on finite binary structural causal models")]
struct Cli {
    /// Omit the `generated_at` timestamp so output is byte-reproducible.
    #[arg(long, global = true)]
    deterministic: bool,

    /// Seed for the sampling in `verify`.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Write the result here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Pair {
    /// Treatment variable (default: first in the order).
    #[arg(long)]
    x: Option<String>,
    /// Outcome variable (default: second in the order).
    #[arg(long)]
    y: Option<String>,
    /// Exchange the treated and untreated values of X.
    #[arg(long)]
    swap: bool,
}

impl Pair {
    fn resolve(&self, order: &[String]) -> Result<(String, String, Roles), CliError> {
        let pick = |given: &Option<String>, i: usize| {
            given
                .clone()
                .or_else(|| order.get(i).cloned())
                .ok_or_else(|| CliError::Usage("need at least two variables".into()))
        };
        let roles = if self.swap { Roles::default().swapped() } else { Roles::default() };
        Ok((pick(&self.x, 0)?, pick(&self.y, 1)?, roles))
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Level {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
    #[value(name = "3")]
    Three,
}

#[derive(Subcommand)]
enum Command {
    /// Observational, interventional or counterfactual tables of a model.
    Eval {
        model: PathBuf,
        #[arg(long, value_enum, default_value = "1")]
        levels: Level,
        /// `all`, `response`, or a list such as "do X=1; do X=0".
        #[arg(long, default_value = "all")]
        interventions: String,
    },
    /// Standard (response-atom) form of a model.
    Canon { model: PathBuf },
    /// The six probabilities of causation from a model or Level-3 table.
    Pns {
        input: PathBuf,
        #[command(flatten)]
        pair: Pair,
    },
    /// Feasibility and Y-goodness of two-variable interventional data.
    Check {
        input: PathBuf,
        #[command(flatten)]
        pair: Pair,
    },
    /// A standard-form model reproducing two-variable interventional data.
    Realize {
        input: PathBuf,
        #[command(flatten)]
        pair: Pair,
    },
    /// A second model with the same interventional behavior and different
    /// probabilities of causation.
    Separate {
        model: PathBuf,
        #[command(flatten)]
        pair: Pair,
        /// Mass moved off each witness set (default: half the smaller one).
        #[arg(long)]
        delta: Option<String>,
    },
    /// Exact bounds on a counterfactual query given Level-2 data.
    Bounds {
        query: PathBuf,
        /// Level-2 file or model, if the query does not embed `given_l2`.
        #[arg(long)]
        l2: Option<PathBuf>,
        /// Admit four-variable orders (2^15 atoms).
        #[arg(long)]
        allow_four: bool,
        /// Include the optimal models.
        #[arg(long)]
        vertices: bool,
    },
    /// Whether Level-2 data pins every joint counterfactual cell.
    Collapse {
        input: PathBuf,
        /// `response`, `all`, or an explicit list.
        #[arg(long, default_value = "response")]
        interventions: String,
        #[arg(long)]
        allow_four: bool,
    },
    /// Monte-Carlo run of the test for an open hypothesis.
    Verify {
        model: PathBuf,
        /// Hypothesis file; omit to test Y-goodness of the model's own data.
        #[arg(long)]
        hypothesis: Option<PathBuf>,
        #[command(flatten)]
        pair: Pair,
        #[arg(long, default_value = "0.05")]
        epsilon: String,
        #[arg(long, default_value = "10,100,1000,10000", value_delimiter = ',')]
        n_grid: Vec<u64>,
        #[arg(long, default_value_t = 400)]
        trials: u32,
    },
    /// Two standard-form models sharing an observational distribution but
    /// not its interventional behavior.
    SplitL1 { input: PathBuf },
    /// Interventional formula for a pinned response query under the
    /// monotonic model.
    Monotonic {
        /// Model, standard-form or Level-2 file giving the order (and the
        /// data the formula is evaluated on).
        input: Option<PathBuf>,
        /// Variable order, when no input file is given.
        #[arg(long, value_delimiter = ',')]
        order: Vec<String>,
        /// Pinned values of the leading variables (default: all 1).
        #[arg(long, value_delimiter = ',')]
        values: Vec<u8>,
    },
}

enum CliError {
    Usage(String),
    Io(String),
    Lib(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 1,
            CliError::Lib(e) => match e {
                Error::Validation(_) => 2,
                Error::Infeasible(_) => 3,
                Error::Precondition(_) | Error::SizeCap { .. } => 4,
                _ => 1,
            },
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Usage(m) => format!("usage error: {m}"),
            CliError::Io(m) => format!("io error: {m}"),
            CliError::Lib(e) => e.to_string(),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn read_text(path: &Path) -> CliResult<String> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s).map_err(|e| CliError::Io(e.to_string()))?;
        return Ok(s);
    }
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Any input artifact, recognized by its keys.
enum Input {
    Model(ScmModel),
    Standard(StandardFormModel),
    Level2(InterventionalFamily),
    Level3(CounterfactualTable),
    Dist(DistTable),
}

fn load(path: &Path) -> CliResult<Input> {
    let text = read_text(path)?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(Error::from)?;
    let has = |k: &str| value.get(k).is_some();
    let input = if has("mechanisms") {
        let file: ModelFile = serde_json::from_value(value).map_err(Error::from)?;
        let model = ScmModel::try_from(&file)?;
        model.ensure_valid()?;
        Input::Model(model)
    } else if has("atoms") {
        let file: StandardFormFile = serde_json::from_value(value).map_err(Error::from)?;
        Input::Standard(StandardFormModel::try_from(&file)?)
    } else if has("entries") {
        let file: Level2File = serde_json::from_value(value).map_err(Error::from)?;
        Input::Level2(InterventionalFamily::try_from(&file)?)
    } else if has("interventions") {
        let file: Level3File = serde_json::from_value(value).map_err(Error::from)?;
        Input::Level3(CounterfactualTable::try_from(&file)?)
    } else if has("cells") {
        let file: DistFile = serde_json::from_value(value).map_err(Error::from)?;
        Input::Dist(DistTable::try_from(&file)?)
    } else {
        return Err(CliError::Lib(Error::Parse(format!(
            "{}: not a model, standard-form, Level-1, Level-2 or Level-3 file",
            path.display()
        ))));
    };
    Ok(input)
}

enum Structural {
    Scm(ScmModel),
    Standard(StandardFormModel),
}

impl Structural {
    fn get(&self) -> &(dyn StructuralModel + Sync) {
        match self {
            Structural::Scm(m) => m,
            Structural::Standard(m) => m,
        }
    }

    fn order(&self) -> &[String] {
        self.get().variables()
    }

    fn standard(&self) -> CliResult<StandardFormModel> {
        match self {
            Structural::Scm(m) => Ok(canonicalize(m)?),
            Structural::Standard(m) => Ok(m.clone()),
        }
    }

    fn scm(&self) -> ScmModel {
        match self {
            Structural::Scm(m) => m.clone(),
            Structural::Standard(m) => m.to_scm(),
        }
    }
}

fn load_structural(path: &Path) -> CliResult<Structural> {
    match load(path)? {
        Input::Model(m) => Ok(Structural::Scm(m)),
        Input::Standard(m) => Ok(Structural::Standard(m)),
        _ => Err(CliError::Usage(format!("{}: expected a model or standard-form file", path.display()))),
    }
}

fn capped_all(order: &[String]) -> CliResult<Vec<Intervention>> {
    if order.len() > ALL_INTERVENTIONS_CAP {
        return Err(CliError::Lib(Error::SizeCap {
            what: "--interventions all",
            cap: ALL_INTERVENTIONS_CAP,
            got: order.len(),
            reason: "3^n entries; pass an explicit list such as \"do X=1; do X=0\" or `response`".into(),
        }));
    }
    Ok(all_interventions(order))
}

fn interventions_arg(spec: &str, order: &[String]) -> CliResult<Vec<Intervention>> {
    match spec.trim() {
        "all" => capped_all(order),
        "response" => Ok(response_interventions(order)),
        list => {
            let parsed = parse_intervention_list(list)?;
            for alpha in &parsed {
                alpha.resolve(order)?;
            }
            Ok(parsed)
        }
    }
}

/// Level-2 data from a Level-2 file or computed from a model.
fn level2_of(input: Input, path: &Path) -> CliResult<InterventionalFamily> {
    match input {
        Input::Level2(f) => Ok(f),
        Input::Model(m) => Ok(interventional_family(&m, &capped_all(m.variables())?)?),
        Input::Standard(m) => Ok(interventional_family(&m, &capped_all(m.order())?)?),
        _ => Err(CliError::Usage(format!("{}: expected Level-2 data or a model", path.display()))),
    }
}

fn two_var(input: Input, path: &Path, pair: &Pair) -> CliResult<(TwoVarFamily, Roles)> {
    let family = match input {
        Input::Level2(f) => f,
        Input::Model(m) => treatment_family(&m, pair)?,
        Input::Standard(m) => treatment_family(&m, pair)?,
        _ => return Err(CliError::Usage(format!("{}: expected Level-2 data or a model", path.display()))),
    };
    let (x, y, roles) = pair.resolve(family.order())?;
    Ok((project_2ve(&family, &x, &y)?, roles))
}

fn treatment_family<M: StructuralModel + ?Sized>(m: &M, pair: &Pair) -> CliResult<InterventionalFamily> {
    let (x, _, _) = pair.resolve(m.variables())?;
    let list = [Intervention::empty(), Intervention::set(&x, 0), Intervention::set(&x, 1)];
    Ok(interventional_family(m, &list)?)
}

fn run(cli: &Cli) -> CliResult<serde_json::Value> {
    Ok(match &cli.command {
        Command::Eval { model, levels, interventions } => {
            let m = load_structural(model)?;
            let m = m.get();
            match levels {
                Level::One => json(&DistFile::from(&observational(m)?)),
                Level::Two => {
                    let list = interventions_arg(interventions, m.variables())?;
                    json(&Level2File::from(&interventional_family(m, &list)?))
                }
                Level::Three => {
                    let list = interventions_arg(interventions, m.variables())?;
                    json(&Level3File::from(&project_l3(m, &list)?))
                }
            }
        }
        Command::Canon { model } => json(&StandardFormFile::from(&load_structural(model)?.standard()?)),
        Command::Pns { input, pair } => match load(input)? {
            Input::Level3(t) => {
                let (x, y, roles) = pair.resolve(t.scope())?;
                json(&CausationFile::new(&probabilities_from_table(&t, &x, &y, roles)?, &x, &y, roles))
            }
            Input::Model(m) => pns_of(&m, pair)?,
            Input::Standard(m) => pns_of(&m, pair)?,
            _ => return Err(CliError::Usage("pns expects a model, standard-form or Level-3 file".into())),
        },
        Command::Check { input, pair } => {
            let (fam, roles) = two_var(load(input)?, input, pair)?;
            json(&CheckFile::new(&fam.x, &fam.y, &check_feasible_2ve(&fam), &check_y_good(&fam, roles)))
        }
        Command::Realize { input, pair } => {
            let (fam, _) = two_var(load(input)?, input, pair)?;
            json(&StandardFormFile::from(&realize_2ve(&fam)?))
        }
        Command::Separate { model, pair, delta } => {
            let m = load_structural(model)?;
            let (x, y, roles) = pair.resolve(m.order())?;
            let delta = delta.as_deref().map(parse_rational).transpose()?;
            let sf = m.standard()?;
            let (plan, separated) = separate(&sf, &x, &y, roles, delta)?;
            let original = m.scm();
            let list = capped_all(m.order())?;
            let report = verify_pair(&original, &separated, &list, &x, &y, roles)?;
            json(&SeparateFile {
                original: (&original).into(),
                separated: (&separated).into(),
                plan: PlanFile::new(sf.order(), &plan),
                verification: (&report).into(),
            })
        }
        Command::Bounds { query, l2, allow_four, vertices } => {
            let file: QueryFile = from_json(&read_text(query)?)?;
            let family = match (file.given()?, l2) {
                (Some(f), None) => f,
                (_, Some(path)) => level2_of(load(path)?, path)?,
                (None, None) => {
                    return Err(CliError::Usage("query has no `given_l2`; pass --l2".into()));
                }
            };
            let opts = BoundsOptions { allow_four: *allow_four };
            let b = bound_query(family.order(), &family, &file.query()?, opts)?;
            json(&BoundsFile::new(&b, *vertices))
        }
        Command::Collapse { input, interventions, allow_four } => {
            let family = level2_of(load(input)?, input)?;
            let list = interventions_arg(interventions, family.order())?;
            let opts = BoundsOptions { allow_four: *allow_four };
            json(&CollapseFile::from(&check_collapse(family.order(), &family, &list, opts)?))
        }
        Command::Verify { model, hypothesis, pair, epsilon, n_grid, trials } => {
            let m = load_structural(model)?;
            let h: Hypothesis = match hypothesis {
                Some(path) => Hypothesis::try_from(&from_json::<HypothesisFile>(&read_text(path)?)?)?,
                None => {
                    let fam = treatment_family(m.get(), pair)?;
                    let (x, y, roles) = pair.resolve(m.order())?;
                    let two = project_2ve(&fam, &x, &y)?;
                    y_good_hypothesis(&two, roles, &check_y_good(&two, roles))?
                }
            };
            let cfg = TestConfig {
                epsilon: parse_rational(epsilon)?,
                n_grid: n_grid.clone(),
                trials: *trials,
                seed: cli.seed,
            };
            json(&SimFile::from(&simulate_verification(m.get(), &h, &cfg)?))
        }
        Command::SplitL1 { input } => {
            let obs = match load(input)? {
                Input::Dist(d) => d,
                Input::Model(m) => observational(&m)?,
                Input::Standard(m) => observational(&m)?,
                _ => return Err(CliError::Usage("split-l1 expects a Level-1 file or a model".into())),
            };
            let order = obs.scope().to_vec();
            let (acausal, causal) = split_l1(&obs, &order)?;
            let (xs, ys) = split_cell(&obs, &order)?;
            json(&SplitFile { cell: format!("{xs}{ys}"), acausal: (&acausal).into(), causal: (&causal).into() })
        }
        Command::Monotonic { input, order, values } => {
            let (order, family) = match input {
                Some(path) => {
                    let fam = level2_of(load(path)?, path)?;
                    (fam.order().to_vec(), Some(fam))
                }
                None if !order.is_empty() => (order.clone(), None),
                None => return Err(CliError::Usage("monotonic needs an input file or --order".into())),
            };
            let values = if values.is_empty() { vec![1; order.len()] } else { values.clone() };
            if values.len() > order.len() || values.iter().any(|&v| v > 1) {
                return Err(CliError::Usage("--values must be at most one binary value per variable".into()));
            }
            let query: Vec<PinnedTerm> = values.iter().enumerate().map(|(i, &v)| PinnedTerm::at(&order, i, v)).collect();
            let comb = monotonic_reduce(&query, &order)?;
            json(&ReductionFile::new(&comb, family.as_ref())?)
        }
    })
}

fn pns_of<M: StructuralModel + ?Sized>(m: &M, pair: &Pair) -> CliResult<serde_json::Value> {
    let (x, y, roles) = pair.resolve(m.variables())?;
    let report = probabilities_of_causation(m, &x, &y, roles)?;
    Ok(json(&CausationFile::new(&report, &x, &y, roles)))
}

fn json<T: Serialize>(value: &T) -> serde_json::Value {
    serde_json::to_value(value).expect("file types serialize")
}

fn emit(cli: &Cli, mut value: serde_json::Value) -> CliResult<()> {
    if !cli.deterministic {
        if let Some(obj) = value.as_object_mut() {
            let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
            obj.insert("generated_at".into(), secs.into());
        }
    }
    let text = causal_hierarchy::io::to_json(&value);
    match &cli.output {
        Some(path) => fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string())),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli).and_then(|v| emit(&cli, v)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
