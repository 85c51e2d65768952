use std::collections::BTreeMap;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use mipnl::classify::{classify_all, ClassifyOptions, DEFAULT_BIGM_RATIO};
use mipnl::generators::{generate, GeneratorParams, GENERATOR_NAMES};
use mipnl::inspector::{diagnose, DiagnoseOptions, NameMap};
use mipnl::metrics::{aggregate, load_outcomes, read_artifacts};
use mipnl::mps::{read_mps_file, Dialect, Model, ObjectiveSense, ParseOptions, Solution};
use mipnl::oracle::{solve_exhaustive, DEFAULT_MAX_POINTS};
use mipnl::schema::{
    corpus_stats, discover_instances, emit_instance, validate_instance, EmitOptions, ProblemType, SizeUnit, Status,
};
use mipnl::Error;

const DEFAULT_REL_TOL: f64 = 1e-6;

#[derive(Parser, Debug)]
#[command(name = "mipnl", version, about = "Scaffold recovery, instance generation and verification for MPS models")]
struct Cli {
    /// Output format. Defaults to text, except json for `inspect` and `oracle`.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// MPS dialect used when reading models.
    #[arg(long, global = true, value_enum, default_value_t = DialectArg::Auto)]
    dialect: DialectArg,
    /// Give INTORG/INTEND variables without an upper bound the domain [0, 1].
    #[arg(long, global = true)]
    legacy_int_bounds: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum DialectArg {
    Auto,
    Fixed,
    Free,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SenseArg {
    Min,
    Max,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Mine and classify the loop scaffold of an MPS model.
    Analyze {
        mps: PathBuf,
        /// Print the mined structure (groups, families, index maps) instead of the report.
        #[arg(long)]
        dump: bool,
        /// Big-M threshold as a multiple of the median absolute coefficient.
        #[arg(long, default_value_t = DEFAULT_BIGM_RATIO)]
        bigm_ratio: f64,
    },
    /// Factor an MPS model into an instance directory.
    Extract {
        mps: PathBuf,
        /// Output instance directory.
        #[arg(long)]
        out: PathBuf,
        /// Instance id; defaults to the model name.
        #[arg(long)]
        id: Option<String>,
        #[arg(long, default_value = "")]
        major_category: String,
        #[arg(long, default_value = "")]
        subcategory: String,
        /// Verification status: OPTIMAL, FEASIBLE, INFEASIBLE, OPEN or UNKNOWN.
        #[arg(long, default_value = "UNKNOWN")]
        status: String,
        #[arg(long)]
        optimal_value: Option<f64>,
        /// Do not write the canonical model.mps rendering.
        #[arg(long)]
        no_mps: bool,
        /// Big-M threshold as a multiple of the median absolute coefficient.
        #[arg(long, default_value_t = DEFAULT_BIGM_RATIO)]
        bigm_ratio: f64,
    },
    /// Write a seeded synthetic instance.
    Generate(GenerateArgs),
    /// Compare a candidate model with a reference model.
    Inspect {
        /// Candidate MPS model.
        #[arg(long)]
        candidate: PathBuf,
        /// Reference (ground truth) MPS model.
        #[arg(long)]
        reference: PathBuf,
        /// Candidate solution as JSON (`{"x": 1}` or `{"values": {...}}`).
        #[arg(long)]
        cand_sol: PathBuf,
        /// Reference solution as JSON.
        #[arg(long)]
        ref_sol: Option<PathBuf>,
        /// Stored reference optimum; used instead of evaluating --ref-sol.
        #[arg(long)]
        ref_value: Option<f64>,
        /// JSON object mapping reference variable names to candidate names.
        #[arg(long)]
        name_map: Option<PathBuf>,
        /// Objective sense; defaults to the reference model's.
        #[arg(long, value_enum)]
        sense: Option<SenseArg>,
        /// Relative tolerance for objective comparison and feasibility.
        #[arg(long, default_value_t = DEFAULT_REL_TOL)]
        rel_tol: f64,
    },
    /// Pass@N, executability and error classes over run artifacts.
    Evaluate {
        /// JSON-lines file of run artifacts.
        #[arg(long)]
        results: PathBuf,
        /// Instance directory, or a directory of instance directories.
        #[arg(long)]
        instances: PathBuf,
        /// Attempts per instance.
        #[arg(long, default_value_t = 1)]
        n: usize,
        /// Relative tolerance of the objective comparison.
        #[arg(long, default_value_t = DEFAULT_REL_TOL)]
        rel_tol: f64,
    },
    /// Solve a small pure-integer model by exhaustive enumeration.
    Oracle {
        #[arg(long)]
        mps: PathBuf,
        /// Refuse models whose domain product exceeds this many points.
        #[arg(long, default_value_t = DEFAULT_MAX_POINTS)]
        max_points: u64,
    },
    /// Corpus statistics for instance directories, model statistics for .mps files.
    Stats {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        /// Report sizes in KiB (1024 bytes) instead of KB (1000 bytes).
        #[arg(long)]
        kib: bool,
        /// Also validate every instance; exit 1 if any violation is found.
        #[arg(long)]
        validate: bool,
    },
}

#[derive(Args, Debug)]
struct GenerateArgs {
    /// Generator name.
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(GENERATOR_NAMES))]
    name: String,
    /// Seed of the splitmix64 stream.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory; defaults to ./<name>-<seed>.
    #[arg(long)]
    out: Option<PathBuf>,
    /// mcnd: number of nodes
    #[arg(long)]
    n_nodes: Option<usize>,
    /// mcnd: number of commodities
    #[arg(long)]
    n_commodities: Option<usize>,
    /// mcnd: arc probability; setcover: coverage probability
    #[arg(long)]
    density: Option<f64>,
    /// roster: number of people
    #[arg(long)]
    n_people: Option<usize>,
    /// roster: cycle length; harvest: number of periods
    #[arg(long)]
    n_periods: Option<usize>,
    /// roster: sliding window width
    #[arg(long)]
    window: Option<usize>,
    /// roster: shifts allowed per window
    #[arg(long)]
    max_shifts: Option<usize>,
    /// roster: staff required per period
    #[arg(long)]
    min_cover: Option<usize>,
    /// roster: pre-assign person i to period i
    #[arg(long)]
    fixed_assignments: bool,
    /// setcover: number of elements
    #[arg(long)]
    n_elements: Option<usize>,
    /// setcover: number of candidate sets
    #[arg(long)]
    n_sets: Option<usize>,
    /// knapsack: number of items
    #[arg(long)]
    n_items: Option<usize>,
    /// knapsack: capacity as a fraction of total weight
    #[arg(long)]
    capacity_ratio: Option<f64>,
    /// pairwise: number of jobs
    #[arg(long)]
    n_jobs: Option<usize>,
    /// harvest: number of blocks
    #[arg(long)]
    n_blocks: Option<usize>,
    /// harvest: allowed relative change between periods
    #[arg(long)]
    smoothing: Option<f64>,
}

impl GenerateArgs {
    fn knobs(&self) -> Vec<(&'static str, Value)> {
        let mut k = Vec::new();
        let mut put = |name: &'static str, v: Option<Value>| {
            if let Some(v) = v {
                k.push((name, v));
            }
        };
        put("n_nodes", self.n_nodes.map(Value::from));
        put("n_commodities", self.n_commodities.map(Value::from));
        put("density", self.density.map(Value::from));
        put("n_people", self.n_people.map(Value::from));
        put("n_periods", self.n_periods.map(Value::from));
        put("window", self.window.map(Value::from));
        put("max_shifts", self.max_shifts.map(Value::from));
        put("min_cover", self.min_cover.map(Value::from));
        put("fixed_assignments", self.fixed_assignments.then_some(Value::Bool(true)));
        put("n_elements", self.n_elements.map(Value::from));
        put("n_sets", self.n_sets.map(Value::from));
        put("n_items", self.n_items.map(Value::from));
        put("capacity_ratio", self.capacity_ratio.map(Value::from));
        put("n_jobs", self.n_jobs.map(Value::from));
        put("n_blocks", self.n_blocks.map(Value::from));
        put("smoothing", self.smoothing.map(Value::from));
        k
    }

    fn params(&self) -> Result<GeneratorParams, Error> {
        let base = GeneratorParams::default_for(&self.name, self.seed)
            .ok_or_else(|| Error::Usage(format!("unknown generator `{}`", self.name)))?;
        let mut v = serde_json::to_value(&base).expect("params serialize");
        let obj = v.as_object_mut().expect("params are an object");
        for (key, value) in self.knobs() {
            if !obj.contains_key(key) {
                return Err(Error::Usage(format!("--{} does not apply to generator {}", key.replace('_', "-"), self.name)));
            }
            obj.insert(key.to_string(), value);
        }
        serde_json::from_value(v).map_err(|e| Error::Usage(e.to_string()))
    }
}

struct Output {
    json: Value,
    text: String,
    failed: bool,
}

impl Output {
    fn new<T: Serialize>(value: &T, text: String) -> Output {
        Output { json: serde_json::to_value(value).expect("output serializes"), text, failed: false }
    }
}

fn parse_options(cli: &Cli) -> ParseOptions {
    ParseOptions {
        dialect: match cli.dialect {
            DialectArg::Auto => Dialect::Auto,
            DialectArg::Fixed => Dialect::Fixed,
            DialectArg::Free => Dialect::Free,
        },
        legacy_int_bounds: cli.legacy_int_bounds,
        ..Default::default()
    }
}

fn read_model(path: &Path, opts: &ParseOptions) -> Result<Model, Error> {
    fs::metadata(path).map_err(|e| Error::io(path, e))?;
    Ok(read_mps_file(path, opts)?)
}

fn read_text(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn read_solution(path: &Path) -> Result<Solution, Error> {
    Solution::from_json(&read_text(path)?).map_err(|e| Error::Usage(format!("{}: {e}", path.display())))
}

fn check_tol(rel_tol: f64) -> Result<(), Error> {
    if rel_tol.is_finite() && rel_tol >= 0.0 {
        Ok(())
    } else {
        Err(Error::Usage(format!("--rel-tol must be finite and non-negative, got {rel_tol}")))
    }
}

fn run(cli: &Cli) -> Result<Output, Error> {
    let popts = parse_options(cli);
    match &cli.command {
        Command::Analyze { mps, dump, bigm_ratio } => {
            let model = read_model(mps, &popts)?;
            let report = classify_all(&model, &ClassifyOptions { bigm_ratio: *bigm_ratio });
            if *dump {
                let text = serde_json::to_string_pretty(&report.structure).expect("structure serializes");
                Ok(Output::new(&report.structure, text + "\n"))
            } else {
                Ok(Output::new(&report, report.to_text()))
            }
        }
        Command::Extract { mps, out, id, major_category, subcategory, status, optimal_value, no_mps, bigm_ratio } => {
            let status = Status::parse(status).ok_or_else(|| Error::Usage(format!("unknown status `{status}`")))?;
            let model = read_model(mps, &popts)?;
            let report = classify_all(&model, &ClassifyOptions { bigm_ratio: *bigm_ratio });
            let source_bytes = fs::metadata(mps).map_err(|e| Error::io(mps, e))?.len();
            let opts = EmitOptions {
                id: id.clone(),
                problem_type: ProblemType { major_category: major_category.clone(), subcategory: subcategory.clone() },
                status,
                optimal_value: *optimal_value,
                write_mps: !no_mps,
                source_mps_bytes: Some(source_bytes),
                metadata: BTreeMap::new(),
            };
            let record = emit_instance(&report, &model, out, &opts)?;
            let mut text = format!("wrote {} (id {}, {} data files)\n", out.display(), record.id, record.files.len());
            for w in &report.warnings {
                text.push_str(&format!("warning: {w}\n"));
            }
            Ok(Output::new(&record, text))
        }
        Command::Generate(args) => {
            let params = args.params()?;
            let out = args.out.clone().unwrap_or_else(|| PathBuf::from(format!("{}-{}", args.name, args.seed)));
            let g = generate(&params, &out)?;
            let mut text = format!("wrote {} (id {}, status {})\n", g.dir.display(), g.record.id, g.record.verification.status.as_str());
            for (family, label) in &g.declared_labels {
                text.push_str(&format!("  {family}: {} x {}\n", label.as_str(), g.declared_counts[family]));
            }
            let json = json!({
                "dir": g.dir,
                "id": g.record.id,
                "declared_labels": g.declared_labels,
                "declared_counts": g.declared_counts,
                "status": g.record.verification.status,
                "optimal_value": g.record.optimal_value,
            });
            Ok(Output { json, text, failed: false })
        }
        Command::Inspect { candidate, reference, cand_sol, ref_sol, ref_value, name_map, sense, rel_tol } => {
            check_tol(*rel_tol)?;
            let cand = read_model(candidate, &popts)?;
            let refm = read_model(reference, &popts)?;
            let cs = read_solution(cand_sol)?;
            let rs = ref_sol.as_deref().map(read_solution).transpose()?;
            let map = match name_map {
                Some(p) => Some(
                    serde_json::from_str::<NameMap>(&read_text(p)?)
                        .map_err(|e| Error::Usage(format!("{}: {e}", p.display())))?,
                ),
                None => None,
            };
            let sense = match sense {
                Some(SenseArg::Min) => ObjectiveSense::Min,
                Some(SenseArg::Max) => ObjectiveSense::Max,
                None => refm.objective_sense(),
            };
            let opts = DiagnoseOptions { sense, rel_tol: *rel_tol, reference_value: *ref_value, name_map: map };
            let report = diagnose(&cand, &refm, &cs, rs.as_ref(), &opts)?;
            Ok(Output::new(&report, report.to_text()))
        }
        Command::Evaluate { results, instances, n, rel_tol } => {
            check_tol(*rel_tol)?;
            if *n == 0 {
                return Err(Error::Usage("--n must be at least 1".into()));
            }
            let f = fs::File::open(results).map_err(|e| Error::io(results, e))?;
            let artifacts = read_artifacts(BufReader::new(f))?;
            let dirs = discover_instances(instances)?;
            let set = load_outcomes(&dirs, artifacts)?;
            for id in &set.orphan_ids {
                eprintln!("warning: artifacts for unknown instance `{id}` ignored");
            }
            let table = aggregate(&set.outcomes, *n, *rel_tol);
            Ok(Output::new(&table, table.to_text()))
        }
        Command::Oracle { mps, max_points } => {
            let model = read_model(mps, &popts)?;
            let r = solve_exhaustive(&model, *max_points)?;
            let status = serde_json::to_value(r.status).expect("status serializes");
            let text = format!(
                "status: {}\nobjective: {}\nnodes enumerated: {}\n",
                status.as_str().unwrap_or_default(),
                r.objective.map_or("-".to_string(), |v| v.to_string()),
                r.nodes_enumerated
            );
            Ok(Output::new(&r, text))
        }
        Command::Stats { paths, kib, validate } => stats(paths, *kib, *validate, &popts),
    }
}

fn stats(paths: &[PathBuf], kib: bool, validate: bool, popts: &ParseOptions) -> Result<Output, Error> {
    let mut dirs = Vec::new();
    let mut models = Vec::new();
    for p in paths {
        if p.is_dir() {
            dirs.extend(discover_instances(p)?);
        } else {
            let m = read_model(p, popts)?;
            models.push((p.display().to_string(), m.stats()));
        }
    }
    dirs.sort();
    dirs.dedup();
    let mut text = String::new();
    let mut json = serde_json::Map::new();
    for (path, s) in &models {
        text.push_str(&format!(
            "{path}: vars {} ({} integer, {} binary), rows {}, nonzeros {}\n",
            s.n_vars, s.n_integer, s.n_binary, s.n_rows, s.n_nonzeros
        ));
    }
    if !models.is_empty() {
        let m: Vec<Value> = models.iter().map(|(p, s)| json!({"path": p, "stats": s})).collect();
        json.insert("models".into(), Value::Array(m));
    }
    let mut failed = false;
    if !dirs.is_empty() {
        let unit = if kib { SizeUnit::Binary } else { SizeUnit::Decimal };
        let corpus = corpus_stats(&dirs, unit)?;
        text.push_str(&corpus.to_text());
        json.insert("corpus".into(), serde_json::to_value(&corpus).expect("stats serialize"));
        if validate {
            let mut all = serde_json::Map::new();
            for d in &dirs {
                let v = validate_instance(d);
                for x in &v {
                    text.push_str(&format!("{}: {} {x}\n", d.display(), x.code()));
                }
                failed |= !v.is_empty();
                all.insert(d.display().to_string(), serde_json::to_value(&v).expect("violations serialize"));
            }
            if !failed {
                text.push_str(&format!("validation: {} instances, no violations\n", dirs.len()));
            }
            json.insert("violations".into(), Value::Object(all));
        }
    }
    Ok(Output { json: Value::Object(json), text, failed })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let format = cli.format.unwrap_or(match cli.command {
        Command::Inspect { .. } | Command::Oracle { .. } => Format::Json,
        _ => Format::Text,
    });
    match run(&cli) {
        Ok(out) => {
            match format {
                Format::Json => println!("{}", serde_json::to_string_pretty(&out.json).expect("json renders")),
                Format::Text => print!("{}", out.text),
            }
            if out.failed {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            let code = if matches!(e, Error::Usage(_)) { 2 } else { 1 };
            match format {
                Format::Json => eprintln!("{}", json!({"error": {"code": e.code(), "message": e.to_string()}})),
                Format::Text => eprintln!("error[{}]: {e}", e.code()),
            }
            ExitCode::from(code)
        }
    }
}
