//! Thin command-line front end over the `gramediate` library: dataset access,
//! loglinear fits and comparisons, model-space enumeration and search,
//! mediator extraction, subsample validation curves, and mediation reports.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use gramediate::*;

#[derive(Parser)]
#[command(
    name = "gramediate",
    version,
    about = "Mediator discovery in categorical data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SpaceArg {
    Hierarchical,
    Graphical,
    Decomposable,
}

impl From<SpaceArg> for SearchSpace {
    fn from(s: SpaceArg) -> Self {
        match s {
            SpaceArg::Hierarchical => SearchSpace::Hierarchical,
            SpaceArg::Graphical => SearchSpace::Graphical,
            SpaceArg::Decomposable => SearchSpace::Decomposable,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
    Dot,
}

#[derive(Args)]
struct DataArgs {
    /// Data source: "builtin" for the embedded clinical-trial table, or a
    /// path to a long-format CSV (header row of variable names).
    #[arg(long, default_value = "builtin")]
    data: String,
    /// Optional schema JSON for CSV input (list of {name, levels}); when
    /// absent, levels are inferred from the file.
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Comma-separated variable subset to analyze (default: all variables).
    #[arg(long, value_delimiter = ',')]
    vars: Option<Vec<String>>,
}

#[derive(Args)]
struct OutArgs {
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: FormatArg,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a hierarchical loglinear model (or compare two nested ones).
    Fit {
        #[command(flatten)]
        data: DataArgs,
        /// Model in bracket notation, e.g. "[SSC-W,SSC-F][SSC-W,TIME]".
        #[arg(long)]
        model: Option<String>,
        /// Two bracket-notation models: sub then super; emits the
        /// likelihood-ratio comparison.
        #[arg(long, num_args = 2)]
        compare: Option<Vec<String>>,
        /// Fit the standard eight sub-saturated models over three variables.
        #[arg(long = "all-3var")]
        all_3var: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Count and list all hierarchical models over n variables.
    Enumerate {
        #[arg(long)]
        nvars: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Stepwise AIC search (forward from independence, backward from
    /// saturated) with the two-direction consensus rule.
    Search {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_enum, default_value = "decomposable")]
        space: SpaceArg,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Select a model, build its interaction graph, and report weak
    /// decompositions and mediator candidates for a treatment variable.
    Mediators {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        treatment: String,
        /// Model override in bracket notation; default: consensus search.
        #[arg(long)]
        model: Option<String>,
        #[arg(long, value_enum, default_value = "decomposable")]
        space: SpaceArg,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Out-of-sample recovery curve: subsample, search, count recoveries.
    Validate {
        #[command(flatten)]
        data: DataArgs,
        /// Target model: "model5", "model9", or bracket notation.
        #[arg(long)]
        target: String,
        /// Single sampling fraction in (0,1).
        #[arg(long)]
        q: Option<f64>,
        /// Grid as start:end:step, e.g. 0.05:0.95:0.05.
        #[arg(long = "q-grid")]
        q_grid: Option<String>,
        #[arg(long, default_value_t = 500)]
        reps: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long, value_enum, default_value = "decomposable")]
        space: SpaceArg,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Causal mediation analysis with bootstrap percentile intervals.
    Mediate {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        treatment: String,
        #[arg(long)]
        mediator: String,
        #[arg(long)]
        outcome: String,
        #[arg(long, value_delimiter = ',')]
        covariates: Vec<String>,
        #[arg(long, default_value_t = 2500)]
        nboot: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
        #[command(flatten)]
        out: OutArgs,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("{}", json!({ "error": err.to_string() }));
        std::process::exit(1);
    }
}

fn resolve_seed(flag: Option<u64>) -> u64 {
    flag.or_else(|| {
        std::env::var("GRAMEDIATE_SEED")
            .ok()
            .and_then(|s| s.parse().ok())
    })
    .unwrap_or(DEFAULT_SEED)
}

fn infer_schema(text: &str) -> Result<Schema> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| Error::Schema("empty csv".into()))?
        .split(',')
        .map(str::trim)
        .collect();
    let mut levels: Vec<BTreeMap<String, ()>> = vec![BTreeMap::new(); header.len()];
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        for (slot, token) in levels.iter_mut().zip(line.split(',').map(str::trim)) {
            slot.insert(token.to_string(), ());
        }
    }
    let vars = header
        .iter()
        .zip(levels)
        .map(|(name, lv)| {
            let mut labels: Vec<String> = lv.into_keys().collect();
            // numeric level labels sort numerically
            if labels.iter().all(|l| l.parse::<i64>().is_ok()) {
                labels.sort_by_key(|l| l.parse::<i64>().unwrap());
            }
            let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
            VariableSchema::new(*name, &refs)
        })
        .collect::<Result<Vec<_>>>()?;
    Schema::new(vars)
}

fn load_records(args: &DataArgs) -> Result<ObservationRecords> {
    let records = if args.data == "builtin" {
        embedded_dataset().expand()?
    } else {
        let mut text = String::new();
        std::fs::File::open(&args.data)
            .and_then(|mut f| f.read_to_string(&mut text))
            .map_err(|e| Error::Schema(format!("cannot read '{}': {e}", args.data)))?;
        let schema = match &args.schema {
            Some(path) => {
                let raw = std::fs::read_to_string(path)
                    .map_err(|e| Error::Schema(format!("cannot read schema: {e}")))?;
                serde_json::from_str(&raw)
                    .map_err(|e| Error::Schema(format!("bad schema json: {e}")))?
            }
            None => infer_schema(&text)?,
        };
        parse_csv(&text, &schema)?
    };
    match &args.vars {
        Some(vars) => {
            let refs: Vec<&str> = vars.iter().map(String::as_str).collect();
            records.select(&refs)
        }
        None => Ok(records),
    }
}

fn emit(out: &OutArgs, text: String) -> Result<()> {
    match &out.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Error::Schema(format!("cannot write output: {e}"))),
        None => {
            if text.ends_with('\n') {
                print!("{text}");
            } else {
                println!("{text}");
            }
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(config: serde_json::Value, body: &T) -> String {
    serde_json::to_string_pretty(&json!({ "config": config, "result": body }))
        .expect("report serialization")
}

fn resolve_target(spec: &str, schema: &Schema) -> Result<GeneratingClass> {
    match spec {
        "model5" => GeneratingClass::parse("[SSC-W,SSC-F][SSC-W,TIME]", schema),
        "model9" => GeneratingClass::parse("[SSC-W,SSC-F][SSC-W,TIME][SSC-W,IC]", schema),
        other => GeneratingClass::parse(other, schema),
    }
}

fn parse_q_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Schema("q-grid must be start:end:step".into()));
    }
    let (start, end, step): (f64, f64, f64) = (
        parts[0]
            .parse()
            .map_err(|_| Error::Schema("bad q-grid".into()))?,
        parts[1]
            .parse()
            .map_err(|_| Error::Schema("bad q-grid".into()))?,
        parts[2]
            .parse()
            .map_err(|_| Error::Schema("bad q-grid".into()))?,
    );
    if step.is_nan() || step <= 0.0 {
        return Err(Error::Schema("q-grid step must be positive".into()));
    }
    let mut qs = Vec::new();
    let mut q = start;
    while q <= end + 1e-12 {
        qs.push((q * 1e9).round() / 1e9);
        q += step;
    }
    Ok(qs)
}

fn with_workers<T: Send>(
    workers: Option<usize>,
    f: impl FnOnce() -> Result<T> + Send,
) -> Result<T> {
    match workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::Schema(format!("worker pool: {e}")))?
            .install(f),
        None => f(),
    }
}

/// Variable names appearing in one or more bracket-notation model specs.
fn spec_variables(specs: &[&str]) -> Vec<String> {
    let mut names = Vec::new();
    for spec in specs {
        for chunk in spec.split(['[', ']', ',']) {
            let name = chunk.trim();
            if !name.is_empty() && !names.iter().any(|n| n == name) {
                names.push(name.to_string());
            }
        }
    }
    names
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fit {
            data,
            model,
            compare,
            all_3var,
            out,
        } => {
            let mut records = load_records(&data)?;
            // without an explicit --vars, a model spec restricts the table to
            // the variables it names
            if data.vars.is_none() && !all_3var {
                let specs: Vec<&str> = compare
                    .as_deref()
                    .map(|pair| pair.iter().map(String::as_str).collect())
                    .unwrap_or_else(|| model.iter().map(String::as_str).collect());
                let names = spec_variables(&specs);
                if !names.is_empty() && names.len() < records.schema().len() {
                    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
                    records = records.select(&refs)?;
                }
            }
            let table = crosstab(&records);
            let schema = table.schema().clone();
            let config = json!({
                "data": data.data,
                "vars": schema.names(),
            });
            if let Some(pair) = compare {
                let sub = ipf_fit_default(&table, &GeneratingClass::parse(&pair[0], &schema)?)?;
                let sup = ipf_fit_default(&table, &GeneratingClass::parse(&pair[1], &schema)?)?;
                let cmp = compare_nested(&sub, &sup)?;
                let body = json!({
                    "sub": sub, "super": sup, "comparison": cmp,
                });
                return emit(&out, to_json(config, &body));
            }
            if all_3var {
                let names = schema.names();
                if names.len() != 3 {
                    return Err(Error::Schema(
                        "--all-3var needs exactly three variables".into(),
                    ));
                }
                let vars = match &data.vars {
                    Some(v) => v.clone(),
                    None => names.iter().map(|s| s.to_string()).collect(),
                };
                let (a, b, c) = (vars[0].as_str(), vars[1].as_str(), vars[2].as_str());
                let specs = [
                    format!("[{a}][{b}][{c}]"),
                    format!("[{a}][{b},{c}]"),
                    format!("[{a},{c}][{b}]"),
                    format!("[{a},{b}][{c}]"),
                    format!("[{a},{b}][{a},{c}]"),
                    format!("[{a},{b}][{b},{c}]"),
                    format!("[{a},{c}][{b},{c}]"),
                    format!("[{a},{b}][{a},{c}][{b},{c}]"),
                ];
                let mut fits = Vec::new();
                for spec in &specs {
                    fits.push(ipf_fit_default(
                        &table,
                        &GeneratingClass::parse(spec, &schema)?,
                    )?);
                }
                return emit(&out, to_json(config, &fits));
            }
            let spec = model.ok_or_else(|| {
                Error::Schema("fit needs --model, --compare, or --all-3var".into())
            })?;
            let fit = ipf_fit_default(&table, &GeneratingClass::parse(&spec, &schema)?)?;
            emit(&out, to_json(config, &fit))
        }
        Command::Enumerate { nvars, out } => {
            let models = enumerate_hierarchical(nvars)?;
            // render over generic variable names V1..Vn
            let vars: Vec<VariableSchema> = (1..=nvars)
                .map(|i| VariableSchema::new(format!("V{i}"), &["0", "1"]).unwrap())
                .collect();
            let schema = Schema::new(vars)?;
            let body = json!({
                "n_vars": nvars,
                "count": models.len(),
                "models": models.iter().map(|m| m.format(&schema)).collect::<Vec<_>>(),
            });
            emit(&out, to_json(json!({ "nvars": nvars }), &body))
        }
        Command::Search { data, space, out } => {
            let records = load_records(&data)?;
            let table = crosstab(&records);
            let opts = SearchOptions::with_space(space.into());
            let res = consensus(&table, &opts)?;
            let config = json!({
                "data": data.data,
                "vars": table.schema().names(),
                "space": opts.space,
            });
            emit(&out, to_json(config, &res))
        }
        Command::Mediators {
            data,
            treatment,
            model,
            space,
            out,
        } => {
            let records = load_records(&data)?;
            let table = crosstab(&records);
            let schema = table.schema().clone();
            let opts = SearchOptions::with_space(space.into());
            let (selected, via) = match model {
                Some(spec) => (GeneratingClass::parse(&spec, &schema)?, "explicit"),
                None => {
                    let res = consensus(&table, &opts)?;
                    let gc = res.agreed_class.ok_or_else(|| {
                        Error::Search("forward and backward searches disagree; pass --model".into())
                    })?;
                    (gc, "consensus")
                }
            };
            let names = schema.names();
            let graph = InteractionGraph::from_generating_class(&selected, &names)?;
            if matches!(out.format, FormatArg::Dot) {
                return emit(&out, graph.to_dot());
            }
            let decompositions: Vec<_> = graph
                .weak_decompositions()
                .iter()
                .map(|d| graph.decomposition_json(d))
                .collect();
            let candidates: Vec<Vec<String>> = graph
                .mediator_candidates(&treatment)?
                .into_iter()
                .map(|b| graph.names_of(b))
                .collect();
            let config = json!({
                "data": data.data,
                "vars": names,
                "treatment": treatment,
                "space": opts.space,
                "model_source": via,
            });
            let body = json!({
                "model": selected.format(&schema),
                "graphical": is_graphical(&selected, &schema.names())?,
                "graph": graph.to_json(),
                "decompositions": decompositions,
                "candidates": candidates,
            });
            emit(&out, to_json(config, &body))
        }
        Command::Validate {
            data,
            target,
            q,
            q_grid,
            reps,
            seed,
            workers,
            space,
            out,
        } => {
            let seed = resolve_seed(seed);
            let records = load_records(&data)?;
            let schema = records.schema().clone();
            let target_gc = resolve_target(&target, &schema)?;
            let qs = match (q, q_grid) {
                (Some(q), None) => vec![q],
                (None, Some(grid)) => parse_q_grid(&grid)?,
                (None, None) => default_q_grid(),
                (Some(_), Some(_)) => {
                    return Err(Error::Schema("pass --q or --q-grid, not both".into()))
                }
            };
            let opts = SearchOptions::with_space(space.into());
            let names = schema.names();
            let reports = with_workers(workers, || {
                recovery_curve(&records, &target_gc, &names, &qs, reps, seed, &opts)
            })?;
            let baseline = 1.0 / enumerate_hierarchical(schema.len())?.len() as f64;
            match out.format {
                FormatArg::Json => {
                    let config = json!({
                        "data": data.data, "vars": names, "target": target_gc.format(&schema),
                        "qs": qs, "reps": reps, "seed": seed, "space": opts.space,
                        "baseline": baseline,
                    });
                    emit(&out, to_json(config, &reports))
                }
                _ => emit(&out, recovery_csv(&reports, baseline, seed)),
            }
        }
        Command::Mediate {
            data,
            treatment,
            mediator,
            outcome,
            covariates,
            nboot,
            seed,
            workers,
            out,
        } => {
            let seed = resolve_seed(seed);
            let records = load_records(&data)?;
            let opts = MediationOptions {
                n_boot: nboot,
                seed,
                ..MediationOptions::default()
            };
            let covs: Vec<&str> = covariates.iter().map(String::as_str).collect();
            let estimate = with_workers(workers, || {
                mediate(&records, &treatment, &mediator, &outcome, &covs, &opts)
            })?;
            let config = json!({
                "data": data.data, "treatment": treatment, "mediator": mediator,
                "outcome": outcome, "covariates": covariates,
                "nboot": nboot, "seed": seed,
                "mediator_coding": "categorical", "covariate_coding": "numeric",
            });
            emit(&out, to_json(config, &estimate))
        }
    }
}
