use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use xtree_core::data::{load_project, split_by_versions, MetricSchema};
use xtree_core::discretize::{discretize_table, SplitRules};
use xtree_core::experiment::{
    build_planner, dataset_oracle, dataset_seed, run_experiment, whatif_seed, xtree_planner, Dataset,
    ExperimentConfig, Planner, Treatment,
};
use xtree_core::report::{self, Format, Provenance, Table};
use xtree_core::seed;
use xtree_core::stats::{Bootstrap, ScottKnott, TreatmentSamples};
use xtree_core::synthetic::{generate_project, retained_shapes, write_project};
use xtree_core::xtree::{whatif_directions, WhatIf};

/// Projects and test versions used when no `--dataset` is given.
const DEFAULT_DATASETS: [&str; 5] = ["jedit:4.3", "ivy:2.0", "ant:1.7", "lucene:2.4", "poi:3.0"];

#[derive(Parser)]
#[command(name = "xtree", version, about = "Plan defect-reducing code changes from project history")]
struct Cli {
    #[command(flatten)]
    flags: Flags,
    #[command(subcommand)]
    command: Command,
}

/// Settings shared by every command. Each may also come from `--config`;
/// flags win over the file.
#[derive(Args, Default)]
struct Flags {
    /// Master seed; every random stream derives from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    repeats: Option<usize>,
    /// text, csv or json.
    #[arg(long, global = true)]
    format: Option<Format>,
    /// Write report files here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Plain `key = value` file with defaults for these flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory holding `<project>-<version>.csv` files. Defaults to
    /// `$XTREE_DATA_DIR`, then `data`.
    #[arg(long, global = true)]
    data_dir: Option<PathBuf>,
    /// `name` or `name:testversion`; repeatable.
    #[arg(long = "dataset", global = true)]
    datasets: Vec<String>,
    /// Comma-separated planners.
    #[arg(long, global = true, value_delimiter = ',')]
    treatments: Vec<Treatment>,
    #[arg(long, global = true)]
    pd_min: Option<f64>,
    #[arg(long, global = true)]
    pf_max: Option<f64>,
    /// Alves percentile in (0, 1].
    #[arg(long, global = true)]
    percentile: Option<f64>,
    /// Shatnawi admission p-value.
    #[arg(long, global = true)]
    p0: Option<f64>,
    /// Shatnawi acceptable risk level.
    #[arg(long, global = true)]
    p1: Option<f64>,
    #[arg(long, global = true)]
    mention_floor: Option<f64>,
    #[arg(long, global = true)]
    confidence: Option<f64>,
    #[arg(long, global = true)]
    de_population: Option<usize>,
    #[arg(long, global = true)]
    de_generations: Option<usize>,
    /// Skip the forest search and use the default forest.
    #[arg(long, global = true)]
    untuned: bool,
    /// Keep datasets whose oracle fails the gate.
    #[arg(long, global = true)]
    keep_unusable: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Per-metric ranges of the training data.
    Discretize,
    /// Plans for every test module.
    Plan {
        #[arg(long)]
        treatment: Treatment,
    },
    /// Tune and score the verification oracle.
    TuneOracle,
    /// Full experiment: ranks, frequencies, magnitudes, directions.
    Evaluate,
    /// Direction of change between tree leaves.
    Whatif {
        /// Also print the tree.
        #[arg(long)]
        tree: bool,
    },
    /// Scott-Knott ranks of samples from a CSV (`[dataset,]treatment,value`)
    /// or of the improvements in an `evaluate` bundle.
    Rank {
        #[arg(long)]
        input: PathBuf,
    },
    /// Write synthetic projects shaped like the five default datasets.
    Synthesize {
        #[arg(long)]
        dir: PathBuf,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Discretize => "discretize",
            Command::Plan { .. } => "plan",
            Command::TuneOracle => "tune-oracle",
            Command::Evaluate => "evaluate",
            Command::Whatif { .. } => "whatif",
            Command::Rank { .. } => "rank",
            Command::Synthesize { .. } => "synthesize",
        }
    }
}

/// Flags merged with the config file and defaults.
struct Settings {
    format: Format,
    out: Option<PathBuf>,
    data_dir: PathBuf,
    datasets: Vec<String>,
    experiment: ExperimentConfig,
}

fn read_config(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("{}:{}: expected `key = value`", path.display(), i + 1);
        };
        map.insert(k.trim().replace('-', "_"), v.trim().to_string());
    }
    Ok(map)
}

fn take<T: std::str::FromStr>(file: &mut BTreeMap<String, String>, key: &str) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    file.remove(key)
        .map(|v| v.parse::<T>().map_err(|e| anyhow::anyhow!("config `{key}`: {e}")))
        .transpose()
}

fn list(v: Option<String>) -> Vec<String> {
    v.map(|s| s.split(',').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect())
        .unwrap_or_default()
}

impl Settings {
    fn resolve(flags: Flags) -> Result<Self> {
        let mut file = match &flags.config {
            Some(p) => read_config(p)?,
            None => BTreeMap::new(),
        };
        let mut ex = ExperimentConfig::default();
        macro_rules! pick {
            ($field:ident) => {{
                let from_file = take(&mut file, stringify!($field))?;
                flags.$field.or(from_file)
            }};
        }
        if let Some(v) = pick!(seed) {
            ex.master_seed = v;
        }
        if let Some(v) = pick!(repeats) {
            ex.repeats = v;
        }
        if let Some(v) = pick!(pd_min) {
            ex.oracle.gate.pd_min = v;
        }
        if let Some(v) = pick!(pf_max) {
            ex.oracle.gate.pf_max = v;
        }
        if let Some(v) = pick!(percentile) {
            ex.planner.percentile = v;
        }
        if let Some(v) = pick!(p0) {
            ex.planner.p0 = v;
        }
        if let Some(v) = pick!(p1) {
            ex.planner.p1 = v;
        }
        if let Some(v) = pick!(mention_floor) {
            ex.mention_floor = v;
        }
        if let Some(v) = pick!(confidence) {
            ex.confidence = v;
        }
        if let Some(v) = pick!(de_population) {
            ex.oracle.de.population = v;
        }
        if let Some(v) = pick!(de_generations) {
            ex.oracle.de.generations = v;
        }
        let format = pick!(format).unwrap_or_default();
        ex.oracle.untuned = flags.untuned || take(&mut file, "untuned")?.unwrap_or(false);
        ex.require_usable = !(flags.keep_unusable || take(&mut file, "keep_unusable")?.unwrap_or(false));

        let file_treatments = list(file.remove("treatments"));
        if !flags.treatments.is_empty() {
            ex.treatments = flags.treatments;
        } else if !file_treatments.is_empty() {
            ex.treatments = file_treatments
                .iter()
                .map(|t| t.parse())
                .collect::<Result<_, _>>()
                .context("config `treatments`")?;
        }
        let file_datasets = list(file.remove("datasets").or_else(|| file.remove("dataset")));
        let datasets = if !flags.datasets.is_empty() {
            flags.datasets
        } else if !file_datasets.is_empty() {
            file_datasets
        } else {
            DEFAULT_DATASETS.iter().map(|s| s.to_string()).collect()
        };
        let data_dir = flags
            .data_dir
            .or_else(|| file.remove("data_dir").map(PathBuf::from))
            .or_else(|| std::env::var_os("XTREE_DATA_DIR").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("data"));
        let out = flags.out.or_else(|| file.remove("out").map(PathBuf::from));
        if let Some(k) = file.keys().next() {
            bail!("unknown config key `{k}`");
        }
        Ok(Self {
            format,
            out,
            data_dir,
            datasets,
            experiment: ex,
        })
    }

    fn provenance(&self, command: &str, loaded: &[Dataset]) -> Provenance {
        let ex = &self.experiment;
        let mut p = Provenance::new()
            .with("tool", format!("xtree {}", env!("CARGO_PKG_VERSION")))
            .with("command", command)
            .with("seed", ex.master_seed)
            .with("repeats", ex.repeats)
            .with(
                "treatments",
                ex.treatments.iter().map(|t| t.name()).collect::<Vec<_>>().join(","),
            )
            .with("data_dir", self.data_dir.display())
            .with("pd_min", ex.oracle.gate.pd_min)
            .with("pf_max", ex.oracle.gate.pf_max)
            .with("percentile", ex.planner.percentile)
            .with("p0", ex.planner.p0)
            .with("p1", ex.planner.p1)
            .with("mention_floor", ex.mention_floor)
            .with("confidence", ex.confidence)
            .with("de_population", ex.oracle.de.population)
            .with("de_generations", ex.oracle.de.generations)
            .with("untuned", ex.oracle.untuned)
            .with("keep_unusable", !ex.require_usable);
        for d in loaded {
            p.push(
                "dataset",
                format!(
                    "{} train={} ({} rows) test={} ({} rows)",
                    d.name,
                    d.split.train.source_versions.join("+"),
                    d.split.train.len(),
                    d.test_version,
                    d.split.test.len()
                ),
            );
        }
        p
    }
}

fn load_dataset(data_dir: &Path, spec: &str, schema: &MetricSchema) -> Result<Dataset> {
    let (name, version) = match spec.split_once(':') {
        Some((n, v)) => (n, Some(v)),
        None => (spec, None),
    };
    if name.is_empty() {
        bail!("empty dataset name in `{spec}`");
    }
    let nested = data_dir.join(name);
    let dir = if nested.is_dir() { nested } else { data_dir.to_path_buf() };
    let tables = load_project(&dir, name, schema).with_context(|| format!("loading dataset `{name}`"))?;
    let test_version = match version {
        Some(v) => v.to_string(),
        None => tables
            .last()
            .and_then(|t| t.source_versions.first().cloned())
            .context("no versions found")?,
    };
    let split = split_by_versions(&tables, &test_version).with_context(|| format!("dataset `{name}`"))?;
    Ok(Dataset {
        name: name.to_string(),
        test_version,
        split,
    })
}

/// Writes `<stem>.<ext>` under `--out`, or prints to standard output.
fn emit(settings: &Settings, stem: &str, ext: &str, content: &str) -> Result<()> {
    match &settings.out {
        Some(dir) => {
            std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
            let path = dir.join(format!("{stem}.{ext}"));
            std::fs::write(&path, content).with_context(|| format!("cannot write {}", path.display()))?;
            eprintln!("wrote {}", path.display());
        }
        None => stdout(content)?,
    }
    Ok(())
}

/// A reader closing the pipe early (`| head`) is not an error.
fn stdout(content: &str) -> Result<()> {
    use std::io::Write;
    match std::io::stdout().lock().write_all(content.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn emit_tables(settings: &Settings, stem: &str, tables: &[Table], provenance: &Provenance) -> Result<()> {
    let f = settings.format;
    emit(settings, stem, f.extension(), &report::render_all(tables, f, provenance))
}

fn run(cli: Cli) -> Result<()> {
    let command = cli.command;
    let settings = Settings::resolve(cli.flags)?;
    let schema = MetricSchema::jureczko();
    let load = || -> Result<Vec<Dataset>> {
        settings
            .datasets
            .iter()
            .map(|d| load_dataset(&settings.data_dir, d, &schema))
            .collect()
    };
    let ex = &settings.experiment;
    match &command {
        Command::Synthesize { dir } => {
            for shape in retained_shapes() {
                let tables = generate_project(&shape, ex.master_seed);
                write_project(dir, &shape.name, &tables)?;
            }
            eprintln!("wrote synthetic projects to {}", dir.display());
        }
        Command::Rank { input } => {
            let prov = settings.provenance(command.name(), &[]).with("input", input.display());
            let groups = read_samples(input)?;
            let mut table = Table::new(
                "ranks",
                &["dataset", "rank", "treatment", "median", "iqr", "p25", "p75", "n"],
            );
            for (dataset, samples) in &groups {
                let sk = ScottKnott {
                    bootstrap: Bootstrap {
                        confidence: ex.confidence,
                        ..Bootstrap::default()
                    },
                    a12_floor: ex.a12_floor,
                    seed: seed::derive(ex.master_seed, &["rank", dataset]),
                };
                report::push_ranks(&mut table, dataset, &sk.rank(samples));
            }
            emit_tables(&settings, "ranks", &[table], &prov)?;
        }
        Command::Discretize => {
            let data = load()?;
            let prov = settings.provenance(command.name(), &data);
            let mut tables = Vec::new();
            for d in &data {
                let disc = discretize_table(&d.split.train, &SplitRules::default())?;
                tables.push(report::discretization_table(
                    &format!("{} training ranges", d.name),
                    &disc,
                    &d.split.train.schema,
                ));
            }
            emit_tables(&settings, "discretization", &tables, &prov)?;
        }
        Command::Plan { treatment } => {
            let data = load()?;
            let prov = settings.provenance(command.name(), &data).with("treatment", treatment);
            let mut plans = Vec::new();
            let mut thresholds = Vec::new();
            for d in &data {
                let s = seed::derive(dataset_seed(ex.master_seed, &d.name), &[treatment.name(), "plan"]);
                let planner = build_planner(*treatment, &d.split.train, &ex.planner, s)?;
                let rows: Vec<_> = d.split.test.rows.iter().map(|m| (m, planner.plan(m))).collect();
                plans.push(report::plan_table(
                    &format!("{} {} plans for {}", d.name, treatment, d.test_version),
                    &rows,
                    &d.split.test.schema,
                ));
                if let Planner::Threshold(set) = &planner {
                    let mut t = report::threshold_table(set, &d.split.train.schema);
                    t.title = format!("{} {}", d.name, t.title);
                    thresholds.push(t);
                }
            }
            if settings.out.is_some() {
                emit_tables(&settings, "plans", &plans, &prov)?;
                if !thresholds.is_empty() {
                    emit_tables(&settings, "thresholds", &thresholds, &prov)?;
                }
            } else {
                // One document on standard output.
                thresholds.extend(plans);
                emit_tables(&settings, "plans", &thresholds, &prov)?;
            }
        }
        Command::TuneOracle => {
            let data = load()?;
            let prov = settings.provenance(command.name(), &data);
            let mut outcomes = Vec::new();
            let mut configs = Vec::new();
            for d in &data {
                let (oracle, outcome) = dataset_oracle(d, ex)?;
                configs.push((d.name.clone(), oracle.config));
                outcomes.push(outcome);
            }
            emit_tables(&settings, "oracle", &[report::oracle_table(&outcomes)], &prov)?;
            for (name, config) in &configs {
                let kv = report::forest_config_kv(config, &prov.clone().with("forest", name));
                if settings.out.is_some() {
                    emit(&settings, &format!("{name}-forest"), "cfg", &kv)?;
                } else if settings.format == Format::Text {
                    stdout(&format!("\n[{name}]\n{}", config.to_kv()))?;
                }
            }
        }
        Command::Whatif { tree } => {
            let data = load()?;
            let prov = settings.provenance(command.name(), &data);
            let mut rows = Vec::new();
            let mut trees = Vec::new();
            for d in &data {
                let t = xtree_planner(&d.split.train, &ex.planner)?;
                let params = WhatIf {
                    seed: whatif_seed(ex.master_seed, &d.name),
                    ..ex.whatif
                };
                rows.push((d.name.clone(), whatif_directions(&t, &params)?));
                trees.push((d.name.clone(), t.render()));
            }
            let refs: Vec<(&str, _)> = rows.iter().map(|(n, t)| (n.as_str(), t)).collect();
            emit_tables(&settings, "directions", &[report::direction_table(&refs, &schema)], &prov)?;
            if *tree {
                for (name, text) in &trees {
                    let body = format!("{}{text}", prov.clone().with("tree", name).comment_block());
                    match &settings.out {
                        Some(_) => emit(&settings, &format!("{name}-tree"), "txt", &body)?,
                        None => stdout(&format!("\n{name}\n{text}"))?,
                    }
                }
            }
        }
        Command::Evaluate => {
            let data = load()?;
            let prov = settings.provenance(command.name(), &data);
            let result = run_experiment(&data, ex)?;
            let tables = report::experiment_tables(&result);
            match &settings.out {
                Some(_) => {
                    for (stem, table) in &tables {
                        emit(&settings, stem, settings.format.extension(), &table.render(settings.format, &prov))?;
                    }
                    emit(&settings, "bundle", "json", &report::json_bundle(&result, &prov))?;
                }
                None if settings.format == Format::Json => stdout(&report::json_bundle(&result, &prov))?,
                None => {
                    let shown: Vec<Table> = tables
                        .into_iter()
                        .filter(|(stem, _)| *stem != "trials")
                        .map(|(_, t)| t)
                        .collect();
                    stdout(&report::render_all(&shown, settings.format, &prov))?;
                }
            }
        }
    }
    Ok(())
}

/// Samples grouped by dataset, treatments in first-seen order.
fn read_samples(path: &Path) -> Result<BTreeMap<String, Vec<TreatmentSamples>>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut rows: Vec<(String, String, f64)> = Vec::new();
    if path.extension().is_some_and(|e| e == "json") {
        let v: Value = serde_json::from_str(&text).with_context(|| format!("{} is not json", path.display()))?;
        let trials = v["report"]["trials"]
            .as_array()
            .context("expected an evaluate bundle with report.trials")?;
        for t in trials {
            if let Some(x) = t["improvement"].as_f64() {
                rows.push((
                    t["dataset"].as_str().unwrap_or_default().to_string(),
                    t["treatment"].as_str().unwrap_or_default().to_string(),
                    x,
                ));
            }
        }
    } else {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#'));
        let header: Vec<String> = lines
            .next()
            .context("empty sample file")?
            .split(',')
            .map(|h| h.trim().to_ascii_lowercase())
            .collect();
        let col = |name: &str| header.iter().position(|h| h == name);
        let (t, v) = (
            col("treatment").context("missing `treatment` column")?,
            col("value").context("missing `value` column")?,
        );
        let ds = col("dataset");
        for (i, line) in lines.enumerate() {
            let cells: Vec<&str> = line.split(',').map(str::trim).collect();
            let get = |c: usize| cells.get(c).copied().unwrap_or_default();
            let x: f64 = get(v)
                .parse()
                .with_context(|| format!("{}: row {}: bad value `{}`", path.display(), i + 1, get(v)))?;
            rows.push((ds.map(get).unwrap_or("all").to_string(), get(t).to_string(), x));
        }
    }
    if rows.is_empty() {
        bail!("{}: no samples", path.display());
    }
    let mut out: BTreeMap<String, Vec<TreatmentSamples>> = BTreeMap::new();
    for (dataset, treatment, x) in rows {
        let group = out.entry(dataset).or_default();
        match group.iter_mut().find(|s| s.name == treatment) {
            Some(s) => s.values.push(x),
            None => group.push(TreatmentSamples::new(treatment, vec![x])),
        }
    }
    Ok(out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
