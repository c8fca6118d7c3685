use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use mutreduce::baselines::{sweep_front, BaselineKind, BaselineSpec};
use mutreduce::cache::{self, CacheError};
use mutreduce::experiment::{self, Indicator};
use mutreduce::front::{self, write_atomic, FrontEntry, FrontFileError, FrontRow};
use mutreduce::rng::{evaluation_rng, fnv1a};
use mutreduce::search::{self, SearchOutcome};
use mutreduce::{evaluate as evaluate_objectives, Front, Grammar, MethodRuns, MutationCache, SearchConfig, Strategy};

use crate::config::TrainSettings;
use crate::{Algorithm, BaselinesArgs, CliError, EvaluateArgs, ReportArgs, SynthArgs, TrainArgs};

type Result<T> = std::result::Result<T, CliError>;

fn runtime(context: impl std::fmt::Display) -> impl FnOnce(std::io::Error) -> CliError {
    move |e| CliError::Runtime(format!("{context}: {e}"))
}

impl From<CacheError> for CliError {
    fn from(e: CacheError) -> Self {
        match e {
            CacheError::Io { .. } => CliError::Runtime(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<FrontFileError> for CliError {
    fn from(e: FrontFileError) -> Self {
        match e {
            FrontFileError::Io(_) => CliError::Runtime(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// Loads a JSON cache, or a CSV kill matrix by extension.
fn load_any_cache(path: &Path) -> Result<MutationCache> {
    Ok(if is_csv(path) { cache::load_kill_matrix_csv(path)? } else { cache::load_cache(path)? })
}

fn save_any_cache(cache: &MutationCache, path: &Path) -> Result<()> {
    if is_csv(path) {
        let mut buf = Vec::new();
        cache::write_kill_matrix_csv(cache, &mut buf)?;
        write_atomic(path, &buf).map_err(runtime(path.display()))
    } else {
        Ok(cache::save_cache(cache, path)?)
    }
}

fn hash_hex(text: &str) -> String {
    format!("{:016x}", fnv1a(text.as_bytes()))
}

/// Hash of the canonical JSON form, so a CSV and its converted JSON agree.
fn cache_hash(cache: &MutationCache) -> String {
    hash_hex(&cache::to_cache_json(cache))
}

fn grammar_hash(grammar: &Grammar) -> String {
    hash_hex(&grammar.to_string())
}

fn thread_pool(jobs: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    match jobs {
        Some(0) => return Err(CliError::Validation("--jobs must be at least 1".into())),
        Some(n) => builder = builder.num_threads(n),
        None => {}
    }
    builder.build().map_err(|e| CliError::Runtime(format!("cannot start worker threads: {e}")))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(runtime(dir.display()))
}

fn absolute(path: &Path) -> PathBuf {
    fs::canonicalize(path).unwrap_or_else(|_| path.to_path_buf())
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
    text.push('\n');
    write_atomic(path, text.as_bytes()).map_err(runtime(path.display()))
}

pub fn cache_synth(a: &SynthArgs) -> Result<()> {
    let spec = cache::SynthSpec {
        n_operators: a.operators,
        n_mutants: a.mutants,
        n_tests: a.tests,
        kill_density: a.kill_density,
        cost_skew: a.cost_skew,
        redundancy: a.redundancy,
    };
    let cache = cache::synth_cache(&spec, a.seed)?;
    save_any_cache(&cache, &a.output)?;
    println!(
        "wrote {} ({} operators, {} mutants, {} tests, global score {:.4})",
        a.output.display(),
        cache.operators().len(),
        cache.mutants().len(),
        cache.tests().len(),
        cache.global_score()
    );
    Ok(())
}

pub fn cache_inspect(path: &Path) -> Result<()> {
    let cache = load_any_cache(path)?;
    println!("operators: {}", cache.operators().len());
    println!("mutants: {}", cache.mutants().len());
    println!("tests: {}", cache.tests().len());
    println!("killable: {}", cache.killable_count());
    println!("global_score: {}", cache.global_score());
    println!("total_cost: {}", cache.total_cost());
    println!("hash: {}", cache_hash(&cache));
    println!("operator yields:");
    for (id, n) in cache.operator_yields() {
        println!("  {id}\t{n}");
    }
    Ok(())
}

pub fn cache_convert(input: &Path, output: &Path) -> Result<()> {
    let cache = load_any_cache(input)?;
    save_any_cache(&cache, output)?;
    println!("wrote {} ({} mutants)", output.display(), cache.mutants().len());
    Ok(())
}

pub fn cache_perturb(input: &Path, fraction: f64, seed: u64, output: &Path) -> Result<()> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(CliError::Validation("--fraction must lie in [0, 1]".into()));
    }
    let cache = load_any_cache(input)?;
    let perturbed = cache::perturb_killers(&cache, fraction, seed)?;
    save_any_cache(&perturbed, output)?;
    println!("wrote {} (global score {:.4} -> {:.4})", output.display(), cache.global_score(), perturbed.global_score());
    Ok(())
}

/// Everything needed to reproduce a `train` invocation.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct TrainManifest {
    tool: String,
    version: String,
    command: String,
    algorithm: Algorithm,
    cache: PathBuf,
    cache_hash: String,
    /// `None` for the built-in grammar.
    grammar: Option<PathBuf>,
    grammar_hash: String,
    /// The `seed` field holds the first seed.
    config: SearchConfig,
    seeds: Vec<u64>,
    created_unix: u64,
}

struct TrainPlan {
    algorithm: Algorithm,
    cache_path: PathBuf,
    grammar_path: Option<PathBuf>,
    config: SearchConfig,
    seeds: Vec<u64>,
    expected_hashes: Option<(String, String)>,
}

fn plan_from_args(a: &TrainArgs) -> Result<TrainPlan> {
    let mut settings = TrainSettings::default();
    if let Some(path) = &a.config {
        let text = fs::read_to_string(path).map_err(runtime(path.display()))?;
        settings.apply_text(&text)?;
    }
    for pair in &a.settings {
        settings.apply_pair(pair)?;
    }
    if let Some(runs) = a.runs {
        settings.runs = runs;
    }
    settings.validate()?;
    let first = a.seed.unwrap_or(0);
    let seeds = (0..settings.runs as u64)
        .map(|i| first.checked_add(i).ok_or_else(|| CliError::Validation("seed range overflows".into())))
        .collect::<Result<Vec<_>>>()?;
    let cache_path = a.cache.clone().ok_or_else(|| CliError::Validation("--cache is required".into()))?;
    Ok(TrainPlan {
        algorithm: a.algorithm.unwrap_or(Algorithm::Ge),
        cache_path,
        grammar_path: a.grammar.clone(),
        config: SearchConfig { seed: first, ..settings.search },
        seeds,
        expected_hashes: None,
    })
}

fn plan_from_manifest(path: &Path, cache_override: Option<&Path>) -> Result<TrainPlan> {
    let text = fs::read_to_string(path).map_err(runtime(path.display()))?;
    let m: TrainManifest =
        serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    m.config.validate().map_err(|e| CliError::Validation(e.0))?;
    Ok(TrainPlan {
        algorithm: m.algorithm,
        cache_path: cache_override.map(Path::to_path_buf).unwrap_or(m.cache),
        grammar_path: m.grammar,
        config: m.config,
        seeds: m.seeds,
        expected_hashes: Some((m.cache_hash, m.grammar_hash)),
    })
}

fn load_grammar(path: Option<&Path>) -> Result<Grammar> {
    match path {
        None => Ok(Grammar::default_grammar()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(runtime(p.display()))?;
            Grammar::parse(&text).map_err(|e| CliError::Validation(format!("{}: {e}", p.display())))
        }
    }
}

fn write_run_log(path: &Path, outcome: &SearchOutcome) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    for line in &outcome.log {
        wtr.serialize(line).map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    let bytes = wtr.into_inner().map_err(|e| CliError::Runtime(e.to_string()))?;
    write_atomic(path, &bytes).map_err(runtime(path.display()))
}

pub fn train(a: &TrainArgs) -> Result<()> {
    let plan = match &a.manifest {
        Some(m) => plan_from_manifest(m, a.cache.as_deref())?,
        None => plan_from_args(a)?,
    };
    let cache = load_any_cache(&plan.cache_path)?;
    let grammar = load_grammar(plan.grammar_path.as_deref())?;
    let hashes = (cache_hash(&cache), grammar_hash(&grammar));
    if let Some(expected) = &plan.expected_hashes {
        if expected.0 != hashes.0 {
            return Err(CliError::Validation(format!(
                "cache {} does not match the manifest (hash {} != {})",
                plan.cache_path.display(),
                hashes.0,
                expected.0
            )));
        }
        if expected.1 != hashes.1 {
            return Err(CliError::Validation("grammar does not match the manifest".into()));
        }
    }
    create_dir(&a.out)?;
    let pool = thread_pool(a.jobs.jobs)?;
    let sizes = pool.install(|| {
        plan.seeds
            .par_iter()
            .map(|&seed| {
                let config = SearchConfig { seed, ..plan.config };
                let outcome = match plan.algorithm {
                    Algorithm::Ge => search::run_ge(&config, &grammar, &cache),
                    Algorithm::Random => search::run_random_search(&config, &grammar, &cache),
                }
                .map_err(|e| CliError::Validation(e.0))?;
                front::save_front(a.out.join(format!("front_seed{seed}.csv")), seed, &outcome.front)?;
                write_run_log(&a.out.join(format!("runlog_seed{seed}.csv")), &outcome)?;
                Ok(outcome.front.len())
            })
            .collect::<Result<Vec<usize>>>()
    })?;
    let manifest = TrainManifest {
        tool: "mutreduce".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: "train".into(),
        algorithm: plan.algorithm,
        cache: absolute(&plan.cache_path),
        cache_hash: hashes.0,
        grammar: plan.grammar_path.as_deref().map(absolute),
        grammar_hash: hashes.1,
        config: plan.config,
        seeds: plan.seeds.clone(),
        created_unix: unix_now(),
    };
    write_json(&a.out.join("manifest.json"), &manifest)?;
    println!(
        "{} runs written to {} (front sizes {}..{})",
        sizes.len(),
        a.out.display(),
        sizes.iter().min().unwrap_or(&0),
        sizes.iter().max().unwrap_or(&0)
    );
    Ok(())
}

#[derive(Serialize)]
struct BaselinesManifest {
    tool: String,
    version: String,
    command: String,
    cache: PathBuf,
    cache_hash: String,
    kinds: Vec<String>,
    repetitions: usize,
    seeds: Vec<u64>,
    created_unix: u64,
}

pub fn baselines(a: &BaselinesArgs) -> Result<()> {
    let kinds = a
        .kinds
        .iter()
        .map(|k| k.parse::<BaselineKind>().map_err(|e| CliError::Validation(e.to_string())))
        .collect::<Result<Vec<_>>>()?;
    if kinds.is_empty() || a.runs == 0 || a.repetitions == 0 {
        return Err(CliError::Validation("need at least one kind, run and repetition".into()));
    }
    let seeds: Vec<u64> = (0..a.runs as u64).map(|i| a.seed.wrapping_add(i)).collect();
    let cache = load_any_cache(&a.cache)?;
    for kind in &kinds {
        create_dir(&a.out.join(kind.name()))?;
    }
    let jobs: Vec<(BaselineKind, u64)> = kinds.iter().flat_map(|&k| seeds.iter().map(move |&s| (k, s))).collect();
    let pool = thread_pool(a.jobs.jobs)?;
    pool.install(|| {
        jobs.par_iter().try_for_each(|&(kind, seed)| {
            let front = sweep_front(&kind.sweep(), &cache, seed, a.repetitions);
            front::save_front(a.out.join(kind.name()).join(format!("front_seed{seed}.csv")), seed, &front)
                .map_err(CliError::from)
        })
    })?;
    write_json(
        &a.out.join("manifest.json"),
        &BaselinesManifest {
            tool: "mutreduce".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: "baselines".into(),
            cache: absolute(&a.cache),
            cache_hash: cache_hash(&cache),
            kinds: kinds.iter().map(|k| k.name().to_string()).collect(),
            repetitions: a.repetitions,
            seeds,
            created_unix: unix_now(),
        },
    )?;
    println!("{} kinds x {} seeds written to {}", kinds.len(), a.runs, a.out.display());
    Ok(())
}

/// Re-evaluates one front file row; baseline labels and grammar strategies
/// are both accepted.
fn reevaluate(text: &str, cache: &MutationCache, seed: u64, repetitions: usize) -> Result<mutreduce::ObjectivePair> {
    let mut rng = evaluation_rng(seed, text);
    if let Some(spec) = BaselineSpec::parse(text) {
        return Ok(evaluate_objectives(&spec, cache, repetitions, &mut rng));
    }
    let strategy = Strategy::parse(text).map_err(|e| CliError::Validation(format!("`{text}`: {e}")))?;
    if strategy.render() != text {
        // the evaluation stream is keyed by the canonical text
        rng = evaluation_rng(seed, &strategy.render());
    }
    Ok(evaluate_objectives(&strategy, cache, repetitions, &mut rng))
}

pub fn evaluate(a: &EvaluateArgs) -> Result<()> {
    if a.repetitions == 0 {
        return Err(CliError::Validation("--repetitions must be at least 1".into()));
    }
    let rows = front::load_front(&a.front)?;
    let cache = load_any_cache(&a.cache)?;
    let mut out = Vec::with_capacity(rows.len());
    let (mut dt, mut ds) = (Vec::new(), Vec::new());
    for row in &rows {
        let seed = a.seed.unwrap_or(row.seed);
        let objectives = reevaluate(&row.entry.strategy_text, &cache, seed, a.repetitions)?;
        dt.push(objectives.time - row.entry.objectives.time);
        ds.push(objectives.score - row.entry.objectives.score);
        out.push(FrontRow { seed: row.seed, entry: FrontEntry { objectives, ..row.entry.clone() } });
    }
    let mut buf = Vec::new();
    front::write_front_rows(&mut buf, &out)?;
    write_atomic(&a.output, &buf).map_err(runtime(a.output.display()))?;
    let summary = |d: &[f64]| {
        let mean = d.iter().map(|x| x.abs()).sum::<f64>() / d.len().max(1) as f64;
        let max = d.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        format!("mean |d| {mean:.6}, max |d| {max:.6}")
    };
    println!("{} strategies re-evaluated into {}", out.len(), a.output.display());
    println!("time drift: {}", summary(&dt));
    println!("score drift: {}", summary(&ds));
    Ok(())
}

fn seed_from_name(path: &Path) -> Option<u64> {
    path.file_name()?.to_str()?.strip_prefix("front_seed")?.strip_suffix(".csv")?.parse().ok()
}

/// Fronts of one method, ordered by seed.
fn load_front_set(path: &Path) -> Result<Vec<Front>> {
    let mut by_seed: BTreeMap<u64, Vec<FrontEntry>> = BTreeMap::new();
    if path.is_dir() {
        let listing = fs::read_dir(path).map_err(runtime(path.display()))?;
        for item in listing {
            let file = item.map_err(runtime(path.display()))?.path();
            if let Some(seed) = seed_from_name(&file) {
                let rows = front::load_front(&file)?;
                by_seed.entry(seed).or_default().extend(rows.into_iter().map(|r| r.entry));
            }
        }
    } else {
        for row in front::load_front(path)? {
            by_seed.entry(row.seed).or_default().push(row.entry);
        }
    }
    if by_seed.is_empty() {
        return Err(CliError::Validation(format!("no front files found at {}", path.display())));
    }
    Ok(by_seed.into_values().map(Front::non_dominated).collect())
}

pub fn report(a: &ReportArgs) -> Result<()> {
    let methods = a
        .methods
        .iter()
        .map(|m| {
            let (name, path) =
                m.split_once('=').ok_or_else(|| CliError::Validation(format!("`{m}`: expected NAME=PATH")))?;
            Ok(MethodRuns { name: name.to_string(), fronts: load_front_set(Path::new(path))? })
        })
        .collect::<Result<Vec<_>>>()?;
    let report = experiment::compare_experiment(&methods).map_err(|e| CliError::Validation(e.to_string()))?;
    create_dir(&a.out)?;
    let csv_err = |e: csv::Error| CliError::Runtime(e.to_string());
    let mut outputs: Vec<(&str, Vec<u8>)> = Vec::new();
    for (name, ind) in [("hv_table.csv", Indicator::Hv), ("igd_table.csv", Indicator::Igd)] {
        let mut buf = Vec::new();
        experiment::write_indicator_table(&mut buf, &a.experiment, report.indicator(ind)).map_err(csv_err)?;
        outputs.push((name, buf));
    }
    let mut buf = Vec::new();
    experiment::write_pairwise_csv(&mut buf, &report).map_err(csv_err)?;
    outputs.push(("pairwise.csv", buf));
    let mut buf = Vec::new();
    experiment::write_runs_csv(&mut buf, &report).map_err(csv_err)?;
    outputs.push(("runs.csv", buf));
    let mut buf = Vec::new();
    experiment::write_scatter_csv(&mut buf, &methods).map_err(csv_err)?;
    outputs.push(("scatter.csv", buf));
    for (name, bytes) in outputs {
        let path = a.out.join(name);
        write_atomic(&path, &bytes).map_err(runtime(path.display()))?;
    }
    for ind in [&report.hv, &report.igd] {
        let cells: Vec<String> = ind.methods.iter().map(|m| format!("{} {:.4} ({:.4})", m.method, m.mean, m.sd)).collect();
        println!("{}: {} | p = {:.3e}", ind.indicator.name(), cells.join(", "), ind.kruskal_wallis.p);
    }
    println!("report written to {}", a.out.display());
    Ok(())
}
