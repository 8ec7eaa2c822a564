use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use absdetect_core::analysis::{partition_errors, research_questions_report, AnalysisOptions, ErrorPartition};
use absdetect_core::corpus::{AbstractRecord, DatasetFormat, PairedDataset};
use absdetect_core::evaluation::{
    clean_dataset, leaderboard as rank, load_predictions, run_experiment_keeping, score_documents, ExperimentConfig,
    ExperimentReport, FeatureConfig, ModelBundle, ModelConfig, Resources, MODEL_FILE,
};
use absdetect_core::features::{EmbeddingTable, DEFAULT_MAX_DF, DEFAULT_MAX_LEN, DEFAULT_MAX_N, DEFAULT_MIN_DF};
use absdetect_core::generation::{
    ai_record_id, assemble_pairs, load_human_abstracts, CompletionEndpoint, GenerationParams, Generator, HttpEndpoint,
    MockEndpoint, ResponseCache, RetryPolicy, API_KEY_ENV, ENDPOINT_URL_ENV,
};
use absdetect_core::models::{LogRegHyper, LstmHyper, SvmHyper};
use absdetect_core::textprep::{self, CleanDocument, StopWordList};
use serde::Serialize;

use crate::args::{
    AnalyzeArgs, CleanArgs, ExperimentArgs, FeatureFamily, GenerateArgs, GlobalArgs, LeaderboardArgs, ModelFamily,
};
use crate::fail::{require_path, CliError};

type CliResult<T = ()> = Result<T, CliError>;

fn load_dataset(path: &Path) -> CliResult<PairedDataset> {
    require_path(path, "dataset")?;
    Ok(PairedDataset::load(path, DatasetFormat::from_path(path), false)?)
}

fn load_stopwords(path: Option<&Path>) -> CliResult<StopWordList> {
    match path {
        Some(p) => {
            require_path(p, "stop-word file")?;
            Ok(StopWordList::from_file(p)?)
        }
        None => Ok(StopWordList::english()),
    }
}

fn write_file(path: &Path, contents: &str) -> CliResult {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::runtime(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, contents).map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))
}

fn jsonl<T: Serialize>(items: impl IntoIterator<Item = T>) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(&item).expect("serializable"));
        out.push('\n');
    }
    out
}

pub fn generate(a: &GenerateArgs, global: &GlobalArgs) -> CliResult {
    require_path(&a.titles, "titles file")?;
    let mut params = GenerationParams::default();
    if let Some(m) = &a.model_name {
        params.model_name = m.clone();
    }
    if let Some(t) = a.max_tokens {
        params.max_tokens = t;
    }
    if let Some(t) = a.temperature {
        params.temperature = t;
    }
    let endpoint: Box<dyn CompletionEndpoint> = if a.mock {
        Box::new(MockEndpoint)
    } else {
        let url = a
            .url
            .clone()
            .or_else(|| std::env::var(ENDPOINT_URL_ENV).ok())
            .ok_or_else(|| CliError::usage(format!("no endpoint: pass --url or set {ENDPOINT_URL_ENV} (or use --mock)")))?;
        let key = std::env::var(API_KEY_ENV)
            .map_err(|_| CliError::usage(format!("{API_KEY_ENV} is not set (or use --mock)")))?;
        Box::new(HttpEndpoint::new(url, Some(key), Duration::from_secs(a.timeout)))
    };
    let humans = load_human_abstracts(&a.titles, DatasetFormat::from_path(&a.titles))?;
    if humans.is_empty() {
        return Err(CliError::usage(format!("{} holds no abstracts", a.titles.display())));
    }
    let cache_dir = a
        .cache
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}.cache", a.out.display())));
    let cache = ResponseCache::open(&cache_dir)?;
    let generator = Generator::new(endpoint.as_ref(), params)?
        .with_retry(RetryPolicy {
            max_retries: a.max_retries,
            ..RetryPolicy::default()
        })
        .with_cache(cache);

    let workers = match global.workers {
        Some(0) | None => 4,
        Some(w) => w,
    };
    let titles: Vec<String> = humans.iter().map(|h| h.title.clone()).collect();
    let mut results = Vec::with_capacity(titles.len());
    for chunk in titles.chunks((workers * 8).max(16)) {
        results.extend(generator.generate_all(chunk, workers));
        log::info!("generated {}/{} abstracts", results.len(), titles.len());
    }

    let mut ok_humans = Vec::new();
    let mut generated = Vec::new();
    let mut failures = Vec::new();
    for (h, r) in humans.iter().zip(results) {
        match r {
            Ok(g) => {
                ok_humans.push(h.clone());
                generated.push(g);
            }
            Err(e) => failures.push((h.title.clone(), e)),
        }
    }
    if !ok_humans.is_empty() {
        let ds = assemble_pairs(&ok_humans, &generated)?;
        if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| CliError::runtime(format!("{}: {e}", dir.display())))?;
        }
        ds.save(&a.out, DatasetFormat::Jsonl)?;
        #[derive(Serialize)]
        struct ProvenanceRow<'a> {
            id: String,
            title: &'a str,
            params: &'a GenerationParams,
            provenance: &'a absdetect_core::generation::Provenance,
        }
        let rows = ok_humans.iter().zip(&generated).map(|(h, g)| ProvenanceRow {
            id: ai_record_id(&h.id),
            title: &g.title,
            params: &g.params,
            provenance: &g.provenance,
        });
        write_file(&PathBuf::from(format!("{}.provenance.jsonl", a.out.display())), &jsonl(rows))?;
        let cached = generated.iter().filter(|g| g.provenance.cached).count();
        log::info!(
            "wrote {} pairs to {} ({cached} from cache)",
            ok_humans.len(),
            a.out.display()
        );
    }
    if let Some((title, e)) = failures.first() {
        return Err(CliError::runtime(format!(
            "{} of {} titles failed (first: `{title}`: {e}); {} pairs written; rerun to fetch only the missing titles",
            failures.len(),
            titles.len(),
            ok_humans.len()
        )));
    }
    Ok(())
}

pub fn clean(a: &CleanArgs) -> CliResult {
    let ds = load_dataset(&a.dataset)?;
    let stops = load_stopwords(a.stopwords.as_deref())?;
    let docs = clean_dataset(&ds, &stops);
    let empty = docs.iter().filter(|d| d.is_empty()).count();
    write_file(&a.out, &jsonl(&docs))?;
    log::info!(
        "cleaned {} records with stop list {} ({empty} empty after cleaning)",
        docs.len(),
        stops.source_name()
    );
    Ok(())
}

fn default_features(family: FeatureFamily) -> FeatureConfig {
    match family {
        FeatureFamily::Tfidf => FeatureConfig::Tfidf {
            min_df: DEFAULT_MIN_DF,
            max_df: DEFAULT_MAX_DF,
        },
        FeatureFamily::Entity => FeatureConfig::Entity {
            lexicon: None,
            max_n: DEFAULT_MAX_N,
            min_count: 1,
        },
        FeatureFamily::EmbeddingMean => FeatureConfig::EmbeddingMean { embeddings: None },
        FeatureFamily::EmbeddingSequence => FeatureConfig::EmbeddingSequence {
            embeddings: None,
            max_len: DEFAULT_MAX_LEN,
        },
    }
}

fn default_model(family: ModelFamily) -> ModelConfig {
    match family {
        ModelFamily::Logreg => ModelConfig::Logreg(LogRegHyper::default()),
        ModelFamily::Mnb => ModelConfig::Mnb { alpha: 1.0 },
        ModelFamily::Svm => ModelConfig::Svm(SvmHyper::default()),
        ModelFamily::Lstm => ModelConfig::Lstm(LstmHyper::default()),
    }
}

fn feature_family(f: &FeatureConfig) -> FeatureFamily {
    match f {
        FeatureConfig::Tfidf { .. } => FeatureFamily::Tfidf,
        FeatureConfig::Entity { .. } => FeatureFamily::Entity,
        FeatureConfig::EmbeddingMean { .. } => FeatureFamily::EmbeddingMean,
        FeatureConfig::EmbeddingSequence { .. } => FeatureFamily::EmbeddingSequence,
    }
}

fn model_family(m: &ModelConfig) -> ModelFamily {
    match m {
        ModelConfig::Logreg(_) => ModelFamily::Logreg,
        ModelConfig::Mnb { .. } => ModelFamily::Mnb,
        ModelConfig::Svm(_) => ModelFamily::Svm,
        ModelConfig::Lstm(_) => ModelFamily::Lstm,
    }
}

/// Flags over config file over defaults.
fn experiment_config(a: &ExperimentArgs, global: &GlobalArgs) -> CliResult<ExperimentConfig> {
    let file = match &a.config {
        Some(p) => {
            require_path(p, "config file")?;
            Some(ExperimentConfig::load(p)?)
        }
        None => None,
    };
    let mut c = match file {
        Some(mut c) => {
            if let Some(f) = a.features.filter(|f| *f != feature_family(&c.features)) {
                c.features = default_features(f);
            }
            if let Some(m) = a.model.filter(|m| *m != model_family(&c.model)) {
                c.model = default_model(m);
            }
            c
        }
        None => match (a.features, a.model) {
            (Some(f), Some(m)) => ExperimentConfig::new(default_features(f), default_model(m)),
            _ => return Err(CliError::usage("pass --config, or both --features and --model")),
        },
    };
    if let Some(p) = &a.dataset {
        c.dataset = Some(p.clone());
    }
    if let Some(p) = &a.stopwords {
        c.stopwords = Some(p.clone());
    }
    if let Some(p) = &a.embeddings {
        match &mut c.features {
            FeatureConfig::EmbeddingMean { embeddings } | FeatureConfig::EmbeddingSequence { embeddings, .. } => {
                *embeddings = Some(p.clone())
            }
            _ => return Err(CliError::usage("--embeddings applies only to the embedding feature families")),
        }
    }
    if let Some(p) = &a.lexicon {
        match &mut c.features {
            FeatureConfig::Entity { lexicon, .. } => *lexicon = Some(p.clone()),
            _ => return Err(CliError::usage("--lexicon applies only to entity features")),
        }
    }
    if let Some(n) = a.iterations {
        c.iterations = n;
    }
    if let Some(f) = a.train_fraction {
        c.train_fraction = f;
    }
    if let Some(s) = global.seed {
        c.base_seed = s;
    }
    if let Some(w) = global.workers {
        c.workers = w;
    }
    if let Some(n) = &a.name {
        c.name = Some(n.clone());
    }
    if let Some(o) = &a.out {
        c.output_dir = Some(o.clone());
    }
    c.validate()?;
    Ok(c)
}

fn slug(name: &str) -> String {
    let mut s = String::new();
    for ch in name.chars() {
        if ch.is_ascii_alphanumeric() {
            s.push(ch.to_ascii_lowercase());
        } else if !s.ends_with('-') {
            s.push('-');
        }
    }
    s.trim_matches('-').to_string()
}

pub fn experiment(a: &ExperimentArgs, global: &GlobalArgs) -> CliResult {
    let c = experiment_config(a, global)?;
    let dataset = c
        .dataset
        .clone()
        .ok_or_else(|| CliError::usage("no dataset: pass --dataset or set `dataset` in the config"))?;
    require_path(&dataset, "dataset")?;
    if let Some(p) = &c.stopwords {
        require_path(p, "stop-word file")?;
    }
    if let Some(p) = c.features.embeddings_path() {
        require_path(p, "embedding file")?;
    } else if c.features.uses_embeddings() {
        return Err(CliError::usage("embedding features need --embeddings or features.embeddings"));
    }
    if let FeatureConfig::Entity { lexicon: Some(p), .. } = &c.features {
        require_path(p, "lexicon")?;
    }
    if a.save_bundle.is_some() && a.bundle_iteration >= c.iterations {
        return Err(CliError::usage(format!(
            "--bundle-iteration {} is out of range for {} iterations",
            a.bundle_iteration, c.iterations
        )));
    }

    let ds = load_dataset(&dataset)?;
    let resources = Resources::load(&c)?;
    log::info!(
        "running {} for {} iterations on {} records",
        c.display_name(),
        c.iterations,
        ds.len()
    );
    let keep = a.save_bundle.as_ref().map(|_| a.bundle_iteration);
    let (report, kept) = run_experiment_keeping(&c, &ds, &resources, keep)?;

    let out_dir = c.output_dir.clone().unwrap_or_else(|| PathBuf::from("reports"));
    let base = out_dir.join(slug(&report.name));
    let text = report.render_text();
    write_file(&base.with_extension("json"), &report.to_json())?;
    write_file(&base.with_extension("txt"), &text)?;
    print!("{text}");
    log::info!("report written to {}", base.with_extension("json").display());

    if let (Some(dir), Some(outcome)) = (&a.save_bundle, kept) {
        let bundle = ModelBundle::from_outcome(
            report.name.clone(),
            outcome,
            resources.stopwords.clone(),
            c.features.embeddings_path().map(Path::to_path_buf),
        );
        bundle.save(dir)?;
        log::info!("model bundle written to {}", dir.display());
    }
    Ok(())
}

fn check_against_dataset<'a>(ds: &'a PairedDataset, id: &str) -> CliResult<&'a AbstractRecord> {
    ds.get(id)
        .ok_or_else(|| CliError::usage(format!("record `{id}` is not in the dataset")))
}

pub fn analyze(a: &AnalyzeArgs) -> CliResult {
    let ds = load_dataset(&a.dataset)?;
    let (partition, stops): (ErrorPartition, StopWordList) = if let Some(dir) = &a.bundle {
        require_path(dir, "bundle directory")?;
        require_path(&dir.join(MODEL_FILE), "model file")?;
        let bundle = ModelBundle::load(dir)?;
        let manifest = &bundle.manifest;
        let table = if manifest.features.needs_embeddings() {
            let path = a
                .embeddings
                .clone()
                .or_else(|| manifest.embeddings.clone())
                .ok_or_else(|| CliError::usage("this model needs --embeddings"))?;
            require_path(&path, "embedding file")?;
            Some(EmbeddingTable::load(&path)?)
        } else {
            None
        };
        let records = manifest
            .test_ids
            .iter()
            .map(|id| check_against_dataset(&ds, id))
            .collect::<CliResult<Vec<_>>>()?;
        let docs: Vec<CleanDocument> = records
            .iter()
            .map(|r| textprep::clean(r.id.as_str(), &r.abstract_text, &manifest.stopwords))
            .collect();
        let refs: Vec<&CleanDocument> = docs.iter().collect();
        let scored = score_documents(&manifest.features, &bundle.model, &refs, table.as_ref())?;
        let predicted: Vec<_> = scored.iter().map(|s| s.1).collect();
        let partition = partition_errors(&records, &predicted)?;
        let stops = match &a.stopwords {
            Some(p) => load_stopwords(Some(p))?,
            None => manifest.stopwords.clone(),
        };
        (partition, stops)
    } else {
        let path = a.predictions.as_ref().expect("clap enforces one source");
        require_path(path, "predictions file")?;
        let predictions = load_predictions(path)?;
        for p in &predictions {
            let r = check_against_dataset(&ds, &p.id)?;
            if r.label != p.truth {
                return Err(CliError::usage(format!(
                    "prediction for `{}` records truth {} but the dataset says {}",
                    p.id, p.truth, r.label
                )));
            }
        }
        (ErrorPartition::from_predictions(&predictions), load_stopwords(a.stopwords.as_deref())?)
    };

    let options = AnalysisOptions {
        k: a.top_k,
        title_threshold: a.title_threshold,
    };
    let report = research_questions_report(&partition, &ds, &stops, &options)?;
    let text = report.render_text();
    write_file(&a.out.join("analysis.json"), &report.to_json())?;
    write_file(&a.out.join("analysis.txt"), &text)?;
    write_file(&a.out.join("frequencies.csv"), &report.frequency_csv()?)?;
    print!("{text}");
    Ok(())
}

fn report_files(paths: &[PathBuf]) -> CliResult<Vec<PathBuf>> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(p)
                .map_err(|e| CliError::runtime(format!("{}: {e}", p.display())))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "json"))
                .collect();
            found.sort();
            files.extend(found);
        } else {
            require_path(p, "report")?;
            files.push(p.clone());
        }
    }
    Ok(files)
}

pub fn leaderboard(a: &LeaderboardArgs) -> CliResult {
    let files = report_files(&a.paths)?;
    if files.is_empty() {
        return Err(CliError::usage("no reports found"));
    }
    let reports = files
        .iter()
        .map(ExperimentReport::load)
        .collect::<Result<Vec<_>, _>>()?;
    let board = rank(&reports);
    let rendered = if a.json { board.to_json() } else { board.render_text() };
    if let Some(out) = &a.out {
        write_file(out, &rendered)?;
    }
    std::io::stdout()
        .write_all(rendered.as_bytes())
        .map_err(|e| CliError::runtime(e.to_string()))?;
    Ok(())
}
