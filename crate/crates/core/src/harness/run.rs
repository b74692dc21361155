use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{compute_metrics, lang_list, EvalMode, ExperimentConfig, HarnessError, Metrics};
use crate::classifiers::{decide, train_with_log, EpochLoss};
use crate::corpus::{split_dataset, Dataset, Label, Lang, TweetRecord};
use crate::embeddings::{text_key, EmbeddingStore};
use crate::features::{assemble_with_layout, Family, FeatureLayout, Scaler};
use crate::pipeline::{build_parts, FeatureContext, PipelineBundle, Resources, TweetInput};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub mode: EvalMode,
    pub train_langs: String,
    pub test_langs: String,
    pub families: String,
    pub classifier: String,
    pub seed: u64,
    /// Fake-class scores in percent.
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
    pub metrics: Metrics,
    pub per_language: BTreeMap<Lang, Metrics>,
    pub n_train: usize,
    pub n_test: usize,
    pub train_ids: Vec<String>,
    pub test_ids: Vec<String>,
    /// Test ids whose partition followed their translation group.
    pub grouped_ids: Vec<String>,
    /// Translation groups with members on both sides of the train/test
    /// boundary (possible only in holdout mode).
    pub cross_partition_groups: Vec<String>,
    pub leakage_free: bool,
    pub config_fingerprint: String,
    pub dataset_digest: String,
    pub layout_hash: String,
    pub model_fingerprint: String,
}

impl ExperimentReport {
    /// Rerun the leakage check from the id manifests.
    pub fn ids_disjoint(&self) -> bool {
        let train: BTreeSet<&str> = self.train_ids.iter().map(String::as_str).collect();
        self.test_ids.iter().all(|id| !train.contains(id.as_str()))
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub report: ExperimentReport,
    pub bundle: PipelineBundle,
    pub training_log: Vec<EpochLoss>,
}

fn lookup_embedding(store: &EmbeddingStore, rec: &TweetRecord) -> Option<Vec<f64>> {
    store.get(&rec.id).or_else(|| store.get(&text_key(&rec.text))).map(<[f64]>::to_vec)
}

fn feature_matrix(
    records: &[&TweetRecord],
    layout: &Arc<FeatureLayout>,
    ctx: &FeatureContext<'_>,
    store: Option<&EmbeddingStore>,
) -> Result<Array2<f64>, HarnessError> {
    let families = layout.families();
    let rows: Vec<Vec<f64>> = records
        .par_iter()
        .map(|rec| {
            let embedding = match store {
                Some(s) if families.contains(&Family::TextEmbd) => {
                    Some(lookup_embedding(s, rec).ok_or_else(|| HarnessError::MissingEmbedding(rec.id.clone()))?)
                }
                _ => None,
            };
            let tweet = TweetInput {
                text: &rec.text,
                retweet_count: rec.retweet_count.unwrap_or(0),
                favourite_count: rec.favourite_count.unwrap_or(0),
                user: rec.user.as_ref(),
            };
            let (parts, _) = build_parts(&families, ctx, tweet, embedding)?;
            Ok(assemble_with_layout(layout, &parts)?.into_values())
        })
        .collect::<Result<_, HarnessError>>()?;
    let width = layout.len();
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    Ok(Array2::from_shape_vec((records.len(), width), flat).expect("rows share the layout width"))
}

/// Unscaled feature matrix of a whole dataset, in record order. Bias
/// falls back to the neutral score when no model is given.
pub fn dataset_features(
    ds: &Dataset,
    families: &[Family],
    as_of: chrono::DateTime<chrono::Utc>,
    factver_k: usize,
    res: &Resources<'_>,
) -> Result<(Arc<FeatureLayout>, Array2<f64>), HarnessError> {
    let families = Family::canonical(families);
    let dim = match res.embeddings {
        Some(s) if families.contains(&Family::TextEmbd) => s.dim(),
        None if families.contains(&Family::TextEmbd) => {
            return Err(HarnessError::Config("TextEmbd requested without an embedding file".into()))
        }
        _ => 0,
    };
    let layout = Arc::new(FeatureLayout::for_families(&families, dim));
    let ctx = FeatureContext { as_of, factver_k, trusted: res.trusted, bias: res.bias, neutral_bias: true };
    let records: Vec<&TweetRecord> = ds.records().iter().collect();
    let m = feature_matrix(&records, &layout, &ctx, res.embeddings)?;
    Ok((layout, m))
}

/// Train rows, test rows and the test ids whose partition followed their translation group.
type Partition = (Vec<TweetRecord>, Vec<TweetRecord>, Vec<String>);

fn partition(cfg: &ExperimentConfig, ds: &Dataset) -> Result<Partition, HarnessError> {
    match cfg.mode {
        EvalMode::SplitWithinLangs => {
            let scope: BTreeSet<Lang> = cfg.train_langs.union(&cfg.test_langs).copied().collect();
            let split = split_dataset(&ds.filter(|r| scope.contains(&r.lang)), cfg.train_fraction, cfg.seed)?;
            let train = split.train.records().iter().filter(|r| cfg.train_langs.contains(&r.lang)).cloned().collect();
            let test: Vec<TweetRecord> =
                split.test.records().iter().filter(|r| cfg.test_langs.contains(&r.lang)).cloned().collect();
            let test_ids: BTreeSet<&str> = test.iter().map(|r| r.id.as_str()).collect();
            let grouped = split.grouped.into_iter().filter(|id| test_ids.contains(id.as_str())).collect();
            Ok((train, test, grouped))
        }
        EvalMode::HoldoutLanguage => {
            let train = ds.records().iter().filter(|r| cfg.train_langs.contains(&r.lang)).cloned().collect();
            let test = ds.records().iter().filter(|r| cfg.test_langs.contains(&r.lang)).cloned().collect();
            Ok((train, test, Vec::new()))
        }
    }
}

fn resource_digests(res: &Resources<'_>) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    if let Some(s) = res.embeddings {
        out.insert("embeddings".to_string(), s.digest());
    }
    if let Some(t) = res.trusted {
        out.insert("trusted_index".to_string(), t.digest());
    }
    if let Some(b) = res.bias {
        out.insert("bias_model".to_string(), b.fingerprint());
    }
    out
}

/// Preprocess, build features, fit the scaler on the training rows,
/// train and evaluate.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    ds: &Dataset,
    res: &Resources<'_>,
) -> Result<ExperimentOutcome, HarnessError> {
    cfg.validate()?;
    let cfg = cfg.with_seed(cfg.seed);
    let families = Family::canonical(&cfg.families);
    let store = res.embeddings;
    let embedding_dim = if families.contains(&Family::TextEmbd) {
        store.ok_or(HarnessError::Pipeline(crate::pipeline::PipelineError::MissingFamily(Family::TextEmbd)))?.dim()
    } else {
        0
    };

    let (train_recs, test_recs, grouped_ids) = partition(&cfg, ds)?;
    if train_recs.is_empty() {
        return Err(HarnessError::EmptyPartition("training"));
    }
    if test_recs.is_empty() {
        return Err(HarnessError::EmptyPartition("test"));
    }

    let layout = Arc::new(FeatureLayout::for_families(&families, embedding_dim));
    let ctx = FeatureContext {
        as_of: cfg.as_of,
        factver_k: cfg.factver_k,
        trusted: res.trusted,
        bias: res.bias,
        neutral_bias: false,
    };
    let train_refs: Vec<&TweetRecord> = train_recs.iter().collect();
    let test_refs: Vec<&TweetRecord> = test_recs.iter().collect();
    let x_train = feature_matrix(&train_refs, &layout, &ctx, store)?;
    let x_test = feature_matrix(&test_refs, &layout, &ctx, store)?;
    let y_train: Vec<Label> = train_recs.iter().map(|r| r.label).collect();
    let y_test: Vec<Label> = test_recs.iter().map(|r| r.label).collect();

    let scaler = Scaler::fit(&x_train)?;
    let xs_train = scaler.transform(&x_train)?;
    let xs_test = scaler.transform(&x_test)?;
    let (model, training_log) = train_with_log(&cfg.classifier, &xs_train, &y_train, &layout)?;

    let pred: Vec<Label> = xs_test
        .rows()
        .into_iter()
        .map(|row| model.predict_proba_slice(row.as_slice().expect("standard layout")).map(decide))
        .collect::<Result<_, _>>()?;
    let metrics = compute_metrics(&pred, &y_test)?;

    let mut per_language = BTreeMap::new();
    for lang in test_recs.iter().map(|r| r.lang).collect::<BTreeSet<_>>() {
        let idx: Vec<usize> = (0..test_recs.len()).filter(|&i| test_recs[i].lang == lang).collect();
        let p: Vec<Label> = idx.iter().map(|&i| pred[i]).collect();
        let g: Vec<Label> = idx.iter().map(|&i| y_test[i]).collect();
        per_language.insert(lang, compute_metrics(&p, &g)?);
    }

    let train_ids: Vec<String> = train_recs.iter().map(|r| r.id.clone()).collect();
    let test_ids: Vec<String> = test_recs.iter().map(|r| r.id.clone()).collect();
    let train_groups: BTreeSet<&str> = train_recs.iter().map(|r| r.group_key()).collect();
    let cross_partition_groups: Vec<String> = test_recs
        .iter()
        .map(|r| r.group_key())
        .filter(|g| train_groups.contains(g))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .map(str::to_string)
        .collect();

    let resources = resource_digests(res);
    let dataset_digest = ds.digest();
    let config_fingerprint = crate::fingerprint::combine(
        [cfg.fingerprint(), dataset_digest.clone()]
            .iter()
            .map(String::as_str)
            .chain(resources.iter().flat_map(|(k, v)| [k.as_str(), v.as_str()])),
    );

    let mut bundle = PipelineBundle::new(model, scaler, (*layout).clone(), cfg.as_of, cfg.factver_k);
    bundle.embedding_model_id = store.filter(|_| embedding_dim > 0).map(|s| s.model_id().to_string());
    bundle.resources = resources;

    let mut report = ExperimentReport {
        name: cfg.name.clone(),
        mode: cfg.mode,
        train_langs: lang_list(&cfg.train_langs),
        test_langs: lang_list(&cfg.test_langs),
        families: Family::label(&families),
        classifier: cfg.classifier.kind().to_string(),
        seed: cfg.seed,
        precision: metrics.fake.precision * 100.0,
        recall: metrics.fake.recall * 100.0,
        f_score: metrics.fake.f_score * 100.0,
        metrics,
        per_language,
        n_train: train_recs.len(),
        n_test: test_recs.len(),
        leakage_free: false,
        train_ids,
        test_ids,
        grouped_ids,
        cross_partition_groups,
        config_fingerprint,
        dataset_digest,
        layout_hash: layout.hash(),
        model_fingerprint: bundle.model.fingerprint(),
    };
    report.leakage_free = report.ids_disjoint() && report.cross_partition_groups.is_empty();
    if !report.cross_partition_groups.is_empty() {
        tracing::warn!(
            groups = report.cross_partition_groups.len(),
            "translation groups span train and test languages"
        );
    }
    Ok(ExperimentOutcome { report, bundle, training_log })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleEvaluation {
    pub n: usize,
    pub metrics: Metrics,
    pub per_language: BTreeMap<Lang, Metrics>,
}

/// Score every record of `ds` with a trained bundle. Bias falls back to
/// the neutral score as at serving time.
pub fn evaluate_bundle(
    bundle: &PipelineBundle,
    ds: &Dataset,
    res: &Resources<'_>,
) -> Result<BundleEvaluation, HarnessError> {
    let layout = Arc::new(bundle.layout.clone());
    let ctx = FeatureContext {
        as_of: bundle.as_of,
        factver_k: bundle.factver_k,
        trusted: res.trusted,
        bias: res.bias,
        neutral_bias: true,
    };
    let records: Vec<&TweetRecord> = ds.records().iter().collect();
    let x = bundle.scaler.transform(&feature_matrix(&records, &layout, &ctx, res.embeddings)?)?;
    let pred: Vec<Label> = x
        .rows()
        .into_iter()
        .map(|row| bundle.model.predict_proba_slice(row.as_slice().expect("standard layout")).map(decide))
        .collect::<Result<_, _>>()?;
    let gold: Vec<Label> = records.iter().map(|r| r.label).collect();
    let metrics = compute_metrics(&pred, &gold)?;
    let mut per_language = BTreeMap::new();
    for lang in ds.languages() {
        let idx: Vec<usize> = (0..records.len()).filter(|&i| records[i].lang == lang).collect();
        let p: Vec<Label> = idx.iter().map(|&i| pred[i]).collect();
        let g: Vec<Label> = idx.iter().map(|&i| gold[i]).collect();
        per_language.insert(lang, compute_metrics(&p, &g)?);
    }
    Ok(BundleEvaluation { n: records.len(), metrics, per_language })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedFailure {
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub runs: usize,
    pub min_f: f64,
    pub median_f: f64,
    pub max_f: f64,
    /// Seed fixed for the remaining experiments.
    pub chosen_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOutcome {
    pub reports: Vec<ExperimentReport>,
    pub failures: Vec<SeedFailure>,
    pub summary: Option<SweepSummary>,
}

/// Run `run` for every seed, in parallel; results keep seed order and a
/// failing seed is recorded without stopping the others.
pub fn seed_sweep_with<F>(seeds: &[u64], chosen_seed: u64, run: F) -> SweepOutcome
where
    F: Fn(u64) -> Result<ExperimentReport, HarnessError> + Sync,
{
    let results: Vec<(u64, Result<ExperimentReport, HarnessError>)> = seeds.par_iter().map(|&s| (s, run(s))).collect();
    let mut reports = Vec::new();
    let mut failures = Vec::new();
    for (seed, r) in results {
        match r {
            Ok(rep) => reports.push(rep),
            Err(e) => failures.push(SeedFailure { seed, error: e.to_string() }),
        }
    }
    let summary = (!reports.is_empty()).then(|| {
        let mut f: Vec<f64> = reports.iter().map(|r| r.f_score).collect();
        f.sort_by(f64::total_cmp);
        let n = f.len();
        let median_f = if n % 2 == 1 { f[n / 2] } else { (f[n / 2 - 1] + f[n / 2]) / 2.0 };
        SweepSummary { runs: n, min_f: f[0], median_f, max_f: f[n - 1], chosen_seed }
    });
    SweepOutcome { reports, failures, summary }
}

/// One [`run_experiment`] per seed; `cfg.seed` is recorded as the chosen seed.
pub fn seed_sweep(
    cfg: &ExperimentConfig,
    seeds: &[u64],
    ds: &Dataset,
    res: &Resources<'_>,
) -> Result<SweepOutcome, HarnessError> {
    if seeds.is_empty() {
        return Err(HarnessError::Config("seed list is empty".into()));
    }
    cfg.validate()?;
    Ok(seed_sweep_with(seeds, cfg.seed, |s| run_experiment(&cfg.with_seed(s), ds, res).map(|o| o.report)))
}
