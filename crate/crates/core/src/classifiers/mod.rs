//! Classifiers behind one train / predict / serialize contract.
//!
//! Four model kinds are available: a linear SVM with Platt-calibrated
//! probabilities, a random forest whose probability is the fraction of
//! trees voting fake, a ReLU MLP and a single-layer softmax head. All
//! training is deterministic for a fixed [`TrainConfig`] and data.

pub mod forest;
pub mod mlp;
pub mod platt;
pub mod svm;

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::Path;
use std::str::FromStr;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Label;
use crate::features::{FeatureLayout, FeatureVector};
use forest::{RandomForest, TreeParams};
use mlp::{AdamConfig, Network};
use svm::LinearSvm;

/// Tag written into every model file.
pub const MODEL_FORMAT: &str = "tweetguard-model";
/// Model files with a newer major version are rejected.
pub const FORMAT_VERSION: FormatVersion = FormatVersion { major: 1, minor: 0 };

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("need at least 2 training rows, got {0}")]
    TooFewRows(usize),
    #[error("{rows} rows but {labels} labels")]
    RowLabelMismatch { rows: usize, labels: usize },
    #[error("training labels contain a single class")]
    SingleClass,
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("feature layout mismatch: model expects {expected}, got {got}")]
    LayoutMismatch { expected: String, got: String },
    #[error("input width mismatch: model expects {expected} features, got {got}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("corrupt model file: {0}")]
    Corrupt(String),
    #[error("unsupported model format version {found} (this build reads major version {supported})")]
    Version { found: String, supported: u32 },
    #[error("unknown classifier kind `{0}`")]
    UnknownKind(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormatVersion {
    pub major: u32,
    pub minor: u32,
}

impl fmt::Display for FormatVersion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.major, self.minor)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    LinearSvm,
    RandomForest,
    Mlp,
    SoftmaxHead,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 4] =
        [ClassifierKind::LinearSvm, ClassifierKind::RandomForest, ClassifierKind::Mlp, ClassifierKind::SoftmaxHead];

    pub fn as_str(self) -> &'static str {
        match self {
            ClassifierKind::LinearSvm => "linear_svm",
            ClassifierKind::RandomForest => "random_forest",
            ClassifierKind::Mlp => "mlp",
            ClassifierKind::SoftmaxHead => "softmax_head",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassifierKind {
    type Err = ClassifierError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "linear_svm" | "svm" => Ok(ClassifierKind::LinearSvm),
            "random_forest" | "rfc" | "rf" => Ok(ClassifierKind::RandomForest),
            "mlp" => Ok(ClassifierKind::Mlp),
            "softmax_head" | "head" | "nn" => Ok(ClassifierKind::SoftmaxHead),
            other => Err(ClassifierError::UnknownKind(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmParams {
    pub c: f64,
    /// Kept for configuration parity with kernel SVMs; a linear kernel has
    /// no gamma and this value is not used.
    pub gamma: f64,
    pub epochs: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams { c: 1.0, gamma: 1.0, epochs: 50 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Features evaluated per split; `floor(sqrt(d))` when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_features: Option<usize>,
    pub bootstrap: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_depth: Option<usize>,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams { n_trees: 400, max_features: None, bootstrap: true, max_depth: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpParams {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
}

impl Default for MlpParams {
    fn default() -> Self {
        MlpParams { hidden: vec![30, 10], epochs: 1000, batch_size: 32, learning_rate: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HeadParams {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
}

impl Default for HeadParams {
    fn default() -> Self {
        HeadParams { epochs: 200, batch_size: 32, learning_rate: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelParams {
    LinearSvm(SvmParams),
    RandomForest(ForestParams),
    Mlp(MlpParams),
    SoftmaxHead(HeadParams),
}

impl ModelParams {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            ModelParams::LinearSvm(_) => ClassifierKind::LinearSvm,
            ModelParams::RandomForest(_) => ClassifierKind::RandomForest,
            ModelParams::Mlp(_) => ClassifierKind::Mlp,
            ModelParams::SoftmaxHead(_) => ClassifierKind::SoftmaxHead,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(flatten)]
    pub model: ModelParams,
}

impl TrainConfig {
    /// Default hyperparameters for `kind`.
    pub fn new(kind: ClassifierKind, seed: u64) -> Self {
        let model = match kind {
            ClassifierKind::LinearSvm => ModelParams::LinearSvm(SvmParams::default()),
            ClassifierKind::RandomForest => ModelParams::RandomForest(ForestParams::default()),
            ClassifierKind::Mlp => ModelParams::Mlp(MlpParams::default()),
            ClassifierKind::SoftmaxHead => ModelParams::SoftmaxHead(HeadParams::default()),
        };
        TrainConfig { seed, model }
    }

    pub fn kind(&self) -> ClassifierKind {
        self.model.kind()
    }

    pub fn fingerprint(&self) -> String {
        crate::fingerprint::digest_json(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelBody {
    LinearSvm(LinearSvm),
    RandomForest(RandomForest),
    Mlp(Network),
    SoftmaxHead(Network),
}

/// One training-loss measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub loss: f64,
}

/// Write a training log as line-delimited `{epoch, loss}` records.
pub fn write_training_log<W: Write>(mut out: W, log: &[EpochLoss]) -> io::Result<()> {
    for entry in log {
        serde_json::to_writer(&mut out, entry)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format: String,
    pub version: FormatVersion,
    pub config: TrainConfig,
    pub config_fingerprint: String,
    pub layout_hash: String,
    pub input_width: usize,
    pub body: ModelBody,
}

fn validate_training_data(x: &Array2<f64>, y: &[Label], layout: &FeatureLayout) -> Result<(), ClassifierError> {
    if x.nrows() != y.len() {
        return Err(ClassifierError::RowLabelMismatch { rows: x.nrows(), labels: y.len() });
    }
    if x.nrows() < 2 {
        return Err(ClassifierError::TooFewRows(x.nrows()));
    }
    if x.ncols() != layout.len() {
        return Err(ClassifierError::LayoutMismatch {
            expected: format!("{} ({} features)", crate::fingerprint::short(&layout.hash()), layout.len()),
            got: format!("matrix with {} columns", x.ncols()),
        });
    }
    if !(y.contains(&Label::Fake) && y.contains(&Label::NonFake)) {
        return Err(ClassifierError::SingleClass);
    }
    if let Some(((row, col), _)) = x.indexed_iter().find(|(_, v)| !v.is_finite()) {
        return Err(ClassifierError::NonFinite { row, col });
    }
    Ok(())
}

/// Train a model. See [`train_with_log`] for the loss curve.
pub fn train(
    cfg: &TrainConfig,
    x: &Array2<f64>,
    y: &[Label],
    layout: &FeatureLayout,
) -> Result<TrainedModel, ClassifierError> {
    train_with_log(cfg, x, y, layout).map(|(m, _)| m)
}

/// Train a model and return the per-epoch training loss (empty for the
/// random forest, which has no iterative objective).
pub fn train_with_log(
    cfg: &TrainConfig,
    x: &Array2<f64>,
    y: &[Label],
    layout: &FeatureLayout,
) -> Result<(TrainedModel, Vec<EpochLoss>), ClassifierError> {
    validate_training_data(x, y, layout)?;
    let d = x.ncols();
    let (body, log) = match &cfg.model {
        ModelParams::LinearSvm(p) => {
            let positive: Vec<bool> = y.iter().map(|l| l.is_fake()).collect();
            let (m, log) = svm::train_linear_svm(x, &positive, p.c, p.epochs, cfg.seed);
            (ModelBody::LinearSvm(m), log)
        }
        ModelParams::RandomForest(p) => {
            let classes: Vec<u8> = y.iter().map(|l| l.as_u8()).collect();
            let max_features =
                p.max_features.unwrap_or_else(|| ((d as f64).sqrt().floor() as usize).max(1)).clamp(1, d.max(1));
            let params = TreeParams { max_features, max_depth: p.max_depth };
            let forest = RandomForest::fit(x, &classes, p.n_trees.max(1), p.bootstrap, params, cfg.seed);
            (ModelBody::RandomForest(forest), Vec::new())
        }
        ModelParams::Mlp(p) => {
            let mut sizes = vec![d];
            sizes.extend(&p.hidden);
            sizes.push(2);
            let (net, log) = train_net(x, y, &sizes, p.epochs, p.batch_size, p.learning_rate, cfg.seed);
            (ModelBody::Mlp(net), log)
        }
        ModelParams::SoftmaxHead(p) => {
            let (net, log) = train_net(x, y, &[d, 2], p.epochs, p.batch_size, p.learning_rate, cfg.seed);
            (ModelBody::SoftmaxHead(net), log)
        }
    };
    let model = TrainedModel {
        format: MODEL_FORMAT.to_string(),
        version: FORMAT_VERSION,
        config: cfg.clone(),
        config_fingerprint: cfg.fingerprint(),
        layout_hash: layout.hash(),
        input_width: d,
        body,
    };
    Ok((model, log))
}

fn train_net(
    x: &Array2<f64>,
    y: &[Label],
    sizes: &[usize],
    epochs: usize,
    batch_size: usize,
    learning_rate: f64,
    seed: u64,
) -> (Network, Vec<EpochLoss>) {
    let rows: Vec<&[f64]> = x.rows().into_iter().map(|r| r.to_slice().expect("standard layout")).collect();
    let ys: Vec<usize> = y.iter().map(|l| l.as_index()).collect();
    let adam = AdamConfig { learning_rate, ..AdamConfig::default() };
    mlp::train_network(&rows, &ys, sizes, epochs, batch_size, adam, seed)
}

/// Label for `[p_non_fake, p_fake]`; exact ties go to non-fake.
pub fn decide(probs: [f64; 2]) -> Label {
    if probs[1] > probs[0] {
        Label::Fake
    } else {
        Label::NonFake
    }
}

impl TrainedModel {
    pub fn kind(&self) -> ClassifierKind {
        self.config.kind()
    }

    /// `[p_non_fake, p_fake]` for a feature vector assembled under the
    /// training layout.
    pub fn predict_proba(&self, x: &FeatureVector) -> Result<[f64; 2], ClassifierError> {
        let got = x.layout().hash();
        if got != self.layout_hash {
            return Err(ClassifierError::LayoutMismatch { expected: self.layout_hash.clone(), got });
        }
        self.predict_proba_slice(x.values())
    }

    /// Like [`TrainedModel::predict_proba`] for a bare row; only the width
    /// is checked.
    pub fn predict_proba_slice(&self, x: &[f64]) -> Result<[f64; 2], ClassifierError> {
        if x.len() != self.input_width {
            return Err(ClassifierError::WidthMismatch { expected: self.input_width, got: x.len() });
        }
        let p_fake = match &self.body {
            ModelBody::LinearSvm(m) => m.probability(m.margin_dense(x)),
            ModelBody::RandomForest(f) => f.vote_fraction(x),
            ModelBody::Mlp(net) | ModelBody::SoftmaxHead(net) => {
                let p = net.predict_proba(x);
                return Ok([p[0], p[1]]);
            }
        };
        Ok([1.0 - p_fake, p_fake])
    }

    pub fn predict(&self, x: &FeatureVector) -> Result<Label, ClassifierError> {
        self.predict_proba(x).map(decide)
    }

    /// Serialized model bytes (compact JSON plus trailing newline).
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut bytes = serde_json::to_vec(self).expect("model serialization cannot fail");
        bytes.push(b'\n');
        bytes
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ClassifierError> {
        let value: serde_json::Value =
            serde_json::from_slice(bytes).map_err(|e| ClassifierError::Corrupt(e.to_string()))?;
        let format = value.get("format").and_then(|f| f.as_str());
        if format != Some(MODEL_FORMAT) {
            return Err(ClassifierError::Corrupt(format!("missing or wrong format tag {format:?}")));
        }
        let version: FormatVersion = value
            .get("version")
            .cloned()
            .ok_or_else(|| ClassifierError::Corrupt("missing version".into()))
            .and_then(|v| serde_json::from_value(v).map_err(|e| ClassifierError::Corrupt(e.to_string())))?;
        if version.major != FORMAT_VERSION.major {
            return Err(ClassifierError::Version { found: version.to_string(), supported: FORMAT_VERSION.major });
        }
        serde_json::from_value(value).map_err(|e| ClassifierError::Corrupt(e.to_string()))
    }

    /// Digest of the serialized model.
    pub fn fingerprint(&self) -> String {
        crate::fingerprint::digest_bytes(&self.to_bytes())
    }
}

pub fn save_model(m: &TrainedModel, path: impl AsRef<Path>) -> Result<(), ClassifierError> {
    let path = path.as_ref();
    fs::write(path, m.to_bytes()).map_err(|source| ClassifierError::Io { path: path.display().to_string(), source })
}

pub fn load_model(path: impl AsRef<Path>) -> Result<TrainedModel, ClassifierError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| ClassifierError::Io { path: path.display().to_string(), source })?;
    TrainedModel::from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::Family;
    use std::sync::Arc;

    fn line_data() -> (Array2<f64>, Vec<Label>, FeatureLayout) {
        let xs: Vec<f64> =
            (0..20).map(|i| if i < 10 { -1.0 - i as f64 * 0.3 } else { 0.5 + (i - 10) as f64 * 0.3 }).collect();
        let y = (0..20).map(|i| if i < 10 { Label::NonFake } else { Label::Fake }).collect();
        (Array2::from_shape_vec((20, 1), xs).unwrap(), y, FeatureLayout::for_families(&[Family::FactVer], 0))
    }

    fn quick(kind: ClassifierKind) -> TrainConfig {
        let mut cfg = TrainConfig::new(kind, 11);
        match &mut cfg.model {
            ModelParams::RandomForest(p) => p.n_trees = 25,
            ModelParams::Mlp(p) => p.epochs = 300,
            ModelParams::SoftmaxHead(p) => p.epochs = 300,
            ModelParams::LinearSvm(_) => {}
        }
        cfg
    }

    #[test]
    fn single_class_and_shape_errors() {
        let (x, _, layout) = line_data();
        let ones = vec![Label::Fake; 20];
        for kind in ClassifierKind::ALL {
            assert!(matches!(train(&quick(kind), &x, &ones, &layout), Err(ClassifierError::SingleClass)));
        }
        let (x, y, _) = line_data();
        let wide = FeatureLayout::for_families(&[Family::FactVer, Family::Bias], 0);
        assert!(matches!(
            train(&quick(ClassifierKind::Mlp), &x, &y, &wide),
            Err(ClassifierError::LayoutMismatch { .. })
        ));
        assert!(matches!(
            train(&quick(ClassifierKind::Mlp), &x, &y[..5], &FeatureLayout::for_families(&[Family::FactVer], 0)),
            Err(ClassifierError::RowLabelMismatch { .. })
        ));
    }

    #[test]
    fn prediction_checks_layout() {
        let (x, y, layout) = line_data();
        let m = train(&quick(ClassifierKind::LinearSvm), &x, &y, &layout).unwrap();
        let other = Arc::new(FeatureLayout::for_families(&[Family::Bias], 0));
        let v = FeatureVector::new(other, vec![1.0]).unwrap();
        assert!(matches!(m.predict_proba(&v), Err(ClassifierError::LayoutMismatch { .. })));
        assert!(matches!(
            m.predict_proba_slice(&[1.0, 2.0]),
            Err(ClassifierError::WidthMismatch { expected: 1, got: 2 })
        ));
        let ok = FeatureVector::new(Arc::new(layout), vec![3.0]).unwrap();
        assert_eq!(m.predict(&ok).unwrap(), Label::Fake);
    }

    #[test]
    fn zero_head_is_even_and_ties_go_to_non_fake() {
        let m = TrainedModel {
            format: MODEL_FORMAT.into(),
            version: FORMAT_VERSION,
            config: TrainConfig::new(ClassifierKind::SoftmaxHead, 0),
            config_fingerprint: String::new(),
            layout_hash: String::new(),
            input_width: 3,
            body: ModelBody::SoftmaxHead(Network::zeros(&[3, 2])),
        };
        let p = m.predict_proba_slice(&[4.0, -1.0, 9.0]).unwrap();
        assert_eq!(p, [0.5, 0.5]);
        assert_eq!(decide(p), Label::NonFake);
    }

    #[test]
    fn forest_probability_is_vote_fraction() {
        let stump = |class| forest::DecisionTree { nodes: vec![forest::Node::Leaf { class }] };
        let trees = (0..400).map(|i| stump(u8::from(i < 300))).collect();
        let m = TrainedModel {
            format: MODEL_FORMAT.into(),
            version: FORMAT_VERSION,
            config: TrainConfig::new(ClassifierKind::RandomForest, 0),
            config_fingerprint: String::new(),
            layout_hash: String::new(),
            input_width: 1,
            body: ModelBody::RandomForest(RandomForest { trees }),
        };
        assert_eq!(m.predict_proba_slice(&[0.0]).unwrap(), [0.25, 0.75]);
    }

    #[test]
    fn file_errors() {
        let (x, y, layout) = line_data();
        let m = train(&quick(ClassifierKind::SoftmaxHead), &x, &y, &layout).unwrap();
        let bytes = m.to_bytes();
        assert!(matches!(TrainedModel::from_bytes(&bytes[..bytes.len() / 2]), Err(ClassifierError::Corrupt(_))));
        let mut v: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
        v["version"]["major"] = 2.into();
        let newer = serde_json::to_vec(&v).unwrap();
        assert!(matches!(TrainedModel::from_bytes(&newer), Err(ClassifierError::Version { .. })));
        assert_eq!(TrainedModel::from_bytes(&bytes).unwrap(), m);
    }

    #[test]
    fn config_toml_round_trip() {
        for kind in ClassifierKind::ALL {
            let cfg = TrainConfig::new(kind, 42);
            let text = toml::to_string(&cfg).unwrap();
            let back: TrainConfig = toml::from_str(&text).unwrap();
            assert_eq!(back, cfg, "{text}");
        }
        let partial: TrainConfig = toml::from_str("seed = 3\nkind = \"random_forest\"\nn_trees = 10\n").unwrap();
        assert_eq!(partial.model, ModelParams::RandomForest(ForestParams { n_trees: 10, ..Default::default() }));
    }

    #[test]
    fn kind_names_parse() {
        assert_eq!("RFC".parse::<ClassifierKind>().unwrap(), ClassifierKind::RandomForest);
        assert_eq!("softmax-head".parse::<ClassifierKind>().unwrap(), ClassifierKind::SoftmaxHead);
        assert!("knn".parse::<ClassifierKind>().is_err());
    }
}
