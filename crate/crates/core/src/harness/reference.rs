use serde::Serialize;

/// A published result shown next to local runs. These rows come from full
/// encoder fine-tuning on the released tweets and serve as reference
/// points only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferenceRow {
    pub setting: &'static str,
    pub model: &'static str,
    pub train: &'static str,
    pub test: &'static str,
    pub features: &'static str,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f_score: f64,
}

const fn row(
    setting: &'static str,
    model: &'static str,
    train: &'static str,
    test: &'static str,
    features: &'static str,
    precision: Option<f64>,
    recall: Option<f64>,
    f_score: f64,
) -> ReferenceRow {
    ReferenceRow { setting, model, train, test, features, precision, recall, f_score }
}

const MONO: &str = "mono-lingual";
const AUG: &str = "multilingual data augmentation";
const ZERO: &str = "cross-domain zero-shot";

static ROWS: [ReferenceRow; 23] = [
    row(MONO, "Infodemic mBERT", "Eng", "Eng", "TextEmbd", None, None, 88.3),
    row(MONO, "BERT_SVM", "Eng", "Eng", "TextEmbd", Some(74.0), Some(76.0), 75.0),
    row(MONO, "BERT_SVM", "Eng", "Eng", "TextEmbd + tweettext", Some(50.0), Some(31.0), 38.0),
    row(MONO, "BERT_SVM", "Eng", "Eng", "TextEmbd + tweetuser", Some(50.0), Some(30.0), 37.5),
    row(MONO, "BERT_RFC", "Eng", "Eng", "TextEmbd", Some(73.0), Some(75.0), 74.0),
    row(MONO, "BERT_RFC", "Eng", "Eng", "TextEmbd + tweettext", Some(72.0), Some(74.0), 73.0),
    row(MONO, "BERT_RFC", "Eng", "Eng", "TextEmbd + tweetuser", Some(88.0), Some(89.0), 89.0),
    row(MONO, "BERT_MLP", "Eng", "Eng", "TextEmbd", Some(73.0), Some(71.0), 72.0),
    row(MONO, "BERT_MLP", "Eng", "Eng", "TextEmbd + tweettext", Some(64.0), Some(62.0), 63.0),
    row(MONO, "BERT_MLP", "Eng", "Eng", "TextEmbd + tweetuser", Some(58.0), Some(57.0), 57.5),
    row(MONO, "mBERT_NN (fine-tuned)", "Eng", "Eng", "TextEmbd", Some(87.17), Some(91.89), 89.47),
    row(MONO, "mBERT_NN (fine-tuned)", "Eng", "Eng", "TextEmbd + tweettext", Some(84.38), Some(84.38), 84.38),
    row(MONO, "mBERT_NN (fine-tuned)", "Eng", "Eng", "TextEmbd + tweetuser", Some(90.32), Some(87.5), 88.88),
    row(MONO, "mBERT_NN (fine-tuned)", "Eng", "Eng", "TextEmbd + FactVer", Some(90.33), Some(87.5), 88.88),
    row(MONO, "mBERT_NN (fine-tuned)", "Eng", "Eng", "TextEmbd + Bias", Some(82.35), Some(87.5), 84.84),
    row(MONO, "mBERT_NN (fine-tuned)", "Eng", "Eng", "TextEmbd + tweetuser + FactVer", Some(89.65), Some(81.25), 85.25),
    row(AUG, "mBERT_NN (fine-tuned)", "Eng+Hin+Ben", "Hin", "TextEmbd", Some(72.72), Some(84.21), 78.04),
    row(AUG, "mBERT_NN (fine-tuned)", "Eng+Hin+Ben", "Hin", "TextEmbd + FactVer", Some(75.0), Some(84.0), 79.24),
    row(AUG, "mBERT_NN (fine-tuned)", "Eng+Hin+Ben", "Ben", "TextEmbd", Some(76.47), Some(86.66), 81.25),
    row(AUG, "mBERT_NN (fine-tuned)", "Eng+Hin+Ben", "Ben", "TextEmbd + FactVer", Some(73.5), Some(83.33), 78.12),
    row(ZERO, "mBERT_NN (fine-tuned)", "Eng+Ben", "Hin", "TextEmbd", Some(70.30), Some(95.80), 81.09),
    row(ZERO, "mBERT_NN (fine-tuned)", "Eng+Hin", "Ben", "TextEmbd", Some(90.66), Some(68.68), 77.79),
    row(ZERO, "mBERT_NN (fine-tuned)", "Hin+Ben", "Eng", "TextEmbd", Some(92.75), Some(62.95), 75.00),
];

/// Published rows; `mono` selects the English-only table, otherwise the
/// multilingual one.
pub fn reference_rows(mono: bool) -> Vec<ReferenceRow> {
    ROWS.iter().copied().filter(|r| (r.setting == MONO) == mono).collect()
}
