use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::corpus::Label;

/// Binary confusion counts with fake as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl Confusion {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// Counts with the classes swapped.
    pub fn flipped(&self) -> Confusion {
        Confusion { tp: self.tn, fp: self.fn_, fn_: self.fp, tn: self.tp }
    }
}

/// Precision, recall and F for one class, as fractions. A zero
/// denominator yields 0 and sets the matching flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
    pub precision_undefined: bool,
    pub recall_undefined: bool,
    pub f_undefined: bool,
}

impl ClassScores {
    pub fn from_confusion(c: &Confusion) -> Self {
        let ratio = |num: u64, den: u64| if den == 0 { (0.0, true) } else { (num as f64 / den as f64, false) };
        let (precision, precision_undefined) = ratio(c.tp, c.tp + c.fp);
        let (recall, recall_undefined) = ratio(c.tp, c.tp + c.fn_);
        let (f_score, f_undefined) = if precision + recall == 0.0 {
            (0.0, true)
        } else {
            (2.0 * precision * recall / (precision + recall), false)
        };
        ClassScores { precision, recall, f_score, precision_undefined, recall_undefined, f_undefined }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MacroScores {
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub confusion: Confusion,
    /// Fake class; the headline numbers.
    pub fake: ClassScores,
    pub non_fake: ClassScores,
    /// Unweighted mean of the two per-class scores.
    #[serde(rename = "macro")]
    pub macro_avg: MacroScores,
    pub accuracy: f64,
}

impl Metrics {
    pub fn from_confusion(confusion: Confusion) -> Self {
        let fake = ClassScores::from_confusion(&confusion);
        let non_fake = ClassScores::from_confusion(&confusion.flipped());
        let macro_avg = MacroScores {
            precision: (fake.precision + non_fake.precision) / 2.0,
            recall: (fake.recall + non_fake.recall) / 2.0,
            f_score: (fake.f_score + non_fake.f_score) / 2.0,
        };
        let total = confusion.total();
        let accuracy = if total == 0 { 0.0 } else { (confusion.tp + confusion.tn) as f64 / total as f64 };
        Metrics { confusion, fake, non_fake, macro_avg, accuracy }
    }
}

pub fn confusion(pred: &[Label], gold: &[Label]) -> Result<Confusion, HarnessError> {
    if pred.len() != gold.len() {
        return Err(HarnessError::LengthMismatch { pred: pred.len(), gold: gold.len() });
    }
    if pred.is_empty() {
        return Err(HarnessError::NoPredictions);
    }
    let mut c = Confusion::default();
    for (&p, &g) in pred.iter().zip(gold) {
        match (p, g) {
            (Label::Fake, Label::Fake) => c.tp += 1,
            (Label::Fake, Label::NonFake) => c.fp += 1,
            (Label::NonFake, Label::Fake) => c.fn_ += 1,
            (Label::NonFake, Label::NonFake) => c.tn += 1,
        }
    }
    Ok(c)
}

pub fn compute_metrics(pred: &[Label], gold: &[Label]) -> Result<Metrics, HarnessError> {
    confusion(pred, gold).map(Metrics::from_confusion)
}

#[cfg(test)]
mod tests {
    use super::*;
    use Label::{Fake as F, NonFake as N};

    #[test]
    fn worked_example() {
        let m = Metrics::from_confusion(Confusion { tp: 3, fp: 1, fn_: 2, tn: 0 });
        assert_eq!(m.fake.precision, 0.75);
        assert_eq!(m.fake.recall, 0.6);
        assert!((m.fake.f_score - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn perfect_predictions() {
        let gold = [F, N, F, N];
        let m = compute_metrics(&gold, &gold).unwrap();
        assert_eq!((m.fake.precision, m.fake.recall, m.fake.f_score), (1.0, 1.0, 1.0));
        assert_eq!(m.macro_avg.f_score, 1.0);
    }

    #[test]
    fn no_positive_predictions() {
        let m = compute_metrics(&[N, N, N], &[F, N, F]).unwrap();
        assert_eq!(m.fake.precision, 0.0);
        assert!(m.fake.precision_undefined);
        assert!(!m.fake.recall_undefined);
        assert_eq!(m.fake.recall, 0.0);
        assert_eq!(m.fake.f_score, 0.0);
        assert!(m.fake.f_undefined);
    }

    #[test]
    fn shape_errors() {
        assert!(matches!(compute_metrics(&[F], &[F, N]), Err(HarnessError::LengthMismatch { .. })));
        assert!(matches!(compute_metrics(&[], &[]), Err(HarnessError::NoPredictions)));
    }
}
