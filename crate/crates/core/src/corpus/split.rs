use std::collections::{BTreeMap, HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{CorpusError, Dataset, Label, Lang};

/// Result of a stratified train/test split.
#[derive(Debug, Clone)]
pub struct Split {
    pub train: Dataset,
    pub test: Dataset,
    /// Ids of records whose partition was dictated by their translation
    /// group rather than drawn within their own stratum.
    pub grouped: Vec<String>,
}

/// Stratified split by (language, label).
///
/// Within each stratum `floor(n * (1 - train_fraction))` records go to the
/// test set and the remainder to training. Records that share an
/// `origin_id` (translations of one tweet) always land in the same
/// partition as the group's anchor, which is the record whose id equals the
/// origin id, or the first group member in dataset order when the original
/// is absent. Output datasets keep the input order.
pub fn split_dataset(ds: &Dataset, train_fraction: f64, seed: u64) -> Result<Split, CorpusError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(CorpusError::BadFraction(train_fraction));
    }
    if ds.is_empty() {
        return Err(CorpusError::Empty);
    }
    for (&(lang, label), &count) in ds.tallies() {
        if count < 2 {
            return Err(CorpusError::StratumTooSmall { lang, label, count });
        }
    }

    let records = ds.records();
    let ids: HashSet<&str> = records.iter().map(|r| r.id.as_str()).collect();
    let mut anchor_of_group: HashMap<&str, usize> = HashMap::new();
    for (i, rec) in records.iter().enumerate() {
        let key = rec.group_key();
        if rec.id == key || !ids.contains(key) {
            anchor_of_group.entry(key).or_insert(i);
        }
    }

    let mut strata: BTreeMap<(Lang, Label), Vec<usize>> = BTreeMap::new();
    for &i in anchor_of_group.values() {
        strata.entry((records[i].lang, records[i].label)).or_default().push(i);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut anchor_in_test: HashMap<&str, bool> = HashMap::new();
    for members in strata.values_mut() {
        members.sort_unstable();
        members.shuffle(&mut rng);
        let n_test = test_count(members.len(), train_fraction);
        for (pos, &i) in members.iter().enumerate() {
            anchor_in_test.insert(records[i].group_key(), pos < n_test);
        }
    }

    let mut train = Vec::new();
    let mut test = Vec::new();
    let mut grouped = Vec::new();
    for (i, rec) in records.iter().enumerate() {
        let key = rec.group_key();
        if anchor_of_group[key] != i {
            grouped.push(rec.id.clone());
        }
        if anchor_in_test[key] {
            test.push(rec.clone());
        } else {
            train.push(rec.clone());
        }
    }

    Ok(Split { train: Dataset::new_unchecked(train), test: Dataset::new_unchecked(test), grouped })
}

/// Test-set size for a stratum of `n` records. The epsilon absorbs the
/// representation error in `1 - train_fraction` (e.g. 0.19999999999999996).
fn test_count(n: usize, train_fraction: f64) -> usize {
    ((n as f64) * (1.0 - train_fraction) + 1e-9).floor() as usize
}
