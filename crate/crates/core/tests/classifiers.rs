use ndarray::{concatenate, Axis};
use tweetguard::classifiers::{train, train_with_log, ClassifierKind, ModelBody, ModelParams, TrainConfig};
use tweetguard::corpus::Label;
use tweetguard::features::{Family, FeatureLayout};
use tweetguard::synthetic::blobs_2d;

fn layout() -> FeatureLayout {
    FeatureLayout::for_families(&[Family::TextEmbd], 2)
}

#[test]
fn mlp_loss_trends_down() {
    let (x, y) = blobs_2d(200, 3);
    let mut cfg = TrainConfig::new(ClassifierKind::Mlp, 5);
    if let ModelParams::Mlp(p) = &mut cfg.model {
        p.epochs = 200;
    }
    let (_, log) = train_with_log(&cfg, &x, &y, &layout()).unwrap();
    assert_eq!(log.len(), 200);
    let blocks: Vec<f64> = log.chunks(20).map(|c| c.iter().map(|e| e.loss).sum::<f64>() / c.len() as f64).collect();
    for w in blocks.windows(2) {
        assert!(w[1] <= w[0], "20-epoch average rose: {blocks:?}");
    }
    assert!(blocks.last().unwrap() < &(blocks[0] * 0.5));
}

#[test]
fn forest_vote_ignores_tree_order() {
    let (x, y) = blobs_2d(120, 4);
    let mut cfg = TrainConfig::new(ClassifierKind::RandomForest, 8);
    if let ModelParams::RandomForest(p) = &mut cfg.model {
        p.n_trees = 51;
    }
    let model = train(&cfg, &x, &y, &layout()).unwrap();
    let mut reversed = model.clone();
    let ModelBody::RandomForest(f) = &mut reversed.body else { panic!("forest expected") };
    f.trees.reverse();
    let (probe, _) = blobs_2d(100, 40);
    for row in probe.rows() {
        let row = row.to_vec();
        assert_eq!(model.predict_proba_slice(&row).unwrap(), reversed.predict_proba_slice(&row).unwrap());
    }
}

#[test]
fn svm_decision_survives_duplication() {
    let (x, y) = blobs_2d(160, 5);
    let doubled = concatenate(Axis(0), &[x.view(), x.view()]).unwrap();
    let y2: Vec<Label> = y.iter().chain(&y).copied().collect();
    let cfg = TrainConfig::new(ClassifierKind::LinearSvm, 2);
    let once = train(&cfg, &x, &y, &layout()).unwrap();
    let twice = train(&cfg, &doubled, &y2, &layout()).unwrap();
    let (probe, _) = blobs_2d(200, 50);
    for row in probe.rows() {
        let row = row.to_vec();
        let a = once.predict_proba_slice(&row).unwrap();
        let b = twice.predict_proba_slice(&row).unwrap();
        assert_eq!(a[1] > a[0], b[1] > b[0], "{row:?}");
    }
}
