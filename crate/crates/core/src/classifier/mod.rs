//! Segment classifier: a z-scored 1-hidden-layer MLP, k-fold cross-validation
//! and genetic-algorithm wrapper feature selection.

pub mod ga;
pub mod mlp;

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::Activity;
use crate::features::{FeatureMask, FeatureRow, FeatureVector};
use mlp::{Network, Sgd};

pub use ga::{select_features, GaConfig, Selection};

pub const MODEL_FORMAT: &str = "jmfar-mlp";
pub const MODEL_VERSION: u32 = 1;

const CLASSES: usize = 3;

/// Labelled active-feature rows sharing one mask.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    mask: FeatureMask,
    x: Vec<Vec<f64>>,
    y: Vec<Activity>,
}

impl Dataset {
    pub fn new(mask: FeatureMask, x: Vec<Vec<f64>>, y: Vec<Activity>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::InvalidInput(format!(
                "{} feature rows but {} labels",
                x.len(),
                y.len()
            )));
        }
        if let Some(i) = x.iter().position(|row| row.len() != mask.count()) {
            return Err(Error::InvalidInput(format!(
                "row {i} has {} values, mask has {} features",
                x[i].len(),
                mask.count()
            )));
        }
        if let Some(i) = x.iter().position(|row| row.iter().any(|v| !v.is_finite())) {
            return Err(Error::InvalidInput(format!("row {i} has a non-finite value")));
        }
        Ok(Self { mask, x, y })
    }

    /// Labelled vectors seen through `mask`.
    pub fn from_vectors(samples: &[(FeatureVector, Activity)], mask: FeatureMask) -> Result<Self> {
        let mut x = Vec::with_capacity(samples.len());
        let mut y = Vec::with_capacity(samples.len());
        for (fv, label) in samples {
            x.push(fv.restricted(mask)?.active_values());
            y.push(*label);
        }
        Self::new(mask, x, y)
    }

    /// Rows of a feature table; every row must carry a label.
    pub fn from_rows(rows: &[FeatureRow], mask: FeatureMask) -> Result<Self> {
        let samples = rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                r.label
                    .map(|l| (r.features.clone(), l))
                    .ok_or_else(|| Error::InvalidInput(format!("feature row {i} has no label")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_vectors(&samples, mask)
    }

    pub fn mask(&self) -> FeatureMask {
        self.mask
    }

    pub fn x(&self) -> &[Vec<f64>] {
        &self.x
    }

    pub fn y(&self) -> &[Activity] {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn class_counts(&self) -> [usize; CLASSES] {
        let mut c = [0; CLASSES];
        for l in &self.y {
            c[l.index()] += 1;
        }
        c
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            mask: self.mask,
            x: indices.iter().map(|&i| self.x[i].clone()).collect(),
            y: indices.iter().map(|&i| self.y[i]).collect(),
        }
    }

    /// Keeps the columns of `mask`, which must be a subset of this dataset's mask.
    pub fn restrict(&self, mask: FeatureMask) -> Result<Dataset> {
        if mask.bits() & !self.mask.bits() != 0 {
            return Err(Error::InvalidInput(format!("mask {mask} is not a subset of {}", self.mask)));
        }
        let cols: Vec<usize> = self
            .mask
            .iter()
            .enumerate()
            .filter(|(_, id)| mask.contains(*id))
            .map(|(col, _)| col)
            .collect();
        Ok(Dataset {
            mask,
            x: self.x.iter().map(|row| cols.iter().map(|&c| row[c]).collect()).collect(),
            y: self.y.clone(),
        })
    }

    /// Same rows with labels shuffled.
    pub fn with_permuted_labels(&self, seed: u64) -> Dataset {
        let mut y = self.y.clone();
        y.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        Dataset {
            mask: self.mask,
            x: self.x.clone(),
            y,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub folds: usize,
    pub seed: u64,
    /// Epochs without a drop in training loss before stopping.
    pub patience: usize,
    pub hidden: usize,
    pub batch_size: usize,
    pub momentum: f64,
    pub weight_decay: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            max_epochs: 300,
            folds: 5,
            seed: 0,
            patience: 20,
            hidden: 20,
            batch_size: 8,
            momentum: 0.9,
            weight_decay: 1e-4,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if self.folds < 2 {
            return Err(Error::Config("folds must be at least 2".into()));
        }
        if self.hidden == 0 || self.batch_size == 0 || self.max_epochs == 0 {
            return Err(Error::Config("hidden, batch_size and max_epochs must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) || self.weight_decay < 0.0 {
            return Err(Error::Config("momentum must be in [0, 1) and weight_decay >= 0".into()));
        }
        Ok(())
    }
}

/// A trained classifier with its input standardization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub format: String,
    pub version: u32,
    pub mask: FeatureMask,
    pub norm_mean: Vec<f64>,
    pub norm_std: Vec<f64>,
    pub network: Network,
    pub seed: u64,
    /// Validation accuracy of each cross-validation fold; empty when not cross-validated.
    pub fold_accuracy: Vec<f64>,
}

/// Predicted label with the class probabilities in [`Activity::ALL`] order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub label: Activity,
    pub scores: [f64; CLASSES],
}

/// Argmax over class scores; ties go to Other, then Rumination, then Grazing.
pub fn argmax_label(scores: &[f64; CLASSES]) -> Activity {
    let mut best = Activity::Other;
    for c in [Activity::Rumination, Activity::Grazing] {
        if scores[c.index()] > scores[best.index()] {
            best = c;
        }
    }
    best
}

impl MlpModel {
    pub fn input_dim(&self) -> usize {
        self.network.input
    }

    pub fn normalize(&self, values: &[f64]) -> Vec<f64> {
        values
            .iter()
            .zip(self.norm_mean.iter().zip(&self.norm_std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    /// Classifies raw active-feature values.
    pub fn classify_values(&self, values: &[f64]) -> Result<Classification> {
        if values.len() != self.input_dim() {
            return Err(Error::Model(format!(
                "model expects {} features, got {}",
                self.input_dim(),
                values.len()
            )));
        }
        let p = self.network.forward(&self.normalize(values));
        let scores = [p[0], p[1], p[2]];
        Ok(Classification {
            label: argmax_label(&scores),
            scores,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let model: MlpModel = serde_json::from_str(s).map_err(|e| Error::Model(e.to_string()))?;
        model.check()?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    fn check(&self) -> Result<()> {
        if self.format != MODEL_FORMAT || self.version != MODEL_VERSION {
            return Err(Error::Model(format!(
                "unsupported model format {} v{}",
                self.format, self.version
            )));
        }
        let n = &self.network;
        let dims_ok = n.input == self.mask.count()
            && n.output == CLASSES
            && n.w1.len() == n.hidden * n.input
            && n.b1.len() == n.hidden
            && n.w2.len() == n.output * n.hidden
            && n.b2.len() == n.output
            && self.norm_mean.len() == n.input
            && self.norm_std.len() == n.input;
        if !dims_ok {
            return Err(Error::Model("inconsistent model dimensions".into()));
        }
        if self.norm_std.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::Model("normalization std must be positive".into()));
        }
        Ok(())
    }
}

/// Classifies one feature vector; its mask must cover the model's mask.
pub fn classify(model: &MlpModel, fv: &FeatureVector) -> Result<Classification> {
    let fv = fv
        .restricted(model.mask)
        .map_err(|_| Error::Model(format!("vector mask {} lacks model features {}", fv.mask, model.mask)))?;
    model.classify_values(&fv.active_values())
}

fn normalization(x: &[Vec<f64>], dim: usize) -> (Vec<f64>, Vec<f64>) {
    let n = x.len().max(1) as f64;
    let mean: Vec<f64> = (0..dim).map(|c| x.iter().map(|r| r[c]).sum::<f64>() / n).collect();
    let std = (0..dim)
        .map(|c| {
            let var = x.iter().map(|r| (r[c] - mean[c]).powi(2)).sum::<f64>() / n;
            let s = var.sqrt();
            if s > 1e-12 * mean[c].abs().max(1.0) {
                s
            } else {
                1.0
            }
        })
        .collect();
    (mean, std)
}

/// Fits one model on all of `data` without cross-validation or size checks.
pub fn fit(data: &Dataset, cfg: &TrainConfig) -> Result<MlpModel> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::Training("no training samples".into()));
    }
    let dim = data.mask.count();
    let (norm_mean, norm_std) = normalization(&data.x, dim);
    let xs: Vec<Vec<f64>> = data
        .x
        .iter()
        .map(|row| {
            row.iter()
                .zip(norm_mean.iter().zip(&norm_std))
                .map(|(v, (m, s))| (v - m) / s)
                .collect()
        })
        .collect();
    let ys: Vec<usize> = data.y.iter().map(|l| l.index()).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut net = Network::xavier(dim, cfg.hidden, CLASSES, &mut rng);
    let mut sgd = Sgd::new(&net, cfg.learning_rate, cfg.momentum, cfg.weight_decay);
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let mut best_loss = f64::INFINITY;
    let mut stale = 0;
    for _ in 0..cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            loss += sgd.step(&mut net, &xs, &ys, batch);
        }
        loss /= xs.len() as f64;
        if loss < best_loss - 1e-6 {
            best_loss = loss;
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                break;
            }
        }
    }
    Ok(MlpModel {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        mask: data.mask,
        norm_mean,
        norm_std,
        network: net,
        seed: cfg.seed,
        fold_accuracy: Vec::new(),
    })
}

/// Assigns each sample a fold in `0..k`, keeping class proportions per fold.
pub fn stratified_folds(labels: &[Activity], k: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_of = vec![0; labels.len()];
    let mut next = 0;
    for class in Activity::ALL {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        members.shuffle(&mut rng);
        for i in members {
            fold_of[i] = next % k;
            next += 1;
        }
    }
    fold_of
}

fn check_trainable(data: &Dataset, min_per_class: usize) -> Result<()> {
    let counts = data.class_counts();
    let present: Vec<usize> = counts.iter().copied().filter(|&c| c > 0).collect();
    if present.len() < 2 {
        return Err(Error::Training("training data must contain at least two classes".into()));
    }
    if let Some(c) = Activity::ALL
        .iter()
        .find(|c| counts[c.index()] > 0 && counts[c.index()] < min_per_class)
    {
        return Err(Error::Training(format!(
            "class {c} has {} samples, at least {min_per_class} are needed",
            counts[c.index()]
        )));
    }
    Ok(())
}

/// Out-of-fold results of k-fold cross-validation.
#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub fold_of: Vec<usize>,
    pub predictions: Vec<Activity>,
    pub fold_accuracy: Vec<f64>,
    pub accuracy: f64,
}

/// Stratified k-fold cross-validation; fold `f` trains with seed `cfg.seed + f`.
pub fn cross_validate(data: &Dataset, cfg: &TrainConfig) -> Result<CvResult> {
    cfg.validate()?;
    check_trainable(data, 1)?;
    let fold_of = stratified_folds(&data.y, cfg.folds, cfg.seed);
    let per_fold: Vec<Result<Vec<(usize, Activity)>>> = (0..cfg.folds)
        .into_par_iter()
        .map(|f| {
            let train_idx: Vec<usize> = (0..data.len()).filter(|&i| fold_of[i] != f).collect();
            let test_idx: Vec<usize> = (0..data.len()).filter(|&i| fold_of[i] == f).collect();
            let fold_cfg = TrainConfig {
                seed: cfg.seed.wrapping_add(f as u64),
                ..cfg.clone()
            };
            let model = fit(&data.subset(&train_idx), &fold_cfg)?;
            test_idx
                .into_iter()
                .map(|i| Ok((i, model.classify_values(&data.x[i])?.label)))
                .collect()
        })
        .collect();

    let mut predictions = vec![Activity::Other; data.len()];
    let mut fold_accuracy = Vec::with_capacity(cfg.folds);
    for fold in per_fold {
        let fold = fold?;
        let correct = fold.iter().filter(|(i, p)| data.y[*i] == *p).count();
        fold_accuracy.push(if fold.is_empty() {
            0.0
        } else {
            correct as f64 / fold.len() as f64
        });
        for (i, p) in fold {
            predictions[i] = p;
        }
    }
    let correct = predictions.iter().zip(&data.y).filter(|(p, y)| p == y).count();
    Ok(CvResult {
        fold_of,
        predictions,
        fold_accuracy,
        accuracy: correct as f64 / data.len() as f64,
    })
}

/// Cross-validates, then fits the returned model on all samples.
pub fn train(data: &Dataset, cfg: &TrainConfig) -> Result<MlpModel> {
    cfg.validate()?;
    check_trainable(data, 10)?;
    let cv = cross_validate(data, cfg)?;
    let mut model = fit(data, cfg)?;
    model.fold_accuracy = cv.fold_accuracy;
    Ok(model)
}

/// Largest relative gap between the analytic loss gradient and central finite
/// differences (step 1e-5) over every weight and bias, for one sample.
///
/// Relative gaps use `max(|analytic|, |numeric|, 1e-6)` as denominator so that
/// parameters with vanishing gradient compare absolutely.
pub fn gradient_check(model: &MlpModel, fv: &FeatureVector, label: Activity) -> Result<f64> {
    let values = fv
        .restricted(model.mask)
        .map_err(|e| Error::Model(e.to_string()))?
        .active_values();
    let x = model.normalize(&values);
    let target = label.index();
    let analytic = model.network.gradient(&x, target).flat();
    let step = 1e-5;
    let mut net = model.network.clone();
    let mut worst: f64 = 0.0;
    for (i, a) in analytic.iter().enumerate() {
        let original = *net.param_mut(i);
        *net.param_mut(i) = original + step;
        let plus = net.loss(&x, target);
        *net.param_mut(i) = original - step;
        let minus = net.loss(&x, target);
        *net.param_mut(i) = original;
        let numeric = (plus - minus) / (2.0 * step);
        let scale = a.abs().max(numeric.abs()).max(1e-6);
        worst = worst.max((a - numeric).abs() / scale);
    }
    Ok(worst)
}
