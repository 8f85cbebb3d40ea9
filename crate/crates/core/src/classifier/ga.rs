//! Wrapper feature selection with a genetic algorithm.
//!
//! The data is split into stratified outer folds. For each fold the GA searches
//! masks using only the fold's training part (itself split into an inner
//! training set and an inner holdout that scores each mask). The held-out fold
//! only reports the accuracy of the mask the search returned. A feature ends up
//! in the final mask when enough folds selected it.

use std::cmp::Reverse;
use std::collections::HashMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fit, stratified_folds, Dataset, TrainConfig};
use crate::error::{Error, Result};
use crate::features::{FeatureId, FeatureMask, FEATURE_COUNT};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaConfig {
    /// Probability that an offspring is mutated at all.
    pub mutation_prob: f64,
    /// Per-feature flip probability inside a mutated offspring.
    pub bit_flip_prob: f64,
    pub crossover_prob: f64,
    pub population: usize,
    pub generations: usize,
    /// Stop a fold's search after this many generations without a better mask.
    pub stall_generations: usize,
    pub tournament: usize,
    pub elitism: usize,
    pub folds: usize,
    pub min_fold_votes: usize,
    /// Share of each fold's training part used to score masks.
    pub holdout_fraction: f64,
    pub seed: u64,
    /// Trainer used inside the fitness function.
    pub trainer: TrainConfig,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            mutation_prob: 0.2,
            bit_flip_prob: 0.05,
            crossover_prob: 0.5,
            population: 50,
            generations: 30,
            stall_generations: 10,
            tournament: 3,
            elitism: 1,
            folds: 5,
            min_fold_votes: 2,
            holdout_fraction: 1.0 / 3.0,
            seed: 0,
            trainer: TrainConfig {
                hidden: 8,
                max_epochs: 60,
                patience: 10,
                batch_size: 8,
                ..TrainConfig::default()
            },
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("mutation_prob", self.mutation_prob),
            ("bit_flip_prob", self.bit_flip_prob),
            ("crossover_prob", self.crossover_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} must be in [0, 1], got {p}")));
            }
        }
        if self.population < 2 || self.population % 2 != 0 {
            return Err(Error::Config("population must be even and at least 2".into()));
        }
        if self.folds < 2 || self.tournament == 0 || self.elitism > self.population {
            return Err(Error::Config("folds >= 2, tournament >= 1, elitism <= population".into()));
        }
        if !(self.holdout_fraction > 0.0 && self.holdout_fraction < 1.0) {
            return Err(Error::Config("holdout_fraction must be in (0, 1)".into()));
        }
        self.trainer.validate()
    }
}

/// Sample indices used by one outer fold.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldPartition {
    /// Never seen by the search.
    pub validation: Vec<usize>,
    pub inner_train: Vec<usize>,
    pub inner_holdout: Vec<usize>,
}

/// The outer and inner splits [`select_features`] uses for `data`.
pub fn fold_partitions(data: &Dataset, cfg: &GaConfig) -> Vec<FoldPartition> {
    let outer = stratified_folds(data.y(), cfg.folds, cfg.seed);
    let inner_k = (1.0 / cfg.holdout_fraction).round().max(2.0) as usize;
    (0..cfg.folds)
        .map(|f| {
            let validation: Vec<usize> = (0..data.len()).filter(|&i| outer[i] == f).collect();
            let search: Vec<usize> = (0..data.len()).filter(|&i| outer[i] != f).collect();
            let search_labels: Vec<_> = search.iter().map(|&i| data.y()[i]).collect();
            let inner = stratified_folds(&search_labels, inner_k, cfg.seed.wrapping_add(1 + f as u64));
            let (mut inner_train, mut inner_holdout) = (Vec::new(), Vec::new());
            for (j, &i) in search.iter().enumerate() {
                if inner[j] == 0 {
                    inner_holdout.push(i);
                } else {
                    inner_train.push(i);
                }
            }
            FoldPartition {
                validation,
                inner_train,
                inner_holdout,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    /// Features chosen by at least `min_fold_votes` folds.
    pub mask: FeatureMask,
    pub fold_masks: Vec<FeatureMask>,
    /// Inner-holdout accuracy of each fold's best mask.
    pub fold_fitness: Vec<f64>,
    /// Accuracy of each fold's best mask on that fold's validation part.
    pub fold_validation_accuracy: Vec<f64>,
    /// Folds that selected each feature, f4..f24.
    pub votes: Vec<usize>,
}

/// Accuracy of a model trained on `train` and scored on `test`, both restricted to `mask`.
fn accuracy(data: &Dataset, mask: FeatureMask, train: &[usize], test: &[usize], cfg: &TrainConfig) -> Result<f64> {
    let restricted = data.restrict(mask)?;
    let model = fit(&restricted.subset(train), cfg)?;
    let mut correct = 0;
    for &i in test {
        if model.classify_values(&restricted.x()[i])?.label == restricted.y()[i] {
            correct += 1;
        }
    }
    Ok(correct as f64 / test.len().max(1) as f64)
}

type Key = (u64, Reverse<usize>, Reverse<u32>);

/// Higher is better: accuracy first, then fewer features, then lower bits.
fn rank(mask: FeatureMask, fitness: f64) -> Key {
    ((fitness * 1e12).round() as u64, Reverse(mask.count()), Reverse(mask.bits()))
}

struct Search<'a> {
    data: &'a Dataset,
    part: &'a FoldPartition,
    cfg: &'a GaConfig,
    pool: Vec<FeatureId>,
    cache: HashMap<FeatureMask, f64>,
}

impl Search<'_> {
    fn evaluate(&mut self, population: &[FeatureMask]) -> Result<Vec<f64>> {
        let mut fresh: Vec<FeatureMask> = population
            .iter()
            .filter(|m| !self.cache.contains_key(*m))
            .copied()
            .collect();
        fresh.sort_by_key(|m| m.bits());
        fresh.dedup();
        let trainer = &self.cfg.trainer;
        let scored: Vec<(FeatureMask, Result<f64>)> = fresh
            .into_par_iter()
            .map(|m| {
                let acc = accuracy(self.data, m, &self.part.inner_train, &self.part.inner_holdout, trainer);
                (m, acc)
            })
            .collect();
        for (m, acc) in scored {
            self.cache.insert(m, acc?);
        }
        Ok(population.iter().map(|m| self.cache[m]).collect())
    }

    fn random_mask(&self, rng: &mut ChaCha8Rng) -> FeatureMask {
        FeatureMask::from_features(self.pool.iter().copied().filter(|_| rng.gen_bool(0.5)))
    }

    fn tournament<'p>(&self, pop: &'p [(FeatureMask, f64)], rng: &mut ChaCha8Rng) -> &'p (FeatureMask, f64) {
        (0..self.cfg.tournament)
            .map(|_| &pop[rng.gen_range(0..pop.len())])
            .max_by_key(|(m, f)| rank(*m, *f))
            .expect("tournament size is positive")
    }

    fn crossover(&self, a: FeatureMask, b: FeatureMask, rng: &mut ChaCha8Rng) -> (FeatureMask, FeatureMask) {
        if self.pool.len() < 2 || !rng.gen_bool(self.cfg.crossover_prob) {
            return (a, b);
        }
        let cut = rng.gen_range(1..self.pool.len());
        let (mut c, mut d) = (FeatureMask::EMPTY, FeatureMask::EMPTY);
        for (i, &id) in self.pool.iter().enumerate() {
            let (from_c, from_d) = if i < cut { (a, b) } else { (b, a) };
            if from_c.contains(id) {
                c = c.with(id);
            }
            if from_d.contains(id) {
                d = d.with(id);
            }
        }
        (c, d)
    }

    fn mutate(&self, mut m: FeatureMask, rng: &mut ChaCha8Rng) -> FeatureMask {
        if rng.gen_bool(self.cfg.mutation_prob) {
            for &id in &self.pool {
                if rng.gen_bool(self.cfg.bit_flip_prob) {
                    m = if m.contains(id) { m.without(id) } else { m.with(id) };
                }
            }
        }
        m
    }

    fn run(&mut self, seed: u64) -> Result<(FeatureMask, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let masks: Vec<FeatureMask> = (0..self.cfg.population).map(|_| self.random_mask(&mut rng)).collect();
        let fitness = self.evaluate(&masks)?;
        let mut pop: Vec<(FeatureMask, f64)> = masks.into_iter().zip(fitness).collect();
        let mut best = *pop.iter().max_by_key(|(m, f)| rank(*m, *f)).expect("non-empty");
        let mut stale = 0;

        for _ in 1..self.cfg.generations {
            pop.sort_by_key(|(m, f)| Reverse(rank(*m, *f)));
            let mut next: Vec<FeatureMask> = pop.iter().take(self.cfg.elitism).map(|(m, _)| *m).collect();
            while next.len() < self.cfg.population {
                let a = self.tournament(&pop, &mut rng).0;
                let b = self.tournament(&pop, &mut rng).0;
                let (c, d) = self.crossover(a, b, &mut rng);
                next.push(self.mutate(c, &mut rng));
                if next.len() < self.cfg.population {
                    next.push(self.mutate(d, &mut rng));
                }
            }
            let fitness = self.evaluate(&next)?;
            pop = next.into_iter().zip(fitness).collect();
            let gen_best = *pop.iter().max_by_key(|(m, f)| rank(*m, *f)).expect("non-empty");
            if rank(gen_best.0, gen_best.1) > rank(best.0, best.1) {
                best = gen_best;
                stale = 0;
            } else {
                stale += 1;
                if stale >= self.cfg.stall_generations {
                    break;
                }
            }
        }
        Ok(best)
    }
}

/// Runs the GA on every outer fold and votes. Candidate features are those of `data`'s mask.
pub fn select_features(data: &Dataset, cfg: &GaConfig) -> Result<Selection> {
    cfg.validate()?;
    if data.len() < cfg.folds * 10 {
        return Err(Error::Training(format!(
            "feature selection needs at least {} samples, got {}",
            cfg.folds * 10,
            data.len()
        )));
    }
    let present = data.class_counts().iter().filter(|&&c| c > 0).count();
    if present < 2 {
        return Err(Error::Training("training data must contain at least two classes".into()));
    }

    let partitions = fold_partitions(data, cfg);
    let mut fold_masks = Vec::with_capacity(cfg.folds);
    let mut fold_fitness = Vec::with_capacity(cfg.folds);
    let mut fold_validation_accuracy = Vec::with_capacity(cfg.folds);
    for (f, part) in partitions.iter().enumerate() {
        let trainer = TrainConfig {
            seed: cfg.trainer.seed.wrapping_add(cfg.seed).wrapping_add(f as u64),
            ..cfg.trainer.clone()
        };
        let fold_cfg = GaConfig {
            trainer,
            ..cfg.clone()
        };
        let mut search = Search {
            data,
            part,
            cfg: &fold_cfg,
            pool: data.mask().iter().collect(),
            cache: HashMap::new(),
        };
        let (mask, fitness) = search.run(cfg.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(f as u64))?;
        let search_idx: Vec<usize> = part.inner_train.iter().chain(&part.inner_holdout).copied().collect();
        fold_validation_accuracy.push(accuracy(data, mask, &search_idx, &part.validation, &fold_cfg.trainer)?);
        fold_masks.push(mask);
        fold_fitness.push(fitness);
    }

    let mut votes = vec![0; FEATURE_COUNT];
    for m in &fold_masks {
        for id in m.iter() {
            votes[id.slot()] += 1;
        }
    }
    let mask = FeatureMask::from_features(
        FeatureId::all().filter(|id| votes[id.slot()] >= cfg.min_fold_votes),
    );
    Ok(Selection {
        mask,
        fold_masks,
        fold_fitness,
        fold_validation_accuracy,
        votes,
    })
}
