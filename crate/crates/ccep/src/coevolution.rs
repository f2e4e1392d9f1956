//! Outer prune-and-finetune loop: group the current base network by
//! prunable layer, evolve every group in parallel against the frozen
//! base, splice the selected layers into a complete pruned network,
//! finetune it, and archive the result as the next base.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{sample_subset, DataError, LabeledDataset};
use crate::genome::LayerGenome;
use crate::group_ea::{run_group_ea, GenerationTrace, GroupEaConfig, GroupEaError};
use crate::net::train::{finetune, FinetuneConfig};
use crate::net::{NetError, NetworkModel};

#[derive(Debug, Error)]
pub enum CoevolutionError {
    #[error("network has no prunable layers")]
    NoPrunableLayers,
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    GroupEa(#[from] GroupEaError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Hyperparameters of the full pruning run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CcepConfig {
    /// Maximum outer iterations T.
    pub iterations: usize,
    pub group: GroupEaConfig,
    /// Fraction of the training set sampled for the evaluation subset.
    pub ds_fraction: f64,
    pub finetune: FinetuneConfig,
    pub global_seed: u64,
}

impl CcepConfig {
    pub fn validate(&self) -> Result<(), CoevolutionError> {
        if self.iterations < 1 {
            return Err(CoevolutionError::InvalidConfig(
                "iterations must be at least 1".into(),
            ));
        }
        if !(self.ds_fraction > 0.0 && self.ds_fraction <= 1.0) {
            return Err(CoevolutionError::InvalidConfig(format!(
                "ds_fraction must lie in (0, 1], got {}",
                self.ds_fraction
            )));
        }
        self.group.validate()?;
        self.finetune.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntryMetrics {
    pub test_correct: usize,
    pub test_total: usize,
    pub flops: u64,
    pub params: u64,
    /// Fraction of the original (unpruned) network's FLOPs removed.
    pub flops_reduction: f64,
}

/// One finetuned pruned network per completed iteration.
#[derive(Debug, Clone)]
pub struct ArchiveEntry {
    pub iteration: usize,
    pub network: NetworkModel,
    /// Selected genome per prunable layer: (layer index, retain mask).
    pub genomes: Vec<(usize, LayerGenome)>,
    pub metrics: EntryMetrics,
}

/// Per-iteration bookkeeping for traces and budget checks.
#[derive(Debug, Clone)]
pub struct IterationReport {
    pub iteration: usize,
    /// Accuracy evaluations spent by all group EAs this iteration.
    pub evaluations: u64,
    /// (layer index, per-generation best trace) per group.
    pub traces: Vec<(usize, Vec<GenerationTrace>)>,
    /// Whether any group's final population held a non-all-ones individual.
    pub any_final_population_pruned: bool,
}

#[derive(Debug)]
pub struct RunOutput {
    pub archive: Vec<ArchiveEntry>,
    pub reports: Vec<IterationReport>,
    pub baseline_metrics: EntryMetrics,
}

/// Deterministic per-role seed derivation from the global seed, so
/// results are independent of worker scheduling.
fn derive_seed(global_seed: u64, tags: &[u64]) -> u64 {
    let mut s = global_seed ^ 0x6A09_E667_F3BC_C908;
    for &t in tags {
        s = (s.rotate_left(23) ^ t.wrapping_mul(0x9E37_79B9_7F4A_7C15))
            .wrapping_mul(0xBF58_476D_1CE4_E5B9);
    }
    s
}

fn derive_rng(global_seed: u64, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(global_seed, tags))
}

/// One group per prunable layer, widths read from the current base.
pub fn group_by_layer(base: &NetworkModel) -> Result<Vec<(usize, usize)>, CoevolutionError> {
    let groups = base.prunable_widths();
    if groups.is_empty() {
        return Err(CoevolutionError::NoPrunableLayers);
    }
    Ok(groups)
}

/// One outer iteration: sample the evaluation subset, evolve all groups in
/// parallel against the frozen base, splice, finetune, evaluate on test.
pub fn run_iteration(
    base: &NetworkModel,
    train: &LabeledDataset,
    test: &LabeledDataset,
    cfg: &CcepConfig,
    iteration: usize,
    original_flops: u64,
) -> Result<(NetworkModel, ArchiveEntry, IterationReport), CoevolutionError> {
    cfg.validate()?;
    let groups = group_by_layer(base)?;

    // one evaluation subset per iteration, shared by all groups so their
    // correct-counts are mutually comparable
    let ds_seed = derive_seed(cfg.global_seed, &[iteration as u64, 0xD5]);
    let eval_data = sample_subset(train, cfg.ds_fraction, ds_seed)?;

    let results = groups
        .par_iter()
        .map(|&(layer_index, _width)| {
            let mut rng = derive_rng(
                cfg.global_seed ^ cfg.group.seed,
                &[iteration as u64, layer_index as u64, 0xEA],
            );
            run_group_ea(base, layer_index, &eval_data, &cfg.group, &mut rng)
                .map(|r| (layer_index, r))
        })
        .collect::<Result<Vec<_>, GroupEaError>>()?;

    let genomes: Vec<(usize, LayerGenome)> = results
        .iter()
        .map(|(li, r)| (*li, r.selected.genome.clone()))
        .collect();
    let masks: Vec<LayerGenome> = genomes.iter().map(|(_, g)| g.clone()).collect();
    let spliced = base.apply_genomes(&masks)?;

    let mut ft_rng = derive_rng(cfg.global_seed, &[iteration as u64, 0xF7]);
    let finetuned = finetune(&spliced, train, &cfg.finetune, &mut ft_rng)?;

    let (test_correct, test_total) = finetuned.evaluate(test)?;
    let flops = finetuned.flops();
    let metrics = EntryMetrics {
        test_correct,
        test_total,
        flops,
        params: finetuned.num_params(),
        flops_reduction: 1.0 - flops as f64 / original_flops as f64,
    };

    let report = IterationReport {
        iteration,
        evaluations: results.iter().map(|(_, r)| r.evaluations).sum(),
        traces: results
            .iter()
            .map(|(li, r)| (*li, r.trace.clone()))
            .collect(),
        any_final_population_pruned: results.iter().any(|(_, r)| r.final_population_pruned),
    };
    let entry = ArchiveEntry {
        iteration,
        network: finetuned.clone(),
        genomes,
        metrics,
    };
    Ok((finetuned, entry, report))
}

/// The full run: T iterations (or early termination once no layer can
/// shrink further), chaining each finetuned network into the next base.
pub fn run(
    original: &NetworkModel,
    train: &LabeledDataset,
    test: &LabeledDataset,
    cfg: &CcepConfig,
) -> Result<RunOutput, CoevolutionError> {
    cfg.validate()?;
    let original_flops = original.flops();
    let (base_correct, base_total) = original.evaluate(test)?;
    let baseline_metrics = EntryMetrics {
        test_correct: base_correct,
        test_total: base_total,
        flops: original_flops,
        params: original.num_params(),
        flops_reduction: 0.0,
    };

    let mut base = original.clone();
    let mut archive = Vec::new();
    let mut reports = Vec::new();
    for iteration in 0..cfg.iterations {
        match group_by_layer(&base) {
            Ok(groups) if groups.iter().all(|&(_, w)| w == 1) => break,
            Err(CoevolutionError::NoPrunableLayers) => break,
            Err(e) => return Err(e),
            Ok(_) => {}
        }
        let (next, entry, report) =
            run_iteration(&base, train, test, cfg, iteration, original_flops)?;
        archive.push(entry);
        reports.push(report);
        base = next;
    }
    Ok(RunOutput {
        archive,
        reports,
        baseline_metrics,
    })
}
