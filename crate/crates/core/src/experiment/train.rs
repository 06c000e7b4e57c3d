use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{ExperimentConfig, LossKind};
use crate::domains::{FeatureTensor, SearchDomain, StateOf};
use crate::losses::{
    compute_rn_bound, l2_loss, lstar_hard, lstar_surrogate, MonotoneDirection, TrainingSample, UnlabeledPolicy,
};
use crate::model::{AdamState, HeuristicModel};
use crate::search::{astar, SearchOptions, SearchOutcome};
use crate::{Error, Result, Scalar};

/// Memoized model heuristic for searching one instance.
pub fn model_heuristic<'a, D: SearchDomain, S: Scalar>(
    model: &'a HeuristicModel<S>,
    instance: &'a D,
) -> impl FnMut(&StateOf<D>) -> f64 + 'a {
    let mut memo: HashMap<StateOf<D>, f64> = HashMap::new();
    move |s: &StateOf<D>| {
        if let Some(&h) = memo.get(s) {
            return h;
        }
        let h = model.forward(&instance.encode(s)).expect("channel count checked").to_f64_lossy();
        memo.insert(s.clone(), h);
        h
    }
}

pub fn check_channels<D: SearchDomain, S: Scalar>(model: &HeuristicModel<S>) -> Result<()> {
    if model.config().input_channels != D::CHANNELS {
        return Err(Error::ChannelMismatch { expected: model.config().input_channels, got: D::CHANNELS });
    }
    Ok(())
}

pub fn solve_with_model<D: SearchDomain, S: Scalar>(
    model: &HeuristicModel<S>,
    instance: &D,
    options: SearchOptions,
) -> SearchOutcome<StateOf<D>, f64> {
    astar(instance, model_heuristic(model, instance), options)
}

pub fn solve_with_base<D: SearchDomain>(instance: &D, options: SearchOptions) -> SearchOutcome<StateOf<D>, f64> {
    astar(instance, |s: &StateOf<D>| instance.base_heuristic(s), options)
}

/// A training sample together with the instance that encodes its states.
#[derive(Debug)]
pub struct TrainItem<'a, D: SearchDomain> {
    pub instance: &'a D,
    pub sample: &'a TrainingSample<StateOf<D>, f64>,
}

impl<D: SearchDomain> Clone for TrainItem<'_, D> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<D: SearchDomain> Copy for TrainItem<'_, D> {}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainSettings {
    pub loss: LossKind,
    pub margin: f64,
    pub direction: MonotoneDirection,
    pub dead_end_value: f64,
    pub unlabeled: UnlabeledPolicy,
    /// Seeds the per-epoch shuffles.
    pub seed: u64,
}

impl TrainSettings {
    pub fn from_config(config: &ExperimentConfig, dead_end_value: f64) -> Self {
        TrainSettings {
            loss: config.loss,
            margin: config.margin,
            direction: config.monotone_direction,
            dead_end_value,
            unlabeled: if config.skip_unlabeled { UnlabeledPolicy::Skip } else { UnlabeledPolicy::Error },
            seed: config.seed,
        }
    }
}

/// Loss and diagnostics of one sample, measured before its update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleStats {
    pub loss: f64,
    pub term1_hard: f64,
    pub term2_hard: f64,
    pub rn_bound: usize,
}

/// Means over the samples of one epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub samples: usize,
    pub loss: f64,
    pub term1_hard: f64,
    pub term2_hard: f64,
    pub rn_bound: f64,
}

/// Model plus optimizer state; one Adam step per sample.
#[derive(Debug, Clone)]
pub struct Trainer<S> {
    pub model: HeuristicModel<S>,
    pub adam: AdamState<S>,
    pub settings: TrainSettings,
    pub epochs_done: usize,
}

impl<S: Scalar> Trainer<S> {
    pub fn new(model: HeuristicModel<S>, lr: f64, settings: TrainSettings) -> Self {
        let adam = AdamState::with_lr(model.param_count(), S::from_f64_lossy(lr));
        Trainer { model, adam, settings, epochs_done: 0 }
    }

    /// Heuristic values of every sample state, `on_path ++ off_path`.
    pub fn evaluate_sample<D: SearchDomain>(&self, item: TrainItem<'_, D>) -> Result<Vec<f64>> {
        check_channels::<D, S>(&self.model)?;
        item.sample
            .states()
            .collect::<Vec<_>>()
            .par_iter()
            .map(|s| self.model.forward(&item.instance.encode(&s.state)).map(|h| h.to_f64_lossy()))
            .collect()
    }

    /// Loss value and gradient with respect to the heuristic values.
    pub fn loss_and_gradient<St>(&self, sample: &TrainingSample<St, f64>, h: &[f64]) -> Result<(f64, Vec<f64>)> {
        let s = &self.settings;
        match s.loss {
            LossKind::Lstar => lstar_surrogate(sample, h, s.margin, s.direction),
            LossKind::L2 => l2_loss(sample, h, s.dead_end_value, s.unlabeled),
        }
    }

    pub fn step<D: SearchDomain>(&mut self, item: TrainItem<'_, D>) -> Result<SampleStats> {
        check_channels::<D, S>(&self.model)?;
        let states: Vec<&StateOf<D>> = item.sample.states().map(|s| &s.state).collect();
        let features: Vec<FeatureTensor<S>> = states.par_iter().map(|s| item.instance.encode(s)).collect();
        let caches = features.par_iter().map(|x| self.model.forward_cached(x)).collect::<Result<Vec<_>>>()?;
        let h: Vec<f64> = caches.iter().map(|c| c.value.to_f64_lossy()).collect();
        let (term1_hard, term2_hard) = lstar_hard(item.sample, &h, self.settings.direction)?;
        let rn_bound = compute_rn_bound(item.sample, &h)?;
        let (loss, dl_dh) = self.loss_and_gradient(item.sample, &h)?;
        let dl_dh: Vec<S> = dl_dh.into_iter().map(S::from_f64_lossy).collect();
        let grads = self.model.backward_cached(&features, &caches, &dl_dh);
        self.model.adam_step(&grads, &mut self.adam)?;
        Ok(SampleStats { loss, term1_hard, term2_hard, rn_bound })
    }

    /// One pass over `items` in an order shuffled by the seed and epoch number.
    pub fn epoch<D: SearchDomain>(&mut self, items: &[TrainItem<'_, D>]) -> Result<EpochStats> {
        let epoch = self.epochs_done + 1;
        let mut order: Vec<usize> = (0..items.len()).collect();
        let mut rng =
            ChaCha8Rng::seed_from_u64(self.settings.seed ^ (epoch as u64).wrapping_mul(0x2545_f491_4f6c_dd1d));
        order.shuffle(&mut rng);
        let mut total =
            EpochStats { epoch, samples: items.len(), loss: 0.0, term1_hard: 0.0, term2_hard: 0.0, rn_bound: 0.0 };
        for i in order {
            let s = self.step(items[i])?;
            total.loss += s.loss;
            total.term1_hard += s.term1_hard;
            total.term2_hard += s.term2_hard;
            total.rn_bound += s.rn_bound as f64;
        }
        if !items.is_empty() {
            let n = items.len() as f64;
            total.loss /= n;
            total.term1_hard /= n;
            total.term2_hard /= n;
            total.rn_bound /= n;
        }
        self.epochs_done = epoch;
        log::info!(
            "epoch {epoch}: loss {:.6} term1 {:.4} term2 {:.4} rn {:.2}",
            total.loss,
            total.term1_hard,
            total.term2_hard,
            total.rn_bound
        );
        Ok(total)
    }
}

pub fn write_train_log(stats: &[EpochStats], out: impl std::io::Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["epoch", "samples", "loss", "term1_hard", "term2_hard", "rn_bound"])?;
    for s in stats {
        w.write_record([
            s.epoch.to_string(),
            s.samples.to_string(),
            s.loss.to_string(),
            s.term1_hard.to_string(),
            s.term2_hard.to_string(),
            s.rn_bound.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))
}
