//! Mini-batch training with Adam and the warmup/decay schedule.

use std::collections::BTreeMap;
use std::fmt;

use kbqa_core::dataset::QuestionRecord;
use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::autograd::Tape;
use crate::config::TrainConfig;
use crate::model::{Example, Mode, Model, ModelError};
use crate::params::Adam;
use crate::schedule::Schedule;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrainError {
    #[error("training diverged at epoch {epoch}: loss is {loss}")]
    Diverged { epoch: usize, loss: f64 },
    #[error("no trainable examples")]
    NoExamples,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Metrics of one finished epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    /// Rate of the last optimiser step in the epoch.
    pub lr: f64,
    pub train_loss: f64,
    pub dev_loss: f64,
    /// Fraction of dev examples decoded to exactly their gold token sequence.
    pub dev_exact_match: Option<f64>,
}

impl fmt::Display for EpochLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "epoch={} lr={:.6e} train_loss={:.6} dev_loss={:.6}",
            self.epoch, self.lr, self.train_loss, self.dev_loss
        )?;
        match self.dev_exact_match {
            Some(em) => write!(f, " dev_exact_match={em:.4}"),
            None => write!(f, " dev_exact_match=NA"),
        }
    }
}

/// A record the network cannot represent, with the reason.
#[derive(Debug, Clone, PartialEq)]
pub struct Unusable {
    pub id: String,
    pub reason: String,
}

/// Converts records to examples, setting aside those that cannot be encoded.
pub fn prepare(model: &Model, records: &[QuestionRecord]) -> (Vec<Example>, Vec<Unusable>) {
    let mut ok = Vec::new();
    let mut bad = Vec::new();
    for r in records {
        match model.example(r) {
            Ok(ex) => ok.push(ex),
            Err(e) => bad.push(Unusable {
                id: r.id.clone(),
                reason: e.to_string(),
            }),
        }
    }
    (ok, bad)
}

/// Loss and parameter gradients for one example.
pub fn example_gradients(
    model: &Model,
    ex: &Example,
    mode: &mut Mode,
) -> Result<(f64, BTreeMap<String, Array2<f64>>), ModelError> {
    let mut tape = Tape::new(&model.params);
    let loss = model.loss(&mut tape, ex, mode)?;
    let value = tape.scalar(loss);
    let grads = tape.backward(loss);
    Ok((value, tape.param_grads(&grads)))
}

/// Mean teacher-forced loss without dropout.
pub fn mean_loss(model: &Model, examples: &[Example]) -> Result<f64, ModelError> {
    if examples.is_empty() {
        return Ok(f64::NAN);
    }
    let mut total = 0.0;
    for ex in examples {
        let mut tape = Tape::new(&model.params);
        let l = model.loss(&mut tape, ex, &mut Mode::eval())?;
        total += tape.scalar(l);
    }
    Ok(total / examples.len() as f64)
}

/// Fraction of examples whose greedy decoding equals the gold tokens.
pub fn token_exact_match(model: &Model, examples: &[Example]) -> Result<f64, ModelError> {
    if examples.is_empty() {
        return Ok(f64::NAN);
    }
    let mut hits = 0usize;
    for ex in examples {
        let d = model.decode_greedy(ex, model.config.max_decode_len)?;
        let gold = &ex.target[..ex.target.len().saturating_sub(1)];
        if !d.truncated && d.tokens == gold {
            hits += 1;
        }
    }
    Ok(hits as f64 / examples.len() as f64)
}

/// Trains `model` in place. `on_epoch` sees each log line as it is produced.
pub fn train(
    model: &mut Model,
    train_set: &[Example],
    dev_set: &[Example],
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochLog),
) -> Result<Vec<EpochLog>, TrainError> {
    if train_set.is_empty() {
        return Err(TrainError::NoExamples);
    }
    let batch = cfg.batch_size.max(1);
    let steps_per_epoch = train_set.len().div_ceil(batch);
    let mut schedule = Schedule::new(cfg.peak_lr, cfg.decay, cfg.warmup_epochs, steps_per_epoch);
    let mut adam = Adam::default();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut logs = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(batch) {
            let mut sum: BTreeMap<String, Array2<f64>> = BTreeMap::new();
            for &i in chunk {
                let (l, g) = example_gradients(model, &train_set[i], &mut Mode::train(&mut rng))?;
                if !l.is_finite() {
                    return Err(TrainError::Diverged { epoch, loss: l });
                }
                epoch_loss += l;
                for (name, grad) in g {
                    match sum.get_mut(&name) {
                        Some(acc) => *acc += &grad,
                        None => {
                            sum.insert(name, grad);
                        }
                    }
                }
            }
            let k = 1.0 / chunk.len() as f64;
            for g in sum.values_mut() {
                g.mapv_inplace(|x| x * k);
            }
            let lr = schedule.next_lr();
            adam.step(&mut model.params, &sum, lr);
        }
        let train_loss = epoch_loss / train_set.len() as f64;
        let eval_set = if dev_set.is_empty() { train_set } else { dev_set };
        let dev_loss = mean_loss(model, eval_set)?;
        if !dev_loss.is_finite() {
            return Err(TrainError::Diverged { epoch, loss: dev_loss });
        }
        let dev_exact_match = if cfg.eval_exact_match {
            Some(token_exact_match(model, eval_set)?)
        } else {
            None
        };
        let log = EpochLog {
            epoch,
            lr: schedule.current_lr(),
            train_loss,
            dev_loss,
            dev_exact_match,
        };
        schedule.end_epoch(dev_loss);
        on_epoch(&log);
        logs.push(log);
    }
    Ok(logs)
}
