//! Learning-rate schedule: linear warmup, then multiplicative decay on
//! every epoch whose dev loss is higher than the one before.

/// Learning-rate state driven by optimiser steps and epoch boundaries.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    peak: f64,
    decay: f64,
    warmup_steps: usize,
    step: usize,
    /// Post-warmup rate; each decay multiplies it by `decay`.
    rate: f64,
    prev_dev: Option<f64>,
}

impl Schedule {
    /// `warmup_epochs * steps_per_epoch` optimiser steps of warmup.
    pub fn new(peak: f64, decay: f64, warmup_epochs: usize, steps_per_epoch: usize) -> Self {
        Schedule {
            peak,
            decay,
            warmup_steps: warmup_epochs * steps_per_epoch,
            step: 0,
            rate: peak,
            prev_dev: None,
        }
    }

    /// Rate for the next optimiser step; advances the step counter.
    pub fn next_lr(&mut self) -> f64 {
        self.step += 1;
        self.lr_at(self.step)
    }

    /// Rate of the most recent step (or of the first step if none was taken).
    pub fn current_lr(&self) -> f64 {
        self.lr_at(self.step.max(1))
    }

    fn lr_at(&self, step: usize) -> f64 {
        if step <= self.warmup_steps {
            self.peak * step as f64 / self.warmup_steps as f64
        } else {
            self.rate
        }
    }

    /// Records an epoch's dev loss. Decay applies only once warmup is over;
    /// returns whether it did.
    pub fn end_epoch(&mut self, dev_loss: f64) -> bool {
        let rose = matches!(self.prev_dev, Some(prev) if dev_loss > prev);
        self.prev_dev = Some(dev_loss);
        if rose && self.step >= self.warmup_steps {
            self.rate *= self.decay;
            true
        } else {
            false
        }
    }
}

/// Per-epoch rates produced by a scripted sequence of dev losses, with one
/// optimiser step per epoch. The rate of epoch `k` is the rate of its last step.
pub fn trace(peak: f64, decay: f64, warmup_epochs: usize, dev_losses: &[f64]) -> Vec<f64> {
    let mut s = Schedule::new(peak, decay, warmup_epochs, 1);
    dev_losses
        .iter()
        .map(|&d| {
            let lr = s.next_lr();
            s.end_epoch(d);
            lr
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn warmup_is_linear_in_steps() {
        let mut s = Schedule::new(1e-3, 0.8, 2, 4);
        let lrs: Vec<f64> = (0..8).map(|_| s.next_lr()).collect();
        for (k, lr) in lrs.iter().enumerate() {
            assert!((lr - 1e-3 * (k + 1) as f64 / 8.0).abs() < 1e-18);
        }
        assert_eq!(s.next_lr(), 1e-3);
    }

    #[test]
    fn no_decay_during_warmup() {
        let mut s = Schedule::new(1.0, 0.5, 3, 1);
        s.next_lr();
        s.end_epoch(1.0);
        s.next_lr();
        assert!(!s.end_epoch(2.0));
        s.next_lr();
        assert!(s.end_epoch(3.0));
        assert_eq!(s.next_lr(), 0.5);
    }

    #[test]
    fn rise_at_last_warmup_epoch_decays_next() {
        let t = trace(1e-3, 0.8, 2, &[1.0, 2.0, 2.0]);
        assert_eq!(t, vec![0.5e-3, 1e-3, 0.8e-3]);
    }

    #[test]
    fn equal_loss_does_not_decay() {
        assert_eq!(trace(1.0, 0.5, 0, &[1.0, 1.0, 1.0]), vec![1.0, 1.0, 1.0]);
    }
}
