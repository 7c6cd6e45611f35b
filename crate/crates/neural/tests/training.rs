use std::time::Instant;

use kbqa_neural::gradcheck::{gradcheck, tiny_problem};
use kbqa_neural::schedule::{trace, Schedule};
use proptest::prelude::*;

#[test]
fn gradients_agree_with_finite_differences() {
    let start = Instant::now();
    let (m, ex) = tiny_problem(0).unwrap();
    let report = gradcheck(&m, &ex, 1e-5, None).unwrap();
    let worst = report.worst().unwrap();
    assert!(report.passes(1e-4), "{} has relative error {:.3e}", worst.name, worst.rel_error);
    // Every tensor of the model took part and had a nonzero gradient.
    assert_eq!(report.tensors.len(), m.params.len());
    assert!(start.elapsed().as_secs() < 120);
}

#[test]
fn corrupted_gradient_is_detected() {
    let (m, ex) = tiny_problem(0).unwrap();
    let bump = |name: &str, g: &mut ndarray::Array2<f64>| {
        if name == "enc1.edge" {
            g[[1, 0]] += 0.05;
        }
    };
    let report = gradcheck(&m, &ex, 1e-5, Some(&bump)).unwrap();
    assert!(!report.passes(1e-4));
    assert_eq!(report.worst().unwrap().name, "enc1.edge");
}

#[test]
fn scripted_schedule_trace() {
    let dev = [5.0, 4.0, 4.5, 3.0, 3.2, 3.3, 2.0, 2.5, 1.0, 1.1];
    let want = [0.5e-3, 1e-3, 1e-3, 0.8e-3, 0.8e-3, 0.8e-3 * 0.8, 0.8e-3 * 0.8 * 0.8, 0.8e-3 * 0.8 * 0.8, 0.8e-3 * 0.8 * 0.8 * 0.8, 0.8e-3 * 0.8 * 0.8 * 0.8];
    assert_eq!(trace(1e-3, 0.8, 2, &dev), want);
}

proptest! {
    #[test]
    fn decay_fires_exactly_on_increases(devs in proptest::collection::vec(0.0f64..10.0, 3..20)) {
        let t = trace(1e-3, 0.8, 2, &devs);
        prop_assert_eq!(t[1], 1e-3);
        for k in 2..t.len() {
            let expected = if devs[k - 1] > devs[k - 2] { t[k - 1] * 0.8 } else { t[k - 1] };
            prop_assert_eq!(t[k], expected);
        }
    }

    #[test]
    fn warmup_reaches_peak_at_last_step(spe in 1usize..20, warm in 1usize..4) {
        let mut s = Schedule::new(2e-3, 0.8, warm, spe);
        let mut last = 0.0;
        for _ in 0..warm * spe {
            let lr = s.next_lr();
            prop_assert!(lr > last);
            last = lr;
        }
        prop_assert_eq!(last, 2e-3);
    }
}
