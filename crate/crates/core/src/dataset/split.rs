use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SplitError {
    #[error("split ratios must be non-negative and sum to 1, got {0:?}")]
    BadRatios([f64; 3]),
    #[error("cannot split an empty corpus")]
    EmptyCorpus,
}

/// Bucket sizes by largest remainder: floor every share, then hand the
/// leftover items to the largest fractional parts (earlier bucket on ties).
fn sizes(n: usize, ratios: [f64; 3]) -> [usize; 3] {
    let exact: Vec<f64> = ratios.iter().map(|r| r * n as f64).collect();
    let mut out = [0usize; 3];
    for i in 0..3 {
        out[i] = exact[i].floor() as usize;
    }
    let mut rest = n - out.iter().sum::<usize>();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if rest == 0 {
            break;
        }
        out[i] += 1;
        rest -= 1;
    }
    out
}

/// Train, dev and test parts, in that order.
pub type Split<T> = (Vec<T>, Vec<T>, Vec<T>);

/// Shuffles with a seeded ChaCha8 stream and cuts into train/dev/test.
pub fn split_corpus<T: Clone>(records: &[T], ratios: [f64; 3], seed: u64) -> Result<Split<T>, SplitError> {
    let valid = ratios.iter().all(|r| r.is_finite() && *r >= 0.0) && (ratios.iter().sum::<f64>() - 1.0).abs() <= 1e-9;
    if !valid {
        return Err(SplitError::BadRatios(ratios));
    }
    if records.is_empty() {
        return Err(SplitError::EmptyCorpus);
    }
    let [a, b, _] = sizes(records.len(), ratios);
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let pick = |idx: &[usize]| idx.iter().map(|&i| records[i].clone()).collect::<Vec<T>>();
    Ok((pick(&order[..a]), pick(&order[a..a + b]), pick(&order[a + b..])))
}
