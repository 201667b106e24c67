//! Reference implementations and generators shared by the integration tests.
//!
//! Everything here is deliberately naive and written without the crate's
//! internals so that agreement with the library means something.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sctc_core::inventory::{Phoneme, NUM_PHONEMES};
use sctc_core::Matrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_logits(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Matrix {
    let data = (0..rows * cols)
        .map(|_| rng.random_range(-scale..scale))
        .collect();
    Matrix::from_vec(rows, cols, data).unwrap()
}

/// Random target over `labels` symbols that fits in `frames`.
pub fn random_target(
    rng: &mut ChaCha8Rng,
    labels: usize,
    max_len: usize,
    frames: usize,
) -> Vec<usize> {
    loop {
        let len = rng.random_range(0..=max_len);
        let t: Vec<usize> = (0..len).map(|_| rng.random_range(0..labels)).collect();
        if min_frames(&t) <= frames {
            return t;
        }
    }
}

pub fn random_bits(rng: &mut ChaCha8Rng, len: usize) -> Vec<bool> {
    (0..len).map(|_| rng.random_bool(0.5)).collect()
}

pub fn random_phonemes(rng: &mut ChaCha8Rng, min: usize, max: usize) -> Vec<Phoneme> {
    let n = rng.random_range(min..=max);
    (0..n)
        .map(|_| Phoneme::from_index(rng.random_range(0..NUM_PHONEMES)).unwrap())
        .collect()
}

pub fn min_frames(target: &[usize]) -> usize {
    target.len() + target.windows(2).filter(|w| w[0] == w[1]).count()
}

/// Row-wise log-softmax.
pub fn log_softmax(m: &Matrix) -> Vec<Vec<f64>> {
    m.iter_rows()
        .map(|row| {
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
            row.iter().map(|v| v - lse).collect()
        })
        .collect()
}

fn lse2(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Textbook forward recursion over log-probabilities (blank is the last column).
pub fn reference_ctc_nll(log_probs: &[Vec<f64>], target: &[usize]) -> f64 {
    let blank = log_probs[0].len() - 1;
    let mut ext = vec![blank];
    for &l in target {
        ext.push(l);
        ext.push(blank);
    }
    let n = ext.len();
    let mut alpha = vec![f64::NEG_INFINITY; n];
    alpha[0] = log_probs[0][ext[0]];
    if n > 1 {
        alpha[1] = log_probs[0][ext[1]];
    }
    for row in &log_probs[1..] {
        let mut next = vec![f64::NEG_INFINITY; n];
        for s in 0..n {
            let mut a = alpha[s];
            if s > 0 {
                a = lse2(a, alpha[s - 1]);
            }
            if s > 1 && ext[s] != blank && ext[s] != ext[s - 2] {
                a = lse2(a, alpha[s - 2]);
            }
            next[s] = a + row[ext[s]];
        }
        alpha = next;
    }
    let end = if n > 1 {
        lse2(alpha[n - 1], alpha[n - 2])
    } else {
        alpha[0]
    };
    -end
}

/// Relative error with a floor on the denominator so that near-zero
/// gradients are judged on absolute error.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-3)
}

/// Largest relative error between `analytic` and central differences of `f`.
pub fn finite_difference_error(
    logits: &Matrix,
    analytic: &Matrix,
    f: impl Fn(&Matrix) -> f64,
) -> f64 {
    const H: f64 = 1e-5;
    let mut worst = 0.0f64;
    let mut probe = logits.clone();
    for r in 0..logits.rows() {
        for c in 0..logits.cols() {
            let orig = logits[(r, c)];
            probe.row_mut(r)[c] = orig + H;
            let up = f(&probe);
            probe.row_mut(r)[c] = orig - H;
            let down = f(&probe);
            probe.row_mut(r)[c] = orig;
            worst = worst.max(relative_error(analytic[(r, c)], (up - down) / (2.0 * H)));
        }
    }
    worst
}

/// Full-matrix Levenshtein distance.
pub fn reference_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in d[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = d[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    d[a.len()][b.len()]
}

/// Per-frame argmax (first maximum wins) over `columns`, then merge repeats
/// and drop `blank`.
pub fn naive_decode(logits: &Matrix, columns: &[usize], blank: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut prev = None;
    for row in logits.iter_rows() {
        let mut best = columns[0];
        for &c in columns {
            if row[c] > row[best] {
                best = c;
            }
        }
        if Some(best) != prev && best != blank {
            out.push(best);
        }
        prev = Some(best);
    }
    out
}

pub fn random_tokens(rng: &mut ChaCha8Rng, alphabet: &[&str], max_len: usize) -> Vec<String> {
    let len = rng.random_range(0..=max_len);
    (0..len)
        .map(|_| alphabet[rng.random_range(0..alphabet.len())].to_string())
        .collect()
}
