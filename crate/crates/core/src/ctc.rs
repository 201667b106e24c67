//! Single-alphabet CTC.
//!
//! Logit matrices are `T × K` with the blank in the last column `K - 1`.
//! Labels are column indices in `0..K-1`. All probability arithmetic is in
//! natural-log space, with `-inf` standing for probability zero.

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Upper bound on the number of paths [`brute_force_ctc`] will enumerate.
pub const BRUTE_FORCE_LIMIT: f64 = 1e7;

/// `ln(exp(a) + exp(b))` without overflow; `-inf` is the identity.
#[inline]
pub fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Row-wise log-softmax of raw logits.
#[derive(Clone, Debug, PartialEq)]
pub struct LogProbMatrix(Matrix);

impl LogProbMatrix {
    pub fn from_logits(logits: &Matrix) -> Result<Self> {
        logits.ensure_finite()?;
        let mut out = logits.clone();
        for r in 0..out.rows() {
            let row = out.row_mut(r);
            let lse = log_sum_exp(row);
            row.iter_mut().for_each(|v| *v -= lse);
        }
        Ok(Self(out))
    }

    pub fn frames(&self) -> usize {
        self.0.rows()
    }

    pub fn classes(&self) -> usize {
        self.0.cols()
    }

    pub fn blank(&self) -> usize {
        self.0.cols() - 1
    }

    #[inline]
    pub fn get(&self, t: usize, k: usize) -> f64 {
        self.0[(t, k)]
    }

    pub fn row(&self, t: usize) -> &[f64] {
        self.0.row(t)
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    /// Linear-space probabilities.
    pub fn probabilities(&self) -> Matrix {
        let mut m = self.0.clone();
        m.as_mut_slice().iter_mut().for_each(|v| *v = v.exp());
        m
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CtcResult {
    /// `-ln p(target | x)` in nats.
    pub neg_log_likelihood: f64,
    /// Gradient of the negative log-likelihood with respect to the raw logits.
    pub grad: Matrix,
}

/// Merges adjacent repeats, then drops blanks.
pub fn collapse<T: PartialEq + Clone>(path: &[T], blank: &T) -> Vec<T> {
    let mut out = Vec::with_capacity(path.len());
    let mut prev: Option<&T> = None;
    for tok in path {
        if prev != Some(tok) && tok != blank {
            out.push(tok.clone());
        }
        prev = Some(tok);
    }
    out
}

/// Minimum number of frames that can emit `target`: one per label plus one
/// blank between each pair of equal neighbours.
pub fn min_frames<T: PartialEq>(target: &[T]) -> usize {
    target.len() + target.windows(2).filter(|w| w[0] == w[1]).count()
}

fn check_labels(target: &[usize], classes: usize) -> Result<()> {
    let non_blank = classes.saturating_sub(1);
    match target.iter().find(|&&l| l >= non_blank) {
        Some(&label) => Err(Error::InvalidLabel {
            label,
            classes: non_blank,
        }),
        None => Ok(()),
    }
}

fn check_shape(rows: usize, cols: usize) -> Result<()> {
    if cols < 2 {
        return Err(Error::BadDimension {
            location: "logits columns (labels + blank)".into(),
            expected: 2,
            found: cols,
        });
    }
    if rows == 0 {
        return Err(Error::BadDimension {
            location: "logits rows (frames)".into(),
            expected: 1,
            found: 0,
        });
    }
    Ok(())
}

/// CTC negative log-likelihood and its gradient with respect to raw logits.
pub fn ctc_loss(logits: &Matrix, target: &[usize]) -> Result<CtcResult> {
    check_shape(logits.rows(), logits.cols())?;
    check_labels(target, logits.cols())?;
    let required = min_frames(target);
    if required > logits.rows() {
        return Err(Error::InfeasibleTarget {
            category: None,
            required,
            frames: logits.rows(),
        });
    }
    let log_probs = LogProbMatrix::from_logits(logits)?;
    Ok(forward_backward(&log_probs, target))
}

/// Forward-backward over the blank-interleaved lattice of `2U + 1` states.
///
/// Assumes a feasible target and validated labels.
pub(crate) fn forward_backward(lp: &LogProbMatrix, target: &[usize]) -> CtcResult {
    let frames = lp.frames();
    let classes = lp.classes();
    let blank = lp.blank();
    let states = 2 * target.len() + 1;
    let label = |s: usize| {
        if s.is_multiple_of(2) {
            blank
        } else {
            target[s / 2]
        }
    };
    // s may be reached from s - 2 only when it is a label that differs from the previous label
    let can_skip = |s: usize| s % 2 == 1 && s >= 2 && label(s) != label(s - 2);

    let ninf = f64::NEG_INFINITY;
    let mut alpha = vec![ninf; frames * states];
    alpha[0] = lp.get(0, blank);
    if states > 1 {
        alpha[1] = lp.get(0, label(1));
    }
    for t in 1..frames {
        let (prev, cur) = alpha.split_at_mut(t * states);
        let prev = &prev[(t - 1) * states..];
        for s in 0..states {
            let mut acc = prev[s];
            if s >= 1 {
                acc = log_add(acc, prev[s - 1]);
            }
            if can_skip(s) {
                acc = log_add(acc, prev[s - 2]);
            }
            cur[s] = acc + lp.get(t, label(s));
        }
    }

    // beta excludes the emission at its own frame
    let mut beta = vec![ninf; frames * states];
    let last = (frames - 1) * states;
    beta[last + states - 1] = 0.0;
    if states > 1 {
        beta[last + states - 2] = 0.0;
    }
    for t in (0..frames - 1).rev() {
        let (cur, next) = beta.split_at_mut((t + 1) * states);
        let cur = &mut cur[t * states..];
        let emit = |s: usize| next[s] + lp.get(t + 1, label(s));
        for (s, slot) in cur[..states].iter_mut().enumerate() {
            let mut acc = emit(s);
            if s + 1 < states {
                acc = log_add(acc, emit(s + 1));
            }
            if s + 2 < states && can_skip(s + 2) {
                acc = log_add(acc, emit(s + 2));
            }
            *slot = acc;
        }
    }

    let end = &alpha[last..];
    let log_likelihood = if states > 1 {
        log_add(end[states - 1], end[states - 2])
    } else {
        end[0]
    };

    let mut grad = lp.probabilities();
    let mut occupancy = vec![ninf; classes];
    for t in 0..frames {
        occupancy.iter_mut().for_each(|v| *v = ninf);
        for s in 0..states {
            let g = alpha[t * states + s] + beta[t * states + s];
            let k = label(s);
            occupancy[k] = log_add(occupancy[k], g);
        }
        for (g, occ) in grad.row_mut(t).iter_mut().zip(&occupancy) {
            *g -= (occ - log_likelihood).exp();
        }
    }

    CtcResult {
        neg_log_likelihood: -log_likelihood,
        grad,
    }
}

/// Exhaustive CTC oracle: sums the probability of every length-`T` path that
/// collapses to `target`, in linear space, and returns `-ln` of the total.
///
/// Returns `+inf` when no path collapses to the target. Independent of
/// [`ctc_loss`]: it computes its own softmax and never uses the lattice.
pub fn brute_force_ctc(logits: &Matrix, target: &[usize]) -> Result<f64> {
    check_shape(logits.rows(), logits.cols())?;
    check_labels(target, logits.cols())?;
    logits.ensure_finite()?;
    let (frames, classes) = (logits.rows(), logits.cols());
    let paths = (classes as f64).powi(frames as i32);
    if paths > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge {
            paths,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let blank = classes - 1;
    let probs: Vec<Vec<f64>> = logits
        .iter_rows()
        .map(|row| {
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = row.iter().map(|v| (v - max).exp()).collect();
            let z: f64 = exps.iter().sum();
            exps.into_iter().map(|e| e / z).collect()
        })
        .collect();

    let mut path = vec![0usize; frames];
    let mut total = 0.0;
    loop {
        if collapse(&path, &blank) == target {
            total += path
                .iter()
                .enumerate()
                .map(|(t, &k)| probs[t][k])
                .product::<f64>();
        }
        // odometer increment
        let mut t = frames;
        loop {
            if t == 0 {
                return Ok(-total.ln());
            }
            t -= 1;
            path[t] += 1;
            if path[t] < classes {
                break;
            }
            path[t] = 0;
        }
    }
}
