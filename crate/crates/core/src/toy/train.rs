use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::corpus::Utterance;
use super::model::LinearModel;
use super::optim::{AdamW, WarmupSchedule};
use crate::align::align_slices;
use crate::decoder::decode_all;
use crate::error::{Error, Result};
use crate::inventory::{Attribute, AttributeTable};
use crate::mdd::Prf;
use crate::sctc::{make_layout, sctc_sb_loss, CategoryLayout, MultiLabelTarget};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Share of all optimizer steps spent warming up to `learning_rate`.
    pub warmup_fraction: f64,
    pub seed: u64,
    /// Standard deviation of the initial weights.
    pub init_scale: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            weight_decay: 0.005,
            epochs: 30,
            batch_size: 32,
            warmup_fraction: 0.10,
            seed: 0,
            init_scale: 1e-4,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::BadConfig(m.to_string()));
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be finite and non-negative");
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return bad("weight_decay must be finite and non-negative");
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return bad("epochs and batch_size must be positive");
        }
        if !(0.0..1.0).contains(&self.warmup_fraction) {
            return bad("warmup_fraction must lie in [0, 1)");
        }
        if !(self.init_scale >= 0.0 && self.init_scale.is_finite()) {
            return bad("init_scale must be finite and non-negative");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOutcome {
    pub model: LinearModel,
    /// Mean utterance loss (summed over categories) for each epoch.
    pub epoch_losses: Vec<f64>,
}

/// The 71-column layout over all 35 attributes in canonical order.
pub fn attribute_layout() -> CategoryLayout {
    make_layout(&Attribute::all().collect::<Vec<_>>()).expect("canonical attributes are distinct")
}

fn targets(table: &AttributeTable, utterances: &[Utterance]) -> Vec<MultiLabelTarget> {
    let attrs: Vec<Attribute> = Attribute::all().collect();
    utterances
        .iter()
        .map(|u| MultiLabelTarget::from_phonemes(table, &attrs, &u.phonemes))
        .collect()
}

/// Mean SCTC-SB loss of `model` over `utterances`.
pub fn mean_loss(
    model: &LinearModel,
    utterances: &[Utterance],
    table: &AttributeTable,
) -> Result<f64> {
    let layout = attribute_layout();
    let mut total = 0.0;
    for (u, t) in utterances.iter().zip(targets(table, utterances)) {
        total += sctc_sb_loss(&model.forward(&u.features)?, &layout, &t)?.total_neg_log_likelihood;
    }
    Ok(total / utterances.len().max(1) as f64)
}

/// Mini-batch AdamW on the SCTC-SB loss.
///
/// The batch loss is the mean of the utterance losses. The loop runs on one
/// thread and shuffles with a generator seeded from `config.seed`, so the
/// result is a deterministic function of its inputs.
pub fn train(
    utterances: &[Utterance],
    table: &AttributeTable,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    let first = utterances
        .first()
        .ok_or_else(|| Error::BadConfig("training corpus is empty".into()))?;
    let features = first.features.cols();
    let layout = attribute_layout();
    let targets = targets(table, utterances);

    let mut model = LinearModel::random(features, layout.width(), config.init_scale, config.seed);
    let mut params = model.parameters();
    let mut optimizer = AdamW::new(params.len(), config.weight_decay);
    let batches_per_epoch = utterances.len().div_ceil(config.batch_size);
    let schedule = WarmupSchedule::new(
        config.learning_rate,
        batches_per_epoch * config.epochs,
        config.warmup_fraction,
    );
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..utterances.len()).collect();
    let mut grad = vec![0.0; params.len()];
    let mut epoch_losses = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut epoch_total = 0.0;
        for batch in order.chunks(config.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                let u = &utterances[i];
                let logits = model.forward(&u.features)?;
                let r = sctc_sb_loss(&logits, &layout, &targets[i])?;
                if !r.total_neg_log_likelihood.is_finite() {
                    return Err(Error::DivergedLoss {
                        epoch,
                        step: optimizer.steps(),
                    });
                }
                epoch_total += r.total_neg_log_likelihood;
                model.accumulate_gradient(&u.features, &r.grad, scale, &mut grad);
            }
            let lr = schedule.rate(optimizer.steps());
            optimizer.step(&mut params, &grad, lr);
            model.set_parameters(&params);
            if !model.is_finite() {
                return Err(Error::DivergedLoss {
                    epoch,
                    step: optimizer.steps(),
                });
            }
        }
        epoch_losses.push(epoch_total / utterances.len() as f64);
    }

    Ok(TrainOutcome {
        model,
        epoch_losses,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AttributeScore {
    pub attribute: Attribute,
    pub edits: usize,
    pub reference_tokens: usize,
    /// Corpus-level AER in percent: total edits over total reference tokens.
    pub aer: f64,
    pub accuracy: f64,
    pub prf: Prf,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvaluationSummary {
    pub per_attribute: Vec<AttributeScore>,
    /// Unweighted mean of the per-attribute AERs.
    pub mean_aer: f64,
}

/// Per-utterance, per-attribute (edits, reference length, prf) for decoded output.
fn score_decoded(
    table: &AttributeTable,
    u: &Utterance,
    decoded: &[crate::sequence::TokenSequence],
) -> Vec<(usize, usize, Prf)> {
    Attribute::all()
        .zip(decoded)
        .map(|(a, hyp)| {
            let reference = crate::sequence::TokenSequence::from_bits(
                a.name(),
                table.attribute_bits(a, &u.phonemes),
            );
            let (_, counts) = align_slices(reference.tokens(), hyp.tokens());
            let prf = crate::mdd::attribute_prf(&reference, hyp).expect("same attribute alphabet");
            (counts.distance(), reference.len(), prf)
        })
        .collect()
}

/// Decodes every utterance and scores each attribute against the mapped references.
pub fn evaluate(
    model: &LinearModel,
    utterances: &[Utterance],
    table: &AttributeTable,
) -> Result<EvaluationSummary> {
    let layout = attribute_layout();
    if model.width() != layout.width() {
        return Err(Error::DimensionMismatch(format!(
            "model width {} does not match the {}-column attribute layout",
            model.width(),
            layout.width()
        )));
    }
    let per_utt: Vec<Vec<(usize, usize, Prf)>> = utterances
        .par_iter()
        .map(|u| {
            let logits = model.forward(&u.features)?;
            Ok(score_decoded(table, u, &decode_all(&logits, &layout)?))
        })
        .collect::<Result<_>>()?;
    Ok(summarize(&per_utt))
}

fn summarize(per_utt: &[Vec<(usize, usize, Prf)>]) -> EvaluationSummary {
    let per_attribute: Vec<AttributeScore> = Attribute::all()
        .map(|a| {
            let (edits, reference_tokens, prf) = per_utt
                .iter()
                .map(|v| v[a.index()])
                .fold((0, 0, Prf::default()), |(e, r, p), (e2, r2, p2)| {
                    (e + e2, r + r2, p.merge(&p2))
                });
            let aer = if reference_tokens == 0 {
                0.0
            } else {
                100.0 * edits as f64 / reference_tokens as f64
            };
            AttributeScore {
                attribute: a,
                edits,
                reference_tokens,
                aer,
                accuracy: 100.0 - aer,
                prf,
            }
        })
        .collect();
    let mean_aer = per_attribute.iter().map(|s| s.aer).sum::<f64>() / per_attribute.len() as f64;
    EvaluationSummary {
        per_attribute,
        mean_aer,
    }
}

/// Scores logits that were produced elsewhere (one matrix per utterance).
pub fn evaluate_logits(
    logits: &[crate::matrix::Matrix],
    utterances: &[Utterance],
    table: &AttributeTable,
) -> Result<EvaluationSummary> {
    let layout = attribute_layout();
    let per_utt: Vec<Vec<(usize, usize, Prf)>> = logits
        .par_iter()
        .zip(utterances)
        .map(|(l, u)| Ok(score_decoded(table, u, &decode_all(l, &layout)?)))
        .collect::<Result<_>>()?;
    Ok(summarize(&per_utt))
}

impl EvaluationSummary {
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{:<14}{:>9}{:>9}{:>9}{:>9}{:>9}\n",
            "attribute", "AER", "ACC", "PRE", "REC", "F1"
        );
        let f = |v: Option<f64>| v.map_or_else(|| "NA".into(), |x| format!("{:.4}", x));
        for s in &self.per_attribute {
            out.push_str(&format!(
                "{:<14}{:>9.2}{:>9.2}{:>9}{:>9}{:>9}\n",
                s.attribute.name(),
                s.aer,
                s.accuracy,
                f(s.prf.precision),
                f(s.prf.recall),
                f(s.prf.f1)
            ));
        }
        out.push_str(&format!("mean AER: {:.2}\n", self.mean_aer));
        out
    }
}
