//! Synthetic frame-feature corpus.
//!
//! Each phoneme owns a fixed Gaussian cluster center in feature space, and so
//! does a boundary class that stands in for silence and phoneme transitions.
//! An utterance is a random phoneme string rendered as a run of frames per
//! phoneme, with one run of boundary frames before, between and after the
//! phonemes, plus additive Gaussian noise.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::ctc::min_frames;
use crate::error::{Error, Result};
use crate::inventory::{Phoneme, NUM_PHONEMES};
use crate::matrix::Matrix;
use crate::sequence::TokenSequence;

const CENTER_STREAM: u64 = 0;
const UTTERANCE_STREAM: u64 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct CorpusConfig {
    pub seed: u64,
    pub n_utterances: usize,
    pub feature_dim: usize,
    /// Inclusive range of phonemes per utterance.
    pub phonemes_per_utterance: (usize, usize),
    /// Inclusive range of frames per phoneme.
    pub frames_per_phoneme: (usize, usize),
    /// Boundary frames before, between and after phonemes.
    pub boundary_frames: usize,
    /// Standard deviation of the per-frame noise.
    pub noise_scale: f64,
    /// Standard deviation of the cluster-center coordinates. AdamW moves each
    /// weight by roughly the learning rate per step, so the logit change per
    /// step scales with the feature magnitude set here.
    pub center_scale: f64,
    /// Phonemes to draw from; empty means all 39.
    pub phoneme_set: Vec<Phoneme>,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            n_utterances: 200,
            feature_dim: 64,
            phonemes_per_utterance: (6, 12),
            frames_per_phoneme: (2, 4),
            boundary_frames: 1,
            noise_scale: 2.0,
            center_scale: 100.0,
            phoneme_set: Vec::new(),
        }
    }
}

impl CorpusConfig {
    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::BadConfig(m.to_string()));
        if self.feature_dim < 8 {
            return bad("feature_dim must be at least 8");
        }
        let (p0, p1) = self.phonemes_per_utterance;
        if p0 == 0 || p0 > p1 {
            return bad("phonemes_per_utterance must be a non-empty range starting at 1 or more");
        }
        let (f0, f1) = self.frames_per_phoneme;
        if f0 == 0 || f0 > f1 {
            return bad("frames_per_phoneme must be a non-empty range starting at 1 or more");
        }
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) {
            return bad("noise_scale must be finite and non-negative");
        }
        if !(self.center_scale > 0.0 && self.center_scale.is_finite()) {
            return bad("center_scale must be finite and positive");
        }
        Ok(())
    }

    fn phonemes(&self) -> Vec<Phoneme> {
        if self.phoneme_set.is_empty() {
            Phoneme::all().collect()
        } else {
            self.phoneme_set.clone()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Utterance {
    pub id: String,
    /// `T × F`.
    pub features: Matrix,
    pub phonemes: Vec<Phoneme>,
}

impl Utterance {
    pub fn phoneme_sequence(&self) -> TokenSequence {
        TokenSequence::phonemes(
            &self
                .phonemes
                .iter()
                .map(|p| p.symbol())
                .collect::<Vec<_>>()
                .join(" "),
        )
        .expect("inventory symbols are valid tokens")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticCorpus {
    pub config: CorpusConfig,
    /// Row `p` is phoneme `p`'s center; the last row is the boundary center.
    pub centers: Matrix,
    pub utterances: Vec<Utterance>,
}

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

impl SyntheticCorpus {
    pub fn generate(config: CorpusConfig) -> Result<Self> {
        config.validate()?;
        let mut crng = rng(config.seed, CENTER_STREAM);
        let normal = Normal::new(0.0, config.center_scale).expect("validated scale");
        let mut centers = Matrix::zeros(NUM_PHONEMES + 1, config.feature_dim);
        centers
            .as_mut_slice()
            .iter_mut()
            .for_each(|c| *c = normal.sample(&mut crng));
        let mut corpus = Self {
            config,
            centers,
            utterances: Vec::new(),
        };
        let mut urng = rng(corpus.config.seed, UTTERANCE_STREAM);
        corpus.utterances = (0..corpus.config.n_utterances)
            .map(|i| corpus.render(&mut urng, format!("utt{i:05}")))
            .collect();
        Ok(corpus)
    }

    /// Fresh utterances from the same cluster centers, e.g. a held-out set.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<Utterance> {
        let mut r = rng(seed, UTTERANCE_STREAM + 1);
        (0..n)
            .map(|i| self.render(&mut r, format!("heldout{i:05}")))
            .collect()
    }

    pub fn boundary_center(&self) -> &[f64] {
        self.centers.row(NUM_PHONEMES)
    }

    fn render(&self, rng: &mut ChaCha8Rng, id: String) -> Utterance {
        let cfg = &self.config;
        let inventory = cfg.phonemes();
        let n = rng.random_range(cfg.phonemes_per_utterance.0..=cfg.phonemes_per_utterance.1);
        let phonemes: Vec<Phoneme> = (0..n)
            .map(|_| inventory[rng.random_range(0..inventory.len())])
            .collect();

        // center row per frame
        let mut rows = Vec::new();
        rows.extend(std::iter::repeat_n(NUM_PHONEMES, cfg.boundary_frames));
        for p in &phonemes {
            let len = rng.random_range(cfg.frames_per_phoneme.0..=cfg.frames_per_phoneme.1);
            rows.extend(std::iter::repeat_n(p.index(), len));
            rows.extend(std::iter::repeat_n(NUM_PHONEMES, cfg.boundary_frames));
        }

        let noise = Normal::new(0.0, cfg.noise_scale.max(f64::MIN_POSITIVE)).unwrap();
        let mut features = Matrix::zeros(rows.len(), cfg.feature_dim);
        for (t, &c) in rows.iter().enumerate() {
            for (x, &mu) in features.row_mut(t).iter_mut().zip(self.centers.row(c)) {
                *x = if cfg.noise_scale > 0.0 {
                    mu + noise.sample(rng)
                } else {
                    mu
                };
            }
        }
        debug_assert!(features.rows() >= min_frames(&phonemes));
        Utterance {
            id,
            features,
            phonemes,
        }
    }
}

/// Writes `manifest.tsv` (`utt_id<TAB>phonemes`) plus one feature CSV per utterance.
pub fn write_corpus_dir(dir: &Path, utterances: &[Utterance]) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut manifest = String::new();
    for u in utterances {
        manifest.push_str(&u.id);
        manifest.push('\t');
        manifest.push_str(&u.phoneme_sequence().to_string());
        manifest.push('\n');
        fs::write(dir.join(format!("{}.csv", u.id)), u.features.to_csv())?;
    }
    fs::write(dir.join("manifest.tsv"), manifest)?;
    Ok(())
}

/// Reads a directory written by [`write_corpus_dir`].
pub fn read_corpus_dir(dir: &Path) -> Result<Vec<Utterance>> {
    let manifest = fs::read_to_string(dir.join("manifest.tsv"))?;
    let mut out = Vec::new();
    for (i, line) in manifest.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (id, phones) = line.split_once('\t').ok_or(Error::Parse {
            line: i + 1,
            message: "manifest rows are `utt_id<TAB>phonemes`".into(),
        })?;
        let phonemes = phones
            .split_whitespace()
            .map(Phoneme::parse)
            .collect::<Result<Vec<_>>>()?;
        let features = Matrix::parse_csv(&fs::read_to_string(dir.join(format!("{id}.csv")))?)?;
        out.push(Utterance {
            id: id.to_string(),
            features,
            phonemes,
        });
    }
    Ok(out)
}
