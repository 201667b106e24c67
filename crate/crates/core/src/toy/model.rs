use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Frame-wise affine map from `F` features to the output layer.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearModel {
    /// `F × width`.
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

const CHECKPOINT_TAG: &str = "# sctc-linear-model";

impl LinearModel {
    pub fn zeros(features: usize, width: usize) -> Self {
        Self {
            weights: Matrix::zeros(features, width),
            bias: vec![0.0; width],
        }
    }

    /// Gaussian weights with standard deviation `scale`, zero bias.
    pub fn random(features: usize, width: usize, scale: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, scale).expect("finite scale");
        let mut m = Self::zeros(features, width);
        m.weights
            .as_mut_slice()
            .iter_mut()
            .for_each(|w| *w = normal.sample(&mut rng));
        m
    }

    pub fn features(&self) -> usize {
        self.weights.rows()
    }

    pub fn width(&self) -> usize {
        self.weights.cols()
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.as_slice().len() + self.bias.len()
    }

    pub fn is_finite(&self) -> bool {
        self.weights
            .as_slice()
            .iter()
            .chain(&self.bias)
            .all(|v| v.is_finite())
    }

    /// `T × F` features to `T × width` logits.
    pub fn forward(&self, features: &Matrix) -> Result<Matrix> {
        if features.cols() != self.features() {
            return Err(Error::DimensionMismatch(format!(
                "model expects {} features, input has {}",
                self.features(),
                features.cols()
            )));
        }
        let mut out = Matrix::zeros(features.rows(), self.width());
        for (t, x) in features.iter_rows().enumerate() {
            let y = out.row_mut(t);
            y.copy_from_slice(&self.bias);
            for (f, &xf) in x.iter().enumerate() {
                if xf == 0.0 {
                    continue;
                }
                for (yk, &w) in y.iter_mut().zip(self.weights.row(f)) {
                    *yk += xf * w;
                }
            }
        }
        Ok(out)
    }

    /// Adds `scale · ∂L/∂θ` into `grad` (weights then bias, flat), given `∂L/∂logits`.
    pub fn accumulate_gradient(
        &self,
        features: &Matrix,
        grad_logits: &Matrix,
        scale: f64,
        grad: &mut [f64],
    ) {
        let width = self.width();
        let (gw, gb) = grad.split_at_mut(self.features() * width);
        for (x, g) in features.iter_rows().zip(grad_logits.iter_rows()) {
            for (f, &xf) in x.iter().enumerate() {
                let coef = scale * xf;
                for (dst, &gk) in gw[f * width..(f + 1) * width].iter_mut().zip(g) {
                    *dst += coef * gk;
                }
            }
            for (dst, &gk) in gb.iter_mut().zip(g) {
                *dst += scale * gk;
            }
        }
    }

    /// Flat copy of the parameters (weights then bias).
    pub fn parameters(&self) -> Vec<f64> {
        let mut p = self.weights.as_slice().to_vec();
        p.extend_from_slice(&self.bias);
        p
    }

    pub fn set_parameters(&mut self, params: &[f64]) {
        let n = self.weights.as_slice().len();
        self.weights.as_mut_slice().copy_from_slice(&params[..n]);
        self.bias.copy_from_slice(&params[n..]);
    }

    /// Checkpoint text: a tag line with `F` and width, then a `(F+1) × width`
    /// matrix in logits-CSV form whose last row is the bias.
    pub fn to_checkpoint(&self) -> String {
        let mut rows: Vec<&[f64]> = self.weights.iter_rows().collect();
        rows.push(&self.bias);
        let m = Matrix::from_rows(&rows).expect("rectangular");
        format!(
            "{CHECKPOINT_TAG} features={} width={}\n{}",
            self.features(),
            self.width(),
            m.to_csv()
        )
    }

    pub fn from_checkpoint(text: &str) -> Result<Self> {
        let (first, rest) = text.split_once('\n').unwrap_or((text, ""));
        let bad = |message: String| Error::Parse { line: 1, message };
        let header = first
            .strip_prefix(CHECKPOINT_TAG)
            .ok_or_else(|| bad("not a linear-model checkpoint".into()))?;
        let mut features = None;
        let mut width = None;
        for kv in header.split_whitespace() {
            match kv.split_once('=') {
                Some(("features", v)) => features = v.parse::<usize>().ok(),
                Some(("width", v)) => width = v.parse::<usize>().ok(),
                _ => {}
            }
        }
        let (features, width) = features
            .zip(width)
            .ok_or_else(|| bad("checkpoint header needs features= and width=".into()))?;
        let m = Matrix::parse_csv(rest)?;
        if m.rows() != features + 1 || m.cols() != width {
            return Err(Error::DimensionMismatch(format!(
                "checkpoint declares {features}x{width} but stores {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        let mut data = m.into_vec();
        let bias = data.split_off(features * width);
        Ok(Self {
            weights: Matrix::from_vec(features, width, data)?,
            bias,
        })
    }
}
