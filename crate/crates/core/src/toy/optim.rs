//! AdamW with bias correction and a linear warmup schedule.

/// Linear warmup from `peak / warmup_steps` to `peak`, then constant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WarmupSchedule {
    pub peak: f64,
    pub warmup_steps: usize,
}

impl WarmupSchedule {
    /// Warmup covering `fraction` of `total_steps`.
    pub fn new(peak: f64, total_steps: usize, fraction: f64) -> Self {
        Self {
            peak,
            warmup_steps: (fraction * total_steps as f64).floor() as usize,
        }
    }

    /// Learning rate for the zero-based `step`.
    pub fn rate(&self, step: usize) -> f64 {
        if step < self.warmup_steps {
            self.peak * (step + 1) as f64 / self.warmup_steps as f64
        } else {
            self.peak
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdamW {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
    first: Vec<f64>,
    second: Vec<f64>,
    steps: i32,
}

impl AdamW {
    pub fn new(parameters: usize, weight_decay: f64) -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay,
            first: vec![0.0; parameters],
            second: vec![0.0; parameters],
            steps: 0,
        }
    }

    pub fn steps(&self) -> usize {
        self.steps as usize
    }

    /// One update at learning rate `lr`.
    ///
    /// Weight decay shrinks the parameters directly (`p -= lr * wd * p`); it
    /// never enters the moment estimates.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64) {
        assert_eq!(params.len(), self.first.len());
        assert_eq!(grads.len(), self.first.len());
        self.steps += 1;
        let c1 = 1.0 - self.beta1.powi(self.steps);
        let c2 = 1.0 - self.beta2.powi(self.steps);
        let decay = 1.0 - lr * self.weight_decay;
        for (((p, &g), m), v) in params
            .iter_mut()
            .zip(grads)
            .zip(&mut self.first)
            .zip(&mut self.second)
        {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p = *p * decay - lr * m_hat / (v_hat.sqrt() + self.epsilon);
        }
    }
}
