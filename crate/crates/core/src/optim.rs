//! Flat-buffer AdamW and the warmup + cosine learning-rate schedule shared
//! by retriever, classifier, and policy training.
//!
//! Parameters live wherever their owner keeps them (an `ndarray` matrix, a
//! plain `Vec`); the optimizer only sees `&mut [f64]` plus a matching
//! gradient slice, so one implementation serves every training loop. With
//! `weight_decay = 0` this is plain Adam.

/// Decoupled-weight-decay Adam over a fixed-size parameter buffer.
#[derive(Debug, Clone)]
pub struct AdamW {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl AdamW {
    pub fn new(n_params: usize, weight_decay: f64) -> Self {
        Self {
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay,
        }
    }

    /// One update with step size `lr`.
    ///
    /// # Panics
    /// Panics if slice lengths differ from the size given at construction.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64) {
        assert_eq!(params.len(), self.m.len(), "parameter count changed mid-training");
        assert_eq!(grads.len(), self.m.len());
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= lr * (m_hat / (v_hat.sqrt() + self.eps) + self.weight_decay * params[i]);
        }
    }
}

/// Linear warmup to the base rate, then cosine decay to zero.
#[derive(Debug, Clone, Copy)]
pub struct LrSchedule {
    pub warmup_steps: usize,
    pub total_steps: usize,
}

impl LrSchedule {
    pub fn new(warmup_steps: usize, total_steps: usize) -> Self {
        Self { warmup_steps, total_steps }
    }

    /// Multiplier for 0-based `step`; in (0, 1].
    pub fn factor(&self, step: usize) -> f64 {
        if step < self.warmup_steps {
            return (step + 1) as f64 / self.warmup_steps as f64;
        }
        let decay_span = self.total_steps.saturating_sub(self.warmup_steps).max(1);
        let progress = ((step - self.warmup_steps) as f64 / decay_span as f64).min(1.0);
        0.5 * (1.0 + (std::f64::consts::PI * progress).cos())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adamw_descends_a_quadratic() {
        // f(x) = (x - 3)^2, gradient 2(x - 3).
        let mut x = vec![0.0f64];
        let mut opt = AdamW::new(1, 0.0);
        for _ in 0..2000 {
            let g = vec![2.0 * (x[0] - 3.0)];
            opt.step(&mut x, &g, 0.01);
        }
        assert!((x[0] - 3.0).abs() < 1e-3, "converged to {}", x[0]);
    }

    #[test]
    fn weight_decay_shrinks_parameters_independently_of_gradient() {
        let mut with = vec![1.0f64];
        let mut without = vec![1.0f64];
        AdamW::new(1, 0.1).step(&mut with, &[0.0], 0.1);
        AdamW::new(1, 0.0).step(&mut without, &[0.0], 0.1);
        assert!(with[0] < without[0]);
        assert_eq!(without[0], 1.0, "zero gradient, zero decay → no movement");
    }

    #[test]
    fn schedule_warms_up_then_decays_to_zero() {
        let s = LrSchedule::new(100, 1000);
        assert!((s.factor(0) - 0.01).abs() < 1e-12);
        assert!((s.factor(99) - 1.0).abs() < 1e-12);
        assert!((s.factor(100) - 1.0).abs() < 1e-9, "cosine starts at full rate");
        let mid = s.factor(550);
        assert!((mid - 0.5).abs() < 1e-9, "halfway through decay → 0.5, got {mid}");
        assert!(s.factor(999) < 0.01);
        // Monotone decreasing after warmup.
        for step in 100..999 {
            assert!(s.factor(step) >= s.factor(step + 1));
        }
    }
}
