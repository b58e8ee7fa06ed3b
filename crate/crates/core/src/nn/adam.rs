//! Adam with bias correction over a fixed list of parameter tensors.

/// Hyperparameters; defaults follow the optimizer's standard settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First/second moment accumulators, one pair per parameter tensor, plus the
/// shared step counter.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub cfg: AdamConfig,
    step: u64,
    moments: Vec<(Vec<f64>, Vec<f64>)>,
}

impl AdamState {
    pub fn new(cfg: AdamConfig, tensor_lens: &[usize]) -> AdamState {
        AdamState {
            cfg,
            step: 0,
            moments: tensor_lens
                .iter()
                .map(|&n| (vec![0.0; n], vec![0.0; n]))
                .collect(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One update over all tensors. `params[k]` and `grads[k]` must match the
    /// length registered at construction.
    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) {
        assert_eq!(params.len(), self.moments.len(), "tensor count mismatch");
        assert_eq!(grads.len(), self.moments.len(), "gradient count mismatch");
        self.step += 1;
        let t = self.step as f64;
        let AdamConfig { lr, beta1, beta2, eps } = self.cfg;
        let bc1 = 1.0 - beta1.powf(t);
        let bc2 = 1.0 - beta2.powf(t);
        for (k, (m, v)) in self.moments.iter_mut().enumerate() {
            let p = &mut *params[k];
            let g = grads[k];
            assert_eq!(p.len(), m.len(), "tensor {k} length mismatch");
            assert_eq!(g.len(), m.len(), "gradient {k} length mismatch");
            for i in 0..m.len() {
                m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
}
