//! Central finite-difference verification of reverse-mode gradients.

use crate::error::Result;
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug)]
pub struct GradCheck {
    pub step: f64,
    pub rel_tol: f64,
    /// Denominator floor so that near-zero gradients are compared absolutely.
    pub abs_floor: f64,
}

impl Default for GradCheck {
    fn default() -> Self {
        Self {
            step: 1e-5,
            rel_tol: 1e-4,
            abs_floor: 1e-6,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct GradCheckReport {
    pub checked: usize,
    pub max_rel_error: f64,
    /// `(input, flat index, analytic, numeric)` of the worst entry.
    pub worst: Option<(usize, usize, f64, f64)>,
}

impl GradCheckReport {
    pub fn passed(&self, rel_tol: f64) -> bool {
        self.max_rel_error < rel_tol
    }
}

impl GradCheck {
    pub fn relative_error(&self, analytic: f64, numeric: f64) -> f64 {
        (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(self.abs_floor)
    }

    /// Compares the gradient of `f` at `inputs` with central differences.
    ///
    /// `f` must be deterministic: every stochastic path inside it has to
    /// reseed from a fixed value on each call.
    pub fn run<F>(&self, inputs: &[Tensor<f64>], f: F) -> Result<GradCheckReport>
    where
        F: Fn(&[Tensor<f64>]) -> Result<Tensor<f64>>,
    {
        let leaves: Vec<Tensor<f64>> = inputs.iter().map(|t| t.detach_with_grad(true)).collect();
        f(&leaves)?.backward()?;
        let analytic: Vec<Vec<f64>> = leaves
            .iter()
            .map(|t| t.grad().unwrap_or_else(|| vec![0.0; t.len()]))
            .collect();

        let mut report = GradCheckReport::default();
        for (p, input) in inputs.iter().enumerate() {
            for idx in 0..input.len() {
                let eval = |delta: f64| -> Result<f64> {
                    let probe: Vec<Tensor<f64>> = inputs
                        .iter()
                        .enumerate()
                        .map(|(q, t)| {
                            let mut data = t.to_vec();
                            if q == p {
                                data[idx] += delta;
                            }
                            Tensor::new(t.shape(), data)
                        })
                        .collect::<Result<_>>()?;
                    f(&probe)?.item()
                };
                let numeric = (eval(self.step)? - eval(-self.step)?) / (2.0 * self.step);
                let a = analytic[p][idx];
                let err = self.relative_error(a, numeric);
                report.checked += 1;
                if report.worst.is_none() || err > report.max_rel_error {
                    report.max_rel_error = err;
                    report.worst = Some((p, idx, a, numeric));
                }
            }
        }
        Ok(report)
    }
}
