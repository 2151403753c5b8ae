//! Sample-parallel gradient and evaluation with ordered reduction.

use isac_core::cnn::{BatchGradient, EnhancerModel, Sample};
use isac_core::Result;
use rayon::prelude::*;

/// Per-sample work runs on the rayon pool; partial results are summed in
/// sample order, so the output does not depend on the thread count.
#[derive(Clone, Copy, Debug, Default)]
pub struct ParallelGradient;

impl BatchGradient for ParallelGradient {
    fn batch_gradient(&self, model: &EnhancerModel, batch: &[&Sample]) -> Result<(f64, Vec<f64>)> {
        let parts: Vec<(f64, Vec<f64>)> = batch
            .par_iter()
            .map(|s| {
                let mut g = model.zeros_like();
                let loss = model.accumulate_gradient(&s.input, &s.target, &mut g)?;
                Ok((loss, g.to_flat()))
            })
            .collect::<Result<_>>()?;
        let mut loss = 0.0;
        let mut grad = vec![0.0; 2 * model.num_params()];
        for (l, g) in parts {
            loss += l;
            grad.iter_mut().zip(&g).for_each(|(a, b)| *a += b);
        }
        Ok((loss, grad))
    }

    fn evaluate(&self, model: &EnhancerModel, samples: &[Sample]) -> Result<(f64, f64)> {
        let parts: Vec<(f64, f64)> = samples
            .par_iter()
            .map(|s| {
                let out = model.forward(&s.input)?;
                Ok((s.target.sub(&out).frobenius_norm_sqr(), s.target.frobenius_norm_sqr()))
            })
            .collect::<Result<_>>()?;
        Ok(parts.iter().fold((0.0, 0.0), |(e, n), (a, b)| (e + a, n + b)))
    }
}
