use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::GraphContext;
use crate::model::{propagate_features, LayerRecord};
use crate::rng::{tag, Rng};
use crate::sampling::argmax;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Nodes used for the pairwise cosine statistic.
pub const COSINE_SAMPLE: usize = 512;

/// Fraction of masked rows whose argmax (lowest index on ties) equals the label.
pub fn accuracy<T: Scalar>(logits: &Tensor<T>, labels: &[usize], mask: &[bool]) -> Result<f64> {
    let (n, c) = logits.dims2("accuracy")?;
    if labels.len() != n || mask.len() != n {
        return Err(Error::shape(
            "accuracy",
            format!("{n} rows, {} labels, {} mask", labels.len(), mask.len()),
        ));
    }
    let (mut hit, mut total) = (0usize, 0usize);
    for i in (0..n).filter(|&i| mask[i]) {
        total += 1;
        if argmax(&logits.data()[i * c..(i + 1) * c]) == labels[i] {
            hit += 1;
        }
    }
    if total == 0 {
        return Err(Error::domain("accuracy", "mask selects no nodes"));
    }
    Ok(hit as f64 / total as f64)
}

/// `Σ_{(i,j)∈E, i<j} ‖y_i/√d̃_i − y_j/√d̃_j‖²` with `d̃` the degrees of `Ã`.
pub fn dirichlet_energy<T: Scalar>(y: &Tensor<T>, ctx: &GraphContext<T>) -> Result<f64> {
    let (n, d) = y.dims2("dirichlet_energy")?;
    if n != ctx.num_nodes() {
        return Err(Error::shape(
            "dirichlet_energy",
            format!("{n} rows for {} nodes", ctx.num_nodes()),
        ));
    }
    let inv: Vec<f64> = ctx.a_tilde.row_sums().iter().map(|v| 1.0 / v.as_f64().sqrt()).collect();
    let yv = y.data();
    let mut total = 0.0;
    for (i, j, _) in ctx.a_tilde.iter().filter(|&(i, j, _)| i < j) {
        for k in 0..d {
            let diff = yv[i * d + k].as_f64() * inv[i] - yv[j * d + k].as_f64() * inv[j];
            total += diff * diff;
        }
    }
    Ok(total)
}

/// Mean cosine similarity over all pairs of a fixed seeded subsample of at
/// most [`COSINE_SAMPLE`] rows. A pair involving a zero row counts as 0.
pub fn mean_pairwise_cosine<T: Scalar>(y: &Tensor<T>) -> Result<f64> {
    let (n, d) = y.dims2("mean_pairwise_cosine")?;
    if n < 2 {
        return Err(Error::domain("mean_pairwise_cosine", "need at least two rows"));
    }
    let mut rows: Vec<usize> = (0..n).collect();
    if n > COSINE_SAMPLE {
        Rng::new(tag("cosine-sample")).shuffle(&mut rows);
        rows.truncate(COSINE_SAMPLE);
        rows.sort_unstable();
    }
    let unit: Vec<Option<Vec<f64>>> = rows
        .iter()
        .map(|&i| {
            let r: Vec<f64> = y.data()[i * d..(i + 1) * d].iter().map(|v| v.as_f64()).collect();
            let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            (norm > 0.0).then(|| r.iter().map(|v| v / norm).collect())
        })
        .collect();
    let (mut total, mut pairs) = (0.0, 0usize);
    for a in 0..unit.len() {
        for b in a + 1..unit.len() {
            if let (Some(u), Some(v)) = (&unit[a], &unit[b]) {
                total += u.iter().zip(v).map(|(p, q)| p * q).sum::<f64>();
            }
            pairs += 1;
        }
    }
    Ok(total / pairs as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothingRow {
    /// 1-based.
    pub layer: usize,
    pub dirichlet_energy: f64,
    pub mean_cosine: f64,
}

pub fn smoothing_metrics<T: Scalar>(trace: &[LayerRecord<T>], ctx: &GraphContext<T>) -> Result<Vec<SmoothingRow>> {
    trace
        .iter()
        .enumerate()
        .map(|(l, rec)| {
            Ok(SmoothingRow {
                layer: l + 1,
                dirichlet_energy: dirichlet_energy(&rec.y, ctx)?,
                mean_cosine: mean_pairwise_cosine(&rec.y)?,
            })
        })
        .collect()
}

/// Smoothing of `Â^depth X` (feature propagation with no weights or
/// nonlinearity), reported as a row with `layer = depth`.
pub fn propagation_smoothing<T: Scalar>(ctx: &GraphContext<T>, depth: usize) -> Result<SmoothingRow> {
    let y = propagate_features(ctx, depth)?;
    Ok(SmoothingRow {
        layer: depth,
        dirichlet_energy: dirichlet_energy(&y, ctx)?,
        mean_cosine: mean_pairwise_cosine(&y)?,
    })
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Relative decline in percent, `100·(base − ablated)/base`.
pub fn decline_percent(base: f64, ablated: f64) -> f64 {
    100.0 * (base - ablated) / base
}
