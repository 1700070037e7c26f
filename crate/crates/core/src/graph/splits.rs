use super::Split;
use crate::error::{Error, Result};
use crate::rng::Rng;

const EPS: f64 = 1e-9;

/// `(train, val, test)` sizes: train and val are floored, test takes
/// whatever remains of `floor(n · (f_train + f_val + f_test))`.
pub fn split_sizes(n: usize, fractions: (f64, f64, f64)) -> Result<(usize, usize, usize)> {
    let (tr, va, te) = fractions;
    if !(tr > 0.0 && va > 0.0 && te > 0.0) {
        return Err(Error::Config(format!(
            "split fractions must be positive, got ({tr}, {va}, {te})"
        )));
    }
    let total = tr + va + te;
    if total > 1.0 + EPS {
        return Err(Error::Config(format!("split fractions sum to {total} > 1")));
    }
    let nf = n as f64;
    let train = (tr * nf + EPS).floor() as usize;
    let val = (va * nf + EPS).floor() as usize;
    let all = ((total * nf + EPS).floor() as usize).min(n);
    let test = all.saturating_sub(train + val);
    if train == 0 || val == 0 || test == 0 {
        return Err(Error::Dataset(format!(
            "{n} nodes are too few for split fractions ({tr}, {va}, {te})"
        )));
    }
    Ok((train, val, test))
}

/// `k` independent uniformly random splits drawn from `rng`.
pub fn make_splits(n: usize, fractions: (f64, f64, f64), k: usize, rng: &mut Rng) -> Result<Vec<Split>> {
    let (train, val, test) = split_sizes(n, fractions)?;
    let mut out = Vec::with_capacity(k);
    for _ in 0..k {
        let mut ids: Vec<usize> = (0..n).collect();
        rng.shuffle(&mut ids);
        out.push(Split::from_ids(
            n,
            &ids[..train],
            &ids[train..train + val],
            &ids[train + val..train + val + test],
        )?);
    }
    Ok(out)
}
