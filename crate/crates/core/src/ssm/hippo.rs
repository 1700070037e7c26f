use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// HiPPO-LegS matrix: `−√(2n+1)·√(2k+1)` below the diagonal, `−(n+1)` on it.
pub fn hippo_legs<T: Scalar>(s: usize) -> Result<Tensor<T>> {
    if s == 0 {
        return Err(Error::domain("hippo_legs", "state dimension must be at least 1"));
    }
    let mut data = vec![T::zero(); s * s];
    for n in 0..s {
        let rn = T::from_usize_lossy(2 * n + 1).sqrt();
        for k in 0..n {
            data[n * s + k] = -(rn * T::from_usize_lossy(2 * k + 1).sqrt());
        }
        data[n * s + n] = -T::from_usize_lossy(n + 1);
    }
    Tensor::new(&[s, s], data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_entries() {
        assert_eq!(hippo_legs::<f64>(1).unwrap().data(), &[-1.0]);
        let p = hippo_legs::<f64>(4).unwrap();
        assert!((p.at(&[1, 0]) + 1.7320508).abs() < 1e-7);
        assert_eq!(p.at(&[2, 2]), -3.0);
        assert!((p.at(&[3, 1]) + 4.5825757).abs() < 1e-7);
        assert_eq!(p.at(&[1, 2]), 0.0);
        assert!(hippo_legs::<f64>(0).is_err());
    }

    #[test]
    fn matches_closed_form_up_to_64() {
        for s in 1..=64 {
            let p = hippo_legs::<f64>(s).unwrap();
            for n in 0..s {
                for k in 0..s {
                    let want = match n.cmp(&k) {
                        std::cmp::Ordering::Greater => -(((2 * n + 1) * (2 * k + 1)) as f64).sqrt(),
                        std::cmp::Ordering::Equal => -((n + 1) as f64),
                        std::cmp::Ordering::Less => 0.0,
                    };
                    let got = p.at(&[n, k]);
                    assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0), "s={s} ({n},{k})");
                }
            }
        }
    }
}
