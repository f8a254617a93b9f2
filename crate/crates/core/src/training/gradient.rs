use rayon::prelude::*;

use crate::error::{Error, Result};

/// Central differences `(f(x + h e_k) - f(x - h e_k)) / 2h` for every
/// coordinate. Coordinates are evaluated in parallel; the result does not
/// depend on the thread count.
pub fn finite_diff_gradient<F>(cost: F, theta: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidParameter(format!("finite-difference step must be > 0, got {h}")));
    }
    (0..theta.len())
        .into_par_iter()
        .map(|k| {
            let mut probe = theta.to_vec();
            probe[k] = theta[k] + h;
            let plus = cost(&probe)?;
            probe[k] = theta[k] - h;
            let minus = cost(&probe)?;
            let g = (plus - minus) / (2.0 * h);
            if g.is_finite() {
                Ok(g)
            } else {
                Err(Error::NonFiniteCost { coordinate: k })
            }
        })
        .collect()
}
