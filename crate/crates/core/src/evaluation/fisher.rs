use rand::Rng;

use crate::{Error, Result};

/// Two-sided paired randomization test on the mean difference. Each trial
/// flips the sign of every paired difference with probability 1/2; the
/// p-value is the fraction of trials at least as extreme as observed.
pub fn fisher_randomization_test<R: Rng + ?Sized>(
    a: &[f64],
    b: &[f64],
    trials: usize,
    rng: &mut R,
) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() || trials == 0 {
        return Ok(1.0);
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = d.len() as f64;
    let observed = (d.iter().sum::<f64>() / n).abs();
    let slack = 1e-12 * observed.max(f64::MIN_POSITIVE);
    let mut extreme = 0usize;
    for _ in 0..trials {
        let s: f64 = d
            .iter()
            .map(|&x| if rng.gen::<bool>() { x } else { -x })
            .sum();
        if (s / n).abs() >= observed - slack {
            extreme += 1;
        }
    }
    Ok(extreme as f64 / trials as f64)
}
