//! Tail probabilities and the one-sample uniformity test used by the
//! simulation summaries.

use statrs::function::gamma::gamma_ur;

use crate::error::{Error, Result};

/// Upper tail of a chi-squared distribution with `df` degrees of freedom.
pub fn chi2_upper_tail(t: f64, df: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!("chi-squared statistic must be >= 0, got {t}")));
    }
    if t == 0.0 {
        return Ok(1.0);
    }
    Ok(gamma_ur(df / 2.0, t / 2.0).clamp(0.0, 1.0))
}

/// One-sample Kolmogorov-Smirnov test against Uniform(0, 1): the statistic
/// and its asymptotic p-value.
pub fn ks_uniform(samples: &[f64]) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("KS test needs at least one sample".into()));
    }
    if samples.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::InvalidParameter("KS uniformity samples must lie in [0, 1]".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, u) in sorted.iter().enumerate() {
        let hi = (i as f64 + 1.0) / n - u;
        let lo = u - i as f64 / n;
        d = d.max(hi).max(lo);
    }
    Ok((d, kolmogorov_tail(n.sqrt() * d)))
}

/// `P(sup |B(t)| > x)` for the Brownian bridge: the asymptotic null tail of
/// `sqrt(n) D_n`.
fn kolmogorov_tail(x: f64) -> f64 {
    if x < 1e-8 {
        return 1.0;
    }
    let mut acc = 0.0;
    for k in 1..200 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * x * x).exp();
        let signed = if k % 2 == 1 { term } else { -term };
        acc += signed;
        if term < 1e-14 {
            break;
        }
    }
    (2.0 * acc).clamp(0.0, 1.0)
}
