//! Small statistics toolbox used by the experiments and the test suites.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

/// Sample mean and its standard error. Empty input gives `None`.
pub fn mean_se(xs: &[f64]) -> Option<(f64, f64)> {
    let n = xs.len();
    if n == 0 {
        return None;
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return Some((mean, 0.0));
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    Some((mean, (var / n as f64).sqrt()))
}

/// Standard error of a proportion estimate `k / n`.
pub fn proportion_se(k: u64, n: u64) -> f64 {
    if n == 0 {
        return f64::NAN;
    }
    let p = k as f64 / n as f64;
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Wilson score interval for `k` successes out of `n` at normal quantile `z`.
pub fn wilson(k: u64, n: u64, z: f64) -> Option<(f64, f64)> {
    if n == 0 {
        return None;
    }
    let n_f = n as f64;
    let p = k as f64 / n_f;
    let z2 = z * z;
    let denom = 1.0 + z2 / n_f;
    let centre = (p + z2 / (2.0 * n_f)) / denom;
    let half = z * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    Some(((centre - half).max(0.0), (centre + half).min(1.0)))
}

/// Pooled two-proportion z statistic for `k1/n1 - k2/n2`.
pub fn two_proportion_z(k1: u64, n1: u64, k2: u64, n2: u64) -> f64 {
    let p1 = k1 as f64 / n1 as f64;
    let p2 = k2 as f64 / n2 as f64;
    let pooled = (k1 + k2) as f64 / (n1 + n2) as f64;
    let se = (pooled * (1.0 - pooled) * (1.0 / n1 as f64 + 1.0 / n2 as f64)).sqrt();
    if se == 0.0 {
        if p1 == p2 {
            0.0
        } else {
            f64::INFINITY.copysign(p1 - p2)
        }
    } else {
        (p1 - p2) / se
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Kolmogorov survival function `Q(x) = 2 sum (-1)^{k-1} exp(-2 k^2 x^2)`.
fn kolmogorov_q(x: f64) -> f64 {
    if x < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * x * x).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value (Stephens'
/// small-sample correction). Ties are handled by stepping both empirical
/// distribution functions over each distinct value at once.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<TestResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidInput("KS test needs two non-empty samples".into()));
    }
    if a.iter().chain(b).any(|x| x.is_nan()) {
        return Err(Error::InvalidInput("KS test sample contains NaN".into()));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let ne = na * nb / (na + nb);
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    Ok(TestResult {
        statistic: d,
        p_value: kolmogorov_q(lambda),
    })
}

/// Pearson chi-square goodness of fit of `observed` counts against cell
/// probabilities `probs`. Degrees of freedom: cells minus one.
pub fn chi_square_gof(observed: &[u64], probs: &[f64]) -> Result<TestResult> {
    if observed.len() != probs.len() || observed.len() < 2 {
        return Err(Error::InvalidInput(
            "chi-square needs matching counts and probabilities for at least two cells".into(),
        ));
    }
    let total: u64 = observed.iter().sum();
    let mut stat = 0.0;
    for (&o, &p) in observed.iter().zip(probs) {
        let e = p * total as f64;
        if e <= 0.0 {
            return Err(Error::InvalidInput("cell with zero expected count".into()));
        }
        stat += (o as f64 - e).powi(2) / e;
    }
    let dist = ChiSquared::new((observed.len() - 1) as f64)
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
    Ok(TestResult {
        statistic: stat,
        p_value: dist.sf(stat),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
}

/// Weighted least squares `y ~ intercept + slope * x`. With unit weights the
/// slope standard error uses the residual variance; otherwise weights are
/// taken as inverse variances.
pub fn weighted_linear_fit(x: &[f64], y: &[f64], w: Option<&[f64]>) -> Result<LinearFit> {
    let n = x.len();
    if n < 2 || y.len() != n || w.is_some_and(|w| w.len() != n) {
        return Err(Error::InvalidInput(
            "linear fit needs at least two points of matching length".into(),
        ));
    }
    let weight = |i: usize| w.map_or(1.0, |w| w[i]);
    let sw: f64 = (0..n).map(weight).sum();
    let mx = (0..n).map(|i| weight(i) * x[i]).sum::<f64>() / sw;
    let my = (0..n).map(|i| weight(i) * y[i]).sum::<f64>() / sw;
    let sxx: f64 = (0..n).map(|i| weight(i) * (x[i] - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput("linear fit with constant x".into()));
    }
    let sxy: f64 = (0..n).map(|i| weight(i) * (x[i] - mx) * (y[i] - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_se = if w.is_some() {
        (1.0 / sxx).sqrt()
    } else if n > 2 {
        let rss: f64 = (0..n).map(|i| (y[i] - intercept - slope * x[i]).powi(2)).sum();
        (rss / (n - 2) as f64 / sxx).sqrt()
    } else {
        0.0
    };
    Ok(LinearFit {
        slope,
        intercept,
        slope_se,
    })
}

/// Median of the values (average of the middle pair for even length).
pub fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

/// Median when `censored` further observations are known only to exceed
/// every finite one. `None` if the median falls among the censored values.
pub fn censored_median(finite: &[f64], censored: usize) -> Option<f64> {
    let total = finite.len() + censored;
    if total == 0 {
        return None;
    }
    let mut v = finite.to_vec();
    v.sort_by(f64::total_cmp);
    let m = total / 2;
    if total % 2 == 1 {
        v.get(m).copied()
    } else {
        Some(0.5 * (*v.get(m - 1)? + *v.get(m)?))
    }
}
