use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sample mean and its standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n as f64 - 1.0);
    (mean, (var / n as f64).sqrt())
}

/// Unbiased sample variance.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n as f64 - 1.0)
}

/// Standard error of the sample variance of a (near-)Gaussian sample:
/// Var(s^2) ~ 2 sigma^4 / (n - 1).
pub fn variance_se(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    sample_variance(xs) * (2.0 / (n as f64 - 1.0)).sqrt()
}

/// Sample covariance of paired observations.
pub fn sample_covariance(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    xs.iter()
        .zip(ys)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum::<f64>()
        / (n as f64 - 1.0)
}

/// Large-sample standard error of the sample covariance of a bivariate
/// Gaussian pair: Var(c) ~ (var_x var_y + c^2) / n.
pub fn covariance_se(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let c = sample_covariance(xs, ys);
    ((sample_variance(xs) * sample_variance(ys) + c * c) / n).sqrt()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OlsFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    /// Half-width of the 95% confidence interval for the slope.
    pub band95: f64,
    pub r2: f64,
    pub dof: usize,
}

/// Ordinary least squares y = a + b x with a t-based 95% band on b.
pub fn ols(x: &[f64], y: &[f64]) -> Result<OlsFit> {
    if x.len() != y.len() || x.len() < 3 {
        return Err(Error::Config(
            "regression needs equal-length inputs with >= 3 points".into(),
        ));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Config("regression abscissae are constant".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let dof = x.len() - 2;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - (intercept + slope * a);
            r * r
        })
        .sum();
    let slope_se = if dof > 0 {
        (ss_res / dof as f64 / sxx).sqrt()
    } else {
        0.0
    };
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(OlsFit {
        slope,
        intercept,
        slope_se,
        band95: t_quantile_975(dof) * slope_se,
        r2,
        dof,
    })
}

/// Two-sided 97.5% Student-t quantile; exact table through 30 degrees of
/// freedom, normal limit beyond.
pub fn t_quantile_975(dof: usize) -> f64 {
    const TABLE: [f64; 30] = [
        12.706205, 4.302653, 3.182446, 2.776445, 2.570582, 2.446912, 2.364624, 2.306004, 2.262157,
        2.228139, 2.200985, 2.178813, 2.160369, 2.144787, 2.131450, 2.119905, 2.109816, 2.100922,
        2.093024, 2.085963, 2.079614, 2.073873, 2.068658, 2.063899, 2.059539, 2.055529, 2.051831,
        2.048407, 2.045230, 2.042272,
    ];
    match dof {
        0 => f64::INFINITY,
        d if d <= 30 => TABLE[d - 1],
        _ => 1.959964,
    }
}

/// Two-sample Kolmogorov-Smirnov statistic sup_x |F_a(x) - F_b(x)|.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(|x, y| x.partial_cmp(y).unwrap());
    sb.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < sa.len() && j < sb.len() {
        let xa = sa[i];
        let xb = sb[j];
        if xa <= xb {
            i += 1;
        }
        if xb <= xa {
            j += 1;
        }
        let fa = i as f64 / sa.len() as f64;
        let fb = j as f64 / sb.len() as f64;
        d = d.max((fa - fb).abs());
    }
    d
}

/// Asymptotic two-sample KS acceptance at level alpha:
/// D <= c(alpha) sqrt((n+m)/(n m)), c(alpha) = sqrt(-ln(alpha/2)/2).
pub fn ks_two_sample_pass(a: &[f64], b: &[f64], alpha: f64) -> (f64, f64, bool) {
    let d = ks_statistic(a, b);
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    let thresh = c * ((a.len() + b.len()) as f64 / (a.len() as f64 * b.len() as f64)).sqrt();
    (d, thresh, d <= thresh)
}
