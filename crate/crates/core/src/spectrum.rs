use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{sup_ball_counts, SupBallCounts};

/// Fourier coefficients gamma_n >= 0 of a spatial covariance on the torus.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum SpectrumForm {
    /// gamma_n = c (1 + |n|^2)^{-beta}
    Parametric { c: f64, beta: f64 },
    /// gamma_n = c
    White { c: f64 },
    /// Explicit table; entries sorted lexicographically by n, absent n inside
    /// the ball mean gamma_n = 0.
    Tabulated { entries: Vec<(Vec<i32>, f64)> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CovarianceSpectrum {
    pub d: u32,
    pub n_max: u32,
    pub form: SpectrumForm,
}

impl CovarianceSpectrum {
    pub fn parametric(d: u32, n_max: u32, c: f64, beta: f64) -> Self {
        CovarianceSpectrum {
            d,
            n_max,
            form: SpectrumForm::Parametric { c, beta },
        }
    }

    pub fn white(d: u32, n_max: u32, c: f64) -> Self {
        CovarianceSpectrum {
            d,
            n_max,
            form: SpectrumForm::White { c },
        }
    }

    pub fn tabulated(d: u32, n_max: u32, mut entries: Vec<(Vec<i32>, f64)>) -> Self {
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        CovarianceSpectrum {
            d,
            n_max,
            form: SpectrumForm::Tabulated { entries },
        }
    }

    /// gamma as a function of |n|^2 alone; None for tabulated forms.
    pub fn radial_gamma(&self, m: u64) -> Option<f64> {
        match &self.form {
            SpectrumForm::Parametric { c, beta } => Some(c * (1.0 + m as f64).powf(-beta)),
            SpectrumForm::White { c } => Some(*c),
            SpectrumForm::Tabulated { .. } => None,
        }
    }

    pub fn gamma(&self, n: &[i32]) -> f64 {
        debug_assert_eq!(n.len(), self.d as usize);
        if n.iter().any(|c| c.unsigned_abs() > self.n_max) {
            return 0.0;
        }
        match &self.form {
            SpectrumForm::Parametric { c, beta } => {
                let m: i64 = n.iter().map(|&x| x as i64 * x as i64).sum();
                c * (1.0 + m as f64).powf(-beta)
            }
            SpectrumForm::White { c } => *c,
            SpectrumForm::Tabulated { entries } => entries
                .binary_search_by(|e| e.0.as_slice().cmp(n))
                .map(|i| entries[i].1)
                .unwrap_or(0.0),
        }
    }

    pub fn is_all_zero(&self) -> bool {
        match &self.form {
            SpectrumForm::Parametric { c, .. } | SpectrumForm::White { c } => *c == 0.0,
            SpectrumForm::Tabulated { entries } => entries.iter().all(|e| e.1 == 0.0),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumValidation {
    pub valid: bool,
    pub violations: Vec<String>,
    /// Exponent r witnessing sum gamma_n / (1 + |n|^r) < inf, when one exists.
    pub slowly_increasing_witness: Option<f64>,
}

pub fn validate_spectrum(spec: &CovarianceSpectrum) -> SpectrumValidation {
    let mut violations = Vec::new();
    let witness = match &spec.form {
        SpectrumForm::Parametric { c, beta } => {
            if *c < 0.0 {
                violations.push(format!("negative scale c = {c}"));
            }
            // sum (1+m)^{-beta} / (1+|n|^r) converges iff 2 beta + r > d.
            Some((spec.d as f64 + 1.0 - 2.0 * beta).max(1.0))
        }
        SpectrumForm::White { c } => {
            if *c < 0.0 {
                violations.push(format!("negative scale c = {c}"));
            }
            Some(spec.d as f64 + 1.0)
        }
        SpectrumForm::Tabulated { entries } => {
            for (n, g) in entries {
                if n.len() != spec.d as usize {
                    violations.push(format!("entry {n:?} has dimension {} != d = {}", n.len(), spec.d));
                    continue;
                }
                if *g < 0.0 {
                    violations.push(format!("negativity at n = {n:?}: gamma = {g}"));
                }
                let neg: Vec<i32> = n.iter().map(|&x| -x).collect();
                let g_neg = spec.gamma(&neg);
                if (g - g_neg).abs() > 1e-12 * g.abs().max(1.0) {
                    violations.push(format!(
                        "symmetry: gamma at {n:?} = {g} but at {neg:?} = {g_neg}"
                    ));
                }
            }
            // A finite table is trivially slowly increasing.
            Some(spec.d as f64 + 1.0)
        }
    };
    SpectrumValidation {
        valid: violations.is_empty(),
        violations,
        slowly_increasing_witness: witness,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Convergent,
    Divergent,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Verdict::Convergent => "convergent",
            Verdict::Divergent => "divergent",
            Verdict::Inconclusive => "inconclusive",
        };
        f.write_str(s)
    }
}

/// Finite-evidence verdict from a dyadic partial-sum ladder: geometric decay
/// of increments (ratio <= 0.75) reads convergent, increments bounded away
/// from zero read divergent, anything else is inconclusive.
pub fn classify_partial_sums(sums: &[f64]) -> Verdict {
    if sums.len() < 4 {
        return Verdict::Inconclusive;
    }
    let scale = sums.last().unwrap().abs().max(1.0);
    let inc: Vec<f64> = sums.windows(2).map(|w| w[1] - w[0]).collect();
    let tail = &inc[inc.len() - 3..];
    if tail.iter().all(|x| x.abs() <= 1e-13 * scale) {
        return Verdict::Convergent;
    }
    if tail.iter().all(|&x| x > 0.0) {
        let geometric = tail.windows(2).all(|w| w[1] / w[0] <= 0.75);
        if geometric {
            return Verdict::Convergent;
        }
        if tail.iter().all(|&x| x >= 1e-9 * scale) {
            return Verdict::Divergent;
        }
    }
    Verdict::Inconclusive
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegularityReport {
    pub d: u32,
    pub alpha: f64,
    pub truncations: Vec<u32>,
    pub partial_sums: Vec<f64>,
    pub verdict: Verdict,
}

/// Partial sums S_N = sum_{|n|_inf <= N} gamma_n (1 + |n|^2)^alpha on the
/// given truncation ladder, plus the trend verdict.
pub fn regularity_partial_sums(
    spec: &CovarianceSpectrum,
    alpha: f64,
    truncations: &[u32],
) -> Result<RegularityReport> {
    if truncations.len() < 4 || truncations.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config(
            "truncation ladder must be ascending with at least 4 levels (>= 3 dyadic steps)".into(),
        ));
    }
    let sums = match &spec.form {
        SpectrumForm::Tabulated { entries } => {
            // Small explicit tables: direct scan per level.
            truncations
                .iter()
                .map(|&nn| {
                    entries
                        .iter()
                        .filter(|(n, _)| n.iter().all(|c| c.unsigned_abs() <= nn))
                        .map(|(n, g)| {
                            let m: i64 = n.iter().map(|&x| x as i64 * x as i64).sum();
                            g * (1.0 + m as f64).powf(alpha)
                        })
                        .sum()
                })
                .collect()
        }
        _ => {
            let counts = sup_ball_counts(spec.d, truncations);
            radial_partial_sums(spec, alpha, &counts)
        }
    };
    let verdict = classify_partial_sums(&sums);
    Ok(RegularityReport {
        d: spec.d,
        alpha,
        truncations: truncations.to_vec(),
        partial_sums: sums,
        verdict,
    })
}

/// Shared fast path for radial spectra, reusing a prebuilt ball histogram.
pub fn radial_partial_sums(
    spec: &CovarianceSpectrum,
    alpha: f64,
    counts: &SupBallCounts,
) -> Vec<f64> {
    counts.partial_sums(|m| {
        let g = spec
            .radial_gamma(m)
            .expect("radial_partial_sums needs a radial spectrum form");
        g * (1.0 + m as f64).powf(alpha)
    })
}

/// Exact decision for the parametric family gamma_n = c (1+|n|^2)^{-beta}:
/// sum gamma_n (1+|n|^2)^alpha converges iff 2 (beta - alpha) > d.
pub fn parametric_regularity_decision(d: u32, alpha: f64, beta: f64) -> bool {
    2.0 * (beta - alpha) > d as f64
}

/// Coefficient Sobolev norm
///     ( |xi_0|^2 + 2 sum_{n in Z_s^d} (1+|n|^2)^alpha ((xi_n^1)^2 + (xi_n^2)^2) )^{1/2},
/// with `m_values[k] = |n_k|^2` for the k-th index-set member.
pub fn sobolev_norm(
    xi0: f64,
    xi1: &[f64],
    xi2: &[f64],
    m_values: &[u64],
    alpha: f64,
) -> Result<f64> {
    if xi1.len() != m_values.len() || xi2.len() != m_values.len() {
        return Err(Error::Config(format!(
            "coefficient/index mismatch: {} and {} components vs {} members",
            xi1.len(),
            xi2.len(),
            m_values.len()
        )));
    }
    let mut acc = xi0 * xi0;
    for k in 0..m_values.len() {
        let w = (1.0 + m_values[k] as f64).powf(alpha);
        acc += 2.0 * w * (xi1[k] * xi1[k] + xi2[k] * xi2[k]);
    }
    Ok(acc.sqrt())
}
