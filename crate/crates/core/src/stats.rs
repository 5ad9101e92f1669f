//! Self-contained statistics engine: Pearson correlation, two-independent-sample
//! t-tests (Welch by default, pooled-variance as a sensitivity variant), the
//! t-distribution tail machinery they need, and the three-level significance
//! classification used by every report.
//!
//! The special functions are dependency-free: log-gamma via the Lanczos
//! approximation and the regularized incomplete beta via a modified Lentz
//! continued fraction with a 1e-12 convergence tolerance.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
}

/// Three-level p-value banding plus the non-significant bucket.
///
/// Boundaries are strict: `p = 0.05` is already not significant.
#[derive(Copy, Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignificanceClass {
    HighlySignificant,
    VerySignificant,
    Significant,
    NotSignificant,
}

impl SignificanceClass {
    pub fn is_significant(self) -> bool {
        self != SignificanceClass::NotSignificant
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SignificanceClass::HighlySignificant => "highly_significant",
            SignificanceClass::VerySignificant => "very_significant",
            SignificanceClass::Significant => "significant",
            SignificanceClass::NotSignificant => "not_significant",
        }
    }
}

impl fmt::Display for SignificanceClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Bands a p-value: under 0.001, under 0.01, under 0.05, else not significant.
pub fn classify(p: f64) -> SignificanceClass {
    debug_assert!((0.0..=1.0).contains(&p), "p out of range: {p}");
    if p < 0.001 {
        SignificanceClass::HighlySignificant
    } else if p < 0.01 {
        SignificanceClass::VerySignificant
    } else if p < 0.05 {
        SignificanceClass::Significant
    } else {
        SignificanceClass::NotSignificant
    }
}

/// Outcome of a two-sample test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestResult {
    pub t_statistic: f64,
    pub degrees_of_freedom: f64,
    pub p_value: f64,
    pub class: SignificanceClass,
    /// Set when both samples had zero variance and the p-value came from the
    /// degenerate convention (equal means -> 1, unequal means -> 0).
    pub degenerate: bool,
}

/// Which two-sample test to run.
#[derive(Copy, Clone, PartialEq, Eq, Debug, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestVariant {
    /// Welch's unequal-variance test with Welch-Satterthwaite degrees of freedom.
    #[default]
    Welch,
    /// Student's pooled-variance test, kept for sensitivity checks.
    Pooled,
}

/// Pearson product-moment correlation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationResult {
    pub r: f64,
    pub n: usize,
    /// Labels of observations excluded upstream (outlier lists etc.).
    pub excluded: Vec<String>,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample mean and unbiased (n-1) variance.
fn mean_var(xs: &[f64]) -> (f64, f64) {
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (m, ss / (xs.len() - 1) as f64)
}

/// Pearson correlation of two equal-length vectors.
///
/// Requires at least 3 points and nonzero variance on both sides.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<CorrelationResult, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::DegenerateInput(format!(
            "length mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 3 {
        return Err(StatsError::DegenerateInput(format!(
            "need at least 3 points, got {}",
            x.len()
        )));
    }
    let mx = mean(x);
    let my = mean(y);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        let dx = xi - mx;
        let dy = yi - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::DegenerateInput(
            "zero variance in one of the samples".to_string(),
        ));
    }
    let r = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    Ok(CorrelationResult {
        r,
        n: x.len(),
        excluded: Vec::new(),
    })
}

/// Two-sided Welch unequal-variance t-test.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<TestResult, StatsError> {
    t_test(a, b, TestVariant::Welch)
}

/// Two-sided two-independent-sample t-test in the requested variant.
///
/// When both samples have zero variance the p-value is fixed by convention:
/// equal means give p = 1, unequal means give p = 0, both flagged degenerate.
pub fn t_test(a: &[f64], b: &[f64], variant: TestVariant) -> Result<TestResult, StatsError> {
    if a.len() < 2 || b.len() < 2 {
        return Err(StatsError::DegenerateInput(format!(
            "need at least 2 points per sample, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let na = a.len() as f64;
    let nb = b.len() as f64;

    if va == 0.0 && vb == 0.0 {
        let equal = ma == mb;
        let p = if equal { 1.0 } else { 0.0 };
        return Ok(TestResult {
            t_statistic: if equal {
                0.0
            } else if ma > mb {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            },
            degrees_of_freedom: na + nb - 2.0,
            p_value: p,
            class: classify(p),
            degenerate: true,
        });
    }

    let (t, df) = match variant {
        TestVariant::Welch => {
            let se2 = va / na + vb / nb;
            let t = (ma - mb) / se2.sqrt();
            let df = se2 * se2
                / ((va / na) * (va / na) / (na - 1.0) + (vb / nb) * (vb / nb) / (nb - 1.0));
            (t, df)
        }
        TestVariant::Pooled => {
            let sp2 = ((na - 1.0) * va + (nb - 1.0) * vb) / (na + nb - 2.0);
            let t = (ma - mb) / (sp2 * (1.0 / na + 1.0 / nb)).sqrt();
            (t, na + nb - 2.0)
        }
    };
    let p = t_sf(t, df);
    Ok(TestResult {
        t_statistic: t,
        degrees_of_freedom: df,
        p_value: p,
        class: classify(p),
        degenerate: false,
    })
}

/// Two-sided tail probability of the t-distribution: P(|T| >= |t|).
///
/// Evaluated as the regularized incomplete beta I_x(df/2, 1/2) at
/// x = df/(df + t^2); monotone decreasing in |t|.
pub fn t_sf(t: f64, df: f64) -> f64 {
    assert!(df > 0.0, "degrees of freedom must be positive, got {df}");
    if t == 0.0 {
        return 1.0;
    }
    if t.is_infinite() {
        return 0.0;
    }
    let x = df / (df + t * t);
    inc_beta(x, 0.5 * df, 0.5).clamp(0.0, 1.0)
}

/// Benjamini-Hochberg adjusted p-values (step-up FDR).
///
/// Returns the adjusted values in the input order. Off by default everywhere;
/// enabled only by the multiple-comparison flag.
pub fn benjamini_hochberg(pvalues: &[f64]) -> Vec<f64> {
    let m = pvalues.len();
    if m == 0 {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| pvalues[i].total_cmp(&pvalues[j]));
    let mut adjusted = vec![0.0; m];
    let mut running_min = 1.0_f64;
    for rank in (0..m).rev() {
        let idx = order[rank];
        let candidate = (pvalues[idx] * m as f64 / (rank + 1) as f64).min(1.0);
        running_min = running_min.min(candidate);
        adjusted[idx] = running_min;
    }
    adjusted
}

// --- special functions -----------------------------------------------------

const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for z > 0 (Lanczos approximation).
pub fn ln_gamma(z: f64) -> f64 {
    assert!(z > 0.0, "ln_gamma requires z > 0, got {z}");
    if z < 0.5 {
        // Reflection: Γ(z)Γ(1-z) = π / sin(πz)
        let pi = std::f64::consts::PI;
        return pi.ln() - (pi * z).sin().ln() - ln_gamma(1.0 - z);
    }
    let z = z - 1.0;
    let mut x = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        x += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (z + 0.5) * t.ln() - t + x.ln()
}

const BETA_EPS: f64 = 1e-12;
const BETA_FPMIN: f64 = 1e-300;
const BETA_MAX_ITER: usize = 500;

/// Regularized incomplete beta function I_x(a, b).
pub fn inc_beta(x: f64, a: f64, b: f64) -> f64 {
    assert!(a > 0.0 && b > 0.0, "shape parameters must be positive");
    assert!((0.0..=1.0).contains(&x), "x must lie in [0,1], got {x}");
    if x == 0.0 {
        return 0.0;
    }
    if x == 1.0 {
        return 1.0;
    }
    let ln_front =
        ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(x, a, b) / a
    } else {
        1.0 - front * beta_cf(1.0 - x, b, a) / b
    }
}

/// Continued fraction for the incomplete beta (modified Lentz method).
fn beta_cf(x: f64, a: f64, b: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < BETA_FPMIN {
        d = BETA_FPMIN;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=BETA_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        // even step
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < BETA_FPMIN {
            d = BETA_FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < BETA_FPMIN {
            c = BETA_FPMIN;
        }
        d = 1.0 / d;
        h *= d * c;
        // odd step
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < BETA_FPMIN {
            d = BETA_FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < BETA_FPMIN {
            c = BETA_FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < BETA_EPS {
            break;
        }
    }
    h
}
