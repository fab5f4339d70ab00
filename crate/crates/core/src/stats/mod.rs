//! One-sided significance tests: paired t, Welch's unpaired t and the
//! Wilcoxon signed-rank test (normal approximation).

mod special;

pub use special::{gamma_q, inc_beta, ln_gamma, normal_sf, student_t_sf};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Alternative hypothesis: `x` tends to be greater (or less) than `y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Greater,
    Less,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::Greater => 1.0,
            Direction::Less => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_one_sided: f64,
    pub n: usize,
    pub direction: Direction,
    /// Set when a convention replaced the test (too few samples, zero
    /// variance, no non-zero differences).
    pub degenerate: bool,
}

impl TestResult {
    fn degenerate(statistic: f64, p: f64, n: usize, direction: Direction) -> Self {
        TestResult { statistic, p_one_sided: p, n, direction, degenerate: true }
    }
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn sample_var(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64
}

fn t_tail(t: f64, df: f64, direction: Direction) -> f64 {
    student_t_sf(direction.sign() * t, df)
}

/// Convention for a zero standard error: p = 0 when the effect points the
/// hypothesised way, 1 when it opposes it and ½ when there is none.
fn zero_variance(effect: f64, n: usize, direction: Direction) -> TestResult {
    let signed = direction.sign() * effect;
    let p = if signed > 0.0 {
        0.0
    } else if signed < 0.0 {
        1.0
    } else {
        0.5
    };
    let statistic = if effect == 0.0 { 0.0 } else { effect.signum() * f64::INFINITY };
    TestResult::degenerate(statistic, p, n, direction)
}

fn check_finite(x: &[f64], name: &str) -> Result<()> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("{name} contains non-finite values")));
    }
    Ok(())
}

/// Paired t-test on `d = x − y` with `n − 1` degrees of freedom.
pub fn paired_t(x: &[f64], y: &[f64], direction: Direction) -> Result<TestResult> {
    if x.len() != y.len() {
        return Err(Error::invalid(format!("paired samples differ in length: {} vs {}", x.len(), y.len())));
    }
    check_finite(x, "x")?;
    check_finite(y, "y")?;
    let n = x.len();
    if n < 2 {
        return Ok(TestResult::degenerate(0.0, 1.0, n, direction));
    }
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let (m, v) = (mean(&d), sample_var(&d));
    if v == 0.0 {
        return Ok(zero_variance(m, n, direction));
    }
    let t = m / (v.sqrt() / (n as f64).sqrt());
    Ok(TestResult {
        statistic: t,
        p_one_sided: t_tail(t, (n - 1) as f64, direction),
        n,
        direction,
        degenerate: false,
    })
}

/// Welch's unequal-variance t-test with Welch-Satterthwaite degrees of freedom.
pub fn unpaired_t(x: &[f64], y: &[f64], direction: Direction) -> Result<TestResult> {
    check_finite(x, "x")?;
    check_finite(y, "y")?;
    let n = x.len() + y.len();
    if x.len() < 2 || y.len() < 2 {
        return Ok(TestResult::degenerate(0.0, 1.0, n, direction));
    }
    let (nx, ny) = (x.len() as f64, y.len() as f64);
    let (vx, vy) = (sample_var(x) / nx, sample_var(y) / ny);
    let diff = mean(x) - mean(y);
    if vx + vy == 0.0 {
        return Ok(zero_variance(diff, n, direction));
    }
    let t = diff / (vx + vy).sqrt();
    let df = (vx + vy).powi(2) / (vx * vx / (nx - 1.0) + vy * vy / (ny - 1.0));
    Ok(TestResult {
        statistic: t,
        p_one_sided: t_tail(t, df, direction),
        n,
        direction,
        degenerate: false,
    })
}

/// Average ranks (1-based) of `v`, plus the tie term `Σ (t³ − t)`.
fn average_ranks(v: &[f64]) -> (Vec<f64>, f64) {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
    let mut ranks = vec![0.0; v.len()];
    let mut ties = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        let t = (j - i + 1) as f64;
        ties += t * t * t - t;
        i = j + 1;
    }
    (ranks, ties)
}

/// Wilcoxon signed-rank test on `x − y`. Zero differences are dropped, tied
/// magnitudes share their average rank, and `W⁺` is compared to its normal
/// approximation with tie-corrected variance and a 0.5 continuity
/// correction toward the null.
pub fn wilcoxon_signed_rank(x: &[f64], y: &[f64], direction: Direction) -> Result<TestResult> {
    if x.len() != y.len() {
        return Err(Error::invalid(format!("paired samples differ in length: {} vs {}", x.len(), y.len())));
    }
    check_finite(x, "x")?;
    check_finite(y, "y")?;
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).filter(|&v| v != 0.0).collect();
    let n = d.len();
    if n == 0 {
        return Ok(TestResult::degenerate(0.0, 1.0, 0, direction));
    }
    let abs: Vec<f64> = d.iter().map(|v| v.abs()).collect();
    let (ranks, ties) = average_ranks(&abs);
    let w_plus: f64 = d.iter().zip(&ranks).filter(|(v, _)| **v > 0.0).map(|(_, r)| r).sum();
    let nf = n as f64;
    let mu = nf * (nf + 1.0) / 4.0;
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - ties / 48.0;
    let z = (w_plus - mu - 0.5 * direction.sign()) / var.sqrt();
    Ok(TestResult {
        statistic: w_plus,
        p_one_sided: normal_sf(direction.sign() * z),
        n,
        direction,
        degenerate: false,
    })
}
