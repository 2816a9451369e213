//! Beta-Binomial and Dirichlet-Multinomial conjugate updating.
//!
//! Label convention for the two-label model: the first Beta parameter
//! (`alpha`) is the pseudo-count of label A and `x` always counts
//! A-observations out of `n`. To reason about label B, call
//! [`BetaParams::swapped`] and count B-observations instead.
//!
//! All predictive probabilities are posterior means.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::param(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

/// Beta prior over the probability of label A.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaParams {
    alpha: f64,
    beta: f64,
}

impl BetaParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        check_positive("alpha", alpha)?;
        check_positive("beta", beta)?;
        Ok(Self { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Prior sample size `alpha + beta`.
    pub fn total(&self) -> f64 {
        self.alpha + self.beta
    }

    /// The same prior viewed from label B: `(beta, alpha)`.
    pub fn swapped(&self) -> Self {
        Self {
            alpha: self.beta,
            beta: self.alpha,
        }
    }

    pub fn mean(&self) -> f64 {
        self.alpha / self.total()
    }

    pub fn variance(&self) -> f64 {
        let t = self.total();
        self.alpha * self.beta / (t * t * (t + 1.0))
    }
}

fn check_count(x: u64, n: u64) -> Result<()> {
    if x > n {
        Err(Error::InvalidCount { x, n })
    } else {
        Ok(())
    }
}

/// Posterior after `x` A-observations out of `n`: `Beta(alpha + x, beta + n - x)`.
pub fn beta_posterior(prior: BetaParams, x: u64, n: u64) -> Result<BetaParams> {
    check_count(x, n)?;
    Ok(BetaParams {
        alpha: prior.alpha + x as f64,
        beta: prior.beta + (n - x) as f64,
    })
}

/// `E(p_A | n, x) = (alpha + x) / (alpha + beta + n)`.
pub fn posterior_mean(prior: BetaParams, x: u64, n: u64) -> Result<f64> {
    Ok(beta_posterior(prior, x, n)?.mean())
}

pub fn posterior_variance(prior: BetaParams, x: u64, n: u64) -> Result<f64> {
    Ok(beta_posterior(prior, x, n)?.variance())
}

/// Ratio `E(p_A | n) / E(p_A | n = 0)` when all `n` observations are B,
/// which reduces to `1 / (1 + n / (alpha + beta))`.
pub fn adaptation_ratio(prior: BetaParams, n: u64) -> f64 {
    1.0 / (1.0 + n as f64 / prior.total())
}

/// Dirichlet prior over an `m`-category multinomial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DirichletParams {
    alphas: Vec<f64>,
}

impl TryFrom<Vec<f64>> for DirichletParams {
    type Error = Error;

    fn try_from(alphas: Vec<f64>) -> Result<Self> {
        Self::new(alphas)
    }
}

impl From<DirichletParams> for Vec<f64> {
    fn from(p: DirichletParams) -> Self {
        p.alphas
    }
}

impl DirichletParams {
    pub fn new(alphas: Vec<f64>) -> Result<Self> {
        if alphas.len() < 2 {
            return Err(Error::param(format!(
                "Dirichlet needs at least 2 categories, got {}",
                alphas.len()
            )));
        }
        for (i, &a) in alphas.iter().enumerate() {
            check_positive(&format!("alpha[{i}]"), a)?;
        }
        Ok(Self { alphas })
    }

    pub fn symmetric(m: usize, alpha: f64) -> Result<Self> {
        Self::new(vec![alpha; m])
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    /// Vocabulary size `m`.
    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }

    /// `alpha_+ = sum_i alpha_i`.
    pub fn total(&self) -> f64 {
        self.alphas.iter().sum()
    }

    /// Log of the normalising constant `Gamma(alpha_+) / prod Gamma(alpha_i)`.
    pub fn ln_normalizer(&self) -> f64 {
        ln_gamma(self.total()) - self.alphas.iter().map(|&a| ln_gamma(a)).sum::<f64>()
    }

    /// Log density at `p` with respect to Lebesgue measure on the first
    /// `m - 1` coordinates. `p` is assumed to lie on the simplex.
    ///
    /// Zero coordinates follow the limit: `alpha_i = 1` contributes nothing,
    /// `alpha_i > 1` gives `-inf`, `alpha_i < 1` gives `+inf`.
    pub fn ln_density(&self, p: &[f64]) -> f64 {
        let mut acc = self.ln_normalizer();
        for (&a, &pi) in self.alphas.iter().zip(p) {
            let e = a - 1.0;
            if e == 0.0 {
                continue;
            }
            if pi <= 0.0 {
                return if e > 0.0 {
                    f64::NEG_INFINITY
                } else {
                    f64::INFINITY
                };
            }
            acc += e * pi.ln();
        }
        acc
    }
}

/// Category counts from a multinomial sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountVector {
    counts: Vec<u64>,
}

impl CountVector {
    pub fn new(counts: Vec<u64>) -> Self {
        Self { counts }
    }

    pub fn zeros(m: usize) -> Self {
        Self { counts: vec![0; m] }
    }

    /// Counts built from a list of observed category indices.
    pub fn from_observations(m: usize, observed: &[usize]) -> Result<Self> {
        let mut counts = vec![0u64; m];
        for &j in observed {
            *counts
                .get_mut(j)
                .ok_or(Error::TokenOutOfRange { index: j, size: m })? += 1;
        }
        Ok(Self { counts })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// `alpha_i* = alpha_i + x_i`.
pub fn dirichlet_posterior(prior: &DirichletParams, obs: &CountVector) -> Result<DirichletParams> {
    if prior.len() != obs.len() {
        return Err(Error::LengthMismatch {
            expected: prior.len(),
            got: obs.len(),
        });
    }
    let alphas = prior
        .alphas
        .iter()
        .zip(&obs.counts)
        .map(|(&a, &x)| a + x as f64)
        .collect();
    Ok(DirichletParams { alphas })
}

/// Posterior-mean predictive `alpha_i / alpha_+`.
pub fn dirichlet_predictive(params: &DirichletParams) -> Vec<f64> {
    let total = params.total();
    params.alphas.iter().map(|&a| a / total).collect()
}
