//! Probability of one token sequence given another under a Dirichlet prior.
//!
//! For distinct tokens `T*` conditioned on `T`:
//!
//! ```text
//! P(T* | T) = prod_{t in T* ∩ T} (a_t + 1) * prod_{t in T* \ T} a_t
//!             / prod_{j=0}^{|T*|-1} (a* + j + |T|)
//! ```
//!
//! [`sequential_oracle`] computes the same quantity the slow way, as a
//! product of one-step posterior predictives, and handles repeated tokens.

use std::collections::BTreeSet;

use crate::conjugate::DirichletParams;
use crate::error::{Error, Result};

/// A set of distinct token indices.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenSet {
    tokens: BTreeSet<usize>,
}

impl TokenSet {
    /// Builds a set from a list, rejecting duplicates.
    pub fn new(tokens: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for t in tokens {
            if !set.insert(t) {
                return Err(Error::DuplicateToken(t));
            }
        }
        Ok(Self { tokens: set })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn contains(&self, t: usize) -> bool {
        self.tokens.contains(&t)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.tokens.iter().copied()
    }
}

impl From<BTreeSet<usize>> for TokenSet {
    fn from(tokens: BTreeSet<usize>) -> Self {
        Self { tokens }
    }
}

/// How the total concentration `a*` in the denominator is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AlphaTotal {
    /// Sum over the whole vocabulary.
    #[default]
    FullVocabulary,
    /// Sum over the tokens of `T ∪ T*` only.
    Union,
}

fn check_support(prior: &DirichletParams, tokens: impl Iterator<Item = usize>) -> Result<()> {
    for t in tokens {
        if t >= prior.len() {
            return Err(Error::TokenOutOfRange {
                index: t,
                size: prior.len(),
            });
        }
    }
    Ok(())
}

/// `ln P(T* | T)` in closed form.
pub fn ln_generative_probability(
    prior: &DirichletParams,
    tstar: &TokenSet,
    t: &TokenSet,
    mode: AlphaTotal,
) -> Result<f64> {
    check_support(prior, tstar.iter().chain(t.iter()))?;
    let a = prior.alphas();
    let alpha_total = match mode {
        AlphaTotal::FullVocabulary => prior.total(),
        AlphaTotal::Union => tstar.tokens.union(&t.tokens).map(|&i| a[i]).sum::<f64>(),
    };
    let mut ln_p = 0.0;
    for tok in tstar.iter() {
        ln_p += if t.contains(tok) {
            (a[tok] + 1.0).ln()
        } else {
            a[tok].ln()
        };
    }
    let base = alpha_total + t.len() as f64;
    for j in 0..tstar.len() {
        ln_p -= (base + j as f64).ln();
    }
    Ok(ln_p)
}

/// `P(T* | T)` with the full-vocabulary total.
pub fn generative_probability(
    prior: &DirichletParams,
    tstar: &TokenSet,
    t: &TokenSet,
) -> Result<f64> {
    Ok(ln_generative_probability(prior, tstar, t, AlphaTotal::FullVocabulary)?.exp())
}

/// Product of posterior-mean predictives, updating counts after each token
/// of `tstar`. `t` may contain repeats; each occurrence counts once.
pub fn sequential_oracle(prior: &DirichletParams, tstar: &[usize], t: &[usize]) -> Result<f64> {
    check_support(prior, tstar.iter().chain(t).copied())?;
    let mut alphas = prior.alphas().to_vec();
    for &tok in t {
        alphas[tok] += 1.0;
    }
    let mut total: f64 = alphas.iter().sum();
    let mut p = 1.0;
    for &tok in tstar {
        p *= alphas[tok] / total;
        alphas[tok] += 1.0;
        total += 1.0;
    }
    Ok(p)
}
