//! Finite mixtures of Dirichlet distributions.
//!
//! [`approximate_prior`] builds the grid approximation of an arbitrary
//! bounded simplex density: one component `Dirichlet(x_1 + 1, .., x_m + 1)`
//! per composition `x` of `n`, weighted by `u(x / n)` normalised over the
//! grid. Observing a token keeps the mixture a mixture of the same size,
//! with every component's count bumped and weights tilted toward components
//! that predicted the token well ([`DirichletMixture::observe`]).
//!
//! Density arithmetic is done in log space throughout.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::compositions;
use crate::conjugate::{dirichlet_predictive, DirichletParams};
use crate::density::SimplexDensity;
use crate::error::{Error, Result};

/// Version tag written into serialized mixtures.
pub const MIXTURE_FORMAT_VERSION: u32 = 1;

const WEIGHT_SUM_TOL: f64 = 1e-10;
const SIMPLEX_TOL: f64 = 1e-9;
/// Grid density values below this are treated as exactly zero.
const DENSITY_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq)]
pub struct DirichletMixture {
    components: Vec<DirichletParams>,
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct MixtureDoc {
    version: u32,
    m: usize,
    #[serde(rename = "K")]
    k: usize,
    weights: Vec<f64>,
    components: Vec<Vec<f64>>,
}

impl DirichletMixture {
    pub fn new(components: Vec<DirichletParams>, weights: Vec<f64>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::param("mixture needs at least one component"));
        }
        if components.len() != weights.len() {
            return Err(Error::LengthMismatch {
                expected: components.len(),
                got: weights.len(),
            });
        }
        let m = components[0].len();
        if let Some(c) = components.iter().find(|c| c.len() != m) {
            return Err(Error::LengthMismatch {
                expected: m,
                got: c.len(),
            });
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::param(
                "mixture weights must be finite and non-negative",
            ));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::param(format!("mixture weights sum to {sum}, not 1")));
        }
        Ok(Self {
            components,
            weights,
        })
    }

    /// Single-component mixture.
    pub fn single(component: DirichletParams) -> Self {
        Self {
            components: vec![component],
            weights: vec![1.0],
        }
    }

    pub fn components(&self) -> &[DirichletParams] {
        &self.components
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Number of components `K`.
    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Vocabulary size `m`.
    pub fn dim(&self) -> usize {
        self.components[0].len()
    }

    /// `sum_k w_k Dirichlet(p | alpha_k)`.
    pub fn density(&self, p: &[f64]) -> Result<f64> {
        check_simplex(p, self.dim())?;
        let logs: Vec<f64> = self
            .components
            .iter()
            .zip(&self.weights)
            .filter(|(_, &w)| w > 0.0)
            .map(|(c, &w)| w.ln() + c.ln_density(p))
            .collect();
        Ok(log_sum_exp(&logs).exp())
    }

    /// Posterior after observing token `j` (0-based).
    ///
    /// Returns the updated mixture and the marginal probability of `j`,
    /// `D = sum_k w_k alpha_kj / alpha_k+`.
    pub fn observe(&self, j: usize) -> Result<(DirichletMixture, f64)> {
        let m = self.dim();
        if j >= m {
            return Err(Error::TokenOutOfRange { index: j, size: m });
        }
        let tilted: Vec<f64> = self
            .components
            .iter()
            .zip(&self.weights)
            .map(|(c, &w)| w * c.alphas()[j] / c.total())
            .collect();
        let marginal: f64 = tilted.iter().sum();
        let weights = tilted.iter().map(|t| t / marginal).collect();
        let components = self
            .components
            .iter()
            .map(|c| {
                let mut a = c.alphas().to_vec();
                a[j] += 1.0;
                DirichletParams::new(a)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((
            DirichletMixture {
                components,
                weights,
            },
            marginal,
        ))
    }

    /// Observes a sequence of tokens, returning the final mixture and the
    /// marginal of each step.
    pub fn observe_all(&self, tokens: &[usize]) -> Result<(DirichletMixture, Vec<f64>)> {
        let mut current = self.clone();
        let mut marginals = Vec::with_capacity(tokens.len());
        for &j in tokens {
            let (next, d) = current.observe(j)?;
            marginals.push(d);
            current = next;
        }
        Ok((current, marginals))
    }

    /// Posterior-mean predictive `sum_k w_k alpha_k / alpha_k+`.
    pub fn predictive(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for (c, &w) in self.components.iter().zip(&self.weights) {
            for (o, p) in out.iter_mut().zip(dirichlet_predictive(c)) {
                *o += w * p;
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        let doc = MixtureDoc {
            version: MIXTURE_FORMAT_VERSION,
            m: self.dim(),
            k: self.len(),
            weights: self.weights.clone(),
            components: self
                .components
                .iter()
                .map(|c| c.alphas().to_vec())
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("mixture serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: MixtureDoc =
            serde_json::from_str(s).map_err(|e| Error::Document(format!("mixture: {e}")))?;
        if doc.version != MIXTURE_FORMAT_VERSION {
            return Err(Error::Document(format!(
                "unsupported mixture version {}",
                doc.version
            )));
        }
        if doc.k != doc.components.len() {
            return Err(Error::Document(format!(
                "K = {} but {} components listed",
                doc.k,
                doc.components.len()
            )));
        }
        let components = doc
            .components
            .into_iter()
            .map(DirichletParams::new)
            .collect::<Result<Vec<_>>>()?;
        let mix = Self::new(components, doc.weights)?;
        if mix.dim() != doc.m {
            return Err(Error::Document(format!(
                "m = {} but components have length {}",
                doc.m,
                mix.dim()
            )));
        }
        Ok(mix)
    }
}

fn check_simplex(p: &[f64], m: usize) -> Result<()> {
    if p.len() != m {
        return Err(Error::LengthMismatch {
            expected: m,
            got: p.len(),
        });
    }
    if let Some(v) = p.iter().find(|v| !v.is_finite() || **v < -SIMPLEX_TOL) {
        return Err(Error::InvalidPoint(format!("coordinate {v}")));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::InvalidPoint(format!("coordinates sum to {sum}")));
    }
    Ok(())
}

fn log_sum_exp(logs: &[f64]) -> f64 {
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max.is_infinite() {
        return max;
    }
    max + logs.iter().map(|l| (l - max).exp()).sum::<f64>().ln()
}

fn grid_point(x: &[u32], n: u32) -> Vec<f64> {
    x.iter().map(|&xi| xi as f64 / n as f64).collect()
}

fn grid_weight(u: &dyn SimplexDensity, point: Vec<f64>) -> Result<f64> {
    let v = u.eval(&point);
    if v.is_nan() || v < 0.0 {
        return Err(Error::InvalidDensityValue { value: v, point });
    }
    Ok(if v < DENSITY_FLOOR { 0.0 } else { v })
}

fn grid_component(x: &[u32]) -> DirichletParams {
    DirichletParams::new(x.iter().map(|&xi| xi as f64 + 1.0).collect()).expect("x + 1 is positive")
}

fn normalize(raw: Vec<f64>) -> Result<Vec<f64>> {
    let max = raw.iter().cloned().fold(0.0, f64::max);
    if max <= 0.0 || !max.is_finite() {
        return Err(Error::DegenerateDensity);
    }
    let scaled: Vec<f64> = raw.iter().map(|v| v / max).collect();
    let sum: f64 = scaled.iter().sum();
    Ok(scaled.into_iter().map(|v| v / sum).collect())
}

/// Grid approximation of `u` at resolution `n` over the `(m - 1)`-simplex.
///
/// Every composition contributes a component, including those where `u`
/// vanishes (their weight is zero), so `K = C(n + m - 1, m - 1)`.
pub fn approximate_prior(
    u: &dyn SimplexDensity,
    n: u32,
    m: usize,
    cap: u64,
) -> Result<DirichletMixture> {
    if n == 0 {
        return Err(Error::param("grid resolution n must be at least 1"));
    }
    let mut components = Vec::new();
    let mut raw = Vec::new();
    for x in compositions::enumerate(n, m, cap)? {
        raw.push(grid_weight(u, grid_point(&x, n))?);
        components.push(grid_component(&x));
    }
    let weights = normalize(raw)?;
    Ok(DirichletMixture {
        components,
        weights,
    })
}

/// Draws a composition of `n` into `m` parts uniformly at random
/// (bars placed uniformly among `n + m - 1` slots).
fn sample_composition<R: Rng>(rng: &mut R, n: u32, m: usize) -> Vec<u32> {
    let slots = n as usize + m - 1;
    let mut bars: Vec<usize> = rand::seq::index::sample(rng, slots, m - 1).into_vec();
    bars.sort_unstable();
    let mut out = Vec::with_capacity(m);
    let mut prev = 0usize;
    for b in bars {
        out.push((b - prev) as u32);
        prev = b + 1;
    }
    out.push((slots - prev) as u32);
    out
}

/// Monte Carlo version of [`approximate_prior`] for grids too large to
/// enumerate.
///
/// Samples compositions uniformly, so the self-normalised importance weight
/// of each draw is just `u(x / n)`. Repeated draws of the same composition
/// are merged. Deterministic for a given seed.
pub fn monte_carlo_approximate(
    u: &dyn SimplexDensity,
    n: u32,
    m: usize,
    samples: usize,
    seed: u64,
) -> Result<DirichletMixture> {
    if samples == 0 {
        return Err(Error::param("samples must be at least 1"));
    }
    if n == 0 {
        return Err(Error::param("grid resolution n must be at least 1"));
    }
    if m < 2 {
        return Err(Error::param(format!("m must be at least 2, got {m}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut merged: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
    for _ in 0..samples {
        let x = sample_composition(&mut rng, n, m);
        let w = grid_weight(u, grid_point(&x, n))?;
        *merged.entry(x).or_insert(0.0) += w;
    }
    let (keys, raw): (Vec<_>, Vec<_>) = merged.into_iter().unzip();
    let weights = normalize(raw)?;
    Ok(DirichletMixture {
        components: keys.iter().map(|x| grid_component(x)).collect(),
        weights,
    })
}

/// Draws a point uniformly from the `(m - 1)`-simplex.
pub fn sample_uniform_simplex<R: Rng>(rng: &mut R, m: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..m).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// `(m - 1)!`, the volume reciprocal of the simplex under the density
/// convention used here.
fn simplex_uniform_density(m: usize) -> f64 {
    (1..m).map(|i| i as f64).product()
}

/// Monte Carlo estimate of `integral |mix(p) - u(p)| dp` over the simplex
/// from `samples` uniform points.
pub fn estimate_l1(
    mix: &DirichletMixture,
    u: &dyn SimplexDensity,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let m = mix.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = 0.0;
    for _ in 0..samples {
        let p = sample_uniform_simplex(&mut rng, m);
        acc += (mix.density(&p)? - u.eval(&p)).abs();
    }
    Ok(acc / samples as f64 / simplex_uniform_density(m))
}

/// Monte Carlo estimate of the total mass `integral mix(p) dp`.
pub fn estimate_mass(mix: &DirichletMixture, samples: usize, seed: u64) -> Result<f64> {
    let m = mix.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = 0.0;
    for _ in 0..samples {
        let p = sample_uniform_simplex(&mut rng, m);
        acc += mix.density(&p)?;
    }
    Ok(acc / samples as f64 / simplex_uniform_density(m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compositions::DEFAULT_CAP;
    use crate::density::{BuiltinDensity, FnDensity};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn uniform_gives_equal_weights() {
        let u = BuiltinDensity::Uniform.on_simplex(2).unwrap();
        for n in [1, 4, 8, 13] {
            let mix = approximate_prior(&u, n, 2, DEFAULT_CAP).unwrap();
            assert_eq!(mix.len(), n as usize + 1);
            for w in mix.weights() {
                assert!(close(*w, 1.0 / (n as f64 + 1.0), 1e-15));
            }
        }
    }

    #[test]
    fn beta21_grid_weights() {
        // u(p) = 2 p_1 on the grid x_1 / 4 gives (0, 1/2, 1, 3/2, 2)
        // normalised: (0, .1, .2, .3, .4)
        let u = FnDensity::new(|p: &[f64]| 2.0 * p[0], 2.0);
        let mix = approximate_prior(&u, 4, 2, DEFAULT_CAP).unwrap();
        let mut by_x1: Vec<(f64, f64, f64)> = mix
            .components()
            .iter()
            .zip(mix.weights())
            .map(|(c, &w)| (c.alphas()[0], c.alphas()[1], w))
            .collect();
        by_x1.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let expected = [0.0, 0.1, 0.2, 0.3, 0.4];
        for (i, (a1, a2, w)) in by_x1.iter().enumerate() {
            assert_eq!(*a1, i as f64 + 1.0);
            assert_eq!(*a2, 5.0 - i as f64);
            assert!(close(*w, expected[i], 1e-15));
        }
    }

    #[test]
    fn all_zero_density_is_degenerate() {
        let u = FnDensity::new(|_: &[f64]| 0.0, 0.0);
        assert_eq!(
            approximate_prior(&u, 3, 3, DEFAULT_CAP).unwrap_err(),
            Error::DegenerateDensity
        );
        assert_eq!(
            monte_carlo_approximate(&u, 3, 3, 10, 1).unwrap_err(),
            Error::DegenerateDensity
        );
    }

    #[test]
    fn tiny_density_values_clamp_to_zero() {
        let u = FnDensity::new(|p: &[f64]| if p[0] > 0.5 { 1.0 } else { 1e-310 }, 1.0);
        let mix = approximate_prior(&u, 2, 2, DEFAULT_CAP).unwrap();
        // grid points p_1 = 0, 0.5 clamp; p_1 = 1 carries everything
        let nonzero: Vec<_> = mix.weights().iter().filter(|w| **w > 0.0).collect();
        assert_eq!(nonzero, vec![&1.0]);
    }

    #[test]
    fn negative_density_rejected() {
        let u = FnDensity::new(|p: &[f64]| p[0] - 0.5, 1.0);
        assert!(matches!(
            approximate_prior(&u, 2, 2, DEFAULT_CAP),
            Err(Error::InvalidDensityValue { .. })
        ));
    }

    #[test]
    fn capacity_passes_through() {
        let u = BuiltinDensity::Uniform.on_simplex(8).unwrap();
        assert!(matches!(
            approximate_prior(&u, 64, 8, DEFAULT_CAP),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn uniform_component_density() {
        for m in 2..=6 {
            let mix = DirichletMixture::single(DirichletParams::symmetric(m, 1.0).unwrap());
            let p = vec![1.0 / m as f64; m];
            let gamma_m: f64 = (1..m).map(|i| i as f64).product();
            assert!(close(mix.density(&p).unwrap(), gamma_m, 1e-10));
        }
    }

    #[test]
    fn duplicated_component_matches_single() {
        let c = DirichletParams::new(vec![2.0, 3.5, 1.2]).unwrap();
        let one = DirichletMixture::single(c.clone());
        let two = DirichletMixture::new(vec![c.clone(), c], vec![0.5, 0.5]).unwrap();
        for p in [[0.2, 0.5, 0.3], [0.6, 0.1, 0.3]] {
            assert!(close(
                one.density(&p).unwrap(),
                two.density(&p).unwrap(),
                1e-12
            ));
        }
    }

    #[test]
    fn beta21_mixture_density_at_midpoint() {
        // hand sum: sum_x w_x Beta(0.5 | x+1, 5-x), weights (0,.1,.2,.3,.4)
        // Beta(0.5|a,b) = 0.5^(a+b-2) / B(a,b) with a+b = 6
        // B(2,4)=1/20, B(3,3)=1/30, B(4,2)=1/20, B(5,1)=1/5
        let by_hand = 0.5f64.powi(4) * (0.1 * 20.0 + 0.2 * 30.0 + 0.3 * 20.0 + 0.4 * 5.0);
        let u = FnDensity::new(|p: &[f64]| 2.0 * p[0], 2.0);
        let mix = approximate_prior(&u, 4, 2, DEFAULT_CAP).unwrap();
        assert!(close(mix.density(&[0.5, 0.5]).unwrap(), by_hand, 1e-12));
        assert!(close(by_hand, 1.0, 1e-12));
    }

    #[test]
    fn density_rejects_off_simplex() {
        let mix = DirichletMixture::single(DirichletParams::symmetric(3, 1.0).unwrap());
        assert!(matches!(
            mix.density(&[0.5, 0.5, 0.5]),
            Err(Error::InvalidPoint(_))
        ));
        assert!(matches!(
            mix.density(&[1.1, -0.1, 0.0]),
            Err(Error::InvalidPoint(_))
        ));
        assert!(mix.density(&[0.5, 0.5]).is_err());
        assert!(mix.density(&[0.5 + 5e-10, 0.5, 0.0]).is_ok());
    }

    #[test]
    fn observe_single_component() {
        let c = DirichletParams::new(vec![2.0, 1.0, 3.0]).unwrap();
        let (post, d) = DirichletMixture::single(c).observe(2).unwrap();
        assert_eq!(post.weights(), &[1.0]);
        assert_eq!(post.components()[0].alphas(), &[2.0, 1.0, 4.0]);
        assert!(close(d, 0.5, 1e-15));
    }

    #[test]
    fn observe_two_components_by_hand() {
        let mix = DirichletMixture::new(
            vec![
                DirichletParams::new(vec![2.0, 1.0]).unwrap(),
                DirichletParams::new(vec![1.0, 2.0]).unwrap(),
            ],
            vec![0.5, 0.5],
        )
        .unwrap();
        let before = mix.predictive();
        let (post, d) = mix.observe(0).unwrap();
        assert!(close(d, 0.5, 1e-15));
        assert!(close(post.weights()[0], 2.0 / 3.0, 1e-15));
        assert!(close(post.weights()[1], 1.0 / 3.0, 1e-15));
        assert_eq!(post.components()[0].alphas(), &[3.0, 1.0]);
        assert_eq!(post.components()[1].alphas(), &[2.0, 2.0]);
        let after = post.predictive();
        // 2/3 * 3/4 + 1/3 * 1/2 = 2/3
        assert!(close(after[0], 2.0 / 3.0, 1e-15));
        assert!(after[0] > before[0]);
    }

    #[test]
    fn observe_rejects_bad_token() {
        let mix = DirichletMixture::single(DirichletParams::symmetric(3, 1.0).unwrap());
        assert_eq!(
            mix.observe(3).unwrap_err(),
            Error::TokenOutOfRange { index: 3, size: 3 }
        );
    }

    #[test]
    fn repeated_observation_matches_batch_update_for_k1() {
        use crate::conjugate::{dirichlet_posterior, CountVector};
        let prior = DirichletParams::new(vec![0.3, 1.5, 2.0, 0.7]).unwrap();
        let tokens = [1, 3, 1, 0, 1];
        let (post, _) = DirichletMixture::single(prior.clone())
            .observe_all(&tokens)
            .unwrap();
        let batch =
            dirichlet_posterior(&prior, &CountVector::from_observations(4, &tokens).unwrap())
                .unwrap();
        assert_eq!(post.components()[0], batch);
    }

    #[test]
    fn predictive_cases() {
        let c = DirichletParams::new(vec![2.0, 1.0, 1.0]).unwrap();
        assert_eq!(
            DirichletMixture::single(c.clone()).predictive(),
            dirichlet_predictive(&c)
        );
        let sym = DirichletMixture::new(
            vec![
                DirichletParams::symmetric(4, 0.5).unwrap(),
                DirichletParams::symmetric(4, 3.0).unwrap(),
            ],
            vec![0.5, 0.5],
        )
        .unwrap();
        for p in sym.predictive() {
            assert!(close(p, 0.25, 1e-15));
        }
    }

    #[test]
    fn mc_uniform_m2_predictive_near_half() {
        let u = BuiltinDensity::Uniform.on_simplex(2).unwrap();
        let mix = monte_carlo_approximate(&u, 16, 2, 10_000, 7).unwrap();
        let pred = mix.predictive();
        assert!(close(pred[0], 0.5, 0.02), "{pred:?}");
        assert!(close(pred[1], 0.5, 0.02), "{pred:?}");
    }

    #[test]
    fn mc_matches_enumeration_on_beta21() {
        let u = BuiltinDensity::BetaProduct { a: 2.0, b: 1.0 }
            .on_simplex(2)
            .unwrap();
        let exact = approximate_prior(&u, 16, 2, DEFAULT_CAP)
            .unwrap()
            .predictive();
        let mc = monte_carlo_approximate(&u, 16, 2, 10_000, 11)
            .unwrap()
            .predictive();
        for (a, b) in exact.iter().zip(&mc) {
            assert!(close(*a, *b, 0.02), "{exact:?} vs {mc:?}");
        }
    }

    #[test]
    fn mc_single_sample() {
        let u = BuiltinDensity::Uniform.on_simplex(3).unwrap();
        let mix = monte_carlo_approximate(&u, 5, 3, 1, 3).unwrap();
        assert_eq!(mix.len(), 1);
        assert_eq!(mix.weights(), &[1.0]);
        assert_eq!(mix.components()[0].total(), 5.0 + 3.0);
    }

    #[test]
    fn mc_is_seed_deterministic() {
        let u = BuiltinDensity::PeakedMixture { concentration: 5.0 }
            .on_simplex(4)
            .unwrap();
        let a = monte_carlo_approximate(&u, 20, 4, 2000, 99).unwrap();
        let b = monte_carlo_approximate(&u, 20, 4, 2000, 99).unwrap();
        let c = monte_carlo_approximate(&u, 20, 4, 2000, 100).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn sampled_compositions_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let x = sample_composition(&mut rng, 9, 4);
            assert_eq!(x.len(), 4);
            assert_eq!(x.iter().sum::<u32>(), 9);
        }
    }

    #[test]
    fn json_round_trip_and_validation() {
        let u = BuiltinDensity::BetaProduct { a: 2.0, b: 1.0 }
            .on_simplex(3)
            .unwrap();
        let mix = approximate_prior(&u, 3, 3, DEFAULT_CAP).unwrap();
        let back = DirichletMixture::from_json(&mix.to_json()).unwrap();
        assert_eq!(back, mix);

        let v: serde_json::Value = serde_json::from_str(&mix.to_json()).unwrap();
        assert_eq!(v["version"], 1);
        assert_eq!(v["m"], 3);
        assert_eq!(v["K"], 10);

        let bad = r#"{"version":1,"m":2,"K":1,"weights":[0.5],"components":[[1.0,1.0]]}"#;
        assert!(DirichletMixture::from_json(bad).is_err());
        let wrong_k = r#"{"version":1,"m":2,"K":2,"weights":[1.0],"components":[[1.0,1.0]]}"#;
        assert!(DirichletMixture::from_json(wrong_k).is_err());
        let wrong_v = r#"{"version":9,"m":2,"K":1,"weights":[1.0],"components":[[1.0,1.0]]}"#;
        assert!(DirichletMixture::from_json(wrong_v).is_err());
    }

    #[test]
    fn new_validates() {
        let c = DirichletParams::symmetric(2, 1.0).unwrap();
        assert!(DirichletMixture::new(vec![], vec![]).is_err());
        assert!(DirichletMixture::new(vec![c.clone()], vec![0.9]).is_err());
        assert!(DirichletMixture::new(vec![c.clone()], vec![1.0, 0.0]).is_err());
        let c3 = DirichletParams::symmetric(3, 1.0).unwrap();
        assert!(DirichletMixture::new(vec![c, c3], vec![0.5, 0.5]).is_err());
    }
}
