//! Densities on the probability simplex used as priors to approximate.

use serde::{Deserialize, Serialize};

use crate::conjugate::DirichletParams;
use crate::error::{Error, Result};

/// A density `u(p)` on the `(m - 1)`-simplex, taken with respect to Lebesgue
/// measure on the first `m - 1` coordinates, with a declared bound `M`.
///
/// Continuity is the caller's promise; callers of [`SimplexDensity::eval`]
/// only check non-negativity at the points they touch.
pub trait SimplexDensity: Send + Sync {
    fn eval(&self, p: &[f64]) -> f64;

    /// Declared bound `M` with `|u| <= M`.
    fn bound(&self) -> f64;
}

/// Wraps a closure as a [`SimplexDensity`].
pub struct FnDensity<F> {
    f: F,
    bound: f64,
}

impl<F> FnDensity<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    pub fn new(f: F, bound: f64) -> Self {
        Self { f, bound }
    }
}

impl<F> SimplexDensity for FnDensity<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    fn eval(&self, p: &[f64]) -> f64 {
        (self.f)(p)
    }

    fn bound(&self) -> f64 {
        self.bound
    }
}

/// Built-in test densities.
///
/// * `Uniform`: the flat density `Gamma(m) = (m-1)!`.
/// * `BetaProduct { a, b }`: `Dirichlet(a, b, .., b)`; at `m = 2` this is the
///   `Beta(a, b)` density of `p_1`.
/// * `PeakedMixture { concentration }`: equal mixture of two bumps,
///   `Dirichlet(1 + c, 1, .., 1)` and `Dirichlet(1, .., 1, 1 + c)`.
///
/// All parameters must be `>= 1` so the density stays bounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BuiltinDensity {
    Uniform,
    BetaProduct { a: f64, b: f64 },
    PeakedMixture { concentration: f64 },
}

impl BuiltinDensity {
    /// Parses `uniform`, `beta-product` / `beta-product(a,b)` and
    /// `peaked-mixture` / `peaked-mixture(c)`, with parameters either inline
    /// or in `params`.
    pub fn parse(name: &str, params: &[f64]) -> Result<Self> {
        let (base, inline) = match name.find('(') {
            Some(open) => {
                let close = name
                    .rfind(')')
                    .ok_or_else(|| Error::param(format!("unbalanced parentheses in {name:?}")))?;
                let inner = &name[open + 1..close];
                let vals = inner
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| {
                        s.trim()
                            .parse::<f64>()
                            .map_err(|e| Error::param(format!("density parameter {s:?}: {e}")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                (&name[..open], vals)
            }
            None => (name, Vec::new()),
        };
        let params = if inline.is_empty() {
            params.to_vec()
        } else {
            inline
        };
        let d = match base.trim() {
            "uniform" => BuiltinDensity::Uniform,
            "beta-product" => {
                let (a, b) = match params.as_slice() {
                    [] => (2.0, 1.0),
                    [a, b] => (*a, *b),
                    _ => return Err(Error::param("beta-product takes two parameters (a, b)")),
                };
                BuiltinDensity::BetaProduct { a, b }
            }
            "peaked-mixture" => {
                let c = match params.as_slice() {
                    [] => 8.0,
                    [c] => *c,
                    _ => return Err(Error::param("peaked-mixture takes one parameter")),
                };
                BuiltinDensity::PeakedMixture { concentration: c }
            }
            other => return Err(Error::param(format!("unknown density {other:?}"))),
        };
        d.validate()?;
        Ok(d)
    }

    fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v >= 1.0;
        match *self {
            BuiltinDensity::Uniform => Ok(()),
            BuiltinDensity::BetaProduct { a, b } if ok(a) && ok(b) => Ok(()),
            BuiltinDensity::PeakedMixture { concentration }
                if concentration.is_finite() && concentration >= 0.0 =>
            {
                Ok(())
            }
            _ => Err(Error::param(format!(
                "{self:?}: parameters must be >= 1 for a bounded density"
            ))),
        }
    }

    /// Binds the density to a dimension `m`.
    pub fn on_simplex(&self, m: usize) -> Result<BoundDensity> {
        if m < 2 {
            return Err(Error::param(format!("m must be at least 2, got {m}")));
        }
        self.validate()?;
        let components = match *self {
            BuiltinDensity::Uniform => vec![DirichletParams::symmetric(m, 1.0)?],
            BuiltinDensity::BetaProduct { a, b } => {
                let mut alphas = vec![b; m];
                alphas[0] = a;
                vec![DirichletParams::new(alphas)?]
            }
            BuiltinDensity::PeakedMixture { concentration } => {
                let mut first = vec![1.0; m];
                first[0] += concentration;
                let mut last = vec![1.0; m];
                last[m - 1] += concentration;
                vec![DirichletParams::new(first)?, DirichletParams::new(last)?]
            }
        };
        let bound =
            components.iter().map(dirichlet_max_density).sum::<f64>() / components.len() as f64;
        Ok(BoundDensity { components, bound })
    }
}

/// Maximum of a Dirichlet density whose parameters are all `>= 1`.
fn dirichlet_max_density(d: &DirichletParams) -> f64 {
    let m = d.len() as f64;
    let excess = d.total() - m;
    if excess <= 0.0 {
        return d.ln_normalizer().exp();
    }
    let mode: Vec<f64> = d.alphas().iter().map(|&a| (a - 1.0) / excess).collect();
    d.ln_density(&mode).exp()
}

/// A [`BuiltinDensity`] evaluated on a fixed simplex dimension: an
/// equal-weight mixture of Dirichlet densities.
#[derive(Debug, Clone)]
pub struct BoundDensity {
    components: Vec<DirichletParams>,
    bound: f64,
}

impl BoundDensity {
    pub fn dim(&self) -> usize {
        self.components[0].len()
    }
}

impl SimplexDensity for BoundDensity {
    fn eval(&self, p: &[f64]) -> f64 {
        let k = self.components.len() as f64;
        self.components
            .iter()
            .map(|c| c.ln_density(p).exp())
            .sum::<f64>()
            / k
    }

    fn bound(&self) -> f64 {
        self.bound
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_product_at_m2_is_beta_density() {
        let u = BuiltinDensity::parse("beta-product(2,1)", &[])
            .unwrap()
            .on_simplex(2)
            .unwrap();
        for p1 in [0.0, 0.1, 0.5, 0.9, 1.0] {
            assert!((u.eval(&[p1, 1.0 - p1]) - 2.0 * p1).abs() < 1e-12);
        }
        assert!((u.bound() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_is_factorial() {
        let u = BuiltinDensity::Uniform.on_simplex(4).unwrap();
        assert!((u.eval(&[0.25; 4]) - 6.0).abs() < 1e-12);
        assert!((u.bound() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn parse_variants() {
        assert_eq!(
            BuiltinDensity::parse("uniform", &[]).unwrap(),
            BuiltinDensity::Uniform
        );
        assert_eq!(
            BuiltinDensity::parse("beta-product", &[3.0, 2.0]).unwrap(),
            BuiltinDensity::BetaProduct { a: 3.0, b: 2.0 }
        );
        assert_eq!(
            BuiltinDensity::parse("peaked-mixture(4)", &[]).unwrap(),
            BuiltinDensity::PeakedMixture { concentration: 4.0 }
        );
        assert!(BuiltinDensity::parse("beta-product(0.5,1)", &[]).is_err());
        assert!(BuiltinDensity::parse("gaussian", &[]).is_err());
    }

    #[test]
    fn peaked_bound_dominates_values() {
        let u = BuiltinDensity::PeakedMixture { concentration: 6.0 }
            .on_simplex(3)
            .unwrap();
        for p in [[1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.3, 0.3, 0.4]] {
            assert!(u.eval(&p) <= u.bound() + 1e-9);
        }
    }
}
