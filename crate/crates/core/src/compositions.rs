//! Weak compositions of `n` into `m` non-negative parts: the lattice
//! `{x : x_i >= 0, sum x_i = n}` that indexes the grid of the mixture
//! approximation.

use crate::error::{Error, Result};

/// Default upper bound on the number of compositions enumerated exactly.
pub const DEFAULT_CAP: u64 = 10_000_000;

/// Environment variable that overrides [`DEFAULT_CAP`].
pub const CAP_ENV_VAR: &str = "MATRIX_BAYES_CAP";

/// Reads the cap from [`CAP_ENV_VAR`], falling back to [`DEFAULT_CAP`].
pub fn cap_from_env() -> Result<u64> {
    match std::env::var(CAP_ENV_VAR) {
        Ok(s) => s
            .trim()
            .parse::<u64>()
            .map_err(|e| Error::param(format!("{CAP_ENV_VAR}={s:?}: {e}"))),
        Err(_) => Ok(DEFAULT_CAP),
    }
}

/// Binomial coefficient, saturating at `u128::MAX`.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step
        let num = (n - i) as u128;
        let den = (i + 1) as u128;
        match acc.checked_mul(num) {
            Some(v) => acc = v / den,
            None => {
                let g = gcd(acc, den);
                match (acc / g).checked_mul(num / (den / g)) {
                    Some(v) => acc = v,
                    None => return u128::MAX,
                }
            }
        }
    }
    acc
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Number of compositions: `C(n + m - 1, m - 1)`.
pub fn count(n: u32, m: usize) -> u128 {
    if m == 0 {
        return 0;
    }
    binomial(n as u64 + m as u64 - 1, m as u64 - 1)
}

/// Lexicographic iterator over compositions, starting at `(0, .., 0, n)`
/// and ending at `(n, 0, .., 0)`.
#[derive(Debug, Clone)]
pub struct Compositions {
    next: Option<Vec<u32>>,
}

impl Iterator for Compositions {
    type Item = Vec<u32>;

    fn next(&mut self) -> Option<Vec<u32>> {
        let current = self.next.take()?;
        let m = current.len();
        let mut succ = current.clone();
        // rightmost position (excluding the last) with mass to its right
        let mut suffix = succ[m - 1];
        let mut pivot = None;
        for i in (0..m - 1).rev() {
            if suffix > 0 {
                pivot = Some(i);
                break;
            }
            suffix += succ[i];
        }
        if let Some(i) = pivot {
            succ[i] += 1;
            for v in &mut succ[i + 1..] {
                *v = 0;
            }
            succ[m - 1] = suffix - 1;
            self.next = Some(succ);
        }
        Some(current)
    }
}

/// Enumerates every composition of `n` into `m` parts exactly once.
///
/// Refuses with [`Error::Capacity`] when the count exceeds `cap`.
pub fn enumerate(n: u32, m: usize, cap: u64) -> Result<Compositions> {
    if m < 2 {
        return Err(Error::param(format!("m must be at least 2, got {m}")));
    }
    let total = count(n, m);
    if total > cap as u128 {
        return Err(Error::Capacity { count: total, cap });
    }
    let mut first = vec![0u32; m];
    first[m - 1] = n;
    Ok(Compositions { next: Some(first) })
}
