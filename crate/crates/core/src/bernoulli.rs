//! Bernoulli numbers with the `B₁ = -1/2` convention (`z/(e^z - 1) = Σ B_k z^k / k!`).

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact Bernoulli numbers `B₀..=B_kmax` and their `f64` roundings.
#[derive(Debug, Clone)]
pub struct BernoulliTable {
    exact: Vec<BigRational>,
    values: Vec<f64>,
}

impl BernoulliTable {
    /// Akiyama–Tanigawa in exact rational arithmetic, rounded once at the end.
    pub fn new(kmax: usize) -> Self {
        let mut exact = Vec::with_capacity(kmax + 1);
        let mut row: Vec<BigRational> = Vec::with_capacity(kmax + 1);
        for m in 0..=kmax {
            row.push(BigRational::new(BigInt::one(), BigInt::from(m + 1)));
            for j in (1..=m).rev() {
                let diff = &row[j - 1] - &row[j];
                row[j - 1] = diff * BigInt::from(j);
            }
            exact.push(row[0].clone());
        }
        // the recurrence yields B₁ = +1/2
        if kmax >= 1 {
            exact[1] = -exact[1].clone();
        }
        let values = exact
            .iter()
            .map(|b| b.to_f64().expect("Bernoulli numbers are finite"))
            .collect();
        Self { exact, values }
    }

    pub fn kmax(&self) -> usize {
        self.values.len() - 1
    }

    pub fn exact(&self, k: usize) -> &BigRational {
        &self.exact[k]
    }

    pub fn value(&self, k: usize) -> f64 {
        self.values[k]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `B_k / k!` as `f64`, computed from the exact rational.
    pub fn over_factorial(&self, k: usize) -> f64 {
        let fact: BigInt = (1..=k).fold(BigInt::one(), |acc, i| acc * BigInt::from(i));
        let q = &self.exact[k] / BigRational::from_integer(fact);
        q.to_f64().expect("finite")
    }

    /// `max_k |B_k| ρ^k / k!`, the smallest `M` with `|B_k| <= k! M ρ^{-k}` for `k <= kmax`.
    pub fn majorant_constant(&self, rho: f64) -> f64 {
        (0..=self.kmax())
            .map(|k| self.over_factorial(k).abs() * rho.powi(k as i32))
            .fold(0.0, f64::max)
    }

    /// `Σ_k |B_k| x^k / k!` truncated at `kmax`.
    pub fn absolute_series(&self, x: f64) -> f64 {
        (0..=self.kmax())
            .map(|k| self.over_factorial(k).abs() * x.powi(k as i32))
            .sum()
    }

    pub fn is_zero(&self, k: usize) -> bool {
        self.exact[k].is_zero()
    }

    pub fn is_negative(&self, k: usize) -> bool {
        self.exact[k].is_negative()
    }
}
