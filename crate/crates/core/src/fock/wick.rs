//! Wick-power coefficients and the smearing constant `c_n²`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::quadrature;

/// Coefficients of `:x^k: = Σ_j c_{k,j} c^{2j} x^{k−2j}`.
#[derive(Debug, Clone, PartialEq)]
pub struct WickTable {
    degree: u32,
    /// `c_{k,j}` for `j = 0..=⌊k/2⌋`, with `c_{k,0} = 1`.
    coefficients: Vec<BigRational>,
}

impl WickTable {
    pub fn degree(&self) -> u32 {
        self.degree
    }

    /// Exact `c_{k,j}`; zero outside `0..=⌊k/2⌋`.
    pub fn coefficient(&self, j: usize) -> BigRational {
        self.coefficients.get(j).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn coefficients(&self) -> &[BigRational] {
        &self.coefficients
    }

    pub fn coefficient_f64(&self, j: usize) -> f64 {
        self.coefficient(j).to_f64().unwrap_or(f64::NAN)
    }

    /// `:x^k:` for a Gaussian of variance `variance`.
    pub fn evaluate(&self, x: f64, variance: f64) -> f64 {
        let k = self.degree as i32;
        self.coefficients
            .iter()
            .enumerate()
            .map(|(j, c)| c.to_f64().unwrap_or(f64::NAN) * variance.powi(j as i32) * x.powi(k - 2 * j as i32))
            .sum()
    }
}

/// `c_{k,j} = (−1/2)^j k!/(j!(k−2j)!)` in exact rational arithmetic.
pub fn wick_coefficients(k: u32) -> WickTable {
    let factorial = |n: u32| (1..=n).fold(BigInt::one(), |acc, i| acc * BigInt::from(i));
    let coefficients = (0..=k / 2)
        .map(|j| {
            let num = factorial(k);
            let den = factorial(j) * factorial(k - 2 * j) * BigInt::from(2).pow(j);
            let value = BigRational::new(num, den);
            if j % 2 == 1 {
                -value
            } else {
                value
            }
        })
        .collect();
    WickTable { degree: k, coefficients }
}

/// `c_n² = (1/2π)∫₀^∞ e^{−m²t}/√(t(t + 2/n)) dt`.
///
/// The substitution `t = s²` removes the endpoint singularity.
pub fn smearing_constant(n: u32, m: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("n", "must be at least 1"));
    }
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::invalid("mass", format!("must be positive, got {m}")));
    }
    let b = 2.0 / n as f64;
    let m2 = m * m;
    let value = quadrature::integrate_to_infinity(|s| 2.0 * (-m2 * s * s).exp() / (s * s + b).sqrt(), 0.0, 1e-15, 1e-13)?;
    Ok(value / (2.0 * std::f64::consts::PI))
}
