//! Normal-inverse-Gamma Gaussian cluster likelihood.
//!
//! Each dimension carries an independent conjugate prior
//! `sigma^2 ~ InvGamma(a, b)`, `mu | sigma^2 ~ N(mu0, sigma^2 / lambda)`, and
//! the cluster marginal is the product of the per-dimension marginals. The
//! closed form follows from the standard conjugate recursions
//! `lambda_n = lambda + n`, `a_n = a + n/2`,
//! `b_n = b + ssd/2 + lambda n (xbar - mu0)^2 / (2 lambda_n)`:
//!
//! `log p = a ln b - a_n ln b_n + lnGamma(a_n) - lnGamma(a)
//!          + (ln lambda - ln lambda_n)/2 - n ln(2 pi)/2`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::{LikelihoodModel, ModelError, PayloadStore};
use crate::numeric::{ln, ln_gamma};
use crate::partition::DataId;

const LN_2PI: f64 = 1.8378770664093453;

#[derive(Clone, Debug)]
pub struct NigGaussianModel {
    mu0: Vec<f64>,
    lambda: f64,
    a: f64,
    b: f64,
    dims: usize,
    id: String,
}

impl NigGaussianModel {
    pub fn new(mu0: Vec<f64>, lambda: f64, a: f64, b: f64) -> Result<Self, ModelError> {
        if mu0.is_empty() {
            return Err(ModelError::InvalidParameter(
                "mu0 must have at least one dimension",
            ));
        }
        if lambda <= 0.0 || !lambda.is_finite() {
            return Err(ModelError::InvalidParameter("lambda must be positive"));
        }
        if a <= 0.0 || !a.is_finite() {
            return Err(ModelError::InvalidParameter("a must be positive"));
        }
        if b <= 0.0 || !b.is_finite() {
            return Err(ModelError::InvalidParameter("b must be positive"));
        }
        if mu0.iter().any(|m| !m.is_finite()) {
            return Err(ModelError::InvalidParameter("mu0 must be finite"));
        }
        let dims = mu0.len();
        let mut id = format!("nig(lambda={lambda};a={a};b={b};mu0=");
        for (i, m) in mu0.iter().enumerate() {
            if i > 0 {
                id.push(',');
            }
            id.push_str(&format!("{m}"));
        }
        id.push(')');
        Ok(NigGaussianModel {
            mu0,
            lambda,
            a,
            b,
            dims,
            id,
        })
    }

    /// Same scalar prior mean in every dimension.
    pub fn isotropic(
        mu0: f64,
        lambda: f64,
        a: f64,
        b: f64,
        dims: usize,
    ) -> Result<Self, ModelError> {
        Self::new(alloc::vec![mu0; dims], lambda, a, b)
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn params(&self) -> (&[f64], f64, f64, f64) {
        (&self.mu0, self.lambda, self.a, self.b)
    }

    /// One-dimensional marginal for `n` values with mean `xbar` and centred
    /// sum of squares `ssd`, under the prior mean `mu0`.
    fn log_marginal_1d(&self, n: usize, xbar: f64, ssd: f64, mu0: f64) -> f64 {
        let nf = n as f64;
        let lambda_n = self.lambda + nf;
        let a_n = self.a + nf / 2.0;
        let dev = xbar - mu0;
        let b_n = self.b + 0.5 * ssd + 0.5 * self.lambda * nf * dev * dev / lambda_n;
        self.a * ln(self.b) - a_n * ln(b_n) + ln_gamma(a_n) - ln_gamma(self.a)
            + 0.5 * (ln(self.lambda) - ln(lambda_n))
            - 0.5 * nf * LN_2PI
    }
}

impl LikelihoodModel for NigGaussianModel {
    fn model_id(&self) -> &str {
        &self.id
    }

    fn log_marginal(&self, members: &[DataId], store: &PayloadStore) -> Result<f64, ModelError> {
        if members.is_empty() {
            return Ok(0.0);
        }
        let n = members.len();
        let mut total = 0.0;
        for d in 0..self.dims {
            // Two-pass mean / centred sum of squares per dimension.
            let mut sum = 0.0;
            for &id in members {
                let row = store.point(id)?;
                if row.len() != self.dims {
                    return Err(ModelError::DimMismatch {
                        id,
                        got: row.len(),
                        want: self.dims,
                    });
                }
                sum += row[d];
            }
            let xbar = sum / n as f64;
            let mut ssd = 0.0;
            for &id in members {
                let dev = store.point(id)?[d] - xbar;
                ssd += dev * dev;
            }
            total += self.log_marginal_1d(n, xbar, ssd, self.mu0[d]);
        }
        Ok(total)
    }
}
