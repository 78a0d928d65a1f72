use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Convex cost `θ` applied to the displacement `x − barycenter`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CostSpec {
    /// `θ(d) = d²`
    Quadratic,
    /// `θ(d) = d⁴`
    Quartic,
    /// `θ(d) = |d|^ρ`, `ρ >= 1`
    Power { rho: f64 },
}

impl CostSpec {
    pub fn power(rho: f64) -> Result<Self> {
        let c = CostSpec::Power { rho };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            CostSpec::Power { rho } if !(rho >= 1.0 && rho.is_finite()) => {
                Err(Error::Domain(format!("power cost exponent {rho} must be a finite number >= 1")))
            }
            _ => Ok(()),
        }
    }

    /// Growth exponent `ρ` with `θ(d) <= c (1 + |d|^ρ)`.
    pub fn growth_exponent(&self) -> f64 {
        match *self {
            CostSpec::Quadratic => 2.0,
            CostSpec::Quartic => 4.0,
            CostSpec::Power { rho } => rho,
        }
    }

    pub fn strictly_convex(&self) -> bool {
        self.growth_exponent() > 1.0
    }

    pub fn eval(&self, d: f64) -> f64 {
        match *self {
            CostSpec::Quadratic => d * d,
            CostSpec::Quartic => (d * d) * (d * d),
            CostSpec::Power { rho } => d.abs().powf(rho),
        }
    }

    pub fn right_derivative(&self, d: f64) -> f64 {
        match *self {
            CostSpec::Quadratic => 2.0 * d,
            CostSpec::Quartic => 4.0 * d * d * d,
            CostSpec::Power { rho } if rho == 1.0 => {
                if d >= 0.0 {
                    1.0
                } else {
                    -1.0
                }
            }
            CostSpec::Power { rho } => rho * d.abs().powf(rho - 1.0) * d.signum(),
        }
    }

    pub fn left_derivative(&self, d: f64) -> f64 {
        match *self {
            CostSpec::Power { rho } if rho == 1.0 && d == 0.0 => -1.0,
            _ => self.right_derivative(d),
        }
    }

    /// Lipschitz constant of `θ` on `[−r, r]`.
    pub fn lipschitz_on(&self, r: f64) -> f64 {
        self.right_derivative(r.abs())
    }

    /// Midpoint convexity gap `(θ(a) + θ(b))/2 − θ((a + b)/2)`, nonnegative
    /// for every convex `θ`.
    pub fn convexity_witness(&self, a: f64, b: f64) -> f64 {
        0.5 * (self.eval(a) + self.eval(b)) - self.eval(0.5 * (a + b))
    }

    pub fn name(&self) -> String {
        match *self {
            CostSpec::Quadratic => "quadratic".into(),
            CostSpec::Quartic => "quartic".into(),
            CostSpec::Power { rho } => format!("power({rho})"),
        }
    }
}
