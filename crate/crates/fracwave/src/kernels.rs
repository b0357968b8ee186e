//! Radial basis kernels and their univariate derivatives.
//!
//! All kernels are smooth, positive-definite (or conditionally so) radial
//! functions of a 1-D displacement `u = x - x_j` with shape parameter
//! `eps > 0`:
//!
//! * multiquadric          `phi(u) = sqrt(1 + (eps u)^2)`
//! * inverse multiquadric  `phi(u) = 1 / sqrt(1 + (eps u)^2)`
//! * gaussian              `phi(u) = exp(-(eps u)^2)`
//!
//! Derivatives up to order 3 are closed-form; order 0 returns the value
//! itself, which the differentiation-matrix code uses as an identity-operator
//! test hook.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelFamily {
    Multiquadric,
    InverseMultiquadric,
    Gaussian,
}

impl KernelFamily {
    pub fn name(self) -> &'static str {
        match self {
            KernelFamily::Multiquadric => "multiquadric",
            KernelFamily::InverseMultiquadric => "inverse-multiquadric",
            KernelFamily::Gaussian => "gaussian",
        }
    }
}

impl std::str::FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "multiquadric" | "mq" => Ok(KernelFamily::Multiquadric),
            "inverse-multiquadric" | "imq" => Ok(KernelFamily::InverseMultiquadric),
            "gaussian" | "ga" => Ok(KernelFamily::Gaussian),
            other => Err(Error::param(format!("unknown kernel family `{other}`"))),
        }
    }
}

/// A kernel family paired with a validated shape parameter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Kernel {
    family: KernelFamily,
    shape: f64,
}

impl Kernel {
    /// Creates a kernel; `shape` must be finite and strictly positive.
    pub fn new(family: KernelFamily, shape: f64) -> Result<Self> {
        if !shape.is_finite() || shape <= 0.0 {
            return Err(Error::param(format!(
                "kernel shape parameter must be finite and > 0, got {shape}"
            )));
        }
        Ok(Kernel { family, shape })
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    /// Kernel value at radial distance `r` (even in `r`).
    pub fn value(&self, r: f64) -> f64 {
        self.derivative(r, 0)
    }

    /// `order`-th derivative with respect to the signed displacement `dx`.
    ///
    /// Supported orders are 0..=3; panics on higher orders (programming
    /// error, not a data error — every call site passes a fixed order).
    pub fn derivative(&self, dx: f64, order: usize) -> f64 {
        let e2 = self.shape * self.shape;
        let u2 = dx * dx;
        match self.family {
            KernelFamily::Multiquadric => {
                // phi = sqrt(1 + (eps u)^2); phi^2 - (eps u)^2 = 1 collapses the
                // textbook forms to single-power expressions.
                let phi = (1.0 + e2 * u2).sqrt();
                match order {
                    0 => phi,
                    1 => e2 * dx / phi,
                    2 => e2 / (phi * phi * phi),
                    3 => -3.0 * e2 * e2 * dx / phi.powi(5),
                    _ => unreachable!("kernel derivative order {order} not supported"),
                }
            }
            KernelFamily::InverseMultiquadric => {
                let phi = (1.0 + e2 * u2).sqrt();
                match order {
                    0 => 1.0 / phi,
                    1 => -e2 * dx / phi.powi(3),
                    2 => -e2 / phi.powi(3) + 3.0 * e2 * e2 * u2 / phi.powi(5),
                    3 => {
                        9.0 * e2 * e2 * dx / phi.powi(5)
                            - 15.0 * e2 * e2 * e2 * u2 * dx / phi.powi(7)
                    }
                    _ => unreachable!("kernel derivative order {order} not supported"),
                }
            }
            KernelFamily::Gaussian => {
                let g = (-e2 * u2).exp();
                match order {
                    0 => g,
                    1 => -2.0 * e2 * dx * g,
                    2 => (4.0 * e2 * e2 * u2 - 2.0 * e2) * g,
                    3 => (12.0 * e2 * e2 * dx - 8.0 * e2 * e2 * e2 * u2 * dx) * g,
                    _ => unreachable!("kernel derivative order {order} not supported"),
                }
            }
        }
    }
}
