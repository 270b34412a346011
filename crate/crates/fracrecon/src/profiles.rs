//! Test profiles and their fractional Laplacians in closed quadrature form.
//!
//! Both profiles are even with an explicit Fourier transform, so
//! `(-Delta)^s u (x) = (1/pi) int_0^inf xi^(2s) u^(xi) cos(xi x) dxi`
//! reduces to a smooth 1D integral after the substitution `xi = w^4` near
//! zero (which removes the `xi^(2s)` corner). This route is independent of
//! both discrete operators and doubles as their oracle.

use crate::quad::{corner_integral, simpson};
use crate::real::{r, Real};
use std::str::FromStr;

/// Named analytic test profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    /// `exp(-x^2)`, Fourier transform `sqrt(pi) exp(-xi^2/4)`.
    Gaussian,
    /// `sin(x)/x`, Fourier transform `pi` on `[-1, 1]` and zero outside.
    Sinc,
}

impl Profile {
    pub fn eval<R: Real>(&self, x: R) -> R {
        match self {
            Profile::Gaussian => (-x * x).exp(),
            Profile::Sinc => {
                if x == R::zero() {
                    R::one()
                } else {
                    x.sin() / x
                }
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Profile::Gaussian => "gaussian",
            Profile::Sinc => "sinc",
        }
    }

    /// `(-Delta)^s` of the profile at `x`, by Fourier inversion quadrature.
    pub fn frac_laplacian<R: Real>(&self, x: R, s: R) -> R {
        let two_s = r::<R>(2.0) * s;
        match self {
            Profile::Gaussian => {
                // (1/sqrt(pi)) int_0^16 xi^(2s) exp(-xi^2/4) cos(xi x) dxi
                let inv_sqrt_pi = r::<R>(1.0 / std::f64::consts::PI.sqrt());
                let f = |xi: R| (-xi * xi / r::<R>(4.0)).exp() * (xi * x).cos();
                let head = corner_integral(two_s, R::one(), f, 4000);
                let tail = simpson(R::one(), r::<R>(16.0), 16000, |xi| {
                    xi.powf(two_s) * f(xi)
                });
                inv_sqrt_pi * (head + tail)
            }
            Profile::Sinc => {
                // int_0^1 xi^(2s) cos(xi x) dxi
                corner_integral(two_s, R::one(), |xi| (xi * x).cos(), 4000)
            }
        }
    }
}

impl FromStr for Profile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gaussian" => Ok(Profile::Gaussian),
            "sinc" => Ok(Profile::Sinc),
            other => Err(format!("unknown profile '{other}' (expected gaussian|sinc)")),
        }
    }
}
