//! Deformed Bromwich contours and trapezoidal inversion.
//!
//! The inverse Laplace transform `u(t) = (1/2πi) ∫ e^{st} û(s) ds` is taken
//! over a contour that opens into the left half-plane, so the integrand
//! decays like `exp(Re(s) t)` along the arms and the trapezoidal rule in the
//! contour parameter converges geometrically in the number of nodes.
//!
//! Two families are supported, both parametrized by `ζ` with `s(-ζ) =
//! conj(s(ζ))`:
//!
//! ```text
//!   parabolic:  s(ζ) = v ((1-κ)² - ζ²) + 2 i v ζ (1-κ)
//!   hyperbolic: s(ζ) = ω + v (1 - sin(α - iζ))
//! ```
//!
//! For real-valued time signals `û(conj s) = conj(û(s))`, so the ζ < 0 half
//! of the trapezoid sum is the conjugate of the ζ > 0 half and only nodes
//! `ζ_j = j h, j = 0..=M` are evaluated:
//!
//! ```text
//!   u_h(t) = (h/π) [ ½ Im T_0 + Σ_{j=1..M} Im T_j ],   T_j = e^{s_j t} û(s_j) ṡ_j
//! ```
//!
//! The discarded `Re T_0` term vanishes in exact arithmetic; its magnitude is
//! reported as `imag_residue` so callers can see how much symmetry the
//! numerical samples actually had. Summation order is fixed (ascending j) to
//! keep results bit-identical across runs and thread counts.

use std::f64::consts::{FRAC_PI_4, PI};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest exponent fed to `exp` before a node is declared useless: beyond
/// this the factor `e^{Re(s) t}` overflows f64 and the quadrature sum is
/// garbage rather than merely inaccurate.
pub const EXP_ARG_MAX: f64 = 700.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ContourKind {
    Parabolic,
    Hyperbolic,
}

impl ContourKind {
    pub fn name(&self) -> &'static str {
        match self {
            ContourKind::Parabolic => "parabolic",
            ContourKind::Hyperbolic => "hyperbolic",
        }
    }
}

impl fmt::Display for ContourKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ContourKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "parabolic" | "parabola" | "par" => Ok(ContourKind::Parabolic),
            "hyperbolic" | "hyperbola" | "hyp" => Ok(ContourKind::Hyperbolic),
            other => Err(Error::param(format!("unknown contour kind '{other}'"))),
        }
    }
}

/// A fully determined quadrature contour.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContourSpec {
    pub kind: ContourKind,
    /// Highest node index; the rule uses `m + 1` nodes `j = 0..=m`.
    pub m: usize,
    /// Step in the contour parameter.
    pub h: f64,
    /// Scale: parabola width / hyperbola magnitude.
    pub v: f64,
    /// Parabolic asymmetry, `0 <= kappa < 1`.
    pub kappa: f64,
    /// Hyperbolic real shift.
    pub omega: f64,
    /// Hyperbolic opening half-angle, in `(0, π/2)`.
    pub angle: f64,
    /// Time window `[t0, t1]` the parameters were tuned for.
    pub window: (f64, f64),
}

/// One quadrature node: `s = s(ζ_j)`, `weight = ṡ(ζ_j)`.
#[derive(Clone, Copy, Debug)]
pub struct QuadNode {
    pub j: usize,
    pub s: Complex64,
    pub weight: Complex64,
}

/// Result of one trapezoidal inversion.
#[derive(Clone, Copy, Debug)]
pub struct Inverted {
    pub value: f64,
    /// `(h/2π) |Re T_0|`: the symmetry defect discarded by the half-sum.
    pub imag_residue: f64,
}

impl ContourSpec {
    /// Parabolic contour with the stock asymmetry `kappa = 0`.
    pub fn parabolic(m: usize, h: f64, v: f64, window: (f64, f64)) -> Self {
        ContourSpec {
            kind: ContourKind::Parabolic,
            m,
            h,
            v,
            kappa: 0.0,
            omega: 0.0,
            angle: FRAC_PI_4,
            window,
        }
    }

    /// Hyperbolic contour with the stock shift `omega = 0` and angle `π/4`.
    pub fn hyperbolic(m: usize, h: f64, v: f64, window: (f64, f64)) -> Self {
        ContourSpec {
            kind: ContourKind::Hyperbolic,
            m,
            h,
            v,
            kappa: 0.0,
            omega: 0.0,
            angle: FRAC_PI_4,
            window,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let complain = |msg: String| Err(Error::param(format!("contour: {msg}")));
        if self.m < 1 {
            return complain(format!("need at least 2 nodes, got m = {}", self.m));
        }
        if !(self.h > 0.0) || !self.h.is_finite() {
            return complain(format!("step h must be positive and finite, got {}", self.h));
        }
        if !(self.v > 0.0) || !self.v.is_finite() {
            return complain(format!("scale v must be positive and finite, got {}", self.v));
        }
        if !(0.0..1.0).contains(&self.kappa) {
            return complain(format!("kappa must lie in [0, 1), got {}", self.kappa));
        }
        if !self.omega.is_finite() {
            return complain(format!("omega must be finite, got {}", self.omega));
        }
        if !(self.angle > 0.0 && self.angle < PI / 2.0) {
            return complain(format!("angle must lie in (0, π/2), got {}", self.angle));
        }
        let (t0, t1) = self.window;
        if !(t0 > 0.0 && t1 > t0) || !t1.is_finite() {
            return complain(format!("window must satisfy 0 < t0 < t1, got [{t0}, {t1}]"));
        }
        Ok(())
    }

    /// Contour point and parameter derivative at `ζ`.
    pub fn point(&self, zeta: f64) -> (Complex64, Complex64) {
        match self.kind {
            ContourKind::Parabolic => {
                let c = 1.0 - self.kappa;
                let s = Complex64::new(self.v * (c * c - zeta * zeta), 2.0 * self.v * zeta * c);
                let sdot = Complex64::new(-2.0 * self.v * zeta, 2.0 * self.v * c);
                (s, sdot)
            }
            ContourKind::Hyperbolic => {
                let arg = Complex64::new(self.angle, -zeta);
                let s = Complex64::new(self.omega, 0.0)
                    + Complex64::new(self.v, 0.0) * (Complex64::new(1.0, 0.0) - arg.sin());
                let sdot = Complex64::new(0.0, self.v) * arg.cos();
                (s, sdot)
            }
        }
    }

    /// Quadrature nodes `j = 0..=m` in ascending order.
    pub fn nodes(&self) -> Vec<QuadNode> {
        (0..=self.m)
            .map(|j| {
                let (s, weight) = self.point(j as f64 * self.h);
                QuadNode { j, s, weight }
            })
            .collect()
    }

    /// Most negative real part over the quadrature nodes (attained at the
    /// last node). Everything to the right of this abscissa is territory the
    /// truncated contour can "see"; transform poles there must be handled
    /// separately by the caller.
    pub fn min_real_part(&self) -> f64 {
        self.point(self.m as f64 * self.h).0.re
    }

    /// Real part of the contour vertex (node 0), the rightmost point.
    pub fn max_real_part(&self) -> f64 {
        self.point(0.0).0.re
    }

    /// Per-node inversion coefficients for time `t`:
    /// `c_j = (h/π) e^{s_j t} ṡ_j`, halved at `j = 0`. With these,
    /// `u_h(t) = Σ_j Im(c_j û(s_j))`.
    pub fn time_coefficients(&self, t: f64) -> Result<Vec<Complex64>> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::param(format!(
                "inversion time must be positive and finite, got {t}"
            )));
        }
        if t < self.window.0 || t > self.window.1 {
            log::warn!(
                "inverting at t = {t} outside the contour's tuned window [{}, {}]; \
                 accuracy may degrade",
                self.window.0,
                self.window.1
            );
        }
        let scale = self.h / PI;
        (0..=self.m)
            .map(|j| {
                let (s, sdot) = self.point(j as f64 * self.h);
                let exponent = s.re * t;
                if exponent > EXP_ARG_MAX {
                    return Err(Error::ContourOverflow { node: j, exponent });
                }
                let half = if j == 0 { 0.5 } else { 1.0 };
                Ok((s * t).exp() * sdot * (scale * half))
            })
            .collect()
    }

    /// Inverts one transform sampled at this contour's nodes
    /// (`samples[j] = û(s_j)`).
    pub fn invert(&self, t: f64, samples: &[Complex64]) -> Result<Inverted> {
        let coeffs = self.time_coefficients(t)?;
        Ok(invert_with(&coeffs, samples))
    }

    /// A-priori quadrature error model `E(c, M) = exp(-c M / ln M)` for this
    /// contour's node count.
    pub fn error_estimate(&self, c: f64) -> Result<f64> {
        quadrature_error_model(c, self.m)
    }
}

/// `E(c, M) = exp(-c M / ln M)`; needs `M >= 2` so the logarithm is positive.
pub fn quadrature_error_model(c: f64, m: usize) -> Result<f64> {
    if m < 2 {
        return Err(Error::param(format!(
            "error model needs at least M = 2 nodes, got {m}"
        )));
    }
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::param(format!(
            "error model rate must be positive and finite, got {c}"
        )));
    }
    Ok((-c * m as f64 / (m as f64).ln()).exp())
}

/// Trapezoidal half-sum with precomputed coefficients: `Σ_j Im(c_j û_j)`,
/// accumulated in ascending node order. The first coefficient already carries
/// the trapezoid halving, so the symmetry defect is `|Re(c_0 û_0)|`.
pub fn invert_with(coeffs: &[Complex64], samples: &[Complex64]) -> Inverted {
    debug_assert_eq!(coeffs.len(), samples.len());
    let mut value = 0.0;
    for (c, u) in coeffs.iter().zip(samples) {
        value += (c * u).im;
    }
    let imag_residue = match (coeffs.first(), samples.first()) {
        (Some(c0), Some(u0)) => (c0 * u0).re.abs(),
        _ => 0.0,
    };
    Inverted { value, imag_residue }
}
