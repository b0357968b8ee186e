//! Laplace-domain building blocks: the Caputo derivative symbol, closed-form
//! transforms of the time signals the built-in problems use, and separable
//! space-time transforms for forcing terms.
//!
//! All signals here are real in time, so their transforms obey
//! `û(conj s) = conj(û(s))`; the contour module's half-sum inversion relies
//! on that.

use num_complex::Complex64;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

/// Relative tolerance for the accelerated series in
/// [`sine_tanh_transform`].
const SERIES_REL_TOL: f64 = 1e-13;
/// Hard cap on series terms; reaching it means `s` sits somewhere the series
/// is useless (next to a pole), which the pole guard should have caught.
const SERIES_MAX_TERMS: u64 = 100_000;

/// Caputo derivative symbol: multiplying `û` by `s^α` and subtracting
/// `s^{α-1} u(0)` transforms `D_t^α u`. Returns `(s^α, s^{α-1})`.
///
/// `alpha` must lie in `(0, 1]`; at exactly 1 the symbol reduces to the
/// classical derivative `(s, 1)` with no branch-cut roundoff, so solutions
/// with `alpha = 1` agree with an integer-order solver to machine precision.
pub fn caputo_symbol(s: Complex64, alpha: f64) -> Result<(Complex64, Complex64)> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::param(format!(
            "fractional order must lie in (0, 1], got {alpha}"
        )));
    }
    if alpha == 1.0 {
        return Ok((s, Complex64::new(1.0, 0.0)));
    }
    Ok((s.powf(alpha), s.powf(alpha - 1.0)))
}

/// `L{t^p} = Γ(p+1) / s^{p+1}` for `p > -1`.
pub fn monomial_transform(s: Complex64, power: f64) -> Result<Complex64> {
    if !(power > -1.0) || !power.is_finite() {
        return Err(Error::param(format!(
            "monomial power must exceed -1, got {power}"
        )));
    }
    Ok(gamma(power + 1.0) / s.powf(power + 1.0))
}

/// Transform of `sin(ω₀ t) tanh(a t)`.
///
/// Expanding `tanh(a t) = 1 + 2 Σ_{k≥1} (-1)^k e^{-2 a k t}` termwise gives
///
/// ```text
///   ĝ(s) = ω₀/(s² + ω₀²) + 2 Σ_{k≥1} (-1)^k ω₀ / ((s + 2 a k)² + ω₀²)
/// ```
///
/// a meromorphic function with simple poles at `±iω₀` and `-2ak ± iω₀` and
/// nothing else; away from the poles the series (summed with consecutive-term
/// averaging once past the index where `|s + 2ak|` starts growing) defines
/// the transform everywhere, including left of the abscissa of convergence.
/// Evaluation within `1e-9 ω₀` of a pole is refused.
pub fn sine_tanh_transform(s: Complex64, omega0: f64, steepness: f64) -> Result<Complex64> {
    if !(omega0 > 0.0) || !omega0.is_finite() || !(steepness > 0.0) || !steepness.is_finite() {
        return Err(Error::param(format!(
            "sine-tanh signal needs positive finite frequency and steepness, \
             got omega0 = {omega0}, steepness = {steepness}"
        )));
    }
    let a = steepness;
    let guard = 1e-9 * omega0;
    let near_pole = |shift: f64| -> bool {
        let z = s + Complex64::new(shift, 0.0);
        (z - Complex64::new(0.0, omega0)).norm() < guard
            || (z + Complex64::new(0.0, omega0)).norm() < guard
    };
    if near_pole(0.0) {
        return Err(Error::TransformPole { s });
    }
    // Poles at -2ak ± iω₀ sit near index k ≈ -Re(s) / 2a.
    if s.re < 0.0 {
        let k_near = (-s.re / (2.0 * a)).round();
        for k in [k_near - 1.0, k_near, k_near + 1.0] {
            if k >= 1.0 && near_pole(2.0 * a * k) {
                return Err(Error::TransformPole { s });
            }
        }
    }
    let term = |k: f64, sign: f64| -> Complex64 {
        let z = s + Complex64::new(2.0 * a * k, 0.0);
        2.0 * sign * omega0 / (z * z + omega0 * omega0)
    };
    let mut partial = omega0 / (s * s + omega0 * omega0);
    // Past this index the shifted arguments grow monotonically and the terms
    // alternate with slowly varying magnitude, which is what the averaging
    // step needs.
    let k_min = ((s.norm() + omega0) / (2.0 * a)).ceil() as u64 + 4;
    let mut sign = -1.0;
    let mut estimate = partial + term(1.0, sign) * 0.5;
    let mut calm_passes = 0u32;
    for k in 1..=SERIES_MAX_TERMS {
        let t_k = term(k as f64, sign);
        partial += t_k;
        sign = -sign;
        let next = partial + term((k + 1) as f64, sign) * 0.5;
        let step = (next - estimate).norm();
        estimate = next;
        if k >= k_min {
            if step <= SERIES_REL_TOL * estimate.norm().max(f64::MIN_POSITIVE) {
                calm_passes += 1;
                if calm_passes >= 2 {
                    return Ok(estimate);
                }
            } else {
                calm_passes = 0;
            }
        }
    }
    log::warn!(
        "sine-tanh series hit its {SERIES_MAX_TERMS}-term cap at s = {s}; \
         returning the averaged partial sum"
    );
    Ok(estimate)
}

/// A time signal with a closed-form Laplace transform.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TimeSignal {
    Zero,
    /// `coeff * t^power`.
    Monomial { coeff: f64, power: f64 },
    /// `coeff * D_t^alpha t^power = coeff * Γ(p+1)/Γ(p+1-α) * t^{p-α}`;
    /// transform `coeff * Γ(p+1) / s^{p+1-α}`.
    CaputoMonomial { coeff: f64, power: f64, alpha: f64 },
    /// `sin(omega0 * t) * tanh(steepness * t)`.
    SineTanh { omega0: f64, steepness: f64 },
}

impl TimeSignal {
    pub fn laplace(&self, s: Complex64) -> Result<Complex64> {
        match *self {
            TimeSignal::Zero => Ok(Complex64::new(0.0, 0.0)),
            TimeSignal::Monomial { coeff, power } => Ok(coeff * monomial_transform(s, power)?),
            TimeSignal::CaputoMonomial {
                coeff,
                power,
                alpha,
            } => {
                if !(alpha > 0.0 && alpha <= 1.0) {
                    return Err(Error::param(format!(
                        "fractional order must lie in (0, 1], got {alpha}"
                    )));
                }
                if !(power > alpha - 1.0) || !power.is_finite() {
                    return Err(Error::param(format!(
                        "fractional monomial power must exceed alpha - 1, got {power}"
                    )));
                }
                Ok(coeff * gamma(power + 1.0) / s.powf(power + 1.0 - alpha))
            }
            TimeSignal::SineTanh { omega0, steepness } => {
                sine_tanh_transform(s, omega0, steepness)
            }
        }
    }

    /// The signal itself, for residual checks and inversion oracles.
    pub fn eval_time(&self, t: f64) -> f64 {
        match *self {
            TimeSignal::Zero => 0.0,
            TimeSignal::Monomial { coeff, power } => coeff * t.powf(power),
            TimeSignal::CaputoMonomial {
                coeff,
                power,
                alpha,
            } => coeff * gamma(power + 1.0) / gamma(power + 1.0 - alpha) * t.powf(power - alpha),
            TimeSignal::SineTanh { omega0, steepness } => {
                (omega0 * t).sin() * (steepness * t).tanh()
            }
        }
    }

    /// Upper-half-plane poles of the transform with real part not much left
    /// of `min_re`, paired with their residues. For every pole `p` returned,
    /// the conjugate `conj(p)` is a pole with residue `conj(residue)`.
    ///
    /// A margin of two pole spacings past `min_re` is included so that
    /// "barely reachable" poles are always split out rather than left to
    /// wreck the contour quadrature; splitting a pole the contour could have
    /// handled is exact and therefore harmless.
    pub fn upper_poles(&self, min_re: f64) -> Vec<(Complex64, Complex64)> {
        match *self {
            TimeSignal::SineTanh { omega0, steepness } => {
                let a = steepness;
                let mut poles = vec![(
                    Complex64::new(0.0, omega0),
                    Complex64::new(0.0, -0.5),
                )];
                let k_max = (((-min_re).max(0.0) + 4.0 * a) / (2.0 * a)).ceil() as i64;
                for k in 1..=k_max.clamp(0, 128) {
                    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                    poles.push((
                        Complex64::new(-2.0 * a * k as f64, omega0),
                        Complex64::new(0.0, -sign),
                    ));
                }
                poles
            }
            _ => Vec::new(),
        }
    }
}

/// Sum of spatially varying terms with separated time dependence:
/// `F(x_i, s) = Σ_k spatial_k[i] * signal_k(s)`.
#[derive(Clone, Debug, Default)]
pub struct SeparableTransform {
    pub terms: Vec<(Vec<f64>, TimeSignal)>,
}

impl SeparableTransform {
    /// Samples the transform at `s` over all spatial points.
    pub fn sample(&self, s: Complex64, n: usize) -> Result<Vec<Complex64>> {
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for (spatial, signal) in &self.terms {
            debug_assert_eq!(spatial.len(), n, "spatial profile length mismatch");
            let factor = signal.laplace(s)?;
            for (o, &w) in out.iter_mut().zip(spatial) {
                *o += factor * w;
            }
        }
        Ok(out)
    }

    /// The signal in the time domain, for oracles and residual checks.
    pub fn sample_time(&self, t: f64, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for (spatial, signal) in &self.terms {
            let factor = signal.eval_time(t);
            for (o, &w) in out.iter_mut().zip(spatial) {
                *o += factor * w;
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
            || self
                .terms
                .iter()
                .all(|(sp, sig)| matches!(sig, TimeSignal::Zero) || sp.iter().all(|&v| v == 0.0))
    }
}
