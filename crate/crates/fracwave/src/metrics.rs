//! Error norms and the eventual-periodicity diagnostic.

use crate::error::{Error, Result};

/// Discrete error norms over a node set.
#[derive(Clone, Copy, Debug)]
pub struct ErrorNorms {
    pub linf: f64,
    pub l2: f64,
    pub rms: f64,
}

/// `linf = max |e|`, `l2 = sqrt(Σ e²)`, `rms = l2 / sqrt(n)`.
pub fn error_norms(approx: &[f64], exact: &[f64]) -> Result<ErrorNorms> {
    if approx.is_empty() || approx.len() != exact.len() {
        return Err(Error::param(format!(
            "error norms need equal nonempty samples, got {} and {}",
            approx.len(),
            exact.len()
        )));
    }
    let mut linf = 0.0f64;
    let mut sq = 0.0f64;
    for (&a, &e) in approx.iter().zip(exact) {
        let d = (a - e).abs();
        linf = linf.max(d);
        sq += d * d;
    }
    let l2 = sq.sqrt();
    Ok(ErrorNorms {
        linf,
        l2,
        rms: l2 / (approx.len() as f64).sqrt(),
    })
}

/// How periodic a signal tail looks, measured by comparing samples one
/// period apart.
#[derive(Clone, Copy, Debug)]
pub struct PeriodicityReport {
    pub period: f64,
    /// Sample stride approximating one period.
    pub stride: usize,
    /// `|stride * dt - period| / period`.
    pub misalignment: f64,
    /// `max |u|` over the inspection window.
    pub amplitude: f64,
    /// `max |u(t_k) - u(t_{k - stride})|` over the tail of the window.
    pub defect: f64,
    /// `defect / amplitude` (0 when both vanish).
    pub defect_ratio: f64,
}

/// Fraction of a period the sample stride may be off before the comparison
/// is meaningless.
pub const MISALIGNMENT_LIMIT: f64 = 0.01;

/// Checks whether `values` on the uniform grid `times` repeats with the
/// given `period` across `window = [lo, hi]`.
///
/// The window must span at least two periods so at least one full period of
/// pairwise comparisons exists. The grid spacing need not divide the period
/// exactly; a stride mismatch of up to [`MISALIGNMENT_LIMIT`] of a period is
/// tolerated (and reported), beyond that the call fails.
pub fn periodicity_report(
    times: &[f64],
    values: &[f64],
    period: f64,
    window: (f64, f64),
) -> Result<PeriodicityReport> {
    if times.len() != values.len() || times.len() < 3 {
        return Err(Error::param(format!(
            "periodicity check needs matching time/value samples (>= 3), got {} and {}",
            times.len(),
            values.len()
        )));
    }
    if !(period > 0.0) || !period.is_finite() {
        return Err(Error::param(format!(
            "period must be positive and finite, got {period}"
        )));
    }
    let n = times.len();
    let dt = (times[n - 1] - times[0]) / (n - 1) as f64;
    if !(dt > 0.0) {
        return Err(Error::param(
            "time grid must be strictly increasing".to_string(),
        ));
    }
    for w in times.windows(2) {
        if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt {
            return Err(Error::param(format!(
                "periodicity check needs a uniform time grid; spacing near t = {} \
                 deviates from {dt}",
                w[0]
            )));
        }
    }
    let (lo, hi) = window;
    let slack = 1e-9 * dt;
    if lo < times[0] - slack || hi > times[n - 1] + slack || lo >= hi {
        return Err(Error::param(format!(
            "window [{lo}, {hi}] must lie inside the sampled range [{}, {}]",
            times[0],
            times[n - 1]
        )));
    }
    if hi - lo < 2.0 * period - slack {
        return Err(Error::param(format!(
            "window [{lo}, {hi}] must span at least two periods ({period} each)"
        )));
    }
    let stride = (period / dt).round() as usize;
    if stride == 0 {
        return Err(Error::PeriodMisaligned(format!(
            "grid spacing {dt} is coarser than the period {period}"
        )));
    }
    let misalignment = (stride as f64 * dt - period).abs() / period;
    if misalignment > MISALIGNMENT_LIMIT {
        return Err(Error::PeriodMisaligned(format!(
            "stride {stride} x spacing {dt} misses the period {period} by \
             {:.2}% (limit {:.0}%)",
            misalignment * 100.0,
            MISALIGNMENT_LIMIT * 100.0
        )));
    }
    let mut amplitude = 0.0f64;
    let mut defect = 0.0f64;
    for k in 0..n {
        let t = times[k];
        if t < lo - slack || t > hi + slack {
            continue;
        }
        amplitude = amplitude.max(values[k].abs());
        if k >= stride && times[k - stride] >= lo - slack {
            defect = defect.max((values[k] - values[k - stride]).abs());
        }
    }
    let defect_ratio = if amplitude > 0.0 {
        defect / amplitude
    } else if defect == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(PeriodicityReport {
        period,
        stride,
        misalignment,
        amplitude,
        defect,
        defect_ratio,
    })
}
