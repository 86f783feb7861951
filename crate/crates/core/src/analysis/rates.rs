use crate::error::{Error, Result};
use crate::sim::TrajectoryRecord;
use crate::stability::{h_delta_p, max_delta, ConditionConstants, Criterion};

use super::MomentPath;

/// Times with `m_p` below this fraction of `m_p(0)` are excluded from the
/// holding-error ratio.
pub const HOLDING_FLOOR: f64 = 1e-12;

const MIN_WINDOW_POINTS: usize = 10;

/// A time series of `E|x(t)|²` estimates.
pub trait MeanSquareSeries {
    fn times(&self) -> &[f64];
    fn mean_square(&self) -> &[f64];
}

impl MeanSquareSeries for TrajectoryRecord {
    fn times(&self) -> &[f64] {
        &self.times
    }

    fn mean_square(&self) -> &[f64] {
        &self.msq
    }
}

impl MeanSquareSeries for MomentPath {
    fn times(&self) -> &[f64] {
        &self.times
    }

    fn mean_square(&self) -> &[f64] {
        &self.m2
    }
}

/// Fitted `λ` in `E|x(t)|² ≍ e^{−λt}`; negative for growth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEstimate {
    pub rate: f64,
    pub window: (f64, f64),
    pub r_squared: f64,
    pub stderr: f64,
}

/// `[T/4, T]`: skips the initial transient.
pub fn default_window(t_end: f64) -> (f64, f64) {
    (t_end / 4.0, t_end)
}

/// Least-squares slope of `ln E|x|²` against `t` over `window`, negated.
pub fn estimate_decay_rate(
    series: &dyn MeanSquareSeries,
    window: (f64, f64),
) -> Result<RateEstimate> {
    let (lo, hi) = window;
    let eps = 1e-9 * hi.abs().max(1.0);
    let points: Vec<(f64, f64)> = series
        .times()
        .iter()
        .zip(series.mean_square())
        .filter(|(t, _)| **t >= lo - eps && **t <= hi + eps)
        .map(|(t, v)| (*t, *v))
        .collect();
    if points.len() < MIN_WINDOW_POINTS {
        return Err(Error::NotEstimable(format!(
            "window [{lo}, {hi}] holds {} points, need {MIN_WINDOW_POINTS}",
            points.len()
        )));
    }
    if let Some((t, v)) = points.iter().find(|(_, v)| !(*v > 0.0)) {
        return Err(Error::NotEstimable(format!(
            "mean square {v} at t={t} is not positive"
        )));
    }
    let n = points.len() as f64;
    let t_mean = points.iter().map(|p| p.0).sum::<f64>() / n;
    let y_mean = points.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (t, v) in &points {
        let (dx, dy) = (t - t_mean, v.ln() - y_mean);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let slope = sxy / sxx;
    let sse = (syy - slope * sxy).max(0.0);
    let r_squared = if syy > 0.0 {
        (1.0 - sse / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(RateEstimate {
        rate: -slope,
        window,
        r_squared,
        stderr: (sse / (n - 2.0) / sxx).sqrt(),
    })
}

/// Trapezoidal `(1/T) ∫₀^T E|x(s)|² ds`.
pub fn hinf_time_average(series: &dyn MeanSquareSeries, t_end: f64) -> Result<f64> {
    let times = series.times();
    let values = series.mean_square();
    if !(t_end > 0.0) {
        return Err(Error::InvalidArgument(
            "averaging horizon must be positive".into(),
        ));
    }
    let covered = times.last().copied().unwrap_or(f64::NEG_INFINITY);
    if times.first() != Some(&0.0) || covered < t_end * (1.0 - 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "series covers [0, {covered}], need [0, {t_end}]"
        )));
    }
    let mut integral = 0.0;
    for i in 1..times.len() {
        let (t0, t1) = (times[i - 1], times[i]);
        if t0 >= t_end {
            break;
        }
        let (v0, v1) = (values[i - 1], values[i]);
        if t1 <= t_end {
            integral += 0.5 * (v0 + v1) * (t1 - t0);
        } else {
            let v_end = v0 + (v1 - v0) * (t_end - t0) / (t1 - t0);
            integral += 0.5 * (v0 + v_end) * (t_end - t0);
        }
    }
    Ok(integral / t_end)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoldingCheck {
    /// Largest `E|x(t) − x(σ_t)|^p / E|x(t)|^p` over the admitted times.
    pub max_ratio: f64,
    /// Time at which the maximum ratio occurs.
    pub at_time: f64,
    /// `2^{p−1}H(δ,p) / (1 − 2^{p−1}H(δ,p))`.
    pub bound: f64,
    pub pass: bool,
}

/// Compares the recorded holding error against its relative bound.
pub fn holding_ratio_check(
    record: &TrajectoryRecord,
    p: u32,
    constants: &ConditionConstants,
    delta: f64,
) -> Result<HoldingCheck> {
    if record.moment_order != Some(p) {
        return Err(Error::InvalidArgument(format!(
            "record holds moment order {:?}, need {p}",
            record.moment_order
        )));
    }
    let scaled = 2f64.powi(p as i32 - 1) * h_delta_p(delta, p as f64, constants.l1, constants.l2)?;
    if !(scaled < 1.0) {
        let admissible = max_delta(constants, Criterion::Moment(p))?;
        return Err(Error::InfeasibleGap(format!(
            "2^(p-1) H(delta, p) = {scaled} >= 1 at delta = {delta}; \
             the holding bound needs delta <= {admissible}"
        )));
    }
    let bound = scaled / (1.0 - scaled);
    let floor = HOLDING_FLOOR * record.m_p.first().copied().unwrap_or(0.0);
    let (mut max_ratio, mut at_time) = (0.0, 0.0);
    for ((t, mp), err) in record.times.iter().zip(&record.m_p).zip(&record.hold_err_p) {
        if *mp <= floor || *mp <= 0.0 {
            continue;
        }
        let ratio = err / mp;
        if ratio > max_ratio {
            max_ratio = ratio;
            at_time = *t;
        }
    }
    Ok(HoldingCheck {
        max_ratio,
        at_time,
        bound,
        pass: max_ratio <= bound,
    })
}

/// Pointwise agreement of a simulated `msq` series with the oracle `m2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleAgreement {
    /// Largest `|msq − m2| / max(rel_tol·m2, n_se·stderr)`; at most 1 on pass.
    pub worst_score: f64,
    pub worst_time: f64,
    /// Largest relative deviation `|msq − m2| / m2`.
    pub max_rel_error: f64,
    pub pass: bool,
}

/// Checks `|msq(t) − m2(t)| ≤ max(rel_tol·m2(t), n_se·SE(t))` at every recorded
/// time, with `SE(t) = √((m4(t) − m2(t)²)/n)` the exact Monte Carlo standard
/// error of an `n`-sample mean square. The sample standard error is not used:
/// `x(t)²` is heavy-tailed, and at late times a handful of particles carry the
/// sample fourth moment, which then understates the spread by orders of
/// magnitude. The oracle grid must contain every recorded time.
pub fn compare_with_oracle(
    record: &TrajectoryRecord,
    oracle: &MomentPath,
    n: usize,
    rel_tol: f64,
    n_se: f64,
) -> Result<OracleAgreement> {
    let step = match oracle.times.get(1) {
        Some(t1) => *t1 - oracle.times[0],
        None => {
            return Err(Error::GridMismatch(
                "oracle path has fewer than two points".into(),
            ))
        }
    };
    let mut out = OracleAgreement {
        worst_score: 0.0,
        worst_time: 0.0,
        max_rel_error: 0.0,
        pass: true,
    };
    for i in 0..record.len() {
        let t = record.times[i];
        let k = crate::sim::integer_ratio(t / step)
            .filter(|k| *k < oracle.times.len())
            .ok_or_else(|| {
                Error::GridMismatch(format!("recorded time {t} is not on the oracle grid"))
            })?;
        let m2 = oracle.m2[k];
        let diff = (record.msq[i] - m2).abs();
        let allowed = (rel_tol * m2.abs()).max(n_se * oracle.msq_standard_error(k, n));
        let score = if allowed > 0.0 {
            diff / allowed
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        if score > out.worst_score {
            out.worst_score = score;
            out.worst_time = t;
        }
        if m2 != 0.0 {
            out.max_rel_error = out.max_rel_error.max(diff / m2.abs());
        }
    }
    out.pass = out.worst_score <= 1.0;
    Ok(out)
}
