//! Explicit stability constants and smallness conditions on the observation
//! gap `δ`.
//!
//! Everything here is closed-form evaluation plus one-dimensional bisection.
//! `θ` is always taken at its smallest admissible value: `λ₄` decreases in `θ`,
//! so the minimum gives the strongest certificate.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest gap probed when bracketing admissible-gap bounds.
const DELTA_PROBE_MIN: f64 = 1e-12;
/// Bracketing beyond this gap reports an unbounded admissible range.
const DELTA_PROBE_MAX: f64 = 1e6;

/// Lipschitz, Lyapunov and sandwich constants feeding the certificates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionConstants {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub c1: f64,
    pub c2: f64,
    /// Moment order for the holding-error condition.
    pub p: u32,
}

impl ConditionConstants {
    /// Builds constants from the effective quadratic decay coefficient
    /// `γ₁c₁`, which is what the Lyapunov inequality of a concrete model
    /// usually yields directly.
    #[allow(clippy::too_many_arguments)]
    pub fn from_decay_coeff(
        l1: f64,
        l2: f64,
        l3: f64,
        lambda1: f64,
        lambda2: f64,
        decay_coeff: f64,
        gamma2: f64,
        c1: f64,
        c2: f64,
        p: f64,
    ) -> Result<Self> {
        if !(p >= 2.0 && p.fract() == 0.0) {
            return Err(Error::config(
                "constants.p",
                "moment order must be an integer >= 2",
            ));
        }
        let c = Self {
            l1,
            l2,
            l3,
            lambda1,
            lambda2,
            gamma1: decay_coeff / c1,
            gamma2,
            c1,
            c2,
            p: p as u32,
        };
        c.validate()?;
        Ok(c)
    }

    /// Constants of the stabilized linear example: `L = (8, 1, 128)`,
    /// `λ₁ = λ₂ = 1/2`, `γ₁c₁ = 3.5`, `c₁ = 1`, `c₂ = 2`, `p = 2`.
    pub fn reference_example() -> Self {
        Self {
            l1: 8.0,
            l2: 1.0,
            l3: 128.0,
            lambda1: 0.5,
            lambda2: 0.5,
            gamma1: 3.5,
            gamma2: 0.0,
            c1: 1.0,
            c2: 2.0,
            p: 2,
        }
    }

    /// `γ₁c₁`.
    pub fn decay_coeff(&self) -> f64 {
        self.gamma1 * self.c1
    }

    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("constants.L1", self.l1 >= 0.0, "must be >= 0"),
            ("constants.L2", self.l2 >= 0.0, "must be >= 0"),
            ("constants.L3", self.l3 >= 0.0, "must be >= 0"),
            ("constants.lambda1", self.lambda1 > 0.0, "must be > 0"),
            ("constants.lambda2", self.lambda2 > 0.0, "must be > 0"),
            ("constants.decay_coeff", self.gamma1 > 0.0, "must be > 0"),
            ("constants.gamma2", self.gamma2 >= 0.0, "must be >= 0"),
            ("constants.c1", self.c1 > 0.0, "must be > 0"),
            ("constants.c2", self.c2 >= self.c1, "must be >= c1"),
            ("constants.p", self.p >= 2, "must be >= 2"),
        ];
        for (key, ok, msg) in checks {
            if !ok {
                return Err(Error::config(key, msg));
            }
        }
        let all = [
            self.l1,
            self.l2,
            self.l3,
            self.lambda1,
            self.lambda2,
            self.gamma1,
            self.gamma2,
            self.c1,
            self.c2,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("constants", "all constants must be finite"));
        }
        Ok(())
    }
}

/// Burkholder–Davis–Gundy constant `c_p = (p^{p+1} / (2(p−1)^{p−1}))^{p/2}`.
pub fn bdg_constant(p: f64) -> Result<f64> {
    if !(p >= 2.0) {
        return Err(Error::InvalidArgument(format!(
            "BDG constant needs p >= 2, got {p}"
        )));
    }
    Ok((p.powf(p + 1.0) / (2.0 * (p - 1.0).powf(p - 1.0))).powf(p / 2.0))
}

/// Holding-error growth factor
///
/// ```text
/// H(δ,p) = (3^{p−1}δ² 2^{L₁+p/2} + 3^{p−1}c_p δ² 2^{L₂+p/2} + 3^{p−1}δ² 2^{L₂+p/2})
///          · exp(3^{p−1}δ 2^{L₁+p/2} + 3^{p−1}δ c_p 2^{L₂+p/2})
/// ```
pub fn h_delta_p(delta: f64, p: f64, l1: f64, l2: f64) -> Result<f64> {
    let cp = bdg_constant(p)?;
    let s = 3f64.powf(p - 1.0);
    let e1 = 2f64.powf(l1 + p / 2.0);
    let e2 = 2f64.powf(l2 + p / 2.0);
    let d2 = delta * delta;
    let prefactor = s * d2 * e1 + s * cp * d2 * e2 + s * d2 * e2;
    Ok(prefactor * (s * delta * e1 + s * delta * cp * e2).exp())
}

/// `H(δ) = (12δ²L₁ + 6δ²L₃ + 12δL₂) · exp((12δL₁ + 12L₂)δ)`.
pub fn h_delta(delta: f64, l1: f64, l2: f64, l3: f64) -> f64 {
    let d2 = delta * delta;
    (12.0 * d2 * l1 + 6.0 * d2 * l3 + 12.0 * delta * l2)
        * ((12.0 * delta * l1 + 12.0 * l2) * delta).exp()
}

/// Smallest admissible `θ = (1/λ₁ + 1/λ₂) L₃ / (1 − 8L₃δ²)`.
pub fn theta_min(delta: f64, lambda1: f64, lambda2: f64, l3: f64) -> Result<f64> {
    let denom = 1.0 - 8.0 * l3 * delta * delta;
    if !(denom > 0.0) {
        return Err(Error::InfeasibleGap(format!(
            "8 L3 delta^2 = {} >= 1 at delta = {delta}",
            1.0 - denom
        )));
    }
    Ok((1.0 / lambda1 + 1.0 / lambda2) * l3 / denom)
}

/// `λ₄ = γ₁c₁ − 8L₁θδ² − 8L₃θδ² − 2L₂θδ`.
pub fn lambda4(theta: f64, delta: f64, c: &ConditionConstants) -> f64 {
    let d2 = delta * delta;
    c.decay_coeff() - 8.0 * c.l1 * theta * d2 - 8.0 * c.l3 * theta * d2 - 2.0 * c.l2 * theta * delta
}

/// `K = 8θδ²L₃H(δ)/(1 − 2H(δ)) + 4θδ²L₁ + 8θδ²L₃ + 2θδL₂`; needs `H(δ) < 1/2`.
pub fn k_const(theta: f64, delta: f64, c: &ConditionConstants) -> Result<f64> {
    let h = h_delta(delta, c.l1, c.l2, c.l3);
    if !(h < 0.5) {
        return Err(Error::InfeasibleGap(format!(
            "H(delta) = {h} >= 1/2 at delta = {delta}"
        )));
    }
    let d2 = delta * delta;
    Ok(8.0 * theta * d2 * c.l3 * h / (1.0 - 2.0 * h)
        + 4.0 * theta * d2 * c.l1
        + 8.0 * theta * d2 * c.l3
        + 2.0 * theta * delta * c.l2)
}

/// `αKδe^{αδ} + αc₂ − λ₄`; negative exactly for certified rates `α`.
pub fn exponential_residual(alpha: f64, k: f64, delta: f64, c2: f64, lambda4: f64) -> f64 {
    alpha * k * delta * (alpha * delta).exp() + alpha * c2 - lambda4
}

/// Largest `α` with `αKδe^{αδ} + αc₂ − λ₄ < 0`, to relative precision 1e-12.
pub fn alpha_max_from(k: f64, delta: f64, c2: f64, lambda4: f64) -> Result<f64> {
    if !(lambda4 > 0.0) {
        return Err(Error::InfeasibleGap(format!("lambda4 = {lambda4} <= 0")));
    }
    if !(k >= 0.0 && delta >= 0.0 && c2 > 0.0) {
        return Err(Error::InvalidArgument(
            "need K >= 0, delta >= 0, c2 > 0".into(),
        ));
    }
    // the residual is increasing in α and reaches 0 no later than λ₄/c₂
    let (mut lo, mut hi) = (0.0, lambda4 / c2);
    while hi - lo > 1e-12 * hi {
        let mid = 0.5 * (lo + hi);
        if exponential_residual(mid, k, delta, c2, lambda4) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Certified mean-square decay exponent at gap `δ` with `θ = θ_min(δ)`.
pub fn alpha_max(c: &ConditionConstants, delta: f64) -> Result<f64> {
    let theta = theta_min(delta, c.lambda1, c.lambda2, c.l3)?;
    let l4 = lambda4(theta, delta, c);
    let k = k_const(theta, delta, c)?;
    alpha_max_from(k, delta, c.c2, l4)
}

/// Smallness condition on `δ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    /// `8L₃δ² < 1` and `λ₄(θ_min(δ), δ) ≥ 0`.
    Hinf,
    /// `H(δ) < 1/2`.
    Asymptotic,
    /// `H(δ,p) < 1/2^p`.
    Moment(u32),
}

/// Signed distance to the criterion boundary; non-negative iff satisfied.
pub fn criterion_margin(c: &ConditionConstants, criterion: Criterion, delta: f64) -> Result<f64> {
    Ok(match criterion {
        Criterion::Hinf => match theta_min(delta, c.lambda1, c.lambda2, c.l3) {
            Ok(theta) => lambda4(theta, delta, c),
            Err(_) => f64::NEG_INFINITY,
        },
        Criterion::Asymptotic => 0.5 - h_delta(delta, c.l1, c.l2, c.l3),
        Criterion::Moment(p) => 0.5f64.powi(p as i32) - h_delta_p(delta, p as f64, c.l1, c.l2)?,
    })
}

fn satisfied(c: &ConditionConstants, criterion: Criterion, delta: f64) -> Result<bool> {
    let margin = criterion_margin(c, criterion, delta)?;
    Ok(match criterion {
        Criterion::Hinf => margin >= 0.0,
        _ => margin > 0.0,
    })
}

/// Supremum of the admissible gaps for `criterion`, or `f64::INFINITY` when
/// every probed gap is admissible.
pub fn max_delta(c: &ConditionConstants, criterion: Criterion) -> Result<f64> {
    c.validate()?;
    if !satisfied(c, criterion, DELTA_PROBE_MIN)? {
        return Err(Error::InfeasibleGap(format!(
            "{criterion:?} fails even at delta = {DELTA_PROBE_MIN}"
        )));
    }
    let (mut lo, mut hi) = (DELTA_PROBE_MIN, DELTA_PROBE_MIN);
    while satisfied(c, criterion, hi)? {
        lo = hi;
        hi *= 2.0;
        if hi > DELTA_PROBE_MAX {
            return Ok(f64::INFINITY);
        }
    }

    // feasibility must be an initial segment of the scanned range
    let scan_top = 4.0 * hi;
    let steps = 256;
    let mut seen_infeasible = false;
    for i in 0..=steps {
        let delta = DELTA_PROBE_MIN * (scan_top / DELTA_PROBE_MIN).powf(i as f64 / steps as f64);
        let ok = satisfied(c, criterion, delta)?;
        if ok && seen_infeasible {
            return Err(Error::InvalidArgument(format!(
                "{criterion:?} feasibility is not monotone in delta (feasible again at {delta})"
            )));
        }
        seen_infeasible |= !ok;
    }

    while hi - lo > 1e-12 * hi {
        let mid = 0.5 * (lo + hi);
        if satisfied(c, criterion, mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Empirical-measure convergence rate bound `τ(N)` in dimension `d`.
pub fn tau_rate(n: f64, d: usize, constant: f64) -> Result<f64> {
    if !(n >= 2.0) {
        return Err(Error::InvalidArgument(format!(
            "tau(N) needs N >= 2, got {n}"
        )));
    }
    if d == 0 || !(constant > 0.0) {
        return Err(Error::InvalidArgument("need d >= 1 and C > 0".into()));
    }
    Ok(constant
        * match d {
            1..=3 => n.powf(-0.5),
            4 => n.powf(-0.5) * n.ln(),
            _ => n.powf(-2.0 / d as f64),
        })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Feasibility {
    pub hinf: bool,
    pub asymptotic: bool,
    pub moment: bool,
    pub exponential: bool,
}

/// All certificates at one observation gap. Values that do not exist at this
/// gap are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub delta: f64,
    pub p: u32,
    pub theta: Option<f64>,
    pub lambda4: Option<f64>,
    pub h_delta: f64,
    pub h_delta_p: f64,
    pub k: Option<f64>,
    pub alpha_max: Option<f64>,
    /// Bound on the long-run time average of `E|x|²`.
    pub hinf_bound: f64,
    pub delta_max_hinf: Option<f64>,
    pub delta_max_asymptotic: Option<f64>,
    pub delta_max_moment: Option<f64>,
    pub feasible: Feasibility,
}

/// Evaluates every condition at gap `delta`. Infeasibility is reported in the
/// flags, never as an error.
pub fn certify(c: &ConditionConstants, delta: f64) -> Result<StabilityReport> {
    c.validate()?;
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "delta must be positive, got {delta}"
        )));
    }
    let theta = theta_min(delta, c.lambda1, c.lambda2, c.l3).ok();
    let l4 = theta.map(|th| lambda4(th, delta, c));
    let h = h_delta(delta, c.l1, c.l2, c.l3);
    let hp = h_delta_p(delta, c.p as f64, c.l1, c.l2)?;
    let k = theta.and_then(|th| k_const(th, delta, c).ok());
    let alpha = match (k, l4) {
        (Some(k), Some(l4)) if l4 > 0.0 => alpha_max_from(k, delta, c.c2, l4).ok(),
        _ => None,
    };
    let feasible = Feasibility {
        hinf: l4.is_some_and(|v| v >= 0.0),
        asymptotic: h < 0.5,
        moment: hp < 0.5f64.powi(c.p as i32),
        exponential: alpha.is_some_and(|a| a > 0.0),
    };
    Ok(StabilityReport {
        delta,
        p: c.p,
        theta,
        lambda4: l4,
        h_delta: h,
        h_delta_p: hp,
        k,
        alpha_max: alpha,
        hinf_bound: c.gamma2,
        delta_max_hinf: max_delta(c, Criterion::Hinf).ok(),
        delta_max_asymptotic: max_delta(c, Criterion::Asymptotic).ok(),
        delta_max_moment: max_delta(c, Criterion::Moment(c.p)).ok(),
        feasible,
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

impl StabilityReport {
    pub const CSV_HEADER: &'static str =
        "delta,theta,lambda4,h_delta,h_delta_p,K,alpha_max,hinf,asymptotic,moment,exponential";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.delta,
            fmt_opt(self.theta),
            fmt_opt(self.lambda4),
            self.h_delta,
            self.h_delta_p,
            fmt_opt(self.k),
            fmt_opt(self.alpha_max),
            self.feasible.hinf,
            self.feasible.asymptotic,
            self.feasible.moment,
            self.feasible.exponential,
        )
    }

    /// Flat `key=value` block.
    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        let rows: [(&str, String); 15] = [
            ("delta", self.delta.to_string()),
            ("p", self.p.to_string()),
            ("theta", fmt_opt(self.theta)),
            ("lambda4", fmt_opt(self.lambda4)),
            ("h_delta", self.h_delta.to_string()),
            ("h_delta_p", self.h_delta_p.to_string()),
            ("K", fmt_opt(self.k)),
            ("alpha_max", fmt_opt(self.alpha_max)),
            ("hinf_bound", self.hinf_bound.to_string()),
            ("delta_max_hinf", fmt_opt(self.delta_max_hinf)),
            ("delta_max_asymptotic", fmt_opt(self.delta_max_asymptotic)),
            ("delta_max_moment", fmt_opt(self.delta_max_moment)),
            ("feasible_hinf", self.feasible.hinf.to_string()),
            ("feasible_asymptotic", self.feasible.asymptotic.to_string()),
            ("feasible_moment", self.feasible.moment.to_string()),
        ];
        for (k, v) in rows {
            let _ = writeln!(out, "{k}={v}");
        }
        let _ = writeln!(out, "feasible_exponential={}", self.feasible.exponential);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example() -> ConditionConstants {
        ConditionConstants::reference_example()
    }

    fn zero_lipschitz() -> ConditionConstants {
        ConditionConstants {
            l1: 0.0,
            l2: 0.0,
            l3: 0.0,
            ..example()
        }
    }

    #[test]
    fn bdg_values() {
        assert!((bdg_constant(2.0).unwrap() - 4.0).abs() < 1e-12);
        let c4 = (1024.0f64 / 54.0).powi(2);
        assert!((bdg_constant(4.0).unwrap() - c4).abs() < 1e-9 * c4);
        assert!((c4 - 359.6).abs() < 0.05);
        let c6 = bdg_constant(6.0).unwrap();
        assert!(bdg_constant(2.0).unwrap() < bdg_constant(4.0).unwrap() && c4 < c6);
        assert!(bdg_constant(1.5).is_err());
    }

    #[test]
    fn h_delta_p_values() {
        assert_eq!(h_delta_p(0.0, 2.0, 8.0, 1.0).unwrap(), 0.0);
        // p = 2, L = 0 reduces to 36 δ² e^{30δ}
        let v = h_delta_p(0.01, 2.0, 0.0, 0.0).unwrap();
        let hand = 36.0 * 1e-4 * (0.30f64).exp();
        assert!((v - hand).abs() < 1e-15);
        assert!((v - 0.004860).abs() < 1e-6);
        let mut prev = 0.0;
        for i in 1..200 {
            let h = h_delta_p(i as f64 * 1e-4, 2.0, 8.0, 1.0).unwrap();
            assert!(h > prev);
            prev = h;
        }
    }

    #[test]
    fn h_delta_values() {
        assert_eq!(h_delta(0.0, 8.0, 1.0, 128.0), 0.0);
        assert_eq!(h_delta(0.3, 0.0, 0.0, 0.0), 0.0);
        let d: f64 = 1e-3;
        let hand = (12.0 * d * d * 8.0 + 6.0 * d * d * 128.0 + 12.0 * d)
            * ((12.0 * d * 8.0 + 12.0) * d).exp();
        let v = h_delta(d, 8.0, 1.0, 128.0);
        assert_eq!(v, hand);
        assert!((v - 0.01302).abs() < 1e-5);
        let mut prev = 0.0;
        for i in 1..200 {
            let h = h_delta(i as f64 * 1e-4, 8.0, 1.0, 128.0);
            assert!(h > prev);
            prev = h;
        }
    }

    #[test]
    fn theta_min_values() {
        assert_eq!(theta_min(0.01, 0.5, 0.5, 0.0).unwrap(), 0.0);
        let th = theta_min(1e-3, 0.5, 0.5, 128.0).unwrap();
        assert!((th - 512.0 / (1.0 - 1.024e-3)).abs() < 1e-9);
        assert!((th - 512.52).abs() < 0.01);
        let edge = (1.0f64 / 1024.0).sqrt();
        let near = theta_min(edge * (1.0 - 1e-9), 0.5, 0.5, 128.0).unwrap();
        assert!(near > 1e10);
        assert!(matches!(
            theta_min(edge, 0.5, 0.5, 128.0),
            Err(Error::InfeasibleGap(_))
        ));
    }

    #[test]
    fn lambda4_values() {
        let c = example();
        assert_eq!(lambda4(0.0, 0.3, &c), 3.5);
        let th = theta_min(1e-3, 0.5, 0.5, 128.0).unwrap();
        let l4 = lambda4(th, 1e-3, &c);
        assert!((l4 - 1.92).abs() < 0.01 && l4 > 0.0, "{l4}");
        let th = theta_min(0.02, 0.5, 0.5, 128.0).unwrap();
        assert!((th - 867.2).abs() < 0.1);
        assert!(lambda4(th, 0.02, &c) < 0.0);
    }

    #[test]
    fn k_values() {
        let c = example();
        assert_eq!(k_const(0.0, 1e-3, &c).unwrap(), 0.0);
        assert_eq!(k_const(500.0, 0.0, &c).unwrap(), 0.0);
        let d: f64 = 1e-3;
        let th = 512.0 / (1.0 - 8.0 * 128.0 * d * d);
        let h = (12.0 * d * d * 8.0 + 6.0 * d * d * 128.0 + 12.0 * d)
            * ((12.0 * d * 8.0 + 12.0) * d).exp();
        let hand = 8.0 * th * d * d * 128.0 * h / (1.0 - 2.0 * h)
            + 4.0 * th * d * d * 8.0
            + 8.0 * th * d * d * 128.0
            + 2.0 * th * d * 1.0;
        let k = k_const(th, d, &c).unwrap();
        assert!((k - hand).abs() < 1e-12 * hand && k > 0.0);
        assert!(matches!(
            k_const(1.0, 0.1, &c),
            Err(Error::InfeasibleGap(_))
        ));
    }

    #[test]
    fn alpha_values() {
        let a = alpha_max_from(0.0, 0.1, 1.0, 1.0).unwrap();
        assert!((a - 1.0).abs() < 1e-9);
        let c = example();
        let d = 1e-3;
        let alpha = alpha_max(&c, d).unwrap();
        let th = theta_min(d, 0.5, 0.5, 128.0).unwrap();
        let (k, l4) = (k_const(th, d, &c).unwrap(), lambda4(th, d, &c));
        assert!(exponential_residual(alpha, k, d, 2.0, l4) < 0.0);
        assert!(exponential_residual(alpha * (1.0 + 1e-6), k, d, 2.0, l4) > 0.0);
        assert!(alpha > 0.0);
        // regression fixture from the first computation
        assert!((alpha - 0.958).abs() < 1e-3, "{alpha}");
        assert!(alpha_max(&c, 0.02).is_err());
    }

    #[test]
    fn max_delta_values() {
        assert_eq!(
            max_delta(&zero_lipschitz(), Criterion::Asymptotic).unwrap(),
            f64::INFINITY
        );
        let c = example();
        let hinf = max_delta(&c, Criterion::Hinf).unwrap();
        assert!(hinf > 1e-3 && hinf < 0.02, "{hinf}");
        let th = theta_min(hinf, 0.5, 0.5, 128.0).unwrap();
        assert!(lambda4(th, hinf, &c).abs() < 1e-9);

        let m2 = max_delta(&c, Criterion::Moment(2)).unwrap();
        let residual = 2.0 * h_delta_p(m2, 2.0, 8.0, 1.0).unwrap() - 0.5;
        assert!(residual.abs() < 1e-9, "{residual}");

        let asym = max_delta(&c, Criterion::Asymptotic).unwrap();
        assert!((h_delta(asym, 8.0, 1.0, 128.0) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn tau_values() {
        assert!((tau_rate(100.0, 1, 1.0).unwrap() - 0.1).abs() < 1e-15);
        let e2 = std::f64::consts::E.powi(2);
        assert!((tau_rate(e2, 4, 1.0).unwrap() - 2.0 / std::f64::consts::E).abs() < 1e-12);
        assert!((tau_rate(256.0, 8, 1.0).unwrap() - 0.25).abs() < 1e-15);
        assert!(tau_rate(1.0, 1, 1.0).is_err());
    }

    #[test]
    fn certify_zero_lipschitz() {
        let c = zero_lipschitz();
        for delta in [1e-3, 0.01, 0.02] {
            let r = certify(&c, delta).unwrap();
            assert_eq!(r.lambda4, Some(3.5));
            assert!((r.alpha_max.unwrap() - 1.75).abs() < 1e-9);
            assert!(
                r.feasible.hinf
                    && r.feasible.asymptotic
                    && r.feasible.moment
                    && r.feasible.exponential
            );
        }
    }

    #[test]
    fn certify_reference_constants() {
        let c = example();
        let r = certify(&c, 1e-3).unwrap();
        assert!(
            r.feasible.hinf && r.feasible.asymptotic && r.feasible.moment && r.feasible.exponential
        );
        let r = certify(&c, 0.05).unwrap();
        assert!(!r.feasible.hinf);
        assert_eq!(r.theta, None);
        assert_eq!(r.alpha_max, None);
        assert_eq!(certify(&c, 0.05).unwrap(), r);
        assert!(r.to_key_values().contains("theta=NA"));
    }

    #[test]
    fn constants_validation() {
        let bad = ConditionConstants {
            c2: 0.5,
            ..example()
        };
        assert!(bad
            .validate()
            .unwrap_err()
            .to_string()
            .contains("constants.c2"));
        assert!(ConditionConstants::from_decay_coeff(
            8.0, 1.0, 128.0, 0.5, 0.5, 3.5, 0.0, 1.0, 2.0, 1.0
        )
        .is_err());
        let c = ConditionConstants::from_decay_coeff(
            8.0, 1.0, 128.0, 0.5, 0.5, 3.5, 0.0, 1.0, 2.0, 2.0,
        )
        .unwrap();
        assert_eq!(c, example());
    }
}
