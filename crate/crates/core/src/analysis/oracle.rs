use crate::error::{Error, Result};
use crate::model::LinearMeanFieldParams;
use crate::sim::integer_ratio;

/// Exact moments of the linear example under held control.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentPath {
    pub delta: f64,
    pub times: Vec<f64>,
    /// `E x(t)`.
    pub m1: Vec<f64>,
    /// `E x(t)²`.
    pub m2: Vec<f64>,
    /// `E[x(t) x(σ_t)]`.
    pub q: Vec<f64>,
    /// `E x(t)³`.
    pub m3: Vec<f64>,
    /// `E x(t)⁴`.
    pub m4: Vec<f64>,
}

impl MomentPath {
    /// Standard deviation of `(1/N)Σ xᵢ(t)²` for `n` independent draws from
    /// the law at grid index `k`.
    pub fn msq_standard_error(&self, k: usize, n: usize) -> f64 {
        ((self.m4[k] - self.m2[k] * self.m2[k]).max(0.0) / n as f64).sqrt()
    }
}

/// Mixed moments `M_{i,j} = E[x(t)^i x(σ_t)^j]` with `i ≥ 1`, `i + j ≤ 4`.
const PAIRS: [(usize, usize); 10] = [
    (1, 0),
    (1, 1),
    (1, 2),
    (1, 3),
    (2, 0),
    (2, 1),
    (2, 2),
    (3, 0),
    (3, 1),
    (4, 0),
];

const fn slot(i: usize, j: usize) -> usize {
    let mut k = 0;
    while k < PAIRS.len() {
        if PAIRS[k].0 == i && PAIRS[k].1 == j {
            return k;
        }
        k += 1;
    }
    panic!("moment index out of range")
}

/// Solves the closed moment system of the scalar linear model.
///
/// On `[lδ, (l+1)δ)` the held state `y = x(lδ)` is frozen, so with
/// `μ_l = E x(lδ)` and `c(t) = b·m1(t) − k2·μ_l`
///
/// ```text
/// M_{i,j}' = (i a + i(i−1)/2 g²) M_{i,j} + i c(t) M_{i−1,j} − i k1 M_{i−1,j+1}
/// ```
///
/// closes at every total order; `M_{0,j}` are the frozen moments of `y` and
/// `M_{i,j}(lδ) = E x(lδ)^{i+j}`. In particular
///
/// ```text
/// m1' = (a + b) m1 − (k1 + k2) μ_l
/// q'  = a q + b m1 μ_l − k1 s_l − k2 μ_l²
/// m2' = (2a + g²) m2 + 2b m1² − 2k1 q − 2k2 μ_l m1
/// ```
///
/// Integrated by classical RK4 at `grid_dt`.
pub fn moment_ode_oracle(
    params: &LinearMeanFieldParams,
    x0: f64,
    delta: f64,
    t_end: f64,
    grid_dt: f64,
) -> Result<MomentPath> {
    if !(grid_dt.is_finite() && grid_dt > 0.0) {
        return Err(Error::InvalidArgument("grid_dt must be positive".into()));
    }
    let obs_every = integer_ratio(delta / grid_dt)
        .filter(|k| *k >= 1)
        .ok_or_else(|| {
            Error::GridMismatch(format!("grid_dt {grid_dt} does not divide delta {delta}"))
        })?;
    let n_steps = integer_ratio(t_end / grid_dt).ok_or_else(|| {
        Error::GridMismatch(format!("grid_dt {grid_dt} does not divide T {t_end}"))
    })?;
    let LinearMeanFieldParams {
        a,
        b,
        gdiag,
        k1,
        k2,
    } = *params;
    let g2 = gdiag * gdiag;

    type State = [f64; PAIRS.len()];
    // frozen[j] = E y^j
    let rhs = |m: &State, frozen: &[f64; 5]| -> State {
        let c = b * m[slot(1, 0)] - k2 * frozen[1];
        let lower = |i: usize, j: usize| if i == 0 { frozen[j] } else { m[slot(i, j)] };
        let mut out = [0.0; PAIRS.len()];
        for (k, &(i, j)) in PAIRS.iter().enumerate() {
            let fi = i as f64;
            out[k] = (fi * a + 0.5 * fi * (fi - 1.0) * g2) * m[k] + fi * c * lower(i - 1, j)
                - fi * k1 * lower(i - 1, j + 1);
        }
        out
    };
    let axpy = |y: &State, h: f64, k: &State| -> State {
        let mut out = *y;
        for (o, d) in out.iter_mut().zip(k) {
            *o += h * d;
        }
        out
    };

    let mut path = MomentPath {
        delta,
        times: Vec::with_capacity(n_steps + 1),
        m1: Vec::with_capacity(n_steps + 1),
        m2: Vec::with_capacity(n_steps + 1),
        q: Vec::with_capacity(n_steps + 1),
        m3: Vec::with_capacity(n_steps + 1),
        m4: Vec::with_capacity(n_steps + 1),
    };
    let mut m: State = [0.0; PAIRS.len()];
    for (k, &(i, _)) in PAIRS.iter().enumerate() {
        if PAIRS[k].1 == 0 {
            m[k] = x0.powi(i as i32);
        }
    }
    let mut frozen = [1.0; 5];
    let h = grid_dt;
    for step in 0..=n_steps {
        if step % obs_every == 0 {
            for (p, f) in frozen.iter_mut().enumerate().skip(1) {
                *f = m[slot(p, 0)];
            }
            for (k, &(i, j)) in PAIRS.iter().enumerate() {
                m[k] = frozen[i + j];
            }
        }
        path.times.push(step as f64 * grid_dt);
        path.m1.push(m[slot(1, 0)]);
        path.q.push(m[slot(1, 1)]);
        path.m2.push(m[slot(2, 0)]);
        path.m3.push(m[slot(3, 0)]);
        path.m4.push(m[slot(4, 0)]);
        if step == n_steps {
            break;
        }
        let k1v = rhs(&m, &frozen);
        let k2v = rhs(&axpy(&m, h / 2.0, &k1v), &frozen);
        let k3v = rhs(&axpy(&m, h / 2.0, &k2v), &frozen);
        let k4v = rhs(&axpy(&m, h, &k3v), &frozen);
        for i in 0..PAIRS.len() {
            m[i] += h / 6.0 * (k1v[i] + 2.0 * k2v[i] + 2.0 * k3v[i] + k4v[i]);
        }
    }
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uncontrolled_closed_form() {
        let p = LinearMeanFieldParams::reference_uncontrolled();
        let path = moment_ode_oracle(&p, 1.0, 0.01, 1.0, 1e-3).unwrap();
        for (i, &t) in path.times.iter().enumerate() {
            let m1 = (3.0 * t).exp();
            let m2 = 2.0 * (6.0 * t).exp() - (5.0 * t).exp();
            assert!((path.m1[i] - m1).abs() <= 1e-10 * m1);
            assert!((path.m2[i] - m2).abs() <= 1e-10 * m2);
        }
        let last = *path.m2.last().unwrap();
        assert!((last - 658.45).abs() < 0.01, "{last}");
    }

    #[test]
    fn uncontrolled_higher_moments_closed_form() {
        // m3 = (6t − 2)e^{9t} + 3e^{8t}, m4 = 7e^{14t} − (12t + 2)e^{12t} − 4e^{11t}
        let p = LinearMeanFieldParams::reference_uncontrolled();
        let path = moment_ode_oracle(&p, 1.0, 0.01, 1.0, 1e-4).unwrap();
        for (i, &t) in path.times.iter().enumerate() {
            let m3 = (6.0 * t - 2.0) * (9.0 * t).exp() + 3.0 * (8.0 * t).exp();
            let m4 = 7.0 * (14.0 * t).exp()
                - (12.0 * t + 2.0) * (12.0 * t).exp()
                - 4.0 * (11.0 * t).exp();
            assert!((path.m3[i] - m3).abs() <= 1e-9 * m3.abs().max(1.0), "t={t}");
            assert!((path.m4[i] - m4).abs() <= 1e-9 * m4, "t={t}");
        }
    }

    #[test]
    fn noiseless_moments_are_powers_of_the_mean() {
        // deterministic dynamics keep the law a point mass (up to RK4 error)
        let p = LinearMeanFieldParams::new(2.0, 1.0, 0.0, 8.0, 3.0);
        let path = moment_ode_oracle(&p, 1.3, 0.01, 1.0, 1e-3).unwrap();
        for i in 0..path.times.len() {
            let m = path.m1[i];
            assert!((path.m2[i] - m * m).abs() <= 1e-9 * path.m2[0]);
            assert!((path.m4[i] - m.powi(4)).abs() <= 1e-9 * path.m4[0]);
        }
    }

    #[test]
    fn frozen_dynamics_stay_constant() {
        let p = LinearMeanFieldParams::new(0.0, 0.0, 0.0, 0.0, 0.0);
        let path = moment_ode_oracle(&p, 1.5, 0.1, 2.0, 0.01).unwrap();
        assert!(path.m1.iter().all(|v| *v == 1.5));
        assert!(path.m2.iter().all(|v| *v == 2.25));
    }

    #[test]
    fn halving_grid_changes_m2_negligibly() {
        let p = LinearMeanFieldParams::reference_controlled();
        let coarse = moment_ode_oracle(&p, 1.0, 0.01, 3.0, 1e-3).unwrap();
        let fine = moment_ode_oracle(&p, 1.0, 0.01, 3.0, 5e-4).unwrap();
        let (a, b) = (*coarse.m2.last().unwrap(), *fine.m2.last().unwrap());
        assert!(((a - b) / b).abs() < 1e-8, "{a} vs {b}");
    }

    #[test]
    fn moment_invariants_hold_pointwise() {
        let p = LinearMeanFieldParams::reference_controlled();
        let path = moment_ode_oracle(&p, 1.0, 0.01, 3.0, 1e-3).unwrap();
        let obs_every = 10;
        for i in 0..path.times.len() {
            assert!(path.m2[i] >= path.m1[i] * path.m1[i]);
            assert!(path.m4[i] >= path.m2[i] * path.m2[i]);
            let sigma = i - i % obs_every;
            assert!(path.q[i] * path.q[i] <= path.m2[i] * path.m2[sigma] * (1.0 + 1e-12));
        }
    }

    #[test]
    fn misaligned_grid_rejected() {
        let p = LinearMeanFieldParams::reference_controlled();
        assert!(matches!(
            moment_ode_oracle(&p, 1.0, 0.01, 1.0, 3e-3),
            Err(Error::GridMismatch(_))
        ));
    }
}
