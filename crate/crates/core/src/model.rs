//! Coefficients `f`, `g`, `u` of the controlled McKean–Vlasov system
//!
//! ```text
//! dx(t) = (f(x(t), μ_t) + u(x(σ_t), μ_{σ_t})) dt + g(x(t), μ_t) dB(t)
//! ```
//!
//! Models see the law only through a [`MeasureSummary`], which keeps the
//! per-step measure cost at O(N).

use crate::error::{Error, Result};
use crate::measure::MeasureSummary;

/// Drift `f`, diffusion `g` (a `d × m` matrix, row-major) and feedback
/// control `u`. Evaluations must be pure.
pub trait McKeanVlasovModel: Send + Sync {
    fn state_dim(&self) -> usize;
    fn noise_dim(&self) -> usize;
    fn drift(&self, x: &[f64], mu: &MeasureSummary, out: &mut [f64]);
    fn diffusion(&self, x: &[f64], mu: &MeasureSummary, out: &mut [f64]);
    fn control(&self, x: &[f64], mu: &MeasureSummary, out: &mut [f64]);
}

/// Whether `f(0, δ₀) = g(0, δ₀) = u(0, δ₀) = 0`.
pub fn has_zero_equilibrium(model: &dyn McKeanVlasovModel) -> bool {
    let d = model.state_dim();
    let m = model.noise_dim();
    let zero = vec![0.0; d];
    let mu = MeasureSummary::dirac_zero(d);
    let mut fd = vec![f64::NAN; d];
    let mut gd = vec![f64::NAN; d * m];
    let mut ud = vec![f64::NAN; d];
    model.drift(&zero, &mu, &mut fd);
    model.diffusion(&zero, &mu, &mut gd);
    model.control(&zero, &mu, &mut ud);
    fd.iter().chain(&gd).chain(&ud).all(|v| *v == 0.0)
}

/// Gains of the scalar linear mean-field model
///
/// ```text
/// f(x, μ) = a·x + b·∫z μ(dz),  g(x, μ) = gdiag·x,  u(x, μ) = −k1·x − k2·∫z μ(dz)
/// ```
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearMeanFieldParams {
    pub a: f64,
    pub b: f64,
    pub gdiag: f64,
    pub k1: f64,
    pub k2: f64,
}

impl LinearMeanFieldParams {
    pub const fn new(a: f64, b: f64, gdiag: f64, k1: f64, k2: f64) -> Self {
        Self {
            a,
            b,
            gdiag,
            k1,
            k2,
        }
    }

    /// `dx = (2x + E x − 8x(σ_t) − 3E x(σ_t)) dt + x dB`, the stabilized
    /// reference example.
    pub const fn reference_controlled() -> Self {
        Self::new(2.0, 1.0, 1.0, 8.0, 3.0)
    }

    /// The same open-loop dynamics with the feedback switched off.
    pub const fn reference_uncontrolled() -> Self {
        Self::new(2.0, 1.0, 1.0, 0.0, 0.0)
    }

    pub fn without_control(self) -> Self {
        Self {
            k1: 0.0,
            k2: 0.0,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("a", self.a),
            ("b", self.b),
            ("gdiag", self.gdiag),
            ("k1", self.k1),
            ("k2", self.k2),
        ] {
            if !v.is_finite() {
                return Err(Error::config(format!("model.{name}"), "must be finite"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearMeanField {
    pub params: LinearMeanFieldParams,
}

pub fn linear_model(params: LinearMeanFieldParams) -> LinearMeanField {
    LinearMeanField { params }
}

impl McKeanVlasovModel for LinearMeanField {
    fn state_dim(&self) -> usize {
        1
    }

    fn noise_dim(&self) -> usize {
        1
    }

    #[inline]
    fn drift(&self, x: &[f64], mu: &MeasureSummary, out: &mut [f64]) {
        out[0] = self.params.a * x[0] + self.params.b * mu.mean[0];
    }

    #[inline]
    fn diffusion(&self, x: &[f64], _mu: &MeasureSummary, out: &mut [f64]) {
        out[0] = self.params.gdiag * x[0];
    }

    #[inline]
    fn control(&self, x: &[f64], mu: &MeasureSummary, out: &mut [f64]) {
        out[0] = -self.params.k1 * x[0] - self.params.k2 * mu.mean[0];
    }
}

/// Lipschitz constants in the squared form
/// `|φ(x,μ) − φ(y,ν)|² ≤ L (|x − y|² + W₂²(μ, ν))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzConstants {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
}

/// Certified constants for the linear model, using `|Δmean| ≤ W₂` and
/// `(p + q)² ≤ 2p² + 2q²`.
pub fn linear_lipschitz_constants(params: &LinearMeanFieldParams) -> LipschitzConstants {
    let p = params;
    LipschitzConstants {
        l1: 2.0 * (p.a * p.a).max(p.b * p.b),
        l2: p.gdiag * p.gdiag,
        l3: 2.0 * (p.k1 * p.k1).max(p.k2 * p.k2),
    }
}

type CoefficientFn = Box<dyn Fn(&[f64], &MeasureSummary, &mut [f64]) + Send + Sync>;

/// A model assembled from closures; its Lipschitz constants must be supplied
/// separately by the caller.
pub struct FnModel {
    state_dim: usize,
    noise_dim: usize,
    drift: CoefficientFn,
    diffusion: CoefficientFn,
    control: CoefficientFn,
}

impl FnModel {
    /// Fails if the coefficients do not vanish at `(0, δ₀)`.
    pub fn new(
        state_dim: usize,
        noise_dim: usize,
        drift: impl Fn(&[f64], &MeasureSummary, &mut [f64]) + Send + Sync + 'static,
        diffusion: impl Fn(&[f64], &MeasureSummary, &mut [f64]) + Send + Sync + 'static,
        control: impl Fn(&[f64], &MeasureSummary, &mut [f64]) + Send + Sync + 'static,
    ) -> Result<Self> {
        if state_dim == 0 || noise_dim == 0 {
            return Err(Error::InvalidArgument(
                "model dimensions must be positive".into(),
            ));
        }
        let model = Self {
            state_dim,
            noise_dim,
            drift: Box::new(drift),
            diffusion: Box::new(diffusion),
            control: Box::new(control),
        };
        if !has_zero_equilibrium(&model) {
            return Err(Error::InvalidArgument(
                "coefficients must vanish at the zero state with the Dirac law at 0".into(),
            ));
        }
        Ok(model)
    }
}

impl std::fmt::Debug for FnModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FnModel")
            .field("state_dim", &self.state_dim)
            .field("noise_dim", &self.noise_dim)
            .finish_non_exhaustive()
    }
}

impl McKeanVlasovModel for FnModel {
    fn state_dim(&self) -> usize {
        self.state_dim
    }

    fn noise_dim(&self) -> usize {
        self.noise_dim
    }

    fn drift(&self, x: &[f64], mu: &MeasureSummary, out: &mut [f64]) {
        (self.drift)(x, mu, out)
    }

    fn diffusion(&self, x: &[f64], mu: &MeasureSummary, out: &mut [f64]) {
        (self.diffusion)(x, mu, out)
    }

    fn control(&self, x: &[f64], mu: &MeasureSummary, out: &mut [f64]) {
        (self.control)(x, mu, out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{wasserstein2_1d, EmpiricalMeasure};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn at(model: &LinearMeanField, x: f64, mean: f64) -> (f64, f64, f64) {
        let mu = MeasureSummary::from_moments(vec![mean], mean * mean);
        let (mut f, mut g, mut u) = ([0.0], [0.0], [0.0]);
        model.drift(&[x], &mu, &mut f);
        model.diffusion(&[x], &mu, &mut g);
        model.control(&[x], &mu, &mut u);
        (f[0], g[0], u[0])
    }

    #[test]
    fn reference_coefficients() {
        let model = linear_model(LinearMeanFieldParams::reference_controlled());
        let (f, g, u) = at(&model, 1.0, 1.0);
        assert_eq!(f, 3.0);
        assert_eq!(g, 1.0);
        assert_eq!(u, -11.0);
        assert_eq!(at(&model, 0.0, 0.0), (0.0, 0.0, 0.0));
        assert!(has_zero_equilibrium(&model));
    }

    #[test]
    fn lipschitz_examples() {
        let c = linear_lipschitz_constants(&LinearMeanFieldParams::reference_controlled());
        assert_eq!((c.l1, c.l2, c.l3), (8.0, 1.0, 128.0));
        let c = linear_lipschitz_constants(&LinearMeanFieldParams::new(0.0, 0.0, 0.0, 0.0, 0.0));
        assert_eq!((c.l1, c.l2, c.l3), (0.0, 0.0, 0.0));
        let c = linear_lipschitz_constants(&LinearMeanFieldParams::new(1.0, 1.0, 1.0, 1.0, 1.0));
        assert_eq!((c.l1, c.l2, c.l3), (2.0, 1.0, 2.0));
    }

    /// Sampling oracle for the three Lipschitz inequalities.
    #[test]
    fn lipschitz_inequalities_hold_on_random_quadruples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for params in [
            LinearMeanFieldParams::reference_controlled(),
            LinearMeanFieldParams::new(1.0, 1.0, 1.0, 1.0, 1.0),
            LinearMeanFieldParams::new(-0.7, 2.5, 0.3, -1.0, 4.0),
        ] {
            let model = linear_model(params);
            let c = linear_lipschitz_constants(&params);
            for _ in 0..10_000 {
                let n = rng.random_range(1..8);
                let mu: Vec<f64> = (0..n).map(|_| rng.random_range(-4.0..4.0)).collect();
                let nu: Vec<f64> = (0..n).map(|_| rng.random_range(-4.0..4.0)).collect();
                let (mu, nu) = (
                    EmpiricalMeasure::from_scalars(&mu).unwrap(),
                    EmpiricalMeasure::from_scalars(&nu).unwrap(),
                );
                let w2 = wasserstein2_1d(&mu, &nu).unwrap().powi(2);
                let x = rng.random_range(-5.0..5.0);
                let y = rng.random_range(-5.0..5.0);
                let (fx, gx, ux) = at(&model, x, mu.mean()[0]);
                let (fy, gy, uy) = at(&model, y, nu.mean()[0]);
                let rhs = (x - y).powi(2) + w2;
                assert!((fx - fy).powi(2) <= c.l1 * rhs);
                assert!((gx - gy).powi(2) <= c.l2 * rhs);
                assert!((ux - uy).powi(2) <= c.l3 * rhs);
            }
        }
    }

    #[test]
    fn fn_model_rejects_nonzero_equilibrium() {
        let bad = FnModel::new(
            1,
            1,
            |_x, _mu, out| out[0] = 1.0,
            |_x, _mu, out| out[0] = 0.0,
            |_x, _mu, out| out[0] = 0.0,
        );
        assert!(bad.is_err());
        let good = FnModel::new(
            1,
            1,
            |x, _mu, out| out[0] = -x[0],
            |_x, _mu, out| out[0] = 0.0,
            |_x, _mu, out| out[0] = 0.0,
        )
        .unwrap();
        assert!(has_zero_equilibrium(&good));
    }
}
