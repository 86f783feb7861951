//! Particle system and limit processes driven by the same Brownian paths.
//!
//! The limit process `x^i` replaces the empirical law by the exact law, known
//! here through the moment-ODE oracle; both systems share `ΔB^i` per index so
//! `(1/N)Σ|x^i − x^{i,N}|²` isolates the mean-field approximation error.

use rayon::prelude::*;

use super::{find_divergence, summarize, HeldControl, NoiseStream, SimConfig, PAR_MIN_LEN};
use crate::analysis::MomentPath;
use crate::error::{Error, Result};
use crate::measure::MeasureSummary;
use crate::model::{linear_model, LinearMeanFieldParams, McKeanVlasovModel};

#[derive(Debug, Clone, PartialEq)]
pub struct CoupledErrorPath {
    pub times: Vec<f64>,
    /// Index-averaged squared error at each recorded time.
    pub sq_error: Vec<f64>,
}

impl CoupledErrorPath {
    /// Supremum over the recorded grid.
    pub fn sup(&self) -> f64 {
        self.sq_error.iter().copied().fold(0.0, f64::max)
    }
}

fn check_grid(config: &SimConfig, n_steps: usize, limit: &MomentPath) -> Result<()> {
    if limit.times.len() != n_steps + 1 {
        return Err(Error::GridMismatch(format!(
            "oracle path has {} points, simulation grid has {}",
            limit.times.len(),
            n_steps + 1
        )));
    }
    if (limit.delta - config.delta).abs() > 1e-12 * config.delta {
        return Err(Error::GridMismatch(format!(
            "oracle observation gap {} differs from {}",
            limit.delta, config.delta
        )));
    }
    for (k, &t) in limit.times.iter().enumerate() {
        let expected = config.time(k);
        if (t - expected).abs() > 1e-9 * expected.max(1.0) {
            return Err(Error::GridMismatch(format!(
                "oracle time {t} at index {k}, expected {expected}"
            )));
        }
    }
    Ok(())
}

/// Integrates both systems for the linear model and returns the squared
/// coupling error on the recorded grid.
pub fn run_coupled_pair(
    params: &LinearMeanFieldParams,
    config: &SimConfig,
    limit: &MomentPath,
) -> Result<CoupledErrorPath> {
    let grid = config.grid()?;
    check_grid(config, grid.n_steps, limit)?;
    let model = linear_model(*params);
    if config.x0.len() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            actual: config.x0.len(),
        });
    }
    let n = config.n;
    let dt = config.dt;
    let sqrt_dt = dt.sqrt();

    let mut particles = vec![config.x0[0]; n];
    let mut limits = vec![config.x0[0]; n];
    let mut streams: Vec<NoiseStream> = (0..n)
        .map(|i| NoiseStream::new(config.seed, i as u64, 1))
        .collect();
    let mut held_particles = HeldControl::new(n, 1);
    let mut held_limits = HeldControl::new(n, 1);
    let mut out = CoupledErrorPath {
        times: Vec::new(),
        sq_error: Vec::new(),
    };

    for step in 0..=grid.n_steps {
        let t = config.time(step);
        let empirical = summarize(&particles, 1);
        let law = MeasureSummary::from_moments(vec![limit.m1[step]], limit.m2[step]);
        if step % grid.obs_every == 0 {
            held_particles.refresh(&model, &particles, &empirical, t);
            held_limits.refresh(&model, &limits, &law, t);
        }
        if step % config.record_stride == 0 || step == grid.n_steps {
            let sum: f64 = particles
                .iter()
                .zip(&limits)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            out.times.push(t);
            out.sq_error.push(sum / n as f64);
        }
        if step == grid.n_steps {
            break;
        }

        particles
            .par_iter_mut()
            .zip(limits.par_iter_mut())
            .zip(streams.par_iter_mut())
            .zip(held_particles.values.par_iter())
            .zip(held_limits.values.par_iter())
            .with_min_len(PAR_MIN_LEN)
            .for_each(|((((xp, xl), stream), up), ul)| {
                let mut db = [0.0];
                stream.next_increment(sqrt_dt, &mut db);
                let (mut f, mut g) = ([0.0], [0.0]);
                model.drift(std::slice::from_ref(xp), &empirical, &mut f);
                model.diffusion(std::slice::from_ref(xp), &empirical, &mut g);
                *xp += (f[0] + up) * dt + g[0] * db[0];
                model.drift(std::slice::from_ref(xl), &law, &mut f);
                model.diffusion(std::slice::from_ref(xl), &law, &mut g);
                *xl += (f[0] + ul) * dt + g[0] * db[0];
            });

        for states in [&particles, &limits] {
            if let Some((particle, kind)) = find_divergence(states, 1) {
                return Err(Error::Diverged {
                    kind,
                    time: config.time(step + 1),
                    particle,
                    partial: Box::default(),
                });
            }
        }
    }
    Ok(out)
}
