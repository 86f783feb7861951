//! Euler–Maruyama integration of the interacting particle system
//!
//! ```text
//! dx^{i,N} = (f(x^{i,N}(t), μ^N_t) + u(x^{i,N}(σ_t), μ^N_{σ_t})) dt + g(x^{i,N}(t), μ^N_t) dB^i
//! ```
//!
//! with `σ_t = ⌊t/δ⌋δ`. Every step is a barrier: reduce the ensemble summary in
//! ascending particle order, refresh the held control at observation instants,
//! then update particles independently. Outputs do not depend on the number of
//! rayon workers.

mod coupled;
pub mod noise;

use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{DivergenceKind, Error, Result};
use crate::measure::{norm_pow, sq_norm, EmpiricalMeasure, MeasureSummary};
use crate::model::McKeanVlasovModel;

pub use coupled::{run_coupled_pair, CoupledErrorPath};
pub use noise::{brownian_increment, NoiseStream};

/// States with any component beyond this magnitude abort the run.
pub const EXPLOSION_THRESHOLD: f64 = 1e12;

/// Minimum particles per rayon task.
const PAR_MIN_LEN: usize = 512;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// Particle count.
    #[serde(rename = "N")]
    pub n: usize,
    pub dt: f64,
    /// Observation gap; must be an integer multiple of `dt`.
    pub delta: f64,
    /// Horizon; must be an integer multiple of `dt`.
    #[serde(rename = "T")]
    pub t_end: f64,
    pub seed: u64,
    /// Common deterministic initial state.
    pub x0: Vec<f64>,
    #[serde(default = "default_stride")]
    pub record_stride: usize,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    /// When set, also record `(1/N)Σ|xᵢ|^p` and `(1/N)Σ|xᵢ(t) − xᵢ(σ_t)|^p`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moment_order: Option<u32>,
}

fn default_stride() -> usize {
    1
}

/// Step counts derived from a validated [`SimConfig`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeGrid {
    pub n_steps: usize,
    /// Steps between observation instants.
    pub obs_every: usize,
}

/// `Some(k)` when `ratio` is within rounding of the integer `k`.
pub(crate) fn integer_ratio(ratio: f64) -> Option<usize> {
    let k = ratio.round();
    ((ratio - k).abs() <= 1e-9 * k.max(1.0) && k >= 0.0).then_some(k as usize)
}

impl SimConfig {
    pub fn new(n: usize, dt: f64, delta: f64, t_end: f64, seed: u64, x0: Vec<f64>) -> Self {
        Self {
            n,
            dt,
            delta,
            t_end,
            seed,
            x0,
            record_stride: 1,
            snapshot_times: Vec::new(),
            moment_order: None,
        }
    }

    pub fn with_record_stride(mut self, stride: usize) -> Self {
        self.record_stride = stride;
        self
    }

    pub fn with_moment_order(mut self, p: u32) -> Self {
        self.moment_order = Some(p);
        self
    }

    pub fn with_snapshots(mut self, times: Vec<f64>) -> Self {
        self.snapshot_times = times;
        self
    }

    /// Time of grid step `k`.
    pub fn time(&self, step: usize) -> f64 {
        step as f64 * self.dt
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        if self.n == 0 {
            return Err(Error::config("sim.N", "particle count must be >= 1"));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::config(
                "sim.dt",
                "step size must be positive and finite",
            ));
        }
        if !(self.delta.is_finite() && self.delta >= self.dt) {
            return Err(Error::config("sim.delta", "observation gap must be >= dt"));
        }
        let obs_every = integer_ratio(self.delta / self.dt).ok_or_else(|| {
            Error::config(
                "sim.delta",
                "observation gap misaligned: delta must be an integer multiple of dt",
            )
        })?;
        if !(self.t_end.is_finite() && self.t_end >= self.delta) {
            return Err(Error::config("sim.T", "horizon must be >= delta"));
        }
        let n_steps = integer_ratio(self.t_end / self.dt)
            .ok_or_else(|| Error::config("sim.T", "horizon must be an integer multiple of dt"))?;
        if self.x0.is_empty() || self.x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::config(
                "sim.x0",
                "initial state must be a non-empty finite vector",
            ));
        }
        if self.record_stride == 0 {
            return Err(Error::config("sim.record_stride", "must be >= 1"));
        }
        if let Some(p) = self.moment_order {
            if p < 2 {
                return Err(Error::config("sim.moment_order", "must be >= 2"));
            }
        }
        for &t in &self.snapshot_times {
            match integer_ratio(t / self.dt) {
                Some(k) if k <= n_steps => {}
                _ => {
                    return Err(Error::config(
                        "sim.snapshot_times",
                        format!("snapshot time {t} is not a grid point in [0, T]"),
                    ))
                }
            }
        }
        Ok(TimeGrid { n_steps, obs_every })
    }

    fn snapshot_steps(&self) -> Vec<usize> {
        let mut steps: Vec<usize> = self
            .snapshot_times
            .iter()
            .filter_map(|t| integer_ratio(t / self.dt))
            .collect();
        steps.sort_unstable();
        steps.dedup();
        steps
    }
}

/// Moment time series of one particle-system run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrajectoryRecord {
    pub dim: usize,
    pub times: Vec<f64>,
    /// Ensemble means.
    pub m1: Vec<Vec<f64>>,
    /// `(1/N)Σ|xᵢ|²`.
    pub msq: Vec<f64>,
    /// Monte Carlo standard error of `msq`.
    pub msq_stderr: Vec<f64>,
    pub moment_order: Option<u32>,
    /// `(1/N)Σ|xᵢ|^p`; empty unless a moment order was requested.
    pub m_p: Vec<f64>,
    /// `(1/N)Σ|xᵢ(t) − xᵢ(σ_t)|^p`; empty unless a moment order was requested.
    pub hold_err_p: Vec<f64>,
    pub snapshots: Vec<(f64, EmpiricalMeasure)>,
}

impl TrajectoryRecord {
    fn new(dim: usize, moment_order: Option<u32>) -> Self {
        Self {
            dim,
            moment_order,
            ..Default::default()
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn csv_header(&self) -> String {
        let mut cols = vec!["t".to_string()];
        cols.extend((0..self.dim).map(|j| format!("m1_{j}")));
        cols.push("msq".into());
        if self.moment_order.is_some() {
            cols.push("mp".into());
            cols.push("hold_err".into());
        }
        cols.join(",")
    }

    /// One row per recorded time; floats in shortest round-trip form.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{}", self.csv_header())?;
        for i in 0..self.len() {
            write!(w, "{}", self.times[i])?;
            for v in &self.m1[i] {
                write!(w, ",{v}")?;
            }
            write!(w, ",{}", self.msq[i])?;
            if self.moment_order.is_some() {
                write!(w, ",{},{}", self.m_p[i], self.hold_err_p[i])?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Control values computed at the latest observation instant, kept constant
/// until the next one.
#[derive(Debug, Clone)]
pub struct HeldControl {
    /// `N × d` control values.
    pub values: Vec<f64>,
    /// States `xᵢ(σ_t)` the control was computed from.
    pub frozen_states: Vec<f64>,
    pub sigma_time: f64,
}

impl HeldControl {
    fn new(n: usize, d: usize) -> Self {
        Self {
            values: vec![0.0; n * d],
            frozen_states: vec![0.0; n * d],
            sigma_time: 0.0,
        }
    }

    fn refresh(
        &mut self,
        model: &dyn McKeanVlasovModel,
        states: &[f64],
        summary: &MeasureSummary,
        t: f64,
    ) {
        let d = model.state_dim();
        self.values
            .par_chunks_mut(d)
            .zip(states.par_chunks(d))
            .with_min_len(PAR_MIN_LEN)
            .for_each(|(u, x)| model.control(x, summary, u));
        self.frozen_states.copy_from_slice(states);
        self.sigma_time = t;
    }
}

/// Ensemble summary reduced in ascending particle order.
pub(crate) fn summarize(states: &[f64], d: usize) -> MeasureSummary {
    let n = states.len() / d;
    let mut mean = vec![0.0; d];
    let mut raw2 = 0.0;
    for x in states.chunks_exact(d) {
        for (m, v) in mean.iter_mut().zip(x) {
            *m += v;
        }
        raw2 += sq_norm(x);
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    MeasureSummary {
        mean,
        raw2: raw2 / n as f64,
        n,
    }
}

/// First particle (by index) whose state is non-finite or beyond the guard.
pub(crate) fn find_divergence(states: &[f64], d: usize) -> Option<(usize, DivergenceKind)> {
    states.chunks_exact(d).enumerate().find_map(|(i, x)| {
        if x.iter().any(|v| !v.is_finite()) {
            Some((i, DivergenceKind::NonFinite))
        } else if x.iter().any(|v| v.abs() > EXPLOSION_THRESHOLD) {
            Some((i, DivergenceKind::Explosion))
        } else {
            None
        }
    })
}

fn record_row(
    rec: &mut TrajectoryRecord,
    t: f64,
    states: &[f64],
    held: &HeldControl,
    summary: &MeasureSummary,
) {
    let d = rec.dim;
    let n = summary.n as f64;
    let mut fourth = 0.0;
    for x in states.chunks_exact(d) {
        fourth += sq_norm(x).powi(2);
    }
    let var = if summary.n > 1 {
        ((fourth / n - summary.raw2 * summary.raw2) * n / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    rec.times.push(t);
    rec.m1.push(summary.mean.clone());
    rec.msq.push(summary.raw2);
    rec.msq_stderr.push((var / n).sqrt());
    if let Some(p) = rec.moment_order {
        let mut mp = 0.0;
        let mut hold = 0.0;
        for (x, xs) in states
            .chunks_exact(d)
            .zip(held.frozen_states.chunks_exact(d))
        {
            mp += norm_pow(sq_norm(x), p);
            let diff: f64 = x.iter().zip(xs).map(|(a, b)| (a - b) * (a - b)).sum();
            hold += norm_pow(diff, p);
        }
        rec.m_p.push(mp / n);
        rec.hold_err_p.push(hold / n);
    }
}

/// Integrates the particle system and records its moments.
pub fn run_particle_system(
    model: &dyn McKeanVlasovModel,
    config: &SimConfig,
) -> Result<TrajectoryRecord> {
    let grid = config.grid()?;
    let d = model.state_dim();
    let m = model.noise_dim();
    if config.x0.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: config.x0.len(),
        });
    }
    let n = config.n;
    let dt = config.dt;
    let sqrt_dt = dt.sqrt();

    let mut states: Vec<f64> = config.x0.iter().copied().cycle().take(n * d).collect();
    let mut streams: Vec<NoiseStream> = (0..n)
        .map(|i| NoiseStream::new(config.seed, i as u64, m))
        .collect();
    let mut held = HeldControl::new(n, d);
    let mut rec = TrajectoryRecord::new(d, config.moment_order);
    let snapshot_steps = config.snapshot_steps();
    let mut next_snapshot = snapshot_steps.iter().peekable();

    for step in 0..=grid.n_steps {
        let t = config.time(step);
        let summary = summarize(&states, d);
        if step % grid.obs_every == 0 {
            held.refresh(model, &states, &summary, t);
        }
        if step % config.record_stride == 0 || step == grid.n_steps {
            record_row(&mut rec, t, &states, &held, &summary);
        }
        if next_snapshot.peek() == Some(&&step) {
            next_snapshot.next();
            rec.snapshots
                .push((t, EmpiricalMeasure::new(states.clone(), d)?));
        }
        if step == grid.n_steps {
            break;
        }

        states
            .par_chunks_mut(d)
            .zip(streams.par_iter_mut())
            .zip(held.values.par_chunks(d))
            .with_min_len(PAR_MIN_LEN)
            .for_each_init(
                || (vec![0.0; d], vec![0.0; d * m], vec![0.0; m]),
                |(f, g, db), ((x, stream), u)| {
                    model.drift(x, &summary, f);
                    model.diffusion(x, &summary, g);
                    stream.next_increment(sqrt_dt, db);
                    for r in 0..d {
                        let noise: f64 = g[r * m..(r + 1) * m]
                            .iter()
                            .zip(db.iter())
                            .map(|(gi, b)| gi * b)
                            .sum();
                        x[r] += (f[r] + u[r]) * dt + noise;
                    }
                },
            );

        if let Some((particle, kind)) = find_divergence(&states, d) {
            return Err(Error::Diverged {
                kind,
                time: config.time(step + 1),
                particle,
                partial: Box::new(rec),
            });
        }
    }
    Ok(rec)
}
