use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{linear_model, LinearMeanFieldParams};
use crate::sim::{run_coupled_pair, run_particle_system, SimConfig};

use super::{default_window, estimate_decay_rate, moment_ode_oracle, RateEstimate};

/// Relative agreement required between decay rates in the transfer check.
pub const TRANSFER_TOLERANCE: f64 = 0.25;

/// Coupling errors below this are treated as exact agreement.
const NOISE_FLOOR: f64 = 1e-24;

/// Mean-field approximation error as a function of ensemble size.
#[derive(Debug, Clone, PartialEq)]
pub struct ChaosReport {
    pub sizes: Vec<usize>,
    /// Replication average of `sup_t (1/N)Σ|x^i(t) − x^{i,N}(t)|²`.
    pub mean_errors: Vec<f64>,
    /// Standard error of the replication average.
    pub stderr: Vec<f64>,
    pub replications: usize,
    /// Slope of `ln error` against `ln N`; absent when degenerate.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    /// Errors sit at the noise floor (particle and limit systems coincide).
    pub degenerate: bool,
}

impl ChaosReport {
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "N,mean_sup_sq_error,stderr")?;
        for i in 0..self.sizes.len() {
            writeln!(
                w,
                "{},{},{}",
                self.sizes[i], self.mean_errors[i], self.stderr[i]
            )?;
        }
        Ok(())
    }
}

fn ols(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let xm = xs.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
    let slope = sxy / sxx;
    (slope, ym - slope * xm)
}

/// Replicated coupled runs over `sizes`, with a log-log fit of the error.
/// Replication `r` uses seed `base.seed + r` for every size.
pub fn chaos_scaling(
    params: &LinearMeanFieldParams,
    base: &SimConfig,
    sizes: &[usize],
    replications: usize,
) -> Result<ChaosReport> {
    if sizes.len() < 4 {
        return Err(Error::InvalidArgument(format!(
            "need >= 4 sizes for fit, got {}",
            sizes.len()
        )));
    }
    if !sizes.windows(2).all(|w| w[0] < w[1]) || sizes[0] == 0 {
        return Err(Error::InvalidArgument(
            "sizes must be positive and strictly ascending".into(),
        ));
    }
    if replications == 0 {
        return Err(Error::InvalidArgument("replications must be >= 1".into()));
    }
    base.grid()?;
    let x0 = *base
        .x0
        .first()
        .ok_or_else(|| Error::config("sim.x0", "empty"))?;
    let oracle = moment_ode_oracle(params, x0, base.delta, base.t_end, base.dt)?;

    let jobs: Vec<(usize, usize)> = sizes
        .iter()
        .flat_map(|&n| (0..replications).map(move |r| (n, r)))
        .collect();
    let sups: Vec<f64> = jobs
        .par_iter()
        .map(|&(n, r)| {
            let config = SimConfig {
                n,
                seed: base.seed.wrapping_add(r as u64),
                snapshot_times: Vec::new(),
                ..base.clone()
            };
            run_coupled_pair(params, &config, &oracle).map(|p| p.sup())
        })
        .collect::<Result<_>>()?;

    let mut mean_errors = Vec::with_capacity(sizes.len());
    let mut stderr = Vec::with_capacity(sizes.len());
    for chunk in sups.chunks(replications) {
        let k = chunk.len() as f64;
        let mean = chunk.iter().sum::<f64>() / k;
        let var = if chunk.len() > 1 {
            chunk.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1.0)
        } else {
            0.0
        };
        mean_errors.push(mean);
        stderr.push((var / k).sqrt());
    }

    let degenerate = mean_errors.iter().any(|e| !(*e > NOISE_FLOOR));
    let (slope, intercept) = if degenerate {
        (None, None)
    } else {
        let xs: Vec<f64> = sizes.iter().map(|n| (*n as f64).ln()).collect();
        let ys: Vec<f64> = mean_errors.iter().map(|e| e.ln()).collect();
        let (s, i) = ols(&xs, &ys);
        (Some(s), Some(i))
    };
    Ok(ChaosReport {
        sizes: sizes.to_vec(),
        mean_errors,
        stderr,
        replications,
        slope,
        intercept,
        degenerate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransferVerdict {
    /// Every ensemble size shows mean-square decay.
    Stable,
    /// Every ensemble size shows growth or stagnation.
    Unstable,
    /// Sizes disagree on the sign of the rate.
    Inconsistent,
}

impl fmt::Display for TransferVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TransferVerdict::Stable => "stable",
            TransferVerdict::Unstable => "unstable",
            TransferVerdict::Inconsistent => "inconsistent",
        })
    }
}

/// Finite-N view of the stability equivalence between the particle system
/// and the distribution-dependent equation. The `t → ∞` after `N → ∞` limit
/// is approximated by fitted rates at fixed N and horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferReport {
    pub sizes: Vec<usize>,
    pub rates: Vec<RateEstimate>,
    pub oracle_rate: RateEstimate,
    pub verdict: TransferVerdict,
    /// `|r_a − r_b| / max(|r_a|, |r_b|)` for the two largest sizes; absent for
    /// a single size.
    pub spread: Option<f64>,
    pub spread_ok: Option<bool>,
    /// Per size: rate within [`TRANSFER_TOLERANCE`] of the oracle rate.
    pub within_oracle: Vec<bool>,
}

impl TransferReport {
    pub fn passed(&self) -> bool {
        self.verdict == TransferVerdict::Stable
            && self.spread_ok.unwrap_or(false)
            && self.within_oracle.iter().all(|b| *b)
    }
}

/// Fits mean-square decay rates of the particle system at each size and
/// compares them with the oracle rate over the default window.
pub fn stability_transfer_check(
    params: &LinearMeanFieldParams,
    config: &SimConfig,
    sizes: &[usize],
) -> Result<TransferReport> {
    if sizes.is_empty() {
        return Err(Error::InvalidArgument(
            "need at least one ensemble size".into(),
        ));
    }
    config.grid()?;
    let window = default_window(config.t_end);
    let x0 = *config
        .x0
        .first()
        .ok_or_else(|| Error::config("sim.x0", "empty"))?;
    let oracle = moment_ode_oracle(params, x0, config.delta, config.t_end, config.dt)?;
    let oracle_rate = estimate_decay_rate(&oracle, window)?;

    let model = linear_model(*params);
    let mut rates = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let run = SimConfig {
            n,
            snapshot_times: Vec::new(),
            ..config.clone()
        };
        let rec = run_particle_system(&model, &run)?;
        rates.push(estimate_decay_rate(&rec, window)?);
    }

    let stable = rates.iter().filter(|r| r.rate > 0.0).count();
    let verdict = if stable == rates.len() {
        TransferVerdict::Stable
    } else if stable == 0 {
        TransferVerdict::Unstable
    } else {
        TransferVerdict::Inconsistent
    };
    let spread = match rates.len() {
        0 | 1 => None,
        k => {
            let (a, b) = (rates[k - 2].rate, rates[k - 1].rate);
            Some((a - b).abs() / a.abs().max(b.abs()))
        }
    };
    let within_oracle = rates
        .iter()
        .map(|r| (r.rate - oracle_rate.rate).abs() <= TRANSFER_TOLERANCE * oracle_rate.rate.abs())
        .collect();
    Ok(TransferReport {
        sizes: sizes.to_vec(),
        rates,
        oracle_rate,
        verdict,
        spread,
        spread_ok: spread.map(|s| s < TRANSFER_TOLERANCE),
        within_oracle,
    })
}
