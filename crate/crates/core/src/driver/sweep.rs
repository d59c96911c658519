use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::SimConfig;
use super::run::{run, Profile, RunOutput};
use crate::data::InitialData;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub nu: u32,
    pub dt: f64,
    pub eta: f64,
    pub rh_max: f64,
    pub momentum_sup_tail: f64,
    pub events: u64,
    pub max_fronts: usize,
    pub fatal_failures: Vec<String>,
    pub wall_time_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileDistance {
    pub nu_coarse: u32,
    pub nu_fine: u32,
    /// Largest `int |u_coarse - u_fine| dy` over the shared sample times.
    pub l1_max: f64,
    pub l1_final: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub entries: Vec<SweepEntry>,
    pub distances: Vec<ProfileDistance>,
    /// Least-squares slope of `ln rh_max` against `ln eta`.
    pub rh_slope: Option<f64>,
    pub momentum_slope: Option<f64>,
}

/// `int_0^M |f - g| dy` for two piecewise-constant profiles on the same interval.
pub fn l1_distance(a: &Profile, b: &Profile) -> f64 {
    let (mut i, mut j) = (0, 0);
    let mut y = 0.0f64;
    let mut total = 0.0;
    while i < a.u.len() && j < b.u.len() {
        let next = a.y[i + 1].min(b.y[j + 1]);
        total += (a.u[i] - b.u[j]).abs() * (next - y).max(0.0);
        y = next;
        if a.y[i + 1] <= next {
            i += 1;
        }
        if b.y[j + 1] <= next {
            j += 1;
        }
    }
    total
}

/// Least-squares slope of `ln y` against `ln x` over positive pairs.
pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points.iter().filter(|p| p.0 > 0.0 && p.1 > 0.0).map(|p| (p.0.ln(), p.1.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Runs every `nu` concurrently on one thread each. Per-run outputs go to
/// `out_dir/nu_<nu>/` and the aggregate to `out_dir/sweep.json`.
pub fn sweep(
    template: &SimConfig,
    data: &InitialData,
    nus: &[u32],
    out_dir: Option<&Path>,
) -> Result<(SweepReport, Vec<RunOutput>)> {
    if nus.len() < 2 {
        return Err(Error::ConfigRejected(format!("a sweep needs at least two nu values, got {}", nus.len())));
    }
    let configs: Vec<SimConfig> =
        nus.iter().map(|&nu| SimConfig { nu, keep_profiles: true, ..template.clone() }).collect();
    let results: Vec<Result<RunOutput>> = std::thread::scope(|s| {
        let handles: Vec<_> = configs
            .iter()
            .map(|cfg| {
                let dir = out_dir.map(|d| d.join(format!("nu_{}", cfg.nu)));
                s.spawn(move || run(cfg, data, dir.as_deref()))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("sweep worker panicked")).collect()
    });
    let outputs = results.into_iter().collect::<Result<Vec<_>>>()?;

    let entries: Vec<SweepEntry> = outputs
        .iter()
        .map(|o| {
            let r = &o.report;
            SweepEntry {
                nu: r.nu,
                dt: r.resolved.dt,
                eta: r.resolved.eta,
                rh_max: r.rh_max,
                momentum_sup_tail: r.momentum_sup_tail,
                events: r.events,
                max_fronts: r.stats.max_active,
                fatal_failures: r.fatal_failures.clone(),
                wall_time_s: r.wall_time_s,
            }
        })
        .collect();
    let distances = outputs
        .windows(2)
        .map(|w| {
            let pairs: Vec<f64> = w[0]
                .profiles
                .iter()
                .zip(&w[1].profiles)
                .filter(|(a, b)| a.t == b.t)
                .map(|(a, b)| l1_distance(a, b))
                .collect();
            ProfileDistance {
                nu_coarse: w[0].report.nu,
                nu_fine: w[1].report.nu,
                l1_max: pairs.iter().copied().fold(0.0, f64::max),
                l1_final: pairs.last().copied().unwrap_or(0.0),
            }
        })
        .collect();
    let rh_slope = log_log_slope(&entries.iter().map(|e| (e.eta, e.rh_max)).collect::<Vec<_>>());
    let momentum_slope = log_log_slope(&entries.iter().map(|e| (e.eta, e.momentum_sup_tail)).collect::<Vec<_>>());
    let report = SweepReport { entries, distances, rh_slope, momentum_slope };
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("sweep.json"), serde_json::to_string_pretty(&report)? + "\n")?;
    }
    Ok((report, outputs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn l1_of_shifted_steps() {
        let a = Profile { t: 0.0, y: vec![0.0, 0.5, 1.0], u: vec![1.0, 2.0] };
        let b = Profile { t: 0.0, y: vec![0.0, 0.25, 1.0], u: vec![1.0, 2.0] };
        assert!((l1_distance(&a, &b) - 0.25).abs() < 1e-15);
        assert_eq!(l1_distance(&a, &a), 0.0);
        let c = Profile { t: 0.0, y: vec![0.0, 0.5, 0.5, 1.0], u: vec![1.0, 7.0, 2.0] };
        assert_eq!(l1_distance(&a, &c), 0.0);
    }

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [0.1, 0.05, 0.025].iter().map(|&e| (e, 3.0 * e * e)).collect();
        assert!((log_log_slope(&pts).unwrap() - 2.0).abs() < 1e-12);
        assert!(log_log_slope(&pts[..1]).is_none());
    }
}
