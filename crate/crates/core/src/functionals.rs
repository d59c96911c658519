//! Strength functionals, generation-weighted sums, probes and the
//! flocking-rate constants.

use serde::{Deserialize, Serialize};

use crate::data::InitialData;
use crate::error::{Error, Result};
use crate::riemann::{h, Family};
use crate::tracker::{EventDetail, FrontView, ProcessedEvent, WavePattern};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DiagRecord {
    pub t: f64,
    pub l: f64,
    pub l_in: f64,
    pub l_0out: f64,
    pub l_mout: f64,
    /// Strength removed by pruning reflected waves at time steps.
    pub l_drop: f64,
    pub l_xi: f64,
    pub f: Vec<f64>,
    pub v_gen: f64,
    pub tv_ln_u: f64,
    pub tv_v: f64,
    pub osc_v: f64,
    pub u_min: f64,
    pub u_max: f64,
    pub mass: f64,
    pub momentum: f64,
    pub a: f64,
    pub b: f64,
    pub n_fronts: usize,
    pub max_gen: u32,
    pub w: Vec<f64>,
    pub approaching: Vec<f64>,
}

pub fn c_of_q(q: f64) -> f64 {
    let c = q.cosh();
    (c - 1.0) / (c + 1.0)
}

/// Shock-weighted strength: rarefactions count once, shocks `xi` times.
pub fn weighted(eps: f64, xi: f64) -> f64 {
    if eps < 0.0 {
        xi * -eps
    } else {
        eps
    }
}

/// Functionals of the current pattern. `xi` weights shocks in `L_xi`;
/// `xi_gen` weights shocks in `F_k` and is the base of the generation weights in `V`.
pub fn compute_diag(pattern: &WavePattern, xi: f64, xi_gen: f64, k_max: usize) -> Result<DiagRecord> {
    if !(xi >= 1.0) || !(xi_gen >= 1.0) {
        return Err(Error::ConfigRejected(format!("shock weights must be >= 1, got {xi}, {xi_gen}")));
    }
    let k_max = k_max.max(1);
    let views = pattern.front_views();
    let mut d = DiagRecord { t: pattern.t(), f: vec![0.0; k_max], n_fronts: views.len(), ..Default::default() };
    for v in &views {
        d.l_in += v.eps.abs();
        d.l_xi += weighted(v.eps, xi);
        let wg = weighted(v.eps, xi_gen);
        d.f[(v.gen as usize).clamp(1, k_max) - 1] += wg;
        d.v_gen += xi_gen.powi(v.gen as i32) * wg;
        d.max_gen = d.max_gen.max(v.gen);
    }
    d.l_0out = pattern.standby_left().iter().map(|f| f.eps.abs()).fold(0.0, |a, b| a + b);
    d.l_mout = pattern.standby_right().iter().map(|f| f.eps.abs()).fold(0.0, |a, b| a + b);
    d.l_drop = pattern.dropped().strength;
    d.l = d.l_in + d.l_0out + d.l_mout + d.l_drop;

    let states = pattern.states();
    let ys = pattern.cell_bounds();
    d.u_min = f64::INFINITY;
    d.u_max = f64::NEG_INFINITY;
    let mut v_lo = f64::INFINITY;
    let mut v_hi = f64::NEG_INFINITY;
    for (i, s) in states.iter().enumerate() {
        d.u_min = d.u_min.min(s.u);
        d.u_max = d.u_max.max(s.u);
        if ys[i + 1] > ys[i] || states.len() == 1 {
            v_lo = v_lo.min(s.v);
            v_hi = v_hi.max(s.v);
        }
        if i > 0 {
            d.tv_ln_u += 0.5 * (s.u / states[i - 1].u).ln().abs();
            d.tv_v += (s.v - states[i - 1].v).abs();
        }
    }
    d.osc_v = if v_hi >= v_lo { v_hi - v_lo } else { 0.0 };
    Ok(d)
}

/// Sum of strengths of waves moving towards `y`: 2-waves left of it and 1-waves right of it.
pub fn approaching_sum(views: &[FrontView], y: f64) -> f64 {
    views
        .iter()
        .filter(|v| match v.family {
            Family::Two => v.y < y,
            Family::One => v.y > y,
        })
        .map(|v| v.eps.abs())
        .sum()
}

/// Accumulated strength of the fronts crossing a fixed mass coordinate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeTracker {
    pub index: usize,
    pub y: f64,
    pub w: f64,
    pub a: f64,
}

impl ProbeTracker {
    pub fn new(index: usize, y: f64) -> Self {
        Self { index, y, w: 0.0, a: 0.0 }
    }

    pub fn update(&mut self, event: &ProcessedEvent) {
        if let EventDetail::ProbeCrossing { probe, wave } = &event.detail {
            if *probe == self.index {
                self.w += wave.eps.abs();
            }
        }
    }

    pub fn refresh_approaching(&mut self, views: &[FrontView]) {
        self.a = approaching_sum(views, self.y);
    }
}

/// `q = TV(ln rho0)/2 + TV(v0)/(2 alpha)` over the interior of the support.
pub fn initial_bulk(data: &InitialData, alpha: f64) -> Result<f64> {
    for c in &data.cells {
        if !(c.rho > 0.0) {
            return Err(Error::NonPositiveDensity(c.rho));
        }
    }
    Ok(data
        .cells
        .windows(2)
        .map(|w| 0.5 * (w[1].rho / w[0].rho).ln().abs() + (w[1].v - w[0].v).abs() / (2.0 * alpha))
        .fold(0.0, |a, b| a + b))
}

/// Bounds `[u_inf, u_sup]` on the specific volume for all times.
pub fn volume_bounds(q: f64, u_tilde_0: f64, u_tilde_m: f64) -> (f64, f64) {
    ((-2.0 * q).exp() * u_tilde_0.max(u_tilde_m), (2.0 * q).exp() * u_tilde_0.min(u_tilde_m))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlockingConstants {
    pub q: f64,
    pub mass: f64,
    pub c_q: f64,
    pub xi_max: f64,
    pub xi_sqrt_max: f64,
    pub t1: f64,
    pub xi_bar: f64,
    pub lambda_of_xi_bar: Option<f64>,
    pub condition_holds: bool,
}

/// Decay rate `(1 - xi^2) M / 2 + ln(xi) / T1`.
pub fn decay_rate(xi: f64, mass: f64, t1: f64) -> f64 {
    (1.0 - xi * xi) * mass / 2.0 + xi.ln() / t1
}

pub fn flocking_constants(data: &InitialData, alpha: f64) -> Result<FlockingConstants> {
    let q = initial_bulk(data, alpha)?;
    let mass = data.mass();
    let c_q = c_of_q(q);
    let (xi_max, xi_sqrt_max) = if c_q > 0.0 { (1.0 / c_q, 1.0 / c_q.sqrt()) } else { (f64::INFINITY, f64::INFINITY) };
    let rho_edge = data.cells[0].rho.max(data.cells[data.cells.len() - 1].rho);
    let condition_holds = (2.0 * q).exp() * mass * mass < alpha * rho_edge;
    let t1 = (2.0 * q).exp() * mass / alpha * data.u_tilde_0().min(data.u_tilde_m());
    let xi_bar = xi_sqrt_max.min(1.0 / (mass * t1).sqrt());
    Ok(FlockingConstants {
        q,
        mass,
        c_q,
        xi_max,
        xi_sqrt_max,
        t1,
        xi_bar,
        lambda_of_xi_bar: condition_holds.then(|| decay_rate(xi_bar, mass, t1)),
        condition_holds,
    })
}

/// Least-squares fit `osc ~ C exp(-lambda t)` over samples with `t >= t0`.
pub fn fit_decay(series: &[(f64, f64)], t0: f64) -> Result<(f64, f64)> {
    const MIN_SAMPLES: usize = 10;
    let tail: Vec<(f64, f64)> = series.iter().copied().filter(|&(t, _)| t >= t0).collect();
    let positive: Vec<(f64, f64)> = tail.iter().copied().filter(|&(_, o)| o > 0.0).collect();
    if positive.is_empty() && !tail.is_empty() {
        return Err(Error::AllZeroOscillation);
    }
    if positive.len() < MIN_SAMPLES {
        return Err(Error::InsufficientData { needed: MIN_SAMPLES, got: positive.len() });
    }
    let n = positive.len() as f64;
    let mt = positive.iter().map(|p| p.0).sum::<f64>() / n;
    let ml = positive.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(t, o) in &positive {
        sxy += (t - mt) * (o.ln() - ml);
        sxx += (t - mt) * (t - mt);
    }
    let slope = sxy / sxx;
    Ok(((ml - slope * mt).exp(), -slope))
}

/// Upper bound on the generation-weighted functional after `n` time steps.
pub fn generation_bound(xi: f64, mass: f64, dt: f64, n: u64, v0: f64) -> f64 {
    (1.0 + (xi * xi - 1.0) * mass * dt / 2.0).powf(n as f64) * v0
}

/// Upper bound on the crossing strength at an interior probe.
pub fn probe_bound(q: f64, l_in0: f64, mass: f64, l_in_integral: f64) -> f64 {
    (3.0 + q.cosh()) / 2.0 * l_in0 + (q.cosh() + 1.0) / 2.0 * mass * l_in_integral
}

/// `TV(v)` bound `2 alpha cosh(q) L_in`.
pub fn tv_v_bound(alpha: f64, q: f64, l_in: f64) -> f64 {
    2.0 * alpha * q.cosh() * l_in
}

/// Change of `h` weighted sum used by interaction identity checks.
pub fn h_sum(a: f64, b: f64) -> f64 {
    h(a) + h(b)
}
