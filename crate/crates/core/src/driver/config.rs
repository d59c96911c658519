use serde::{Deserialize, Serialize};

use crate::data::InitialData;
use crate::error::{Error, Result};
use crate::functionals::{c_of_q, flocking_constants, volume_bounds, FlockingConstants};
use crate::riemann::solve_riemann;
use crate::splitting::timestep_bounds;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub alpha: f64,
    pub nu: u32,
    /// Explicit time step; otherwise `dt_scale / 2^nu`.
    pub dt: Option<f64>,
    /// Explicit rarefaction size; otherwise `eta_scale / 2^nu`.
    pub eta: Option<f64>,
    pub dt_scale: f64,
    /// `None` picks the smallest scale admitted by the step constraint, at least 1.
    pub eta_scale: Option<f64>,
    pub t_end: f64,
    pub xi: Option<f64>,
    pub k_max: usize,
    /// Probe positions in mass coordinates; `None` means `M/4, M/2, 3M/4`.
    pub probes: Option<Vec<f64>>,
    pub sample_dt: f64,
    pub event_cap: u64,
    pub deshift: bool,
    pub jitter: f64,
    /// Reflected waves created at time steps below this size are pruned;
    /// `None` means `prune_scale * L_in(0+) * eta^2`.
    pub prune_tol: Option<f64>,
    pub prune_scale: f64,
    pub check_flocking: bool,
    pub keep_profiles: bool,
    pub write_frames: bool,
    pub event_log: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            nu: 4,
            dt: None,
            eta: None,
            dt_scale: 2.0,
            eta_scale: None,
            t_end: 10.0,
            xi: None,
            k_max: 32,
            probes: None,
            sample_dt: 0.05,
            event_cap: 50_000_000,
            deshift: false,
            jitter: crate::tracker::DEFAULT_JITTER,
            prune_tol: None,
            prune_scale: 0.05,
            check_flocking: false,
            keep_profiles: false,
            write_frames: true,
            event_log: false,
        }
    }
}

/// Parameters derived from a configuration and normalized data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Resolved {
    pub dt: f64,
    pub eta: f64,
    pub q: f64,
    pub mass: f64,
    pub c_q: f64,
    /// Shock weight for `L_xi`.
    pub xi: f64,
    /// Shock weight and generation base for `F_k` and `V`.
    pub xi_gen: f64,
    pub probes: Vec<f64>,
    pub prune_tol: f64,
    /// Total strength of the initial Riemann fans.
    pub l_in0: f64,
    pub c1: f64,
    pub c1_plus: f64,
    pub c1_minus: f64,
    pub u_inf: f64,
    pub u_sup: f64,
    pub flocking: FlockingConstants,
}

impl SimConfig {
    pub fn resolve(&self, data: &InitialData) -> Result<Resolved> {
        let reject = |msg: String| Err(Error::ConfigRejected(msg));
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return reject(format!("alpha must be positive, got {}", self.alpha));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return reject(format!("t_end must be finite and non-negative, got {}", self.t_end));
        }
        if !(self.sample_dt > 0.0) {
            return reject(format!("sample_dt must be positive, got {}", self.sample_dt));
        }
        if self.k_max == 0 {
            return reject("k_max must be at least 1".into());
        }
        let fc = flocking_constants(data, self.alpha)?;
        let (q, mass) = (fc.q, fc.mass);
        let (c1, c1_plus, c1_minus) = timestep_bounds(q);
        let scale = 0.5f64.powi(self.nu as i32);
        let dt = self.dt.unwrap_or(self.dt_scale * scale);
        let eta = match (self.eta, self.eta_scale) {
            (Some(e), _) => e,
            (None, Some(e)) => e * scale,
            (None, None) => (c1_minus * mass * self.dt_scale * q).max(1.0) * scale,
        };
        if !(dt > 0.0 && mass * dt < 1.0) {
            return reject(format!("need 0 < M*dt < 1, got M*dt = {}", mass * dt));
        }
        if !(eta > 0.0) {
            return reject(format!("eta must be positive, got {eta}"));
        }
        if c1_minus * mass * dt * q > eta {
            return reject(format!(
                "step constraint violated: C1-(q) M dt q = {} > eta = {eta}",
                c1_minus * mass * dt * q
            ));
        }
        let c_q = c_of_q(q);
        // With q = 0 both caps are infinite; fall back to the rate-optimal weight.
        let fallback = fc.xi_bar.max(1.0);
        let xi_cap = if c_q > 0.0 { 1.0 / c_q } else { fallback };
        let xi = self.xi.unwrap_or(xi_cap);
        if !(xi >= 1.0) || (c_q > 0.0 && xi > 1.0 / c_q * (1.0 + 1e-12)) {
            return reject(format!("xi must lie in [1, 1/c(q)] = [1, {}], got {xi}", 1.0 / c_q));
        }
        let xi_gen = if c_q > 0.0 { 1.0 / c_q.sqrt() } else { fallback };
        let probes = self.probes.clone().unwrap_or_else(|| vec![0.25 * mass, 0.5 * mass, 0.75 * mass]);
        for &y in &probes {
            if !(y > 0.0 && y < mass) {
                return reject(format!("probe {y} outside (0, M) = (0, {mass})"));
            }
        }
        let cells = data.to_lagrangian();
        let mut l_in0 = 0.0;
        for w in cells.windows(2) {
            let s = solve_riemann(w[0].state, w[1].state, self.alpha)?;
            l_in0 += s.eps1.abs() + s.eps2.abs();
        }
        let prune_tol = self.prune_tol.unwrap_or(self.prune_scale * l_in0 * eta * eta);
        if !(prune_tol >= 0.0) {
            return reject(format!("prune_tol must be non-negative, got {prune_tol}"));
        }
        let (u_inf, u_sup) = volume_bounds(q, data.u_tilde_0(), data.u_tilde_m());
        Ok(Resolved {
            dt,
            eta,
            q,
            mass,
            c_q,
            xi,
            xi_gen,
            probes,
            prune_tol,
            l_in0,
            c1,
            c1_plus,
            c1_minus,
            u_inf,
            u_sup,
            flocking: fc,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::DataCell;

    fn two_cell() -> InitialData {
        InitialData::new(0.0, vec![DataCell { len: 0.5, rho: 1.0, v: 0.0 }, DataCell { len: 0.5, rho: 2.0, v: 0.0 }])
            .unwrap()
    }

    #[test]
    fn defaults_satisfy_constraint() {
        for nu in 2..10 {
            let r = SimConfig { nu, ..Default::default() }.resolve(&two_cell()).unwrap();
            assert!(r.c1_minus * r.mass * r.dt * r.q <= r.eta);
            assert!(r.mass * r.dt < 1.0);
            assert!((r.xi - 1.0 / c_of_q(r.q)).abs() < 1e-12);
        }
    }

    #[test]
    fn rejections() {
        let d = two_cell();
        let bad = SimConfig { dt: Some(1.0), ..Default::default() };
        assert!(matches!(bad.resolve(&d), Err(Error::ConfigRejected(_))));
        let bad = SimConfig { dt: Some(0.5), eta: Some(1e-4), ..Default::default() };
        assert!(matches!(bad.resolve(&d), Err(Error::ConfigRejected(_))));
        let bad = SimConfig { xi: Some(0.5), ..Default::default() };
        assert!(matches!(bad.resolve(&d), Err(Error::ConfigRejected(_))));
        let bad = SimConfig { probes: Some(vec![2.0]), ..Default::default() };
        assert!(matches!(bad.resolve(&d), Err(Error::ConfigRejected(_))));
    }

    #[test]
    fn stationary_weights_fall_back() {
        let d = InitialData::new(0.0, vec![DataCell { len: 0.5, rho: 2.0, v: 0.0 }]).unwrap();
        let r = SimConfig::default().resolve(&d).unwrap();
        assert_eq!(r.c_q, 0.0);
        assert!((r.xi_gen - 2f64.sqrt()).abs() < 1e-15);
    }
}
