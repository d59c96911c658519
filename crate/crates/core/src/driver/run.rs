use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::checks::CheckSet;
use super::config::{Resolved, SimConfig};
use super::output;
use crate::data::InitialData;
use crate::error::{Error, Result};
use crate::euler::{to_euler, BoundaryTrace, EulerianFrame};
use crate::functionals::{
    compute_diag, fit_decay, generation_bound, probe_bound, tv_v_bound, weighted, DiagRecord, FlockingConstants,
    ProbeTracker,
};
use crate::splitting::{implicit_split, resolve_time_step};
use crate::tracker::{
    init_pattern, DroppedLedger, EventDetail, EventKind, ProcessedEvent, Side, TrackerStats, WavePattern,
};

/// One row of the uniform-grid diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRow {
    pub step: u64,
    pub diag: DiagRecord,
    pub rh_max: f64,
}

/// One row of the per-event log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventRow {
    pub t: f64,
    pub kind: String,
    pub y: f64,
    pub delta_l: f64,
    pub delta_l_xi: f64,
    pub l: f64,
    pub l_in: f64,
    pub l_xi: f64,
}

/// Specific volume profile in mass coordinates: `u[i]` on `(y[i], y[i+1])`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub t: f64,
    pub y: Vec<f64>,
    pub u: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub t0: f64,
    pub c: f64,
    pub lambda_hat: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlockingCheck {
    pub t1: f64,
    pub lambda: f64,
    /// Samples with `F_k > 0` after `k T1`, for `k <= 5`.
    pub generation_violations: u64,
    /// Samples after `T1` above `C exp(-lambda t)`, `C` calibrated at `T1`.
    pub decay_violations: u64,
    pub calibrated_c: f64,
    pub lambda_hat: Option<f64>,
    pub rate_ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub status: String,
    pub nu: u32,
    pub alpha: f64,
    pub t_end: f64,
    pub v_bar: f64,
    pub resolved: Resolved,
    pub flocking: FlockingConstants,
    pub final_diag: DiagRecord,
    pub fit: Option<DecayFit>,
    pub fit_error: Option<String>,
    pub flocking_check: Option<FlockingCheck>,
    pub mass_error_max: f64,
    pub momentum_recursion_error_max: f64,
    /// `sup |momentum|` over sampled times `t >= 5/M`.
    pub momentum_sup_tail: f64,
    pub rh_max: f64,
    pub rh_mean: f64,
    pub steps: u64,
    pub splits: u64,
    pub stats: TrackerStats,
    pub events: u64,
    pub dropped: DroppedLedger,
    pub checks: CheckSet,
    pub fatal_failures: Vec<String>,
    pub wall_time_s: f64,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub report: RunReport,
    pub samples: Vec<SampleRow>,
    pub events: Vec<EventRow>,
    pub profiles: Vec<Profile>,
    /// Momentum just before and just after each time step.
    pub step_momenta: Vec<(f64, f64, f64)>,
    pub last_frame: Option<EulerianFrame>,
}

impl RunOutput {
    pub fn passed(&self) -> bool {
        self.report.fatal_failures.is_empty()
    }
}

pub const CHECK_L_EVENT: &str = "l_nonincreasing_at_events";
pub const CHECK_L_STEP: &str = "l_conserved_at_steps";
pub const CHECK_LXI_INTERACTION: &str = "lxi_same_family_decrease";
pub const CHECK_LXI_STEP: &str = "lxi_step_growth";
pub const CHECK_L_BULK: &str = "l_initial_below_bulk";
pub const CHECK_SPLIT_LOWER: &str = "split_reflected_lower";
pub const CHECK_SPLIT_UPPER: &str = "split_reflected_upper";
pub const CHECK_SPLIT_SIGNS: &str = "split_sign_rules";
pub const CHECK_SPLIT_IMPLICIT: &str = "split_implicit_agreement";
pub const CHECK_SPLIT_SUM: &str = "split_strength_sum";
pub const CHECK_SPLIT_ETA: &str = "split_rarefaction_below_eta";
pub const CHECK_U_LOWER: &str = "u_lower_bound";
pub const CHECK_U_UPPER: &str = "u_upper_bound";
pub const CHECK_TV_V: &str = "tv_v_bound";
pub const CHECK_MASS: &str = "eulerian_mass";
pub const CHECK_MOMENTUM_STEP: &str = "momentum_step_recursion";
pub const CHECK_V_BOUND: &str = "generation_weighted_bound";
pub const CHECK_W_PROBE: &str = "probe_crossing_bound";
pub const CHECK_W_ENDS: &str = "boundary_crossing_bound";
pub const CHECK_DRIFT: &str = "incremental_functionals";
pub const CHECK_TRACE: &str = "boundary_trace_stability";

/// Resolution floor for split strengths: the re-solve sees states rounded to
/// about one ulp, so comparisons of reflected sizes carry this slack.
const SPLIT_FLOOR: f64 = 1e-14;

struct Sim<'a> {
    cfg: &'a SimConfig,
    res: Resolved,
    pattern: WavePattern,
    trace: BoundaryTrace,
    probes: Vec<ProbeTracker>,
    checks: CheckSet,
    samples: Vec<SampleRow>,
    events: Vec<EventRow>,
    profiles: Vec<Profile>,
    step_momenta: Vec<(f64, f64, f64)>,
    frames: Option<BufWriter<File>>,
    v_bar: f64,
    l_in: f64,
    l_xi: f64,
    l_out: f64,
    /// `L` after the last front event or time step.
    l_last: f64,
    lin_integral: f64,
    t_last: f64,
    l_in0: f64,
    v0: f64,
    trace_history: Vec<(f64, f64)>,
    mass_err: f64,
    mom_err: f64,
    rh_max: f64,
    rh_sum: f64,
    splits: u64,
    last_frame: Option<EulerianFrame>,
}

fn sample_times(t_end: f64, dt: f64) -> Vec<f64> {
    let n = (t_end / dt + 1e-9).floor() as u64;
    let mut ts: Vec<f64> = (0..=n).map(|k| k as f64 * dt).filter(|&t| t <= t_end).collect();
    if ts.last().is_none_or(|&t| t < t_end) {
        ts.push(t_end);
    }
    ts
}

impl<'a> Sim<'a> {
    fn new(cfg: &'a SimConfig, data: &InitialData, res: Resolved, out_dir: Option<&Path>) -> Result<Self> {
        let mut pattern = init_pattern(&data.to_lagrangian(), cfg.alpha, res.eta)?;
        pattern.set_jitter(cfg.jitter);
        pattern.set_event_cap(cfg.event_cap);
        pattern.set_time_step(res.dt);
        let probes = res
            .probes
            .iter()
            .map(|&y| {
                let i = pattern.add_probe(y);
                let mut p = ProbeTracker::new(i, y);
                p.refresh_approaching(&pattern.front_views());
                p
            })
            .collect();
        let trace = BoundaryTrace::new(data.a0, &pattern);
        let frames = match out_dir {
            Some(dir) if cfg.write_frames => {
                std::fs::create_dir_all(dir)?;
                Some(BufWriter::new(File::create(dir.join("frames.jsonl"))?))
            }
            _ => None,
        };
        // Strengths carry absolute rounding near 1e-16 from the states they are
        // solved from; weighted sums scale it by xi.
        let xi_tol = 1e-12 + 1e-15 * res.xi;
        let mut checks = CheckSet::default();
        for (name, tol) in [
            (CHECK_L_EVENT, 1e-12),
            (CHECK_L_STEP, 1e-12),
            (CHECK_LXI_INTERACTION, xi_tol),
            (CHECK_LXI_STEP, xi_tol),
            (CHECK_L_BULK, 1e-12),
            (CHECK_SPLIT_LOWER, SPLIT_FLOOR),
            (CHECK_SPLIT_UPPER, SPLIT_FLOOR),
            (CHECK_SPLIT_SIGNS, 0.0),
            (CHECK_SPLIT_IMPLICIT, 1e-10),
            (CHECK_SPLIT_SUM, 1e-12),
            (CHECK_SPLIT_ETA, 0.0),
            (CHECK_U_LOWER, 1e-12),
            (CHECK_U_UPPER, 1e-12),
            (CHECK_TV_V, 1e-12),
            (CHECK_MASS, 1e-12),
            (CHECK_MOMENTUM_STEP, 1e-12),
            (CHECK_V_BOUND, 1e-10),
            (CHECK_W_PROBE, 1e-12),
            (CHECK_W_ENDS, 1e-12),
            (CHECK_DRIFT, 1e-10),
        ] {
            checks.declare(name, tol, true);
        }
        checks.declare(CHECK_TRACE, 1e-12, false);
        let d0 = compute_diag(&pattern, res.xi, res.xi_gen, cfg.k_max)?;
        checks.le(CHECK_L_BULK, 0.0, d0.l, res.q);
        Ok(Self {
            cfg,
            pattern,
            trace,
            probes,
            checks,
            samples: Vec::new(),
            events: Vec::new(),
            profiles: Vec::new(),
            step_momenta: Vec::new(),
            frames,
            v_bar: data.v_bar,
            l_in: d0.l_in,
            l_xi: d0.l_xi,
            l_out: 0.0,
            l_last: d0.l,
            lin_integral: 0.0,
            t_last: 0.0,
            l_in0: d0.l_in,
            v0: d0.v_gen,
            trace_history: Vec::new(),
            mass_err: 0.0,
            mom_err: 0.0,
            rh_max: 0.0,
            rh_sum: 0.0,
            splits: 0,
            last_frame: None,
            res,
        })
    }

    fn advance_clock(&mut self, t: f64) {
        if t > self.t_last {
            self.lin_integral += self.l_in * (t - self.t_last);
            self.t_last = t;
        }
    }

    fn check_u(&mut self, t: f64, u: f64) {
        let (lo, hi) = (self.res.u_inf, self.res.u_sup);
        self.checks.le(CHECK_U_LOWER, t, lo / u, 1.0);
        self.checks.le(CHECK_U_UPPER, t, u / hi, 1.0);
    }

    fn check_all_u(&mut self, t: f64) {
        for s in self.pattern.states() {
            self.check_u(t, s.u);
        }
    }

    fn run_loop(&mut self) -> Result<()> {
        let t_end = self.cfg.t_end;
        let times = sample_times(t_end, self.cfg.sample_dt);
        let mut k = 0;
        loop {
            let ts = times.get(k).copied();
            let ev = self.pattern.next_event(t_end)?;
            match (ev, ts) {
                (None, None) => break,
                (None, Some(ts)) => {
                    self.sample(ts)?;
                    k += 1;
                }
                (Some(e), Some(ts)) if ts < e.time => {
                    self.sample(ts)?;
                    k += 1;
                }
                (Some(e), _) => match e.kind {
                    EventKind::TimeStep(_) => self.time_step(e.time)?,
                    _ => self.front_events(e.time)?,
                },
            }
        }
        Ok(())
    }

    fn front_events(&mut self, te: f64) -> Result<()> {
        self.advance_clock(te);
        let mut batch: Vec<ProcessedEvent> = Vec::new();
        let result = self.pattern.advance_with(te, |e| batch.push(e));
        for ev in &batch {
            self.handle_event(ev);
        }
        result?;
        self.trace.update(&self.pattern);
        Ok(())
    }

    fn l_total(&self) -> f64 {
        self.l_in + self.l_out + self.pattern.dropped().strength
    }

    fn handle_event(&mut self, ev: &ProcessedEvent) {
        let t = ev.time;
        let xi = self.res.xi;
        let (kind, dl, dlxi) = match &ev.detail {
            EventDetail::Crossing { .. } => ("crossing", 0.0, 0.0),
            EventDetail::SameFamily { incoming, surviving, reflected, .. } => {
                let outs = [surviving, reflected];
                let l_in_sum: f64 = incoming.iter().map(|w| w.eps.abs()).sum();
                let l_out_sum: f64 = outs.iter().filter_map(|w| w.map(|w| w.eps.abs())).sum();
                // Shock and rarefaction parts are differenced before weighting so
                // that a large xi does not amplify rounding in the sums.
                let split =
                    |sum: (f64, f64), eps: f64| if eps < 0.0 { (sum.0 - eps, sum.1) } else { (sum.0, sum.1 + eps) };
                let (sh_in, ra_in) = incoming.iter().fold((0.0, 0.0), |acc, w| split(acc, w.eps));
                let (sh_out, ra_out) = outs.iter().filter_map(|w| w.map(|w| w.eps)).fold((0.0, 0.0), split);
                let refl = reflected.map_or(0.0, |w| w.eps.abs());
                let (dl, dlxi) = (l_out_sum - l_in_sum, xi * (sh_out - sh_in) + (ra_out - ra_in));
                self.checks.le(CHECK_LXI_INTERACTION, t, dlxi + (xi - 1.0) * refl, 0.0);
                ("same_family", dl, dlxi)
            }
            EventDetail::Exit { side, wave } => {
                self.l_out += wave.eps.abs();
                let kind = match side {
                    Side::Left => "exit_left",
                    Side::Right => "exit_right",
                };
                (kind, -wave.eps.abs(), -weighted(wave.eps, xi))
            }
            EventDetail::ProbeCrossing { .. } => {
                for p in &mut self.probes {
                    p.update(ev);
                }
                ("probe", 0.0, 0.0)
            }
        };
        self.l_in += dl;
        self.l_xi += dlxi;
        if kind != "probe" {
            let l_now = self.l_total();
            self.checks.le(CHECK_L_EVENT, t, l_now - self.l_last, 0.0);
            self.l_last = l_now;
        }
        for s in &ev.new_states {
            self.check_u(t, s.u);
        }
        if self.cfg.event_log {
            let delta_l = if kind.starts_with("exit") { 0.0 } else { dl };
            self.events.push(EventRow {
                t,
                kind: kind.to_string(),
                y: ev.y,
                delta_l,
                delta_l_xi: dlxi,
                l: self.l_total(),
                l_in: self.l_in,
                l_xi: self.l_xi,
            });
        }
    }

    fn frame(&mut self) -> Result<EulerianFrame> {
        let f = to_euler(&self.pattern, &self.trace)?;
        let err = (f.mass() - self.res.mass).abs();
        self.mass_err = self.mass_err.max(err);
        self.checks.le(CHECK_MASS, f.t, err, 0.0);
        Ok(f)
    }

    fn time_step(&mut self, tn: f64) -> Result<()> {
        self.pattern.advance(tn)?;
        self.advance_clock(tn);
        let res = self.res.clone();
        let m_dt = res.mass * res.dt;
        let before = compute_diag(&self.pattern, res.xi, res.xi_gen, self.cfg.k_max)?;
        self.checks.le(CHECK_DRIFT, tn, (before.l_in - self.l_in).abs(), 0.0);
        self.checks.le(CHECK_DRIFT, tn, (before.l_xi - self.l_xi).abs(), 0.0);
        let mom_before = self.frame()?.momentum();
        let out = resolve_time_step(&mut self.pattern, res.dt, res.prune_tol)?;
        self.trace.update(&self.pattern);
        let after = compute_diag(&self.pattern, res.xi, res.xi_gen, self.cfg.k_max)?;
        let frame = self.frame()?;
        let mom_after = frame.momentum();
        self.step_momenta.push((tn, mom_before, mom_after));
        let err = (mom_after - (1.0 - m_dt) * mom_before).abs();
        self.mom_err = self.mom_err.max(err);
        self.checks.le(CHECK_MOMENTUM_STEP, tn, err, 0.0);
        self.checks.le(CHECK_L_STEP, tn, (after.l - before.l).abs(), 0.0);
        self.checks.le(CHECK_LXI_STEP, tn, after.l_xi - before.l_xi, 0.5 * m_dt * (res.xi - 1.0) * before.l_in);

        for s in &out.splits {
            self.splits += 1;
            let (x, refl, same) = (s.eps_in, s.eps_refl, s.eps_same);
            if x == 0.0 {
                continue;
            }
            let cap = if x > 0.0 { res.c1_plus } else { res.c1_minus };
            self.checks.le(CHECK_SPLIT_LOWER, tn, res.c1 * m_dt * x.abs(), refl.abs());
            self.checks.le(CHECK_SPLIT_UPPER, tn, refl.abs(), cap * m_dt * x.abs());
            self.checks.le(CHECK_SPLIT_SUM, tn, (same.abs() + refl.abs() - x.abs()).abs(), 0.0);
            if res.c1 * m_dt * x.abs() > 10.0 * SPLIT_FLOOR {
                self.checks.holds(CHECK_SPLIT_SIGNS, tn, refl * x < 0.0 && same * x > 0.0);
            }
            let oracle = implicit_split(x, res.dt, res.mass)?;
            self.checks.le(CHECK_SPLIT_IMPLICIT, tn, (oracle - refl).abs(), 0.0);
            if refl > 0.0 {
                self.checks.le(CHECK_SPLIT_ETA, tn, refl, res.eta);
            }
        }
        self.check_all_u(tn);
        self.l_in = after.l_in;
        self.l_last = self.l_total();
        self.l_xi = after.l_xi;
        let views = self.pattern.front_views();
        for p in &mut self.probes {
            p.refresh_approaching(&views);
        }
        self.last_frame = Some(frame);
        Ok(())
    }

    fn sample(&mut self, ts: f64) -> Result<()> {
        self.pattern.advance(ts)?;
        self.advance_clock(ts);
        let res = self.res.clone();
        let mut d = compute_diag(&self.pattern, res.xi, res.xi_gen, self.cfg.k_max)?;
        let views = self.pattern.front_views();
        for p in &mut self.probes {
            p.refresh_approaching(&views);
        }
        d.w = self.probes.iter().map(|p| p.w).collect();
        d.approaching = self.probes.iter().map(|p| p.a).collect();
        let frame = self.frame()?;
        d.mass = frame.mass();
        d.momentum = frame.momentum();
        d.a = frame.a;
        d.b = frame.b;

        self.checks.le(CHECK_DRIFT, ts, (d.l_in - self.l_in).abs(), 0.0);
        self.checks.le(CHECK_TV_V, ts, d.tv_v, tv_v_bound(self.cfg.alpha, res.q, d.l_in));
        let step = self.pattern.steps_done();
        self.checks.le(CHECK_V_BOUND, ts, d.v_gen, generation_bound(res.xi_gen, res.mass, res.dt, step, self.v0));
        let w_cap = probe_bound(res.q, self.l_in0, res.mass, self.lin_integral);
        for &w in &d.w {
            self.checks.le(CHECK_W_PROBE, ts, w, w_cap);
        }
        self.checks.le(CHECK_W_ENDS, ts, d.l_0out + d.l_mout, self.l_in0);
        self.check_u(ts, d.u_min);
        self.check_u(ts, d.u_max);

        let v_left = self.pattern.left_boundary_state().v;
        let cap = 2.0 * self.cfg.alpha * res.q.cosh();
        let worst = self
            .trace_history
            .iter()
            .map(|&(v, l_in)| (v_left - v).abs() - cap * l_in)
            .fold(f64::NEG_INFINITY, f64::max);
        if worst > f64::NEG_INFINITY {
            self.checks.le(CHECK_TRACE, ts, worst, 0.0);
        }
        self.trace_history.push((v_left, d.l_in));

        self.rh_max = self.rh_max.max(frame.rh_max);
        self.rh_sum += frame.rh_max;
        if let Some(w) = self.frames.as_mut() {
            let f = if self.cfg.deshift { frame.deshift(self.v_bar) } else { frame.clone() };
            output::write_frame(w, &f)?;
        }
        if self.cfg.keep_profiles {
            self.profiles.push(Profile {
                t: ts,
                y: self.pattern.cell_bounds(),
                u: self.pattern.states().iter().map(|s| s.u).collect(),
            });
        }
        self.samples.push(SampleRow { step, diag: d, rh_max: frame.rh_max });
        self.last_frame = Some(frame);
        Ok(())
    }

    fn finish(mut self, status: String, started: Instant) -> Result<RunOutput> {
        if let Some(w) = self.frames.as_mut() {
            w.flush()?;
        }
        let res = self.res.clone();
        let final_diag = match self.samples.last() {
            Some(s) => s.diag.clone(),
            None => compute_diag(&self.pattern, res.xi, res.xi_gen, self.cfg.k_max)?,
        };
        let t1 = res.flocking.t1;
        let series: Vec<(f64, f64)> = self.samples.iter().map(|s| (s.diag.t, s.diag.osc_v)).collect();
        let (fit, fit_error) = match fit_decay(&series, t1) {
            Ok((c, lambda_hat)) => (Some(DecayFit { t0: t1, c, lambda_hat }), None),
            Err(e) => (None, Some(e.to_string())),
        };
        let flocking_check = match (self.cfg.check_flocking, res.flocking.lambda_of_xi_bar) {
            (true, Some(lambda)) => Some(flocking_check(&self.samples, t1, lambda, fit.as_ref())),
            _ => None,
        };
        let tail_start = 5.0 / res.mass;
        let momentum_sup_tail = self
            .samples
            .iter()
            .filter(|s| s.diag.t >= tail_start)
            .map(|s| s.diag.momentum.abs())
            .chain(self.step_momenta.iter().filter(|m| m.0 >= tail_start).flat_map(|m| [m.1.abs(), m.2.abs()]))
            .fold(0.0, f64::max);
        let stats = self.pattern.stats();
        let report = RunReport {
            status,
            nu: self.cfg.nu,
            alpha: self.cfg.alpha,
            t_end: self.cfg.t_end,
            v_bar: self.v_bar,
            flocking: res.flocking,
            final_diag,
            fit,
            fit_error,
            flocking_check,
            mass_error_max: self.mass_err,
            momentum_recursion_error_max: self.mom_err,
            momentum_sup_tail,
            rh_max: self.rh_max,
            rh_mean: if self.samples.is_empty() { 0.0 } else { self.rh_sum / self.samples.len() as f64 },
            steps: self.pattern.steps_done(),
            splits: self.splits,
            stats,
            events: stats.events(),
            dropped: self.pattern.dropped(),
            fatal_failures: self.checks.fatal_failures(),
            checks: self.checks,
            wall_time_s: started.elapsed().as_secs_f64(),
            resolved: res,
        };
        Ok(RunOutput {
            report,
            samples: self.samples,
            events: self.events,
            profiles: self.profiles,
            step_momenta: self.step_momenta,
            last_frame: self.last_frame,
        })
    }
}

fn flocking_check(samples: &[SampleRow], t1: f64, lambda: f64, fit: Option<&DecayFit>) -> FlockingCheck {
    let mut generation_violations = 0;
    for s in samples {
        for k in 1..=5usize.min(s.diag.f.len().saturating_sub(1)) {
            if s.diag.t > k as f64 * t1 && s.diag.f[k - 1] > 0.0 {
                generation_violations += 1;
            }
        }
    }
    let calib = samples.iter().find(|s| s.diag.t >= t1);
    let calibrated_c = calib.map_or(0.0, |s| s.diag.osc_v * (lambda * s.diag.t).exp());
    let decay_violations = samples
        .iter()
        .filter(|s| s.diag.t >= t1)
        .filter(|s| s.diag.osc_v > calibrated_c * (-lambda * s.diag.t).exp() * (1.0 + 1e-9))
        .count() as u64;
    let lambda_hat = fit.map(|f| f.lambda_hat);
    FlockingCheck {
        t1,
        lambda,
        generation_violations,
        decay_violations,
        calibrated_c,
        lambda_hat,
        rate_ok: lambda_hat.is_some_and(|l| l >= 0.5 * lambda),
    }
}

/// Runs one configuration on `data` (normalized first). With `out_dir`, writes
/// `diag.csv`, `frames.jsonl`, `report.json` and optionally `events.csv`;
/// outputs are flushed even when the run stops on an error.
pub fn run(cfg: &SimConfig, data: &InitialData, out_dir: Option<&Path>) -> Result<RunOutput> {
    let started = Instant::now();
    let data = data.normalize();
    let res = cfg.resolve(&data)?;
    let mut sim = Sim::new(cfg, &data, res, out_dir)?;
    let outcome = sim.run_loop();
    let status = match &outcome {
        Ok(()) => "ok".to_string(),
        Err(Error::EventCapExceeded { .. }) => "event_cap".to_string(),
        Err(e) => format!("error: {e}"),
    };
    let out = sim.finish(status, started)?;
    if let Some(dir) = out_dir {
        output::write_run(dir, cfg, &out)?;
    }
    outcome.map(|()| out)
}
