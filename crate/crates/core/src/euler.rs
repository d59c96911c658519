//! Eulerian reconstruction of a Lagrangian pattern: free boundaries,
//! the coordinate map, densities, momenta and jump-condition residuals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::riemann::{h, ln_u_jump, LagState};
use crate::tracker::WavePattern;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceSegment {
    pub t0: f64,
    pub t1: f64,
    pub left: LagState,
    pub right: LagState,
}

/// Piecewise-constant history of the two boundary cells.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryTrace {
    pub a0: f64,
    pub segments: Vec<TraceSegment>,
    t_start: f64,
    left: LagState,
    right: LagState,
    closed_left: f64,
    closed_right: f64,
}

impl BoundaryTrace {
    pub fn new(a0: f64, pattern: &WavePattern) -> Self {
        Self {
            a0,
            segments: Vec::new(),
            t_start: pattern.t(),
            left: pattern.left_boundary_state(),
            right: pattern.right_boundary_state(),
            closed_left: 0.0,
            closed_right: 0.0,
        }
    }

    /// Closes the running segment if either boundary state changed.
    pub fn update(&mut self, pattern: &WavePattern) {
        let (l, r) = (pattern.left_boundary_state(), pattern.right_boundary_state());
        if l == self.left && r == self.right {
            return;
        }
        let t = pattern.t();
        self.closed_left += self.left.v * (t - self.t_start);
        self.closed_right += self.right.v * (t - self.t_start);
        self.segments.push(TraceSegment { t0: self.t_start, t1: t, left: self.left, right: self.right });
        self.t_start = t;
        self.left = l;
        self.right = r;
    }

    /// `int_0^t v(0+, s) ds` for `t` at or after the last update.
    pub fn integral_left(&self, t: f64) -> f64 {
        self.closed_left + self.left.v * (t - self.t_start)
    }

    pub fn integral_right(&self, t: f64) -> f64 {
        self.closed_right + self.right.v * (t - self.t_start)
    }

    pub fn a(&self, t: f64) -> f64 {
        self.a0 + self.integral_left(t)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EulerCell {
    pub rho: f64,
    pub v: f64,
    pub m: f64,
    /// Eulerian width `u dy`; zero for cells of zero mass.
    pub dx: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EulerianFrame {
    pub t: f64,
    pub a: f64,
    pub b: f64,
    /// Jump positions from `a` to `b` inclusive.
    pub x: Vec<f64>,
    /// Lagrangian positions of the same jumps, from 0 to `M`.
    pub y: Vec<f64>,
    pub cells: Vec<EulerCell>,
    pub rh_residual: Vec<f64>,
    pub rh_max: f64,
}

pub fn to_euler(pattern: &WavePattern, trace: &BoundaryTrace) -> Result<EulerianFrame> {
    let t = pattern.t();
    let alpha = pattern.alpha();
    let views = pattern.front_views();
    let states = pattern.states();
    let ys = pattern.cell_bounds();
    if states.len() != views.len() + 1 || ys.len() != states.len() + 1 {
        return Err(Error::InconsistentPattern(format!(
            "{} fronts, {} states, {} bounds",
            views.len(),
            states.len(),
            ys.len()
        )));
    }
    let a = trace.a(t);
    let mut x = Vec::with_capacity(ys.len());
    let mut cells = Vec::with_capacity(states.len());
    let mut pos = a;
    x.push(a);
    for (i, s) in states.iter().enumerate() {
        if !(s.u > 0.0 && s.u.is_finite()) {
            return Err(Error::NonPositiveVolume(s.u));
        }
        let dx = s.u * (ys[i + 1] - ys[i]);
        pos += dx;
        x.push(pos);
        let rho = 1.0 / s.u;
        cells.push(EulerCell { rho, v: s.v, m: rho * s.v, dx });
    }
    let b = pos;

    // dx_j/dt = v(0+) + sum_{l<j} (u_l- - u_l+) s_l + u_j- s_j.
    let v0 = states[0].v;
    let mut residual = Vec::with_capacity(views.len() + 2);
    residual.push(0.0);
    let mut drift = v0;
    for (j, f) in views.iter().enumerate() {
        if f.eps == 0.0 {
            return Err(Error::DegenerateJump(j + 1));
        }
        let growth = ln_u_jump(f.family, f.eps).exp_m1();
        let speed = drift + f.left.u * f.speed;
        let mu = f.left.v - 2.0 * alpha * h(f.eps) / growth;
        residual.push((speed - mu).abs());
        drift -= f.left.u * growth * f.speed;
    }
    residual.push((drift - states[states.len() - 1].v).abs());
    let rh_max = residual.iter().copied().fold(0.0, f64::max);
    Ok(EulerianFrame { t, a, b, x, y: ys, cells, rh_residual: residual, rh_max })
}

impl EulerianFrame {
    pub fn mass(&self) -> f64 {
        self.cells.iter().map(|c| c.rho * c.dx).sum()
    }

    pub fn momentum(&self) -> f64 {
        self.cells.iter().map(|c| c.rho * c.v * c.dx).sum()
    }

    /// Undoes the mean-velocity shift: `x -> x + v_bar t`, `v -> v + v_bar`.
    pub fn deshift(&self, v_bar: f64) -> Self {
        let mut out = self.clone();
        let dx = v_bar * self.t;
        out.a += dx;
        out.b += dx;
        for x in &mut out.x {
            *x += dx;
        }
        for c in &mut out.cells {
            c.v += v_bar;
            c.m = c.rho * c.v;
        }
        out
    }

    /// Density and velocity at `x`; zero outside `[a, b]`.
    pub fn sample(&self, x: f64) -> (f64, f64) {
        if x < self.a || x > self.b {
            return (0.0, 0.0);
        }
        let i = self.x.partition_point(|&p| p <= x).saturating_sub(1).min(self.cells.len() - 1);
        (self.cells[i].rho, self.cells[i].v)
    }
}

pub fn rh_residual_max(frame: &EulerianFrame) -> f64 {
    frame.rh_max
}
