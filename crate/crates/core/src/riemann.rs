//! Wave curves, strengths, the Riemann solver and propagation speeds of the
//! isothermal p-system `u_t - v_y = 0`, `v_t + (alpha^2/u)_y = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Waves with `|eps|` below this are emitted as "no wave".
pub const ZERO_WAVE: f64 = 1e-14;

const RESIDUAL_TOL: f64 = 1e-13;
const MAX_ITER: usize = 200;

/// Specific volume `u` and velocity `v` of a constant state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LagState {
    pub u: f64,
    pub v: f64,
}

impl LagState {
    pub fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }

    pub fn check(&self) -> Result<()> {
        if self.u > 0.0 && self.u.is_finite() && self.v.is_finite() {
            Ok(())
        } else {
            Err(Error::NonPositiveVolume(self.u))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    One,
    Two,
}

impl Family {
    pub fn other(self) -> Self {
        match self {
            Family::One => Family::Two,
            Family::Two => Family::One,
        }
    }

    pub fn index(self) -> u8 {
        match self {
            Family::One => 1,
            Family::Two => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveSizes {
    pub eps1: f64,
    pub eps2: f64,
    pub middle: LagState,
}

impl WaveSizes {
    pub fn eps(&self, family: Family) -> f64 {
        match family {
            Family::One => self.eps1,
            Family::Two => self.eps2,
        }
    }
}

pub fn h(eps: f64) -> f64 {
    if eps >= 0.0 {
        eps
    } else {
        eps.sinh()
    }
}

fn h_prime(eps: f64) -> f64 {
    if eps >= 0.0 {
        1.0
    } else {
        eps.cosh()
    }
}

/// Signed change of `ln u` across a wave of the given family and strength.
pub fn ln_u_jump(family: Family, eps: f64) -> f64 {
    match family {
        Family::One => 2.0 * eps,
        Family::Two => -2.0 * eps,
    }
}

pub fn lax_state(family: Family, left: LagState, eps: f64, alpha: f64) -> LagState {
    LagState { u: left.u * ln_u_jump(family, eps).exp(), v: left.v + 2.0 * alpha * h(eps) }
}

/// Strength of the family-`family` wave joining volumes `u_left` and `u_right`.
pub fn strength_from_volumes(family: Family, u_left: f64, u_right: f64) -> f64 {
    match family {
        Family::One => 0.5 * (u_right / u_left).ln(),
        Family::Two => 0.5 * (u_left / u_right).ln(),
    }
}

/// Solves the Riemann problem without the zero-wave filter.
pub fn solve_riemann_unfiltered(left: LagState, right: LagState, alpha: f64) -> Result<WaveSizes> {
    left.check()?;
    right.check()?;
    let d = 0.5 * (left.u / right.u).ln();
    let w = (right.v - left.v) / (2.0 * alpha);
    let eps1 = solve_scalar(d, w)?;
    Ok(WaveSizes { eps1, eps2: eps1 + d, middle: lax_state(Family::One, left, eps1, alpha) })
}

pub fn solve_riemann(left: LagState, right: LagState, alpha: f64) -> Result<WaveSizes> {
    let raw = solve_riemann_unfiltered(left, right, alpha)?;
    let d = 0.5 * (left.u / right.u).ln();
    let (eps1, eps2) = filter_zero_waves(raw.eps1, raw.eps2, d);
    Ok(WaveSizes { eps1, eps2, middle: lax_state(Family::One, left, eps1, alpha) })
}

/// Zeroes negligible waves while keeping `eps2 - eps1 = d`.
fn filter_zero_waves(eps1: f64, eps2: f64, d: f64) -> (f64, f64) {
    let small1 = eps1.abs() < ZERO_WAVE;
    let small2 = eps2.abs() < ZERO_WAVE;
    match (small1, small2) {
        (true, true) => (0.0, 0.0),
        (true, false) => (0.0, d),
        (false, true) => (-d, 0.0),
        (false, false) => (eps1, eps2),
    }
}

/// Root of `h(e) + h(e + d) = w`. The left side has slope at least 2, so the
/// root lies within `|g(0)|/2` of zero.
fn solve_scalar(d: f64, w: f64) -> Result<f64> {
    let g = |e: f64| h(e) + h(e + d) - w;
    let scale = |e: f64| 1.0 + h(e).abs() + h(e + d).abs() + w.abs();
    let g0 = g(0.0);
    if g0 == 0.0 {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = if g0 > 0.0 { (-0.5 * g0, 0.0) } else { (0.0, -0.5 * g0) };
    let mut e = 0.5 * (lo + hi);
    let mut ge = g(e);
    for _ in 0..MAX_ITER {
        if ge == 0.0 {
            break;
        }
        if ge > 0.0 {
            hi = e;
        } else {
            lo = e;
        }
        let newton = e - ge / (h_prime(e) + h_prime(e + d));
        let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if next == e || hi - lo <= f64::EPSILON * e.abs().max(f64::MIN_POSITIVE) {
            break;
        }
        e = next;
        ge = g(e);
        if ge.abs() <= 0.25 * f64::EPSILON * scale(e) {
            break;
        }
    }
    if ge.abs() > RESIDUAL_TOL * scale(e) {
        return Err(Error::BracketFailure(format!("riemann residual {ge:e} at eps1 = {e} (d = {d}, w = {w})")));
    }
    Ok(e)
}

pub fn shock_speed(family: Family, u_left: f64, u_right: f64, alpha: f64) -> Result<f64> {
    for u in [u_left, u_right] {
        if !(u > 0.0) {
            return Err(Error::NonPositiveVolume(u));
        }
    }
    let magnitude = alpha / (u_left * u_right).sqrt();
    Ok(match family {
        Family::One => -magnitude,
        Family::Two => magnitude,
    })
}

pub fn char_speed(family: Family, state: LagState, alpha: f64) -> Result<f64> {
    if !(state.u > 0.0) {
        return Err(Error::NonPositiveVolume(state.u));
    }
    Ok(match family {
        Family::One => -alpha / state.u,
        Family::Two => alpha / state.u,
    })
}

/// Assigned front speed: exact Rankine-Hugoniot speed for shocks, the
/// characteristic speed of the right state for rarefactions.
pub fn front_speed(family: Family, eps: f64, left: LagState, right: LagState, alpha: f64) -> Result<f64> {
    if eps < 0.0 {
        shock_speed(family, left.u, right.u, alpha)
    } else {
        char_speed(family, right, alpha)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const E: f64 = std::f64::consts::E;

    #[test]
    fn h_examples() {
        assert_eq!(h(0.0), 0.0);
        assert_eq!(h(0.5), 0.5);
        let expected = -(E - 1.0 / E) / 2.0;
        assert!((h(-1.0) - expected).abs() < 1e-15);
        assert!((h(-1.0) + 1.1752011936).abs() < 1e-10);
    }

    #[test]
    fn lax_state_examples() {
        let left = LagState::new(1.0, 0.0);
        assert_eq!(lax_state(Family::One, left, 0.0, 1.0), left);
        let s = lax_state(Family::One, left, 0.5, 1.0);
        assert!((s.u - E).abs() < 1e-15 && (s.v - 1.0).abs() < 1e-15);
        let s = lax_state(Family::Two, left, -0.5, 1.0);
        assert!((s.u - E).abs() < 1e-15);
        assert!((s.v + 1.04219).abs() < 1e-5);
    }

    #[test]
    fn riemann_examples() {
        let one = LagState::new(1.0, 0.0);
        let w = solve_riemann(one, one, 1.0).unwrap();
        assert_eq!((w.eps1, w.eps2), (0.0, 0.0));
        assert_eq!(w.middle, one);

        let w = solve_riemann(one, LagState::new(E, 1.0), 1.0).unwrap();
        assert!((w.eps1 - 0.5).abs() < 1e-13);
        assert_eq!(w.eps2, 0.0);
        assert!((w.middle.u - E).abs() < 1e-12 && (w.middle.v - 1.0).abs() < 1e-12);

        let right = LagState::new(1.0, -4.0 * 0.5f64.sinh());
        let w = solve_riemann(one, right, 1.0).unwrap();
        assert!((w.eps1 + 0.5).abs() < 1e-13 && (w.eps2 + 0.5).abs() < 1e-13);
        assert!((w.middle.u - 1.0 / E).abs() < 1e-13);
        assert!((w.middle.v + 2.0 * 0.5f64.sinh()).abs() < 1e-13);
    }

    #[test]
    fn riemann_rejects_bad_volume() {
        let ok = LagState::new(1.0, 0.0);
        assert!(matches!(solve_riemann(ok, LagState::new(0.0, 0.0), 1.0), Err(Error::NonPositiveVolume(_))));
    }

    #[test]
    fn speed_examples() {
        assert_eq!(shock_speed(Family::Two, 1.0, 1.0, 1.0).unwrap(), 1.0);
        assert!((shock_speed(Family::Two, 1.0, E, 1.0).unwrap() - 0.60653).abs() < 1e-5);
        assert_eq!(shock_speed(Family::One, 4.0, 1.0, 2.0).unwrap(), -1.0);
        assert_eq!(char_speed(Family::Two, LagState::new(1.0, 0.0), 1.0).unwrap(), 1.0);
        assert_eq!(char_speed(Family::One, LagState::new(2.0, 5.0), 1.0).unwrap(), -0.5);
        assert_eq!(char_speed(Family::Two, LagState::new(0.5, 0.0), 2.0).unwrap(), 4.0);
        assert!(shock_speed(Family::One, -1.0, 1.0, 1.0).is_err());
    }

    fn state() -> impl Strategy<Value = LagState> {
        (-3.0f64..3.0, -3.0f64..3.0).prop_map(|(lu, v)| LagState::new(lu.exp(), v))
    }

    fn alpha() -> impl Strategy<Value = f64> {
        prop_oneof![Just(0.5), Just(1.0), Just(2.0)]
    }

    proptest! {
        #[test]
        fn riemann_identities(l in state(), r in state(), a in alpha()) {
            let w = solve_riemann(l, r, a).unwrap();
            let d = 0.5 * (l.u / r.u).ln();
            prop_assert!((w.eps2 - w.eps1 - d).abs() <= 1e-12);
            let res = h(w.eps1) + h(w.eps2) - (r.v - l.v) / (2.0 * a);
            prop_assert!(res.abs() <= 1e-12);
            let bound = (0.5 * (r.u / l.u).ln().abs()).max((r.v - l.v).abs() / (2.0 * a));
            prop_assert!(w.eps1.abs() + w.eps2.abs() <= bound * (1.0 + 1e-12) + 1e-14);
            let back = lax_state(Family::Two, w.middle, w.eps2, a);
            prop_assert!((back.u - r.u).abs() <= 1e-10 * r.u);
            prop_assert!((back.v - r.v).abs() <= 1e-10 * (1.0 + r.v.abs()));
            if w.eps1 * w.eps2 <= 0.0 {
                prop_assert!((w.eps1.abs() + w.eps2.abs() - (w.eps2 - w.eps1).abs()).abs() <= 1e-15);
            }
        }

        #[test]
        fn h_properties(x in -20.0f64..20.0) {
            prop_assert!(h(x) * x >= 0.0);
            prop_assert!(x.abs() <= h(x).abs());
        }

        #[test]
        fn shock_speed_between_characteristics(ul in -3.0f64..3.0, ur in -3.0f64..3.0, a in alpha()) {
            prop_assume!((ul - ur).abs() > 1e-6);
            let (ul, ur) = (ul.exp(), ur.exp());
            for fam in [Family::One, Family::Two] {
                let s = shock_speed(fam, ul, ur, a).unwrap().abs();
                prop_assert!(s > a / ul.max(ur) && s < a / ul.min(ur));
            }
        }
    }
}
