//! The Lotka-Volterra vector field.
//!
//! ```text
//! dH/dt = r·H − a·H·P
//! dP/dt = b·H·P − m·P
//! ```
//!
//! `H` is the prey population, `P` the predator population. The system has a
//! fixed point at the origin and, when `a·b ≠ 0`, an interior one at
//! `(m/b, r/a)`. Along exact solutions the first integral
//! `V = b·H − m·ln H + a·P − r·ln P` is constant, which makes it a convenient
//! accuracy oracle for the fixed-step integrators.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("coefficient `{0}` must be finite, got {1}")]
    NonFiniteCoefficient(&'static str, f64),
    #[error("state component `{0}` must be finite, got {1}")]
    NonFiniteState(&'static str, f64),
    #[error("initial condition `{0}` is invalid: {1}")]
    InvalidInitialCondition(&'static str, f64),
    #[error("no interior fixed point: a = {a}, b = {b}")]
    NoInteriorFixedPoint { a: f64, b: f64 },
    #[error("conserved quantity needs H > 0 and P > 0, got H = {h}, P = {p}")]
    Domain { h: f64, p: f64 },
}

/// Growth and interaction coefficients.
///
/// `r` prey growth rate, `a` predation rate, `b` predator reproduction per
/// prey, `m` predator death rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LVParams {
    r: f64,
    a: f64,
    b: f64,
    m: f64,
}

impl LVParams {
    pub fn new(r: f64, a: f64, b: f64, m: f64) -> Result<Self, DynamicsError> {
        for (name, v) in [("r", r), ("a", a), ("b", b), ("m", m)] {
            if !v.is_finite() {
                return Err(DynamicsError::NonFiniteCoefficient(name, v));
            }
        }
        Ok(Self { r, a, b, m })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn m(&self) -> f64 {
        self.m
    }
}

/// Instantaneous prey/predator pair.
///
/// Negative values are representable: an explicit scheme with a large step
/// can overshoot through zero. Analysis flags them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct State {
    pub h: f64,
    pub p: f64,
}

impl State {
    pub fn new(h: f64, p: f64) -> Result<Self, DynamicsError> {
        if !h.is_finite() {
            return Err(DynamicsError::NonFiniteState("h", h));
        }
        if !p.is_finite() {
            return Err(DynamicsError::NonFiniteState("p", p));
        }
        Ok(Self { h, p })
    }

    pub fn is_finite(&self) -> bool {
        self.h.is_finite() && self.p.is_finite()
    }

    pub fn max_abs(&self) -> f64 {
        self.h.abs().max(self.p.abs())
    }

    /// Max-norm distance between two states.
    pub fn distance(&self, other: &State) -> f64 {
        (self.h - other.h).abs().max((self.p - other.p).abs())
    }
}

/// Time derivative `(dH/dt, dP/dt)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivative {
    pub dh: f64,
    pub dp: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InitialCondition {
    t0: f64,
    h0: f64,
    p0: f64,
}

impl InitialCondition {
    pub fn new(t0: f64, h0: f64, p0: f64) -> Result<Self, DynamicsError> {
        if !t0.is_finite() {
            return Err(DynamicsError::InvalidInitialCondition("t0", t0));
        }
        for (name, v) in [("h0", h0), ("p0", p0)] {
            if !v.is_finite() || v < 0.0 {
                return Err(DynamicsError::InvalidInitialCondition(name, v));
            }
        }
        Ok(Self { t0, h0, p0 })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn h0(&self) -> f64 {
        self.h0
    }

    pub fn p0(&self) -> f64 {
        self.p0
    }

    pub fn state(&self) -> State {
        State {
            h: self.h0,
            p: self.p0,
        }
    }
}

/// Evaluates the vector field.
///
/// Each component is computed in the factored form `a·H·(r/a − P)` and
/// `b·P·(H − m/b)` so that it is exactly zero at the state returned by
/// [`equilibrium`]. The expanded form leaves a rounding residue there.
#[inline]
pub fn rhs(s: State, params: &LVParams) -> Derivative {
    let LVParams { r, a, b, m } = *params;
    let pred_eq = r / a;
    let dh = if a != 0.0 && pred_eq.is_finite() {
        a * s.h * (pred_eq - s.p)
    } else {
        r * s.h - a * s.h * s.p
    };
    let prey_eq = m / b;
    let dp = if b != 0.0 && prey_eq.is_finite() {
        b * s.p * (s.h - prey_eq)
    } else {
        b * s.h * s.p - m * s.p
    };
    Derivative { dh, dp }
}

/// Interior fixed point `(m/b, r/a)`.
pub fn equilibrium(params: &LVParams) -> Result<State, DynamicsError> {
    if params.a == 0.0 || params.b == 0.0 {
        return Err(DynamicsError::NoInteriorFixedPoint {
            a: params.a,
            b: params.b,
        });
    }
    Ok(State {
        h: params.m / params.b,
        p: params.r / params.a,
    })
}

/// First integral `V = b·H − m·ln H + a·P − r·ln P`.
pub fn conserved_quantity(s: State, params: &LVParams) -> Result<f64, DynamicsError> {
    if !(s.h > 0.0 && s.p > 0.0) {
        return Err(DynamicsError::Domain { h: s.h, p: s.p });
    }
    Ok(params.b * s.h - params.m * s.h.ln() + params.a * s.p - params.r * s.p.ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn fig2() -> LVParams {
        LVParams::new(0.2, 0.8, 1.03, 0.04).unwrap()
    }

    fn fig3() -> LVParams {
        LVParams::new(1000.0, 1000.0, 100.0, 1e-5).unwrap()
    }

    #[test]
    fn rejects_non_finite_coefficients() {
        assert!(matches!(
            LVParams::new(f64::NAN, 1.0, 1.0, 1.0),
            Err(DynamicsError::NonFiniteCoefficient("r", _))
        ));
        assert!(LVParams::new(1.0, 1.0, f64::INFINITY, 1.0).is_err());
        assert!(State::new(1.0, f64::NAN).is_err());
    }

    #[test]
    fn initial_condition_rejects_negative_populations() {
        assert!(InitialCondition::new(0.0, -1.0, 1.0).is_err());
        assert!(InitialCondition::new(0.0, 1.0, -0.5).is_err());
        assert!(InitialCondition::new(f64::NAN, 1.0, 1.0).is_err());
        assert!(InitialCondition::new(0.0, 0.0, 0.0).is_ok());
    }

    #[test]
    fn rhs_vanishes_at_origin() {
        let d = rhs(State { h: 0.0, p: 0.0 }, &fig2());
        assert_eq!((d.dh, d.dp), (0.0, 0.0));
    }

    #[test]
    fn rhs_vanishes_at_interior_fixed_point() {
        let p = fig2();
        let d = rhs(equilibrium(&p).unwrap(), &p);
        assert_eq!((d.dh, d.dp), (0.0, 0.0));
    }

    #[test]
    fn rhs_hand_computed_fig2_value() {
        // dH = 0.2·10 − 0.8·10·2 = −14; dP = 1.03·10·2 − 0.04·2 = 20.52
        let d = rhs(State { h: 10.0, p: 2.0 }, &fig2());
        assert_relative_eq!(d.dh, -14.0, epsilon = 1e-12);
        assert_relative_eq!(d.dp, 20.52, epsilon = 1e-12);
    }

    #[test]
    fn equilibrium_values() {
        let e = equilibrium(&fig2()).unwrap();
        assert_relative_eq!(e.h, 0.04 / 1.03, max_relative = 1e-15);
        assert_relative_eq!(e.h, 0.038_834_951_456_310_68, max_relative = 1e-12);
        assert_eq!(e.p, 0.25);

        let sym = LVParams::new(1.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(equilibrium(&sym).unwrap(), State { h: 1.0, p: 1.0 });

        let degenerate = LVParams::new(1.0, 0.0, 1.0, 1.0).unwrap();
        assert!(matches!(
            equilibrium(&degenerate),
            Err(DynamicsError::NoInteriorFixedPoint { .. })
        ));
    }

    #[test]
    fn conserved_quantity_at_unit_state() {
        let one = State { h: 1.0, p: 1.0 };
        assert_eq!(conserved_quantity(one, &fig3()).unwrap(), 1100.0);
        let sym = LVParams::new(1.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(conserved_quantity(one, &sym).unwrap(), 2.0);
    }

    #[test]
    fn conserved_quantity_domain() {
        let p = fig2();
        assert!(conserved_quantity(State { h: 0.0, p: 1.0 }, &p).is_err());
        assert!(conserved_quantity(State { h: 1.0, p: -1.0 }, &p).is_err());
    }

    fn finite_coeff() -> impl Strategy<Value = f64> {
        prop_oneof![-1e3..1e3f64, 1e-6..1e-2f64]
    }

    proptest! {
        #[test]
        fn rhs_zero_at_both_fixed_points(
            r in finite_coeff(), a in finite_coeff(), b in finite_coeff(), m in finite_coeff()
        ) {
            prop_assume!(a != 0.0 && b != 0.0);
            let p = LVParams::new(r, a, b, m).unwrap();
            let e = equilibrium(&p).unwrap();
            let d = rhs(e, &p);
            prop_assert_eq!((d.dh, d.dp), (0.0, 0.0));
            let o = rhs(State { h: 0.0, p: 0.0 }, &p);
            prop_assert_eq!((o.dh, o.dp), (0.0, 0.0));
        }

        #[test]
        fn predator_rescaling_leaves_prey_rate_unchanged(
            h in 0.0..100.0f64, pred in 0.0..100.0f64, scale in 0.1..10.0f64,
            r in -5.0..5.0f64, a in 0.01..5.0f64
        ) {
            let base = LVParams::new(r, a, 1.0, 0.1).unwrap();
            let scaled = LVParams::new(r, a / scale, 1.0, 0.1).unwrap();
            let d0 = rhs(State { h, p: pred }, &base).dh;
            let d1 = rhs(State { h, p: pred * scale }, &scaled).dh;
            prop_assert!((d0 - d1).abs() <= 1e-12 * (1.0 + d0.abs() + (a * h * pred).abs()));
        }
    }
}
