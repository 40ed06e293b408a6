//! Trajectories of the Lorenz system and of simple ergodic test maps,
//! plus Birkhoff time averages.
//!
//! All arithmetic is plain 64-bit IEEE floating point and every routine
//! is a pure function of its inputs, so trajectories are bitwise
//! reproducible.

use crate::error::{Error, Result};

/// Parameters of the Lorenz system; all three must be strictly positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorenzParams {
    pub sigma: f64,
    pub rho: f64,
    pub beta: f64,
}

impl LorenzParams {
    pub fn new(sigma: f64, rho: f64, beta: f64) -> Result<Self> {
        if !(sigma > 0.0 && rho > 0.0 && beta > 0.0) {
            return Err(Error::InvalidParam(format!(
                "Lorenz parameters must be strictly positive, got ({sigma}, {rho}, {beta})"
            )));
        }
        Ok(Self { sigma, rho, beta })
    }

    /// The classical chaotic parameter set (10, 28, 8/3).
    pub fn classical() -> Self {
        Self {
            sigma: 10.0,
            rho: 28.0,
            beta: 8.0 / 3.0,
        }
    }
}

impl Default for LorenzParams {
    fn default() -> Self {
        Self::classical()
    }
}

/// A point (or a derivative of one) in Lorenz phase space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorenzState {
    pub xi: f64,
    pub upsilon: f64,
    pub zeta: f64,
}

impl LorenzState {
    pub fn new(xi: f64, upsilon: f64, zeta: f64) -> Self {
        Self { xi, upsilon, zeta }
    }

    pub fn is_finite(&self) -> bool {
        self.xi.is_finite() && self.upsilon.is_finite() && self.zeta.is_finite()
    }
}

/// Which coordinate to read off a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    Xi,
    Upsilon,
    Zeta,
}

/// An equally spaced scalar time series with step `dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarSeries {
    pub values: Vec<f64>,
    pub dt: f64,
}

impl ScalarSeries {
    pub fn new(values: Vec<f64>, dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::InvalidParam(format!("dt must be > 0, got {dt}")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("ScalarSeries values"));
        }
        Ok(Self { values, dt })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// A Lorenz trajectory sampled every `tau` time units.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<LorenzState>,
    pub tau: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

fn rhs_raw(s: LorenzState, p: LorenzParams) -> LorenzState {
    LorenzState {
        xi: p.sigma * (s.upsilon - s.xi),
        upsilon: s.xi * (p.rho - s.zeta) - s.upsilon,
        zeta: s.xi * s.upsilon - p.beta * s.zeta,
    }
}

/// Right-hand side of the Lorenz equations at `s`.
pub fn lorenz_rhs(s: LorenzState, p: LorenzParams) -> Result<LorenzState> {
    if !s.is_finite() {
        return Err(Error::NonFinite("lorenz_rhs state"));
    }
    Ok(rhs_raw(s, p))
}

/// One classical fourth-order Runge-Kutta step of size `tau`.
pub fn rk4_step(s: LorenzState, p: LorenzParams, tau: f64) -> Result<LorenzState> {
    assert!(tau >= 0.0, "rk4_step requires tau >= 0, got {tau}");
    if !s.is_finite() {
        return Err(Error::NonFinite("rk4_step state"));
    }
    let k1 = rhs_raw(s, p);
    let half = 0.5 * tau;
    let k2 = rhs_raw(advance(s, k1, half), p);
    let k3 = rhs_raw(advance(s, k2, half), p);
    let k4 = rhs_raw(advance(s, k3, tau), p);
    let sixth = tau / 6.0;
    let next = LorenzState {
        xi: s.xi + sixth * (k1.xi + 2.0 * k2.xi + 2.0 * k3.xi + k4.xi),
        upsilon: s.upsilon + sixth * (k1.upsilon + 2.0 * k2.upsilon + 2.0 * k3.upsilon + k4.upsilon),
        zeta: s.zeta + sixth * (k1.zeta + 2.0 * k2.zeta + 2.0 * k3.zeta + k4.zeta),
    };
    if !next.is_finite() {
        return Err(Error::Overflow);
    }
    Ok(next)
}

fn advance(s: LorenzState, k: LorenzState, h: f64) -> LorenzState {
    LorenzState {
        xi: s.xi + h * k.xi,
        upsilon: s.upsilon + h * k.upsilon,
        zeta: s.zeta + h * k.zeta,
    }
}

/// Integrates `n` RK4 steps from `s0`; returns the n+1 visited states.
pub fn lorenz_trajectory(
    s0: LorenzState,
    p: LorenzParams,
    n: usize,
    tau: f64,
) -> Result<Trajectory> {
    let mut states = Vec::with_capacity(n + 1);
    states.push(s0);
    let mut s = s0;
    for _ in 0..n {
        s = rk4_step(s, p, tau)?;
        states.push(s);
    }
    Ok(Trajectory { states, tau })
}

/// Extracts one coordinate of every state, keeping the time step.
pub fn observe(traj: &Trajectory, component: Component) -> ScalarSeries {
    assert!(!traj.is_empty(), "observe requires a nonempty trajectory");
    let values = traj
        .states
        .iter()
        .map(|s| match component {
            Component::Xi => s.xi,
            Component::Upsilon => s.upsilon,
            Component::Zeta => s.zeta,
        })
        .collect();
    ScalarSeries {
        values,
        dt: traj.tau,
    }
}

/// First `n` points of the circle rotation x -> frac(x + alpha).
pub fn rotation_orbit(x0: f64, alpha: f64, n: usize) -> Vec<f64> {
    assert!((0.0..1.0).contains(&x0), "rotation_orbit requires x0 in [0,1)");
    assert!(n >= 1, "rotation_orbit requires n >= 1");
    let mut orbit = Vec::with_capacity(n);
    let mut x = x0;
    for _ in 0..n {
        orbit.push(x);
        x = (x + alpha).rem_euclid(1.0);
    }
    orbit
}

/// First `n` points of the full logistic map x -> 4x(1-x).
///
/// x0 = 0, 1/2 or 1 lands on a fixed point immediately and is rejected.
pub fn logistic_orbit(x0: f64, n: usize) -> Vec<f64> {
    assert!(
        x0 > 0.0 && x0 < 1.0 && x0 != 0.5,
        "logistic_orbit requires x0 in (0,1) \\ {{0.5}}"
    );
    assert!(n >= 1, "logistic_orbit requires n >= 1");
    let mut orbit = Vec::with_capacity(n);
    let mut x = x0;
    for _ in 0..n {
        orbit.push(x);
        x = 4.0 * x * (1.0 - x);
    }
    orbit
}

/// Time average (1/l) sum of `observable` over the orbit.
pub fn birkhoff_average<F: Fn(f64) -> f64>(orbit: &[f64], observable: F) -> f64 {
    assert!(!orbit.is_empty(), "birkhoff_average requires a nonempty orbit");
    let sum: f64 = orbit.iter().map(|&x| observable(x)).sum();
    sum / orbit.len() as f64
}
