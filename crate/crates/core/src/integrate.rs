//! Trajectory integration with arclength accumulation.
//!
//! The position is augmented with the arclength `s` and the system
//! `(x', y', s') = (u, v, |(u, v)|)` is integrated as one ODE, so the
//! arclength inherits the order and error control of the stepper.
//! Backward integration runs the negated field forward in reversed time.

use thiserror::Error;

use crate::fields::VectorField;

const DEFAULT_STEPS_PER_TAU: f64 = 4000.0;
const MAX_ADAPTIVE_STEPS: usize = 5_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Classical fourth-order Runge-Kutta on a uniform step.
    Rk4,
    /// Dormand-Prince 5(4) with local extrapolation.
    Rk45,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("step must be positive and finite, got {0}")]
    Step(f64),
    #[error("rtol and atol must lie in (0, 1), got rtol = {rtol}, atol = {atol}")]
    Tolerance { rtol: f64, atol: f64 },
    #[error("escape radius must be positive, got {0}")]
    EscapeRadius(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub method: Method,
    /// Fixed step for [`Method::Rk4`], in time units.
    pub step: f64,
    pub rtol: f64,
    pub atol: f64,
    /// Trajectories leaving this radius are aborted and flagged invalid.
    pub escape_radius: f64,
}

impl IntegratorConfig {
    /// RK4 with step `tau / 4000`.
    pub fn default_for_tau(tau: f64) -> Self {
        let step = if tau > 0.0 && tau.is_finite() {
            tau / DEFAULT_STEPS_PER_TAU
        } else {
            1e-3
        };
        IntegratorConfig {
            method: Method::Rk4,
            step,
            rtol: 1e-8,
            atol: 1e-10,
            escape_radius: 1e12,
        }
    }

    pub fn rk4(step: f64) -> Self {
        IntegratorConfig {
            step,
            ..Self::default_for_tau(1.0)
        }
    }

    pub fn rk45(rtol: f64, atol: f64) -> Self {
        IntegratorConfig {
            method: Method::Rk45,
            rtol,
            atol,
            ..Self::default_for_tau(1.0)
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(ConfigError::Step(self.step));
        }
        let unit = |v: f64| v > 0.0 && v < 1.0;
        if !unit(self.rtol) || !unit(self.atol) {
            return Err(ConfigError::Tolerance {
                rtol: self.rtol,
                atol: self.atol,
            });
        }
        if !(self.escape_radius > 0.0) {
            return Err(ConfigError::EscapeRadius(self.escape_radius));
        }
        Ok(())
    }

    /// Stable 64-bit FNV-1a digest of the settings, recorded in field
    /// metadata.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut feed = |bytes: &[u8]| {
            for &b in bytes {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        feed(&[self.method as u8]);
        for v in [self.step, self.rtol, self.atol, self.escape_radius] {
            feed(&v.to_bits().to_le_bytes());
        }
        h
    }
}

/// Outcome of one half-interval integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arclength {
    /// Accumulated arclength; partial when `valid` is false.
    pub length: f64,
    pub valid: bool,
    /// Last finite position reached.
    pub end: [f64; 2],
}

/// A Lagrangian descriptor value at one initial condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Descriptor {
    pub value: f64,
    pub valid: bool,
}

type State = [f64; 3];

struct Augmented<'a> {
    field: &'a VectorField,
    t0: f64,
    sign: f64,
}

impl Augmented<'_> {
    #[inline]
    fn rhs(&self, s: f64, z: &State) -> State {
        let [u, v] = self.field.velocity(z[0], z[1], self.t0 + self.sign * s);
        let (u, v) = (self.sign * u, self.sign * v);
        [u, v, (u * u + v * v).sqrt()]
    }
}

#[inline]
fn axpy(z: &State, h: f64, k: &State) -> State {
    [z[0] + h * k[0], z[1] + h * k[1], z[2] + h * k[2]]
}

#[inline]
fn finite(z: &State) -> bool {
    z.iter().all(|v| v.is_finite())
}

#[inline]
fn escaped(z: &State, radius: f64) -> bool {
    z[0] * z[0] + z[1] * z[1] > radius * radius
}

/// Integrates the augmented system over `[t0, t0 + duration]` (forward) or
/// `[t0 - duration, t0]` (backward) and returns the arclength travelled.
pub fn integrate_arclength(
    field: &VectorField,
    x0: [f64; 2],
    t0: f64,
    duration: f64,
    direction: Direction,
    cfg: &IntegratorConfig,
) -> Arclength {
    let start = [x0[0], x0[1], 0.0];
    if !(duration >= 0.0) || !finite(&start) {
        return Arclength {
            length: 0.0,
            valid: false,
            end: x0,
        };
    }
    if duration == 0.0 {
        return Arclength {
            length: 0.0,
            valid: true,
            end: x0,
        };
    }
    let sys = Augmented {
        field,
        t0,
        sign: direction.sign(),
    };
    match cfg.method {
        Method::Rk4 => rk4(&sys, start, duration, cfg),
        Method::Rk45 => dopri5(&sys, start, duration, cfg),
    }
}

fn finish(z: &State, valid: bool) -> Arclength {
    Arclength {
        length: z[2],
        valid,
        end: [z[0], z[1]],
    }
}

fn rk4(sys: &Augmented<'_>, z: State, duration: f64, cfg: &IntegratorConfig) -> Arclength {
    let mut out = [finish(&z, false)];
    rk4_lanes(std::slice::from_ref(sys), &[z], duration, cfg, &mut out);
    out[0]
}

/// Advances several independent trajectories in lockstep, one RK4 stage at
/// a time across all lanes. Each lane performs exactly the arithmetic of a
/// solo run; interleaving only exposes independent work to the CPU.
fn rk4_lanes(
    systems: &[Augmented<'_>],
    starts: &[State],
    duration: f64,
    cfg: &IntegratorConfig,
    out: &mut [Arclength],
) {
    let lanes = systems.len();
    let n = ((duration / cfg.step) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let h = duration / n as f64;
    let mut z = starts.to_vec();
    let mut done = vec![false; lanes];
    let mut remaining = lanes;
    let mut k1 = vec![[0.0; 3]; lanes];
    let mut k2 = k1.clone();
    let mut k3 = k1.clone();
    for k in 0..n {
        let s = k as f64 * h;
        for l in 0..lanes {
            k1[l] = systems[l].rhs(s, &z[l]);
        }
        for l in 0..lanes {
            k2[l] = systems[l].rhs(s + 0.5 * h, &axpy(&z[l], 0.5 * h, &k1[l]));
        }
        for l in 0..lanes {
            k3[l] = systems[l].rhs(s + 0.5 * h, &axpy(&z[l], 0.5 * h, &k2[l]));
        }
        for l in 0..lanes {
            if done[l] {
                continue;
            }
            let k4 = systems[l].rhs(s + h, &axpy(&z[l], h, &k3[l]));
            let (a, b, c) = (k1[l], k2[l], k3[l]);
            let zl = z[l];
            let next = [
                zl[0] + h / 6.0 * (a[0] + 2.0 * b[0] + 2.0 * c[0] + k4[0]),
                zl[1] + h / 6.0 * (a[1] + 2.0 * b[1] + 2.0 * c[1] + k4[1]),
                zl[2] + h / 6.0 * (a[2] + 2.0 * b[2] + 2.0 * c[2] + k4[2]),
            ];
            let stop = if !finite(&next) {
                Some(zl)
            } else {
                z[l] = next;
                escaped(&next, cfg.escape_radius).then_some(next)
            };
            if let Some(last) = stop {
                out[l] = finish(&last, false);
                done[l] = true;
                remaining -= 1;
            }
        }
        if remaining == 0 {
            return;
        }
    }
    for l in 0..lanes {
        if !done[l] {
            out[l] = finish(&z[l], true);
        }
    }
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const B: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
// B minus the embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

fn combine(z: &State, h: f64, coeffs: &[f64], ks: &[State]) -> State {
    let mut out = *z;
    for (c, k) in coeffs.iter().zip(ks) {
        for i in 0..3 {
            out[i] += h * c * k[i];
        }
    }
    out
}

fn error_norm(err: &State, z: &State, znew: &State, cfg: &IntegratorConfig) -> f64 {
    let mut acc = 0.0;
    for i in 0..3 {
        let sc = cfg.atol + cfg.rtol * z[i].abs().max(znew[i].abs());
        acc += (err[i] / sc).powi(2);
    }
    (acc / 3.0).sqrt()
}

fn initial_step(sys: &Augmented<'_>, z: &State, f0: &State, duration: f64, cfg: &IntegratorConfig) -> f64 {
    let scale = |v: &State| {
        let mut acc = 0.0;
        for i in 0..3 {
            let sc = cfg.atol + cfg.rtol * z[i].abs();
            acc += (v[i] / sc).powi(2);
        }
        (acc / 3.0).sqrt()
    };
    let d0 = scale(z);
    let d1 = scale(f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(duration);
    let z1 = axpy(z, h0, f0);
    let f1 = sys.rhs(h0, &z1);
    let diff = [f1[0] - f0[0], f1[1] - f0[1], f1[2] - f0[2]];
    let d2 = scale(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(1.0 / 5.0)
    };
    (100.0 * h0).min(h1).min(duration)
}

fn dopri5(sys: &Augmented<'_>, mut z: State, duration: f64, cfg: &IntegratorConfig) -> Arclength {
    let mut s = 0.0;
    let mut k1 = sys.rhs(0.0, &z);
    if !finite(&k1) {
        return finish(&z, false);
    }
    let mut h = initial_step(sys, &z, &k1, duration, cfg);
    let mut rejected_last = false;
    for _ in 0..MAX_ADAPTIVE_STEPS {
        if s >= duration {
            return finish(&z, true);
        }
        let last = s + h >= duration * (1.0 - 1e-14);
        if last {
            h = duration - s;
        }
        if h <= 16.0 * f64::EPSILON * duration {
            return finish(&z, false);
        }
        let k2 = sys.rhs(s + C[1] * h, &combine(&z, h, &A2, &[k1]));
        let k3 = sys.rhs(s + C[2] * h, &combine(&z, h, &A3, &[k1, k2]));
        let k4 = sys.rhs(s + C[3] * h, &combine(&z, h, &A4, &[k1, k2, k3]));
        let k5 = sys.rhs(s + C[4] * h, &combine(&z, h, &A5, &[k1, k2, k3, k4]));
        let k6 = sys.rhs(s + C[5] * h, &combine(&z, h, &A6, &[k1, k2, k3, k4, k5]));
        let znew = combine(&z, h, &B[..6], &[k1, k2, k3, k4, k5, k6]);
        let k7 = sys.rhs(s + h, &znew);
        let ks = [k1, k2, k3, k4, k5, k6, k7];
        let mut err = [0.0; 3];
        for (e, k) in E.iter().zip(&ks) {
            for i in 0..3 {
                err[i] += h * e * k[i];
            }
        }
        let en = error_norm(&err, &z, &znew, cfg);
        if !en.is_finite() || !finite(&znew) || !finite(&k7) {
            return finish(&z, false);
        }
        if en <= 1.0 {
            s = if last { duration } else { s + h };
            z = znew;
            k1 = k7;
            if escaped(&z, cfg.escape_radius) {
                return finish(&z, false);
            }
            let mut factor = (0.9 * en.powf(-0.2)).clamp(0.2, 5.0);
            if rejected_last {
                factor = factor.min(1.0);
            }
            rejected_last = false;
            h *= factor;
        } else {
            h *= (0.9 * en.powf(-0.2)).clamp(0.2, 1.0);
            rejected_last = true;
        }
    }
    finish(&z, false)
}

/// Lagrangian descriptor: arclength over `[t0 - tau, t0 + tau]`, the sum of
/// the forward and backward halves.
pub fn compute_m(
    field: &VectorField,
    x0: [f64; 2],
    t0: f64,
    tau: f64,
    cfg: &IntegratorConfig,
) -> Descriptor {
    let mut out = [Descriptor {
        value: 0.0,
        valid: false,
    }];
    compute_m_batch(field, &[x0], t0, tau, cfg, &mut out);
    out[0]
}

/// [`compute_m`] for several initial conditions at once. With RK4 all
/// half-trajectories advance together; values are bitwise identical to
/// separate calls.
pub fn compute_m_batch(
    field: &VectorField,
    points: &[[f64; 2]],
    t0: f64,
    tau: f64,
    cfg: &IntegratorConfig,
    out: &mut [Descriptor],
) {
    let regular = tau > 0.0 && points.iter().all(|p| p[0].is_finite() && p[1].is_finite());
    if cfg.method != Method::Rk4 || !regular {
        for (p, o) in points.iter().zip(out.iter_mut()) {
            let fwd = integrate_arclength(field, *p, t0, tau, Direction::Forward, cfg);
            let bwd = integrate_arclength(field, *p, t0, tau, Direction::Backward, cfg);
            *o = Descriptor {
                value: fwd.length + bwd.length,
                valid: fwd.valid && bwd.valid,
            };
        }
        return;
    }
    let mut systems = Vec::with_capacity(2 * points.len());
    let mut starts = Vec::with_capacity(2 * points.len());
    for p in points {
        for sign in [1.0, -1.0] {
            systems.push(Augmented { field, t0, sign });
            starts.push([p[0], p[1], 0.0]);
        }
    }
    let mut halves = vec![finish(&[0.0; 3], false); starts.len()];
    rk4_lanes(&systems, &starts, tau, cfg, &mut halves);
    for (pair, o) in halves.chunks_exact(2).zip(out.iter_mut()) {
        *o = Descriptor {
            value: pair[0].length + pair[1].length,
            valid: pair[0].valid && pair[1].valid,
        };
    }
}
