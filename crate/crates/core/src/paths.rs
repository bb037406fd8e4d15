//! Exact event-driven simulation.
//!
//! Jumps and resets are driven by one exponential clock of rate
//! `lambda + Lambda`; each tick is a reset with probability
//! `Lambda / (lambda + Lambda)`, otherwise a jump. Between events the
//! process moves at constant speed `Gamma`, so every quantity below is
//! computed exactly with no time step.
//!
//! Randomness: path `i` under seed `s` uses `ChaCha8Rng` seeded with `s` on
//! stream `i`, so a path never depends on how work is split across threads.

use std::io::Write;
use std::sync::Arc;

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp;

use crate::error::{Error, Result};
use crate::model::{JumpLaw, ValidatedParams};

pub const DEFAULT_EVENT_BUDGET: u64 = 1_000_000_000;

/// Generator for path `stream` under `seed`.
pub fn path_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EventKind {
    Jump(f64),
    Reset,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EventLog {
    pub horizon: f64,
    pub events: Vec<Event>,
    pub seed: u64,
    pub stream: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitCause {
    DriftHit,
    JumpOvershoot,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExitRecord {
    pub exit_time: f64,
    pub cause: ExitCause,
    pub n_resets: u64,
    pub n_jumps: u64,
}

/// Where a sampled `X(tau)` sits relative to the propagator's atoms.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StateClass {
    /// No event before `tau`: the drift front `x0 + Gamma tau`.
    Front,
    /// `Gamma = 0` and the last event was a reset: exactly at the origin.
    Origin,
    Continuous,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StateSample {
    pub x: f64,
    pub class: StateClass,
    pub n_events: u64,
}

#[derive(Clone)]
enum JumpSampler {
    Exponential(Exp<f64>),
    Quantile(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

/// Per-parameter simulation state shared by all paths.
#[derive(Clone)]
pub struct Simulator {
    drift: f64,
    total_rate: f64,
    reset_share: f64,
    clock: Option<Exp<f64>>,
    jumps: JumpSampler,
    x0: f64,
}

impl std::fmt::Debug for Simulator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Simulator")
            .field("drift", &self.drift)
            .field("total_rate", &self.total_rate)
            .field("reset_share", &self.reset_share)
            .field("x0", &self.x0)
            .finish()
    }
}

enum Tick {
    Jump(f64),
    Reset,
}

impl Simulator {
    pub fn new(params: &ValidatedParams) -> Result<Self> {
        let jumps = match &params.jump_law {
            JumpLaw::Exponential { rate } => JumpSampler::Exponential(Exp::new(*rate).expect("validated rate")),
            JumpLaw::Custom(c) => match (&c.quantile, params.lambda_jump > 0.0) {
                (Some(q), _) => JumpSampler::Quantile(q.clone()),
                (None, true) => return Err(Error::MissingSampler),
                // never asked for a jump
                (None, false) => JumpSampler::Quantile(Arc::new(|_| 0.0)),
            },
        };
        let total = params.lambda_jump + params.lambda_reset;
        Ok(Simulator {
            drift: params.gamma_drift,
            total_rate: total,
            reset_share: if total > 0.0 { params.lambda_reset / total } else { 0.0 },
            clock: if total > 0.0 { Some(Exp::new(total).expect("positive rate")) } else { None },
            jumps,
            x0: params.x0,
        })
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    fn wait<R: Rng>(&self, rng: &mut R) -> f64 {
        match &self.clock {
            Some(c) => rng.sample(c),
            None => f64::INFINITY,
        }
    }

    fn tick<R: Rng>(&self, rng: &mut R) -> Tick {
        let u: f64 = rng.random();
        if u < self.reset_share {
            Tick::Reset
        } else {
            Tick::Jump(match &self.jumps {
                JumpSampler::Exponential(e) => rng.sample(e),
                JumpSampler::Quantile(q) => q(rng.sample(Open01)),
            })
        }
    }

    /// All events in `(0, horizon]`.
    pub fn events<R: Rng>(&self, horizon: f64, rng: &mut R) -> Vec<Event> {
        let mut out = Vec::new();
        let mut t = 0.0;
        loop {
            t += self.wait(rng);
            if t > horizon {
                return out;
            }
            let kind = match self.tick(rng) {
                Tick::Reset => EventKind::Reset,
                Tick::Jump(u) => EventKind::Jump(u),
            };
            out.push(Event { time: t, kind });
        }
    }

    /// `X(tau)` from `x0`, simulated without storing events.
    pub fn state<R: Rng>(&self, x0: f64, tau: f64, rng: &mut R) -> StateSample {
        let mut t = 0.0;
        let mut x = x0;
        let mut n = 0u64;
        let mut last_reset = false;
        loop {
            let dt = self.wait(rng);
            if t + dt > tau {
                x += self.drift * (tau - t);
                break;
            }
            t += dt;
            n += 1;
            match self.tick(rng) {
                Tick::Reset => {
                    x = 0.0;
                    last_reset = true;
                }
                Tick::Jump(u) => {
                    x += self.drift * dt + u;
                    last_reset = false;
                }
            }
        }
        let class = if n == 0 {
            StateClass::Front
        } else if self.drift == 0.0 && last_reset {
            StateClass::Origin
        } else {
            StateClass::Continuous
        };
        StateSample { x, class, n_events: n }
    }

    /// Whether the path from `x0` enters `[lo, hi]` at some time in `[0, tau]`.
    pub fn visits<R: Rng>(&self, x0: f64, lo: f64, hi: f64, tau: f64, rng: &mut R) -> bool {
        let inside = |x: f64| (lo..=hi).contains(&x);
        let mut t = 0.0;
        let mut x = x0;
        if inside(x) {
            return true;
        }
        loop {
            let dt = self.wait(rng);
            let run = dt.min(tau - t);
            let end = x + self.drift * run;
            // drift sweeps [x, end] continuously
            if x < lo && end >= lo {
                return true;
            }
            if t + dt > tau {
                return false;
            }
            t += dt;
            x = match self.tick(rng) {
                Tick::Reset => 0.0,
                Tick::Jump(u) => end + u,
            };
            if inside(x) {
                return true;
            }
        }
    }

    /// First time `X` leaves `[0, b]` from `x0`, with at most `budget` events.
    pub fn first_exit<R: Rng>(&self, b: f64, x0: f64, budget: u64, rng: &mut R) -> Result<ExitRecord> {
        if !(0.0..b).contains(&x0) {
            return Err(Error::DomainError(format!("start x0 = {x0} must lie in [0, {b})")));
        }
        let mut t = 0.0;
        let mut x = x0;
        let (mut n_resets, mut n_jumps) = (0u64, 0u64);
        loop {
            if n_resets + n_jumps >= budget || (self.drift == 0.0 && self.clock.is_none()) {
                return Err(Error::NoExitBudget { budget, censored: 1 });
            }
            let dt = self.wait(rng);
            if self.drift > 0.0 {
                let hit = (b - x) / self.drift;
                if hit <= dt {
                    return Ok(ExitRecord { exit_time: t + hit, cause: ExitCause::DriftHit, n_resets, n_jumps });
                }
            }
            t += dt;
            match self.tick(rng) {
                Tick::Reset => {
                    x = 0.0;
                    n_resets += 1;
                }
                Tick::Jump(u) => {
                    x += self.drift * dt + u;
                    n_jumps += 1;
                    if x >= b {
                        return Ok(ExitRecord { exit_time: t, cause: ExitCause::JumpOvershoot, n_resets, n_jumps });
                    }
                }
            }
        }
    }
}

/// Jump and reset events in `(0, horizon]` for path 0 of `seed`.
pub fn simulate_events(params: &ValidatedParams, horizon: f64, seed: u64) -> Result<EventLog> {
    simulate_events_stream(params, horizon, seed, 0)
}

pub fn simulate_events_stream(params: &ValidatedParams, horizon: f64, seed: u64, stream: u64) -> Result<EventLog> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::DomainError(format!("horizon = {horizon} must be finite and > 0")));
    }
    let sim = Simulator::new(params)?;
    let mut rng = path_rng(seed, stream);
    Ok(EventLog { horizon, events: sim.events(horizon, &mut rng), seed, stream })
}

/// `X(t)` along a logged path.
pub fn state_at(log: &EventLog, params: &ValidatedParams, t: f64) -> Result<f64> {
    if !(0.0..=log.horizon).contains(&t) {
        return Err(Error::OutOfHorizon { t, horizon: log.horizon });
    }
    let past = log.events.partition_point(|e| e.time <= t);
    let events = &log.events[..past];
    let (start, origin, since) = match events.iter().rposition(|e| e.kind == EventKind::Reset) {
        Some(i) => (0.0, events[i].time, &events[i + 1..]),
        None => (params.x0, 0.0, events),
    };
    let jumps: f64 = since
        .iter()
        .map(|e| match e.kind {
            EventKind::Jump(u) => u,
            EventKind::Reset => 0.0,
        })
        .sum();
    Ok(start + params.gamma_drift * (t - origin) + jumps)
}

/// First exit from `[0, b]` for path 0 of `seed`, starting at `params.x0`.
pub fn first_exit(params: &ValidatedParams, b: f64, seed: u64) -> Result<ExitRecord> {
    first_exit_with_budget(params, b, seed, 0, DEFAULT_EVENT_BUDGET)
}

pub fn first_exit_with_budget(
    params: &ValidatedParams,
    b: f64,
    seed: u64,
    stream: u64,
    budget: u64,
) -> Result<ExitRecord> {
    let sim = Simulator::new(params)?;
    sim.first_exit(b, params.x0, budget, &mut path_rng(seed, stream))
}

/// `Y = y0 e^{+x}` or `y0 e^{-x}`.
pub fn map_to_observable(x: f64, params: &ValidatedParams) -> f64 {
    params.y0 * (params.observable_sign.as_f64() * x).exp()
}

/// One row per event: `time,kind,size,x_after`.
pub fn write_path_csv<W: Write>(log: &EventLog, params: &ValidatedParams, out: &mut W) -> std::io::Result<()> {
    writeln!(out, "time,kind,size,x_after")?;
    writeln!(out, "0,start,0,{}", params.x0)?;
    let mut x = params.x0;
    let mut t = 0.0;
    for e in &log.events {
        x += params.gamma_drift * (e.time - t);
        t = e.time;
        let (kind, size) = match e.kind {
            EventKind::Jump(u) => {
                x += u;
                ("jump", u)
            }
            EventKind::Reset => {
                x = 0.0;
                ("reset", 0.0)
            }
        };
        writeln!(out, "{},{kind},{size},{x}", e.time)?;
    }
    Ok(())
}
