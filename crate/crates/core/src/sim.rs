//! Closed-loop simulation: fixed-step RK4 integration, trajectory
//! recording, and the metrics that check the design guarantees.
//!
//! The loop couples a [`PlantModel`], a [`ReferenceSignal`], and a
//! [`ControlLaw`]: at each evaluation the tracking error and sliding
//! variable are formed from the current state, the law produces `u`, and
//! the plant's dynamics are integrated. `continuous` mode re-evaluates the
//! control at every RK4 stage (the closest fixed-step rendering of a
//! continuous law); `zoh` holds it over the step, emulating a sampled
//! implementation.
//!
//! Runs are deterministic: the same inputs produce bit-identical
//! trajectories. Numerical blow-ups and assumption violations abort with
//! the partial trajectory preserved for diagnosis.

use std::io;

use serde::{Deserialize, Serialize};

use crate::controller::ControlLaw;
use crate::envelope::Envelope;
use crate::error::{Error, Result};
use crate::plant::{PlantModel, ReferenceSignal};
use crate::surface::SurfaceSpec;

/// How the control input is applied across an integration step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControlMode {
    /// Re-evaluate the law at every RK4 stage.
    Continuous,
    /// Compute once per step from the step-start state and hold.
    Zoh,
}

/// What to do when the gain assumptions (sign, floor) fail at an evaluated
/// state mid-run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MonitorPolicy {
    Abort,
    Warn,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    /// Integration step (seconds).
    pub dt: f64,
    /// Total simulated time (seconds).
    pub horizon: f64,
    pub control_mode: ControlMode,
    /// Record every k-th step (1 = every step).
    pub record_stride: usize,
    pub monitor: MonitorPolicy,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: 1e-3,
            horizon: 20.0,
            control_mode: ControlMode::Continuous,
            record_stride: 1,
            monitor: MonitorPolicy::Abort,
        }
    }
}

/// Generous ceiling on steps per run; guards against configs like
/// dt=1e-12 that would otherwise spin for days.
const MAX_STEPS: u64 = 100_000_000;

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.dt.is_finite() || self.dt <= 0.0 {
            return Err(Error::invalid(
                "sim config",
                "dt must be finite and positive",
            ));
        }
        if !self.horizon.is_finite() || self.horizon <= 0.0 {
            return Err(Error::invalid(
                "sim config",
                "horizon must be finite and positive",
            ));
        }
        if self.dt >= self.horizon {
            return Err(Error::invalid(
                "sim config",
                "dt must be smaller than horizon",
            ));
        }
        if self.record_stride == 0 {
            return Err(Error::invalid(
                "sim config",
                "record_stride must be at least 1",
            ));
        }
        if self.steps() > MAX_STEPS {
            return Err(Error::invalid(
                "sim config",
                format!(
                    "horizon/dt = {} exceeds the {MAX_STEPS}-step limit",
                    self.steps()
                ),
            ));
        }
        Ok(())
    }

    /// Number of integration steps; the slack absorbs representation error
    /// in horizon/dt (20.0/1e-3 must be exactly 20000 steps).
    pub fn steps(&self) -> u64 {
        (self.horizon / self.dt + 1e-9).floor() as u64
    }
}

/// One recorded point of the closed loop.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    pub x: Vec<f64>,
    pub u: f64,
    pub sigma: f64,
    pub rho: f64,
    pub e: Vec<f64>,
    pub y_des: f64,
}

/// Run-level bookkeeping attached to a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMetadata {
    pub order: usize,
    pub config: SimConfig,
    pub epsilon: f64,
    /// Control evaluations (during integration) where σ/ρ hit the clamp.
    pub clamp_activations: u64,
    /// Control evaluations (during integration) where |u| hit u_max.
    pub saturation_activations: u64,
    /// Steps at which the assumption monitor fired under the Warn policy.
    pub monitor_warnings: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub metadata: RunMetadata,
}

/// Derived per-run quantities; `None` means "undefined for this run"
/// (e.g. no reaching time when the trajectory never settles in the band).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub measured_reaching_time: Option<f64>,
    /// Samples with |σ| ≥ ρ.
    pub band_violations: usize,
    /// Max over samples of |σ|/ρ.
    pub max_band_ratio: f64,
    /// Max |e⁽⁰⁾| over the final 25% of the run.
    pub steady_state_error: f64,
    /// Total variation of u over [reaching time, end]; None without one.
    pub chattering_tv: Option<f64>,
    /// Sign changes of Δu over the same window.
    pub switch_count: Option<u64>,
    pub control_peak: f64,
}

impl Trajectory {
    pub fn order(&self) -> usize {
        self.metadata.order
    }

    pub fn metrics(&self) -> Metrics {
        let eps = self.metadata.epsilon;
        let reaching = measure_reaching_time(self, eps);
        let mut band_violations = 0usize;
        let mut max_band_ratio = 0.0f64;
        let mut control_peak = 0.0f64;
        for s in &self.samples {
            let ratio = s.sigma.abs() / s.rho;
            if ratio >= 1.0 {
                band_violations += 1;
            }
            max_band_ratio = max_band_ratio.max(ratio);
            control_peak = control_peak.max(s.u.abs());
        }
        let steady_state_error = match self.samples.last() {
            Some(last) => {
                let window = 0.75 * last.t;
                self.samples
                    .iter()
                    .filter(|s| s.t >= window)
                    .map(|s| s.e[0].abs())
                    .fold(0.0, f64::max)
            }
            None => 0.0,
        };
        let chattering = reaching.map(|tr| chattering_index(self, tr));
        Metrics {
            measured_reaching_time: reaching,
            band_violations,
            max_band_ratio,
            steady_state_error,
            chattering_tv: chattering.map(|c| c.0),
            switch_count: chattering.map(|c| c.1),
            control_peak,
        }
    }

    /// Writes samples as CSV: header `t,x1,…,xn,u,sigma,rho,e0,…,e{n-1},ydes`,
    /// one row per sample, every value in full round-trippable precision.
    pub fn write_csv<W: io::Write>(&self, mut w: W) -> io::Result<()> {
        let n = self.order();
        let mut header = String::from("t");
        for i in 1..=n {
            header.push_str(&format!(",x{i}"));
        }
        header.push_str(",u,sigma,rho");
        for i in 0..n {
            header.push_str(&format!(",e{i}"));
        }
        header.push_str(",ydes");
        writeln!(w, "{header}")?;
        for s in &self.samples {
            write!(w, "{:.16e}", s.t)?;
            for v in &s.x {
                write!(w, ",{v:.16e}")?;
            }
            write!(w, ",{:.16e},{:.16e},{:.16e}", s.u, s.sigma, s.rho)?;
            for v in &s.e {
                write!(w, ",{v:.16e}")?;
            }
            writeln!(w, ",{:.16e}", s.y_des)?;
        }
        Ok(())
    }

    pub fn csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is ASCII")
    }
}

/// Smallest recorded time t̂ such that |σ| ≤ ε at every sample from t̂ on;
/// `None` if the trajectory ends outside the band. Resolution is the
/// recording grid (dt·record_stride).
pub fn measure_reaching_time(traj: &Trajectory, epsilon: f64) -> Option<f64> {
    let samples = &traj.samples;
    let last_violation = samples.iter().rposition(|s| s.sigma.abs() > epsilon);
    match last_violation {
        None => samples.first().map(|s| s.t),
        Some(j) if j + 1 == samples.len() => None,
        Some(j) => Some(samples[j + 1].t),
    }
}

/// Total variation of u and the number of sign changes of Δu over samples
/// with t ≥ window_start.
pub fn chattering_index(traj: &Trajectory, window_start: f64) -> (f64, u64) {
    let mut tv = 0.0f64;
    let mut switches = 0u64;
    let mut prev_u: Option<f64> = None;
    let mut last_delta_sign = 0i32;
    for s in traj.samples.iter().filter(|s| s.t >= window_start) {
        if let Some(pu) = prev_u {
            let du = s.u - pu;
            tv += du.abs();
            let ds = crate::surface::sign(du);
            if ds != 0 {
                if last_delta_sign != 0 && ds != last_delta_sign {
                    switches += 1;
                }
                last_delta_sign = ds;
            }
        }
        prev_u = Some(s.u);
    }
    (tv, switches)
}

/// Why a run was cut short.
#[derive(Debug)]
pub enum AbortReason {
    /// An integration step produced NaN/∞ state components.
    NonFiniteState,
    /// Evaluating f, g, d, the reference, or the error state failed.
    Dynamics(Error),
    /// g(x) had the wrong sign (or was zero) at an evaluated state.
    GainSignViolation { gain: f64 },
    /// |g(x)| fell below the declared floor.
    GainFloorViolation { gain: f64, floor: f64 },
}

impl std::fmt::Display for AbortReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AbortReason::NonFiniteState => write!(f, "state became non-finite"),
            AbortReason::Dynamics(e) => write!(f, "dynamics evaluation failed: {e}"),
            AbortReason::GainSignViolation { gain } => {
                write!(f, "control gain sign assumption violated (g = {gain})")
            }
            AbortReason::GainFloorViolation { gain, floor } => {
                write!(
                    f,
                    "control gain floor assumption violated (|{gain}| < {floor})"
                )
            }
        }
    }
}

/// Diagnostic payload for an aborted run; the partial trajectory holds
/// everything recorded before the failure.
#[derive(Debug)]
pub struct SimAbort {
    pub reason: AbortReason,
    pub t: f64,
    pub step: u64,
    pub state: Vec<f64>,
    pub partial: Trajectory,
}

impl std::fmt::Display for SimAbort {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "step {} at t = {}: {} (state = {:?})",
            self.step, self.t, self.reason, self.state
        )
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    /// Rejected before integration started (bad dimensions or config).
    #[error(transparent)]
    Invalid(#[from] Error),
    /// Aborted mid-run; diagnostics and partial trajectory inside.
    #[error("simulation aborted: {0}")]
    Abort(Box<SimAbort>),
}

/// One classic fourth-order Runge–Kutta step of size `h` from state `x` at
/// time `t`; `f` evaluates the right-hand side at a stage state and time.
pub fn rk4_step<F>(f: &mut F, x: &[f64], t: f64, h: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64], f64) -> Result<Vec<f64>>,
{
    let n = x.len();
    let k1 = f(x, t)?;
    let stage = |base: &[f64], k: &[f64], scale: f64| -> Vec<f64> {
        (0..n).map(|i| base[i] + scale * k[i]).collect()
    };
    let k2 = f(&stage(x, &k1, h / 2.0), t + h / 2.0)?;
    let k3 = f(&stage(x, &k2, h / 2.0), t + h / 2.0)?;
    let k4 = f(&stage(x, &k3, h), t + h)?;
    Ok((0..n)
        .map(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

struct LoopState<'a> {
    plant: &'a PlantModel,
    reference: &'a ReferenceSignal,
    law: &'a ControlLaw,
    clamp_activations: u64,
    saturation_activations: u64,
}

impl LoopState<'_> {
    /// Evaluates the control law from the raw state: error → σ → u.
    /// `count` marks evaluations that drive the integrator (recording-only
    /// evaluations are not tallied).
    fn control(&mut self, x: &[f64], t: f64, count: bool) -> Result<ControlEval> {
        let e = self.reference.error_state(x, t)?;
        let sigma = self.law.surface().sigma(&e);
        let out = self.law.control_detailed(sigma, t);
        if count {
            self.clamp_activations += u64::from(out.band_clamped);
            self.saturation_activations += u64::from(out.saturated);
        }
        Ok(ControlEval {
            u: out.u,
            sigma,
            e: e.values().to_vec(),
        })
    }
}

struct ControlEval {
    u: f64,
    sigma: f64,
    e: Vec<f64>,
}

/// Integrates the closed loop from `x0` over the configured horizon.
///
/// `envelope` is used for recording ρ and for the metrics' band checks; a
/// QSMC law must carry the identical envelope.
pub fn simulate(
    plant: &PlantModel,
    reference: &ReferenceSignal,
    law: &ControlLaw,
    envelope: &Envelope,
    x0: &[f64],
    cfg: &SimConfig,
) -> std::result::Result<Trajectory, SimError> {
    cfg.validate()?;
    let n = plant.order();
    if reference.order() != n {
        return Err(Error::DimensionMismatch {
            context: "reference signal derivatives",
            expected: n + 1,
            got: reference.order() + 1,
        }
        .into());
    }
    if law.surface().order() != n {
        return Err(Error::DimensionMismatch {
            context: "surface coefficients",
            expected: n,
            got: law.surface().order(),
        }
        .into());
    }
    if x0.len() != n {
        return Err(Error::DimensionMismatch {
            context: "initial state",
            expected: n,
            got: x0.len(),
        }
        .into());
    }
    for &v in x0 {
        if !v.is_finite() {
            return Err(Error::NonFinite {
                context: "initial state",
                value: v,
            }
            .into());
        }
    }
    if let ControlLaw::Qsmc(q) = law {
        if q.envelope() != envelope {
            return Err(Error::invalid(
                "simulation envelope",
                "differs from the QSMC law's envelope; ρ recording would be inconsistent",
            )
            .into());
        }
    }

    let steps = cfg.steps();
    let dt = cfg.dt;
    let mut x = x0.to_vec();
    let mut samples = Vec::with_capacity((steps as usize / cfg.record_stride) + 1);
    let mut monitor_warnings = 0u64;
    let mut loop_state = LoopState {
        plant,
        reference,
        law,
        clamp_activations: 0,
        saturation_activations: 0,
    };

    let abort = |reason: AbortReason,
                 t: f64,
                 step: u64,
                 state: Vec<f64>,
                 samples: Vec<Sample>,
                 ls: &LoopState,
                 warnings: u64| {
        SimError::Abort(Box::new(SimAbort {
            reason,
            t,
            step,
            state,
            partial: Trajectory {
                samples,
                metadata: RunMetadata {
                    order: n,
                    config: *cfg,
                    epsilon: envelope.epsilon(),
                    clamp_activations: ls.clamp_activations,
                    saturation_activations: ls.saturation_activations,
                    monitor_warnings: warnings,
                },
            },
        }))
    };

    for step in 0..=steps {
        let t = step as f64 * dt;

        // Assumption monitor: one gain evaluation per step.
        if cfg.monitor != MonitorPolicy::Off {
            let g = match plant.gain_value(&x, t) {
                Ok(g) => g,
                Err(e) => {
                    return Err(abort(
                        AbortReason::Dynamics(e),
                        t,
                        step,
                        x,
                        samples,
                        &loop_state,
                        monitor_warnings,
                    ))
                }
            };
            let violation = if !plant.gain_sign().matches(g) {
                Some(AbortReason::GainSignViolation { gain: g })
            } else {
                plant
                    .gain_floor()
                    .filter(|&floor| g.abs() < floor)
                    .map(|floor| AbortReason::GainFloorViolation { gain: g, floor })
            };
            if let Some(reason) = violation {
                match cfg.monitor {
                    MonitorPolicy::Abort => {
                        return Err(abort(
                            reason,
                            t,
                            step,
                            x,
                            samples,
                            &loop_state,
                            monitor_warnings,
                        ))
                    }
                    MonitorPolicy::Warn => monitor_warnings += 1,
                    MonitorPolicy::Off => unreachable!(),
                }
            }
        }

        // The control applied at the step start; also the recorded value.
        // It drives the integrator (and is tallied) only in zoh mode; in
        // continuous mode the stage closure recomputes and tallies stage 1.
        let count_head = cfg.control_mode == ControlMode::Zoh && step < steps;
        let head = match loop_state.control(&x, t, count_head) {
            Ok(c) => c,
            Err(e) => {
                return Err(abort(
                    AbortReason::Dynamics(e),
                    t,
                    step,
                    x,
                    samples,
                    &loop_state,
                    monitor_warnings,
                ))
            }
        };

        if step % cfg.record_stride as u64 == 0 {
            let y_des = match reference.eval_deriv(0, t) {
                Ok(v) => v,
                Err(e) => {
                    return Err(abort(
                        AbortReason::Dynamics(e),
                        t,
                        step,
                        x,
                        samples,
                        &loop_state,
                        monitor_warnings,
                    ))
                }
            };
            samples.push(Sample {
                t,
                x: x.clone(),
                u: head.u,
                sigma: head.sigma,
                rho: envelope.rho(t),
                e: head.e.clone(),
                y_des,
            });
        }
        if step == steps {
            break;
        }

        let held_u = head.u;
        let mode = cfg.control_mode;
        let ls = &mut loop_state;
        let mut rhs = |xs: &[f64], ts: f64| -> Result<Vec<f64>> {
            let u = match mode {
                ControlMode::Zoh => held_u,
                ControlMode::Continuous => ls.control(xs, ts, true)?.u,
            };
            ls.plant.dynamics(xs, u, ts)
        };
        let next = match rk4_step(&mut rhs, &x, t, dt) {
            Ok(v) => v,
            Err(e) => {
                return Err(abort(
                    AbortReason::Dynamics(e),
                    t,
                    step,
                    x,
                    samples,
                    &loop_state,
                    monitor_warnings,
                ))
            }
        };
        if next.iter().any(|v| !v.is_finite()) {
            return Err(abort(
                AbortReason::NonFiniteState,
                t + dt,
                step + 1,
                next,
                samples,
                &loop_state,
                monitor_warnings,
            ));
        }
        x = next;
    }

    Ok(Trajectory {
        samples,
        metadata: RunMetadata {
            order: n,
            config: *cfg,
            epsilon: envelope.epsilon(),
            clamp_activations: loop_state.clamp_activations,
            saturation_activations: loop_state.saturation_activations,
            monitor_warnings,
        },
    })
}

/// Per-clause verdict of [`verify_guarantees`]; `observed`/`limit` are
/// `None` when the quantity is undefined for the run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClauseOutcome {
    pub pass: bool,
    pub observed: Option<f64>,
    pub limit: Option<f64>,
}

/// Pass/fail record of the closed-loop guarantees: band containment
/// (|σ| < ρ at every sample), reaching time within the analytic bound, and
/// — when the surface carries a pole — the steady-state tracking bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GuaranteeReport {
    pub band_containment: ClauseOutcome,
    pub reaching_time: ClauseOutcome,
    /// `None` (clause skipped) when the surface has no pole parameter.
    pub tracking_bound: Option<ClauseOutcome>,
}

impl GuaranteeReport {
    /// True when all present clauses pass (a skipped clause doesn't fail).
    pub fn all_pass(&self) -> bool {
        self.band_containment.pass
            && self.reaching_time.pass
            && self.tracking_bound.as_ref().is_none_or(|c| c.pass)
    }
}

/// Checks a finished trajectory against the guarantees promised by the
/// reaching law and surface design.
pub fn verify_guarantees(
    traj: &Trajectory,
    envelope: &Envelope,
    surface: &SurfaceSpec,
    epsilon: f64,
) -> GuaranteeReport {
    let metrics_eps_independent = {
        let mut max_ratio = 0.0f64;
        let mut contained = true;
        for s in &traj.samples {
            let ratio = s.sigma.abs() / s.rho;
            max_ratio = max_ratio.max(ratio);
            if s.sigma.abs() >= s.rho {
                contained = false;
            }
        }
        (contained && !traj.samples.is_empty(), max_ratio)
    };
    let band_containment = ClauseOutcome {
        pass: metrics_eps_independent.0,
        observed: Some(metrics_eps_independent.1),
        limit: Some(1.0),
    };

    let bound = envelope.reaching_time_bound().ok();
    let measured = measure_reaching_time(traj, epsilon);
    let reaching_time = ClauseOutcome {
        pass: matches!((measured, bound), (Some(m), Some(b)) if m <= b),
        observed: measured,
        limit: bound,
    };

    let tracking_bound = surface.pole().map(|_| {
        let limit = surface
            .tracking_bound(epsilon, 0)
            .expect("pole is set and epsilon validated");
        let observed = match traj.samples.last() {
            Some(last) => {
                let window = 0.75 * last.t;
                traj.samples
                    .iter()
                    .filter(|s| s.t >= window)
                    .map(|s| s.e[0].abs())
                    .fold(0.0, f64::max)
            }
            None => f64::INFINITY,
        };
        ClauseOutcome {
            pass: observed <= limit,
            observed: Some(observed),
            limit: Some(limit),
        }
    });

    GuaranteeReport {
        band_containment,
        reaching_time,
        tracking_bound,
    }
}
