//! Strict-feedback plant models, reference signals, and assumption checks.
//!
//! A plant is the chain ẋᵢ = x_{i+1} (i < n) closed by
//! ẋₙ = f(x) + g(x)·u + d(t). The controller never sees f, g, or d — only
//! the sign of g — so the design assumptions it rests on are carried here
//! as declared metadata: `gain_sign` with an optional `gain_floor`
//! (|g(x)| ≥ ḡ > 0 with known sign), an optional disturbance bound
//! (|d(t)| < d̄), and optional per-initial-condition error bounds
//! (|e⁽ⁱ⁾(0)| < ēᵢ). [`validate_assumptions`] spot-checks what is checkable
//! before a run; the simulation loop re-checks the gain assumptions at
//! every evaluated state.
//!
//! Two benchmark systems ship as builtins: `"pendulum"` (an inverted
//! pendulum, order 2) and `"example2"` (a fourth-order numerical system
//! with a state-dependent gain and a piecewise disturbance).

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::envelope::{suggest_rho0, Envelope};
use crate::error::{Error, Result};
use crate::expr::{self, EvalContext, EvalError, Expr};
use crate::surface::{ErrorState, SurfaceSpec};

/// Declared sign of the control gain g(x): the single bit of model
/// knowledge the control law consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum GainSign {
    Positive,
    Negative,
}

impl GainSign {
    pub fn as_f64(self) -> f64 {
        match self {
            GainSign::Positive => 1.0,
            GainSign::Negative => -1.0,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            GainSign::Positive => 1,
            GainSign::Negative => -1,
        }
    }

    /// Whether an observed gain value has this sign (zero matches neither).
    pub fn matches(self, g: f64) -> bool {
        match self {
            GainSign::Positive => g > 0.0,
            GainSign::Negative => g < 0.0,
        }
    }
}

impl TryFrom<i8> for GainSign {
    type Error = String;

    fn try_from(v: i8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(GainSign::Positive),
            -1 => Ok(GainSign::Negative),
            other => Err(format!("gain_sign must be 1 or -1, got {other}")),
        }
    }
}

impl From<GainSign> for i8 {
    fn from(s: GainSign) -> i8 {
        s.as_i8()
    }
}

type NativeFn = Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>;

/// A scalar function of (state, time): either a native closure (builtins,
/// test fixtures) or a parsed expression (user configs).
#[derive(Clone)]
pub enum ScalarFn {
    Native { repr: &'static str, f: NativeFn },
    Parsed(Expr),
}

impl ScalarFn {
    pub fn native(
        repr: &'static str,
        f: impl Fn(&[f64], f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        ScalarFn::Native {
            repr,
            f: Arc::new(f),
        }
    }

    /// Parses an expression source; `order` is the number of admissible
    /// state variables (0 for time-only functions such as disturbances).
    pub fn parse(source: &str, order: usize) -> Result<Self> {
        Ok(ScalarFn::Parsed(expr::parse(source, order)?))
    }

    pub fn eval(&self, x: &[f64], t: f64) -> Result<f64, EvalError> {
        match self {
            ScalarFn::Native { f, .. } => Ok(f(x, t)),
            ScalarFn::Parsed(e) => e.eval(&EvalContext { t, x }),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            ScalarFn::Native { repr, .. } => (*repr).to_string(),
            ScalarFn::Parsed(e) => e.pretty(),
        }
    }
}

impl fmt::Debug for ScalarFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarFn({})", self.describe())
    }
}

/// Order-n strict-feedback dynamics with declared assumption metadata.
#[derive(Debug, Clone)]
pub struct PlantModel {
    name: String,
    order: usize,
    drift: ScalarFn,
    gain: ScalarFn,
    disturbance: ScalarFn,
    gain_sign: GainSign,
    dist_bound: Option<f64>,
    gain_floor: Option<f64>,
}

impl PlantModel {
    pub fn new(
        name: impl Into<String>,
        order: usize,
        drift: ScalarFn,
        gain: ScalarFn,
        disturbance: ScalarFn,
        gain_sign: GainSign,
    ) -> Result<Self> {
        if order == 0 {
            return Err(Error::invalid("plant order", "must be at least 1"));
        }
        Ok(PlantModel {
            name: name.into(),
            order,
            drift,
            gain,
            disturbance,
            gain_sign,
            dist_bound: None,
            gain_floor: None,
        })
    }

    /// Declares the disturbance bound d̄ (|d(t)| < d̄). Metadata only: the
    /// value is reported, never enforced.
    pub fn with_dist_bound(mut self, bound: f64) -> Result<Self> {
        if !bound.is_finite() || bound <= 0.0 {
            return Err(Error::invalid("dist_bound", "must be finite and positive"));
        }
        self.dist_bound = Some(bound);
        Ok(self)
    }

    /// Declares the gain floor ḡ (0 < ḡ ≤ |g(x)|); the simulation monitor
    /// checks it at every evaluated state.
    pub fn with_gain_floor(mut self, floor: f64) -> Result<Self> {
        if !floor.is_finite() || floor <= 0.0 {
            return Err(Error::invalid("gain_floor", "must be finite and positive"));
        }
        self.gain_floor = Some(floor);
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn gain_sign(&self) -> GainSign {
        self.gain_sign
    }

    pub fn dist_bound(&self) -> Option<f64> {
        self.dist_bound
    }

    pub fn gain_floor(&self) -> Option<f64> {
        self.gain_floor
    }

    pub fn drift_repr(&self) -> String {
        self.drift.describe()
    }

    pub fn gain_repr(&self) -> String {
        self.gain.describe()
    }

    pub fn disturbance_repr(&self) -> String {
        self.disturbance.describe()
    }

    pub fn drift_value(&self, x: &[f64], t: f64) -> Result<f64> {
        let v = self.drift.eval(x, t)?;
        if !v.is_finite() {
            return Err(Error::NonFinite {
                context: "drift f(x) evaluation",
                value: v,
            });
        }
        Ok(v)
    }

    pub fn gain_value(&self, x: &[f64], t: f64) -> Result<f64> {
        let v = self.gain.eval(x, t)?;
        if !v.is_finite() {
            return Err(Error::NonFinite {
                context: "control gain g(x) evaluation",
                value: v,
            });
        }
        Ok(v)
    }

    pub fn disturbance_value(&self, t: f64) -> Result<f64> {
        let v = self.disturbance.eval(&[], t)?;
        if !v.is_finite() {
            return Err(Error::NonFinite {
                context: "disturbance d(t) evaluation",
                value: v,
            });
        }
        Ok(v)
    }

    /// Right-hand side of the closed-loop ODE:
    /// `[x2, …, xn, f(x) + g(x)·u + d(t)]`.
    pub fn dynamics(&self, x: &[f64], u: f64, t: f64) -> Result<Vec<f64>> {
        if x.len() != self.order {
            return Err(Error::DimensionMismatch {
                context: "plant state",
                expected: self.order,
                got: x.len(),
            });
        }
        if !u.is_finite() {
            return Err(Error::NonFinite {
                context: "control input u",
                value: u,
            });
        }
        let f = self.drift_value(x, t)?;
        let g = self.gain_value(x, t)?;
        let d = self.disturbance_value(t)?;
        let mut dx = Vec::with_capacity(self.order);
        dx.extend_from_slice(&x[1..]);
        dx.push(f + g * u + d);
        Ok(dx)
    }
}

/// Desired output y_des and its time derivatives, orders 0..=n. The first
/// n feed the error state; the nth is retained for diagnostics.
#[derive(Debug, Clone)]
pub struct ReferenceSignal {
    derivs: Vec<ScalarFn>,
}

impl ReferenceSignal {
    /// `derivs[i]` must be the i-th time derivative of the desired output;
    /// a plant of order n needs n+1 entries.
    pub fn new(derivs: Vec<ScalarFn>) -> Result<Self> {
        if derivs.len() < 2 {
            return Err(Error::invalid(
                "reference signal",
                "needs the desired output and at least its first derivative",
            ));
        }
        Ok(ReferenceSignal { derivs })
    }

    /// Parses n+1 time-only expression strings.
    pub fn from_sources<S: AsRef<str>>(sources: &[S]) -> Result<Self> {
        let derivs = sources
            .iter()
            .map(|s| ScalarFn::parse(s.as_ref(), 0))
            .collect::<Result<Vec<_>>>()?;
        ReferenceSignal::new(derivs)
    }

    /// Plant order this reference is sized for (one less than the number
    /// of stored derivatives).
    pub fn order(&self) -> usize {
        self.derivs.len() - 1
    }

    pub fn eval_deriv(&self, i: usize, t: f64) -> Result<f64> {
        let Some(func) = self.derivs.get(i) else {
            return Err(Error::invalid(
                "reference derivative",
                format!("order {i} requested, only 0..={} available", self.order()),
            ));
        };
        let v = func.eval(&[], t)?;
        if !v.is_finite() {
            return Err(Error::NonFinite {
                context: "reference derivative evaluation",
                value: v,
            });
        }
        Ok(v)
    }

    /// Tracking error vector `[x₁−y_des(t), …, xₙ−y_des⁽ⁿ⁻¹⁾(t)]`.
    pub fn error_state(&self, x: &[f64], t: f64) -> Result<ErrorState> {
        if x.len() != self.order() {
            return Err(Error::DimensionMismatch {
                context: "state vector for error computation",
                expected: self.order(),
                got: x.len(),
            });
        }
        let mut e = Vec::with_capacity(x.len());
        for (i, xi) in x.iter().enumerate() {
            e.push(xi - self.eval_deriv(i, t)?);
        }
        ErrorState::new(e)
    }

    pub fn describe(&self) -> Vec<String> {
        self.derivs.iter().map(ScalarFn::describe).collect()
    }
}

/// A starting state, optionally with the declared error bounds ēᵢ
/// (|e⁽ⁱ⁾(0)| < ēᵢ) used to size the envelope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialCondition {
    pub x0: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_bounds: Option<Vec<f64>>,
}

impl InitialCondition {
    pub fn new(x0: Vec<f64>) -> Self {
        InitialCondition {
            x0,
            error_bounds: None,
        }
    }
}

/// A builtin plant together with its reference signal and the
/// initial-condition sweep it is exercised with.
#[derive(Debug, Clone)]
pub struct BuiltinSystem {
    pub plant: PlantModel,
    pub reference: ReferenceSignal,
    pub initial_conditions: Vec<InitialCondition>,
}

/// Piecewise disturbance driving the fourth-order builtin; boundaries
/// resolve first-match-wins.
pub const EXAMPLE2_DISTURBANCE: &str =
    "pw(t <= 6, 0.5*sin(pi/2*t), t <= 9, sin(pi*t), cos(pi*t) - 1)";

const PENDULUM_GAIN: f64 = 1.0 / (0.01 * 9.8 * 9.8);

/// Looks up a builtin system by name (`"pendulum"` or `"example2"`).
pub fn builtin(name: &str) -> Result<BuiltinSystem> {
    match name {
        "pendulum" => {
            // Inverted pendulum: end mass m = 0.01 kg on a rod of length
            // l = 9.8 m with friction coefficient k = 0.01 and gravity
            // 9.8 m/s² — so both f-coefficients reduce to 1 and the input
            // gain 1/(m·l²) is constant.
            let (gravity, length) = (9.8, 9.8);
            let (friction, mass) = (0.01, 0.01);
            let plant = PlantModel::new(
                "pendulum",
                2,
                ScalarFn::native(
                    "-(9.8/9.8)*sin(x1) - (0.01/0.01)*x2 + sin(x2)",
                    move |x, _| {
                        -(gravity / length) * x[0].sin() - (friction / mass) * x[1] + x[1].sin()
                    },
                ),
                ScalarFn::native("1/(0.01*9.8^2)", |_, _| PENDULUM_GAIN),
                ScalarFn::native("0.5*sin(t)", |_, t| 0.5 * t.sin()),
                GainSign::Positive,
            )?
            .with_dist_bound(0.5)?
            .with_gain_floor(PENDULUM_GAIN)?;
            let reference = ReferenceSignal::new(vec![
                ScalarFn::native("sin(t)", |_, t| t.sin()),
                ScalarFn::native("cos(t)", |_, t| t.cos()),
                ScalarFn::native("-sin(t)", |_, t| -t.sin()),
            ])?;
            let initial_conditions = [[0.9, 0.9], [0.7, 0.7], [0.3, 0.3], [0.1, 0.1]]
                .iter()
                .map(|x0| InitialCondition::new(x0.to_vec()))
                .collect();
            Ok(BuiltinSystem {
                plant,
                reference,
                initial_conditions,
            })
        }
        "example2" => {
            let plant = PlantModel::new(
                "example2",
                4,
                ScalarFn::native("x3*sin(2*x2) + x1*cos(x4)", |x, _| {
                    x[2] * (2.0 * x[1]).sin() + x[0] * x[3].cos()
                }),
                ScalarFn::native("2 - sin(x4)", |x, _| 2.0 - x[3].sin()),
                ScalarFn::parse(EXAMPLE2_DISTURBANCE, 0)?,
                GainSign::Positive,
            )?
            .with_dist_bound(2.0)?
            .with_gain_floor(1.0)?;
            let reference = ReferenceSignal::new(vec![
                ScalarFn::native("sin(t) + cos(0.5*t)", |_, t| t.sin() + (0.5 * t).cos()),
                ScalarFn::native("cos(t) - 0.5*sin(0.5*t)", |_, t| {
                    t.cos() - 0.5 * (0.5 * t).sin()
                }),
                ScalarFn::native("-sin(t) - 0.25*cos(0.5*t)", |_, t| {
                    -t.sin() - 0.25 * (0.5 * t).cos()
                }),
                ScalarFn::native("-cos(t) + 0.125*sin(0.5*t)", |_, t| {
                    -t.cos() + 0.125 * (0.5 * t).sin()
                }),
                ScalarFn::native("sin(t) + 0.0625*cos(0.5*t)", |_, t| {
                    t.sin() + 0.0625 * (0.5 * t).cos()
                }),
            ])?;
            let initial_conditions = [0.5, 0.6, 0.7]
                .iter()
                .map(|&v| InitialCondition::new(vec![v; 4]))
                .collect();
            Ok(BuiltinSystem {
                plant,
                reference,
                initial_conditions,
            })
        }
        other => Err(Error::UnknownBuiltin(other.to_string())),
    }
}

/// Pre-run report on the design assumptions: what is declared, what could
/// be spot-checked, and whether the envelope admits this start.
#[derive(Debug, Clone, Serialize)]
pub struct AssumptionReport {
    /// e⁽ⁱ⁾(0) for the given initial condition.
    pub initial_errors: Vec<f64>,
    pub sigma0: f64,
    /// ρ₀ > |σ(0)|.
    pub c1_satisfied: bool,
    /// Smallest safe ρ₀ (with margin) for this start, and whether it came
    /// out degenerate (all bounds zero).
    pub suggested_rho0: f64,
    pub suggestion_degenerate: bool,
    /// True when the suggestion used declared error bounds rather than the
    /// actual initial errors.
    pub suggestion_from_declared_bounds: bool,
    pub gain_at_x0: f64,
    pub gain_sign_consistent_at_x0: bool,
    /// None when no gain floor is declared.
    pub gain_floor_satisfied_at_x0: Option<bool>,
    pub gain_floor: Option<f64>,
    /// None means the disturbance bound is asserted but unverified.
    pub dist_bound: Option<f64>,
    /// Indices i where a declared bound is violated (|e⁽ⁱ⁾(0)| ≥ ēᵢ).
    pub declared_bound_violations: Vec<usize>,
}

impl AssumptionReport {
    /// True when every checkable item passed. Declared-but-unverifiable
    /// metadata (e.g. the disturbance bound) does not count against this.
    pub fn satisfied(&self) -> bool {
        self.c1_satisfied
            && self.gain_sign_consistent_at_x0
            && self.gain_floor_satisfied_at_x0.unwrap_or(true)
            && self.declared_bound_violations.is_empty()
    }
}

/// Spot-checks the design assumptions for one initial condition: initial
/// errors against declared bounds, σ(0) against ρ₀ (with a suggested ρ₀),
/// and the gain's sign and floor at x₀. Report-only: the caller decides
/// whether failures block a run.
pub fn validate_assumptions(
    plant: &PlantModel,
    reference: &ReferenceSignal,
    surface: &SurfaceSpec,
    envelope: &Envelope,
    ic: &InitialCondition,
) -> Result<AssumptionReport> {
    let n = plant.order();
    if reference.order() != n {
        return Err(Error::DimensionMismatch {
            context: "reference signal derivatives",
            expected: n + 1,
            got: reference.order() + 1,
        });
    }
    if surface.order() != n {
        return Err(Error::DimensionMismatch {
            context: "surface coefficients",
            expected: n,
            got: surface.order(),
        });
    }
    if ic.x0.len() != n {
        return Err(Error::DimensionMismatch {
            context: "initial condition",
            expected: n,
            got: ic.x0.len(),
        });
    }

    let e0 = reference.error_state(&ic.x0, 0.0)?;
    let sigma0 = surface.sigma(&e0);
    let c1_satisfied = envelope.contains_initially(sigma0);

    let mut declared_bound_violations = Vec::new();
    let declared = match &ic.error_bounds {
        Some(bounds) => {
            if bounds.len() != n {
                return Err(Error::DimensionMismatch {
                    context: "declared error bounds",
                    expected: n,
                    got: bounds.len(),
                });
            }
            for (i, &b) in bounds.iter().enumerate() {
                if !b.is_finite() || b <= 0.0 {
                    return Err(Error::invalid(
                        "declared error bounds",
                        format!("bound {i} must be finite and positive, got {b}"),
                    ));
                }
                if e0.values()[i].abs() >= b {
                    declared_bound_violations.push(i);
                }
            }
            Some(bounds.as_slice())
        }
        None => None,
    };

    // Size the envelope from declared bounds when available, else from the
    // actual initial errors.
    let suggestion_basis: Vec<f64> = match declared {
        Some(bounds) => bounds.to_vec(),
        None => e0.values().iter().map(|v| v.abs()).collect(),
    };
    let suggestion = suggest_rho0(surface, &suggestion_basis)?;

    let gain_at_x0 = plant.gain_value(&ic.x0, 0.0)?;

    Ok(AssumptionReport {
        initial_errors: e0.values().to_vec(),
        sigma0,
        c1_satisfied,
        suggested_rho0: suggestion.rho0,
        suggestion_degenerate: suggestion.degenerate,
        suggestion_from_declared_bounds: declared.is_some(),
        gain_at_x0,
        gain_sign_consistent_at_x0: plant.gain_sign().matches(gain_at_x0),
        gain_floor_satisfied_at_x0: plant.gain_floor().map(|fl| gain_at_x0.abs() >= fl),
        gain_floor: plant.gain_floor(),
        dist_bound: plant.dist_bound(),
        declared_bound_violations,
    })
}
