//! Design library and simulation laboratory for approximation-free,
//! chattering-free quasi-sliding-mode (QSM) tracking control of unknown
//! strict-feedback nonlinear systems.
//!
//! The controller here needs no model of the plant beyond the sign of its
//! control gain. Instead of forcing the sliding variable σ to zero with a
//! discontinuous law, it keeps |σ(t)| inside a shrinking envelope
//! ρ(t) = ρ₀e^(−μt) + ρ∞ using the smooth feedback
//! u = −sign(g)·tan(π·σ/(2ρ(t))), which grows without bound as σ
//! approaches the envelope edge and thereby traps the trajectory. After a
//! computable fixed time the trajectory stays inside the prescribed band
//! |σ| ≤ ε (the quasi-sliding mode), and with binomially-chosen surface
//! coefficients the tracking error inherits an explicit steady-state
//! bound.
//!
//! Module map, bottom-up:
//! - [`surface`]: sliding variables σ = cᵀe, Hurwitz checks, the binomial
//!   coefficient rule, and per-derivative tracking bounds.
//! - [`envelope`]: the reaching envelope ρ(t), its feasibility conditions,
//!   the analytic reaching-time bound, and ρ₀ sizing.
//! - [`controller`]: the tangent-barrier QSM law (clamped and saturated at
//!   the singularity) plus a relay sliding-mode baseline for chattering
//!   comparisons.
//! - [`expr`]: the expression language used for user-defined dynamics,
//!   disturbances, and reference derivatives.
//! - [`plant`]: strict-feedback plant models, reference signals, builtin
//!   benchmark systems, and design-assumption validation.
//! - [`sim`]: fixed-step RK4 closed-loop integration, trajectory/CSV
//!   recording, metrics, and guarantee verification.
//!
//! Everything is deterministic: no randomness, no global state, and
//! identical inputs produce bit-identical trajectories.

pub mod controller;
pub mod envelope;
pub mod error;
pub mod expr;
pub mod plant;
pub mod sim;
pub mod surface;

pub use controller::{ControlLaw, ControlOutput, QsmcLaw, RelaySmcLaw};
pub use envelope::{suggest_rho0, suggest_rho0_with_margin, Envelope, Rho0Suggestion};
pub use error::{Error, Result};
pub use plant::{
    builtin, validate_assumptions, AssumptionReport, BuiltinSystem, GainSign, InitialCondition,
    PlantModel, ReferenceSignal, ScalarFn,
};
pub use sim::{
    chattering_index, measure_reaching_time, simulate, verify_guarantees, ControlMode,
    GuaranteeReport, Metrics, MonitorPolicy, Sample, SimAbort, SimConfig, SimError, Trajectory,
};
pub use surface::{sign, ErrorState, SurfaceSpec};
