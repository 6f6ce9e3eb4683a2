//! Experiment configuration: one JSON document naming the plant, reference,
//! surface, envelope, and run settings, plus the builder that turns it into
//! live library objects.
//!
//! All functions here return plain `String` errors; the caller maps them to
//! the usage/config exit code. Expression and JSON parse errors keep their
//! line/column positions.

use std::fs;
use std::path::{Path, PathBuf};

use qsmc::controller::{DEFAULT_CLAMP_DELTA, DEFAULT_U_MAX};
use qsmc::plant::{builtin, InitialCondition, PlantModel, ReferenceSignal, ScalarFn};
use qsmc::sim::{ControlMode, SimConfig};
use qsmc::{Envelope, GainSign, SurfaceSpec};
use serde::{Deserialize, Serialize};

/// Schema of the experiment config file. Unknown keys are rejected so typos
/// surface as config errors rather than silently ignored settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub plant: PlantSection,
    /// Required for custom plants; optional override for builtins.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<ReferenceSection>,
    pub surface: SurfaceSection,
    pub envelope: EnvelopeSection,
    #[serde(default)]
    pub sim: SimConfig,
    #[serde(default)]
    pub controller: ControllerSection,
    /// Required for custom plants; optional override for builtins.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_conditions: Option<Vec<Vec<f64>>>,
    /// Declared per-derivative error bounds, applied to every start.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_bounds: Option<Vec<f64>>,
    #[serde(default)]
    pub output: OutputSection,
}

/// Either `{"builtin": name}` or the custom fields; never both.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    /// Drift f(x) as an expression in x1..xn and t.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<String>,
    /// Control gain g(x) as an expression in x1..xn and t.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<String>,
    /// Disturbance d(t), time only. Defaults to "0".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<String>,
    /// Declared sign of g: +1 or -1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gain_sign: Option<i8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dist_bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gain_floor: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSection {
    /// Expressions for y_d and its first n derivatives (n + 1 entries).
    pub derivatives: Vec<String>,
}

/// Either a repeated pole `a` (binomial design) or explicit ascending
/// coefficients whose last entry is 1.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pole: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coeffs: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeSection {
    pub rho0: f64,
    pub rho_inf: f64,
    pub mu: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clamp_delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_max: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    /// File-name stem for per-start outputs; defaults to "traj".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prefix: Option<String>,
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub dt: Option<f64>,
    pub horizon: Option<f64>,
    pub mode: Option<ControlMode>,
    pub out: Option<PathBuf>,
}

/// A fully constructed experiment, ready to run.
#[derive(Debug)]
pub struct Experiment {
    pub plant: PlantModel,
    pub reference: ReferenceSignal,
    pub surface: SurfaceSpec,
    pub envelope: Envelope,
    /// False when ρ∞ < ε < ρ₀ failed and the envelope was admitted
    /// unvalidated; design checks report it, `--force` runs it.
    pub band_condition_ok: bool,
    pub sim: SimConfig,
    pub clamp_delta: f64,
    pub u_max: f64,
    pub initial_conditions: Vec<InitialCondition>,
    pub out_dir: PathBuf,
    /// True when the directory came from --out or the config, as opposed to
    /// the working-directory default; report files are written only then.
    pub out_dir_explicit: bool,
    pub prefix: String,
}

pub fn load(path: &Path) -> Result<ExperimentConfig, String> {
    let text =
        fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    parse(&text).map_err(|e| format!("{}: {e}", path.display()))
}

pub fn parse(text: &str) -> Result<ExperimentConfig, String> {
    serde_json::from_str(text).map_err(|e| e.to_string())
}

pub fn build(cfg: &ExperimentConfig, ov: &Overrides) -> Result<Experiment, String> {
    let (plant, default_reference, default_ics) = build_plant(&cfg.plant)?;
    let n = plant.order();

    let reference = match &cfg.reference {
        Some(sec) => {
            if sec.derivatives.len() != n + 1 {
                return Err(format!(
                    "reference.derivatives: an order-{n} plant needs {} expressions \
                     (the output and its first {n} derivatives), got {}",
                    n + 1,
                    sec.derivatives.len()
                ));
            }
            ReferenceSignal::from_sources(&sec.derivatives)
                .map_err(|e| format!("reference.derivatives: {e}"))?
        }
        None => default_reference.ok_or_else(|| {
            format!(
                "reference: required for custom plants (list the {} derivative expressions)",
                n + 1
            )
        })?,
    };

    let surface = build_surface(&cfg.surface, n)?;

    let e = cfg.envelope;
    let (envelope, band_condition_ok) = match Envelope::new(e.rho0, e.rho_inf, e.mu, e.epsilon) {
        Ok(env) => (env, true),
        // Shape may still be sound with only the band ordering broken;
        // admit it unvalidated so design can report the failure and
        // --force can run it.
        Err(_) => match Envelope::unvalidated(e.rho0, e.rho_inf, e.mu, e.epsilon) {
            Ok(env) => (env, false),
            Err(err) => return Err(format!("envelope: {err}")),
        },
    };

    let mut sim = cfg.sim;
    if let Some(dt) = ov.dt {
        sim.dt = dt;
    }
    if let Some(h) = ov.horizon {
        sim.horizon = h;
    }
    if let Some(m) = ov.mode {
        sim.control_mode = m;
    }
    sim.validate().map_err(|e| format!("sim: {e}"))?;

    if let Some(bounds) = &cfg.error_bounds {
        if bounds.len() != n {
            return Err(format!(
                "error_bounds: expected {n} entries (one per error derivative), got {}",
                bounds.len()
            ));
        }
    }

    let initial_conditions = match &cfg.initial_conditions {
        Some(list) => {
            if list.is_empty() {
                return Err("initial_conditions: must not be empty".to_string());
            }
            list.iter()
                .enumerate()
                .map(|(i, x0)| {
                    if x0.len() != n {
                        return Err(format!(
                            "initial_conditions[{i}]: expected {n} states, got {}",
                            x0.len()
                        ));
                    }
                    if x0.iter().any(|v| !v.is_finite()) {
                        return Err(format!(
                            "initial_conditions[{i}]: every entry must be finite"
                        ));
                    }
                    let mut ic = InitialCondition::new(x0.clone());
                    ic.error_bounds = cfg.error_bounds.clone();
                    Ok(ic)
                })
                .collect::<Result<Vec<_>, String>>()?
        }
        None => {
            let mut ics = default_ics
                .ok_or_else(|| "initial_conditions: required for custom plants".to_string())?;
            if cfg.error_bounds.is_some() {
                for ic in &mut ics {
                    ic.error_bounds = cfg.error_bounds.clone();
                }
            }
            ics
        }
    };

    let clamp_delta = cfg.controller.clamp_delta.unwrap_or(DEFAULT_CLAMP_DELTA);
    let u_max = cfg.controller.u_max.unwrap_or(DEFAULT_U_MAX);

    let explicit_dir = ov.out.clone().or_else(|| cfg.output.dir.clone());
    let out_dir_explicit = explicit_dir.is_some();
    let out_dir = explicit_dir.unwrap_or_else(|| PathBuf::from("."));
    let prefix = cfg
        .output
        .prefix
        .clone()
        .unwrap_or_else(|| "traj".to_string());
    if prefix.is_empty() || prefix.contains(['/', '\\']) {
        return Err("output.prefix: must be a bare file-name stem".to_string());
    }

    Ok(Experiment {
        plant,
        reference,
        surface,
        envelope,
        band_condition_ok,
        sim,
        clamp_delta,
        u_max,
        initial_conditions,
        out_dir,
        out_dir_explicit,
        prefix,
    })
}

type PlantParts = (
    PlantModel,
    Option<ReferenceSignal>,
    Option<Vec<InitialCondition>>,
);

fn build_plant(sec: &PlantSection) -> Result<PlantParts, String> {
    if let Some(name) = &sec.builtin {
        let custom_given = sec.order.is_some()
            || sec.f.is_some()
            || sec.g.is_some()
            || sec.d.is_some()
            || sec.gain_sign.is_some()
            || sec.dist_bound.is_some()
            || sec.gain_floor.is_some();
        if custom_given {
            return Err("plant: `builtin` excludes the custom-plant fields \
                 (order, f, g, d, gain_sign, dist_bound, gain_floor)"
                .to_string());
        }
        let sys = builtin(name).map_err(|e| format!("plant.builtin: {e}"))?;
        return Ok((sys.plant, Some(sys.reference), Some(sys.initial_conditions)));
    }

    let order = sec
        .order
        .ok_or("plant: give either `builtin` or the custom fields; `order` is missing")?;
    let f_src = sec
        .f
        .as_deref()
        .ok_or("plant.f: required for custom plants")?;
    let g_src = sec
        .g
        .as_deref()
        .ok_or("plant.g: required for custom plants")?;
    let sign_raw = sec
        .gain_sign
        .ok_or("plant.gain_sign: required for custom plants (+1 or -1)")?;
    let gain_sign = GainSign::try_from(sign_raw).map_err(|e| format!("plant.gain_sign: {e}"))?;

    let drift = ScalarFn::parse(f_src, order).map_err(|e| format!("plant.f: {e}"))?;
    let gain = ScalarFn::parse(g_src, order).map_err(|e| format!("plant.g: {e}"))?;
    let disturbance =
        ScalarFn::parse(sec.d.as_deref().unwrap_or("0"), 0).map_err(|e| format!("plant.d: {e}"))?;

    let mut plant = PlantModel::new("custom", order, drift, gain, disturbance, gain_sign)
        .map_err(|e| format!("plant: {e}"))?;
    if let Some(b) = sec.dist_bound {
        plant = plant
            .with_dist_bound(b)
            .map_err(|e| format!("plant.dist_bound: {e}"))?;
    }
    if let Some(fl) = sec.gain_floor {
        plant = plant
            .with_gain_floor(fl)
            .map_err(|e| format!("plant.gain_floor: {e}"))?;
    }
    Ok((plant, None, None))
}

fn build_surface(sec: &SurfaceSection, n: usize) -> Result<SurfaceSpec, String> {
    match (sec.pole, &sec.coeffs) {
        (Some(_), Some(_)) => Err("surface: give either `pole` or `coeffs`, not both".to_string()),
        (None, None) => Err("surface: give `pole` (repeated-root design) or `coeffs` \
             (ascending, last entry 1)"
            .to_string()),
        (Some(a), None) => SurfaceSpec::binomial(n, a).map_err(|e| format!("surface.pole: {e}")),
        (None, Some(c)) => {
            if c.len() != n {
                return Err(format!(
                    "surface.coeffs: expected {n} coefficients for an order-{n} plant, got {}",
                    c.len()
                ));
            }
            SurfaceSpec::new(c.clone()).map_err(|e| format!("surface.coeffs: {e}"))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pendulum_json() -> &'static str {
        r#"{
            "plant": {"builtin": "pendulum"},
            "surface": {"pole": 2.0},
            "envelope": {"rho0": 4.0, "rho_inf": 0.05, "mu": 3.0, "epsilon": 0.1}
        }"#
    }

    #[test]
    fn builtin_config_builds_with_defaults() {
        let cfg = parse(pendulum_json()).unwrap();
        let exp = build(&cfg, &Overrides::default()).unwrap();
        assert_eq!(exp.plant.order(), 2);
        assert_eq!(exp.surface.coeffs(), &[2.0, 1.0]);
        assert!(exp.band_condition_ok);
        assert_eq!(exp.initial_conditions.len(), 4);
        assert_eq!(exp.sim.dt, 1e-3);
        assert_eq!(exp.prefix, "traj");
        assert!(!exp.out_dir_explicit);
    }

    #[test]
    fn overrides_take_precedence() {
        let cfg = parse(pendulum_json()).unwrap();
        let ov = Overrides {
            dt: Some(0.5),
            horizon: Some(10.0),
            mode: Some(ControlMode::Zoh),
            out: Some(PathBuf::from("/tmp/x")),
        };
        let exp = build(&cfg, &ov).unwrap();
        assert_eq!(exp.sim.dt, 0.5);
        assert_eq!(exp.sim.horizon, 10.0);
        assert_eq!(exp.sim.control_mode, ControlMode::Zoh);
        assert!(exp.out_dir_explicit);
        assert_eq!(exp.out_dir, PathBuf::from("/tmp/x"));
    }

    #[test]
    fn custom_plant_requires_reference_and_starts() {
        let cfg = parse(
            r#"{
                "plant": {"order": 2, "f": "0", "g": "1", "gain_sign": 1},
                "surface": {"pole": 1.0},
                "envelope": {"rho0": 1.0, "rho_inf": 0.01, "mu": 1.0, "epsilon": 0.1}
            }"#,
        )
        .unwrap();
        let err = build(&cfg, &Overrides::default()).unwrap_err();
        assert!(err.starts_with("reference:"), "{err}");
    }

    #[test]
    fn custom_toy_builds() {
        let cfg = parse(
            r#"{
                "plant": {"order": 2, "f": "0", "g": "1", "gain_sign": 1},
                "reference": {"derivatives": ["0", "0", "0"]},
                "surface": {"coeffs": [1.0, 1.0]},
                "envelope": {"rho0": 1.0, "rho_inf": 0.01, "mu": 1.0, "epsilon": 0.1},
                "initial_conditions": [[0.0, 0.0]]
            }"#,
        )
        .unwrap();
        let exp = build(&cfg, &Overrides::default()).unwrap();
        assert_eq!(exp.plant.disturbance_repr(), "0");
        assert_eq!(exp.initial_conditions.len(), 1);
    }

    #[test]
    fn mixed_builtin_and_custom_fields_rejected() {
        let cfg = parse(
            r#"{
                "plant": {"builtin": "pendulum", "order": 2},
                "surface": {"pole": 2.0},
                "envelope": {"rho0": 4.0, "rho_inf": 0.05, "mu": 3.0, "epsilon": 0.1}
            }"#,
        )
        .unwrap();
        let err = build(&cfg, &Overrides::default()).unwrap_err();
        assert!(err.contains("excludes"), "{err}");
    }

    #[test]
    fn band_condition_failure_is_flagged_not_fatal() {
        let cfg = parse(
            r#"{
                "plant": {"builtin": "pendulum"},
                "surface": {"pole": 2.0},
                "envelope": {"rho0": 4.0, "rho_inf": 0.05, "mu": 3.0, "epsilon": 0.04}
            }"#,
        )
        .unwrap();
        let exp = build(&cfg, &Overrides::default()).unwrap();
        assert!(!exp.band_condition_ok);
    }

    #[test]
    fn nonsensical_envelope_is_fatal() {
        let cfg = parse(
            r#"{
                "plant": {"builtin": "pendulum"},
                "surface": {"pole": 2.0},
                "envelope": {"rho0": -4.0, "rho_inf": 0.05, "mu": 3.0, "epsilon": 0.1}
            }"#,
        )
        .unwrap();
        let err = build(&cfg, &Overrides::default()).unwrap_err();
        assert!(err.starts_with("envelope:"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected_with_location() {
        let err = parse(r#"{"plant": {"builtin": "pendulum"}, "surfce": {}}"#).unwrap_err();
        assert!(err.contains("surfce"), "{err}");
        assert!(err.contains("line"), "{err}");
    }

    #[test]
    fn expression_errors_name_the_field() {
        let cfg = parse(
            r#"{
                "plant": {"order": 2, "f": "x1 +", "g": "1", "gain_sign": 1},
                "reference": {"derivatives": ["0", "0", "0"]},
                "surface": {"pole": 1.0},
                "envelope": {"rho0": 1.0, "rho_inf": 0.01, "mu": 1.0, "epsilon": 0.1},
                "initial_conditions": [[0.0, 0.0]]
            }"#,
        )
        .unwrap();
        let err = build(&cfg, &Overrides::default()).unwrap_err();
        assert!(err.starts_with("plant.f:"), "{err}");
    }

    #[test]
    fn wrong_arity_initial_condition_rejected() {
        let cfg = parse(
            r#"{
                "plant": {"builtin": "pendulum"},
                "surface": {"pole": 2.0},
                "envelope": {"rho0": 4.0, "rho_inf": 0.05, "mu": 3.0, "epsilon": 0.1},
                "initial_conditions": [[0.1, 0.2, 0.3]]
            }"#,
        )
        .unwrap();
        let err = build(&cfg, &Overrides::default()).unwrap_err();
        assert!(err.contains("expected 2 states"), "{err}");
    }

    #[test]
    fn surface_needs_exactly_one_form() {
        let base = |surface: &str| {
            format!(
                r#"{{
                    "plant": {{"builtin": "pendulum"}},
                    "surface": {surface},
                    "envelope": {{"rho0": 4.0, "rho_inf": 0.05, "mu": 3.0, "epsilon": 0.1}}
                }}"#
            )
        };
        let both = parse(&base(r#"{"pole": 2.0, "coeffs": [2.0, 1.0]}"#)).unwrap();
        assert!(build(&both, &Overrides::default()).is_err());
        let neither = parse(&base("{}")).unwrap();
        assert!(build(&neither, &Overrides::default()).is_err());
    }

    #[test]
    fn config_round_trip_preserves_semantics() {
        let cfg = parse(pendulum_json()).unwrap();
        let emitted = serde_json::to_string_pretty(&cfg).unwrap();
        let again = parse(&emitted).unwrap();
        let a = build(&cfg, &Overrides::default()).unwrap();
        let b = build(&again, &Overrides::default()).unwrap();
        assert_eq!(a.surface, b.surface);
        assert_eq!(a.envelope, b.envelope);
        assert_eq!(a.sim, b.sim);
        assert_eq!(
            a.initial_conditions[0].x0, b.initial_conditions[0].x0,
            "round trip changed the starts"
        );
    }
}
