//! The five subcommands. Each returns `Ok(all_checks_passed)` — mapped to
//! exit code 0 or 1 — or a [`CmdError`] for usage/config problems (2) and
//! numerical aborts (3).

use std::fs;
use std::io::BufWriter;
use std::path::Path;

use qsmc::controller::{ControlLaw, QsmcLaw, RelaySmcLaw};
use qsmc::plant::{builtin, validate_assumptions, AssumptionReport, BuiltinSystem};
use qsmc::sim::{
    chattering_index, verify_guarantees, ClauseOutcome, GuaranteeReport, Metrics, RunMetadata,
    SimConfig, SimError, Trajectory,
};
use qsmc::{Envelope, SurfaceSpec};
use serde::Serialize;

use crate::args::CommonArgs;
use crate::config::{self, EnvelopeSection, Experiment};
use crate::{CmdError, CmdResult};

fn load_experiment(common: &CommonArgs) -> Result<Experiment, CmdError> {
    let path = common
        .config
        .as_deref()
        .ok_or_else(|| CmdError::Usage("--config PATH is required for this command".into()))?;
    let cfg = config::load(path).map_err(CmdError::Usage)?;
    config::build(&cfg, &overrides(common)).map_err(CmdError::Usage)
}

fn overrides(common: &CommonArgs) -> config::Overrides {
    config::Overrides {
        dt: common.dt,
        horizon: common.horizon,
        mode: common.mode.map(Into::into),
        out: common.out.clone(),
    }
}

fn note_seed(common: &CommonArgs) {
    if common.seed.is_some() {
        eprintln!(
            "note: --seed is reserved; present runs are deterministic and the value is unused"
        );
    }
}

fn ensure_dir(dir: &Path) -> Result<(), CmdError> {
    fs::create_dir_all(dir)
        .map_err(|e| CmdError::Usage(format!("cannot create {}: {e}", dir.display())))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CmdError> {
    let file = fs::File::create(path)
        .map_err(|e| CmdError::Usage(format!("cannot write {}: {e}", path.display())))?;
    serde_json::to_writer_pretty(BufWriter::new(file), value)
        .map_err(|e| CmdError::Usage(format!("cannot write {}: {e}", path.display())))
}

fn write_csv(path: &Path, traj: &Trajectory) -> Result<(), CmdError> {
    let file = fs::File::create(path)
        .map_err(|e| CmdError::Usage(format!("cannot write {}: {e}", path.display())))?;
    traj.write_csv(BufWriter::new(file))
        .map_err(|e| CmdError::Usage(format!("cannot write {}: {e}", path.display())))
}

fn ok_fail(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "FAIL"
    }
}

// ---------------------------------------------------------------------------
// design

/// Everything `design` checks and reports, in one serializable document.
#[derive(Debug, Serialize)]
pub struct DesignReport {
    pub plant: String,
    pub order: usize,
    pub surface_coeffs: Vec<f64>,
    pub surface_pole: Option<f64>,
    pub hurwitz: bool,
    pub envelope: EnvelopeSection,
    pub band_condition_ok: bool,
    /// Absent when the band condition failed (the formula needs ε > ρ∞).
    pub reaching_time_bound: Option<f64>,
    /// Grid resolution of any measured reaching time: dt · record_stride.
    pub reaching_time_resolution: f64,
    /// Steady-state bounds per error derivative; needs a repeated pole.
    pub tracking_bounds: Option<Vec<f64>>,
    pub initial_conditions: Vec<IcCheck>,
    pub all_pass: bool,
}

#[derive(Debug, Serialize)]
pub struct IcCheck {
    pub x0: Vec<f64>,
    pub pass: bool,
    #[serde(flatten)]
    pub assumptions: AssumptionReport,
}

pub fn run_design_checks(exp: &Experiment) -> Result<DesignReport, CmdError> {
    let n = exp.plant.order();
    let epsilon = exp.envelope.epsilon();
    let tracking_bounds = exp.surface.pole().and_then(|_| {
        (0..n)
            .map(|i| exp.surface.tracking_bound(epsilon, i))
            .collect::<Result<Vec<_>, _>>()
            .ok()
    });

    let mut initial_conditions = Vec::new();
    for (idx, ic) in exp.initial_conditions.iter().enumerate() {
        let assumptions =
            validate_assumptions(&exp.plant, &exp.reference, &exp.surface, &exp.envelope, ic)
                .map_err(|e| {
                    CmdError::Usage(format!(
                        "assumption check for initial condition {} {:?}: {e}",
                        idx + 1,
                        ic.x0
                    ))
                })?;
        initial_conditions.push(IcCheck {
            x0: ic.x0.clone(),
            pass: assumptions.satisfied(),
            assumptions,
        });
    }

    let hurwitz = exp.surface.is_hurwitz();
    let all_pass = hurwitz && exp.band_condition_ok && initial_conditions.iter().all(|c| c.pass);
    Ok(DesignReport {
        plant: exp.plant.name().to_string(),
        order: n,
        surface_coeffs: exp.surface.coeffs().to_vec(),
        surface_pole: exp.surface.pole(),
        hurwitz,
        envelope: EnvelopeSection {
            rho0: exp.envelope.rho0(),
            rho_inf: exp.envelope.rho_inf(),
            mu: exp.envelope.mu(),
            epsilon,
        },
        band_condition_ok: exp.band_condition_ok,
        reaching_time_bound: exp.envelope.reaching_time_bound().ok(),
        reaching_time_resolution: exp.sim.dt * exp.sim.record_stride as f64,
        tracking_bounds,
        initial_conditions,
        all_pass,
    })
}

pub fn print_design(r: &DesignReport) {
    println!("design report — plant '{}' (order {})", r.plant, r.order);
    println!("  surface coefficients (ascending): {:?}", r.surface_coeffs);
    match r.surface_pole {
        Some(a) => println!("  repeated pole: {a}"),
        None => println!("  repeated pole: none (explicit coefficients)"),
    }
    println!("  hurwitz: {}", ok_fail(r.hurwitz));
    println!(
        "  envelope: rho(t) = {} * exp(-{} * t) + {}   (epsilon = {})",
        r.envelope.rho0, r.envelope.mu, r.envelope.rho_inf, r.envelope.epsilon
    );
    println!(
        "  band condition (rho_inf < epsilon < rho0): {}",
        ok_fail(r.band_condition_ok)
    );
    match r.reaching_time_bound {
        Some(b) => println!(
            "  reaching-time bound: {b:.6} s (measured values resolve to {} s)",
            r.reaching_time_resolution
        ),
        None => println!("  reaching-time bound: n/a (band condition failed)"),
    }
    match &r.tracking_bounds {
        Some(bs) => {
            let cells: Vec<String> = bs
                .iter()
                .enumerate()
                .map(|(i, b)| format!("|e{i}| <= {b:.6}"))
                .collect();
            println!("  tracking bounds: {}", cells.join(", "));
        }
        None => println!("  tracking bounds: n/a (per-derivative bounds need a repeated pole)"),
    }
    println!("  initial conditions:");
    for (i, c) in r.initial_conditions.iter().enumerate() {
        let a = &c.assumptions;
        let mut notes = vec![
            format!("sigma(0) = {:.4}", a.sigma0),
            format!("containment at t=0: {}", ok_fail(a.c1_satisfied)),
            format!(
                "gain(x0) = {:.6} ({})",
                a.gain_at_x0,
                if a.gain_sign_consistent_at_x0 {
                    "sign ok"
                } else {
                    "SIGN MISMATCH"
                }
            ),
        ];
        if let Some(floor_ok) = a.gain_floor_satisfied_at_x0 {
            notes.push(format!("floor {}", ok_fail(floor_ok)));
        }
        if !a.declared_bound_violations.is_empty() {
            notes.push(format!(
                "declared bounds violated at orders {:?}",
                a.declared_bound_violations
            ));
        }
        notes.push(format!(
            "suggested rho0 = {:.4}{}",
            a.suggested_rho0,
            if a.suggestion_degenerate {
                " (degenerate: zero bounds)"
            } else {
                ""
            }
        ));
        println!(
            "    {}: x0 {:?}  {}  -> {}",
            i + 1,
            c.x0,
            notes.join("  "),
            if c.pass { "pass" } else { "FAIL" }
        );
    }
    println!(
        "  design checks: {}",
        if r.all_pass { "PASS" } else { "FAIL" }
    );
}

pub fn design(common: &CommonArgs) -> CmdResult {
    let exp = load_experiment(common)?;
    note_seed(common);
    let report = run_design_checks(&exp)?;
    print_design(&report);
    if exp.out_dir_explicit {
        ensure_dir(&exp.out_dir)?;
        let path = exp.out_dir.join("design_report.json");
        write_json(&path, &report)?;
        println!("wrote {}", path.display());
    }
    Ok(report.all_pass)
}

// ---------------------------------------------------------------------------
// simulate

#[derive(Serialize)]
struct MetricsDoc<'a> {
    initial_condition: &'a [f64],
    #[serde(skip_serializing_if = "Option::is_none")]
    watermark: Option<&'static str>,
    metrics: &'a Metrics,
    guarantees: &'a GuaranteeReport,
    /// Grid resolution of the measured reaching time: dt · record_stride.
    reaching_time_resolution: f64,
    metadata: &'a RunMetadata,
}

pub fn simulate(common: &CommonArgs) -> CmdResult {
    let exp = load_experiment(common)?;
    note_seed(common);
    let design_report = run_design_checks(&exp)?;
    if !design_report.all_pass {
        if !common.force {
            print_design(&design_report);
            eprintln!(
                "refusing to simulate: design checks failed (see report above); \
                 fix the design or pass --force to run anyway with watermarked outputs"
            );
            return Ok(false);
        }
        eprintln!("warning: design checks failed; continuing under --force — guarantees void");
    }
    let watermark = if design_report.all_pass {
        None
    } else {
        Some("guarantees void")
    };

    ensure_dir(&exp.out_dir)?;
    let law = ControlLaw::Qsmc(
        QsmcLaw::with_limits(
            exp.envelope,
            exp.surface.clone(),
            exp.plant.gain_sign(),
            exp.clamp_delta,
            exp.u_max,
        )
        .map_err(|e| CmdError::Usage(format!("controller: {e}")))?,
    );

    let mut all_guarantees = true;
    for (idx, ic) in exp.initial_conditions.iter().enumerate() {
        let i = idx + 1;
        let traj = match qsmc::sim::simulate(
            &exp.plant,
            &exp.reference,
            &law,
            &exp.envelope,
            &ic.x0,
            &exp.sim,
        ) {
            Ok(t) => t,
            Err(SimError::Invalid(e)) => return Err(CmdError::Usage(e.to_string())),
            Err(SimError::Abort(abort)) => {
                let partial = exp
                    .out_dir
                    .join(format!("{}_ic{i}_partial.csv", exp.prefix));
                write_csv(&partial, &abort.partial)?;
                return Err(CmdError::Abort(format!(
                    "initial condition {i} {:?}: {abort}; partial trajectory written to {}",
                    ic.x0,
                    partial.display()
                )));
            }
        };

        let csv_path = exp.out_dir.join(format!("{}_ic{i}.csv", exp.prefix));
        write_csv(&csv_path, &traj)?;
        let metrics = traj.metrics();
        let guarantees =
            verify_guarantees(&traj, &exp.envelope, &exp.surface, exp.envelope.epsilon());
        all_guarantees &= guarantees.all_pass();
        let metrics_path = exp
            .out_dir
            .join(format!("{}_ic{i}_metrics.json", exp.prefix));
        write_json(
            &metrics_path,
            &MetricsDoc {
                initial_condition: &ic.x0,
                watermark,
                metrics: &metrics,
                guarantees: &guarantees,
                reaching_time_resolution: exp.sim.dt * exp.sim.record_stride as f64,
                metadata: &traj.metadata,
            },
        )?;
        println!(
            "start {i} {:?}: reached = {}, band violations = {}, steady-state error = {:.4e}; \
             wrote {} and {}",
            ic.x0,
            metrics
                .measured_reaching_time
                .map_or_else(|| "never".to_string(), |t| format!("{t:.3} s")),
            metrics.band_violations,
            metrics.steady_state_error,
            csv_path.display(),
            metrics_path.display()
        );
    }
    println!(
        "guarantees: {}",
        if all_guarantees {
            "all clauses hold"
        } else {
            "FAILED for at least one start (see metrics files)"
        }
    );
    Ok(all_guarantees)
}

// ---------------------------------------------------------------------------
// verify

struct Study {
    builtin_name: &'static str,
    envelope: Envelope,
    variants: Vec<(String, SurfaceSpec)>,
}

fn study(name: &str) -> Option<Study> {
    match name {
        "example1" | "pendulum" => Some(Study {
            builtin_name: "pendulum",
            envelope: Envelope::new(4.0, 0.05, 3.0, 0.1).expect("bundled envelope"),
            variants: vec![(
                "binomial, pole 2".to_string(),
                SurfaceSpec::binomial(2, 2.0).expect("bundled surface"),
            )],
        }),
        "example2" => Some(Study {
            builtin_name: "example2",
            envelope: Envelope::new(5.0, 0.05, 3.0, 0.1).expect("bundled envelope"),
            variants: vec![
                (
                    "explicit coefficients".to_string(),
                    SurfaceSpec::new(vec![6.0, 12.0, 8.0, 1.0]).expect("bundled surface"),
                ),
                (
                    "binomial, pole 2".to_string(),
                    SurfaceSpec::binomial(4, 2.0).expect("bundled surface"),
                ),
            ],
        }),
        _ => None,
    }
}

fn band_cell(c: &ClauseOutcome) -> String {
    match c.observed {
        Some(r) => format!("{} (max ratio {r:.3})", ok_fail(c.pass)),
        None => ok_fail(c.pass).to_string(),
    }
}

fn reach_cell(c: &ClauseOutcome) -> String {
    match (c.observed, c.limit) {
        (Some(t), Some(b)) => format!("{} ({t:.3} s, bound {b:.4} s)", ok_fail(c.pass)),
        (None, Some(b)) => format!("{} (never settled, bound {b:.4} s)", ok_fail(c.pass)),
        _ => ok_fail(c.pass).to_string(),
    }
}

fn track_cell(c: Option<&ClauseOutcome>) -> String {
    match c {
        None => "n/a (no repeated pole)".to_string(),
        Some(c) => match (c.observed, c.limit) {
            (Some(o), Some(l)) => format!("{} ({o:.4} <= {l:.4})", ok_fail(c.pass)),
            _ => ok_fail(c.pass).to_string(),
        },
    }
}

#[derive(Serialize)]
struct VerifyRow {
    variant: String,
    initial_condition: Vec<f64>,
    report: GuaranteeReport,
}

pub fn verify(example: &str, common: &CommonArgs) -> CmdResult {
    let study = study(example).ok_or_else(|| {
        CmdError::Usage(format!(
            "unknown study '{example}'; available: example1 (alias: pendulum), example2"
        ))
    })?;
    if common.config.is_some() {
        eprintln!("note: `verify` uses the bundled study configuration; --config is ignored");
    }
    note_seed(common);

    let sys: BuiltinSystem =
        builtin(study.builtin_name).map_err(|e| CmdError::Usage(e.to_string()))?;
    let mut sim = SimConfig::default();
    if let Some(dt) = common.dt {
        sim.dt = dt;
    }
    if let Some(h) = common.horizon {
        sim.horizon = h;
    }
    if let Some(m) = common.mode {
        sim.control_mode = m.into();
    }
    sim.validate()
        .map_err(|e| CmdError::Usage(format!("sim: {e}")))?;

    let mut all = true;
    let mut rows = Vec::new();
    for (label, surface) in &study.variants {
        println!("study {example} — surface {:?} ({label})", surface.coeffs());
        println!(
            "  {:<26}  {:<22}  {:<34}  tracking",
            "initial condition", "band containment", "reaching time"
        );
        for ic in &sys.initial_conditions {
            let law = ControlLaw::Qsmc(QsmcLaw::new(
                study.envelope,
                surface.clone(),
                sys.plant.gain_sign(),
            ));
            let traj = match qsmc::sim::simulate(
                &sys.plant,
                &sys.reference,
                &law,
                &study.envelope,
                &ic.x0,
                &sim,
            ) {
                Ok(t) => t,
                Err(SimError::Invalid(e)) => return Err(CmdError::Usage(e.to_string())),
                Err(SimError::Abort(a)) => {
                    return Err(CmdError::Abort(format!("{example} {:?}: {a}", ic.x0)))
                }
            };
            let report =
                verify_guarantees(&traj, &study.envelope, surface, study.envelope.epsilon());
            all &= report.all_pass();
            println!(
                "  {:<26}  {:<22}  {:<34}  {}",
                format!("{:?}", ic.x0),
                band_cell(&report.band_containment),
                reach_cell(&report.reaching_time),
                track_cell(report.tracking_bound.as_ref())
            );
            rows.push(VerifyRow {
                variant: label.clone(),
                initial_condition: ic.x0.clone(),
                report,
            });
        }
        println!();
    }
    println!(
        "verdict: {}",
        if all {
            "all guarantee clauses hold"
        } else {
            "GUARANTEE FAILURES (see table)"
        }
    );
    if let Some(dir) = &common.out {
        ensure_dir(dir)?;
        let path = dir.join(format!("verify_{example}.json"));
        write_json(&path, &rows)?;
        println!("wrote {}", path.display());
    }
    Ok(all)
}

// ---------------------------------------------------------------------------
// compare

#[derive(Serialize)]
struct CompareSide {
    reached_band_at: Option<f64>,
    chattering_tv: f64,
    switch_count: u64,
    control_peak: f64,
    steady_state_error: f64,
}

impl CompareSide {
    fn from_run(traj: &Trajectory, window_start: f64) -> Self {
        let metrics = traj.metrics();
        let (chattering_tv, switch_count) = chattering_index(traj, window_start);
        CompareSide {
            reached_band_at: metrics.measured_reaching_time,
            chattering_tv,
            switch_count,
            control_peak: metrics.control_peak,
            steady_state_error: metrics.steady_state_error,
        }
    }
}

#[derive(Serialize)]
struct CompareRow {
    initial_condition: Vec<f64>,
    window_start: f64,
    smooth: CompareSide,
    baseline: Option<CompareSide>,
    #[serde(skip_serializing_if = "Option::is_none")]
    baseline_note: Option<String>,
}

pub fn compare(baseline_k: f64, window_start: f64, common: &CommonArgs) -> CmdResult {
    if !(baseline_k.is_finite() && baseline_k > 0.0) {
        return Err(CmdError::Usage(format!(
            "--baseline-k must be a positive number, got {baseline_k}"
        )));
    }
    let exp = load_experiment(common)?;
    note_seed(common);
    if !(window_start.is_finite() && (0.0..exp.sim.horizon).contains(&window_start)) {
        return Err(CmdError::Usage(format!(
            "--window-start must lie in [0, horizon = {}), got {window_start}",
            exp.sim.horizon
        )));
    }

    let smooth_law = ControlLaw::Qsmc(
        QsmcLaw::with_limits(
            exp.envelope,
            exp.surface.clone(),
            exp.plant.gain_sign(),
            exp.clamp_delta,
            exp.u_max,
        )
        .map_err(|e| CmdError::Usage(format!("controller: {e}")))?,
    );
    let relay_law = ControlLaw::Relay(
        RelaySmcLaw::new(exp.surface.clone(), baseline_k, exp.plant.gain_sign())
            .map_err(|e| CmdError::Usage(format!("baseline: {e}")))?,
    );

    let fmt_reach =
        |r: Option<f64>| r.map_or_else(|| "did not reach".to_string(), |t| format!("{t:.3} s"));
    let mut rows = Vec::new();
    for (idx, ic) in exp.initial_conditions.iter().enumerate() {
        let smooth_traj = match qsmc::sim::simulate(
            &exp.plant,
            &exp.reference,
            &smooth_law,
            &exp.envelope,
            &ic.x0,
            &exp.sim,
        ) {
            Ok(t) => t,
            Err(SimError::Invalid(e)) => return Err(CmdError::Usage(e.to_string())),
            Err(SimError::Abort(a)) => {
                return Err(CmdError::Abort(format!(
                    "initial condition {} {:?}: {a}",
                    idx + 1,
                    ic.x0
                )))
            }
        };
        let smooth = CompareSide::from_run(&smooth_traj, window_start);

        let (baseline, baseline_note) = match qsmc::sim::simulate(
            &exp.plant,
            &exp.reference,
            &relay_law,
            &exp.envelope,
            &ic.x0,
            &exp.sim,
        ) {
            Ok(t) => {
                let side = CompareSide::from_run(&t, window_start);
                let note = side
                    .reached_band_at
                    .is_none()
                    .then(|| "baseline did not reach the epsilon band".to_string());
                (Some(side), note)
            }
            Err(SimError::Invalid(e)) => return Err(CmdError::Usage(e.to_string())),
            // The baseline blowing up is a finding, not a failure of the
            // comparison; report it and keep the smooth-law column.
            Err(SimError::Abort(a)) => (None, Some(format!("baseline aborted: {a}"))),
        };

        println!("initial condition {} {:?}:", idx + 1, ic.x0);
        println!(
            "  {:<38}{:>16}{:>18}",
            "",
            "smooth law",
            format!("relay (K = {baseline_k})")
        );
        let cell = |f: &dyn Fn(&CompareSide) -> String| -> String {
            baseline.as_ref().map_or_else(|| "aborted".to_string(), f)
        };
        println!(
            "  {:<38}{:>16}{:>18}",
            "reached band at",
            fmt_reach(smooth.reached_band_at),
            cell(&|b| fmt_reach(b.reached_band_at))
        );
        println!(
            "  {:<38}{:>16.3}{:>18}",
            format!("control total variation [{window_start}, T]"),
            smooth.chattering_tv,
            cell(&|b| format!("{:.3}", b.chattering_tv))
        );
        println!(
            "  {:<38}{:>16}{:>18}",
            "switch count",
            smooth.switch_count,
            cell(&|b| b.switch_count.to_string())
        );
        println!(
            "  {:<38}{:>16.4}{:>18}",
            "control peak",
            smooth.control_peak,
            cell(&|b| format!("{:.4}", b.control_peak))
        );
        println!(
            "  {:<38}{:>16.4e}{:>18}",
            "steady-state error",
            smooth.steady_state_error,
            cell(&|b| format!("{:.4e}", b.steady_state_error))
        );
        if let Some(note) = &baseline_note {
            println!("  note: {note}");
        }
        println!();

        rows.push(CompareRow {
            initial_condition: ic.x0.clone(),
            window_start,
            smooth,
            baseline,
            baseline_note,
        });
    }

    if exp.out_dir_explicit {
        ensure_dir(&exp.out_dir)?;
        let path = exp.out_dir.join("compare_report.json");
        write_json(&path, &rows)?;
        println!("wrote {}", path.display());
    }
    Ok(true)
}

// ---------------------------------------------------------------------------
// plot-script

fn plot_block(output: &str, title: &str, ylabel: &str, terms: &[String]) -> String {
    format!(
        "set output \"{output}\"\nset title \"{title}\"\nset ylabel \"{ylabel}\"\nplot \\\n  {}\n\n",
        terms.join(", \\\n  ")
    )
}

pub fn render_gnuplot(exp: &Experiment) -> String {
    let n = exp.plant.order();
    let (col_u, col_sigma, col_rho, col_ydes) = (n + 2, n + 3, n + 4, 2 * n + 5);
    let starts = exp.initial_conditions.len();
    let file = |i: usize| format!("{}_ic{i}.csv", exp.prefix);

    let mut script = String::new();
    script.push_str("# gnuplot script generated by `qsmc plot-script`\n");
    script.push_str("# expects the CSVs written by `qsmc simulate` in the working directory\n");
    script.push_str(
        "set datafile separator \",\"\nset grid\nset key outside right\n\
         set xlabel \"t [s]\"\nset terminal pngcairo size 1280,720\n\n",
    );

    let mut tracking: Vec<String> = (1..=starts)
        .map(|i| {
            format!(
                "\"{}\" using 1:2 with lines title \"x1, start {i}\"",
                file(i)
            )
        })
        .collect();
    tracking.push(format!(
        "\"{}\" using 1:{col_ydes} with lines dashtype 2 lc rgb \"black\" title \"y_d\"",
        file(1)
    ));
    script.push_str(&plot_block(
        &format!("{}_tracking.png", exp.prefix),
        "output vs reference",
        "x1",
        &tracking,
    ));

    let mut sliding: Vec<String> = (1..=starts)
        .map(|i| {
            format!(
                "\"{}\" using 1:{col_sigma} with lines title \"sigma, start {i}\"",
                file(i)
            )
        })
        .collect();
    sliding.push(format!(
        "\"{}\" using 1:{col_rho} with lines dashtype 2 lc rgb \"black\" title \"rho\"",
        file(1)
    ));
    sliding.push(format!(
        "\"{}\" using 1:(-${col_rho}) with lines dashtype 2 lc rgb \"black\" notitle",
        file(1)
    ));
    script.push_str(&plot_block(
        &format!("{}_sliding.png", exp.prefix),
        "sliding variable inside the shrinking envelope",
        "sigma",
        &sliding,
    ));

    let control: Vec<String> = (1..=starts)
        .map(|i| {
            format!(
                "\"{}\" using 1:{col_u} with lines title \"u, start {i}\"",
                file(i)
            )
        })
        .collect();
    script.push_str(&plot_block(
        &format!("{}_control.png", exp.prefix),
        "control input",
        "u",
        &control,
    ));
    script
}

pub fn plot_script(common: &CommonArgs) -> CmdResult {
    let exp = load_experiment(common)?;
    note_seed(common);
    let script = render_gnuplot(&exp);
    if exp.out_dir_explicit {
        ensure_dir(&exp.out_dir)?;
        let path = exp.out_dir.join("plot.gp");
        fs::write(&path, &script)
            .map_err(|e| CmdError::Usage(format!("cannot write {}: {e}", path.display())))?;
        println!("wrote {}", path.display());
    } else {
        print!("{script}");
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{self, Overrides};

    fn pendulum_experiment() -> Experiment {
        let cfg = config::parse(
            r#"{
                "plant": {"builtin": "pendulum"},
                "surface": {"pole": 2.0},
                "envelope": {"rho0": 4.0, "rho_inf": 0.05, "mu": 3.0, "epsilon": 0.1}
            }"#,
        )
        .unwrap();
        config::build(&cfg, &Overrides::default()).unwrap()
    }

    #[test]
    fn design_checks_pass_for_bundled_pendulum() {
        let report = run_design_checks(&pendulum_experiment()).unwrap();
        assert!(report.all_pass);
        assert!(report.hurwitz);
        assert_eq!(report.initial_conditions.len(), 4);
        let bound = report.reaching_time_bound.unwrap();
        assert!((bound - 80.0f64.ln() / 3.0).abs() < 1e-12);
        assert_eq!(report.tracking_bounds.as_deref(), Some(&[0.05, 0.2][..]));
    }

    #[test]
    fn design_checks_flag_broken_band_condition() {
        let cfg = config::parse(
            r#"{
                "plant": {"builtin": "pendulum"},
                "surface": {"pole": 2.0},
                "envelope": {"rho0": 4.0, "rho_inf": 0.05, "mu": 3.0, "epsilon": 0.04}
            }"#,
        )
        .unwrap();
        let exp = config::build(&cfg, &Overrides::default()).unwrap();
        let report = run_design_checks(&exp).unwrap();
        assert!(!report.all_pass);
        assert!(!report.band_condition_ok);
        assert!(report.reaching_time_bound.is_none());
    }

    #[test]
    fn gnuplot_script_points_at_the_right_columns() {
        let script = render_gnuplot(&pendulum_experiment());
        // order 2: u is column 4, sigma 5, rho 6, y_des 9
        assert!(script.contains("set datafile separator \",\""));
        assert!(script.contains("\"traj_ic1.csv\" using 1:9"));
        assert!(script.contains("using 1:5 with lines title \"sigma, start 1\""));
        assert!(script.contains("using 1:(-$6)"));
        assert!(script.contains("\"traj_ic4.csv\" using 1:4"));
    }

    #[test]
    fn bundled_studies_resolve() {
        assert!(study("example1").is_some());
        assert!(study("pendulum").is_some());
        let s2 = study("example2").unwrap();
        assert_eq!(s2.variants.len(), 2);
        assert_eq!(s2.variants[0].1.coeffs(), &[6.0, 12.0, 8.0, 1.0]);
        assert_eq!(s2.variants[1].1.coeffs(), &[8.0, 12.0, 6.0, 1.0]);
        assert!(study("example3").is_none());
    }
}
