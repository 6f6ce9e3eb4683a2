//! Feedback laws: the band-confining tangent law and a relay baseline.
//!
//! The primary law maps the sliding value through a tangent that blows up
//! at the moving band edge,
//!
//! ```text
//! u = -sign(g) * tan(pi * sigma / (2 * rho(t)))
//! ```
//!
//! so the control effort grows without bound as `|sigma|` approaches
//! `rho(t)` and the sliding value can never cross the band in continuous
//! time. No model of the drift, gain magnitude, or disturbance is used —
//! only the sign of the input gain. The law is smooth inside the band, so
//! it produces none of the input chattering of a switching law; the relay
//! baseline `u = -sign(g) * K * sign(sigma)` is included for side-by-side
//! comparison of exactly that effect.
//!
//! Two practical guards keep floating-point evaluation total: the
//! normalized sliding value is clamped a hair inside the band edge before
//! the tangent, and the output is saturated at a configurable magnitude.
//! Both activations are observable so the simulator can report them.

use crate::envelope::Envelope;
use crate::error::{Error, Result};
use crate::plant::GainSign;
use crate::surface::{sign, SurfaceSpec};

/// Default half-width of the exclusion zone at the band edge: the
/// normalized sliding value is clamped to `|r| <= 1 - DEFAULT_CLAMP_DELTA`.
pub const DEFAULT_CLAMP_DELTA: f64 = 1e-9;

/// Default output saturation magnitude.
pub const DEFAULT_U_MAX: f64 = 1e6;

/// One control evaluation, with flags for the two numerical guards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlOutput {
    pub u: f64,
    /// The normalized sliding value hit the clamp at the band edge.
    pub band_clamped: bool,
    /// The raw tangent output exceeded `u_max` and was saturated.
    pub saturated: bool,
}

/// Tangent law tied to a shrinking band and a sliding surface.
#[derive(Debug, Clone)]
pub struct QsmcLaw {
    envelope: Envelope,
    surface: SurfaceSpec,
    gain_sign: GainSign,
    clamp_delta: f64,
    u_max: f64,
}

impl QsmcLaw {
    /// Law with the default clamp and saturation settings.
    pub fn new(envelope: Envelope, surface: SurfaceSpec, gain_sign: GainSign) -> Self {
        QsmcLaw {
            envelope,
            surface,
            gain_sign,
            clamp_delta: DEFAULT_CLAMP_DELTA,
            u_max: DEFAULT_U_MAX,
        }
    }

    /// Explicit guard settings. Requires `0 < clamp_delta < 1` and
    /// `u_max > 0`; `u_max = +inf` disables saturation.
    pub fn with_limits(
        envelope: Envelope,
        surface: SurfaceSpec,
        gain_sign: GainSign,
        clamp_delta: f64,
        u_max: f64,
    ) -> Result<Self> {
        if !clamp_delta.is_finite() || clamp_delta <= 0.0 || clamp_delta >= 1.0 {
            return Err(Error::invalid(
                "control law",
                format!("clamp_delta must lie strictly between 0 and 1, got {clamp_delta}"),
            ));
        }
        if u_max.is_nan() || u_max <= 0.0 {
            return Err(Error::invalid(
                "control law",
                format!("u_max must be positive (or +inf for unbounded), got {u_max}"),
            ));
        }
        Ok(QsmcLaw {
            envelope,
            surface,
            gain_sign,
            clamp_delta,
            u_max,
        })
    }

    pub fn envelope(&self) -> &Envelope {
        &self.envelope
    }

    pub fn surface(&self) -> &SurfaceSpec {
        &self.surface
    }

    pub fn gain_sign(&self) -> GainSign {
        self.gain_sign
    }

    pub fn clamp_delta(&self) -> f64 {
        self.clamp_delta
    }

    pub fn u_max(&self) -> f64 {
        self.u_max
    }

    /// Control value with guard flags. `sigma` is expected finite; a
    /// non-finite value propagates NaN, which the simulator's divergence
    /// checks catch with a state dump.
    pub fn control_detailed(&self, sigma: f64, t: f64) -> ControlOutput {
        let rho = self.envelope.rho(t);
        let raw = sigma / rho;
        let edge = 1.0 - self.clamp_delta;
        let r = raw.clamp(-edge, edge);
        let band_clamped = raw.abs() > edge;
        let u_raw = -self.gain_sign.as_f64() * (std::f64::consts::FRAC_PI_2 * r).tan();
        let saturated = u_raw.abs() > self.u_max;
        ControlOutput {
            u: u_raw.clamp(-self.u_max, self.u_max),
            band_clamped,
            saturated,
        }
    }

    pub fn control(&self, sigma: f64, t: f64) -> f64 {
        self.control_detailed(sigma, t).u
    }
}

/// Relay (switching) law `u = -sign(g) * gain * sign(sigma)`, the classic
/// chattering-prone baseline.
#[derive(Debug, Clone)]
pub struct RelaySmcLaw {
    surface: SurfaceSpec,
    gain: f64,
    gain_sign: GainSign,
}

impl RelaySmcLaw {
    pub fn new(surface: SurfaceSpec, gain: f64, gain_sign: GainSign) -> Result<Self> {
        if !gain.is_finite() || gain <= 0.0 {
            return Err(Error::invalid(
                "relay law",
                format!("switching gain must be finite and positive, got {gain}"),
            ));
        }
        Ok(RelaySmcLaw {
            surface,
            gain,
            gain_sign,
        })
    }

    pub fn surface(&self) -> &SurfaceSpec {
        &self.surface
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }

    pub fn gain_sign(&self) -> GainSign {
        self.gain_sign
    }

    /// Three-branch relay: exactly zero on the surface.
    pub fn control(&self, sigma: f64) -> f64 {
        -self.gain_sign.as_f64() * self.gain * f64::from(sign(sigma))
    }
}

/// Either feedback law, for simulator plumbing that does not care which.
#[derive(Debug, Clone)]
pub enum ControlLaw {
    Qsmc(QsmcLaw),
    Relay(RelaySmcLaw),
}

impl ControlLaw {
    pub fn surface(&self) -> &SurfaceSpec {
        match self {
            ControlLaw::Qsmc(law) => law.surface(),
            ControlLaw::Relay(law) => law.surface(),
        }
    }

    pub fn control_detailed(&self, sigma: f64, t: f64) -> ControlOutput {
        match self {
            ControlLaw::Qsmc(law) => law.control_detailed(sigma, t),
            ControlLaw::Relay(law) => ControlOutput {
                u: law.control(sigma),
                band_clamped: false,
                saturated: false,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_law(gain_sign: GainSign) -> QsmcLaw {
        let env = Envelope::new(4.0, 0.05, 3.0, 0.1).unwrap();
        let surface = SurfaceSpec::binomial(2, 2.0).unwrap();
        QsmcLaw::new(env, surface, gain_sign)
    }

    #[test]
    fn zero_sliding_value_gives_zero_control() {
        let law = test_law(GainSign::Positive);
        for &t in &[0.0, 0.5, 3.0, 17.2] {
            assert_eq!(law.control(0.0, t), 0.0);
        }
    }

    #[test]
    fn quarter_band_gives_unit_control() {
        // sigma = rho/2 puts the tangent argument at pi/4.
        let law = test_law(GainSign::Positive);
        for &t in &[0.0, 0.7, 2.0, 15.0] {
            let rho = law.envelope().rho(t);
            assert!((law.control(rho / 2.0, t) - -1.0).abs() < 1e-12);
        }

        let law = test_law(GainSign::Negative);
        let rho = law.envelope().rho(1.0);
        assert!((law.control(-rho / 2.0, 1.0) - -1.0).abs() < 1e-12);
    }

    #[test]
    fn control_is_odd_and_monotone_in_sigma() {
        let law = test_law(GainSign::Positive);
        let t = 0.8;
        let rho = law.envelope().rho(t);
        let mut prev = f64::INFINITY;
        for k in -999..=999 {
            let sigma = rho * (k as f64 / 1000.0);
            let u = law.control(sigma, t);
            assert!(
                (law.control(-sigma, t) + u).abs() <= 1e-12,
                "odd symmetry broken at sigma={sigma}"
            );
            // Positive gain sign: tangent law is strictly decreasing.
            assert!(u <= prev, "monotonicity broken at sigma={sigma}");
            prev = u;
        }
    }

    #[test]
    fn control_is_locally_lipschitz_inside_band() {
        // A wide clamp makes the worst-case slope explicit:
        // max |du/dsigma| = (pi / (2 rho)) / sin^2(pi * delta / 2) at the
        // clamp edge. Difference quotients must stay under that slope and
        // shrink linearly with h.
        let env = Envelope::new(4.0, 0.05, 3.0, 0.1).unwrap();
        let surface = SurfaceSpec::binomial(2, 2.0).unwrap();
        let delta = 1e-3;
        let law =
            QsmcLaw::with_limits(env, surface, GainSign::Positive, delta, f64::INFINITY).unwrap();
        let t = 1.3;
        let rho = law.envelope().rho(t);
        let slope_cap =
            std::f64::consts::FRAC_PI_2 / rho / (std::f64::consts::FRAC_PI_2 * delta).sin().powi(2);
        for k in -9..=9 {
            let sigma = rho * (1.0 - 2.0 * delta) * (k as f64 / 9.0);
            let mut prev_diff = f64::INFINITY;
            for &h in &[1e-6, 1e-7, 1e-8] {
                let diff = (law.control(sigma + h, t) - law.control(sigma, t)).abs();
                assert!(
                    diff <= slope_cap * h,
                    "slope cap exceeded at sigma={sigma}, h={h}"
                );
                assert!(diff <= prev_diff + 1e-12);
                prev_diff = diff;
            }
        }
    }

    #[test]
    fn control_grows_unbounded_toward_band_edge() {
        // With the guards effectively off, |u| blows up as sigma
        // approaches the band edge from inside.
        let env = Envelope::new(4.0, 0.05, 3.0, 0.1).unwrap();
        let surface = SurfaceSpec::binomial(2, 2.0).unwrap();
        let law =
            QsmcLaw::with_limits(env, surface, GainSign::Positive, 1e-15, f64::INFINITY).unwrap();
        let t = 0.4;
        let rho = law.envelope().rho(t);
        let mut prev = 0.0;
        for &gap in &[1e-3, 1e-6, 1e-9, 1e-12] {
            let u = law.control(rho * (1.0 - gap), t).abs();
            assert!(u > prev, "|u| should grow as the edge gap shrinks");
            prev = u;
        }
        assert!(prev > 1e11);
    }

    #[test]
    fn guards_clamp_and_saturate_out_of_band_input() {
        let law = test_law(GainSign::Positive); // delta 1e-9, u_max 1e6
        let t = 2.0;
        let rho = law.envelope().rho(t);

        // Outside the band entirely: clamped at the edge, then saturated.
        let out = law.control_detailed(2.0 * rho, t);
        assert!(out.band_clamped);
        assert!(out.saturated);
        assert_eq!(out.u, -1e6);

        // Out-of-band mirror image.
        let out = law.control_detailed(-2.0 * rho, t);
        assert_eq!(out.u, 1e6);

        // Comfortably inside: neither guard trips.
        let out = law.control_detailed(0.3 * rho, t);
        assert!(!out.band_clamped);
        assert!(!out.saturated);
        assert!(out.u.abs() <= (std::f64::consts::FRAC_PI_2 * (1.0 - 1e-9)).tan());
    }

    #[test]
    fn limit_validation() {
        let env = Envelope::new(4.0, 0.05, 3.0, 0.1).unwrap();
        let s = || SurfaceSpec::binomial(2, 2.0).unwrap();
        assert!(QsmcLaw::with_limits(env, s(), GainSign::Positive, 0.0, 1e6).is_err());
        assert!(QsmcLaw::with_limits(env, s(), GainSign::Positive, 1.0, 1e6).is_err());
        assert!(QsmcLaw::with_limits(env, s(), GainSign::Positive, 1e-9, 0.0).is_err());
        assert!(QsmcLaw::with_limits(env, s(), GainSign::Positive, 1e-9, f64::NAN).is_err());
        assert!(QsmcLaw::with_limits(env, s(), GainSign::Positive, 1e-9, f64::INFINITY).is_ok());
    }

    #[test]
    fn relay_law_switches_with_jump_of_twice_the_gain() {
        let surface = SurfaceSpec::binomial(2, 2.0).unwrap();
        let law = RelaySmcLaw::new(surface, 5.0, GainSign::Positive).unwrap();
        assert_eq!(law.control(0.3), -5.0);
        assert_eq!(law.control(-1e-9), 5.0);
        assert_eq!(law.control(0.0), 0.0);
        // Jump across the surface is exactly 2K.
        assert_eq!(law.control(-1e-12) - law.control(1e-12), 10.0);
    }

    #[test]
    fn relay_gain_must_be_positive() {
        let surface = SurfaceSpec::binomial(2, 2.0).unwrap();
        assert!(RelaySmcLaw::new(surface.clone(), 0.0, GainSign::Positive).is_err());
        assert!(RelaySmcLaw::new(surface, -5.0, GainSign::Positive).is_err());
    }
}
