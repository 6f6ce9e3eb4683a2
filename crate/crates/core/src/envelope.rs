//! Exponentially shrinking band that the sliding variable must stay inside.
//!
//! The band half-width is `rho(t) = rho0 * exp(-mu * t) + rho_inf`. A design
//! is admissible when the band starts wide enough to contain the initial
//! sliding value (`rho0 > |sigma(0)|`) and tightens through the target
//! half-width `epsilon` without ever going below its floor
//! (`rho_inf < epsilon < rho0`). Under those two conditions the time at
//! which the band first reaches `epsilon`,
//! `(1/mu) * ln(rho0 / (epsilon - rho_inf))`, is a hard upper bound on the
//! reaching time of any trajectory confined to the band.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::surface::SurfaceSpec;

/// Default multiplicative safety margin applied by [`suggest_rho0`].
pub const DEFAULT_RHO0_MARGIN: f64 = 1.1;

/// Shrinking-band parameters. All four values are finite and positive;
/// [`Envelope::new`] additionally enforces the band condition
/// `rho_inf < epsilon < rho0`, while [`Envelope::unvalidated`] skips it for
/// exploratory runs (any reaching-time guarantee is void in that case).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    rho0: f64,
    rho_inf: f64,
    mu: f64,
    epsilon: f64,
}

impl Envelope {
    pub fn new(rho0: f64, rho_inf: f64, mu: f64, epsilon: f64) -> Result<Self> {
        let env = Self::unvalidated(rho0, rho_inf, mu, epsilon)?;
        if !env.satisfies_band_condition() {
            return Err(Error::invalid(
                "envelope",
                format!("band condition rho_inf < epsilon < rho0 violated: rho_inf={rho_inf}, epsilon={epsilon}, rho0={rho0}"),
            ));
        }
        Ok(env)
    }

    /// Positivity checks only. Exists so that deliberately out-of-band
    /// designs can still be constructed and simulated when explicitly forced.
    pub fn unvalidated(rho0: f64, rho_inf: f64, mu: f64, epsilon: f64) -> Result<Self> {
        for (name, v) in [
            ("rho0", rho0),
            ("rho_inf", rho_inf),
            ("mu", mu),
            ("epsilon", epsilon),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::invalid(
                    "envelope",
                    format!("{name} must be finite and positive, got {v}"),
                ));
            }
        }
        Ok(Envelope {
            rho0,
            rho_inf,
            mu,
            epsilon,
        })
    }

    pub fn rho0(&self) -> f64 {
        self.rho0
    }

    pub fn rho_inf(&self) -> f64 {
        self.rho_inf
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Target half-width the band shrinks through.
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Band half-width at time `t >= 0`.
    pub fn rho(&self, t: f64) -> f64 {
        assert!(t >= 0.0, "band half-width queried at negative time {t}");
        self.rho0 * (-self.mu * t).exp() + self.rho_inf
    }

    /// Band shrink rate at time `t >= 0`: always within `[-mu*rho0, 0]`.
    pub fn rho_dot(&self, t: f64) -> f64 {
        assert!(t >= 0.0, "band shrink rate queried at negative time {t}");
        -self.mu * self.rho0 * (-self.mu * t).exp()
    }

    /// `rho_inf < epsilon < rho0`.
    pub fn satisfies_band_condition(&self) -> bool {
        self.rho_inf < self.epsilon && self.epsilon < self.rho0
    }

    /// Initial-containment condition: the band must start strictly wider
    /// than the initial sliding value.
    pub fn contains_initially(&self, sigma0: f64) -> bool {
        sigma0.abs() < self.rho0
    }

    /// Time at which the band has shrunk to `epsilon`:
    /// `(1/mu) * ln(rho0 / (epsilon - rho_inf))`. Undefined when
    /// `epsilon <= rho_inf` (the band never reaches the target).
    pub fn reaching_time_bound(&self) -> Result<f64> {
        if self.epsilon <= self.rho_inf {
            return Err(Error::invalid(
                "reaching time bound",
                format!(
                    "undefined for epsilon <= rho_inf (epsilon={}, rho_inf={})",
                    self.epsilon, self.rho_inf
                ),
            ));
        }
        Ok((self.rho0 / (self.epsilon - self.rho_inf)).ln() / self.mu)
    }
}

/// Suggested initial band width from declared bounds on the initial error
/// derivatives: `margin * sum_i |c_i| * ebound_{i-1}`, the triangle-inequality
/// worst case for `|sigma(0)|`. Sufficient, not necessary — the actual
/// `|sigma(0)|` per initial condition may be much smaller.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rho0Suggestion {
    pub rho0: f64,
    /// True when every bound is zero: `sigma(0) = 0`, so any positive
    /// `rho0` works and the suggested value (0) is not directly usable.
    pub degenerate: bool,
}

/// [`suggest_rho0_with_margin`] at the default margin of 1.1.
pub fn suggest_rho0(surface: &SurfaceSpec, ebounds: &[f64]) -> Result<Rho0Suggestion> {
    suggest_rho0_with_margin(surface, ebounds, DEFAULT_RHO0_MARGIN)
}

/// Bounds must be non-negative and match the surface order; the margin must
/// be at least 1 (it scales a worst case, shrinking it would defeat the
/// purpose).
pub fn suggest_rho0_with_margin(
    surface: &SurfaceSpec,
    ebounds: &[f64],
    margin: f64,
) -> Result<Rho0Suggestion> {
    if ebounds.len() != surface.order() {
        return Err(Error::DimensionMismatch {
            context: "initial error bounds",
            expected: surface.order(),
            got: ebounds.len(),
        });
    }
    for &b in ebounds {
        if !b.is_finite() || b < 0.0 {
            return Err(Error::invalid(
                "initial error bounds",
                format!("bounds must be non-negative, got {b}"),
            ));
        }
    }
    if !margin.is_finite() || margin < 1.0 {
        return Err(Error::invalid(
            "rho0 suggestion",
            format!("margin must be >= 1, got {margin}"),
        ));
    }
    let worst: f64 = surface
        .coeffs()
        .iter()
        .zip(ebounds)
        .map(|(c, b)| c.abs() * b)
        .sum();
    Ok(Rho0Suggestion {
        rho0: margin * worst,
        degenerate: worst == 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn example1() -> Envelope {
        Envelope::new(4.0, 0.05, 3.0, 0.1).unwrap()
    }

    fn example2() -> Envelope {
        Envelope::new(5.0, 0.05, 3.0, 0.1).unwrap()
    }

    #[test]
    fn rho_endpoints() {
        let env = example1();
        assert!((env.rho(0.0) - 4.05).abs() < 1e-15);
        // Far past the transient the band sits on its floor.
        assert!((env.rho(1e6) - 0.05).abs() < 1e-15);
    }

    #[test]
    fn rho_dot_examples() {
        let env = example1();
        assert_eq!(env.rho_dot(0.0), -12.0); // exp(0) is exactly 1

        let env = Envelope::new(1.0, 0.05, 1.0, 0.5).unwrap();
        assert!((env.rho_dot(2.0f64.ln()) - -0.5).abs() < 1e-15);
    }

    #[test]
    #[should_panic(expected = "negative time")]
    fn rho_rejects_negative_time() {
        example1().rho(-0.1);
    }

    #[test]
    fn band_condition_enforced_by_new_but_not_unvalidated() {
        assert!(Envelope::new(4.0, 0.2, 3.0, 0.1).is_err()); // epsilon <= rho_inf
        assert!(Envelope::new(0.05, 0.01, 3.0, 0.1).is_err()); // epsilon >= rho0
        let forced = Envelope::unvalidated(4.0, 0.2, 3.0, 0.1).unwrap();
        assert!(!forced.satisfies_band_condition());
    }

    #[test]
    fn positivity_always_enforced() {
        assert!(Envelope::unvalidated(0.0, 0.05, 3.0, 0.1).is_err());
        assert!(Envelope::unvalidated(4.0, -0.05, 3.0, 0.1).is_err());
        assert!(Envelope::unvalidated(4.0, 0.05, 0.0, 0.1).is_err());
        assert!(Envelope::unvalidated(4.0, 0.05, 3.0, f64::NAN).is_err());
    }

    #[test]
    fn initial_containment_is_strict() {
        let env = example1();
        assert!(env.contains_initially(1.7));
        assert!(env.contains_initially(-3.99));
        assert!(!env.contains_initially(4.0));
        assert!(!env.contains_initially(-4.1));
    }

    #[test]
    fn reaching_time_bound_closed_forms() {
        // rho0/(eps-rho_inf) = 4/0.05 = 80 and 5/0.05 = 100.
        let b1 = example1().reaching_time_bound().unwrap();
        assert!((b1 - 80.0f64.ln() / 3.0).abs() <= 1e-12 * b1);
        let b2 = example2().reaching_time_bound().unwrap();
        assert!((b2 - 100.0f64.ln() / 3.0).abs() <= 1e-12 * b2);
    }

    #[test]
    fn reaching_time_bound_undefined_below_floor() {
        let env = Envelope::unvalidated(4.0, 0.2, 3.0, 0.1).unwrap();
        assert!(env.reaching_time_bound().is_err());
    }

    #[test]
    fn band_hits_epsilon_at_the_bound() {
        for env in [example1(), example2()] {
            let t_r = env.reaching_time_bound().unwrap();
            let eps = env.epsilon();
            assert!(
                (env.rho(t_r) - eps).abs() <= 1e-12 * eps,
                "rho(t_r) = {} vs epsilon = {}",
                env.rho(t_r),
                eps
            );
        }
    }

    #[test]
    fn suggestion_examples() {
        let s = SurfaceSpec::new(vec![2.0, 1.0]).unwrap();
        let sug = suggest_rho0(&s, &[1.0, 1.1]).unwrap();
        assert!((sug.rho0 - 3.41).abs() < 1e-12);
        assert!(!sug.degenerate);

        let s = SurfaceSpec::new(vec![8.0, 12.0, 6.0, 1.0]).unwrap();
        let sug = suggest_rho0(&s, &[1.0, 1.0, 1.0, 1.0]).unwrap();
        assert!((sug.rho0 - 29.7).abs() < 1e-12);

        // All-zero bounds: sigma(0) = 0, flagged rather than rejected.
        let s = SurfaceSpec::new(vec![1.0]).unwrap();
        let sug = suggest_rho0(&s, &[0.0]).unwrap();
        assert_eq!(sug.rho0, 0.0);
        assert!(sug.degenerate);
    }

    #[test]
    fn suggestion_rejects_bad_input() {
        let s = SurfaceSpec::new(vec![2.0, 1.0]).unwrap();
        assert!(suggest_rho0(&s, &[1.0]).is_err()); // wrong length
        assert!(suggest_rho0(&s, &[1.0, -0.5]).is_err()); // negative bound
        assert!(suggest_rho0_with_margin(&s, &[1.0, 1.0], 0.9).is_err());
    }

    proptest! {
        /// rho decays monotonically from rho0 + rho_inf toward rho_inf and
        /// its slope stays inside [-mu*rho0, 0].
        #[test]
        fn band_is_monotone_with_bounded_slope(
            rho0 in 0.1f64..50.0,
            rho_inf_frac in 1e-3f64..0.9,
            mu in 0.1f64..10.0,
        ) {
            let rho_inf = rho_inf_frac * 0.5 * rho0;
            let epsilon = 0.5 * (rho_inf + rho0); // strictly between: C2 holds
            let env = Envelope::new(rho0, rho_inf, mu, epsilon).unwrap();
            let mut prev = f64::INFINITY;
            for k in 0..=2000 {
                let t = k as f64 * 0.01;
                let r = env.rho(t);
                // Strict in exact arithmetic; >= because the exponential
                // term can round away once it falls below an ulp of rho_inf.
                prop_assert!(r >= env.rho_inf());
                prop_assert!(r <= prev);
                prev = r;

                let rd = env.rho_dot(t);
                prop_assert!(rd <= 0.0);
                prop_assert!(rd >= -mu * rho0);
            }
        }

        /// Central finite differences of rho converge to rho_dot at O(h^2).
        #[test]
        fn rho_dot_matches_finite_differences(
            rho0 in 0.1f64..50.0,
            mu in 0.1f64..5.0,
            t in 0.1f64..20.0,
        ) {
            let env = Envelope::new(rho0, rho0 * 1e-3, mu, rho0 * 2e-3).unwrap();
            let fd = |h: f64| (env.rho(t + h) - env.rho(t - h)) / (2.0 * h);
            let err = |h: f64| (fd(h) - env.rho_dot(t)).abs();
            let e1 = err(1e-3);
            let e2 = err(5e-4);
            // Truncation error scales with mu^3 * rho0; allow slack for
            // cancellation noise at small h.
            let scale = mu.powi(3) * rho0;
            prop_assert!(e1 <= 1e-5 * scale + 1e-9);
            prop_assert!(e2 <= 0.3 * e1 + 1e-9);
        }
    }
}
