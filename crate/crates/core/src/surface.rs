//! Sliding-variable definition and surface design.
//!
//! The sliding variable for an order-`n` tracking problem is the weighted
//! sum of the output error and its first `n-1` derivatives,
//!
//! ```text
//! sigma = c1*e + c2*e' + ... + c_{n-1}*e^(n-2) + e^(n-1)
//! ```
//!
//! with the convention that `c1` multiplies the raw output error and the
//! highest derivative always has weight exactly 1. Holding `sigma` near zero
//! forces the error to obey the stable filter
//! `s^(n-1) + c_{n-1} s^(n-2) + ... + c2 s + c1`, so the weight vector is
//! only useful when that polynomial is Hurwitz.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Roots with real part at or above `-STABILITY_MARGIN` are treated as
/// unstable. Guards against eigenvalue round-off on marginally stable inputs.
pub const STABILITY_MARGIN: f64 = 1e-9;

/// Three-branch sign: -1, 0, or +1. `sign(0) == 0`, and negative zero
/// counts as zero. NaN also maps to 0 (no branch matches).
pub fn sign(x: f64) -> i32 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// Output error and its derivatives at one instant:
/// `[e, e', ..., e^(n-1)]`. Always non-empty with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorState {
    derivatives: Vec<f64>,
}

impl ErrorState {
    pub fn new(derivatives: Vec<f64>) -> Result<Self> {
        if derivatives.is_empty() {
            return Err(Error::invalid("error state", "needs at least one entry"));
        }
        for &v in &derivatives {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    context: "error state",
                    value: v,
                });
            }
        }
        Ok(ErrorState { derivatives })
    }

    /// System order `n` (number of stacked derivatives).
    pub fn order(&self) -> usize {
        self.derivatives.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.derivatives
    }
}

/// Weight vector defining a sliding variable, stored as
/// `[c1, ..., c_{n-1}, 1]` (ascending derivative order, last entry pinned
/// to 1). `pole` records the common filter root when the weights came from
/// [`SurfaceSpec::binomial`]; closed-form tracking bounds are only available
/// in that case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSpec {
    coeffs: Vec<f64>,
    pole: Option<f64>,
}

impl SurfaceSpec {
    /// Builds a surface from an explicit weight vector. The vector must be
    /// non-empty, finite, and end in exactly 1. Stability of the induced
    /// error filter is *not* enforced here — check [`SurfaceSpec::is_hurwitz`]
    /// before trusting the design (the CLI refuses unstable surfaces unless
    /// forced).
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::invalid("surface", "weight vector is empty"));
        }
        for &c in &coeffs {
            if !c.is_finite() {
                return Err(Error::NonFinite {
                    context: "surface",
                    value: c,
                });
            }
        }
        if *coeffs.last().unwrap() != 1.0 {
            return Err(Error::invalid(
                "surface",
                format!(
                    "highest-derivative weight must be exactly 1, got {}",
                    coeffs.last().unwrap()
                ),
            ));
        }
        Ok(SurfaceSpec { coeffs, pole: None })
    }

    /// Places all `n-1` filter roots at `-a`: the weights are the binomial
    /// expansion of `(s + a)^(n-1)`, computed with exact integer binomial
    /// coefficients times powers of `a`. Requires `n >= 2` and `a > 0`.
    pub fn binomial(n: usize, a: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(
                "surface",
                format!("binomial surface needs order >= 2, got {n}"),
            ));
        }
        if !a.is_finite() || a <= 0.0 {
            return Err(Error::invalid(
                "surface",
                format!("binomial surface needs a positive pole, got {a}"),
            ));
        }
        let m = n - 1;
        let coeffs = (1..=n)
            .map(|i| binomial_coefficient(m, n - i) as f64 * a.powi((n - i) as i32))
            .collect();
        Ok(SurfaceSpec {
            coeffs,
            pole: Some(a),
        })
    }

    /// System order `n` this surface applies to.
    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    /// `[c1, ..., c_{n-1}, 1]`.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Common filter root magnitude, when built by [`SurfaceSpec::binomial`].
    pub fn pole(&self) -> Option<f64> {
        self.pole
    }

    /// Evaluates the sliding variable. Panics if the error state order does
    /// not match the surface order; dimensions are fixed at design time, so
    /// a mismatch here is a caller bug, not a runtime condition.
    pub fn sigma(&self, e: &ErrorState) -> f64 {
        assert_eq!(
            e.order(),
            self.order(),
            "error state order {} does not match surface order {}",
            e.order(),
            self.order()
        );
        self.coeffs.iter().zip(e.values()).map(|(c, v)| c * v).sum()
    }

    /// True when the induced error filter polynomial
    /// `s^(n-1) + c_{n-1} s^(n-2) + ... + c1` has all roots strictly in the
    /// left half plane (real part below `-STABILITY_MARGIN`).
    pub fn is_hurwitz(&self) -> bool {
        // Construction guarantees the coefficient vector is valid input.
        is_hurwitz(&self.coeffs).expect("surface coefficients are validated at construction")
    }

    /// Steady-state bound on `|e^(i)|` once the sliding variable is confined
    /// to `|sigma| <= epsilon`: `(2a)^i * epsilon / a^(n-1)`. Only defined
    /// for surfaces with a recorded pole; `0 <= i <= n-1`.
    pub fn tracking_bound(&self, epsilon: f64, i: usize) -> Result<f64> {
        let a = self.pole.ok_or_else(|| {
            Error::invalid(
                "tracking bound",
                "closed-form bound requires a binomial (single-pole) surface",
            )
        })?;
        if i >= self.order() {
            return Err(Error::invalid(
                "tracking bound",
                format!(
                    "derivative order {i} out of range for order-{} system",
                    self.order()
                ),
            ));
        }
        if !epsilon.is_finite() || epsilon < 0.0 {
            return Err(Error::invalid(
                "tracking bound",
                format!("band half-width must be non-negative, got {epsilon}"),
            ));
        }
        Ok((2.0 * a).powi(i as i32) * epsilon / a.powi(self.order() as i32 - 1))
    }
}

/// Exact integer binomial coefficient via the multiplicative formula.
/// The running product is divisible at every step, so no rounding occurs.
fn binomial_coefficient(n: usize, k: usize) -> u128 {
    debug_assert!(k <= n);
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for j in 0..k {
        acc = acc * (n - j) as u128 / (j + 1) as u128;
    }
    acc
}

/// Hurwitz test for a monic polynomial given as ascending coefficients
/// `[b0, b1, ..., b_{m-1}, 1]` (the same layout as [`SurfaceSpec::coeffs`]).
/// Degree zero (`[1]`) is trivially stable. Roots are computed as companion
/// matrix eigenvalues; a root counts as stable only if its real part is
/// below `-STABILITY_MARGIN`.
pub fn is_hurwitz(coeffs: &[f64]) -> Result<bool> {
    if coeffs.is_empty() {
        return Err(Error::invalid("hurwitz check", "empty coefficient vector"));
    }
    for &c in coeffs {
        if !c.is_finite() {
            return Err(Error::NonFinite {
                context: "hurwitz check",
                value: c,
            });
        }
    }
    if *coeffs.last().unwrap() != 1.0 {
        return Err(Error::invalid(
            "hurwitz check",
            format!(
                "polynomial must be monic, leading coefficient {}",
                coeffs.last().unwrap()
            ),
        ));
    }
    let m = coeffs.len() - 1;
    if m == 0 {
        return Ok(true);
    }
    let mut companion = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        companion[(i, m - 1)] = -coeffs[i];
        if i + 1 < m {
            companion[(i + 1, i)] = 1.0;
        }
    }
    Ok(companion
        .complex_eigenvalues()
        .iter()
        .all(|root| root.re < -STABILITY_MARGIN))
}
