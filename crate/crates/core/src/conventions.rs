//! Numerical constants that fix conventions of the pipeline. They are
//! gathered in one value so the self-test can run with deliberately wrong
//! settings and show that the checks catch them.

/// Ratio between a symmetric shift `ω ↦ ω + Bθ` and the change it induces
/// in the torsion `P`. Confirmed by a calibration test on the flat model.
pub const KAPPA: f64 = 3.0;

/// `2(n - 1)` for `n = 6`: Schouten is `(Ric - s g / 10) / 4`.
pub const SCHOUTEN_TRACE_DENOMINATOR: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Conventions {
    pub kappa: f64,
    pub schouten_trace_denominator: f64,
}

impl Default for Conventions {
    fn default() -> Self {
        Conventions { kappa: KAPPA, schouten_trace_denominator: SCHOUTEN_TRACE_DENOMINATOR }
    }
}
