//! Benchmark fixtures.

use subdiff_core::BernsteinSpec;

/// The stable and tempered-stable clocks used throughout the benches.
pub fn suite_specs() -> Vec<(&'static str, BernsteinSpec)> {
    vec![
        ("stable_0.5", BernsteinSpec::stable(0.5).expect("valid index")),
        (
            "tempered_0.5_1",
            BernsteinSpec::tempered_stable(0.5, 1.0).expect("valid parameters"),
        ),
    ]
}
