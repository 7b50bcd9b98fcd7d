//! Fixtures shared by the benchmarks.

use ldlc_core::PeriodicGaussian;

/// Deterministic check messages around `y = 0` for a degree-`d` node: one
/// unit-period edge and `d-1` edges of period `√d`.
pub fn variable_node_inputs(d: usize) -> (f64, Vec<PeriodicGaussian>, Vec<f64>) {
    let light = (d as f64).sqrt();
    let msgs = (0..d)
        .map(|i| {
            let period = if i == 0 { 1.0 } else { light };
            let offset = 0.37 * (i as f64 + 1.0) - 0.9;
            PeriodicGaussian::new(offset, 0.02 + 0.01 * i as f64, period)
        })
        .collect();
    let windows = ldlc_core::SelectionWindow::default_for(d);
    let eps = (0..d)
        .map(|i| if i == 0 { windows.unit } else { windows.light })
        .collect();
    (0.05, msgs, eps)
}
