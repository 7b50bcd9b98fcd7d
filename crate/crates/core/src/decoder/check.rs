use crate::gaussian::{Gaussian, PeriodicGaussian};

/// Check-to-variable message under the Gaussian approximation.
///
/// The incoming variable messages are stretched by their labels and
/// convolved, the result is stretched by `-out_label`, and the periodic
/// extension has period `1/|out_label|`. For Gaussians all of this stays in
/// closed form:
///
/// ```text
/// base_mean = -(1/h_l) · Σ h_i m_i
/// variance  =  (1/h_l²) · Σ h_i² σ_i²
/// ```
pub fn check_node(incoming: &[(Gaussian, f64)], out_label: f64) -> PeriodicGaussian {
    let (sum_mean, sum_var) = incoming.iter().fold((0.0, 0.0), |(sm, sv), (g, h)| {
        (sm + h * g.mean, sv + h * h * g.variance)
    });
    PeriodicGaussian::new(
        -sum_mean / out_label,
        sum_var / (out_label * out_label),
        1.0 / out_label.abs(),
    )
}

/// All outgoing messages of one check node, each excluding its own edge.
pub(crate) fn check_row(incoming: &[(Gaussian, f64)], out: &mut [PeriodicGaussian]) {
    for (l, slot) in out.iter_mut().enumerate() {
        let (mut sum_mean, mut sum_var) = (0.0, 0.0);
        for (i, (g, h)) in incoming.iter().enumerate() {
            if i != l {
                sum_mean += h * g.mean;
                sum_var += h * h * g.variance;
            }
        }
        let h_l = incoming[l].1;
        *slot = PeriodicGaussian::new(-sum_mean / h_l, sum_var / (h_l * h_l), 1.0 / h_l.abs());
    }
}
