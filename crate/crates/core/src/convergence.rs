//! Variance evolution of the decoder messages and its analytic bounds.
//!
//! At high SNR the light-edge variable messages of a degree `d >= 5` code
//! shrink at least as fast as `σ²/(1.6k)` and the unit-edge ones stay below
//! `(2/3)σ²`. [`trace_convergence`] averages the empirical variances from
//! decoder diagnostics; [`appendix_recursion`] iterates the per-class bound
//! relations in exact arithmetic.

use std::io::Write;

use num_rational::Ratio;
use statrs::function::erf::erfc;

use crate::decoder::{Diagnostics, IterationStats};
use crate::error::{Error, Result};

/// Per-iteration averages of the message variances, in absolute units.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTrace {
    pub sigma2: f64,
    pub iterations: Vec<IterationStats>,
}

impl ConvergenceTrace {
    pub fn len(&self) -> usize {
        self.iterations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iterations.is_empty()
    }

    /// `V̄_≠1(k)/σ²` for `k = 1..=K`.
    pub fn light_ratio(&self) -> Vec<f64> {
        self.iterations
            .iter()
            .map(|s| s.v_light / self.sigma2)
            .collect()
    }

    /// `V̄_1(k)/σ²` for `k = 1..=K`.
    pub fn unit_ratio(&self) -> Vec<f64> {
        self.iterations
            .iter()
            .map(|s| s.v_unit / self.sigma2)
            .collect()
    }

    /// Writes the trace CSV with the closed-form bounds alongside.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "k",
            "v_light_over_sigma2",
            "v_unit_over_sigma2",
            "bound_light",
            "bound_unit",
        ])
        .map_err(csv_error)?;
        for (i, (light, unit)) in self.light_ratio().iter().zip(self.unit_ratio()).enumerate() {
            let k = i + 1;
            let (bl, bu) = theorem1_bound(k);
            w.write_record([
                k.to_string(),
                light.to_string(),
                unit.to_string(),
                bl.to_string(),
                bu.to_string(),
            ])
            .map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Config(format!("{other:?}")),
    }
}

/// Averages per-iteration statistics over frames, in frame order.
///
/// Every frame must have run the same number of iterations.
pub fn trace_convergence<'a, I>(frames: I, sigma2: f64) -> Result<ConvergenceTrace>
where
    I: IntoIterator<Item = &'a Diagnostics>,
{
    let mut sum: Vec<IterationStats> = Vec::new();
    let mut count = 0usize;
    for diag in frames {
        if count == 0 {
            sum = vec![IterationStats::default(); diag.iterations.len()];
        } else if diag.iterations.len() != sum.len() {
            return Err(Error::LengthMismatch {
                expected: sum.len(),
                actual: diag.iterations.len(),
            });
        }
        for (acc, s) in sum.iter_mut().zip(&diag.iterations) {
            acc.v_unit += s.v_unit;
            acc.v_light += s.v_light;
            acc.c_unit += s.c_unit;
            acc.c_light += s.c_light;
        }
        count += 1;
    }
    let scale = 1.0 / count.max(1) as f64;
    for s in &mut sum {
        s.v_unit *= scale;
        s.v_light *= scale;
        s.c_unit *= scale;
        s.c_light *= scale;
    }
    Ok(ConvergenceTrace {
        sigma2,
        iterations: sum,
    })
}

/// `(1/(1.6K), 2/3)`: light- and unit-edge variance bounds as multiples of σ².
pub fn theorem1_bound(k: usize) -> (f64, f64) {
    assert!(k >= 1, "iteration index starts at 1");
    (1.0 / (1.6 * k as f64), 2.0 / 3.0)
}

pub const MIN_RECURSION_DEGREE: usize = 5;

/// Bounds of one iteration in units of σ².
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundRow {
    pub k: usize,
    pub v_light: Ratio<i64>,
    pub v_unit: Ratio<i64>,
    pub c_light: Ratio<i64>,
    pub c_unit: Ratio<i64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundSequence {
    pub d: usize,
    pub sigma2: f64,
    /// Rows for `k = 1..=K`.
    pub rows: Vec<BoundRow>,
}

impl BoundSequence {
    /// Light-edge bound at iteration `k` in absolute units.
    pub fn v_light(&self, k: usize) -> f64 {
        to_f64(self.rows[k - 1].v_light) * self.sigma2
    }

    pub fn v_unit(&self, k: usize) -> f64 {
        to_f64(self.rows[k - 1].v_unit) * self.sigma2
    }
}

fn to_f64(r: Ratio<i64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Iterates the per-class variance bounds for `k = 1..=iterations`.
///
/// Iterations 1 and 2 are seeded with `V_1 + V_≠1 < σ²` (each side bounded by
/// σ²) and `V_≠1 < σ²/3.2`. From iteration 3 on
///
/// ```text
/// C_≠1(k) < d σ²
/// C_1(k)  < V_≠1(k-1)
/// V_≠1(k) < (1.6/σ² + 1/V_≠1(k-1))⁻¹
/// V_1(k)  < (2/3) σ²
/// ```
pub fn appendix_recursion(d: usize, iterations: usize, sigma2: f64) -> Result<BoundSequence> {
    if d < MIN_RECURSION_DEGREE {
        return Err(Error::DegreeTooSmall {
            d,
            min: MIN_RECURSION_DEGREE,
        });
    }
    if iterations < 3 {
        return Err(Error::Config(format!(
            "the recursion needs at least 3 iterations, got {iterations}"
        )));
    }
    let one = Ratio::from_integer(1);
    let coef = Ratio::new(8, 5);
    let unit = Ratio::new(2, 3);
    let light_c = Ratio::from_integer(d as i64);
    let mut rows = vec![
        BoundRow {
            k: 1,
            v_light: one,
            v_unit: one,
            c_light: light_c,
            c_unit: one,
        },
        BoundRow {
            k: 2,
            v_light: Ratio::new(5, 16),
            v_unit: unit,
            c_light: light_c,
            c_unit: one,
        },
    ];
    for k in 3..=iterations {
        let prev = rows[k - 2].v_light;
        rows.push(BoundRow {
            k,
            v_light: one / (coef + one / prev),
            v_unit: unit,
            c_light: light_c,
            c_unit: prev,
        });
    }
    Ok(BoundSequence { d, sigma2, rows })
}

/// Mutual information in bits of `Y = X + N`, `X` uniform on `[-M/2, M/2)`
/// and `N ~ N(0, σ²)`.
pub fn uniform_input_capacity(m: u32, sigma: f64) -> f64 {
    assert!(sigma > 0.0, "sigma must be positive");
    let half = m as f64 / 2.0;
    let density = |y: f64| band_probability((y + half) / sigma, (y - half) / sigma) / m as f64;
    let integrand = |y: f64| {
        let p = density(y);
        if p > 0.0 {
            -p * p.log2()
        } else {
            0.0
        }
    };
    // symmetric in y; split at the band edge where the density bends
    let reach = half + 40.0 * sigma;
    let mut h_y = 0.0;
    for (a, b) in [(0.0, half), (half, reach)] {
        h_y += 2.0 * adaptive_simpson(&integrand, a, b, 1e-12, 50);
    }
    let h_n = 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * sigma * sigma).log2();
    (h_y - h_n).max(0.0)
}

/// `Φ(a) - Φ(b)` for `a >= b` without cancellation in either tail.
fn band_probability(a: f64, b: f64) -> f64 {
    let tail = |z: f64| 0.5 * erfc(z / std::f64::consts::SQRT_2);
    if b >= 0.0 {
        tail(b) - tail(a)
    } else if a <= 0.0 {
        tail(-a) - tail(-b)
    } else {
        1.0 - tail(a) - tail(-b)
    }
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// SNR in dB at which [`uniform_input_capacity`] reaches `rate` bits.
pub fn capacity_snr_db(m: u32, rate: f64) -> f64 {
    let capacity_at =
        |snr_db: f64| uniform_input_capacity(m, crate::channel::snr_to_sigma(snr_db, m));
    let (mut lo, mut hi) = (-30.0, 80.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if capacity_at(mid) < rate {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-9 {
            break;
        }
    }
    0.5 * (lo + hi)
}
