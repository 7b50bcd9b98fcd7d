//! Closed-form algebra on scalar Gaussians.
//!
//! Messages in the Gaussian-approximation decoders are single Gaussians
//! (variable to check) or periodic Gaussians (check to variable). The
//! variable-node update multiplies Gaussians together, keeps track of the
//! scalar *height* of each product, and collapses small mixtures back to a
//! single Gaussian by matching the first two moments.
//!
//! Heights are always carried as natural logarithms so that long products of
//! vanishing factors never underflow.

use crate::error::{Error, Result};

/// Lower clamp applied to every variance.
pub const VAR_FLOOR: f64 = 1e-12;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// A normal density `N(w; mean, variance)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian {
    pub mean: f64,
    pub variance: f64,
}

impl Gaussian {
    /// Builds a Gaussian, clamping the variance to [`VAR_FLOOR`].
    pub fn new(mean: f64, variance: f64) -> Self {
        debug_assert!(mean.is_finite(), "non-finite mean {mean}");
        debug_assert!(!variance.is_nan(), "NaN variance");
        Gaussian {
            mean,
            variance: variance.max(VAR_FLOOR),
        }
    }

    pub fn precision(&self) -> f64 {
        1.0 / self.variance
    }

    pub fn ln_pdf(&self, w: f64) -> f64 {
        let z = w - self.mean;
        -0.5 * (LN_2PI + self.variance.ln()) - z * z / (2.0 * self.variance)
    }

    pub fn pdf(&self, w: f64) -> f64 {
        self.ln_pdf(w).exp()
    }

    /// Wraps the density with a unit height.
    pub fn scaled(self, log_height: f64) -> ScaledGaussian {
        ScaledGaussian {
            gaussian: self,
            log_height,
        }
    }
}

/// `c · N(w; mean, variance)` with `c` stored as `ln c`.
///
/// A log height of `-inf` denotes an identically zero function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledGaussian {
    pub gaussian: Gaussian,
    pub log_height: f64,
}

impl ScaledGaussian {
    pub fn unit(gaussian: Gaussian) -> Self {
        gaussian.scaled(0.0)
    }

    pub fn mean(&self) -> f64 {
        self.gaussian.mean
    }

    pub fn variance(&self) -> f64 {
        self.gaussian.variance
    }

    pub fn height(&self) -> f64 {
        self.log_height.exp()
    }

    /// Multiplies the height by `factor`.
    pub fn times(self, factor: f64) -> Self {
        ScaledGaussian {
            gaussian: self.gaussian,
            log_height: self.log_height + factor.ln(),
        }
    }
}

/// A check message: the replicas `base_mean + k·period` for every integer `k`,
/// all sharing one variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicGaussian {
    pub base_mean: f64,
    pub variance: f64,
    pub period: f64,
}

impl PeriodicGaussian {
    pub fn new(base_mean: f64, variance: f64, period: f64) -> Self {
        debug_assert!(period > 0.0, "period must be positive");
        PeriodicGaussian {
            base_mean,
            variance: variance.max(VAR_FLOOR),
            period,
        }
    }

    pub fn replica(&self, k: i64) -> Gaussian {
        Gaussian::new(self.base_mean + k as f64 * self.period, self.variance)
    }

    /// Sum of replica densities within `reach` periods of `w`.
    pub fn density(&self, w: f64, reach: i64) -> f64 {
        let k0 = ((w - self.base_mean) / self.period).round() as i64;
        (k0 - reach..=k0 + reach)
            .map(|k| self.replica(k).pdf(w))
            .sum()
    }
}

/// Natural log of the height of `N(a)·N(b)`.
pub fn pair_log_height(a: &Gaussian, b: &Gaussian) -> f64 {
    let s = a.variance + b.variance;
    let dm = a.mean - b.mean;
    -0.5 * (LN_2PI + s.ln()) - dm * dm / (2.0 * s)
}

/// Product of two Gaussian densities as a scaled Gaussian.
pub fn gaussian_product(a: &Gaussian, b: &Gaussian) -> ScaledGaussian {
    let precision = a.precision() + b.precision();
    let info = a.mean * a.precision() + b.mean * b.precision();
    ScaledGaussian {
        gaussian: Gaussian::new(info / precision, 1.0 / precision),
        log_height: pair_log_height(a, b),
    }
}

/// Product of two scaled Gaussians; heights multiply.
pub fn scaled_product(a: &ScaledGaussian, b: &ScaledGaussian) -> ScaledGaussian {
    let p = gaussian_product(&a.gaussian, &b.gaussian);
    ScaledGaussian {
        gaussian: p.gaussian,
        log_height: p.log_height + a.log_height + b.log_height,
    }
}

/// Removes the factor `component` from `product` (precision subtraction).
pub fn gaussian_divide(product: &Gaussian, component: &Gaussian) -> Result<Gaussian> {
    let precision = product.precision() - component.precision();
    if !(precision > 0.0) || !precision.is_finite() {
        return Err(Error::NonPositivePrecision);
    }
    let info = product.mean * product.precision() - component.mean * component.precision();
    Ok(Gaussian::new(info / precision, 1.0 / precision))
}

/// Left fold of [`gaussian_product`] over `factors`, accumulating log heights.
///
/// Returns `None` for an empty slice.
pub fn product_reduce(factors: &[Gaussian]) -> Option<ScaledGaussian> {
    let (first, rest) = factors.split_first()?;
    Some(rest.iter().fold(ScaledGaussian::unit(*first), |acc, g| {
        scaled_product(&acc, &ScaledGaussian::unit(*g))
    }))
}

/// The replicas of `pg` immediately at or below `y` and at or above `y`.
///
/// When a replica sits exactly on `y` both results are that replica.
pub fn nearest_replicas(pg: &PeriodicGaussian, y: f64) -> (Gaussian, Gaussian) {
    let mut k = ((y - pg.base_mean) / pg.period).floor();
    let at = |k: f64| pg.base_mean + k * pg.period;
    // floor() of a rounded quotient can land one period off
    if at(k) > y {
        k -= 1.0;
    } else if at(k + 1.0) <= y {
        k += 1.0;
    }
    let left = at(k);
    let right = if left == y { y } else { at(k + 1.0) };
    (
        Gaussian::new(left, pg.variance),
        Gaussian::new(right, pg.variance),
    )
}

/// Collapses a weighted mixture to the Gaussian with the same mean and variance.
///
/// Weights need not be normalised.
pub fn moment_match(components: &[(f64, Gaussian)]) -> Result<Gaussian> {
    let total: f64 = components.iter().map(|(w, _)| *w).sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::AllZeroWeights);
    }
    let mean = components.iter().map(|(w, g)| w * g.mean).sum::<f64>() / total;
    // centred second moment avoids cancellation for large means
    let variance = components
        .iter()
        .map(|(w, g)| {
            let dm = g.mean - mean;
            w * (g.variance + dm * dm)
        })
        .sum::<f64>()
        / total;
    Ok(Gaussian::new(mean, variance))
}

/// [`moment_match`] over components whose weights are log heights.
///
/// Weights are rescaled by the largest log height first, so the call only
/// fails when every height is `-inf` or NaN.
pub fn moment_match_log(components: &[ScaledGaussian]) -> Result<Gaussian> {
    let max = components
        .iter()
        .map(|c| c.log_height)
        .fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::AllZeroWeights);
    }
    // one-pass weighted mean and spread (West's update)
    let (mut total, mut mean, mut spread, mut inner) = (0.0, 0.0, 0.0, 0.0);
    for c in components {
        let w = (c.log_height - max).exp();
        if !(w > 0.0) {
            continue;
        }
        total += w;
        let dm = c.gaussian.mean - mean;
        mean += w / total * dm;
        spread += w * dm * (c.gaussian.mean - mean);
        inner += w * c.gaussian.variance;
    }
    Ok(Gaussian::new(mean, (inner + spread) / total))
}

/// A scaled Gaussian in the form the accumulator consumes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreparedFactor {
    precision: f64,
    mean: f64,
    log_norm: f64,
}

impl PreparedFactor {
    pub fn new(g: &ScaledGaussian) -> Self {
        PreparedFactor {
            precision: g.gaussian.precision(),
            mean: g.gaussian.mean,
            log_norm: g.log_height - 0.5 * (LN_2PI + g.gaussian.variance.ln()),
        }
    }
}

/// Running product of scaled Gaussians kept in information form.
///
/// Each [`absorb`](Self::absorb) is one closed-form product update. Sums are
/// taken relative to `origin` so that heights stay accurate when the
/// precisions are large. A factor can be taken back out with
/// [`without`](Self::without), which recovers both the Gaussian and the exact
/// log height of the remaining product.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductAccumulator {
    origin: f64,
    precision: f64,
    info: f64,
    square: f64,
    log_norm: f64,
    factors: usize,
}

impl ProductAccumulator {
    pub fn new(origin: f64) -> Self {
        ProductAccumulator {
            origin,
            precision: 0.0,
            info: 0.0,
            square: 0.0,
            log_norm: 0.0,
            factors: 0,
        }
    }

    pub fn factors(&self) -> usize {
        self.factors
    }

    pub fn precision(&self) -> f64 {
        self.precision
    }

    pub fn absorb(&mut self, g: &ScaledGaussian) {
        self.absorb_prepared(&PreparedFactor::new(g));
    }

    /// [`absorb`](Self::absorb) for a factor whose logarithms are already taken.
    #[inline]
    pub fn absorb_prepared(&mut self, f: &PreparedFactor) {
        let m = f.mean - self.origin;
        self.precision += f.precision;
        self.info += f.precision * m;
        self.square += f.precision * m * m;
        self.log_norm += f.log_norm;
        self.factors += 1;
    }

    /// The product with `g` removed again.
    pub fn without(&self, g: &ScaledGaussian) -> Result<ProductAccumulator> {
        let p = g.gaussian.precision();
        let m = g.gaussian.mean - self.origin;
        let precision = self.precision - p;
        if !(precision > 0.0) || self.factors < 2 {
            return Err(Error::NonPositivePrecision);
        }
        Ok(ProductAccumulator {
            origin: self.origin,
            precision,
            info: self.info - p * m,
            square: self.square - p * m * m,
            log_norm: self.log_norm - g.log_height + 0.5 * (LN_2PI + g.gaussian.variance.ln()),
            factors: self.factors - 1,
        })
    }

    /// The accumulated product, or `None` before the first factor.
    pub fn finish(&self) -> Option<ScaledGaussian> {
        if self.factors == 0 {
            return None;
        }
        let mean = self.info / self.precision;
        // completing the square: sum p_i m_i^2 - (sum p_i m_i)^2 / P >= 0
        let residual = (self.square - self.info * mean).max(0.0);
        let log_height = self.log_norm - 0.5 * residual + 0.5 * (LN_2PI - self.precision.ln());
        Some(ScaledGaussian {
            gaussian: Gaussian::new(mean + self.origin, 1.0 / self.precision),
            log_height,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn product_of_standard_normals() {
        let g = Gaussian::new(0.0, 1.0);
        let p = gaussian_product(&g, &g);
        // 1 / sqrt(4 pi)
        assert!(close(p.height(), 0.282_094_791_773_878_14, 1e-15));
        assert_eq!(p.mean(), 0.0);
        assert!(close(p.variance(), 0.5, 1e-15));
    }

    #[test]
    fn negligible_first_component_is_dropped() {
        let far = Gaussian::new(3.0, 1e-12).scaled(-1e6);
        let near = Gaussian::new(0.5, 0.1).scaled(0.0);
        let g = moment_match_log(&[far, near]).unwrap();
        assert_eq!((g.mean, g.variance), (0.5, 0.1));
    }

    #[test]
    fn equal_means_keep_the_mean() {
        let g = Gaussian::new(1.25, 0.3);
        let p = gaussian_product(&g, &g);
        assert!(close(p.mean(), 1.25, 1e-15));
        assert!(close(p.variance(), 0.15, 1e-15));
    }

    #[test]
    fn distant_means_vanish() {
        let p = gaussian_product(&Gaussian::new(0.0, 1.0), &Gaussian::new(10.0, 1.0));
        let expected = -0.5 * (4.0 * std::f64::consts::PI).ln() - 25.0;
        assert!(close(p.log_height, expected, 1e-14));
        assert!(p.height() < 1e-11);
    }

    #[test]
    fn divide_inverts_equal_product() {
        let q = gaussian_divide(&Gaussian::new(0.0, 0.5), &Gaussian::new(0.0, 1.0)).unwrap();
        assert!(close(q.variance, 1.0, 1e-15));
        assert_eq!(q.mean, 0.0);
    }

    #[test]
    fn divide_rejects_non_factor() {
        let r = gaussian_divide(&Gaussian::new(0.0, 1.0), &Gaussian::new(0.0, 0.5));
        assert!(matches!(r, Err(Error::NonPositivePrecision)));
    }

    #[test]
    fn reduce_single_and_triple() {
        let g = Gaussian::new(0.0, 1.0);
        let one = product_reduce(&[g]).unwrap();
        assert_eq!(one.log_height, 0.0);
        assert_eq!(one.gaussian, g);

        let three = product_reduce(&[g, g, g]).unwrap();
        assert!(close(three.variance(), 1.0 / 3.0, 1e-15));
        // heights of N(0,1)N(0,1) and N(0,1/2)N(0,1)
        let expected = -0.5 * (2.0 * std::f64::consts::PI * 2.0).ln()
            - 0.5 * (2.0 * std::f64::consts::PI * 1.5).ln();
        assert!(close(three.log_height, expected, 1e-14));
        assert!(product_reduce(&[]).is_none());
    }

    #[test]
    fn replicas_around_y() {
        let (l, r) = nearest_replicas(&PeriodicGaussian::new(0.3, 0.1, 1.0), 0.0);
        assert!(close(l.mean, -0.7, 1e-15));
        assert!(close(r.mean, 0.3, 1e-15));
        assert_eq!(l.variance, 0.1);

        let (l, r) = nearest_replicas(&PeriodicGaussian::new(0.0, 0.1, 1.0), 0.0);
        assert_eq!((l.mean, r.mean), (0.0, 0.0));

        let s7 = 7f64.sqrt();
        let (l, r) = nearest_replicas(&PeriodicGaussian::new(0.2, 0.1, s7), 1.0);
        assert!(close(l.mean, 0.2, 1e-15));
        assert!(close(r.mean, 2.845_751_311_064_590_6, 1e-14));
    }

    #[test]
    fn moment_match_examples() {
        let g = moment_match(&[
            (0.5, Gaussian::new(-1.0, 1.0)),
            (0.5, Gaussian::new(1.0, 1.0)),
        ])
        .unwrap();
        assert!(close(g.mean, 0.0, 1e-15) && close(g.variance, 2.0, 1e-15));

        let g = moment_match(&[(1.0, Gaussian::new(3.0, 0.2))]).unwrap();
        assert!(close(g.mean, 3.0, 1e-15) && close(g.variance, 0.2, 1e-15));

        let h = Gaussian::new(-0.4, 0.07);
        let g = moment_match(&[(0.3, h), (0.7, h)]).unwrap();
        assert!(close(g.mean, h.mean, 1e-15) && close(g.variance, h.variance, 1e-14));

        assert!(matches!(
            moment_match(&[(0.0, h), (0.0, h)]),
            Err(Error::AllZeroWeights)
        ));
    }

    #[test]
    fn moment_match_agrees_with_quadrature() {
        let comps = [
            (0.2, Gaussian::new(-1.3, 0.4)),
            (0.5, Gaussian::new(0.6, 0.1)),
            (0.3, Gaussian::new(2.0, 0.9)),
        ];
        let g = moment_match(&comps).unwrap();
        let (lo, hi, n) = (-12.0, 14.0, 200_000);
        let dw = (hi - lo) / n as f64;
        let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
        for i in 0..=n {
            let w = lo + i as f64 * dw;
            let f: f64 = comps.iter().map(|(p, c)| p * c.pdf(w)).sum();
            let wt = if i == 0 || i == n { 0.5 } else { 1.0 };
            m0 += wt * f * dw;
            m1 += wt * f * w * dw;
            m2 += wt * f * w * w * dw;
        }
        let mean = m1 / m0;
        assert!(close(g.mean, mean, 1e-6));
        assert!(close(g.variance + g.mean * g.mean, m2 / m0, 1e-6));
    }

    #[test]
    fn accumulator_single_factor_has_unit_height() {
        let mut acc = ProductAccumulator::new(0.7);
        acc.absorb(&Gaussian::new(1.5, 0.2).scaled(0.5f64.ln()));
        let p = acc.finish().unwrap();
        assert!(close(p.log_height, 0.5f64.ln(), 1e-14));
        assert!(close(p.mean(), 1.5, 1e-15));
        assert!(ProductAccumulator::new(0.0).finish().is_none());
    }

    fn gaussian() -> impl Strategy<Value = Gaussian> {
        (-4.0..4.0f64, 0.01..3.0f64).prop_map(|(m, v)| Gaussian::new(m, v))
    }

    proptest! {
        #[test]
        fn precision_adds(a in gaussian(), b in gaussian()) {
            let p = gaussian_product(&a, &b);
            prop_assert!(close(p.gaussian.precision(), a.precision() + b.precision(), 1e-12));
            let q = gaussian_product(&b, &a);
            prop_assert!(close(p.log_height, q.log_height, 1e-14));
        }

        #[test]
        fn divide_round_trips(a in gaussian(), b in gaussian()) {
            let p = gaussian_product(&a, &b);
            let back = gaussian_divide(&p.gaussian, &b).unwrap();
            prop_assert!(close(back.mean, a.mean, 1e-9));
            prop_assert!((back.variance - a.variance).abs() <= 1e-9 * a.variance);
        }

        #[test]
        fn reduce_is_order_independent(gs in prop::collection::vec(gaussian(), 1..8)) {
            let fwd = product_reduce(&gs).unwrap();
            let mut rev = gs.clone();
            rev.reverse();
            let bwd = product_reduce(&rev).unwrap();
            prop_assert!(close(fwd.mean(), bwd.mean(), 1e-9));
            prop_assert!(close(fwd.variance(), bwd.variance(), 1e-9));
            prop_assert!(close(fwd.log_height, bwd.log_height, 1e-9));
        }

        #[test]
        fn accumulator_matches_fold(gs in prop::collection::vec(gaussian(), 1..8), origin in -3.0..3.0f64) {
            let mut acc = ProductAccumulator::new(origin);
            for g in &gs {
                acc.absorb(&ScaledGaussian::unit(*g));
            }
            let a = acc.finish().unwrap();
            let f = product_reduce(&gs).unwrap();
            prop_assert!(close(a.mean(), f.mean(), 1e-9));
            prop_assert!(close(a.variance(), f.variance(), 1e-9));
            prop_assert!((a.log_height - f.log_height).abs() <= 1e-9 * f.log_height.abs().max(1.0));
        }

        #[test]
        fn accumulator_removal_matches_rebuild(gs in prop::collection::vec(gaussian(), 2..8), pick in 0usize..8) {
            let j = pick % gs.len();
            let mut acc = ProductAccumulator::new(0.0);
            for g in &gs {
                acc.absorb(&ScaledGaussian::unit(*g));
            }
            let rest: Vec<Gaussian> = gs.iter().enumerate().filter(|(i, _)| *i != j).map(|(_, g)| *g).collect();
            let removed = acc.without(&ScaledGaussian::unit(gs[j])).unwrap().finish().unwrap();
            let rebuilt = product_reduce(&rest).unwrap();
            prop_assert!(close(removed.mean(), rebuilt.mean(), 1e-8));
            prop_assert!(close(removed.variance(), rebuilt.variance(), 1e-8));
            prop_assert!((removed.log_height - rebuilt.log_height).abs() <= 1e-8 * rebuilt.log_height.abs().max(1.0));
        }

        #[test]
        fn no_replica_between_neighbours(base in -5.0..5.0f64, period in 0.2..3.0f64, y in -6.0..6.0f64) {
            let pg = PeriodicGaussian::new(base, 0.1, period);
            let (l, r) = nearest_replicas(&pg, y);
            prop_assert!(l.mean <= y && y <= r.mean);
            if l.mean != r.mean {
                prop_assert!(close(r.mean - l.mean, period, 1e-12));
            }
            // both are genuine replicas
            for m in [l.mean, r.mean] {
                let k = (m - base) / period;
                prop_assert!((k - k.round()).abs() < 1e-9);
            }
        }
    }
}
