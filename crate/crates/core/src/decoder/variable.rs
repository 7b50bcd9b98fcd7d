//! Variable-node updates.
//!
//! Both variants approximate each incoming periodic Gaussian by the two
//! replicas nearest the channel observation `y`. The reference update then
//! expands the product of those sums into all `2^(d-1)` components per
//! outgoing edge. The proposed update keeps only the all-left and all-right
//! products (after the window selection removes staggered pairs), computes
//! them once over every edge as the mother message, and obtains each edge's
//! message by taking that edge's factor back out.

use crate::error::{Error, Result};
use crate::gaussian::{
    moment_match_log, nearest_replicas, Gaussian, PeriodicGaussian, ProductAccumulator,
    ScaledGaussian, VAR_FLOOR,
};

use super::OpCounters;

/// Remaining precision below this fraction of the total makes the
/// subtraction too lossy; the edge is then rebuilt from its factors.
const CANCELLATION_GUARD: f64 = 1e-6;

/// Replicas chosen for the left and right products of one edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selected {
    pub left: ScaledGaussian,
    pub right: ScaledGaussian,
}

/// Window-based choice of the left and right replica of `pg` around `y`.
///
/// * only the left replica within `eps` of `y`: both sides get `0.5·N_L`
/// * only the right one: both get `0.5·N_R`
/// * both: left gets `N_L`, right gets `N_R`
/// * neither: both get half of whichever is closer to `y`
pub fn select_left_right(pg: &PeriodicGaussian, y: f64, eps: f64) -> Selected {
    let (l, r) = nearest_replicas(pg, y);
    let in_left = (l.mean - y).abs() <= eps;
    let in_right = (r.mean - y).abs() <= eps;
    let half = |g: Gaussian| g.scaled(-std::f64::consts::LN_2);
    match (in_left, in_right) {
        (true, true) => Selected {
            left: ScaledGaussian::unit(l),
            right: ScaledGaussian::unit(r),
        },
        (true, false) => Selected {
            left: half(l),
            right: half(l),
        },
        (false, true) => Selected {
            left: half(r),
            right: half(r),
        },
        (false, false) => {
            let g = if y - l.mean <= r.mean - y { l } else { r };
            Selected {
                left: half(g),
                right: half(g),
            }
        }
    }
}

/// The two-component product over every edge, `c_L·N_L + c_R·N_R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotherMessage {
    pub left: ScaledGaussian,
    pub right: ScaledGaussian,
}

impl MotherMessage {
    /// Mean of the heavier component; ties go to the one nearer `y`.
    pub fn decision(&self, y: f64) -> f64 {
        let (l, r) = (self.left, self.right);
        let right_wins = r.log_height > l.log_height
            || (r.log_height == l.log_height && (r.mean() - y).abs() < (l.mean() - y).abs());
        if right_wins {
            r.mean()
        } else {
            l.mean()
        }
    }
}

fn channel(y: f64, sigma2: f64) -> ScaledGaussian {
    ScaledGaussian::unit(Gaussian::new(y, sigma2))
}

fn side_accumulators(
    y: f64,
    sigma2: f64,
    selected: &[Selected],
    counters: &mut OpCounters,
) -> (ProductAccumulator, ProductAccumulator) {
    let ch = channel(y, sigma2);
    let mut left = ProductAccumulator::new(y);
    let mut right = ProductAccumulator::new(y);
    left.absorb(&ch);
    right.absorb(&ch);
    for s in selected {
        left.absorb(&s.left);
        right.absorb(&s.right);
    }
    counters.product_updates += 2 * (selected.len() as u64 + 1);
    (left, right)
}

/// Leave-one-out product, by subtraction when that is accurate and by
/// rebuilding from the remaining factors otherwise.
fn without_edge(
    total: &ProductAccumulator,
    j: usize,
    factor: impl Fn(usize) -> ScaledGaussian,
    count: usize,
    y: f64,
    sigma2: f64,
    counters: &mut OpCounters,
) -> ScaledGaussian {
    let removed = total
        .without(&factor(j))
        .ok()
        .filter(|rest| rest.precision() >= CANCELLATION_GUARD * total.precision());
    if let Some(rest) = removed {
        return rest.finish().expect("channel factor remains");
    }
    let mut rest = ProductAccumulator::new(y);
    rest.absorb(&channel(y, sigma2));
    for i in (0..count).filter(|&i| i != j) {
        rest.absorb(&factor(i));
    }
    counters.fallback_updates += count as u64;
    rest.finish().expect("channel factor remains")
}

/// Proposed update of one variable node.
///
/// `incoming[i]` is the check message on edge `i` and `eps[i]` that edge's
/// selection window. Writes one outgoing Gaussian per edge into `out` and
/// returns the mother message.
pub fn variable_node_proposed_into(
    y: f64,
    sigma2: f64,
    incoming: &[PeriodicGaussian],
    eps: &[f64],
    out: &mut [Gaussian],
    counters: &mut OpCounters,
) -> MotherMessage {
    debug_assert_eq!(out.len(), incoming.len());
    proposed_core(y, sigma2, incoming, eps, counters, |j, l, r| {
        out[j] = moment_match_log(&[l, r]).unwrap_or_else(|_| heavier(l, r).gaussian);
    })
}

/// Left and right components of every outgoing message before moment
/// matching, together with the mother message.
pub fn proposed_edge_components(
    y: f64,
    sigma2: f64,
    incoming: &[PeriodicGaussian],
    eps: &[f64],
    counters: &mut OpCounters,
) -> (Vec<(ScaledGaussian, ScaledGaussian)>, MotherMessage) {
    let mut out = Vec::with_capacity(incoming.len());
    let mother = proposed_core(y, sigma2, incoming, eps, counters, |_, l, r| {
        out.push((l, r))
    });
    (out, mother)
}

fn proposed_core(
    y: f64,
    sigma2: f64,
    incoming: &[PeriodicGaussian],
    eps: &[f64],
    counters: &mut OpCounters,
    mut emit: impl FnMut(usize, ScaledGaussian, ScaledGaussian),
) -> MotherMessage {
    let d = incoming.len();
    debug_assert_eq!(eps.len(), d);
    let mut selected = [Selected {
        left: channel(y, sigma2),
        right: channel(y, sigma2),
    }; MAX_INLINE];
    let mut heap;
    let selected: &mut [Selected] = if d <= MAX_INLINE {
        &mut selected[..d]
    } else {
        heap = vec![selected[0]; d];
        &mut heap
    };
    for (s, (pg, &e)) in selected.iter_mut().zip(incoming.iter().zip(eps)) {
        *s = select_left_right(pg, y, e);
    }

    let (left, right) = side_accumulators(y, sigma2, selected, counters);
    counters.node_updates += 1;
    for j in 0..d {
        let l = without_edge(&left, j, |i| selected[i].left, d, y, sigma2, counters);
        let r = without_edge(&right, j, |i| selected[i].right, d, y, sigma2, counters);
        emit(j, l, r);
    }
    MotherMessage {
        left: left.finish().expect("non-empty"),
        right: right.finish().expect("non-empty"),
    }
}

const MAX_INLINE: usize = 16;

fn heavier(a: ScaledGaussian, b: ScaledGaussian) -> ScaledGaussian {
    if b.log_height > a.log_height {
        b
    } else {
        a
    }
}

/// [`variable_node_proposed_into`] returning the messages.
pub fn variable_node_proposed(
    y: f64,
    sigma2: f64,
    incoming: &[PeriodicGaussian],
    eps: &[f64],
    counters: &mut OpCounters,
) -> (Vec<Gaussian>, MotherMessage) {
    let mut out = vec![Gaussian::new(0.0, 1.0); incoming.len()];
    let mother = variable_node_proposed_into(y, sigma2, incoming, eps, &mut out, counters);
    (out, mother)
}

/// All-edge mother message of the proposed decoder, for the final decision.
pub fn proposed_mother(
    y: f64,
    sigma2: f64,
    incoming: &[PeriodicGaussian],
    eps: &[f64],
) -> MotherMessage {
    let selected: Vec<Selected> = incoming
        .iter()
        .zip(eps)
        .map(|(pg, &e)| select_left_right(pg, y, e))
        .collect();
    let (left, right) = side_accumulators(y, sigma2, &selected, &mut OpCounters::default());
    MotherMessage {
        left: left.finish().expect("non-empty"),
        right: right.finish().expect("non-empty"),
    }
}

/// The two replicas of one check message nearest `y`, relative to `y`.
///
/// Both share the message variance, so every component of the expansion has
/// the same precision and only the information sums differ.
#[derive(Debug, Clone, Copy, PartialEq)]
struct ReplicaPair {
    precision: f64,
    offsets: [f64; 2],
}

impl ReplicaPair {
    fn new(pg: &PeriodicGaussian, y: f64) -> Self {
        let (l, r) = nearest_replicas(pg, y);
        ReplicaPair {
            precision: l.precision(),
            offsets: [l.mean - y, r.mean - y],
        }
    }
}

/// One component of the expansion: `ln` height up to a shared constant, and
/// mean relative to `y`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Component {
    log_height: f64,
    offset: f64,
}

/// Depth-first expansion of `N(y, σ²) · Π (L_i + R_i)`.
///
/// `info` and `square` are the running sums `Σ p m` and `Σ p m²` relative to
/// `y`; each step down the tree is one pairwise product.
fn expand(
    info: f64,
    square: f64,
    precision: f64,
    pairs: &[ReplicaPair],
    out: &mut Vec<Component>,
    counters: &mut OpCounters,
) {
    match pairs.split_first() {
        None => {
            // completing the square; the remaining terms are common to all components
            let residual = (square - info * info / precision).max(0.0);
            out.push(Component {
                log_height: -0.5 * residual,
                offset: info / precision,
            });
            counters.components += 1;
        }
        Some((pair, rest)) => {
            for m in pair.offsets {
                counters.product_updates += 1;
                expand(
                    info + pair.precision * m,
                    square + pair.precision * m * m,
                    precision,
                    rest,
                    out,
                    counters,
                );
            }
        }
    }
}

fn expand_all(
    sigma2: f64,
    pairs: &[ReplicaPair],
    out: &mut Vec<Component>,
    counters: &mut OpCounters,
) -> f64 {
    out.clear();
    let precision = 1.0 / sigma2.max(VAR_FLOOR) + pairs.iter().map(|p| p.precision).sum::<f64>();
    // the channel factor sits at the origin
    counters.product_updates += 1;
    expand(0.0, 0.0, precision, pairs, out, counters);
    precision
}

/// Moment matching of the expansion; components share the variance `1/precision`.
fn match_components(y: f64, precision: f64, components: &[Component]) -> Gaussian {
    let max = components
        .iter()
        .map(|c| c.log_height)
        .fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        // every weight underflowed: keep the heaviest component
        let top = components
            .iter()
            .copied()
            .reduce(|a, b| if b.log_height > a.log_height { b } else { a })
            .expect("at least one component");
        return Gaussian::new(y + top.offset, 1.0 / precision);
    }
    let (mut total, mut mean, mut spread) = (0.0, 0.0, 0.0);
    for c in components {
        let w = (c.log_height - max).exp();
        if !(w > 0.0) {
            continue;
        }
        total += w;
        let dm = c.offset - mean;
        mean += w / total * dm;
        spread += w * dm * (c.offset - mean);
    }
    Gaussian::new(y + mean, 1.0 / precision + spread / total)
}

/// Reference update for a single outgoing edge.
///
/// `incoming` holds the `d-1` check messages of the other edges. Each is
/// replaced by its two replicas nearest `y`, the product with the channel
/// Gaussian is expanded into `2^(d-1)` components and those are moment
/// matched.
pub fn variable_node_reference(
    y: f64,
    sigma2: f64,
    incoming: &[PeriodicGaussian],
    counters: &mut OpCounters,
) -> Gaussian {
    let pairs: Vec<ReplicaPair> = incoming.iter().map(|pg| ReplicaPair::new(pg, y)).collect();
    let mut components = Vec::with_capacity(1 << pairs.len());
    let precision = expand_all(sigma2, &pairs, &mut components, counters);
    match_components(y, precision, &components)
}

/// Reference update of every edge of one variable node.
pub fn variable_node_reference_into(
    y: f64,
    sigma2: f64,
    incoming: &[PeriodicGaussian],
    out: &mut [Gaussian],
    scratch: &mut ReferenceScratch,
    counters: &mut OpCounters,
) {
    let d = incoming.len();
    scratch.pairs.clear();
    scratch
        .pairs
        .extend(incoming.iter().map(|pg| ReplicaPair::new(pg, y)));
    counters.node_updates += 1;
    for (j, slot) in out.iter_mut().enumerate() {
        scratch.others.clear();
        scratch
            .others
            .extend((0..d).filter(|&i| i != j).map(|i| scratch.pairs[i]));
        let precision = expand_all(sigma2, &scratch.others, &mut scratch.components, counters);
        *slot = match_components(y, precision, &scratch.components);
    }
}

/// Final estimate of the reference decoder: the mean of the heaviest of the
/// `2^d` components of the all-edge product, ties going to the one nearest `y`.
pub fn reference_decision(y: f64, sigma2: f64, incoming: &[PeriodicGaussian]) -> f64 {
    let pairs: Vec<ReplicaPair> = incoming.iter().map(|pg| ReplicaPair::new(pg, y)).collect();
    let mut components = Vec::with_capacity(1 << pairs.len());
    expand_all(sigma2, &pairs, &mut components, &mut OpCounters::default());
    let top = components
        .iter()
        .copied()
        .reduce(|a, b| {
            let heavier = b.log_height > a.log_height;
            let tie_closer = b.log_height == a.log_height && b.offset.abs() < a.offset.abs();
            if heavier || tie_closer {
                b
            } else {
                a
            }
        })
        .expect("at least one component");
    y + top.offset
}

/// Reusable buffers for the reference update.
#[derive(Debug, Default)]
pub struct ReferenceScratch {
    pairs: Vec<ReplicaPair>,
    others: Vec<ReplicaPair>,
    components: Vec<Component>,
}

pub(crate) fn ensure_eps(eps: &[f64], d: usize) -> Result<()> {
    let limit = (d as f64).sqrt();
    match eps.iter().find(|&&e| !(e > 0.5 && e < limit)) {
        Some(e) => Err(Error::Config(format!(
            "selection window {e} outside (0.5, sqrt(d) = {limit})"
        ))),
        None => Ok(()),
    }
}
