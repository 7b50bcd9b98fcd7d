use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{build_generating_sequence, SparseParityCheck, Structure};
use crate::error::{Error, Result};

/// Swap attempts allowed per row during 4-cycle repair.
const REPAIR_BUDGET_PER_ROW: usize = 100;

/// `layers[l][i]` is the column position of the layer-`l` entry in row
/// position `i`, if that row has one.
type Layers = Vec<Vec<Option<usize>>>;

/// Generates a random parity-check matrix. Deterministic in `(n, d, seed, structure)`.
///
/// Construction places `d` layers, repairs 4-cycles and repeated positions by
/// swapping entries within a layer (triangular layers are placed greedily so
/// that repair rarely has anything left to do), assigns random signs and finally
/// relabels rows and columns with random permutations.
pub fn generate_parity_check(
    n: usize,
    d: usize,
    seed: u64,
    structure: Structure,
) -> Result<SparseParityCheck> {
    let seq = build_generating_sequence(d)?;
    if n <= d {
        return Err(Error::InvalidDimension { n, d });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut layers = match structure {
        Structure::Regular => regular_layers(n, d, &mut rng),
        Structure::Triangular => triangular_layers(n, d, &mut rng),
    };
    CycleRepair::new(&mut layers, structure).run(&mut rng)?;

    let mut row_label: Vec<usize> = (0..n).collect();
    let mut col_label: Vec<usize> = (0..n).collect();
    row_label.shuffle(&mut rng);
    col_label.shuffle(&mut rng);

    let mut rows = vec![Vec::with_capacity(d); n];
    for (l, layer) in layers.iter().enumerate() {
        for (i, c) in layer.iter().enumerate() {
            if let Some(c) = c {
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                rows[row_label[i]].push((col_label[*c], sign * seq.magnitude(l)));
            }
        }
    }
    SparseParityCheck::from_rows(n, d, rows)
}

fn regular_layers(n: usize, d: usize, rng: &mut ChaCha8Rng) -> Layers {
    (0..d)
        .map(|_| {
            let mut p: Vec<usize> = (0..n).collect();
            p.shuffle(rng);
            p.into_iter().map(Some).collect()
        })
        .collect()
}

/// Queue delay of each triangular layer. Layer 0 is the diagonal; later
/// layers wait longer before their first entry, which spreads their columns
/// further from the diagonal at the cost of missing entries at both ends.
fn triangular_delays(n: usize, d: usize) -> Vec<usize> {
    let widest = (d * (d + 1))
        .max((2.0 * (n as f64).sqrt()).ceil() as usize)
        .min(n - 1);
    let mut delays = vec![0];
    delays.extend((1..d).map(|l| (l * widest).div_ceil(d - 1)));
    delays
}

#[allow(clippy::needless_range_loop)]
fn triangular_layers(n: usize, d: usize, rng: &mut ChaCha8Rng) -> Layers {
    let delays = triangular_delays(n, d);
    let mut layers = vec![(0..n).map(Some).collect::<Vec<_>>()];
    layers.extend((1..d).map(|_| vec![None; n]));
    // columns before the current row not yet used, per layer
    let mut pools: Vec<Vec<usize>> = vec![Vec::new(); d];
    let mut used = std::collections::HashSet::new();
    let mut row = Vec::with_capacity(d);
    for i in 0..n {
        row.clear();
        row.push(i);
        for l in 1..d {
            if i > 0 {
                pools[l].push(i - 1);
            }
            if i < delays[l] || pools[l].is_empty() {
                continue;
            }
            let pool = &mut pools[l];
            let start = rng.random_range(0..pool.len());
            let fits = |c: usize| {
                !row.contains(&c) && row.iter().all(|&a| !used.contains(&(a.min(c), a.max(c))))
            };
            let k = (0..pool.len())
                .map(|j| (start + j) % pool.len())
                .find(|&k| fits(pool[k]))
                .unwrap_or(start);
            let c = pool.swap_remove(k);
            layers[l][i] = Some(c);
            row.push(c);
        }
        for (j, &a) in row.iter().enumerate() {
            for &b in &row[j + 1..] {
                used.insert((a.min(b), a.max(b)));
            }
        }
    }
    layers
}

struct CycleRepair<'a> {
    layers: &'a mut Layers,
    structure: Structure,
    windows: Vec<usize>,
    pairs: HashMap<(usize, usize), u32>,
}

impl<'a> CycleRepair<'a> {
    fn new(layers: &'a mut Layers, structure: Structure) -> Self {
        let n = layers[0].len();
        let d = layers.len();
        let windows = match structure {
            Structure::Regular => vec![n; d],
            Structure::Triangular => triangular_delays(n, d)
                .into_iter()
                .map(|delay| 2 * delay + 2)
                .collect(),
        };
        let mut repair = CycleRepair {
            layers,
            structure,
            windows,
            pairs: HashMap::new(),
        };
        for r in 0..n {
            repair.add_row(r);
        }
        repair
    }

    fn n(&self) -> usize {
        self.layers[0].len()
    }

    fn cols(&self, r: usize) -> Vec<usize> {
        self.layers.iter().filter_map(|l| l[r]).collect()
    }

    fn row_pairs(&self, r: usize) -> impl Iterator<Item = (usize, usize)> {
        let cols = self.cols(r);
        let mut out = Vec::with_capacity(cols.len() * cols.len() / 2);
        for (i, &a) in cols.iter().enumerate() {
            for &b in &cols[i + 1..] {
                out.push((a.min(b), a.max(b)));
            }
        }
        out.into_iter()
    }

    fn add_row(&mut self, r: usize) {
        for p in self
            .row_pairs(r)
            .filter(|(a, b)| a != b)
            .collect::<Vec<_>>()
        {
            *self.pairs.entry(p).or_insert(0) += 1;
        }
    }

    fn remove_row(&mut self, r: usize) {
        for p in self
            .row_pairs(r)
            .filter(|(a, b)| a != b)
            .collect::<Vec<_>>()
        {
            if let Some(c) = self.pairs.get_mut(&p) {
                *c -= 1;
                if *c == 0 {
                    self.pairs.remove(&p);
                }
            }
        }
    }

    /// Repeated positions in row `r` plus the rows it shares a column pair with.
    fn cost(&self, r: usize) -> usize {
        self.row_pairs(r)
            .map(|p| {
                if p.0 == p.1 {
                    1
                } else {
                    self.pairs.get(&p).map_or(0, |&c| c as usize - 1)
                }
            })
            .sum()
    }

    fn swap(&mut self, layer: usize, r1: usize, r2: usize) {
        self.remove_row(r1);
        self.remove_row(r2);
        let l = &mut self.layers[layer];
        l.swap(r1, r2);
        self.add_row(r1);
        self.add_row(r2);
    }

    fn run(mut self, rng: &mut ChaCha8Rng) -> Result<()> {
        let n = self.n();
        let d = self.layers.len();
        let budget = REPAIR_BUDGET_PER_ROW * n;
        let mut attempts = 0;
        loop {
            let bad: Vec<usize> = (0..n).filter(|&r| self.cost(r) > 0).collect();
            if bad.is_empty() {
                return Ok(());
            }
            for r in bad {
                if self.cost(r) == 0 {
                    continue;
                }
                if attempts >= budget {
                    return Err(Error::ConstructionFailed { attempts });
                }
                attempts += 1;
                let layer = rng.random_range(1..d);
                let w = self.windows[layer];
                let lo = r.saturating_sub(w);
                let hi = (r + w).min(n - 1);
                let r2 = rng.random_range(lo..=hi);
                let (Some(c1), Some(c2)) = (self.layers[layer][r], self.layers[layer][r2]) else {
                    continue;
                };
                if r2 == r {
                    continue;
                }
                // swapped entries must stay strictly below the diagonal
                if self.structure == Structure::Triangular && !(c2 < r && c1 < r2) {
                    continue;
                }
                let before = self.cost(r) + self.cost(r2);
                self.swap(layer, r, r2);
                if self.cost(r) + self.cost(r2) > before {
                    self.swap(layer, r, r2);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::validate_parity_check;

    #[test]
    fn small_regular_matrix_validates() {
        let h = generate_parity_check(16, 3, 1, Structure::Regular).unwrap();
        let report = validate_parity_check(&h, Structure::Regular);
        assert!(report.all_passed(), "{report:?}");
    }

    #[test]
    fn small_triangular_matrix_validates() {
        let h = generate_parity_check(16, 3, 1, Structure::Triangular).unwrap();
        let report = validate_parity_check(&h, Structure::Triangular);
        assert!(report.all_passed(), "{report:?}");
        assert!(h.elimination_order().is_some());
    }

    #[test]
    fn deterministic_in_seed() {
        for s in [Structure::Regular, Structure::Triangular] {
            let a = generate_parity_check(100, 5, 9, s).unwrap();
            let b = generate_parity_check(100, 5, 9, s).unwrap();
            let c = generate_parity_check(100, 5, 10, s).unwrap();
            assert_eq!(a, b);
            assert_ne!(a, c);
        }
    }

    #[test]
    fn triangular_degree_deficit_is_small() {
        let h = generate_parity_check(961, 7, 42, Structure::Triangular).unwrap();
        let missing = 961 * 7 - h.nnz();
        let expected: usize = triangular_delays(961, 7).iter().sum();
        assert_eq!(missing, expected);
        assert!(missing * 20 < 961 * 7, "more than 5% of entries missing");
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert!(matches!(
            generate_parity_check(3, 3, 0, Structure::Regular),
            Err(Error::InvalidDimension { .. })
        ));
        assert!(matches!(
            generate_parity_check(10, 2, 0, Structure::Regular),
            Err(Error::DegreeTooSmall { .. })
        ));
    }

    #[test]
    fn impossible_cycle_freedom_fails() {
        // 5 rows of degree 4 over 5 columns must repeat column pairs
        assert!(matches!(
            generate_parity_check(5, 4, 3, Structure::Regular),
            Err(Error::ConstructionFailed { .. })
        ));
    }
}
