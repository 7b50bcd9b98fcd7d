//! Encoding and hypercube shaping.
//!
//! A codeword is `x = G b` with `G = H^-1` and integer `b`; it is computed by
//! solving `H x = b` on the sparse `H`, never by forming `G`. Hypercube
//! shaping picks `b = u - M z` so that every coordinate of `x` lands in
//! `[-M/2, M/2)`. This needs a matrix with an elimination order (see
//! [`Structure::Triangular`](crate::code::Structure)): walking the order, each
//! row fixes one new coordinate, and the free integer `z_r` of that row moves
//! the coordinate by multiples of `M`.

use crate::code::SparseParityCheck;
use crate::error::{Error, Result};

/// Residual tolerance for the direct solve.
const SOLVE_TOLERANCE: f64 = 1e-9;

/// Result of [`hypercube_shape`].
#[derive(Debug, Clone, PartialEq)]
pub struct Shaped {
    pub x: Vec<f64>,
    pub z: Vec<i64>,
}

#[derive(Debug, Clone, Copy)]
struct Step {
    row: usize,
    col: usize,
    sign: f64,
}

/// Precomputed elimination order of a shaping-capable matrix.
#[derive(Debug, Clone)]
pub struct Shaper {
    steps: Vec<Step>,
}

impl Shaper {
    pub fn new(h: &SparseParityCheck) -> Result<Self> {
        let order = h.elimination_order().ok_or(Error::OrderingFailed)?;
        let steps = order
            .into_iter()
            .map(|row| {
                let (col, v) = h.unit_column(row).expect("order implies a unit entry");
                Step {
                    row,
                    col,
                    sign: v.signum(),
                }
            })
            .collect();
        Ok(Shaper { steps })
    }

    /// Forward substitution for `H x = rhs`.
    pub fn solve(&self, h: &SparseParityCheck, rhs: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; h.n()];
        for s in &self.steps {
            let rest = off_pivot_sum(h, s, &x);
            x[s.col] = s.sign * (rhs[s.row] - rest);
        }
        x
    }

    /// Shapes the integers `u` (any values, not only `0..M`) into the cube.
    pub fn shape(&self, h: &SparseParityCheck, u: &[i64], m: u32) -> Result<Shaped> {
        check_len(h, u.len())?;
        let m_f = m as f64;
        let half = m_f / 2.0;
        let mut x = vec![0.0; h.n()];
        let mut z = vec![0; h.n()];
        for s in &self.steps {
            let target = u[s.row] as f64 - off_pivot_sum(h, s, &x);
            // x = sign * (target - M z) must fall in [-M/2, M/2)
            let zr = if s.sign > 0.0 {
                ((target + half) / m_f).floor()
            } else {
                ((target - half) / m_f).ceil()
            };
            z[s.row] = zr as i64;
            x[s.col] = s.sign * (target - m_f * zr);
        }
        Ok(Shaped { x, z })
    }
}

fn off_pivot_sum(h: &SparseParityCheck, s: &Step, x: &[f64]) -> f64 {
    h.row(s.row)
        .iter()
        .filter(|(c, _)| *c != s.col)
        .map(|&(c, v)| v * x[c])
        .sum()
}

fn check_len(h: &SparseParityCheck, len: usize) -> Result<()> {
    if len != h.n() {
        return Err(Error::LengthMismatch {
            expected: h.n(),
            actual: len,
        });
    }
    Ok(())
}

/// Solves `H x = rhs`.
///
/// Uses forward substitution when the matrix has an elimination order and a
/// dense LU factorisation of `H` otherwise.
pub fn solve(h: &SparseParityCheck, rhs: &[f64]) -> Result<Vec<f64>> {
    check_len(h, rhs.len())?;
    let x = match Shaper::new(h) {
        Ok(shaper) => shaper.solve(h, rhs),
        Err(_) => {
            let lu = crate::code::dense_lu(h);
            let b = nalgebra::DVector::from_column_slice(rhs);
            lu.solve(&b)
                .ok_or(Error::SingularMatrix)?
                .as_slice()
                .to_vec()
        }
    };
    let scale = rhs.iter().fold(1.0f64, |a, b| a.max(b.abs()));
    let residual = h
        .mul_vec(&x)
        .iter()
        .zip(rhs)
        .fold(0.0f64, |a, (l, r)| a.max((l - r).abs()));
    if !(residual <= SOLVE_TOLERANCE * scale) {
        return Err(Error::SingularMatrix);
    }
    Ok(x)
}

/// The lattice point `x = G v`.
pub fn encode(h: &SparseParityCheck, v: &[i64]) -> Result<Vec<f64>> {
    let rhs: Vec<f64> = v.iter().map(|&k| k as f64).collect();
    solve(h, &rhs)
}

/// Hypercube shaping of the information integers `u`.
pub fn hypercube_shape(h: &SparseParityCheck, u: &[i64], m: u32) -> Result<Shaped> {
    Shaper::new(h)?.shape(h, u, m)
}

/// `round(H x) mod M`, with results in `0..M`.
pub fn recover_integers(x_hat: &[f64], h: &SparseParityCheck, m: u32) -> Vec<i64> {
    h.mul_vec(x_hat)
        .into_iter()
        .map(|b| (b.round() as i64).rem_euclid(m as i64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::{generate_parity_check, Structure};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_u(rng: &mut ChaCha8Rng, n: usize, m: u32) -> Vec<i64> {
        (0..n).map(|_| rng.random_range(0..m as i64)).collect()
    }

    #[test]
    fn zero_encodes_to_zero() {
        for s in [Structure::Regular, Structure::Triangular] {
            let h = generate_parity_check(60, 5, 2, s).unwrap();
            assert!(encode(&h, &vec![0; 60]).unwrap().iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn encode_satisfies_parity_and_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for s in [Structure::Regular, Structure::Triangular] {
            let h = generate_parity_check(120, 5, 4, s).unwrap();
            let v1: Vec<i64> = (0..120).map(|_| rng.random_range(-20..20)).collect();
            let v2: Vec<i64> = (0..120).map(|_| rng.random_range(-20..20)).collect();
            let x1 = encode(&h, &v1).unwrap();
            for (a, b) in h.mul_vec(&x1).iter().zip(&v1) {
                assert!((a - *b as f64).abs() < 1e-9);
            }
            let x2 = encode(&h, &v2).unwrap();
            let sum: Vec<i64> = v1.iter().zip(&v2).map(|(a, b)| a + b).collect();
            let x12 = encode(&h, &sum).unwrap();
            for i in 0..120 {
                assert!((x1[i] + x2[i] - x12[i]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn shaping_needs_an_elimination_order() {
        let h = generate_parity_check(30, 3, 1, Structure::Regular).unwrap();
        assert!(matches!(
            hypercube_shape(&h, &vec![0; 30], 4),
            Err(Error::OrderingFailed)
        ));
    }

    #[test]
    fn origin_stays_at_origin() {
        let h = generate_parity_check(50, 5, 8, Structure::Triangular).unwrap();
        let s = hypercube_shape(&h, &vec![0; 50], 4).unwrap();
        assert!(s.x.iter().all(|&x| x == 0.0));
        assert!(s.z.iter().all(|&z| z == 0));
    }

    #[test]
    fn shaped_codewords_are_in_the_cube_and_congruent() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = generate_parity_check(200, 7, 3, Structure::Triangular).unwrap();
        let shaper = Shaper::new(&h).unwrap();
        for _ in 0..50 {
            let u = random_u(&mut rng, 200, 4);
            let s = shaper.shape(&h, &u, 4).unwrap();
            assert!(s.x.iter().all(|x| x.abs() <= 2.0));
            // independent check: re-multiply and reduce mod M
            for (b, &ui) in h.mul_vec(&s.x).iter().zip(&u) {
                let r = (b - ui as f64) / 4.0;
                assert!((r - r.round()).abs() * 4.0 < 1e-6);
            }
            // re-encoding u - M z reproduces x
            let b: Vec<i64> = u.iter().zip(&s.z).map(|(u, z)| u - 4 * z).collect();
            let x = encode(&h, &b).unwrap();
            for (a, c) in x.iter().zip(&s.x) {
                assert!((a - c).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn shaping_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let h = generate_parity_check(100, 5, 3, Structure::Triangular).unwrap();
        let u = random_u(&mut rng, 100, 8);
        let first = hypercube_shape(&h, &u, 8).unwrap();
        let b: Vec<i64> = u.iter().zip(&first.z).map(|(u, z)| u - 8 * z).collect();
        let again = hypercube_shape(&h, &b, 8).unwrap();
        assert!(again.z.iter().all(|&z| z == 0));
        for (a, b) in again.x.iter().zip(&first.x) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn noiseless_recovery_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h = generate_parity_check(100, 5, 1, Structure::Triangular).unwrap();
        let shaper = Shaper::new(&h).unwrap();
        for _ in 0..1000 {
            let u = random_u(&mut rng, 100, 8);
            let s = shaper.shape(&h, &u, 8).unwrap();
            assert_eq!(recover_integers(&s.x, &h, 8), u);
            let nudged: Vec<f64> =
                s.x.iter()
                    .map(|x| x + if rng.random_bool(0.5) { 1e-6 } else { -1e-6 })
                    .collect();
            assert_eq!(recover_integers(&nudged, &h, 8), u);
        }
    }

    #[test]
    fn rounding_boundary() {
        let h = generate_parity_check(40, 3, 1, Structure::Triangular).unwrap();
        let rhs: Vec<f64> = (0..40)
            .map(|i| if i % 2 == 0 { 0.49 } else { -0.49 })
            .collect();
        let x = solve(&h, &rhs).unwrap();
        assert!(recover_integers(&x, &h, 4).iter().all(|&u| u == 0));
    }

    #[test]
    fn shaped_power_is_uniform_cube_power() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let h = generate_parity_check(961, 7, 42, Structure::Triangular).unwrap();
        let shaper = Shaper::new(&h).unwrap();
        let (mut acc, mut count) = (0.0, 0);
        for _ in 0..20 {
            let u = random_u(&mut rng, 961, 8);
            for x in shaper.shape(&h, &u, 8).unwrap().x {
                acc += x * x;
                count += 1;
            }
        }
        let power = acc / count as f64;
        assert!((power / (64.0 / 12.0) - 1.0).abs() < 0.05, "power {power}");
    }
}
