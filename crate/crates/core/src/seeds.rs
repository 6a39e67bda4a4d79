//! Shifted Halton points for multi-start searches.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const PRIMES: [u64; 24] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

/// Halton sequence in `[0, 1)^dim` with a Cranley-Patterson rotation drawn
/// from `seed`. Point `i` is independent of how many points are requested.
#[derive(Debug, Clone)]
pub struct Halton {
    shift: Vec<f64>,
}

impl Halton {
    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(dim <= PRIMES.len(), "Halton sequence supports at most {} dimensions", PRIMES.len());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self { shift: (0..dim).map(|_| rng.random::<f64>()).collect() }
    }

    pub fn dim(&self) -> usize {
        self.shift.len()
    }

    pub fn point(&self, i: usize) -> Vec<f64> {
        self.shift
            .iter()
            .zip(PRIMES)
            .map(|(s, b)| {
                let v = radical_inverse(i as u64 + 1, b) + s;
                v - v.floor()
            })
            .collect()
    }
}

/// Maps the cube `[0, 1)^d` radially onto the closed ball of radius `r`.
pub fn cube_to_ball(u: &[f64], r: f64) -> Vec<f64> {
    let v: Vec<f64> = u.iter().map(|x| 2.0 * x - 1.0).collect();
    let inf = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let two: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if two == 0.0 {
        return v;
    }
    v.iter().map(|x| x / two * inf * r).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radical_inverse_base_two() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(2, 2), 0.25);
        assert_eq!(radical_inverse(3, 2), 0.75);
        assert!((radical_inverse(5, 3) - (2.0 / 3.0 + 1.0 / 9.0)).abs() < 1e-15);
    }

    #[test]
    fn seeded_and_in_range() {
        let a = Halton::new(4, 42);
        let b = Halton::new(4, 42);
        let c = Halton::new(4, 43);
        assert_eq!(a.point(7), b.point(7));
        assert_ne!(a.point(7), c.point(7));
        for i in 0..500 {
            assert!(a.point(i).iter().all(|&x| (0.0..1.0).contains(&x)));
        }
    }

    #[test]
    fn ball_map_respects_radius() {
        for u in [[0.0, 0.0], [0.9, 0.1], [0.5, 0.5], [0.99, 0.99]] {
            let p = cube_to_ball(&u, 0.3);
            assert!(p.iter().map(|x| x * x).sum::<f64>().sqrt() <= 0.3 + 1e-15);
        }
    }
}
