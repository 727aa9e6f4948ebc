//! Seeded random generation of semifield values and shaped matrices.
//!
//! Entries are rationals k/d with k uniform in [-B, B] and d in [1, 4];
//! an optional zero-mass parameter mixes in semifield zeros. Small
//! denominators keep products exact and printable.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::matrix::{Matrix, Shape};
use crate::semiring::{Kind, Value};

#[derive(Clone, Copy, Debug)]
pub struct EntryDist {
    pub kind: Kind,
    /// Numerator bound B: numerators are uniform in [-B, B].
    pub bound: i64,
    /// Probability of drawing the semifield zero where the shape allows it.
    pub zero_mass: f64,
}

impl EntryDist {
    pub fn max_plus() -> EntryDist {
        EntryDist {
            kind: Kind::MaxPlusRational,
            bound: 10,
            zero_mass: 0.0,
        }
    }

    pub fn max_plus_with_zeros(zero_mass: f64) -> EntryDist {
        EntryDist {
            kind: Kind::MaxPlusRational,
            bound: 10,
            zero_mass,
        }
    }

    pub fn boolean(zero_mass: f64) -> EntryDist {
        EntryDist {
            kind: Kind::Boolean,
            bound: 1,
            zero_mass,
        }
    }
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Mixes a master seed with an instance index so parallel workers get
/// independent, reproducible streams (splitmix64 finalizer).
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_add(0x9e3779b97f4a7c15_u64.wrapping_mul(index.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// A nonzero group element from the distribution.
pub fn sample_nonzero(rng: &mut ChaCha8Rng, dist: &EntryDist) -> Value {
    match dist.kind {
        Kind::Boolean => Value::BoolOne,
        Kind::MaxPlusRational => {
            let k = rng.gen_range(-dist.bound..=dist.bound);
            let d = rng.gen_range(1..=4);
            Value::rat(k, d)
        }
    }
}

/// A value from the distribution, zero with probability `zero_mass`.
pub fn sample_value(rng: &mut ChaCha8Rng, dist: &EntryDist) -> Value {
    if dist.zero_mass > 0.0 && rng.gen_bool(dist.zero_mass) {
        Value::zero(dist.kind)
    } else {
        sample_nonzero(rng, dist)
    }
}

/// A nonzero element ≤ 𝟙 (used for damping factors and [𝟘,𝟙] intervals).
pub fn sample_nonzero_leq_one(rng: &mut ChaCha8Rng, dist: &EntryDist) -> Value {
    match dist.kind {
        Kind::Boolean => Value::BoolOne,
        Kind::MaxPlusRational => {
            let k = rng.gen_range(-dist.bound..=0);
            let d = rng.gen_range(1..=4);
            Value::rat(k, d)
        }
    }
}

/// A nonzero element ≥ 𝟙.
pub fn sample_nonzero_geq_one(rng: &mut ChaCha8Rng, dist: &EntryDist) -> Value {
    match dist.kind {
        Kind::Boolean => Value::BoolOne,
        Kind::MaxPlusRational => {
            let k = rng.gen_range(0..=dist.bound);
            let d = rng.gen_range(1..=4);
            Value::rat(k, d)
        }
    }
}

/// Matrix respecting the requested shape. zero_mass applies only at
/// positions the shape allows to be zero (above-diagonal for shapes up to
/// Unitriangular, anywhere for General; nowhere for PositiveUpper).
pub fn sample_shaped(
    rng: &mut ChaCha8Rng,
    n: usize,
    shape: Shape,
    dist: &EntryDist,
) -> Matrix {
    Matrix::from_fn(n, dist.kind, |i, j| match shape {
        Shape::General => sample_value(rng, dist),
        Shape::UpperTriangular => {
            if i > j {
                Value::zero(dist.kind)
            } else {
                sample_value(rng, dist)
            }
        }
        Shape::FullDiagonal => {
            if i > j {
                Value::zero(dist.kind)
            } else if i == j {
                sample_nonzero(rng, dist)
            } else {
                sample_value(rng, dist)
            }
        }
        Shape::Unitriangular => {
            if i > j {
                Value::zero(dist.kind)
            } else if i == j {
                Value::one(dist.kind)
            } else {
                sample_value(rng, dist)
            }
        }
        Shape::PositiveUpper => {
            if i > j {
                Value::zero(dist.kind)
            } else {
                sample_nonzero(rng, dist)
            }
        }
    })
}

/// Unitriangular with all above-diagonal entries nonzero (the positive
/// unitriangular class).
pub fn sample_unitriangular_positive(
    rng: &mut ChaCha8Rng,
    n: usize,
    dist: &EntryDist,
) -> Matrix {
    Matrix::from_fn(n, dist.kind, |i, j| {
        if i > j {
            Value::zero(dist.kind)
        } else if i == j {
            Value::one(dist.kind)
        } else {
            sample_nonzero(rng, dist)
        }
    })
}

/// General matrix with every row nonzero (dom = [n]): one random position
/// per row is forced nonzero.
pub fn sample_dom_full(rng: &mut ChaCha8Rng, n: usize, dist: &EntryDist) -> Matrix {
    let forced: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
    Matrix::from_fn(n, dist.kind, |i, j| {
        if forced[i] == j {
            sample_nonzero(rng, dist)
        } else {
            sample_value(rng, dist)
        }
    })
}

/// Invertible diagonal matrix.
pub fn sample_invertible_diagonal(
    rng: &mut ChaCha8Rng,
    n: usize,
    dist: &EntryDist,
) -> Matrix {
    let diag: Vec<Value> = (0..n).map(|_| sample_nonzero(rng, dist)).collect();
    Matrix::from_fn(n, dist.kind, |i, j| {
        if i == j {
            diag[i].clone()
        } else {
            Value::zero(dist.kind)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_hold() {
        let mut rng = rng_from_seed(7);
        let dist = EntryDist::max_plus_with_zeros(0.3);
        for n in 1..=5 {
            for shape in [
                Shape::General,
                Shape::UpperTriangular,
                Shape::FullDiagonal,
                Shape::Unitriangular,
                Shape::PositiveUpper,
            ] {
                for _ in 0..20 {
                    let m = sample_shaped(&mut rng, n, shape, &dist);
                    assert!(m.satisfies(shape), "shape {shape} violated:\n{m}");
                }
            }
            let m = sample_dom_full(&mut rng, n, &dist);
            assert!(m.dom_full());
            let d = sample_invertible_diagonal(&mut rng, n, &dist);
            assert!(d.flags().full_diagonal);
            let u = sample_unitriangular_positive(&mut rng, n, &dist);
            assert!(u.flags().unitriangular && u.flags().positive_upper);
        }
    }

    #[test]
    fn seeding_is_reproducible() {
        let dist = EntryDist::max_plus();
        let a = sample_shaped(&mut rng_from_seed(42), 4, Shape::General, &dist);
        let b = sample_shaped(&mut rng_from_seed(42), 4, Shape::General, &dist);
        assert_eq!(a, b);
        assert_ne!(derive_seed(0, 0), derive_seed(0, 1));
        assert_eq!(derive_seed(9, 3), derive_seed(9, 3));
    }

    #[test]
    fn bounded_samplers_respect_bounds() {
        let mut rng = rng_from_seed(3);
        let dist = EntryDist::max_plus();
        let one = Value::one(Kind::MaxPlusRational);
        for _ in 0..200 {
            assert!(sample_nonzero_leq_one(&mut rng, &dist).leq(&one));
            assert!(one.leq(&sample_nonzero_geq_one(&mut rng, &dist)));
        }
    }
}
