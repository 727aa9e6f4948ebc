//! The scalar product ⟨x|y⟩, the idempotent constructions A⁺ and A*,
//! matrix residuals over the top extension, the residuation-based
//! regularity test, tilde-relation comparisons, and the α/β entry
//! decompositions relative to an idempotent.

use crate::error::Error;
use crate::matrix::{Matrix, Shape};
use crate::semiring::{Ext, Kind, Value};

/// ⟨x|y⟩: meet of y_i ⊗ x_i⁻¹ over the support of x, provided that
/// support is nonempty and contained in the support of y; zero otherwise.
pub fn scalar_product(x: &[Value], y: &[Value]) -> Value {
    assert_eq!(x.len(), y.len(), "vector length mismatch");
    assert!(!x.is_empty(), "empty vectors");
    let kind = x[0].kind();
    assert!(
        x.iter().chain(y.iter()).all(|v| v.kind() == kind),
        "vector kind mismatch"
    );
    let mut acc: Option<Value> = None;
    for (xi, yi) in x.iter().zip(y) {
        if xi.is_zero() {
            continue;
        }
        if yi.is_zero() {
            // support of x not contained in support of y
            return Value::zero(kind);
        }
        let term = yi.div(xi);
        acc = Some(match acc {
            None => term,
            Some(a) => a.meet(&term),
        });
    }
    acc.unwrap_or_else(|| Value::zero(kind))
}

/// (A⁺)_{i,j} = ⟨A_{j,⋆} | A_{i,⋆}⟩. Total: zero rows of A yield a zero
/// row and zero column in the result.
pub fn plus_of(a: &Matrix) -> Matrix {
    let n = a.n();
    let rows: Vec<Vec<Value>> = (0..n).map(|i| a.row(i)).collect();
    Matrix::from_fn(n, a.kind(), |i, j| scalar_product(&rows[j], &rows[i]))
}

/// A* = Δ(Δ(A)⁺). Defined on upper triangular matrices so that Δ keeps
/// the computation in the triangular family.
pub fn star_of(a: &Matrix) -> Result<Matrix, Error> {
    if !a.flags().upper {
        return Err(Error::Shape(
            "star is defined for upper triangular matrices".into(),
        ));
    }
    Ok(plus_of(&a.delta()).delta())
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PlusStarPair {
    pub plus: Matrix,
    pub star: Matrix,
}

pub fn plus_star_of(a: &Matrix) -> Result<PlusStarPair, Error> {
    Ok(PlusStarPair {
        plus: plus_of(a),
        star: star_of(a)?,
    })
}

pub fn is_idempotent(a: &Matrix) -> bool {
    a.mul(a) == *a
}

/// Matrix over the top-extended semiring; produced by residuals.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ExtMatrix {
    n: usize,
    kind: Kind,
    e: Vec<Ext>,
}

impl ExtMatrix {
    pub fn from_fn(n: usize, kind: Kind, mut f: impl FnMut(usize, usize) -> Ext) -> ExtMatrix {
        let mut e = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                e.push(f(i, j));
            }
        }
        ExtMatrix { n, kind, e }
    }

    pub fn from_matrix(a: &Matrix) -> ExtMatrix {
        ExtMatrix::from_fn(a.n(), a.kind(), |i, j| Ext::Val(a.get(i, j).clone()))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    pub fn get(&self, i: usize, j: usize) -> &Ext {
        &self.e[i * self.n + j]
    }

    pub fn mul(&self, other: &ExtMatrix) -> ExtMatrix {
        assert_eq!(self.n, other.n, "dimension mismatch");
        assert_eq!(self.kind, other.kind, "kind mismatch");
        let n = self.n;
        ExtMatrix::from_fn(n, self.kind, |i, j| {
            let mut acc = Ext::zero(self.kind);
            for k in 0..n {
                acc = acc.add(&self.get(i, k).mul(other.get(k, j)));
            }
            acc
        })
    }

    pub fn leq(&self, other: &ExtMatrix) -> bool {
        assert_eq!(self.n, other.n);
        self.e.iter().zip(&other.e).all(|(a, b)| a.leq(b))
    }

    /// Projects back into the plain matrix semiring, replacing every top
    /// entry by the given value.
    pub fn substitute_top(&self, v: &Value) -> Matrix {
        assert_eq!(v.kind(), self.kind);
        Matrix::from_fn(self.n, self.kind, |i, j| match self.get(i, j) {
            Ext::Top => v.clone(),
            Ext::Val(x) => x.clone(),
        })
    }

    pub fn has_top(&self) -> bool {
        self.e.iter().any(|x| x.is_top())
    }

    pub fn to_text(&self) -> String {
        let kind_tok = self.kind.token();
        let mut s = format!("n {} {}\n", self.n, kind_tok);
        for i in 0..self.n {
            let row: Vec<String> = (0..self.n).map(|j| self.get(i, j).token()).collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s
    }
}

/// (A∖X)_{i,j} = ⋀_k A_{k,i} ∖ X_{k,j}: the largest Y with AY ⪯ X.
pub fn residual_left(a: &Matrix, x: &Matrix) -> ExtMatrix {
    assert_eq!(a.n(), x.n(), "dimension mismatch");
    assert_eq!(a.kind(), x.kind(), "kind mismatch");
    let n = a.n();
    ExtMatrix::from_fn(n, a.kind(), |i, j| {
        let mut acc = Ext::Top;
        for k in 0..n {
            let term = Ext::residual(
                &Ext::Val(a.get(k, i).clone()),
                &Ext::Val(x.get(k, j).clone()),
            );
            acc = acc.meet(&term);
        }
        acc
    })
}

/// (X/A)_{i,j} = ⋀_l A_{j,l} ∖ X_{i,l}: the largest Y with YA ⪯ X.
/// The numerator may already live over the top extension.
pub fn residual_right_ext(x: &ExtMatrix, a: &Matrix) -> ExtMatrix {
    assert_eq!(a.n(), x.n(), "dimension mismatch");
    assert_eq!(a.kind(), x.kind(), "kind mismatch");
    let n = a.n();
    ExtMatrix::from_fn(n, a.kind(), |i, j| {
        let mut acc = Ext::Top;
        for l in 0..n {
            let term = Ext::residual(&Ext::Val(a.get(j, l).clone()), x.get(i, l));
            acc = acc.meet(&term);
        }
        acc
    })
}

pub fn residual_right(x: &Matrix, a: &Matrix) -> ExtMatrix {
    residual_right_ext(&ExtMatrix::from_matrix(x), a)
}

/// A∖A/A, computed as (A∖A)/A.
pub fn sandwich(a: &Matrix) -> ExtMatrix {
    residual_right_ext(&residual_left(a, a), a)
}

/// Regularity by residuation: A is regular iff A(A∖A/A)A = A over the
/// top extension. On success the returned witness is the sandwich with
/// top entries replaced by 𝟙, re-verified to satisfy AXA = A in S
/// (top entries of the sandwich only ever meet zero rows or columns of
/// A, so any finite substitute preserves the product).
pub fn is_regular(a: &Matrix) -> (bool, Option<Matrix>) {
    let s = sandwich(a);
    let ea = ExtMatrix::from_matrix(a);
    let prod = ea.mul(&s).mul(&ea);
    if prod == ea {
        let witness = s.substitute_top(&Value::one(a.kind()));
        assert_eq!(
            a.mul(&witness).mul(a),
            *a,
            "internal error: top-substituted regularity witness failed re-verification"
        );
        (true, Some(witness))
    } else {
        (false, None)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum TildeScope {
    /// Tilde relations of the full-diagonal upper triangular semigroup.
    FullDiagonal,
    /// Tilde relations of Mₙ relative to the unit-diagonal idempotent
    /// set U; requires dom = [n] (im = [n] on the ℒ̃ side).
    DomFullU,
}

/// Decides A ℛ̃ B (scope FullDiagonal) or A ℛ̃_U B (scope DomFullU) by
/// comparing the canonical idempotents A⁺ and B⁺. Inputs outside the
/// supported scopes are refused: the general tilde relation over Mₙ has
/// no idempotent representative to compare.
pub fn rtilde_related(a: &Matrix, b: &Matrix, scope: TildeScope) -> Result<bool, Error> {
    assert_eq!(a.n(), b.n(), "dimension mismatch");
    assert_eq!(a.kind(), b.kind(), "kind mismatch");
    match scope {
        TildeScope::FullDiagonal => {
            if !a.satisfies(Shape::FullDiagonal) || !b.satisfies(Shape::FullDiagonal) {
                return Err(Error::Unsupported(
                    "tilde-R comparison requires full-diagonal upper triangular matrices"
                        .into(),
                ));
            }
            Ok(plus_of(a) == plus_of(b))
        }
        TildeScope::DomFullU => {
            if !a.dom_full() || !b.dom_full() {
                return Err(Error::Unsupported(
                    "tilde-R relative to U requires every row nonzero (dom = [n])".into(),
                ));
            }
            Ok(plus_of(a) == plus_of(b))
        }
    }
}

pub fn ltilde_related(a: &Matrix, b: &Matrix, scope: TildeScope) -> Result<bool, Error> {
    assert_eq!(a.n(), b.n(), "dimension mismatch");
    assert_eq!(a.kind(), b.kind(), "kind mismatch");
    match scope {
        TildeScope::FullDiagonal => {
            if !a.satisfies(Shape::FullDiagonal) || !b.satisfies(Shape::FullDiagonal) {
                return Err(Error::Unsupported(
                    "tilde-L comparison requires full-diagonal upper triangular matrices"
                        .into(),
                ));
            }
            Ok(star_of(a)? == star_of(b)?)
        }
        TildeScope::DomFullU => {
            if !a.im_full() || !b.im_full() {
                return Err(Error::Unsupported(
                    "tilde-L relative to U requires every column nonzero (im = [n])".into(),
                ));
            }
            // transpose exchanges the left and right tilde relations and
            // preserves the unit-diagonal idempotent set
            Ok(plus_of(&a.transpose()) == plus_of(&b.transpose()))
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct AlphaBeta {
    /// Present when plus_of(A) = E: the unique α ≥ 𝟙 with
    /// A_{i,j} = E_{i,j} ⊗ A_{j,j} ⊗ α_{i,j} (𝟙 at joint-zero positions
    /// and below the diagonal).
    pub alpha: Option<Matrix>,
    /// Present when star_of(A) = E: the unique β ≥ 𝟙 with
    /// A_{i,j} = A_{i,i} ⊗ E_{i,j} ⊗ β_{i,j}.
    pub beta: Option<Matrix>,
}

/// Decomposes the entries of A relative to the idempotent E per the α/β
/// parametrizations. At least one of plus_of(A) = E, star_of(A) = E must
/// hold; the corresponding component(s) are returned. Unit constraints
/// (α_{i,i} = α_{i,n} = 𝟙, β_{i,i} = β_{1,i} = 𝟙, both ≥ 𝟙), exact
/// reconstruction, and invariance under passing to the right/left normal
/// forms are all verified internally.
pub fn alpha_beta_decompose(a: &Matrix, e: &Matrix) -> Result<AlphaBeta, Error> {
    assert_eq!(a.n(), e.n(), "dimension mismatch");
    assert_eq!(a.kind(), e.kind(), "kind mismatch");
    if !a.satisfies(Shape::FullDiagonal) {
        return Err(Error::Shape(
            "alpha/beta decomposition requires a full-diagonal upper triangular matrix"
                .into(),
        ));
    }
    if !is_idempotent(e) {
        return Err(Error::Invalid("the reference matrix E must be idempotent".into()));
    }
    let plus = plus_of(a);
    let star = star_of(a)?;
    let plus_match = plus == *e;
    let star_match = star == *e;
    if !plus_match && !star_match {
        return Err(Error::Invalid(
            "E matches neither plus_of(A) nor star_of(A)".into(),
        ));
    }
    let n = a.n();
    let kind = a.kind();
    let one = Value::one(kind);

    let alpha = if plus_match {
        let alpha = compute_alpha(a, e)?;
        // right normal form A^⋄ = A D_A⁻¹ has the same plus and the same alpha
        let rnorm = Matrix::from_fn(n, kind, |i, j| {
            if a.get(i, j).is_zero() {
                Value::zero(kind)
            } else {
                a.get(i, j).div(a.get(j, j))
            }
        });
        assert_eq!(plus_of(&rnorm), *e, "right normal form must share plus_of");
        assert_eq!(
            compute_alpha(&rnorm, e).expect("alpha of the right normal form"),
            alpha,
            "alpha must be invariant under right normalization"
        );
        for i in 0..n {
            assert!(alpha.get(i, i).is_one());
            assert!(alpha.get(i, n - 1).is_one());
            for j in 0..n {
                assert!(one.leq(alpha.get(i, j)), "alpha below 1");
            }
        }
        Some(alpha)
    } else {
        None
    };

    let beta = if star_match {
        let beta = compute_beta(a, e)?;
        let lnorm = Matrix::from_fn(n, kind, |i, j| {
            if a.get(i, j).is_zero() {
                Value::zero(kind)
            } else {
                a.get(i, i).inv().expect("full diagonal").mul(a.get(i, j))
            }
        });
        assert_eq!(
            star_of(&lnorm).expect("upper"),
            *e,
            "left normal form must share star_of"
        );
        assert_eq!(
            compute_beta(&lnorm, e).expect("beta of the left normal form"),
            beta,
            "beta must be invariant under left normalization"
        );
        for i in 0..n {
            assert!(beta.get(i, i).is_one());
            assert!(beta.get(0, i).is_one());
            for j in 0..n {
                assert!(one.leq(beta.get(i, j)), "beta below 1");
            }
        }
        Some(beta)
    } else {
        None
    };

    Ok(AlphaBeta { alpha, beta })
}

fn compute_alpha(a: &Matrix, e: &Matrix) -> Result<Matrix, Error> {
    let n = a.n();
    let kind = a.kind();
    let alpha = try_from_fn(n, kind, |i, j| {
        if i >= j {
            return Ok(Value::one(kind));
        }
        let aij = a.get(i, j);
        let eij = e.get(i, j);
        match (aij.is_zero(), eij.is_zero()) {
            (true, true) => Ok(Value::one(kind)),
            (false, false) => Ok(aij.div(a.get(j, j)).div(eij)),
            _ => Err(Error::Invalid(format!(
                "alpha decomposition impossible: zero patterns of A and E differ at ({}, {})",
                i + 1,
                j + 1
            ))),
        }
    })?;
    for i in 0..n {
        for j in i..n {
            let lhs = e.get(i, j).mul(a.get(j, j)).mul(alpha.get(i, j));
            assert_eq!(*a.get(i, j), lhs, "alpha reconstruction failed");
        }
    }
    Ok(alpha)
}

fn compute_beta(a: &Matrix, e: &Matrix) -> Result<Matrix, Error> {
    let n = a.n();
    let kind = a.kind();
    let beta = try_from_fn(n, kind, |i, j| {
        if i >= j {
            return Ok(Value::one(kind));
        }
        let aij = a.get(i, j);
        let eij = e.get(i, j);
        match (aij.is_zero(), eij.is_zero()) {
            (true, true) => Ok(Value::one(kind)),
            (false, false) => Ok(a.get(i, i).inv().expect("full diagonal").mul(aij).div(eij)),
            _ => Err(Error::Invalid(format!(
                "beta decomposition impossible: zero patterns of A and E differ at ({}, {})",
                i + 1,
                j + 1
            ))),
        }
    })?;
    for i in 0..n {
        for j in i..n {
            let lhs = a.get(i, i).mul(e.get(i, j)).mul(beta.get(i, j));
            assert_eq!(*a.get(i, j), lhs, "beta reconstruction failed");
        }
    }
    Ok(beta)
}

fn try_from_fn(
    n: usize,
    kind: Kind,
    mut f: impl FnMut(usize, usize) -> Result<Value, Error>,
) -> Result<Matrix, Error> {
    let mut e = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            e.push(f(i, j)?);
        }
    }
    Ok(Matrix::from_entries(n, kind, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::{
        rng_from_seed, sample_dom_full, sample_invertible_diagonal, sample_shaped,
        sample_unitriangular_positive, sample_value, EntryDist,
    };
    use crate::matrix::PackedBool;

    fn mp(rows: &[&[i64]]) -> Matrix {
        Matrix::from_rows(
            Kind::MaxPlusRational,
            rows.iter()
                .map(|r| r.iter().map(|&x| Value::int(x)).collect())
                .collect(),
        )
    }

    fn mpz(rows: &[&[Option<i64>]]) -> Matrix {
        Matrix::from_rows(
            Kind::MaxPlusRational,
            rows.iter()
                .map(|r| {
                    r.iter()
                        .map(|x| match x {
                            Some(v) => Value::int(*v),
                            None => Value::MaxPlusZero,
                        })
                        .collect()
                })
                .collect(),
        )
    }

    fn bmat(rows: &[&[u8]]) -> Matrix {
        Matrix::from_rows(
            Kind::Boolean,
            rows.iter()
                .map(|r| {
                    r.iter()
                        .map(|&x| if x == 0 { Value::BoolZero } else { Value::BoolOne })
                        .collect()
                })
                .collect(),
        )
    }

    const Z: Option<i64> = None;

    #[test]
    fn scalar_product_examples() {
        let zero = Value::MaxPlusZero;
        // <x|x> = 1 for nonzero x
        let x = vec![Value::int(3), zero.clone(), Value::rat(1, 2)];
        assert!(scalar_product(&x, &x).is_one());
        // max-plus x=(0,0), y=(1,2) -> min(1-0, 2-0) = 1
        let x = vec![Value::int(0), Value::int(0)];
        let y = vec![Value::int(1), Value::int(2)];
        assert_eq!(scalar_product(&x, &y), Value::int(1));
        // support not contained -> zero
        let x = vec![Value::int(0), zero.clone()];
        let y = vec![zero.clone(), Value::int(0)];
        assert!(scalar_product(&x, &y).is_zero());
        // empty support -> zero
        let x = vec![zero.clone(), zero];
        let y = vec![Value::int(1), Value::int(1)];
        assert!(scalar_product(&x, &y).is_zero());
    }

    #[test]
    fn plus_of_boolean_example() {
        let a = bmat(&[&[1, 1, 1], &[0, 0, 1], &[0, 0, 1]]);
        let expected = bmat(&[&[1, 1, 1], &[0, 1, 1], &[0, 1, 1]]);
        assert_eq!(plus_of(&a), expected);
    }

    #[test]
    fn plus_of_identity() {
        for n in 1..=4 {
            let id = Matrix::identity(n, Kind::MaxPlusRational);
            assert_eq!(plus_of(&id), id);
            let idb = Matrix::identity(n, Kind::Boolean);
            assert_eq!(plus_of(&idb), idb);
        }
    }

    // 4×4 witness with superdiagonal profile (g, g, 1) and corner g²,
    // instantiated at g = 1.
    fn rt_lt_witness() -> Matrix {
        mpz(&[
            &[Some(0), Some(1), Some(0), Some(2)],
            &[Z, Some(0), Some(1), Some(1)],
            &[Z, Z, Some(0), Some(0)],
            &[Z, Z, Z, Some(0)],
        ])
    }

    #[test]
    fn plus_and_star_of_dimension_four_witness() {
        let a = rt_lt_witness();
        let plus = plus_of(&a);
        let expected_plus = mpz(&[
            &[Some(0), Some(-1), Some(0), Some(2)],
            &[Z, Some(0), Some(1), Some(1)],
            &[Z, Z, Some(0), Some(0)],
            &[Z, Z, Z, Some(0)],
        ]);
        assert_eq!(plus, expected_plus);
        let star = star_of(&a).unwrap();
        let expected_star = mpz(&[
            &[Some(0), Some(1), Some(0), Some(2)],
            &[Z, Some(0), Some(-1), Some(1)],
            &[Z, Z, Some(0), Some(0)],
            &[Z, Z, Z, Some(0)],
        ]);
        assert_eq!(star, expected_star);
    }

    #[test]
    fn plus_is_idempotent_left_identity_and_fixpoint() {
        let mut rng = rng_from_seed(11);
        for n in 1..=5 {
            for kind_zero in [
                EntryDist::max_plus_with_zeros(0.25),
                EntryDist::boolean(0.5),
            ] {
                for _ in 0..40 {
                    let a = sample_shaped(&mut rng, n, Shape::General, &kind_zero);
                    let p = plus_of(&a);
                    assert!(is_idempotent(&p), "plus not idempotent for\n{a}");
                    assert_eq!(p.mul(&a), a, "plus not a left identity for\n{a}");
                    assert_eq!(plus_of(&p), p, "plus not a fixpoint for\n{a}");
                }
            }
        }
    }

    #[test]
    fn plus_maximality_among_fixers() {
        // dom = [n]: random damped fixers B satisfy BA = A, B ⪯ A⁺ and BA⁺ ⪯ A⁺
        let mut rng = rng_from_seed(23);
        let dist = EntryDist::max_plus_with_zeros(0.2);
        for n in 2..=5 {
            for _ in 0..25 {
                let a = sample_dom_full(&mut rng, n, &dist);
                let e = plus_of(&a);
                for _ in 0..8 {
                    let damp = Matrix::from_fn(n, a.kind(), |_, _| {
                        let v = sample_value(&mut rng, &dist);
                        v.meet(&Value::one(a.kind()))
                    });
                    let b = Matrix::identity(n, a.kind()).join(&e.hadamard(&damp));
                    assert_eq!(b.mul(&a), a);
                    assert!(b.leq_entrywise(&e));
                    assert!(b.mul(&e).leq_entrywise(&e));
                }
            }
        }
    }

    #[test]
    fn boolean_fixers_are_below_plus_exhaustively() {
        // n = 3: every B with BA = A satisfies B ⪯ A⁺ and BA⁺ ⪯ A⁺ (dom full)
        let mut rng = rng_from_seed(5);
        let dist = EntryDist::boolean(0.5);
        for _ in 0..40 {
            let a = sample_dom_full(&mut rng, 3, &dist);
            let pa = PackedBool::from_matrix(&a);
            let e = plus_of(&a);
            let pe = PackedBool::from_matrix(&e);
            for bits in 0..512u64 {
                let b = PackedBool::new(3, bits);
                if b.mul(&pa) == pa {
                    assert!(b.leq(&pe), "fixer above plus for A={:?} B={:?}", pa, b);
                    assert!(b.mul(&pe).leq(&pe));
                }
            }
        }
    }

    #[test]
    fn plus_scale_invariance() {
        let mut rng = rng_from_seed(31);
        let dist = EntryDist::max_plus_with_zeros(0.2);
        for n in 1..=5 {
            for _ in 0..20 {
                let a = sample_shaped(&mut rng, n, Shape::FullDiagonal, &dist);
                let d = sample_invertible_diagonal(&mut rng, n, &dist);
                assert_eq!(plus_of(&a.mul(&d)), plus_of(&a));
            }
        }
    }

    #[test]
    fn plus_matches_simplified_triangular_formula() {
        // on positive upper matrices the general scalar-product formula
        // reduces to meets of entry ratios over k ≥ j
        let mut rng = rng_from_seed(37);
        let dist = EntryDist::max_plus();
        for n in 1..=6 {
            for _ in 0..20 {
                let a = sample_shaped(&mut rng, n, Shape::PositiveUpper, &dist);
                let p = plus_of(&a);
                for i in 0..n {
                    for j in i..n {
                        let mut acc: Option<Value> = None;
                        for k in j..n {
                            let term = a.get(i, k).div(a.get(j, k));
                            acc = Some(match acc {
                                None => term,
                                Some(x) => x.meet(&term),
                            });
                        }
                        assert_eq!(*p.get(i, j), acc.unwrap());
                    }
                }
                // dual simplified formula for star: meets over k ≤ i
                let s = star_of(&a).unwrap();
                for i in 0..n {
                    for j in i..n {
                        let mut acc: Option<Value> = None;
                        for k in 0..=i {
                            let term = a.get(k, j).div(a.get(k, i));
                            acc = Some(match acc {
                                None => term,
                                Some(x) => x.meet(&term),
                            });
                        }
                        assert_eq!(*s.get(i, j), acc.unwrap());
                    }
                }
            }
        }
    }

    #[test]
    fn star_fixes_unit_diagonal_idempotents() {
        let mut rng = rng_from_seed(41);
        let dist = EntryDist::max_plus_with_zeros(0.2);
        for n in 1..=5 {
            for _ in 0..20 {
                let a = sample_shaped(&mut rng, n, Shape::FullDiagonal, &dist);
                let e = plus_of(&a);
                assert!(e.flags().unitriangular);
                assert!(is_idempotent(&e));
                assert_eq!(star_of(&e).unwrap(), e);
                assert_eq!(plus_of(&e), e);
                // star is a right identity of A
                let s = star_of(&a).unwrap();
                assert_eq!(a.mul(&s), a);
                assert!(is_idempotent(&s));
            }
        }
        let id = Matrix::identity(4, Kind::MaxPlusRational);
        assert_eq!(star_of(&id).unwrap(), id);
    }

    #[test]
    fn star_refuses_non_triangular() {
        let a = mp(&[&[0, 1], &[2, 3]]);
        assert!(matches!(star_of(&a), Err(Error::Shape(_))));
    }

    #[test]
    fn residual_by_identity_is_identity_map() {
        let mut rng = rng_from_seed(43);
        let dist = EntryDist::max_plus_with_zeros(0.3);
        for _ in 0..10 {
            let x = sample_shaped(&mut rng, 3, Shape::General, &dist);
            let r = residual_left(&Matrix::identity(3, x.kind()), &x);
            assert_eq!(r, ExtMatrix::from_matrix(&x));
        }
    }

    #[test]
    fn sandwich_product_is_below_input() {
        let mut rng = rng_from_seed(47);
        for dist in [
            EntryDist::max_plus_with_zeros(0.3),
            EntryDist::boolean(0.5),
        ] {
            for n in 1..=4 {
                for _ in 0..25 {
                    let a = sample_shaped(&mut rng, n, Shape::General, &dist);
                    let s = sandwich(&a);
                    let ea = ExtMatrix::from_matrix(&a);
                    assert!(ea.mul(&s).mul(&ea).leq(&ea));
                }
            }
        }
    }

    #[test]
    fn sandwich_two_step_equals_direct_double_meet() {
        let mut rng = rng_from_seed(53);
        let dist = EntryDist::max_plus_with_zeros(0.3);
        for n in 1..=4 {
            for _ in 0..25 {
                let a = sample_shaped(&mut rng, n, Shape::General, &dist);
                let s = sandwich(&a);
                let direct = ExtMatrix::from_fn(n, a.kind(), |i, j| {
                    let mut acc = Ext::Top;
                    for k in 0..n {
                        for l in 0..n {
                            let inner = Ext::residual(
                                &Ext::Val(a.get(k, i).clone()),
                                &Ext::Val(a.get(k, l).clone()),
                            );
                            let term =
                                Ext::residual(&Ext::Val(a.get(j, l).clone()), &inner);
                            acc = acc.meet(&term);
                        }
                    }
                    acc
                });
                assert_eq!(s, direct);
            }
        }
    }

    #[test]
    fn boolean_divisibility_matches_residual_criterion() {
        // X ≤_R A iff A(A∖X) = X, against explicit search for AC = X
        for abits in 0..512u64 {
            // sampled stride keeps the quadruple loop affordable
            if abits % 7 != 0 {
                continue;
            }
            let a = PackedBool::new(3, abits);
            let am = a.to_matrix();
            for xbits in (0..512u64).step_by(5) {
                let x = PackedBool::new(3, xbits);
                let xm = x.to_matrix();
                let divisible = (0..512u64).any(|c| a.mul(&PackedBool::new(3, c)) == x);
                let r = residual_left(&am, &xm);
                let reaches =
                    ExtMatrix::from_matrix(&am).mul(&r) == ExtMatrix::from_matrix(&xm);
                assert_eq!(divisible, reaches, "A={abits:b} X={xbits:b}");
            }
        }
    }

    #[test]
    fn regularity_of_idempotents() {
        let mut rng = rng_from_seed(59);
        let dist = EntryDist::max_plus_with_zeros(0.2);
        for n in 1..=4 {
            for _ in 0..10 {
                let a = sample_shaped(&mut rng, n, Shape::FullDiagonal, &dist);
                let e = plus_of(&a);
                let (reg, w) = is_regular(&e);
                assert!(reg);
                let w = w.unwrap();
                assert_eq!(e.mul(&w).mul(&e), e);
            }
        }
    }

    #[test]
    fn all_of_m2_bool_is_regular() {
        for bits in 0..16u64 {
            let a = PackedBool::new(2, bits).to_matrix();
            let (reg, w) = is_regular(&a);
            assert!(reg, "should be regular:\n{a}");
            let w = w.unwrap();
            assert_eq!(a.mul(&w).mul(&a), a);
        }
    }

    #[test]
    fn unitriangular_all_g_is_not_regular_at_dimension_three() {
        let g = mpz(&[
            &[Some(0), Some(1), Some(1)],
            &[Z, Some(0), Some(1)],
            &[Z, Z, Some(0)],
        ]);
        let (reg, w) = is_regular(&g);
        assert!(!reg);
        assert!(w.is_none());
    }

    #[test]
    fn upper_two_by_two_inverse_formula() {
        let mut rng = rng_from_seed(61);
        let dist = EntryDist::max_plus();
        for _ in 0..50 {
            let a = sample_shaped(&mut rng, 2, Shape::PositiveUpper, &dist);
            let inv = Matrix::from_rows(
                a.kind(),
                vec![
                    vec![
                        a.get(0, 0).inv().unwrap(),
                        a.get(0, 1).div(a.get(0, 0)).div(a.get(1, 1)),
                    ],
                    vec![Value::zero(a.kind()), a.get(1, 1).inv().unwrap()],
                ],
            );
            assert_eq!(a.mul(&inv).mul(&a), a);
            assert_eq!(inv.mul(&a).mul(&inv), inv);
            let (reg, w) = is_regular(&a);
            assert!(reg);
            assert_eq!(a.mul(&w.unwrap()).mul(&a), a);
        }
    }

    #[test]
    fn rtilde_examples() {
        let mut rng = rng_from_seed(67);
        let dist = EntryDist::max_plus_with_zeros(0.2);
        for n in 1..=5 {
            for _ in 0..15 {
                let a = sample_shaped(&mut rng, n, Shape::FullDiagonal, &dist);
                let e = plus_of(&a);
                assert!(rtilde_related(&a, &e, TildeScope::FullDiagonal).unwrap());
                let d = sample_invertible_diagonal(&mut rng, n, &dist);
                assert!(rtilde_related(&a, &a.mul(&d), TildeScope::FullDiagonal).unwrap());
                let s = star_of(&a).unwrap();
                assert!(ltilde_related(&a, &s, TildeScope::FullDiagonal).unwrap());
            }
        }
        // Boolean unitriangular example pair
        let x1 = bmat(&[&[1, 1, 0], &[0, 1, 1], &[0, 0, 1]]);
        let e = bmat(&[&[1, 0, 0], &[0, 1, 1], &[0, 0, 1]]);
        assert!(rtilde_related(&x1, &e, TildeScope::FullDiagonal).unwrap());
        // scope refusals
        let zero_diag = bmat(&[&[0, 1], &[0, 1]]);
        let id = Matrix::identity(2, Kind::Boolean);
        assert!(matches!(
            rtilde_related(&zero_diag, &id, TildeScope::FullDiagonal),
            Err(Error::Unsupported(_))
        ));
        let zero_row = bmat(&[&[0, 0], &[1, 1]]);
        assert!(matches!(
            rtilde_related(&zero_row, &id, TildeScope::DomFullU),
            Err(Error::Unsupported(_))
        ));
        // dom-full scope accepts general matrices
        let w = bmat(&[&[0, 1], &[1, 0]]);
        assert!(rtilde_related(&w, &w, TildeScope::DomFullU).unwrap());
    }

    #[test]
    fn unique_idempotent_per_tilde_class() {
        let mut rng = rng_from_seed(71);
        let dist = EntryDist::max_plus_with_zeros(0.2);
        for n in 1..=5 {
            for _ in 0..20 {
                let a = sample_shaped(&mut rng, n, Shape::FullDiagonal, &dist);
                let b = sample_shaped(&mut rng, n, Shape::FullDiagonal, &dist);
                let (e, f) = (plus_of(&a), plus_of(&b));
                // idempotents are tilde-related iff equal
                assert_eq!(
                    rtilde_related(&e, &f, TildeScope::FullDiagonal).unwrap(),
                    e == f
                );
            }
        }
    }

    #[test]
    fn alpha_beta_on_the_idempotent_itself() {
        let mut rng = rng_from_seed(73);
        let dist = EntryDist::max_plus();
        for n in 2..=5 {
            let a = sample_shaped(&mut rng, n, Shape::PositiveUpper, &dist);
            let e = plus_of(&a);
            let ab = alpha_beta_decompose(&e, &e).unwrap();
            let ones = Matrix::from_fn(n, e.kind(), |_, _| Value::one(e.kind()));
            assert_eq!(ab.alpha.unwrap(), ones);
            assert_eq!(ab.beta.unwrap(), ones);
        }
    }

    #[test]
    fn alpha_single_bump_recovered() {
        // A = ([v]_{1,2} ∘ E)·D has alpha with a single non-unit entry at (1,2)
        let mut rng = rng_from_seed(79);
        let dist = EntryDist::max_plus();
        for _ in 0..20 {
            let x = sample_shaped(&mut rng, 3, Shape::PositiveUpper, &dist);
            let e = plus_of(&x);
            let v = Value::int(2);
            let bump = Matrix::from_fn(3, e.kind(), |i, j| {
                if (i, j) == (0, 1) {
                    v.clone()
                } else {
                    Value::one(e.kind())
                }
            });
            let d = sample_invertible_diagonal(&mut rng, 3, &dist);
            let a = e.hadamard(&bump).mul(&d);
            if plus_of(&a) != e {
                // bumping can break tightness-dependent membership; skip
                continue;
            }
            let ab = alpha_beta_decompose(&a, &e).unwrap();
            let alpha = ab.alpha.unwrap();
            assert_eq!(*alpha.get(0, 1), v);
            for i in 0..3 {
                for j in 0..3 {
                    if (i, j) != (0, 1) {
                        assert!(alpha.get(i, j).is_one());
                    }
                }
            }
        }
    }

    #[test]
    fn alpha_beta_random_round_trip() {
        let mut rng = rng_from_seed(83);
        let dist = EntryDist::max_plus();
        for n in 2..=5 {
            for _ in 0..20 {
                let a = sample_shaped(&mut rng, n, Shape::FullDiagonal, &dist);
                let e = plus_of(&a);
                let ab = alpha_beta_decompose(&a, &e).unwrap();
                assert!(ab.alpha.is_some());
                let s = star_of(&a).unwrap();
                let ab2 = alpha_beta_decompose(&a, &s).unwrap();
                assert!(ab2.beta.is_some());
                // reconstruction is asserted inside; reaching here is the test
            }
        }
        // positive unitriangular: decompose against plus
        for _ in 0..20 {
            let a = sample_unitriangular_positive(&mut rng, 4, &dist);
            let e = plus_of(&a);
            let ab = alpha_beta_decompose(&a, &e).unwrap();
            let alpha = ab.alpha.unwrap();
            for i in 0..4 {
                for j in i..4 {
                    assert_eq!(*a.get(i, j), e.get(i, j).mul(alpha.get(i, j)));
                }
            }
        }
    }

    #[test]
    fn alpha_beta_rejects_unrelated_idempotent() {
        let a = mp(&[&[0, 5], &[-100, 0]]).with_entry(1, 0, Value::MaxPlusZero);
        let id = Matrix::identity(2, Kind::MaxPlusRational);
        // plus_of(a) has E_{1,2} = 5 ≠ identity; star likewise
        assert!(alpha_beta_decompose(&a, &id).is_err());
    }
}
