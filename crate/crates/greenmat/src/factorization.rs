//! Triangular normal forms, the meet idempotent, the idempotent
//! factorization of unitriangular matrices, the semidirect product law,
//! and power stabilization checks.

use crate::error::Error;
use crate::matrix::{Matrix, Shape};
use crate::plusstar::{is_idempotent, plus_of, star_of};
use crate::semiring::Value;

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TriangularNormalForm {
    /// Invertible diagonal D_A with d_{i,i} = A_{i,i}.
    pub d: Matrix,
    /// A^⋄, unitriangular, with A = rnorm ⊗ d.
    pub rnorm: Matrix,
    /// A^•, unitriangular, with A = d ⊗ lnorm.
    pub lnorm: Matrix,
}

pub fn normal_form(a: &Matrix) -> Result<TriangularNormalForm, Error> {
    if !a.satisfies(Shape::FullDiagonal) {
        return Err(Error::Shape(
            "normal form requires a full-diagonal upper triangular matrix".into(),
        ));
    }
    let n = a.n();
    let kind = a.kind();
    let d = Matrix::from_fn(n, kind, |i, j| {
        if i == j {
            a.get(i, i).clone()
        } else {
            Value::zero(kind)
        }
    });
    let rnorm = Matrix::from_fn(n, kind, |i, j| {
        let v = a.get(i, j);
        if v.is_zero() {
            Value::zero(kind)
        } else {
            v.div(a.get(j, j))
        }
    });
    let lnorm = Matrix::from_fn(n, kind, |i, j| {
        let v = a.get(i, j);
        if v.is_zero() {
            Value::zero(kind)
        } else {
            a.get(i, i).inv().expect("full diagonal").mul(v)
        }
    });
    assert!(rnorm.flags().unitriangular);
    assert!(lnorm.flags().unitriangular);
    assert_eq!(rnorm.mul(&d), *a, "right normal form reconstruction");
    assert_eq!(d.mul(&lnorm), *a, "left normal form reconstruction");
    Ok(TriangularNormalForm { d, rnorm, lnorm })
}

/// 𝔛_{i,j} = plus_of(X)_{i,j} ∧ star_of(X)_{i,j}: an idempotent below X
/// that fixes X on both sides.
pub fn meet_idempotent(x: &Matrix) -> Result<Matrix, Error> {
    if !x.satisfies(Shape::Unitriangular) {
        return Err(Error::Shape(
            "meet idempotent requires a unitriangular matrix".into(),
        ));
    }
    let plus = plus_of(x);
    let star = star_of(x)?;
    let m = plus.meet_entrywise(&star);
    assert!(is_idempotent(&m), "meet of the two canonical idempotents");
    assert!(m.leq_entrywise(x));
    assert_eq!(m.mul(x), *x);
    assert_eq!(x.mul(&m), *x);
    Ok(m)
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct FactorizationResult {
    /// [X(n), …, X(2)] in product order; empty for n = 1.
    pub factors: Vec<Matrix>,
    pub meet_idempotent: Matrix,
    pub diagonal: Option<Matrix>,
}

/// X(h) agrees with X on the block of positions (i, j) with i < h ≤ j
/// (1-based) and with 𝔛 everywhere else.
fn factor_slice(x: &Matrix, frak: &Matrix, h: usize) -> Matrix {
    Matrix::from_fn(x.n(), x.kind(), |i, j| {
        if i + 1 < h && h <= j + 1 {
            x.get(i, j).clone()
        } else {
            frak.get(i, j).clone()
        }
    })
}

/// Writes a unitriangular X as the product X(n)⋯X(2) of n−1 idempotents.
pub fn idempotent_factorize(x: &Matrix) -> Result<FactorizationResult, Error> {
    if !x.satisfies(Shape::Unitriangular) {
        return Err(Error::Shape(
            "idempotent factorization requires a unitriangular matrix".into(),
        ));
    }
    let frak = meet_idempotent(x)?;
    let n = x.n();
    let factors: Vec<Matrix> = (2..=n).rev().map(|h| factor_slice(x, &frak, h)).collect();
    let mut prod = Matrix::identity(n, x.kind());
    for f in &factors {
        assert!(is_idempotent(f), "every factor must be idempotent");
        prod = prod.mul(f);
    }
    assert_eq!(prod, *x, "factor product must reproduce the input");
    if x.flags().positive_upper {
        for f in &factors {
            assert!(
                f.flags().positive_upper,
                "factorization must preserve positivity"
            );
        }
    }
    Ok(FactorizationResult {
        factors,
        meet_idempotent: frak,
        diagonal: None,
    })
}

/// Full-diagonal A = X(n)⋯X(2) ⊗ D_A via the factorization of A^⋄.
pub fn full_decompose(a: &Matrix) -> Result<FactorizationResult, Error> {
    let nf = normal_form(a)?;
    let mut result = idempotent_factorize(&nf.rnorm)?;
    let mut prod = Matrix::identity(a.n(), a.kind());
    for f in &result.factors {
        prod = prod.mul(f);
    }
    assert_eq!(prod.mul(&nf.d), *a, "decomposition reconstruction");
    result.diagonal = Some(nf.d);
    Ok(result)
}

fn diagonal_inverse(d: &Matrix) -> Matrix {
    Matrix::from_fn(d.n(), d.kind(), |i, j| {
        if i == j {
            d.get(i, i).inv().expect("invertible diagonal")
        } else {
            Value::zero(d.kind())
        }
    })
}

/// AB = (A^⋄ ⊗ D_A B^⋄ D_A⁻¹) ⊗ (D_A D_B): the product decomposes as the
/// twisted product of unitriangular parts times the product of diagonals.
pub fn semidirect_law_check(a: &Matrix, b: &Matrix) -> Result<bool, Error> {
    let na = normal_form(a)?;
    let nb = normal_form(b)?;
    let d_inv = diagonal_inverse(&na.d);
    let conjugated = na.d.mul(&nb.rnorm).mul(&d_inv);
    assert!(conjugated.flags().unitriangular);
    let twisted = na.rnorm.mul(&conjugated);
    let rhs = twisted.mul(&na.d.mul(&nb.d));
    Ok(a.mul(b) == rhs)
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct EfPowerReport {
    pub n: usize,
    pub m: u32,
    /// 2m ≥ n+1; below this the six-fold equality is not claimed and the
    /// report is diagnostic only.
    pub threshold_met: bool,
    pub equalities: Vec<(String, bool)>,
    pub all_hold: bool,
}

/// Stabilization of alternating products of idempotents: for 2m ≥ n+1,
/// (EF)^m = (EF)^mE = E(FE)^m = (FE)^mF = F(EF)^m = (FE)^m.
pub fn ef_power_identities(e: &Matrix, f: &Matrix, m: u32) -> Result<EfPowerReport, Error> {
    assert_eq!(e.n(), f.n(), "dimension mismatch");
    assert_eq!(e.kind(), f.kind(), "kind mismatch");
    if !e.satisfies(Shape::FullDiagonal) || !f.satisfies(Shape::FullDiagonal) {
        return Err(Error::Shape(
            "power identities require full-diagonal upper triangular matrices".into(),
        ));
    }
    if !is_idempotent(e) || !is_idempotent(f) {
        return Err(Error::Invalid("both inputs must be idempotent".into()));
    }
    if m == 0 {
        return Err(Error::Invalid("the exponent must be positive".into()));
    }
    let n = e.n();
    let efm = e.mul(f).pow(m);
    let fem = f.mul(e).pow(m);
    let equalities: Vec<(String, bool)> = vec![
        ("(EF)^m = (EF)^m E".into(), efm.mul(e) == efm),
        ("(EF)^m = E (FE)^m".into(), e.mul(&fem) == efm),
        ("(EF)^m = (FE)^m F".into(), fem.mul(f) == efm),
        ("(EF)^m = F (EF)^m".into(), f.mul(&efm) == efm),
        ("(EF)^m = (FE)^m".into(), fem == efm),
    ];
    let all_hold = equalities.iter().all(|(_, ok)| *ok);
    Ok(EfPowerReport {
        n,
        m,
        threshold_met: 2 * (m as usize) >= n + 1,
        equalities,
        all_hold,
    })
}

/// Least k with X^k = X^{k+1}. The powers of a unitriangular matrix form
/// an ascending chain that stabilizes by exponent n−1.
pub fn aperiodicity_check(x: &Matrix) -> Result<u32, Error> {
    if !x.satisfies(Shape::Unitriangular) {
        return Err(Error::Shape(
            "aperiodicity check requires a unitriangular matrix".into(),
        ));
    }
    let n = x.n();
    let mut current = x.clone();
    let mut k = 1u32;
    loop {
        let next = current.mul(x);
        assert!(
            current.leq_entrywise(&next),
            "powers must form an ascending chain"
        );
        if next == current {
            break;
        }
        current = next;
        k += 1;
        assert!(
            (k as usize) <= n,
            "powers of a unitriangular matrix must stabilize"
        );
    }
    assert!((k as usize) <= n.saturating_sub(1).max(1));
    Ok(k)
}
