//! Path deficiency, tightness patterns of triangular idempotents, the
//! extended-H class tables for n <= 4, corner embeddings, and the
//! left-congruence probe.

use std::collections::BTreeSet;
use std::fmt;

use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::error::Error;
use crate::matrix::Matrix;
use crate::plusstar::{alpha_beta_decompose, is_idempotent, plus_of, star_of};
use crate::sample::{
    rng_from_seed, sample_nonzero, sample_nonzero_leq_one, sample_shaped, EntryDist,
};
use crate::semiring::{Kind, Value};

/// Nondecreasing vertex sequence i1 -> i2 -> ... -> ik over [n], 1-based,
/// with at least two vertices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Path(Vec<usize>);

impl Path {
    pub fn new(vertices: Vec<usize>) -> Result<Path, Error> {
        if vertices.len() < 2 {
            return Err(Error::Invalid("a path needs at least two vertices".into()));
        }
        if vertices[0] == 0 {
            return Err(Error::Invalid("path vertices are 1-based".into()));
        }
        if vertices.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Invalid(format!(
                "path vertices must be nondecreasing, got {vertices:?}"
            )));
        }
        Ok(Path(vertices))
    }

    pub fn vertices(&self) -> &[usize] {
        &self.0
    }

    /// Strictly increasing vertices.
    pub fn is_simple(&self) -> bool {
        self.0.windows(2).all(|w| w[0] < w[1])
    }

    pub fn edge_count(&self) -> usize {
        self.0.len() - 1
    }

    pub fn max_vertex(&self) -> usize {
        *self.0.last().unwrap()
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|v| v.to_string()).collect();
        f.write_str(&parts.join("->"))
    }
}

/// Deficiency of a path in A: the entry spanning the endpoints divided by
/// the product of the entries along the edges. Every entry touched must be
/// nonzero.
pub fn deficiency(a: &Matrix, path: &Path) -> Result<Value, Error> {
    if path.max_vertex() > a.n() {
        return Err(Error::Invalid(format!(
            "path {path} leaves a {0}x{0} matrix",
            a.n()
        )));
    }
    let v = path.vertices();
    let span = a.get(v[0] - 1, v[v.len() - 1] - 1);
    if span.is_zero() {
        return Err(Error::Invalid(format!(
            "zero entry on path {path} at ({}, {})",
            v[0],
            v[v.len() - 1]
        )));
    }
    let mut acc = span.clone();
    for w in v.windows(2) {
        let e = a.get(w[0] - 1, w[1] - 1);
        if e.is_zero() {
            return Err(Error::Invalid(format!(
                "zero entry on path {path} at ({}, {})",
                w[0], w[1]
            )));
        }
        acc = acc.mul(&e.inv().expect("nonzero entry"));
    }
    Ok(acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeficiencyMode {
    /// All nondecreasing paths with at most n+1 vertices.
    AllPaths,
    /// All two-edge paths i -> k -> j with i <= k <= j.
    Length2,
    /// All two-edge paths anchored at the first vertex: 1 -> i -> j.
    OneAnchored,
}

fn two_edge_def(a: &Matrix, i: usize, k: usize, j: usize) -> Value {
    // 0-based i <= k <= j; entries nonzero because the input is
    // positive upper.
    let inv = |v: &Value| v.inv().expect("nonzero entry");
    a.get(i, j)
        .mul(&inv(a.get(i, k)))
        .mul(&inv(a.get(k, j)))
}

/// First two-edge path on which the deficiencies of M and N differ, with
/// both values. Inputs must be positive upper of equal dimension and kind.
pub fn first_deficiency_mismatch(m: &Matrix, n: &Matrix) -> Option<(Path, Value, Value)> {
    let dim = m.n();
    for i in 0..dim {
        for k in i..dim {
            for j in k..dim {
                let dm = two_edge_def(m, i, k, j);
                let dn = two_edge_def(n, i, k, j);
                if dm != dn {
                    let path = Path::new(vec![i + 1, k + 1, j + 1]).unwrap();
                    return Some((path, dm, dn));
                }
            }
        }
    }
    None
}

fn nondecreasing_sequences(n: usize, len: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(len);
    fn rec(n: usize, len: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == len {
            out.push(cur.clone());
            return;
        }
        for v in start..=n {
            cur.push(v);
            rec(n, len, v, cur, out);
            cur.pop();
        }
    }
    rec(n, len, 1, &mut cur, &mut out);
    out
}

/// Whether M and N have equal deficiencies in the requested family of
/// paths. The three modes agree on every input (asserted when AllPaths is
/// requested).
pub fn deficiency_equal(m: &Matrix, n: &Matrix, mode: DeficiencyMode) -> Result<bool, Error> {
    if m.n() != n.n() || m.kind() != n.kind() {
        return Err(Error::Shape("dimension or kind mismatch".into()));
    }
    if !m.flags().positive_upper || !n.flags().positive_upper {
        return Err(Error::Shape(
            "deficiency comparison needs positive upper matrices".into(),
        ));
    }
    let dim = m.n();
    let length2 = first_deficiency_mismatch(m, n).is_none();
    match mode {
        DeficiencyMode::Length2 => Ok(length2),
        DeficiencyMode::OneAnchored => {
            let mut anchored = true;
            'outer: for i in 0..dim {
                for j in i..dim {
                    if two_edge_def(m, 0, i, j) != two_edge_def(n, 0, i, j) {
                        anchored = false;
                        break 'outer;
                    }
                }
            }
            Ok(anchored)
        }
        DeficiencyMode::AllPaths => {
            if dim > 10 {
                return Err(Error::SizeCap(format!(
                    "exhaustive path comparison is capped at dimension 10, got {dim}"
                )));
            }
            let mut all = true;
            'walk: for len in 2..=dim + 1 {
                for verts in nondecreasing_sequences(dim, len) {
                    let path = Path::new(verts).unwrap();
                    if deficiency(m, &path)? != deficiency(n, &path)? {
                        all = false;
                        break 'walk;
                    }
                }
            }
            let anchored = deficiency_equal(m, n, DeficiencyMode::OneAnchored)?;
            assert_eq!(all, length2, "path-family equivalence broken");
            assert_eq!(all, anchored, "path-family equivalence broken");
            Ok(all)
        }
    }
}

#[derive(Debug, Clone)]
pub struct DRelation {
    pub related: bool,
    /// Diagonal G with G A G^{-1} = B, present when related.
    pub conjugator: Option<Matrix>,
    /// Separating two-edge path with the two deficiency values, present
    /// when not related.
    pub mismatch: Option<(Path, Value, Value)>,
}

/// D-relatedness of unitriangular positive matrices inside the ambient
/// full-diagonal triangular semigroup: equivalent to agreement of all
/// two-edge deficiencies, and witnessed by a diagonal conjugator with
/// G_{i,i} = A_{1,i} B_{1,i}^{-1}.
pub fn d_related_unitriangular(a: &Matrix, b: &Matrix) -> Result<DRelation, Error> {
    if a.n() != b.n() || a.kind() != b.kind() {
        return Err(Error::Shape("dimension or kind mismatch".into()));
    }
    let pos_uni = |m: &Matrix| m.flags().unitriangular && m.flags().positive_upper;
    if !pos_uni(a) || !pos_uni(b) {
        return Err(Error::Shape(
            "conjugacy test needs unitriangular positive matrices".into(),
        ));
    }
    if let Some((path, da, db)) = first_deficiency_mismatch(a, b) {
        return Ok(DRelation {
            related: false,
            conjugator: None,
            mismatch: Some((path, da, db)),
        });
    }
    let n = a.n();
    let kind = a.kind();
    let g: Vec<Value> = (0..n)
        .map(|i| a.get(0, i).mul(&b.get(0, i).inv().expect("positive entry")))
        .collect();
    let conj = Matrix::from_fn(n, kind, |i, j| {
        g[i].mul(a.get(i, j)).mul(&g[j].inv().expect("nonzero"))
    });
    assert_eq!(
        conj, *b,
        "internal error: deficiency-matched pair failed conjugation"
    );
    let gm = Matrix::from_fn(n, kind, |i, j| {
        if i == j {
            g[i].clone()
        } else {
            Value::zero(kind)
        }
    });
    Ok(DRelation {
        related: true,
        conjugator: Some(gm),
        mismatch: None,
    })
}

/// Tight simple two-edge paths of an idempotent, closed under the
/// propagation rules that idempotency forces.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TightnessPattern {
    n: usize,
    tight: BTreeSet<(usize, usize, usize)>,
}

/// All 1-based triples i < k < j in [n].
pub fn simple_triples(n: usize) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for i in 1..=n {
        for k in i + 1..=n {
            for j in k + 1..=n {
                out.push((i, k, j));
            }
        }
    }
    out
}

fn tightness_closure(
    n: usize,
    set: &BTreeSet<(usize, usize, usize)>,
) -> BTreeSet<(usize, usize, usize)> {
    let mut cur = set.clone();
    loop {
        let mut next = cur.clone();
        for i in 1..=n {
            for u in i + 1..=n {
                for v in u + 1..=n {
                    for j in v + 1..=n {
                        let iuv = (i, u, v);
                        let iuj = (i, u, j);
                        let ivj = (i, v, j);
                        let uvj = (u, v, j);
                        // Splitting an outer tight pair tightens the inner
                        // legs, in both composition orders.
                        if cur.contains(&iuj) && cur.contains(&uvj) {
                            next.insert(ivj);
                            next.insert(iuv);
                        }
                        if cur.contains(&iuv) && cur.contains(&ivj) {
                            next.insert(iuj);
                            next.insert(uvj);
                        }
                        // Any three of the four paths on a quadruple force
                        // the fourth.
                        let quad = [iuv, iuj, ivj, uvj];
                        let present = quad.iter().filter(|p| cur.contains(*p)).count();
                        if present == 3 {
                            for p in quad {
                                next.insert(p);
                            }
                        }
                    }
                }
            }
        }
        if next == cur {
            return cur;
        }
        cur = next;
    }
}

impl TightnessPattern {
    /// Validates the requested tight set against the propagation rules;
    /// a set that implies further tight paths is unrealizable as stated.
    pub fn from_set(n: usize, tight: BTreeSet<(usize, usize, usize)>) -> Result<Self, Error> {
        for &(i, k, j) in &tight {
            if !(1 <= i && i < k && k < j && j <= n) {
                return Err(Error::Invalid(format!(
                    "({i},{k},{j}) is not a simple two-edge path in [{n}]"
                )));
            }
        }
        let closure = tightness_closure(n, &tight);
        if closure != tight {
            let implied: Vec<String> = closure
                .difference(&tight)
                .map(|(i, k, j)| format!("{i}->{k}->{j}"))
                .collect();
            return Err(Error::UnrealizablePattern(format!(
                "tightness in the given paths forces tightness in {}",
                implied.join(", ")
            )));
        }
        Ok(TightnessPattern { n, tight })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// 1-based simple triple lookup.
    pub fn is_tight(&self, i: usize, k: usize, j: usize) -> bool {
        self.tight.contains(&(i, k, j))
    }

    pub fn tight_set(&self) -> &BTreeSet<(usize, usize, usize)> {
        &self.tight
    }

    pub fn all_tight(&self) -> bool {
        self.tight.len() == simple_triples(self.n).len()
    }

    pub fn all_loose(&self) -> bool {
        self.tight.is_empty()
    }
}

/// Tightness pattern of an idempotent, read off from its two-edge
/// deficiencies. Errors if E is not idempotent or a needed entry is zero.
pub fn tightness_pattern(e: &Matrix) -> Result<TightnessPattern, Error> {
    if !is_idempotent(e) {
        return Err(Error::Invalid("tightness is defined for idempotents".into()));
    }
    let n = e.n();
    let one = Value::one(e.kind());
    let mut tight = BTreeSet::new();
    for (i, k, j) in simple_triples(n) {
        let d = deficiency(e, &Path::new(vec![i, k, j]).unwrap())?;
        assert!(
            one.leq(&d),
            "idempotent with deficiency below the identity at {i}->{k}->{j}"
        );
        if d.is_one() {
            tight.insert((i, k, j));
        }
    }
    let closure = tightness_closure(n, &tight);
    assert_eq!(closure, tight, "computed tightness pattern not closed");
    Ok(TightnessPattern { n, tight })
}

/// Unitriangular idempotent whose span entries are exactly the products of
/// the given superdiagonal entries; tight in every path.
pub fn tight_all_idempotent(kind: Kind, superdiag: &[Value]) -> Result<Matrix, Error> {
    if superdiag.iter().any(Value::is_zero) {
        return Err(Error::Invalid("superdiagonal entries must be nonzero".into()));
    }
    let n = superdiag.len() + 1;
    let e = Matrix::from_fn(n, kind, |i, j| {
        if i > j {
            Value::zero(kind)
        } else {
            let mut acc = Value::one(kind);
            for s in superdiag.iter().take(j).skip(i) {
                acc = acc.mul(s);
            }
            acc
        }
    });
    assert!(is_idempotent(&e), "superdiagonal products not idempotent");
    Ok(e)
}

/// Idempotent realizing a requested tightness pattern at n in {3,4}:
/// superdiagonal entries are taken as given, and each span entry is the
/// corresponding product loosened by a power of g on the requested paths.
pub fn idempotent_with_pattern(
    pattern: &TightnessPattern,
    superdiag: &[Value],
    g: &Value,
) -> Result<Matrix, Error> {
    let n = pattern.n();
    if n != 3 && n != 4 {
        return Err(Error::Unsupported(format!(
            "pattern-directed idempotents are built for dimensions 3 and 4, got {n}"
        )));
    }
    if superdiag.len() != n - 1 || superdiag.iter().any(Value::is_zero) {
        return Err(Error::Invalid(format!(
            "need {} nonzero superdiagonal entries",
            n - 1
        )));
    }
    let kind = superdiag[0].kind();
    if !pattern.all_tight() && !Value::one(kind).cmp_order(g).is_lt() {
        return Err(Error::Invalid(
            "loosening a path needs a group element strictly above the identity".into(),
        ));
    }
    let prod = |lo: usize, hi: usize| {
        let mut acc = Value::one(kind);
        for s in superdiag.iter().take(hi).skip(lo) {
            acc = acc.mul(s);
        }
        acc
    };
    let e = if n == 3 {
        let x = if pattern.is_tight(1, 2, 3) { 0 } else { 1 };
        let mut e = tight_all_idempotent(kind, superdiag)?;
        e = e.with_entry(0, 2, prod(0, 2).mul(&g.pow(x)));
        e
    } else {
        // Exponents for the four simple paths; the two routes from 1 to 4
        // must agree, which pins x124 + x234 = x123 + x134.
        let want = |p: (usize, usize, usize)| !pattern.is_tight(p.0, p.1, p.2);
        let mut found = None;
        'search: for x123 in 0..3_i32 {
            for x124 in 0..3_i32 {
                for x134 in 0..3_i32 {
                    for x234 in 0..3_i32 {
                        if (x123 > 0) == want((1, 2, 3))
                            && (x124 > 0) == want((1, 2, 4))
                            && (x134 > 0) == want((1, 3, 4))
                            && (x234 > 0) == want((2, 3, 4))
                            && x124 + x234 == x123 + x134
                        {
                            found = Some((x123, x124, x134, x234));
                            break 'search;
                        }
                    }
                }
            }
        }
        let (x123, x124, _x134, x234) = found.expect("realizable pattern has exponents");
        let mut e = tight_all_idempotent(kind, superdiag)?;
        e = e.with_entry(0, 2, prod(0, 2).mul(&g.pow(x123)));
        e = e.with_entry(1, 3, prod(1, 3).mul(&g.pow(x234)));
        e = e.with_entry(0, 3, prod(0, 3).mul(&g.pow(x234 + x124)));
        e
    };
    assert!(is_idempotent(&e), "pattern construction lost idempotency");
    let achieved = tightness_pattern(&e)?;
    assert_eq!(achieved, *pattern, "pattern construction missed the target");
    Ok(e)
}

/// Membership in the order-monotone triangular family: entries bounded by
/// the identity, rows nondecreasing to the right, columns nonincreasing
/// downward, diagonal nonzero.
pub fn is_bounded_monotone(a: &Matrix) -> bool {
    let n = a.n();
    let one = Value::one(a.kind());
    if !a.flags().full_diagonal {
        return false;
    }
    for i in 0..n {
        for j in i..n {
            if !a.get(i, j).leq(&one) {
                return false;
            }
            if j + 1 < n && !a.get(i, j).leq(a.get(i, j + 1)) {
                return false;
            }
            if i + 1 <= j && i + 1 < n && !a.get(i + 1, j).leq(a.get(i, j)) {
                return false;
            }
        }
    }
    true
}

/// Random member of the order-monotone family: each entry is the join of a
/// raw sub-identity sample over the lower-left region it dominates.
pub fn sample_bounded_monotone(rng: &mut ChaCha8Rng, m: usize, dist: &EntryDist) -> Matrix {
    assert!(m >= 1);
    let raw = Matrix::from_fn(m, dist.kind, |i, j| {
        if i > j {
            Value::zero(dist.kind)
        } else {
            sample_nonzero_leq_one(rng, dist)
        }
    });
    let g = Matrix::from_fn(m, dist.kind, |i, j| {
        if i > j {
            return Value::zero(dist.kind);
        }
        let mut acc = Value::zero(dist.kind);
        for k in i..m {
            for l in k..=j.min(m - 1) {
                acc = acc.add(raw.get(k, l));
            }
        }
        acc
    });
    assert!(is_bounded_monotone(&g));
    g
}

/// Border a matrix with an all-identity first row and last column,
/// shifting it into the interior of a matrix two sizes larger.
pub fn bordered(g: &Matrix) -> Matrix {
    let m = g.n();
    let n = m + 2;
    let kind = g.kind();
    Matrix::from_fn(n, kind, |i, j| {
        if i > j {
            Value::zero(kind)
        } else if i == 0 || j == n - 1 {
            Value::one(kind)
        } else {
            g.get(i - 1, j - 1).clone()
        }
    })
}

/// Structural case of an extended-H class at n in {3,4}, keyed by the
/// tight simple paths of the idempotent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum HtCase {
    AllLoose3,
    AllTight3,
    AllLoose4,
    Tight123,
    Tight124,
    Tight134,
    Tight234,
    Tight123And124,
    Tight123And234,
    Tight124And134,
    Tight134And234,
    AllTight4,
}

#[derive(Debug, Clone, Serialize)]
pub struct HtClassDescriptor {
    pub case: HtCase,
    pub pattern: TightnessPattern,
    /// Whether the extended class collapses to the maximal subgroup.
    pub class_is_group: bool,
    /// Free parameters of a member beyond the global scalar.
    pub constraints: &'static str,
}

pub fn ht_class_descriptor(e: &Matrix) -> Result<HtClassDescriptor, Error> {
    let n = e.n();
    if n != 3 && n != 4 {
        return Err(Error::Unsupported(format!(
            "extended-H class tables cover dimensions 3 and 4, got {n}"
        )));
    }
    if !is_idempotent(e) {
        return Err(Error::Invalid("class descriptor needs an idempotent".into()));
    }
    if !e.flags().positive_upper {
        return Err(Error::Unsupported(
            "class tables need nonzero entries on and above the diagonal".into(),
        ));
    }
    let pattern = tightness_pattern(e)?;
    let case = if n == 3 {
        if pattern.all_tight() {
            HtCase::AllTight3
        } else {
            HtCase::AllLoose3
        }
    } else {
        let key: Vec<(usize, usize, usize)> = pattern.tight_set().iter().copied().collect();
        match key.as_slice() {
            [] => HtCase::AllLoose4,
            [(1, 2, 3)] => HtCase::Tight123,
            [(1, 2, 4)] => HtCase::Tight124,
            [(1, 3, 4)] => HtCase::Tight134,
            [(2, 3, 4)] => HtCase::Tight234,
            [(1, 2, 3), (1, 2, 4)] => HtCase::Tight123And124,
            [(1, 2, 3), (2, 3, 4)] => HtCase::Tight123And234,
            [(1, 2, 4), (1, 3, 4)] => HtCase::Tight124And134,
            [(1, 3, 4), (2, 3, 4)] => HtCase::Tight134And234,
            [(1, 2, 3), (1, 2, 4), (1, 3, 4), (2, 3, 4)] => HtCase::AllTight4,
            other => unreachable!("closure admitted an unrealizable tight set {other:?}"),
        }
    };
    let (class_is_group, constraints) = match case {
        HtCase::AllLoose3 => (true, "scalar only"),
        HtCase::AllTight3 => (false, "mu <= 1 scaling the middle diagonal entry"),
        HtCase::AllLoose4
        | HtCase::Tight123
        | HtCase::Tight124
        | HtCase::Tight134
        | HtCase::Tight234
        | HtCase::Tight123And234 => (true, "scalar only"),
        HtCase::Tight134And234 => (false, "mu <= 1 scaling the (3,3) entry"),
        HtCase::Tight123And124 => (false, "mu <= 1 scaling the (2,2) entry"),
        HtCase::Tight124And134 => (false, "mu <= 1 scaling (2,2), (2,3) and (3,3) together"),
        HtCase::AllTight4 => (
            false,
            "alpha at (2,2), beta at (2,3), gamma at (3,3) with alpha v gamma <= beta <= 1",
        ),
    };
    Ok(HtClassDescriptor {
        case,
        pattern,
        class_is_group,
        constraints,
    })
}

fn parametric_member(e: &Matrix, a: &Matrix, case: HtCase) -> bool {
    let n = e.n();
    let kind = e.kind();
    let one = Value::one(kind);
    let lambda = a.get(0, 0).clone();
    if lambda.is_zero() {
        return false;
    }
    let linv = lambda.inv().expect("nonzero scalar");
    if *a.get(n - 1, n - 1) != lambda {
        return false;
    }
    // Off-diagonal positions outside the free block must scale E exactly.
    let fixed: &[(usize, usize)] = if n == 3 {
        &[(0, 1), (0, 2), (1, 2)]
    } else {
        &[(0, 1), (0, 2), (0, 3), (1, 3), (2, 3)]
    };
    for &(i, j) in fixed {
        if *a.get(i, j) != lambda.mul(e.get(i, j)) {
            return false;
        }
    }
    // Below the diagonal both sides are zero for members; reject strays.
    for i in 0..n {
        for j in 0..i {
            if !a.get(i, j).is_zero() {
                return false;
            }
        }
    }
    if n == 3 {
        let mu = linv.mul(a.get(1, 1));
        return match case {
            HtCase::AllLoose3 => mu.is_one(),
            HtCase::AllTight3 => mu.leq(&one),
            _ => unreachable!(),
        };
    }
    let alpha = linv.mul(a.get(1, 1));
    let gamma = linv.mul(a.get(2, 2));
    let beta = linv
        .mul(a.get(1, 2))
        .mul(&e.get(1, 2).inv().expect("positive entry"));
    match case {
        HtCase::AllLoose4
        | HtCase::Tight123
        | HtCase::Tight124
        | HtCase::Tight134
        | HtCase::Tight234
        | HtCase::Tight123And234 => alpha.is_one() && beta.is_one() && gamma.is_one(),
        HtCase::Tight134And234 => alpha.is_one() && beta.is_one() && gamma.leq(&one),
        HtCase::Tight123And124 => gamma.is_one() && beta.is_one() && alpha.leq(&one),
        HtCase::Tight124And134 => alpha == beta && beta == gamma && gamma.leq(&one),
        HtCase::AllTight4 => alpha.leq(&beta) && gamma.leq(&beta) && beta.leq(&one),
        _ => unreachable!(),
    }
}

/// Membership of A in the extended-H class of E for n in {3,4}, evaluated
/// two independent ways: by the case table's parameter constraints, and by
/// the definitional test that the canonical left and right identities of A
/// are both E. The routes must agree.
pub fn ht_membership(e: &Matrix, a: &Matrix) -> Result<bool, Error> {
    let descriptor = ht_class_descriptor(e)?;
    if a.n() != e.n() || a.kind() != e.kind() {
        return Err(Error::Shape("dimension or kind mismatch".into()));
    }
    let definitional = a.flags().upper
        && a.flags().full_diagonal
        && plus_of(a) == *e
        && star_of(a).expect("upper input") == *e;
    let parametric = a.flags().upper
        && a.flags().full_diagonal
        && parametric_member(e, a, descriptor.case);
    assert_eq!(
        definitional, parametric,
        "internal error: membership routes disagree for case {:?}",
        descriptor.case
    );
    Ok(definitional)
}

/// Random member of the extended-H class of E. Supports the tabulated
/// dimensions 3 and 4 for every pattern, and tight-all or loose-all
/// idempotents in any dimension >= 2.
pub fn ht_member_sample(e: &Matrix, rng: &mut ChaCha8Rng) -> Result<Matrix, Error> {
    let n = e.n();
    let kind = e.kind();
    let dist = match kind {
        Kind::Boolean => EntryDist::boolean(0.0),
        Kind::MaxPlusRational => EntryDist::max_plus(),
    };
    let lambda = sample_nonzero(rng, &dist);
    let member = if n == 3 || n == 4 {
        let descriptor = ht_class_descriptor(e)?;
        let mut a = e.scale(&lambda);
        match descriptor.case {
            HtCase::AllLoose3 | HtCase::AllLoose4 => {}
            HtCase::Tight123
            | HtCase::Tight124
            | HtCase::Tight134
            | HtCase::Tight234
            | HtCase::Tight123And234 => {}
            HtCase::AllTight3 => {
                let mu = sample_nonzero_leq_one(rng, &dist);
                a = a.with_entry(1, 1, lambda.mul(&mu));
            }
            HtCase::Tight134And234 => {
                let mu = sample_nonzero_leq_one(rng, &dist);
                a = a.with_entry(2, 2, lambda.mul(&mu));
            }
            HtCase::Tight123And124 => {
                let mu = sample_nonzero_leq_one(rng, &dist);
                a = a.with_entry(1, 1, lambda.mul(&mu));
            }
            HtCase::Tight124And134 => {
                let mu = sample_nonzero_leq_one(rng, &dist);
                a = a.with_entry(1, 1, lambda.mul(&mu));
                a = a.with_entry(2, 2, lambda.mul(&mu));
                a = a.with_entry(1, 2, lambda.mul(&mu).mul(e.get(1, 2)));
            }
            HtCase::AllTight4 => {
                let beta = sample_nonzero_leq_one(rng, &dist);
                let alpha = beta.mul(&sample_nonzero_leq_one(rng, &dist));
                let gamma = beta.mul(&sample_nonzero_leq_one(rng, &dist));
                a = a.with_entry(1, 1, lambda.mul(&alpha));
                a = a.with_entry(2, 2, lambda.mul(&gamma));
                a = a.with_entry(1, 2, lambda.mul(&beta).mul(e.get(1, 2)));
            }
        }
        assert!(
            ht_membership(e, &a)?,
            "internal error: sampled member rejected"
        );
        a
    } else {
        let pattern = tightness_pattern(e)?;
        let a = if pattern.all_tight() && n >= 3 {
            let g = sample_bounded_monotone(rng, n - 2, &dist);
            e.hadamard(&bordered(&g)).scale(&lambda)
        } else if pattern.all_loose() || n == 2 {
            e.scale(&lambda)
        } else {
            return Err(Error::Unsupported(format!(
                "membership generators beyond dimension 4 cover only the \
                 tight-all and loose-all patterns, got a mixed pattern at {n}"
            )));
        };
        assert_eq!(plus_of(&a), *e, "internal error: sampled member rejected");
        assert_eq!(
            star_of(&a).expect("upper input"),
            *e,
            "internal error: sampled member rejected"
        );
        a
    };
    Ok(member)
}

#[derive(Debug, Clone)]
pub struct HtClosureWitness {
    pub a: Matrix,
    pub b: Matrix,
    pub product: Matrix,
    pub product_plus: Matrix,
    pub product_star: Matrix,
}

#[derive(Debug, Clone)]
pub struct HtClosureReport {
    pub n: usize,
    pub pairs_tested: usize,
    pub closed: bool,
    pub witness: Option<HtClosureWitness>,
}

impl HtClosureReport {
    pub fn to_json(&self) -> String {
        let witness = self.witness.as_ref().map(|w| {
            json!({
                "a": w.a.to_text(),
                "b": w.b.to_text(),
                "product": w.product.to_text(),
                "product_plus": w.product_plus.to_text(),
                "product_star": w.product_star.to_text(),
            })
        });
        serde_json::to_string_pretty(&json!({
            "n": self.n,
            "pairs_tested": self.pairs_tested,
            "closed": self.closed,
            "witness": witness,
        }))
        .expect("report serializes")
    }
}

fn definitional_member(e: &Matrix, a: &Matrix) -> bool {
    a.flags().upper
        && a.flags().full_diagonal
        && plus_of(a) == *e
        && star_of(a).expect("upper input") == *e
}

fn closure_over_pairs(e: &Matrix, members: &[Matrix]) -> HtClosureReport {
    let mut pairs = 0;
    for a in members {
        assert!(
            definitional_member(e, a),
            "closure check given a non-member"
        );
    }
    for a in members {
        for b in members {
            pairs += 1;
            let product = a.mul(b);
            if !definitional_member(e, &product) {
                let product_plus = plus_of(&product);
                let product_star = star_of(&product).expect("upper product");
                return HtClosureReport {
                    n: e.n(),
                    pairs_tested: pairs,
                    closed: false,
                    witness: Some(HtClosureWitness {
                        a: a.clone(),
                        b: b.clone(),
                        product,
                        product_plus,
                        product_star,
                    }),
                };
            }
        }
    }
    HtClosureReport {
        n: e.n(),
        pairs_tested: pairs,
        closed: true,
        witness: None,
    }
}

/// Product-closure probe of the extended-H class of E on sampled members.
pub fn ht_closure_check(e: &Matrix, samples: usize, seed: u64) -> Result<HtClosureReport, Error> {
    let mut rng = rng_from_seed(seed);
    let mut members = Vec::with_capacity(samples);
    for _ in 0..samples {
        members.push(ht_member_sample(e, &mut rng)?);
    }
    Ok(closure_over_pairs(e, &members))
}

/// Product-closure probe on explicitly provided members; each member is
/// first verified against the definitional test.
pub fn ht_closure_check_with(e: &Matrix, members: &[Matrix]) -> Result<HtClosureReport, Error> {
    if !is_idempotent(e) {
        return Err(Error::Invalid("closure check needs an idempotent".into()));
    }
    Ok(closure_over_pairs(e, members))
}

fn raw_theta(a: &Matrix) -> Matrix {
    let n = a.n();
    let kind = a.kind();
    Matrix::from_fn(n + 1, kind, |i, j| {
        if i < n && j < n {
            a.get(i, j).clone()
        } else if i < n && j == n {
            a.get(i, n - 1).clone()
        } else if i == n && j == n {
            Value::one(kind)
        } else {
            Value::zero(kind)
        }
    })
}

/// Corner embedding: duplicate the last column and adjoin a new unit
/// bottom-right corner. Requires a triangular matrix with unit corner
/// entries; preserves products and both canonical idempotents.
pub fn theta_embed(a: &Matrix) -> Result<Matrix, Error> {
    if !a.flags().upper || !a.flags().full_diagonal {
        return Err(Error::Shape(
            "corner embedding is defined on full-diagonal triangular matrices".into(),
        ));
    }
    let n = a.n();
    if !a.get(0, 0).is_one() || !a.get(n - 1, n - 1).is_one() {
        return Err(Error::Invalid(
            "corner embedding needs unit corner entries".into(),
        ));
    }
    let t = raw_theta(a);
    assert_eq!(
        plus_of(&t),
        raw_theta(&plus_of(a)),
        "embedding failed to commute with the left identity"
    );
    assert_eq!(
        star_of(&t).expect("upper image"),
        raw_theta(&star_of(a).expect("upper input")),
        "embedding failed to commute with the right identity"
    );
    Ok(t)
}

#[derive(Debug, Clone)]
pub struct NoncommuteWitness {
    pub n: usize,
    pub g: Value,
    pub a: Matrix,
    pub plus: Matrix,
    pub star: Matrix,
    pub separating_path: Path,
    pub plus_deficiency: Value,
    pub star_deficiency: Value,
    pub d_related: bool,
}

impl NoncommuteWitness {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&json!({
            "claim": "the canonical left and right idempotents of A lie in \
                      different D-classes, so the two extended relations do \
                      not commute",
            "inputs": {
                "n": self.n,
                "g": self.g.token(),
                "a": self.a.to_text(),
            },
            "certificates": {
                "plus": self.plus.to_text(),
                "star": self.star.to_text(),
                "separating_path": self.separating_path.to_string(),
                "plus_deficiency": self.plus_deficiency.token(),
                "star_deficiency": self.star_deficiency.token(),
            },
            "verdict": if self.d_related { "refuted" } else { "certified" },
        }))
        .expect("witness serializes")
    }
}

/// Witness that the extended R- and L-relations fail to commute at
/// dimension n >= 4: a unitriangular A whose canonical idempotents have
/// different deficiencies on 1->2->4, hence are not D-related.
pub fn rtilde_noncommute_witness(n: usize, g: &Value) -> Result<NoncommuteWitness, Error> {
    if n < 4 {
        return Err(Error::Invalid(
            "the commutation counterexample needs dimension at least 4".into(),
        ));
    }
    let kind = g.kind();
    let one = Value::one(kind);
    if !one.cmp_order(g).is_lt() {
        return Err(Error::Invalid(
            "need a group element strictly above the identity".into(),
        ));
    }
    let zero = Value::zero(kind);
    let g2 = g.mul(g);
    let rows = vec![
        vec![one.clone(), g.clone(), one.clone(), g2.clone()],
        vec![zero.clone(), one.clone(), g.clone(), g.clone()],
        vec![zero.clone(), zero.clone(), one.clone(), one.clone()],
        vec![zero.clone(), zero.clone(), zero.clone(), one.clone()],
    ];
    let mut a = Matrix::from_rows(kind, rows);
    for _ in 4..n {
        a = theta_embed(&a)?;
    }
    let plus = plus_of(&a);
    let star = star_of(&a)?;
    let path = Path::new(vec![1, 2, 4]).unwrap();
    let plus_def = deficiency(&plus, &path)?;
    let star_def = deficiency(&star, &path)?;
    assert_eq!(plus_def, g2, "left-identity deficiency drifted");
    assert!(star_def.is_one(), "right-identity deficiency drifted");
    let rel = d_related_unitriangular(&plus, &star)?;
    assert!(!rel.related, "witness idempotents unexpectedly conjugate");
    Ok(NoncommuteWitness {
        n,
        g: g.clone(),
        a,
        plus,
        star,
        separating_path: path,
        plus_deficiency: plus_def,
        star_deficiency: star_def,
        d_related: rel.related,
    })
}

#[derive(Debug, Clone)]
pub struct LeftCongReport {
    pub r_related: bool,
    pub trials: usize,
    /// In the related branch, every sampled C kept the left identities
    /// equal (asserted).
    pub sampled_agree: Option<bool>,
    /// In the unrelated branch, a C with different left identities for CA
    /// and CB.
    pub separator: Option<Matrix>,
    pub inconclusive: bool,
}

fn separated_by(c: &Matrix, a: &Matrix, b: &Matrix) -> bool {
    plus_of(&c.mul(a)) != plus_of(&c.mul(b))
}

/// The discriminating left factor from the row-rescaling construction:
/// all rows of E except row i, which is damped by gamma_{i,l}^{-1} up to
/// column l, nudged back by alpha_{i,l} at l, and amplified by running
/// gamma products beyond l.
fn leftcong_row_separator(
    e: &Matrix,
    alpha: &Matrix,
    gamma: &Matrix,
    i: usize,
    l: usize,
) -> Matrix {
    let n = e.n();
    let kind = e.kind();
    let ginv = gamma.get(i, l).inv().expect("profile entries are nonzero");
    Matrix::from_fn(n, kind, |r, j| {
        if r != i {
            return e.get(r, j).clone();
        }
        if j < i {
            return Value::zero(kind);
        }
        if j < l {
            e.get(i, j).mul(&ginv)
        } else if j == l {
            e.get(i, l).mul(&ginv).mul(alpha.get(i, l))
        } else {
            let mut acc = e.get(i, j).clone();
            for t in l..=j {
                acc = acc.mul(gamma.get(i, t));
            }
            acc
        }
    })
}

/// Probe of the left-congruence failure: CA and CB share their left
/// identity for every C exactly when A and B are right-scalings of each
/// other. For unrelated pairs the probe searches for a separating C,
/// starting from the entrywise meet of the two left identities and the
/// row-rescaling construction.
pub fn leftcong_check(
    a: &Matrix,
    b: &Matrix,
    trials: usize,
    seed: u64,
) -> Result<LeftCongReport, Error> {
    if a.n() != b.n() || a.kind() != b.kind() {
        return Err(Error::Shape("dimension or kind mismatch".into()));
    }
    if !a.flags().positive_upper || !b.flags().positive_upper {
        return Err(Error::Shape(
            "left-congruence probe needs positive upper matrices".into(),
        ));
    }
    let n = a.n();
    let kind = a.kind();
    let related = crate::factorization::normal_form(a)?.rnorm
        == crate::factorization::normal_form(b)?.rnorm;
    let dist = match kind {
        Kind::Boolean => EntryDist::boolean(0.3),
        Kind::MaxPlusRational => EntryDist::max_plus_with_zeros(0.3),
    };
    let mut rng = rng_from_seed(seed);
    if related {
        for _ in 0..trials {
            let c = sample_shaped(&mut rng, n, crate::matrix::Shape::FullDiagonal, &dist);
            assert!(
                !separated_by(&c, a, b),
                "right-scaled pair separated by a left factor"
            );
        }
        return Ok(LeftCongReport {
            r_related: true,
            trials,
            sampled_agree: Some(true),
            separator: None,
            inconclusive: false,
        });
    }
    let pa = plus_of(a);
    let pb = plus_of(b);
    let mut found = None;
    if pa != pb {
        let c0 = pa.meet_entrywise(&pb);
        if separated_by(&c0, a, b) {
            found = Some(c0);
        }
    } else {
        let e = pa;
        let alpha = alpha_beta_decompose(a, &e)?
            .alpha
            .expect("plus equality gives a profile");
        let gamma = alpha_beta_decompose(b, &e)?
            .alpha
            .expect("plus equality gives a profile");
        'rows: for i in 0..n {
            // Largest mismatch in the row, so later columns agree.
            for l in (i + 1..n.saturating_sub(1)).rev() {
                if alpha.get(i, l) == gamma.get(i, l) {
                    continue;
                }
                let c = if alpha.get(i, l).leq(gamma.get(i, l)) {
                    leftcong_row_separator(&e, &alpha, &gamma, i, l)
                } else {
                    leftcong_row_separator(&e, &gamma, &alpha, i, l)
                };
                if separated_by(&c, a, b) {
                    found = Some(c);
                }
                break 'rows;
            }
        }
    }
    if found.is_none() {
        for _ in 0..trials {
            let c = sample_shaped(&mut rng, n, crate::matrix::Shape::FullDiagonal, &dist);
            if separated_by(&c, a, b) {
                found = Some(c);
                break;
            }
        }
    }
    let inconclusive = found.is_none();
    Ok(LeftCongReport {
        r_related: false,
        trials,
        sampled_agree: None,
        separator: found,
        inconclusive,
    })
}

/// Separating multiplier pair for distinct unitriangular matrices: X, Y
/// with XA = YA but XB != YB (or the reverse), certifying that A and B are
/// not kernel-equivalent under left multiplication. Returns a verified
/// pair or nothing.
pub fn uni_rstar_separator(a: &Matrix, b: &Matrix) -> Option<(Matrix, Matrix)> {
    if a == b || a.n() != b.n() || a.kind() != b.kind() {
        return None;
    }
    if !a.flags().unitriangular || !b.flags().unitriangular {
        return None;
    }
    let n = a.n();
    let kind = a.kind();
    let id = Matrix::identity(n, kind);
    let verified = |x: &Matrix, y: &Matrix| {
        let on_a = x.mul(a) == y.mul(a);
        let on_b = x.mul(b) == y.mul(b);
        on_a != on_b
    };
    // A fixer of one side that moves the other separates immediately.
    for fixer in [plus_of(a), plus_of(b)] {
        if verified(&fixer, &id) {
            return Some((fixer, id));
        }
    }
    // Equal-fixer pairs: bump one entry where the matrices differ and
    // cover the bumped row's image by a residual row, built on each side.
    let mut candidates = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if a.get(i, j) == b.get(i, j) {
                continue;
            }
            let (lo, hi) = if a.get(i, j).leq(b.get(i, j)) {
                (a, b)
            } else {
                (b, a)
            };
            let bump = hi.get(i, j).clone();
            let x = id.with_entry(i, j, bump);
            let xh = x.mul(hi);
            // Largest y with y * hi <= (x * hi)_i, row-wise; its product
            // reaches the target because the bump survives in it.
            let mut y = id.clone();
            for l in i + 1..n {
                let mut best: Option<Value> = None;
                for m in l..n {
                    if hi.get(l, m).is_zero() {
                        continue;
                    }
                    let q = xh.get(i, m).mul(&hi.get(l, m).inv().expect("nonzero"));
                    best = Some(match best {
                        None => q,
                        Some(cur) => cur.meet(&q),
                    });
                }
                if let Some(v) = best {
                    y = y.with_entry(i, l, v);
                }
            }
            candidates.push((x.clone(), y));
            // Direct cover: place each excess column value on the
            // diagonal of its own column.
            let mut yd = id.clone();
            for m in i + 1..n {
                if xh.get(i, m) != hi.get(i, m) {
                    yd = yd.with_entry(i, m, xh.get(i, m).clone());
                }
            }
            candidates.push((x, yd));
            let _ = lo;
        }
    }
    candidates.into_iter().find(|(x, y)| verified(x, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::{derive_seed, sample_unitriangular_positive};

    fn mp(entries: &[&[i64]]) -> Matrix {
        Matrix::from_rows(
            Kind::MaxPlusRational,
            entries
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|&v| {
                            if v == i64::MIN {
                                Value::zero(Kind::MaxPlusRational)
                            } else {
                                Value::int(v)
                            }
                        })
                        .collect()
                })
                .collect(),
        )
    }

    const Z: i64 = i64::MIN;

    fn noncommute_base(g: i64) -> Matrix {
        mp(&[
            &[0, g, 0, 2 * g],
            &[Z, 0, g, g],
            &[Z, Z, 0, 0],
            &[Z, Z, Z, 0],
        ])
    }

    #[test]
    fn path_validation() {
        assert!(Path::new(vec![1]).is_err());
        assert!(Path::new(vec![2, 1]).is_err());
        assert!(Path::new(vec![0, 1]).is_err());
        let p = Path::new(vec![1, 2, 2, 4]).unwrap();
        assert!(!p.is_simple());
        assert_eq!(p.edge_count(), 3);
        assert_eq!(p.to_string(), "1->2->2->4");
        assert!(Path::new(vec![1, 3, 4]).unwrap().is_simple());
    }

    #[test]
    fn deficiency_on_degenerate_paths_inverts_the_diagonal() {
        let a = mp(&[&[3, 5], &[Z, 2]]);
        let d = deficiency(&a, &Path::new(vec![1, 1, 2]).unwrap()).unwrap();
        assert_eq!(d, Value::int(-3));
        let d = deficiency(&a, &Path::new(vec![1, 2, 2]).unwrap()).unwrap();
        assert_eq!(d, Value::int(-2));
        // Unitriangular input: degenerate paths are tight.
        let u = mp(&[&[0, 5], &[Z, 0]]);
        let d = deficiency(&u, &Path::new(vec![1, 1, 2]).unwrap()).unwrap();
        assert!(d.is_one());
    }

    #[test]
    fn deficiency_errors_on_zero_entries() {
        let a = mp(&[&[0, Z, 1], &[Z, 0, 0], &[Z, Z, 0]]);
        let err = deficiency(&a, &Path::new(vec![1, 2, 3]).unwrap()).unwrap_err();
        assert!(matches!(err, Error::Invalid(_)));
        let err = deficiency(&a, &Path::new(vec![1, 4]).unwrap()).unwrap_err();
        assert!(matches!(err, Error::Invalid(_)));
    }

    #[test]
    fn noncommute_idempotent_deficiencies() {
        let a = noncommute_base(1);
        let plus = plus_of(&a);
        let star = star_of(&a).unwrap();
        assert_eq!(plus, a.with_entry(0, 1, Value::int(-1)));
        assert_eq!(star, a.with_entry(1, 2, Value::int(-1)));
        let path = Path::new(vec![1, 2, 4]).unwrap();
        assert_eq!(deficiency(&plus, &path).unwrap(), Value::int(2));
        assert_eq!(deficiency(&star, &path).unwrap(), Value::int(0));
    }

    #[test]
    fn anchored_decomposition_of_random_paths() {
        let mut rng = rng_from_seed(7);
        let dist = EntryDist::max_plus();
        for trial in 0..60 {
            let n = 3 + (trial % 4);
            let a = sample_shaped(&mut rng, n, crate::matrix::Shape::PositiveUpper, &dist);
            for seqs in nondecreasing_sequences(n, 2 + trial % n).chunks(5) {
                for verts in seqs.iter().take(1) {
                    let path = Path::new(verts.clone()).unwrap();
                    let direct = deficiency(&a, &path).unwrap();
                    let v = path.vertices();
                    let anchor = |x: usize, y: usize| {
                        deficiency(&a, &Path::new(vec![1, x, y]).unwrap()).unwrap()
                    };
                    let mut rebuilt = anchor(v[0], v[v.len() - 1]).inv().unwrap();
                    for w in v.windows(2) {
                        rebuilt = rebuilt.mul(&anchor(w[0], w[1]));
                    }
                    assert_eq!(direct, rebuilt);
                }
            }
        }
    }

    #[test]
    fn deficiency_equal_modes_agree() {
        let mut rng = rng_from_seed(11);
        let dist = EntryDist::max_plus();
        for trial in 0..40 {
            let n = 2 + trial % 4;
            let a = sample_shaped(&mut rng, n, crate::matrix::Shape::PositiveUpper, &dist);
            assert!(deficiency_equal(&a, &a, DeficiencyMode::AllPaths).unwrap());
            // Diagonal conjugation preserves every deficiency.
            let d = crate::sample::sample_invertible_diagonal(&mut rng, n, &dist);
            let dinv = Matrix::from_fn(n, a.kind(), |i, j| {
                if i == j {
                    d.get(i, i).inv().unwrap()
                } else {
                    Value::zero(a.kind())
                }
            });
            let conj = d.mul(&a).mul(&dinv);
            assert!(deficiency_equal(&a, &conj, DeficiencyMode::AllPaths).unwrap());
            let b = sample_shaped(&mut rng, n, crate::matrix::Shape::PositiveUpper, &dist);
            let l2 = deficiency_equal(&a, &b, DeficiencyMode::Length2).unwrap();
            assert_eq!(
                l2,
                deficiency_equal(&a, &b, DeficiencyMode::AllPaths).unwrap()
            );
            if !l2 {
                assert!(first_deficiency_mismatch(&a, &b).is_some());
            }
        }
    }

    #[test]
    fn conjugacy_recovers_the_conjugator() {
        let mut rng = rng_from_seed(3);
        let dist = EntryDist::max_plus();
        for trial in 0..50 {
            let n = 2 + trial % 5;
            let a = sample_unitriangular_positive(&mut rng, n, &dist);
            let d = crate::sample::sample_invertible_diagonal(&mut rng, n, &dist);
            let dinv = Matrix::from_fn(n, a.kind(), |i, j| {
                if i == j {
                    d.get(i, i).inv().unwrap()
                } else {
                    Value::zero(a.kind())
                }
            });
            let b = d.mul(&a).mul(&dinv);
            assert!(b.flags().unitriangular, "conjugate left the family");
            let rel = d_related_unitriangular(&a, &b).unwrap();
            assert!(rel.related);
            let g = rel.conjugator.unwrap();
            let ginv = Matrix::from_fn(n, a.kind(), |i, j| {
                if i == j {
                    g.get(i, i).inv().unwrap()
                } else {
                    Value::zero(a.kind())
                }
            });
            assert_eq!(g.mul(&a).mul(&ginv), b);
        }
        let a = noncommute_base(1);
        let rel = d_related_unitriangular(&a, &a).unwrap();
        assert!(rel.related);
        assert_eq!(rel.conjugator.unwrap(), Matrix::identity(4, a.kind()));
    }

    #[test]
    fn noncommute_idempotents_are_not_conjugate() {
        let a = noncommute_base(1);
        let rel = d_related_unitriangular(&plus_of(&a), &star_of(&a).unwrap()).unwrap();
        assert!(!rel.related);
        let (path, dp, ds) = rel.mismatch.unwrap();
        assert!(path.is_simple());
        assert_ne!(dp, ds);
    }

    #[test]
    fn tightness_pattern_of_the_nonclosure_idempotent() {
        let e = mp(&[
            &[0, 0, 2, 2, 2],
            &[Z, 0, 1, 2, 2],
            &[Z, Z, 0, 0, 0],
            &[Z, Z, Z, 0, 0],
            &[Z, Z, Z, Z, 0],
        ]);
        let pattern = tightness_pattern(&e).unwrap();
        let expected: BTreeSet<_> = [
            (1, 2, 4),
            (1, 2, 5),
            (1, 3, 4),
            (1, 3, 5),
            (1, 4, 5),
            (2, 4, 5),
            (3, 4, 5),
        ]
        .into_iter()
        .collect();
        assert_eq!(*pattern.tight_set(), expected);
        assert!(!pattern.is_tight(1, 2, 3));
        assert!(!pattern.is_tight(2, 3, 4));
        assert!(!pattern.is_tight(2, 3, 5));
    }

    #[test]
    fn unrealizable_tight_sets_are_rejected() {
        let bad: BTreeSet<_> = [(1, 2, 3), (1, 3, 4)].into_iter().collect();
        assert!(matches!(
            TightnessPattern::from_set(4, bad),
            Err(Error::UnrealizablePattern(_))
        ));
        let bad: BTreeSet<_> = [(1, 2, 4), (2, 3, 4)].into_iter().collect();
        assert!(matches!(
            TightnessPattern::from_set(4, bad),
            Err(Error::UnrealizablePattern(_))
        ));
        let bad: BTreeSet<_> = [(1, 2, 3), (1, 2, 4), (1, 3, 4)].into_iter().collect();
        assert!(matches!(
            TightnessPattern::from_set(4, bad),
            Err(Error::UnrealizablePattern(_))
        ));
        let bad: BTreeSet<_> = [(1, 2, 2)].into_iter().collect();
        assert!(matches!(
            TightnessPattern::from_set(3, bad),
            Err(Error::Invalid(_))
        ));
    }

    fn realizable_four_patterns() -> Vec<BTreeSet<(usize, usize, usize)>> {
        let p123 = (1, 2, 3);
        let p124 = (1, 2, 4);
        let p134 = (1, 3, 4);
        let p234 = (2, 3, 4);
        vec![
            BTreeSet::new(),
            [p123].into_iter().collect(),
            [p124].into_iter().collect(),
            [p134].into_iter().collect(),
            [p234].into_iter().collect(),
            [p123, p124].into_iter().collect(),
            [p123, p234].into_iter().collect(),
            [p124, p134].into_iter().collect(),
            [p134, p234].into_iter().collect(),
            [p123, p124, p134, p234].into_iter().collect(),
        ]
    }

    #[test]
    fn exactly_ten_tight_sets_are_realizable_at_dimension_four() {
        let all = simple_triples(4);
        let mut realizable = 0;
        for mask in 0..16_u32 {
            let set: BTreeSet<_> = all
                .iter()
                .enumerate()
                .filter(|(idx, _)| mask & (1 << idx) != 0)
                .map(|(_, p)| *p)
                .collect();
            if TightnessPattern::from_set(4, set.clone()).is_ok() {
                realizable += 1;
                assert!(realizable_four_patterns().contains(&set));
            }
        }
        assert_eq!(realizable, 10);
    }

    #[test]
    fn pattern_directed_idempotents_hit_all_ten_cases() {
        let g = Value::int(1);
        let s = [Value::int(0), Value::int(1), Value::int(2)];
        for set in realizable_four_patterns() {
            let pattern = TightnessPattern::from_set(4, set).unwrap();
            let e = idempotent_with_pattern(&pattern, &s, &g).unwrap();
            assert!(is_idempotent(&e));
            assert_eq!(tightness_pattern(&e).unwrap(), pattern);
        }
        for tight in [true, false] {
            let set: BTreeSet<_> = if tight {
                [(1, 2, 3)].into_iter().collect()
            } else {
                BTreeSet::new()
            };
            let pattern = TightnessPattern::from_set(3, set).unwrap();
            let e = idempotent_with_pattern(&pattern, &s[..2], &g).unwrap();
            assert_eq!(tightness_pattern(&e).unwrap(), pattern);
        }
    }

    #[test]
    fn bounded_monotone_family_is_closed_under_products() {
        let mut rng = rng_from_seed(19);
        let dist = EntryDist::max_plus();
        for trial in 0..60 {
            let m = 1 + trial % 4;
            let a = sample_bounded_monotone(&mut rng, m, &dist);
            let b = sample_bounded_monotone(&mut rng, m, &dist);
            assert!(is_bounded_monotone(&a.mul(&b)));
        }
    }

    #[test]
    fn tight_all_members_and_product_law() {
        let mut rng = rng_from_seed(23);
        let dist = EntryDist::max_plus();
        for n in [3_usize, 4, 5, 6] {
            let superdiag: Vec<Value> = (0..n - 1)
                .map(|_| sample_nonzero(&mut rng, &dist))
                .collect();
            let e = tight_all_idempotent(Kind::MaxPlusRational, &superdiag).unwrap();
            assert!(tightness_pattern(&e).unwrap().all_tight());
            for _ in 0..10 {
                let g = sample_bounded_monotone(&mut rng, n - 2, &dist);
                let h = sample_bounded_monotone(&mut rng, n - 2, &dist);
                let gb = bordered(&g);
                let hb = bordered(&h);
                assert_eq!(plus_of(&e.hadamard(&gb)), e);
                assert_eq!(star_of(&e.hadamard(&gb)).unwrap(), e);
                // Hadamard factors compose through the matrix product of
                // the bordered parts.
                let lhs = e.hadamard(&gb).mul(&e.hadamard(&hb));
                let rhs = e.hadamard(&gb.mul(&hb));
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn descriptors_cover_both_three_dimensional_cases() {
        let g = Value::int(1);
        let s = [Value::int(0), Value::int(0)];
        let loose = idempotent_with_pattern(
            &TightnessPattern::from_set(3, BTreeSet::new()).unwrap(),
            &s,
            &g,
        )
        .unwrap();
        let d = ht_class_descriptor(&loose).unwrap();
        assert_eq!(d.case, HtCase::AllLoose3);
        assert!(d.class_is_group);
        let tight = idempotent_with_pattern(
            &TightnessPattern::from_set(3, [(1, 2, 3)].into_iter().collect()).unwrap(),
            &s,
            &g,
        )
        .unwrap();
        let d = ht_class_descriptor(&tight).unwrap();
        assert_eq!(d.case, HtCase::AllTight3);
        assert!(!d.class_is_group);
        assert!(ht_class_descriptor(&Matrix::identity(5, Kind::MaxPlusRational)).is_err());
    }

    #[test]
    fn descriptors_map_the_ten_four_dimensional_patterns() {
        let g = Value::int(1);
        let s = [Value::int(0), Value::int(1), Value::int(2)];
        let expect = [
            (vec![], HtCase::AllLoose4, true),
            (vec![(1, 2, 3)], HtCase::Tight123, true),
            (vec![(1, 2, 4)], HtCase::Tight124, true),
            (vec![(1, 3, 4)], HtCase::Tight134, true),
            (vec![(2, 3, 4)], HtCase::Tight234, true),
            (vec![(1, 2, 3), (1, 2, 4)], HtCase::Tight123And124, false),
            (vec![(1, 2, 3), (2, 3, 4)], HtCase::Tight123And234, true),
            (vec![(1, 2, 4), (1, 3, 4)], HtCase::Tight124And134, false),
            (vec![(1, 3, 4), (2, 3, 4)], HtCase::Tight134And234, false),
            (
                vec![(1, 2, 3), (1, 2, 4), (1, 3, 4), (2, 3, 4)],
                HtCase::AllTight4,
                false,
            ),
        ];
        for (set, case, is_group) in expect {
            let pattern = TightnessPattern::from_set(4, set.into_iter().collect()).unwrap();
            let e = idempotent_with_pattern(&pattern, &s, &g).unwrap();
            let d = ht_class_descriptor(&e).unwrap();
            assert_eq!(d.case, case);
            assert_eq!(d.class_is_group, is_group);
        }
    }

    #[test]
    fn membership_examples_per_case() {
        let g = Value::int(1);
        let s = [Value::int(0), Value::int(1), Value::int(2)];
        let lambda = Value::int(5);
        let mu = Value::int(-2);

        // Three-dimensional tight class admits a damped middle entry.
        let e3 = idempotent_with_pattern(
            &TightnessPattern::from_set(3, [(1, 2, 3)].into_iter().collect()).unwrap(),
            &s[..2],
            &g,
        )
        .unwrap();
        let member = e3.scale(&lambda).with_entry(1, 1, lambda.mul(&mu));
        assert!(ht_membership(&e3, &member).unwrap());
        assert!(ht_membership(&e3, &e3).unwrap());
        let bad = e3.scale(&lambda).with_entry(1, 1, lambda.mul(&Value::int(2)));
        assert!(!ht_membership(&e3, &bad).unwrap());

        // Loose three-dimensional class is the scalar group.
        let e3l =
            idempotent_with_pattern(&TightnessPattern::from_set(3, BTreeSet::new()).unwrap(), &s[..2], &g)
                .unwrap();
        assert!(ht_membership(&e3l, &e3l.scale(&lambda)).unwrap());
        assert!(!ht_membership(&e3l, &e3l.scale(&lambda).with_entry(1, 1, lambda.mul(&mu))).unwrap());

        // The (3,3)-damped class at dimension four.
        let e4 = idempotent_with_pattern(
            &TightnessPattern::from_set(4, [(1, 3, 4), (2, 3, 4)].into_iter().collect()).unwrap(),
            &s,
            &g,
        )
        .unwrap();
        let member = e4.scale(&lambda).with_entry(2, 2, lambda.mul(&mu));
        assert!(ht_membership(&e4, &member).unwrap());
        let wrong_slot = e4.scale(&lambda).with_entry(1, 1, lambda.mul(&mu));
        assert!(!ht_membership(&e4, &wrong_slot).unwrap());
        let off_class = e4.scale(&lambda).with_entry(0, 3, lambda.mul(&Value::int(9)));
        assert!(!ht_membership(&e4, &off_class).unwrap());
        assert!(!ht_membership(&e4, &Matrix::zero(4, Kind::MaxPlusRational)).unwrap());
    }

    #[test]
    fn sampled_members_stay_closed_at_low_dimensions() {
        let g = Value::int(1);
        let s = [Value::int(0), Value::int(1), Value::int(2)];
        let mut seed = 100;
        for set in realizable_four_patterns() {
            let pattern = TightnessPattern::from_set(4, set).unwrap();
            let e = idempotent_with_pattern(&pattern, &s, &g).unwrap();
            let report = ht_closure_check(&e, 6, seed).unwrap();
            assert!(report.closed, "case {:?} not closed", pattern.tight_set());
            seed += 1;
        }
        for set in [BTreeSet::new(), [(1, 2, 3)].into_iter().collect()] {
            let pattern = TightnessPattern::from_set(3, set).unwrap();
            let e = idempotent_with_pattern(&pattern, &s[..2], &g).unwrap();
            let report = ht_closure_check(&e, 6, seed).unwrap();
            assert!(report.closed);
            seed += 1;
        }
    }

    #[test]
    fn all_tight_noncommutative_product_order() {
        // lambda = 0 members of an all-tight class with parameter triples
        // written additively: (-2,-1,-1) and (-1,0,-3).
        let e = tight_all_idempotent(
            Kind::MaxPlusRational,
            &[Value::int(0), Value::int(1), Value::int(2)],
        )
        .unwrap();
        let member = |al: i64, be: i64, ga: i64| {
            e.with_entry(1, 1, Value::int(al))
                .with_entry(2, 2, Value::int(ga))
                .with_entry(1, 2, Value::int(be + 1))
        };
        let a = member(-2, -1, -1);
        let b = member(-1, 0, -3);
        assert!(ht_membership(&e, &a).unwrap());
        assert!(ht_membership(&e, &b).unwrap());
        let ab = a.mul(&b);
        let ba = b.mul(&a);
        assert!(ht_membership(&e, &ab).unwrap());
        assert!(ht_membership(&e, &ba).unwrap());
        assert_ne!(ab, ba);
        // (1,2) entries carry max(alpha + beta', beta + gamma') and
        // max(alpha' + beta, beta' + gamma) over the span value 1.
        assert_eq!(*ab.get(1, 2), Value::int(-1));
        assert_eq!(*ba.get(1, 2), Value::int(0));
    }

    #[test]
    fn nonclosure_witness_returns_the_squared_member() {
        let e = mp(&[
            &[0, 0, 2, 2, 2],
            &[Z, 0, 1, 2, 2],
            &[Z, Z, 0, 0, 0],
            &[Z, Z, Z, 0, 0],
            &[Z, Z, Z, Z, 0],
        ]);
        let a = mp(&[
            &[0, 0, 2, 2, 2],
            &[Z, -2, -1, 1, 2],
            &[Z, Z, -3, 0, 0],
            &[Z, Z, Z, -3, 0],
            &[Z, Z, Z, Z, 0],
        ]);
        assert_eq!(plus_of(&a), e);
        assert_eq!(star_of(&a).unwrap(), e);
        let report = ht_closure_check_with(&e, &[a.clone()]).unwrap();
        assert!(!report.closed);
        let witness = report.witness.unwrap();
        let expected_sq = mp(&[
            &[0, 0, 2, 2, 2],
            &[Z, -4, -3, -1, 2],
            &[Z, Z, -6, -3, 0],
            &[Z, Z, Z, -6, 0],
            &[Z, Z, Z, Z, 0],
        ]);
        assert_eq!(witness.product, expected_sq);
        assert_eq!(witness.product_plus, e.with_entry(1, 2, Value::int(2)));

        // The corner embedding carries the violation up one dimension.
        let e6 = theta_embed(&e).unwrap();
        let a6 = theta_embed(&a).unwrap();
        let report = ht_closure_check_with(&e6, &[a6]).unwrap();
        assert!(!report.closed);
        let w6 = report.witness.as_ref().unwrap();
        assert_eq!(w6.product_plus, e6.with_entry(1, 2, Value::int(2)));
        assert!(report.to_json().contains("\"closed\": false"));
    }

    #[test]
    fn corner_embedding_basics() {
        // The embedding duplicates the last column, so the identity gains
        // one unit entry beside its corner.
        let id4 = Matrix::identity(4, Kind::MaxPlusRational);
        assert_eq!(
            theta_embed(&id4).unwrap(),
            Matrix::identity(5, Kind::MaxPlusRational).with_entry(3, 4, Value::int(0))
        );
        let mut rng = rng_from_seed(31);
        let dist = EntryDist::max_plus();
        for trial in 0..40 {
            let n = 3 + trial % 4;
            let mut mk = || {
                let mut m = sample_shaped(&mut rng, n, crate::matrix::Shape::FullDiagonal, &dist);
                m = m.with_entry(0, 0, Value::int(0));
                m.with_entry(n - 1, n - 1, Value::int(0))
            };
            let a = mk();
            let b = mk();
            assert_eq!(
                theta_embed(&a.mul(&b)).unwrap(),
                theta_embed(&a).unwrap().mul(&theta_embed(&b).unwrap())
            );
        }
        let bad = mp(&[&[1, 0], &[Z, 0]]);
        assert!(theta_embed(&bad).is_err());
    }

    #[test]
    fn noncommute_witness_certifies_and_embeds() {
        for n in [4_usize, 5, 6] {
            let w = rtilde_noncommute_witness(n, &Value::int(1)).unwrap();
            assert!(!w.d_related);
            assert_eq!(w.plus_deficiency, Value::int(2));
            assert_eq!(w.star_deficiency, Value::int(0));
            assert_eq!(w.a.n(), n);
            assert!(w.to_json().contains("certified"));
        }
        assert!(rtilde_noncommute_witness(3, &Value::int(1)).is_err());
        assert!(rtilde_noncommute_witness(4, &Value::int(0)).is_err());
    }

    #[test]
    fn three_dimensional_idempotents_commute() {
        let mut rng = rng_from_seed(41);
        let dist = EntryDist::max_plus();
        for _ in 0..40 {
            let a = sample_shaped(&mut rng, 3, crate::matrix::Shape::PositiveUpper, &dist);
            let rel = d_related_unitriangular(&plus_of(&a), &star_of(&a).unwrap()).unwrap();
            assert!(rel.related, "left and right idempotents split at n=3");
        }
    }

    #[test]
    fn leftcong_scaled_pairs_agree_everywhere() {
        let mut rng = rng_from_seed(43);
        let dist = EntryDist::max_plus();
        for trial in 0..20 {
            let n = 2 + trial % 4;
            let a = sample_shaped(&mut rng, n, crate::matrix::Shape::PositiveUpper, &dist);
            let d = crate::sample::sample_invertible_diagonal(&mut rng, n, &dist);
            let b = a.mul(&d);
            let report = leftcong_check(&a, &b, 25, derive_seed(5, trial as u64)).unwrap();
            assert!(report.r_related);
            assert_eq!(report.sampled_agree, Some(true));
        }
    }

    #[test]
    fn leftcong_separates_equal_plus_pairs_by_construction() {
        // Members of one extended-R class with different profiles: the
        // probe must find a separating left factor without sampling.
        let e = tight_all_idempotent(
            Kind::MaxPlusRational,
            &[Value::int(0), Value::int(1), Value::int(2)],
        )
        .unwrap();
        let bump = |v: i64| e.with_entry(0, 1, Value::int(v));
        for (x, y) in [(1, 3), (2, 1), (0, 4)] {
            let a = bump(x);
            let b = bump(y);
            assert_eq!(plus_of(&a), plus_of(&b));
            let report = leftcong_check(&a, &b, 0, 0).unwrap();
            assert!(!report.r_related);
            assert!(!report.inconclusive);
            let c = report.separator.unwrap();
            assert_ne!(plus_of(&c.mul(&a)), plus_of(&c.mul(&b)));
        }
    }

    #[test]
    fn leftcong_separates_independent_pairs_by_the_meet() {
        let mut rng = rng_from_seed(47);
        let dist = EntryDist::max_plus();
        for trial in 0..20 {
            let n = 3 + trial % 3;
            let a = sample_shaped(&mut rng, n, crate::matrix::Shape::PositiveUpper, &dist);
            let b = sample_shaped(&mut rng, n, crate::matrix::Shape::PositiveUpper, &dist);
            if plus_of(&a) == plus_of(&b) {
                continue;
            }
            let report = leftcong_check(&a, &b, 10, derive_seed(9, trial as u64)).unwrap();
            assert!(!report.r_related);
            assert!(!report.inconclusive, "meet construction failed");
        }
    }

    #[test]
    fn distinct_unitriangular_matrices_admit_kernel_separators() {
        let mut rng = rng_from_seed(53);
        let dist = EntryDist::max_plus();
        for trial in 0..40 {
            let n = 2 + trial % 4;
            let a = sample_unitriangular_positive(&mut rng, n, &dist);
            let b = sample_unitriangular_positive(&mut rng, n, &dist);
            if a == b {
                continue;
            }
            let (x, y) = uni_rstar_separator(&a, &b).expect("separator");
            let on_a = x.mul(&a) == y.mul(&a);
            let on_b = x.mul(&b) == y.mul(&b);
            assert_ne!(on_a, on_b);
        }
        // Equal-plus pairs need the bump-and-cover candidates.
        let e = tight_all_idempotent(
            Kind::MaxPlusRational,
            &[Value::int(0), Value::int(1), Value::int(2)],
        )
        .unwrap();
        let a = e.with_entry(0, 1, Value::int(1));
        let b = e.with_entry(0, 1, Value::int(3));
        assert_eq!(plus_of(&a), plus_of(&b));
        let (x, y) = uni_rstar_separator(&a, &b).expect("separator");
        assert_ne!(x.mul(&a) == y.mul(&a), x.mul(&b) == y.mul(&b));
        assert!(uni_rstar_separator(&a, &a).is_none());
    }
}
