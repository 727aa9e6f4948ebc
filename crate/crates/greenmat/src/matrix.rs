//! Square matrices over an idempotent semifield, with shape tracking,
//! text/JSON formats, and bit-packed Boolean matrices for exhaustive scans.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::Error;
use crate::semiring::{Kind, Value};

/// Declared shape classes, ordered by strictness. `PositiveUpper` means
/// unitriangular with every entry on or above the diagonal nonzero.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum Shape {
    #[serde(rename = "general")]
    General,
    #[serde(rename = "upper")]
    UpperTriangular,
    #[serde(rename = "full-diagonal")]
    FullDiagonal,
    #[serde(rename = "unitriangular")]
    Unitriangular,
    #[serde(rename = "positive-upper")]
    PositiveUpper,
}

impl Shape {
    pub fn token(self) -> &'static str {
        match self {
            Shape::General => "general",
            Shape::UpperTriangular => "upper",
            Shape::FullDiagonal => "full-diagonal",
            Shape::Unitriangular => "unitriangular",
            Shape::PositiveUpper => "positive-upper",
        }
    }

    pub fn parse(tok: &str) -> Result<Shape, Error> {
        match tok {
            "general" => Ok(Shape::General),
            "upper" => Ok(Shape::UpperTriangular),
            "full-diagonal" => Ok(Shape::FullDiagonal),
            "unitriangular" => Ok(Shape::Unitriangular),
            "positive-upper" => Ok(Shape::PositiveUpper),
            other => Err(Error::Parse(format!("unknown shape `{other}`"))),
        }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// Flags derived from the entries on every construction. Implications:
/// positive_upper ⇒ full_diagonal ⇒ upper and unitriangular ⇒ full_diagonal;
/// unitriangular and positive_upper are independent (their conjunction is
/// the unitriangular-positive class).
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct ShapeFlags {
    pub upper: bool,
    pub full_diagonal: bool,
    pub unitriangular: bool,
    pub positive_upper: bool,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Matrix {
    n: usize,
    kind: Kind,
    e: Vec<Value>,
    flags: ShapeFlags,
}

// Parsers refuse dimensions above this; library constructors stay unchecked.
pub const PARSE_DIM_CAP: usize = 100;

impl Matrix {
    fn derive_flags(n: usize, e: &[Value]) -> ShapeFlags {
        let mut upper = true;
        let mut diag_nonzero = true;
        let mut diag_one = true;
        let mut above_nonzero = true;
        for i in 0..n {
            for j in 0..n {
                let v = &e[i * n + j];
                if i > j && !v.is_zero() {
                    upper = false;
                } else if i == j {
                    if v.is_zero() {
                        diag_nonzero = false;
                    }
                    if !v.is_one() {
                        diag_one = false;
                    }
                } else if i < j && v.is_zero() {
                    above_nonzero = false;
                }
            }
        }
        ShapeFlags {
            upper,
            full_diagonal: upper && diag_nonzero,
            unitriangular: upper && diag_one,
            positive_upper: upper && diag_nonzero && above_nonzero,
        }
    }

    pub fn from_entries(n: usize, kind: Kind, e: Vec<Value>) -> Matrix {
        assert_eq!(e.len(), n * n, "entry count must be n^2");
        assert!(n >= 1, "dimension must be at least 1");
        assert!(
            e.iter().all(|v| v.kind() == kind),
            "all entries must have the matrix kind"
        );
        let flags = Matrix::derive_flags(n, &e);
        Matrix { n, kind, e, flags }
    }

    pub fn from_rows(kind: Kind, rows: Vec<Vec<Value>>) -> Matrix {
        let n = rows.len();
        assert!(
            rows.iter().all(|r| r.len() == n),
            "matrix must be square"
        );
        Matrix::from_entries(n, kind, rows.into_iter().flatten().collect())
    }

    pub fn from_fn(n: usize, kind: Kind, mut f: impl FnMut(usize, usize) -> Value) -> Matrix {
        let mut e = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                e.push(f(i, j));
            }
        }
        Matrix::from_entries(n, kind, e)
    }

    pub fn identity(n: usize, kind: Kind) -> Matrix {
        Matrix::from_fn(n, kind, |i, j| {
            if i == j {
                Value::one(kind)
            } else {
                Value::zero(kind)
            }
        })
    }

    pub fn zero(n: usize, kind: Kind) -> Matrix {
        Matrix::from_fn(n, kind, |_, _| Value::zero(kind))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    pub fn flags(&self) -> ShapeFlags {
        self.flags
    }

    pub fn get(&self, i: usize, j: usize) -> &Value {
        &self.e[i * self.n + j]
    }

    /// Copy with one entry replaced; flags are re-derived.
    pub fn with_entry(&self, i: usize, j: usize, v: Value) -> Matrix {
        assert_eq!(v.kind(), self.kind);
        let mut e = self.e.clone();
        e[i * self.n + j] = v;
        Matrix::from_entries(self.n, self.kind, e)
    }

    pub fn row(&self, i: usize) -> Vec<Value> {
        (0..self.n).map(|j| self.get(i, j).clone()).collect()
    }

    pub fn col(&self, j: usize) -> Vec<Value> {
        (0..self.n).map(|i| self.get(i, j).clone()).collect()
    }

    /// Indices of nonzero rows.
    pub fn dom(&self) -> Vec<usize> {
        (0..self.n)
            .filter(|&i| (0..self.n).any(|j| !self.get(i, j).is_zero()))
            .collect()
    }

    /// Indices of nonzero columns.
    pub fn im(&self) -> Vec<usize> {
        (0..self.n)
            .filter(|&j| (0..self.n).any(|i| !self.get(i, j).is_zero()))
            .collect()
    }

    pub fn dom_full(&self) -> bool {
        self.dom().len() == self.n
    }

    pub fn im_full(&self) -> bool {
        self.im().len() == self.n
    }

    fn check_compatible(&self, other: &Matrix) {
        assert_eq!(self.n, other.n, "dimension mismatch");
        assert_eq!(self.kind, other.kind, "kind mismatch");
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        self.check_compatible(other);
        let n = self.n;
        Matrix::from_fn(n, self.kind, |i, j| {
            let mut acc = Value::zero(self.kind);
            for k in 0..n {
                acc = acc.add(&self.get(i, k).mul(other.get(k, j)));
            }
            acc
        })
    }

    pub fn pow(&self, k: u32) -> Matrix {
        assert!(k >= 1, "matrix power must be positive");
        let mut acc = self.clone();
        for _ in 1..k {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.n, self.kind, |i, j| self.get(j, i).clone())
    }

    /// Reflection across the anti-diagonal: Δ(X)_{i,j} = X_{n-1-j, n-1-i}.
    /// Involutary anti-automorphism; preserves upper-triangularity.
    pub fn delta(&self) -> Matrix {
        let n = self.n;
        Matrix::from_fn(n, self.kind, |i, j| self.get(n - 1 - j, n - 1 - i).clone())
    }

    /// Entrywise (Hadamard) product.
    pub fn hadamard(&self, other: &Matrix) -> Matrix {
        self.check_compatible(other);
        Matrix::from_fn(self.n, self.kind, |i, j| {
            self.get(i, j).mul(other.get(i, j))
        })
    }

    /// Entrywise join.
    pub fn join(&self, other: &Matrix) -> Matrix {
        self.check_compatible(other);
        Matrix::from_fn(self.n, self.kind, |i, j| {
            self.get(i, j).add(other.get(i, j))
        })
    }

    /// Entrywise meet.
    pub fn meet_entrywise(&self, other: &Matrix) -> Matrix {
        self.check_compatible(other);
        Matrix::from_fn(self.n, self.kind, |i, j| {
            self.get(i, j).meet(other.get(i, j))
        })
    }

    /// Entrywise order A ⪯ B.
    pub fn leq_entrywise(&self, other: &Matrix) -> bool {
        self.check_compatible(other);
        self.e.iter().zip(&other.e).all(|(a, b)| a.leq(b))
    }

    /// Scalar multiple λ ⊗ A.
    pub fn scale(&self, lambda: &Value) -> Matrix {
        assert_eq!(lambda.kind(), self.kind);
        Matrix::from_fn(self.n, self.kind, |i, j| lambda.mul(self.get(i, j)))
    }

    pub fn satisfies(&self, shape: Shape) -> bool {
        match shape {
            Shape::General => true,
            Shape::UpperTriangular => self.flags.upper,
            Shape::FullDiagonal => self.flags.full_diagonal,
            Shape::Unitriangular => self.flags.unitriangular,
            Shape::PositiveUpper => self.flags.positive_upper,
        }
    }

    /// All shapes the entries satisfy, strongest last.
    pub fn satisfied_shapes(&self) -> Vec<Shape> {
        let mut out = vec![Shape::General];
        if self.flags.upper {
            out.push(Shape::UpperTriangular);
        }
        if self.flags.full_diagonal {
            out.push(Shape::FullDiagonal);
        }
        if self.flags.unitriangular {
            out.push(Shape::Unitriangular);
        }
        if self.flags.positive_upper {
            out.push(Shape::PositiveUpper);
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("n {} {}\n", self.n, self.kind.token());
        for i in 0..self.n {
            let row: Vec<String> = (0..self.n).map(|j| self.get(i, j).token()).collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s
    }

    /// Parses the text form: a `n <dim> <kind> [shape=<shape>]` header
    /// line followed by <dim> rows. Blank lines and `#` comments are
    /// skipped, so reports that prepend comment headers round-trip.
    pub fn from_text(input: &str) -> Result<Matrix, Error> {
        let mut lines = input.lines().enumerate().filter(|(_, l)| {
            let t = l.trim_start();
            !t.is_empty() && !t.starts_with('#')
        });
        let (hline_no, header) = lines
            .next()
            .ok_or_else(|| Error::Parse("empty matrix text".into()))?;
        let htoks = tokens_with_cols(header);
        if htoks.is_empty() || htoks[0].1 != "n" {
            return Err(parse_at(hline_no, 1, "header must start with `n`"));
        }
        if htoks.len() < 3 {
            return Err(parse_at(
                hline_no,
                1,
                "header must be `n <dim> <kind> [shape=<shape>]`",
            ));
        }
        let (dcol, dtok) = htoks[1];
        let n: usize = dtok
            .parse()
            .map_err(|_| parse_at(hline_no, dcol, &format!("bad dimension `{dtok}`")))?;
        if n == 0 {
            return Err(parse_at(hline_no, dcol, "dimension must be at least 1"));
        }
        if n > PARSE_DIM_CAP {
            return Err(Error::SizeCap(format!(
                "dimension {n} exceeds the parser cap of {PARSE_DIM_CAP}"
            )));
        }
        let (kcol, ktok) = htoks[2];
        let kind =
            Kind::parse(ktok).map_err(|e| parse_at(hline_no, kcol, &e.to_string()))?;
        let mut declared: Option<Shape> = None;
        for &(acol, atok) in &htoks[3..] {
            match atok.split_once('=') {
                Some(("shape", stok)) => {
                    let s = Shape::parse(stok)
                        .map_err(|e| parse_at(hline_no, acol, &e.to_string()))?;
                    declared = Some(s);
                }
                _ => {
                    return Err(parse_at(
                        hline_no,
                        acol,
                        &format!("unknown header attribute `{atok}`"),
                    ))
                }
            }
        }
        let mut e: Vec<Value> = Vec::with_capacity(n * n);
        let mut rows_seen = 0;
        for (line_no, line) in lines {
            let toks = tokens_with_cols(line);
            if toks.is_empty() {
                continue;
            }
            if rows_seen == n {
                return Err(parse_at(
                    line_no,
                    toks[0].0,
                    &format!("expected {n} rows, found extra content"),
                ));
            }
            if toks.len() != n {
                return Err(parse_at(
                    line_no,
                    toks[0].0,
                    &format!("expected {n} entries in row, found {}", toks.len()),
                ));
            }
            for (col, tok) in toks {
                let v = Value::parse(kind, tok)
                    .map_err(|err| parse_at(line_no, col, &err.to_string()))?;
                e.push(v);
            }
            rows_seen += 1;
        }
        if rows_seen != n {
            return Err(Error::Parse(format!(
                "expected {n} rows, found {rows_seen}"
            )));
        }
        let m = Matrix::from_entries(n, kind, e);
        if let Some(shape) = declared {
            if !m.satisfies(shape) {
                return Err(Error::Shape(format!(
                    "matrix does not satisfy declared shape `{shape}`"
                )));
            }
        }
        Ok(m)
    }

    /// Parses a sequence of matrices in text form, one block per `n ...`
    /// header. Diagnostics keep absolute line numbers.
    pub fn parse_all(input: &str) -> Result<Vec<Matrix>, Error> {
        let lines: Vec<&str> = input.lines().collect();
        let is_header = |l: &str| {
            let t = l.trim_start();
            t == "n" || t.starts_with("n ") || t.starts_with("n\t")
        };
        let starts: Vec<usize> = (0..lines.len()).filter(|&i| is_header(lines[i])).collect();
        let Some(&first) = starts.first() else {
            return Err(Error::Parse(
                "no matrix header found (expected `n <dim> <kind>`)".into(),
            ));
        };
        for (i, l) in lines[..first].iter().enumerate() {
            let t = l.trim_start();
            if !t.is_empty() && !t.starts_with('#') {
                return Err(parse_at(i, 1, "expected matrix header `n <dim> <kind>`"));
            }
        }
        let mut out = Vec::with_capacity(starts.len());
        for (bi, &s) in starts.iter().enumerate() {
            let end = starts.get(bi + 1).copied().unwrap_or(lines.len());
            // Pad with blank lines so errors report positions in the
            // original input.
            let mut block = "\n".repeat(s);
            block.push_str(&lines[s..end].join("\n"));
            out.push(Matrix::from_text(&block)?);
        }
        Ok(out)
    }

    pub fn to_json(&self, shape: Option<Shape>) -> String {
        let rows: Vec<Vec<String>> = (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j).token()).collect())
            .collect();
        let doc = MatrixJson {
            n: self.n,
            kind: self.kind,
            rows,
            shape,
        };
        serde_json::to_string(&doc).expect("matrix serialization cannot fail")
    }

    pub fn from_json(input: &str) -> Result<Matrix, Error> {
        let doc: MatrixJson = serde_json::from_str(input)
            .map_err(|e| Error::Parse(format!("bad matrix json: {e}")))?;
        if doc.n == 0 {
            return Err(Error::Parse("dimension must be at least 1".into()));
        }
        if doc.n > PARSE_DIM_CAP {
            return Err(Error::SizeCap(format!(
                "dimension {} exceeds the parser cap of {PARSE_DIM_CAP}",
                doc.n
            )));
        }
        if doc.rows.len() != doc.n {
            return Err(Error::Parse(format!(
                "expected {} rows, found {}",
                doc.n,
                doc.rows.len()
            )));
        }
        let mut e = Vec::with_capacity(doc.n * doc.n);
        for (i, row) in doc.rows.iter().enumerate() {
            if row.len() != doc.n {
                return Err(Error::Parse(format!(
                    "row {} has {} entries, expected {}",
                    i + 1,
                    row.len(),
                    doc.n
                )));
            }
            for tok in row {
                e.push(Value::parse(doc.kind, tok)?);
            }
        }
        let m = Matrix::from_entries(doc.n, doc.kind, e);
        if let Some(shape) = doc.shape {
            if !m.satisfies(shape) {
                return Err(Error::Shape(format!(
                    "matrix does not satisfy declared shape `{shape}`"
                )));
            }
        }
        Ok(m)
    }
}

impl fmt::Display for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixJson {
    n: usize,
    kind: Kind,
    rows: Vec<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    shape: Option<Shape>,
}

fn parse_at(line_idx: usize, col: usize, msg: &str) -> Error {
    Error::Parse(format!("line {}, col {}: {}", line_idx + 1, col, msg))
}

/// Whitespace-splits a line, reporting 1-based byte columns of token starts.
fn tokens_with_cols(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (idx, ch) in line.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((s + 1, &line[s..idx]));
            }
        } else if start.is_none() {
            start = Some(idx);
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &line[s..]));
    }
    out
}

/// Boolean matrix with entries packed into a u64 (bit i*n+j = entry (i,j)).
/// Only for n ≤ 5; built for exhaustive scans over finite families.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub struct PackedBool {
    pub n: usize,
    pub bits: u64,
}

impl PackedBool {
    pub fn new(n: usize, bits: u64) -> PackedBool {
        assert!((1..=5).contains(&n), "packed boolean matrices need n in 1..=5");
        debug_assert_eq!(bits >> (n * n), 0, "stray bits beyond n^2");
        PackedBool { n, bits }
    }

    pub fn identity(n: usize) -> PackedBool {
        let mut bits = 0u64;
        for i in 0..n {
            bits |= 1 << (i * n + i);
        }
        PackedBool::new(n, bits)
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        (self.bits >> (i * self.n + j)) & 1 == 1
    }

    fn row_bits(&self, i: usize) -> u64 {
        (self.bits >> (i * self.n)) & ((1 << self.n) - 1)
    }

    pub fn mul(&self, other: &PackedBool) -> PackedBool {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut bits = 0u64;
        for i in 0..n {
            let mut acc = 0u64;
            let mut r = self.row_bits(i);
            while r != 0 {
                let k = r.trailing_zeros() as usize;
                acc |= other.row_bits(k);
                r &= r - 1;
            }
            bits |= acc << (i * n);
        }
        PackedBool { n, bits }
    }

    pub fn transpose(&self) -> PackedBool {
        let n = self.n;
        let mut bits = 0u64;
        for i in 0..n {
            for j in 0..n {
                if self.get(i, j) {
                    bits |= 1 << (j * n + i);
                }
            }
        }
        PackedBool { n, bits }
    }

    pub fn delta(&self) -> PackedBool {
        let n = self.n;
        let mut bits = 0u64;
        for i in 0..n {
            for j in 0..n {
                if self.get(n - 1 - j, n - 1 - i) {
                    bits |= 1 << (i * n + j);
                }
            }
        }
        PackedBool { n, bits }
    }

    pub fn is_idempotent(&self) -> bool {
        self.mul(self) == *self
    }

    /// Entrywise order.
    pub fn leq(&self, other: &PackedBool) -> bool {
        assert_eq!(self.n, other.n);
        self.bits & !other.bits == 0
    }

    pub fn is_upper(&self) -> bool {
        let n = self.n;
        for i in 0..n {
            for j in 0..i {
                if self.get(i, j) {
                    return false;
                }
            }
        }
        true
    }

    pub fn diag_all_ones(&self) -> bool {
        (0..self.n).all(|i| self.get(i, i))
    }

    pub fn is_unitriangular(&self) -> bool {
        self.is_upper() && self.diag_all_ones()
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix::from_fn(self.n, Kind::Boolean, |i, j| {
            if self.get(i, j) {
                Value::BoolOne
            } else {
                Value::BoolZero
            }
        })
    }

    pub fn from_matrix(m: &Matrix) -> PackedBool {
        assert_eq!(m.kind(), Kind::Boolean, "packed matrices are boolean");
        let n = m.n();
        assert!(n <= 5, "packed boolean matrices need n <= 5");
        let mut bits = 0u64;
        for i in 0..n {
            for j in 0..n {
                if !m.get(i, j).is_zero() {
                    bits |= 1 << (i * n + j);
                }
            }
        }
        PackedBool { n, bits }
    }

    /// Column j as an n-bit vector id (bit i set iff entry (i,j) nonzero).
    pub fn col_id(&self, j: usize) -> u32 {
        let mut v = 0u32;
        for i in 0..self.n {
            if self.get(i, j) {
                v |= 1 << i;
            }
        }
        v
    }

    pub fn row_id(&self, i: usize) -> u32 {
        self.row_bits(i) as u32
    }
}

/// Column space of a Boolean matrix: all joins of subsets of columns,
/// returned as a bitmask over n-bit vector ids (bit v set iff vector v
/// lies in the space). The zero vector is always a member.
pub fn bool_col_space(m: &PackedBool) -> u32 {
    let mut mask: u32 = 1; // the zero vector
    for j in 0..m.n {
        let c = m.col_id(j);
        let mut spread = 0u32;
        let mut rest = mask;
        while rest != 0 {
            let v = rest.trailing_zeros();
            spread |= 1 << (v | c);
            rest &= rest - 1;
        }
        mask |= spread;
    }
    mask
}

pub fn bool_row_space(m: &PackedBool) -> u32 {
    bool_col_space(&m.transpose())
}

/// The unique minimal generating set of a finite Boolean vector space:
/// members that are not the join of the strictly smaller members.
pub fn bool_unique_basis(space: u32, n: usize) -> Vec<u32> {
    let mut basis = Vec::new();
    let mut rest = space & !1; // skip the zero vector
    while rest != 0 {
        let v = rest.trailing_zeros();
        rest &= rest - 1;
        let mut join = 0u32;
        let mut members = space & !1;
        while members != 0 {
            let w = members.trailing_zeros();
            members &= members - 1;
            if w != v && (w & !v) == 0 {
                join |= w;
            }
        }
        if join != v {
            basis.push(v);
        }
        let _ = n;
    }
    basis
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semiring::{Kind, Value};
    use proptest::prelude::*;

    fn mp(rows: &[&[i64]]) -> Matrix {
        Matrix::from_rows(
            Kind::MaxPlusRational,
            rows.iter()
                .map(|r| r.iter().map(|&x| Value::int(x)).collect())
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

    #[test]
    fn mul_example() {
        // max-plus: (AB)_{ij} = max_k (a_ik + b_kj)
        let a = mp(&[&[0, 1], &[2, 3]]);
        let b = mp(&[&[1, 0], &[0, 2]]);
        let c = a.mul(&b);
        assert_eq!(*c.get(0, 0), Value::int(1));
        assert_eq!(*c.get(0, 1), Value::int(3));
        assert_eq!(*c.get(1, 0), Value::int(3));
        assert_eq!(*c.get(1, 1), Value::int(5));
    }

    #[test]
    fn shape_flags() {
        let z = Value::MaxPlusZero;
        let ut = Matrix::from_rows(
            Kind::MaxPlusRational,
            vec![
                vec![Value::int(2), Value::int(5)],
                vec![z.clone(), Value::int(1)],
            ],
        );
        assert!(ut.flags().upper && ut.flags().full_diagonal);
        assert!(!ut.flags().unitriangular);
        // all entries on or above the diagonal nonzero: positive upper
        assert!(ut.flags().positive_upper);
        let uni = Matrix::from_rows(
            Kind::MaxPlusRational,
            vec![
                vec![Value::int(0), Value::int(4)],
                vec![z.clone(), Value::int(0)],
            ],
        );
        assert!(uni.flags().positive_upper && uni.flags().unitriangular);
        let uni_zero_above = Matrix::from_rows(
            Kind::MaxPlusRational,
            vec![vec![Value::int(0), z.clone()], vec![z, Value::int(0)]],
        );
        assert!(uni_zero_above.flags().unitriangular);
        assert!(!uni_zero_above.flags().positive_upper);
        assert_eq!(
            uni_zero_above.satisfied_shapes(),
            vec![
                Shape::General,
                Shape::UpperTriangular,
                Shape::FullDiagonal,
                Shape::Unitriangular
            ]
        );
    }

    #[test]
    fn product_preserves_unitriangular_flag() {
        let z = Value::MaxPlusZero;
        let a = Matrix::from_rows(
            Kind::MaxPlusRational,
            vec![
                vec![Value::int(0), Value::int(3)],
                vec![z.clone(), Value::int(0)],
            ],
        );
        let b = Matrix::from_rows(
            Kind::MaxPlusRational,
            vec![
                vec![Value::int(0), Value::int(-1)],
                vec![z, Value::int(0)],
            ],
        );
        assert!(a.mul(&b).flags().unitriangular);
    }

    #[test]
    fn delta_is_involutary_anti_automorphism() {
        let a = mp(&[&[0, 1, 2], &[3, 4, 5], &[6, 7, 8]]);
        let b = mp(&[&[1, 0, 2], &[2, 2, 0], &[0, 1, 1]]);
        assert_eq!(a.delta().delta(), a);
        assert_eq!(a.mul(&b).delta(), b.delta().mul(&a.delta()));
        // delta reflects across the anti-diagonal
        assert_eq!(*a.delta().get(0, 0), *a.get(2, 2));
        assert_eq!(*a.delta().get(0, 1), *a.get(1, 2));
    }

    #[test]
    fn transpose_is_involutary_anti_automorphism() {
        let a = mp(&[&[0, 1], &[2, 3]]);
        let b = mp(&[&[1, 0], &[0, 2]]);
        assert_eq!(a.transpose().transpose(), a);
        assert_eq!(a.mul(&b).transpose(), b.transpose().mul(&a.transpose()));
    }

    #[test]
    fn dom_and_im() {
        let z = Value::MaxPlusZero;
        let a = Matrix::from_rows(
            Kind::MaxPlusRational,
            vec![
                vec![z.clone(), Value::int(1)],
                vec![z.clone(), z],
            ],
        );
        assert_eq!(a.dom(), vec![0]);
        assert_eq!(a.im(), vec![1]);
        assert!(!a.dom_full());
    }

    #[test]
    fn idempotent_maxplus_example() {
        let z = Value::MaxPlusZero;
        let e = Matrix::from_rows(
            Kind::MaxPlusRational,
            vec![
                vec![Value::int(0), Value::int(1)],
                vec![z, Value::int(0)],
            ],
        );
        assert_eq!(e.mul(&e), e);
    }

    #[test]
    fn text_round_trip() {
        let z = Value::MaxPlusZero;
        let a = Matrix::from_rows(
            Kind::MaxPlusRational,
            vec![
                vec![Value::rat(1, 2), Value::int(-3)],
                vec![z, Value::int(0)],
            ],
        );
        let text = a.to_text();
        assert_eq!(text, "n 2 maxplus\n1/2 -3\n-inf 0\n");
        let back = Matrix::from_text(&text).unwrap();
        assert_eq!(back, a);

        let b = bmat(&[&[1, 0], &[1, 1]]);
        assert_eq!(Matrix::from_text(&b.to_text()).unwrap(), b);
    }

    #[test]
    fn text_shape_attribute() {
        let ok = Matrix::from_text("n 2 maxplus shape=upper\n0 1\n-inf 0\n");
        assert!(ok.is_ok());
        let bad = Matrix::from_text("n 2 maxplus shape=upper\n0 1\n2 0\n");
        assert!(matches!(bad, Err(Error::Shape(_))));
    }

    #[test]
    fn text_errors_carry_line_and_col() {
        let err = Matrix::from_text("n 2 maxplus\n0 x\n-inf 0\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 2"), "{msg}");
        assert!(msg.contains("col 3"), "{msg}");

        let err = Matrix::from_text("n 2 bool\n0 1\n").unwrap_err();
        assert!(err.to_string().contains("expected 2 rows"), "{err}");

        let err = Matrix::from_text("m 2 bool\n").unwrap_err();
        assert!(err.to_string().contains("header"), "{err}");

        let err = Matrix::from_text("n 200 bool\n").unwrap_err();
        assert!(matches!(err, Error::SizeCap(_)));
    }

    #[test]
    fn json_round_trip() {
        let a = mp(&[&[0, 1], &[2, 3]]);
        let json = a.to_json(None);
        assert_eq!(Matrix::from_json(&json).unwrap(), a);
        let with_shape = Matrix::from_json(
            r#"{"n":2,"kind":"maxplus","rows":[["0","1"],["-inf","0"]],"shape":"unitriangular"}"#,
        )
        .unwrap();
        assert!(with_shape.flags().unitriangular);
        let bad = Matrix::from_json(
            r#"{"n":2,"kind":"maxplus","rows":[["0","1"],["2","0"]],"shape":"upper"}"#,
        );
        assert!(matches!(bad, Err(Error::Shape(_))));
    }

    #[test]
    fn packed_bool_matches_matrix_product() {
        // exhaustive n=2, sampled n=3
        for abits in 0..16u64 {
            for bbits in 0..16u64 {
                let a = PackedBool::new(2, abits);
                let b = PackedBool::new(2, bbits);
                let via_packed = a.mul(&b).to_matrix();
                let via_matrix = a.to_matrix().mul(&b.to_matrix());
                assert_eq!(via_packed, via_matrix);
            }
        }
        for s in 0..200u64 {
            let abits = (s * 2654435761) & 0x1ff;
            let bbits = (s * 40503 + 17) & 0x1ff;
            let a = PackedBool::new(3, abits);
            let b = PackedBool::new(3, bbits);
            assert_eq!(
                a.mul(&b).to_matrix(),
                a.to_matrix().mul(&b.to_matrix())
            );
            assert_eq!(a.delta().to_matrix(), a.to_matrix().delta());
            assert_eq!(a.transpose().to_matrix(), a.to_matrix().transpose());
        }
    }

    #[test]
    fn bool_col_space_example() {
        // columns (1,1) and (0,0): space is {00, 11}
        let a = PackedBool::from_matrix(&bmat(&[&[1, 0], &[1, 0]]));
        let space = bool_col_space(&a);
        assert_eq!(space, (1 << 0) | (1 << 3));
    }

    #[test]
    fn bool_unique_basis_example() {
        // rows 111, 011, 011: row space {000, 011, 111}, basis {011, 111}
        let a = PackedBool::from_matrix(&bmat(&[&[1, 1, 1], &[0, 1, 1], &[0, 1, 1]]));
        let space = bool_row_space(&a);
        let mut basis = bool_unique_basis(space, 3);
        basis.sort();
        // vector ids: 011 in coordinates 0,1,2 means bits {1,2} = 6; 111 = 7
        assert_eq!(basis, vec![6, 7]);
    }

    #[test]
    fn bool_unique_basis_generates_space() {
        for bits in 0..512u64 {
            let a = PackedBool::new(3, bits);
            let space = bool_col_space(&a);
            let basis = bool_unique_basis(space, 3);
            // closure of the basis must reproduce the space
            let mut mask: u32 = 1;
            for &v in &basis {
                let mut spread = 0u32;
                let mut rest = mask;
                while rest != 0 {
                    let w = rest.trailing_zeros();
                    spread |= 1 << (w | v);
                    rest &= rest - 1;
                }
                mask |= spread;
            }
            assert_eq!(mask, space, "bits={bits:09b}");
        }
    }

    proptest! {
        #[test]
        fn mul_associative(seed in 0u64..500) {
            let mut vals = Vec::new();
            let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
            let mut next = || {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                state >> 33
            };
            for _ in 0..27 {
                let r = next() % 8;
                vals.push(if r == 0 {
                    Value::MaxPlusZero
                } else {
                    Value::rat((next() % 21) as i64 - 10, (next() % 4) as i64 + 1)
                });
            }
            let a = Matrix::from_entries(3, Kind::MaxPlusRational, vals[0..9].to_vec());
            let b = Matrix::from_entries(3, Kind::MaxPlusRational, vals[9..18].to_vec());
            let c = Matrix::from_entries(3, Kind::MaxPlusRational, vals[18..27].to_vec());
            prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
            // distributivity over join
            prop_assert_eq!(a.mul(&b.join(&c)), a.mul(&b).join(&a.mul(&c)));
            // identity
            let id = Matrix::identity(3, Kind::MaxPlusRational);
            prop_assert_eq!(a.mul(&id), a.clone());
            prop_assert_eq!(id.mul(&a), a);
        }
    }
}
