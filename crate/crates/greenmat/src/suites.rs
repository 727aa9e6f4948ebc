//! Seeded verification suites. Each suite checks one observable claim of
//! the library end to end and reports machine-readable pass/fail per
//! assertion. Reports contain no wall-clock data, so output is byte
//! stable for a fixed seed.

use rayon::prelude::*;
use serde_json::json;

use crate::deficiency::{
    d_related_unitriangular, deficiency, deficiency_equal, first_deficiency_mismatch,
    ht_closure_check, ht_closure_check_with, ht_member_sample, ht_membership,
    idempotent_with_pattern, leftcong_check, rtilde_noncommute_witness, theta_embed,
    DeficiencyMode, Path, TightnessPattern,
};
use crate::error::Error;
use crate::factorization::{ef_power_identities, idempotent_factorize};
use crate::finite_green::{
    bool_exactness_check, check_not_abundant_witness, check_not_fountain_witness, classify,
    compute_relation, enumerate, Family, FamilySpec, Relation,
};
use crate::matrix::{Matrix, PackedBool, Shape};
use crate::plusstar::{is_idempotent, is_regular, plus_of, star_of};
use crate::sample::{
    derive_seed, rng_from_seed, sample_dom_full, sample_invertible_diagonal,
    sample_nonzero_leq_one, sample_shaped, sample_unitriangular_positive, EntryDist,
};
use crate::semiring::{Kind, Value};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

pub const SUITE_NAMES: &[&str] = &[
    "bool-tables",
    "uni4-idempotents",
    "non-fountain",
    "not-abundant",
    "plus-identity",
    "factorization",
    "ef-powers",
    "deficiency-reduction",
    "d-conjugacy",
    "ht-tables",
    "ht-nonclosure",
    "left-congruence",
    "theta-embedding",
    "regularity",
    "exactness",
];

#[derive(Debug, Clone)]
pub struct Assertion {
    pub id: String,
    pub ok: bool,
    pub detail: String,
    /// Replay data for failures: subcommand plus input text.
    pub witness: Option<serde_json::Value>,
}

impl Assertion {
    fn check(id: &str, ok: bool, detail: String, witness: Option<serde_json::Value>) -> Assertion {
        Assertion {
            id: id.into(),
            ok,
            detail,
            witness: if ok { None } else { witness },
        }
    }
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub assertions: Vec<Assertion>,
    pub passed: bool,
    /// For budget checks only; excluded from serialized output.
    pub elapsed_ms: u128,
}

impl SuiteReport {
    fn new(suite: &str, seed: u64, assertions: Vec<Assertion>, elapsed_ms: u128) -> SuiteReport {
        let passed = assertions.iter().all(|a| a.ok);
        SuiteReport {
            suite: suite.into(),
            seed,
            assertions,
            passed,
            elapsed_ms,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&json!({
            "suite": self.suite,
            "seed": self.seed,
            "passed": self.passed,
            "assertions": self.assertions.iter().map(|a| {
                let mut entry = json!({
                    "id": a.id,
                    "ok": a.ok,
                    "detail": a.detail,
                });
                if let Some(w) = &a.witness {
                    entry["witness"] = w.clone();
                }
                entry
            }).collect::<Vec<_>>(),
        }))
        .expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("suite: {}\n", self.suite));
        out.push_str(&format!("seed: {}\n", self.seed));
        out.push_str(&format!(
            "result: {} ({} assertions)\n",
            if self.passed { "PASS" } else { "FAIL" },
            self.assertions.len()
        ));
        for a in &self.assertions {
            out.push_str(&format!(
                "  [{}] {} -- {}\n",
                if a.ok { "PASS" } else { "FAIL" },
                a.id,
                a.detail
            ));
        }
        out
    }

    pub fn first_failure(&self) -> Option<&Assertion> {
        self.assertions.iter().find(|a| !a.ok)
    }
}

pub fn run_suite(name: &str, seed: u64, trials: Option<usize>) -> Result<SuiteReport, Error> {
    let start = std::time::Instant::now();
    let assertions = match name {
        "bool-tables" => bool_tables(),
        "uni4-idempotents" => uni4_idempotents(),
        "non-fountain" => non_fountain(),
        "not-abundant" => not_abundant(),
        "plus-identity" => plus_identity(seed, trials.unwrap_or(1000)),
        "factorization" => factorization_suite(seed, trials.unwrap_or(1000)),
        "ef-powers" => ef_powers(seed, trials.unwrap_or(500)),
        "deficiency-reduction" => deficiency_reduction(seed, trials.unwrap_or(125)),
        "d-conjugacy" => d_conjugacy(seed, trials.unwrap_or(125)),
        "ht-tables" => ht_tables(seed, trials.unwrap_or(200)),
        "ht-nonclosure" => ht_nonclosure(),
        "left-congruence" => left_congruence(seed, trials.unwrap_or(100)),
        "theta-embedding" => theta_embedding(seed, trials.unwrap_or(125)),
        "regularity" => regularity(seed, trials.unwrap_or(500)),
        "exactness" => exactness(),
        other => {
            return Err(Error::Unsupported(format!(
                "unknown suite '{other}'; known suites: {}",
                SUITE_NAMES.join(", ")
            )))
        }
    };
    Ok(SuiteReport::new(
        name,
        seed,
        assertions,
        start.elapsed().as_millis(),
    ))
}

pub fn run_all(seed: u64, trials: Option<usize>) -> Result<Vec<SuiteReport>, Error> {
    SUITE_NAMES
        .iter()
        .enumerate()
        .map(|(i, name)| run_suite(name, derive_seed(seed, i as u64), trials))
        .collect()
}

fn matrix_witness(subcommand: &str, input: &Matrix, note: &str) -> serde_json::Value {
    json!({
        "subcommand": subcommand,
        "input": input.to_text(),
        "note": note,
    })
}

// Classification flags of the three Boolean families at dimensions one
// to three, plus the triangular idempotent census.
fn bool_tables() -> Vec<Assertion> {
    // (family, n, regular, abundant, fountain)
    let expected = [
        (Family::FullBool, 1, true, true, true),
        (Family::FullBool, 2, true, true, true),
        (Family::FullBool, 3, false, false, true),
        (Family::UpperBool, 1, true, true, true),
        (Family::UpperBool, 2, false, true, true),
        (Family::UpperBool, 3, false, false, true),
        (Family::UniBool, 1, true, true, true),
        (Family::UniBool, 2, true, true, true),
        (Family::UniBool, 3, false, false, true),
    ];
    let mut out = Vec::new();
    for (family, n, regular, abundant, fountain) in expected {
        let report = classify(&FamilySpec { family, n }).expect("within caps");
        let ok = report.flags.regular == regular
            && report.flags.abundant == abundant
            && report.flags.fountain == fountain;
        out.push(Assertion::check(
            &format!("{}-n{}-flags", family.token(), n),
            ok,
            format!(
                "regular={} abundant={} fountain={} over {} elements",
                report.flags.regular,
                report.flags.abundant,
                report.flags.fountain,
                report.element_count
            ),
            Some(json!({ "subcommand": "classify", "report": report.to_json() })),
        ));
        if family == Family::UpperBool && n == 3 {
            out.push(Assertion::check(
                "upper-bool-n3-census",
                report.idempotent_count == 41 && report.element_count == 64,
                format!(
                    "{} idempotents among {} elements",
                    report.idempotent_count, report.element_count
                ),
                None,
            ));
        }
    }
    out
}

// Every one-sided extended class of the 4x4 unitriangular Boolean monoid
// carries exactly one idempotent, equal to the canonical identity of each
// member.
fn uni4_idempotents() -> Vec<Assertion> {
    let table = enumerate(&FamilySpec {
        family: Family::UniBool,
        n: 4,
    })
    .expect("within caps");
    let mut out = Vec::new();
    for (relation, right_sided) in [(Relation::Rtilde, true), (Relation::Ltilde, false)] {
        let partition = compute_relation(&table, relation);
        let mut classes_ok = true;
        let mut canonical_ok = true;
        for class in partition.classes() {
            let units: Vec<usize> = class
                .iter()
                .copied()
                .filter(|i| table.idempotents.contains(i))
                .collect();
            if units.len() != 1 {
                classes_ok = false;
                continue;
            }
            let e = *table.element(units[0]);
            for &i in &class {
                let m = table.element(i).to_matrix();
                let canonical = if right_sided {
                    plus_of(&m)
                } else {
                    star_of(&m).expect("unitriangular")
                };
                if PackedBool::from_matrix(&canonical) != e {
                    canonical_ok = false;
                }
            }
        }
        out.push(Assertion::check(
            &format!("{}-unique-idempotent", relation.token()),
            classes_ok,
            format!("{} classes, one idempotent each", partition.class_count),
            None,
        ));
        out.push(Assertion::check(
            &format!("{}-canonical-map", relation.token()),
            canonical_ok,
            "canonical identity of every member equals its class idempotent".into(),
        None,
        ));
    }
    out
}

fn witness_assertions(
    prefix: &str,
    runs: Vec<(usize, Kind)>,
    check: impl Fn(usize, Kind) -> Result<crate::finite_green::WitnessReport, Error>,
) -> Vec<Assertion> {
    let mut out = Vec::new();
    for (n, kind) in runs {
        let report = check(n, kind).expect("witness parameters valid");
        out.push(Assertion::check(
            &format!("{}-n{}-{}", prefix, n, kind.token()),
            report.certified(),
            format!("{} steps, verdict {}", report.steps.len(), report.verdict),
            Some(json!({ "subcommand": "greens", "report": report.to_json() })),
        ));
    }
    out
}

// The dimension-four witness against the Fountain property, certified
// exhaustively over the Booleans and by forced-row replay over both
// semifields, plus its embedded dimension-five variant.
fn non_fountain() -> Vec<Assertion> {
    let mut out = witness_assertions(
        "non-fountain",
        vec![
            (4, Kind::Boolean),
            (4, Kind::MaxPlusRational),
            (5, Kind::Boolean),
            (5, Kind::MaxPlusRational),
        ],
        check_not_fountain_witness,
    );
    let boolean4 = check_not_fountain_witness(4, Kind::Boolean).unwrap();
    out.push(Assertion::check(
        "non-fountain-exhaustive-step",
        boolean4
            .steps
            .iter()
            .any(|s| s.name == "exhaustive_idempotent_scan" && s.ok),
        "Boolean scan covered every idempotent fixing the witness".into(),
        None,
    ));
    out
}

// The dimension-three witness against abundance, over both semifields and
// with triangular partition inspection at small Boolean dimensions.
fn not_abundant() -> Vec<Assertion> {
    witness_assertions(
        "not-abundant",
        vec![
            (3, Kind::Boolean),
            (3, Kind::MaxPlusRational),
            (4, Kind::Boolean),
            (4, Kind::MaxPlusRational),
            (5, Kind::MaxPlusRational),
        ],
        check_not_abundant_witness,
    )
}

/// A left fixer of A sampled below the canonical identity: unit diagonal,
/// off-diagonal entries lowered or dropped. Unit diagonal forces BA >= A
/// and domination by the canonical identity forces BA <= A.
fn sample_fixer(rng: &mut ChaCha8Rng, p: &Matrix, dist: &EntryDist) -> Matrix {
    let n = p.n();
    let kind = p.kind();
    Matrix::from_fn(n, kind, |i, j| {
        if i == j {
            return Value::one(kind);
        }
        let cap = p.get(i, j);
        if cap.is_zero() {
            return Value::zero(kind);
        }
        match rng.gen_range(0..3u8) {
            0 => Value::zero(kind),
            1 => cap.clone(),
            _ => cap.mul(&sample_nonzero_leq_one(rng, dist)),
        }
    })
}

// Canonical left identities of random full-domain matrices: idempotent,
// fixing, and maximal among sampled fixers (with fixer products also
// dominated after absorption).
fn plus_identity(seed: u64, per_n: usize) -> Vec<Assertion> {
    let dist = EntryDist::max_plus_with_zeros(0.25);
    let fixer_dist = EntryDist::max_plus();
    let mut out = Vec::new();
    for n in 2..=6usize {
        let failures: Vec<String> = (0..per_n)
            .into_par_iter()
            .filter_map(|t| {
                let mut rng = rng_from_seed(derive_seed(seed, (n * 1_000_000 + t) as u64));
                let a = sample_dom_full(&mut rng, n, &dist);
                let p = plus_of(&a);
                if !is_idempotent(&p) {
                    return Some(format!("identity not idempotent for {}", a.to_text()));
                }
                if p.mul(&a) != a {
                    return Some(format!("identity does not fix {}", a.to_text()));
                }
                for k in 0..200 {
                    let b = if k % 2 == 0 {
                        sample_fixer(&mut rng, &p, &fixer_dist)
                    } else {
                        let b1 = sample_fixer(&mut rng, &p, &fixer_dist);
                        let b2 = sample_fixer(&mut rng, &p, &fixer_dist);
                        b1.mul(&b2)
                    };
                    if b.mul(&a) != a {
                        return Some(format!("sampler produced a non-fixer for {}", a.to_text()));
                    }
                    if !b.leq_entrywise(&p) {
                        return Some(format!("fixer above the canonical identity for {}", a.to_text()));
                    }
                    if !b.mul(&p).leq_entrywise(&p) {
                        return Some(format!("fixer product escapes the identity for {}", a.to_text()));
                    }
                }
                None
            })
            .collect();
        out.push(Assertion::check(
            &format!("plus-identity-n{n}"),
            failures.is_empty(),
            format!("{per_n} matrices, 200 fixers each, {} violations", failures.len()),
            failures.first().map(|f| json!({ "subcommand": "plus", "note": f })),
        ));
    }
    out
}

// Triangular idempotent factorizations: at most n-1 idempotent factors
// multiplying back exactly, preserving positivity.
fn factorization_suite(seed: u64, per_n: usize) -> Vec<Assertion> {
    let dist = EntryDist::max_plus_with_zeros(0.3);
    let pos_dist = EntryDist::max_plus();
    let mut out = Vec::new();
    for n in 2..=8usize {
        let failures: Vec<String> = (0..per_n)
            .into_par_iter()
            .filter_map(|t| {
                let mut rng = rng_from_seed(derive_seed(seed, (n * 1_000_000 + t) as u64));
                let positive = t % 2 == 1;
                let x = if positive {
                    sample_unitriangular_positive(&mut rng, n, &pos_dist)
                } else {
                    sample_shaped(&mut rng, n, Shape::Unitriangular, &dist)
                };
                let r = match idempotent_factorize(&x) {
                    Ok(r) => r,
                    Err(e) => return Some(format!("factorization error {e} for {}", x.to_text())),
                };
                if r.factors.len() > n - 1 {
                    return Some(format!("{} factors for {}", r.factors.len(), x.to_text()));
                }
                let mut product = Matrix::identity(n, x.kind());
                for f in &r.factors {
                    if !is_idempotent(f) {
                        return Some(format!("non-idempotent factor for {}", x.to_text()));
                    }
                    if positive && !f.flags().positive_upper {
                        return Some(format!("positivity lost for {}", x.to_text()));
                    }
                    product = product.mul(f);
                }
                if product != x {
                    return Some(format!("product mismatch for {}", x.to_text()));
                }
                None
            })
            .collect();
        out.push(Assertion::check(
            &format!("factorization-n{n}"),
            failures.is_empty(),
            format!("{per_n} matrices factored exactly, {} violations", failures.len()),
            failures.first().map(|f| json!({ "subcommand": "factor", "note": f })),
        ));
    }
    out
}

// Alternating idempotent products stabilize once the exponent passes half
// the dimension.
fn ef_powers(seed: u64, per_n: usize) -> Vec<Assertion> {
    let dist = EntryDist::max_plus_with_zeros(0.2);
    let mut out = Vec::new();
    for n in 3..=6usize {
        let m = ((n + 2) / 2) as u32;
        let failures: Vec<String> = (0..per_n)
            .into_par_iter()
            .filter_map(|t| {
                let mut rng = rng_from_seed(derive_seed(seed, (n * 1_000_000 + t) as u64));
                let e = plus_of(&sample_shaped(&mut rng, n, Shape::FullDiagonal, &dist));
                let f = plus_of(&sample_shaped(&mut rng, n, Shape::FullDiagonal, &dist));
                let report = match ef_power_identities(&e, &f, m) {
                    Ok(r) => r,
                    Err(err) => return Some(format!("error {err}")),
                };
                if !report.threshold_met || !report.all_hold {
                    let broken: Vec<&str> = report
                        .equalities
                        .iter()
                        .filter(|(_, ok)| !ok)
                        .map(|(name, _)| name.as_str())
                        .collect();
                    return Some(format!(
                        "identities failed at exponent {m}: {} for E={} F={}",
                        broken.join(", "),
                        e.to_text(),
                        f.to_text()
                    ));
                }
                None
            })
            .collect();
        out.push(Assertion::check(
            &format!("ef-powers-n{n}-m{m}"),
            failures.is_empty(),
            format!("{per_n} idempotent pairs, {} violations", failures.len()),
            failures.first().map(|f| json!({ "subcommand": "idem", "note": f })),
        ));
    }
    out
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

fn random_path(rng: &mut ChaCha8Rng, n: usize) -> Path {
    let vertices = rng.gen_range(2..=(n + 1).min(6));
    let mut v: Vec<usize> = (0..vertices).map(|_| rng.gen_range(1..=n)).collect();
    v.sort_unstable();
    Path::new(v).expect("sorted vertices form a path")
}

// Two-edge deficiency agreement propagates to all paths; independent
// pairs are separated by an exhibited two-edge path.
fn deficiency_reduction(seed: u64, per_n: usize) -> Vec<Assertion> {
    let dist = EntryDist::max_plus();
    let mut out = Vec::new();
    for n in 3..=6usize {
        let failures: Vec<String> = (0..per_n)
            .into_par_iter()
            .filter_map(|t| {
                let mut rng = rng_from_seed(derive_seed(seed, (n * 1_000_000 + t) as u64));
                let a = sample_shaped(&mut rng, n, Shape::PositiveUpper, &dist);
                let d = sample_invertible_diagonal(&mut rng, n, &dist);
                let b = d.mul(&a).mul(&diagonal_inverse(&d));
                match deficiency_equal(&a, &b, DeficiencyMode::OneAnchored) {
                    Ok(true) => {}
                    Ok(false) => {
                        return Some(format!("conjugate pair disagreed on anchored paths: {}", a.to_text()))
                    }
                    Err(e) => return Some(format!("error {e}")),
                }
                for _ in 0..50 {
                    let path = random_path(&mut rng, n);
                    let da = deficiency(&a, &path).expect("positive upper");
                    let db = deficiency(&b, &path).expect("positive upper");
                    if da != db {
                        return Some(format!("conjugate pair separated on {path} for {}", a.to_text()));
                    }
                }
                None
            })
            .collect();
        out.push(Assertion::check(
            &format!("deficiency-conjugate-n{n}"),
            failures.is_empty(),
            format!("{per_n} conjugated pairs agree on 50 sampled paths each"),
            failures.first().map(|f| json!({ "subcommand": "deficiency", "note": f })),
        ));

        let failures: Vec<String> = (0..per_n)
            .into_par_iter()
            .filter_map(|t| {
                let mut rng =
                    rng_from_seed(derive_seed(seed, (7_000_000 * n + t) as u64));
                for _ in 0..10 {
                    let a = sample_shaped(&mut rng, n, Shape::PositiveUpper, &dist);
                    let b = sample_shaped(&mut rng, n, Shape::PositiveUpper, &dist);
                    if let Some((path, da, db)) = first_deficiency_mismatch(&a, &b) {
                        if path.vertices().len() != 3 {
                            return Some(format!("separator not two-edge: {path}"));
                        }
                        if da == db {
                            return Some("mismatch reported equal values".into());
                        }
                        return None;
                    }
                }
                Some("ten independent samples were never separated".into())
            })
            .collect();
        out.push(Assertion::check(
            &format!("deficiency-separation-n{n}"),
            failures.is_empty(),
            format!("{per_n} independent pairs separated by a two-edge path"),
            failures.first().map(|f| json!({ "subcommand": "deficiency", "note": f })),
        ));
    }
    out
}

// Diagonal conjugacy detection on unitriangular positive matrices, plus
// the certified non-conjugate witness pair.
fn d_conjugacy(seed: u64, per_n: usize) -> Vec<Assertion> {
    let dist = EntryDist::max_plus();
    let mut out = Vec::new();
    for n in 3..=6usize {
        let failures: Vec<String> = (0..per_n)
            .into_par_iter()
            .filter_map(|t| {
                let mut rng = rng_from_seed(derive_seed(seed, (n * 1_000_000 + t) as u64));
                let a = sample_unitriangular_positive(&mut rng, n, &dist);
                let d = sample_invertible_diagonal(&mut rng, n, &dist);
                let b = d.mul(&a).mul(&diagonal_inverse(&d));
                let rel = match d_related_unitriangular(&a, &b) {
                    Ok(r) => r,
                    Err(e) => return Some(format!("error {e}")),
                };
                if !rel.related {
                    return Some(format!("conjugates reported unrelated: {}", a.to_text()));
                }
                let g = rel.conjugator.expect("related pairs carry a conjugator");
                if g.mul(&a).mul(&diagonal_inverse(&g)) != b {
                    return Some(format!("recovered conjugator fails for {}", a.to_text()));
                }
                None
            })
            .collect();
        out.push(Assertion::check(
            &format!("d-conjugacy-n{n}"),
            failures.is_empty(),
            format!("{per_n} conjugated pairs recovered, {} violations", failures.len()),
            failures.first().map(|f| json!({ "subcommand": "greens", "note": f })),
        ));
    }
    for n in [4usize, 5, 6] {
        let w = rtilde_noncommute_witness(n, &Value::int(1)).expect("witness parameters valid");
        let ok = !w.d_related
            && w.plus_deficiency == Value::int(2)
            && w.star_deficiency == Value::int(0)
            && w.separating_path.to_string() == "1->2->4";
        out.push(Assertion::check(
            &format!("noncommute-witness-n{n}"),
            ok,
            format!(
                "canonical idempotents separated by {} ({} vs {})",
                w.separating_path,
                w.plus_deficiency.token(),
                w.star_deficiency.token()
            ),
            Some(json!({ "subcommand": "greens", "report": w.to_json() })),
        ));
    }
    out
}

fn ht_pattern_cases() -> Vec<(String, TightnessPattern)> {
    let set = |n: usize, triples: &[(usize, usize, usize)]| {
        TightnessPattern::from_set(n, triples.iter().copied().collect::<BTreeSet<_>>())
            .expect("realizable pattern")
    };
    vec![
        ("n3-all-loose".into(), set(3, &[])),
        ("n3-all-tight".into(), set(3, &[(1, 2, 3)])),
        ("n4-all-loose".into(), set(4, &[])),
        ("n4-tight-123".into(), set(4, &[(1, 2, 3)])),
        ("n4-tight-124".into(), set(4, &[(1, 2, 4)])),
        ("n4-tight-134".into(), set(4, &[(1, 3, 4)])),
        ("n4-tight-234".into(), set(4, &[(2, 3, 4)])),
        ("n4-tight-123-124".into(), set(4, &[(1, 2, 3), (1, 2, 4)])),
        ("n4-tight-123-234".into(), set(4, &[(1, 2, 3), (2, 3, 4)])),
        ("n4-tight-124-134".into(), set(4, &[(1, 2, 4), (1, 3, 4)])),
        ("n4-tight-134-234".into(), set(4, &[(1, 3, 4), (2, 3, 4)])),
        (
            "n4-all-tight".into(),
            set(4, &[(1, 2, 3), (1, 2, 4), (1, 3, 4), (2, 3, 4)]),
        ),
    ]
}

// Extended-class tables at dimensions three and four: sampled members
// match both membership routes, perturbed matrices leave the class, and
// sampled products stay inside.
fn ht_tables(seed: u64, bucket: usize) -> Vec<Assertion> {
    let g = Value::int(1);
    let superdiag = [Value::int(-1), Value::int(-2), Value::int(-1)];
    let cases = ht_pattern_cases();
    let mut out = Vec::new();
    for (case_idx, (name, pattern)) in cases.iter().enumerate() {
        let n = pattern.n();
        let e = idempotent_with_pattern(pattern, &superdiag[..n - 1], &g)
            .expect("realizable pattern");
        let mut rng = rng_from_seed(derive_seed(seed, case_idx as u64));
        let mut members_ok = 0usize;
        let mut member_failure = None;
        for _ in 0..bucket {
            let a = ht_member_sample(&e, &mut rng).expect("supported case");
            let definitional = plus_of(&a) == e && star_of(&a).expect("full diagonal") == e;
            let member = ht_membership(&e, &a).expect("same dimension");
            if member && definitional {
                members_ok += 1;
            } else if member_failure.is_none() {
                member_failure = Some(a.to_text());
            }
        }
        let mut nonmembers_ok = 0usize;
        let mut nonmember_failure = None;
        'outer: for _ in 0..bucket {
            let a = ht_member_sample(&e, &mut rng).expect("supported case");
            for _attempt in 0..50 {
                let i = rng.gen_range(0..n);
                let j = rng.gen_range(i..n);
                let factor = Value::int(*[-5, -3, 3, 5].get(rng.gen_range(0..4)).unwrap());
                let perturbed = a.with_entry(i, j, a.get(i, j).mul(&factor));
                if !ht_membership(&e, &perturbed).expect("same dimension") {
                    nonmembers_ok += 1;
                    continue 'outer;
                }
            }
            if nonmember_failure.is_none() {
                nonmember_failure = Some(a.to_text());
            }
        }
        let closure = ht_closure_check(&e, bucket, derive_seed(seed, 10_000 + case_idx as u64))
            .expect("supported case");
        let ok = members_ok == bucket && nonmembers_ok == bucket && closure.closed;
        out.push(Assertion::check(
            &format!("ht-{name}"),
            ok,
            format!(
                "{members_ok}/{bucket} members, {nonmembers_ok}/{bucket} perturbations exit, closure {} over {} products",
                closure.closed, closure.pairs_tested
            ),
            member_failure
                .or(nonmember_failure)
                .map(|m| json!({ "subcommand": "htclass", "input": m })),
        ));
    }
    out
}

fn mp_rows(rows: &[&[i64]]) -> Matrix {
    const NEG: i64 = i64::MIN;
    Matrix::from_rows(
        Kind::MaxPlusRational,
        rows.iter()
            .map(|r| {
                r.iter()
                    .map(|&v| {
                        if v == NEG {
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

// The dimension-five extended-class non-closure instance and its corner
// embedding: squaring a member leaves the class.
fn ht_nonclosure() -> Vec<Assertion> {
    const Z: i64 = i64::MIN;
    let e = mp_rows(&[
        &[0, 0, 2, 2, 2],
        &[Z, 0, 1, 2, 2],
        &[Z, Z, 0, 0, 0],
        &[Z, Z, Z, 0, 0],
        &[Z, Z, Z, Z, 0],
    ]);
    let a = mp_rows(&[
        &[0, 0, 2, 2, 2],
        &[Z, -2, -1, 1, 2],
        &[Z, Z, -3, 0, 0],
        &[Z, Z, Z, -3, 0],
        &[Z, Z, Z, Z, 0],
    ]);
    let expected_sq = mp_rows(&[
        &[0, 0, 2, 2, 2],
        &[Z, -4, -3, -1, 2],
        &[Z, Z, -6, -3, 0],
        &[Z, Z, Z, -6, 0],
        &[Z, Z, Z, Z, 0],
    ]);
    let mut out = Vec::new();
    out.push(Assertion::check(
        "member-identities",
        plus_of(&a) == e && star_of(&a).expect("full diagonal") == e,
        "left and right canonical identities both equal E".into(),
        Some(matrix_witness("plus", &a, "expected identities to equal E")),
    ));
    let report = ht_closure_check_with(&e, &[a.clone()]).expect("supported");
    let witness = report.witness.as_ref();
    out.push(Assertion::check(
        "square-leaves-class",
        !report.closed,
        "the squared member changed its canonical identity".into(),
        Some(matrix_witness("htclass", &a, "expected closure to fail")),
    ));
    out.push(Assertion::check(
        "square-matches-expected",
        witness.map(|w| w.product == expected_sq).unwrap_or(false),
        "the squared member matches the stored matrix".into(),
        None,
    ));
    out.push(Assertion::check(
        "square-identity-shift",
        witness
            .map(|w| {
                w.product_plus == e.with_entry(1, 2, Value::int(2)) && w.product_plus != e
            })
            .unwrap_or(false),
        "the squared member's identity grew in entry (2,3)".into(),
        None,
    ));
    let e6 = theta_embed(&e).expect("unit corners");
    let a6 = theta_embed(&a).expect("unit corners");
    let report6 = ht_closure_check_with(&e6, &[a6]).expect("supported");
    out.push(Assertion::check(
        "embedded-instance-reproduces",
        !report6.closed
            && report6
                .witness
                .as_ref()
                .map(|w| w.product_plus == e6.with_entry(1, 2, Value::int(2)))
                .unwrap_or(false),
        "the corner-embedded instance shows the same violation".into(),
        None,
    ));
    out
}

// Left multiplication preserves canonical-identity agreement exactly for
// right-scaling-related pairs; unrelated pairs with a shared identity are
// separated by the row-rescaling construction.
fn left_congruence(seed: u64, pairs: usize) -> Vec<Assertion> {
    let dist = EntryDist::max_plus();
    let mut out = Vec::new();

    let failures: Vec<String> = (0..pairs)
        .into_par_iter()
        .filter_map(|t| {
            let n = 3 + t % 3;
            let mut rng = rng_from_seed(derive_seed(seed, t as u64));
            let a = sample_shaped(&mut rng, n, Shape::PositiveUpper, &dist);
            let d = sample_invertible_diagonal(&mut rng, n, &dist);
            let b = a.mul(&d);
            if plus_of(&a) != plus_of(&b) {
                return Some(format!("column scaling changed the identity: {}", a.to_text()));
            }
            let report = match leftcong_check(&a, &b, 100, derive_seed(seed, 50_000 + t as u64)) {
                Ok(r) => r,
                Err(e) => return Some(format!("error {e}")),
            };
            if !report.r_related || report.sampled_agree != Some(true) {
                return Some(format!("column-scaled pair not recognized: {}", a.to_text()));
            }
            None
        })
        .collect();
    out.push(Assertion::check(
        "related-pairs-agree",
        failures.is_empty(),
        format!("{pairs} column-scaled pairs agree under 100 sampled left factors each"),
        failures.first().map(|f| json!({ "subcommand": "greens", "note": f })),
    ));

    // Same left identity, different column normalization: two sampled
    // members of one extended class. Loose patterns only contain scalar
    // multiples (all mutually related), so draw from the classes whose
    // members carry free diagonal parameters.
    let patterns: Vec<_> = ht_pattern_cases()
        .into_iter()
        .filter(|(name, _)| {
            matches!(
                name.as_str(),
                "n3-all-tight"
                    | "n4-tight-123-124"
                    | "n4-tight-124-134"
                    | "n4-tight-134-234"
                    | "n4-all-tight"
            )
        })
        .collect();
    let failures: Vec<String> = (0..pairs)
        .into_par_iter()
        .filter_map(|t| {
            let (_, pattern) = &patterns[t % patterns.len()];
            let n = pattern.n();
            let superdiag = vec![Value::int(-1); n - 1];
            let e = idempotent_with_pattern(pattern, &superdiag, &Value::int(1))
                .expect("realizable pattern");
            let mut rng = rng_from_seed(derive_seed(seed, 100_000 + t as u64));
            for _ in 0..10 {
                let a = ht_member_sample(&e, &mut rng).expect("supported case");
                let b = ht_member_sample(&e, &mut rng).expect("supported case");
                if plus_of(&a) != e || plus_of(&b) != e {
                    return Some(format!("member left the class: {}", a.to_text()));
                }
                let report =
                    match leftcong_check(&a, &b, 100, derive_seed(seed, 150_000 + t as u64)) {
                        Ok(r) => r,
                        Err(err) => return Some(format!("error {err}")),
                    };
                if report.r_related {
                    continue;
                }
                let c = match report.separator {
                    Some(c) => c,
                    None => return Some(format!("no separator found for {}", a.to_text())),
                };
                if plus_of(&c.mul(&a)) == plus_of(&c.mul(&b)) {
                    return Some(format!("separator does not separate {}", a.to_text()));
                }
                return None;
            }
            Some("ten member pairs were all column scalings of each other".into())
        })
        .collect();
    out.push(Assertion::check(
        "unrelated-pairs-separated",
        failures.is_empty(),
        format!("{pairs} shared-identity pairs separated constructively"),
        failures.first().map(|f| json!({ "subcommand": "greens", "note": f })),
    ));
    out
}

// The last-column duplication embedding preserves products and both
// canonical identities.
fn theta_embedding(seed: u64, per_n: usize) -> Vec<Assertion> {
    let dist = EntryDist::max_plus_with_zeros(0.2);
    let mut out = Vec::new();
    for n in 3..=6usize {
        let failures: Vec<String> = (0..per_n)
            .into_par_iter()
            .filter_map(|t| {
                let mut rng = rng_from_seed(derive_seed(seed, (n * 1_000_000 + t) as u64));
                let corner_sample = |rng: &mut ChaCha8Rng| {
                    sample_shaped(rng, n, Shape::FullDiagonal, &dist)
                        .with_entry(0, 0, Value::int(0))
                        .with_entry(n - 1, n - 1, Value::int(0))
                };
                let a = corner_sample(&mut rng);
                let b = corner_sample(&mut rng);
                let ta = theta_embed(&a).expect("unit corners");
                let tb = theta_embed(&b).expect("unit corners");
                if theta_embed(&a.mul(&b)).expect("unit corners") != ta.mul(&tb) {
                    return Some(format!("products not preserved for {}", a.to_text()));
                }
                if theta_embed(&plus_of(&a)).expect("unit corners") != plus_of(&ta) {
                    return Some(format!("left identity not preserved for {}", a.to_text()));
                }
                let sa = star_of(&a).expect("full diagonal");
                if theta_embed(&sa).expect("unit corners") != star_of(&ta).expect("full diagonal")
                {
                    return Some(format!("right identity not preserved for {}", a.to_text()));
                }
                None
            })
            .collect();
        out.push(Assertion::check(
            &format!("theta-n{n}"),
            failures.is_empty(),
            format!("{per_n} embedded pairs, {} violations", failures.len()),
            failures.first().map(|f| json!({ "subcommand": "greens", "note": f })),
        ));
    }
    out
}

// Sandwich-residual regularity certification over both semifields, and
// the unitriangular non-regularity certificate.
fn regularity(seed: u64, samples: usize) -> Vec<Assertion> {
    let mut out = Vec::new();

    let mut boolean_ok = true;
    let mut boolean_note = String::new();
    for bits in 0..16u64 {
        let a = PackedBool::new(2, bits).to_matrix();
        let (regular, witness) = is_regular(&a);
        let verified = witness
            .as_ref()
            .map(|x| a.mul(x).mul(&a) == a)
            .unwrap_or(false);
        if !regular || !verified {
            boolean_ok = false;
            boolean_note = a.to_text();
        }
    }
    out.push(Assertion::check(
        "boolean-2x2-all-regular",
        boolean_ok,
        "all 16 matrices certified with verified sandwich witnesses".into(),
        (!boolean_ok).then(|| json!({ "subcommand": "regular", "input": boolean_note })),
    ));

    let dist = EntryDist::max_plus_with_zeros(0.25);
    let failures: Vec<String> = (0..samples)
        .into_par_iter()
        .filter_map(|t| {
            let mut rng = rng_from_seed(derive_seed(seed, t as u64));
            let a = sample_shaped(&mut rng, 2, Shape::General, &dist);
            let (regular, witness) = is_regular(&a);
            let verified = witness
                .as_ref()
                .map(|x| a.mul(x).mul(&a) == a)
                .unwrap_or(false);
            if !regular || !verified {
                return Some(a.to_text());
            }
            None
        })
        .collect();
    out.push(Assertion::check(
        "maxplus-2x2-all-regular",
        failures.is_empty(),
        format!("{samples} sampled matrices certified, {} failures", failures.len()),
        failures
            .first()
            .map(|f| json!({ "subcommand": "regular", "input": f })),
    ));

    // The all-ones-parameter unitriangular matrix: any unitriangular X
    // dominates the identity entrywise, so EXE dominates E squared, whose
    // corner exceeds E's corner.
    let g = Value::int(1);
    let e = Matrix::from_fn(3, Kind::MaxPlusRational, |i, j| {
        if i == j {
            Value::int(0)
        } else if i < j {
            g.clone()
        } else {
            Value::zero(Kind::MaxPlusRational)
        }
    });
    let floor = e.mul(&Matrix::identity(3, Kind::MaxPlusRational)).mul(&e);
    let corner_grows = e.get(0, 2).cmp_order(floor.get(0, 2)).is_lt();
    let mut rng = rng_from_seed(derive_seed(seed, 999));
    let pos = EntryDist::max_plus();
    let sampled_all_move = (0..200).all(|_| {
        let x = sample_shaped(&mut rng, 3, Shape::Unitriangular, &pos);
        e.mul(&x).mul(&e) != e
    });
    out.push(Assertion::check(
        "unitriangular-3x3-not-regular",
        corner_grows && sampled_all_move,
        "corner entry of EXE provably exceeds E's corner for every unitriangular X".into(),
        Some(matrix_witness("regular", &e, "expected non-regularity certificate")),
    ));
    out
}

// Boolean exactness at small dimensions, and agreement of the ideal and
// kernel relations on the full dimension-three monoid.
fn exactness() -> Vec<Assertion> {
    let mut out = Vec::new();
    for n in 1..=3usize {
        let ok = bool_exactness_check(n).expect("within caps");
        out.push(Assertion::check(
            &format!("exactness-n{n}"),
            ok,
            format!("kernel containment matches space containment for all pairs at n={n}"),
            None,
        ));
    }
    let table = enumerate(&FamilySpec {
        family: Family::FullBool,
        n: 3,
    })
    .expect("within caps");
    let r = compute_relation(&table, Relation::R);
    let rs = compute_relation(&table, Relation::Rstar);
    out.push(Assertion::check(
        "ideal-equals-kernel-n3",
        r.refines(&rs) && rs.refines(&r),
        format!(
            "both partitions have {} classes over {} elements",
            r.class_count,
            table.len()
        ),
        None,
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_suite_is_rejected() {
        assert!(run_suite("no-such-suite", 0, None).is_err());
    }

    #[test]
    fn quick_suites_pass() {
        for name in ["bool-tables", "uni4-idempotents", "ht-nonclosure", "exactness"] {
            let report = run_suite(name, 0, None).unwrap();
            assert!(report.passed, "{name}: {}", report.to_text());
        }
    }

    #[test]
    fn sampled_suites_pass_with_reduced_trials() {
        for name in [
            "non-fountain",
            "not-abundant",
            "plus-identity",
            "factorization",
            "ef-powers",
            "deficiency-reduction",
            "d-conjugacy",
            "ht-tables",
            "left-congruence",
            "theta-embedding",
            "regularity",
        ] {
            let report = run_suite(name, 7, Some(12)).unwrap();
            assert!(report.passed, "{name}: {}", report.to_text());
        }
    }

    #[test]
    fn reports_are_byte_stable() {
        let a = run_suite("ht-tables", 3, Some(5)).unwrap();
        let b = run_suite("ht-tables", 3, Some(5)).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        assert_eq!(a.to_text(), b.to_text());
        let c = run_suite("plus-identity", 11, Some(4)).unwrap();
        let d = run_suite("plus-identity", 11, Some(4)).unwrap();
        assert_eq!(c.to_json(), d.to_json());
    }

    #[test]
    fn all_runs_every_suite() {
        let reports = run_all(1, Some(3)).unwrap();
        assert_eq!(reports.len(), SUITE_NAMES.len());
        for r in &reports {
            assert!(r.passed, "{}: {}", r.suite, r.to_text());
        }
    }
}
