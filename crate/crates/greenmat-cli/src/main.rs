//! Command-line front end. Exit codes: 0 success, 1 verification failure
//! (a JSON witness is emitted), 2 usage or input errors.

use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use greenmat::deficiency::{
    d_related_unitriangular, deficiency, deficiency_equal, ht_class_descriptor,
    ht_closure_check, ht_closure_check_with, ht_membership, leftcong_check, tight_all_idempotent,
    tightness_pattern, DeficiencyMode, Path,
};
use greenmat::factorization::{idempotent_factorize, normal_form};
use greenmat::finite_green::{classify, Family, FamilySpec};
use greenmat::matrix::Matrix;
use greenmat::plusstar::{is_idempotent, is_regular, plus_of, star_of};
use greenmat::semiring::{Kind, Value};
use greenmat::suites::{run_all, run_suite, SuiteReport, SUITE_NAMES};
use greenmat::Error;

#[derive(Parser)]
#[command(
    name = "greenmat",
    version,
    about = "Exact matrix computations over idempotent semifields",
    after_help = "Matrix input is a header line `n <dim> <kind>` (kind: bool | maxplus) \
followed by <dim> whitespace-separated rows; `-inf` (maxplus) and `0` (bool) denote the \
semifield zero, rationals like `-3/2` are accepted. Blank lines and `#` comments are \
ignored. Subcommands read the file given as INPUT, or stdin when INPUT is `-` or absent. \
All sampling uses a seeded PRNG (--seed, default 0) and reports are byte-stable for a \
fixed seed."
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Copy, Clone, PartialEq, Eq, Default, ValueEnum)]
enum Output {
    #[default]
    Text,
    Json,
}

#[derive(Args)]
struct InputArgs {
    /// Input file; `-` or absent reads stdin.
    input: Option<PathBuf>,
    /// Report format.
    #[arg(long, value_enum, default_value_t)]
    output: Output,
    /// PRNG seed for any sampling; echoed in the report header.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the canonical left identity of the input matrix.
    Plus(InputArgs),
    /// Print the canonical right identity (upper triangular input).
    Star(InputArgs),
    /// Check idempotency of the input, or generate a canonical idempotent
    /// with --n and --g in place of an input matrix.
    Idem {
        #[command(flatten)]
        io: InputArgs,
        /// Dimension of the generated idempotent.
        #[arg(long)]
        n: Option<usize>,
        /// Superdiagonal parameter of the generated idempotent (rational,
        /// max-plus notation).
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        g: String,
        /// Semifield of the generated idempotent.
        #[arg(long, default_value = "maxplus")]
        kind: String,
    },
    /// Decide regularity by the sandwich residual; prints a verified
    /// witness when regular.
    Regular(InputArgs),
    /// Factor a unitriangular matrix into at most n-1 idempotents.
    Factor(InputArgs),
    /// Two-edge deficiency table of one matrix, or deficiency agreement of
    /// two matrices.
    Deficiency(InputArgs),
    /// Tightness pattern (and class descriptor at dimensions 3 and 4) of
    /// an idempotent.
    Tightness(InputArgs),
    /// Extended-class closure around an idempotent E: samples --trials
    /// member products (input E alone), or checks the provided members
    /// (input E followed by member matrices). Exit 1 when closure fails.
    Htclass {
        #[command(flatten)]
        io: InputArgs,
        /// Sampled member count when no members are provided.
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Canonical identities of one matrix, or relation reports for a pair:
    /// diagonal conjugacy for unitriangular positive matrices, left-ideal
    /// relation and left-congruence probes for positive upper pairs.
    Greens {
        #[command(flatten)]
        io: InputArgs,
        /// Sampled left factors in the congruence probe.
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Classify a finite Boolean matrix family: regular/abundant/Fountain
    /// flags, relation class counts, witnesses.
    Classify {
        /// Family token: full-bool | upper-bool | uni-bool | well-behaved
        /// | hall | reflexive.
        #[arg(long)]
        family: String,
        /// Matrix dimension.
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value_t)]
        output: Output,
    },
    /// Run a named verification suite, or `all`. Exit 1 on any failed
    /// assertion, with a standalone witness file.
    Verify {
        /// Suite name (see --list) or `all`.
        #[arg(long, required_unless_present = "list")]
        suite: Option<String>,
        /// PRNG seed; echoed in the report header.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Override the per-group sample count.
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, value_enum, default_value_t)]
        output: Output,
        /// Directory for witness files of failed assertions.
        #[arg(long, default_value = ".")]
        witness_dir: PathBuf,
        /// List the available suites and exit.
        #[arg(long)]
        list: bool,
    },
}

/// Failures that map to specific exit codes.
enum Failure {
    /// Bad usage or unparseable/ill-shaped input: exit 2.
    Usage(String),
    /// A checked claim failed: exit 1, witness already printed.
    Verification,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        Failure::Usage(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("greenmat: {msg}");
            ExitCode::from(2)
        }
    }
}

fn read_input(path: &Option<PathBuf>) -> Result<String, Failure> {
    match path {
        Some(p) if p.as_os_str() != "-" => std::fs::read_to_string(p)
            .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", p.display()))),
        _ => {
            let mut buf = String::new();
            std::io::stdin()
                .read_to_string(&mut buf)
                .map_err(|e| Failure::Usage(format!("cannot read stdin: {e}")))?;
            Ok(buf)
        }
    }
}

fn matrices_from(io: &InputArgs) -> Result<Vec<Matrix>, Failure> {
    Ok(Matrix::parse_all(&read_input(&io.input)?)?)
}

fn one_matrix(io: &InputArgs) -> Result<Matrix, Failure> {
    let ms = matrices_from(io)?;
    match <[Matrix; 1]>::try_from(ms) {
        Ok([m]) => Ok(m),
        Err(ms) => Err(Failure::Usage(format!(
            "expected exactly one matrix, found {}",
            ms.len()
        ))),
    }
}

fn header(subcommand: &str, seed: u64) -> String {
    format!("# greenmat {subcommand}\n# seed: {seed}\n")
}

fn matrix_json(m: &Matrix) -> serde_json::Value {
    serde_json::from_str(&m.to_json(None)).expect("matrix json is valid")
}

fn print_report(io_output: Output, text: String, json: serde_json::Value) {
    match io_output {
        Output::Text => print!("{text}"),
        Output::Json => println!(
            "{}",
            serde_json::to_string_pretty(&json).expect("report serializes")
        ),
    }
}

/// Emits a verification-failure witness on stdout (single JSON line, both
/// output modes) and signals exit 1.
fn fail_verification(witness: serde_json::Value) -> Failure {
    println!("{}", serde_json::to_string(&witness).expect("witness serializes"));
    Failure::Verification
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Cmd::Plus(io) => {
            let a = one_matrix(&io)?;
            let p = plus_of(&a);
            print_report(
                io.output,
                format!("{}{}", header("plus", io.seed), p.to_text()),
                json!({ "subcommand": "plus", "seed": io.seed, "plus": matrix_json(&p) }),
            );
            Ok(())
        }
        Cmd::Star(io) => {
            let a = one_matrix(&io)?;
            let s = star_of(&a)?;
            print_report(
                io.output,
                format!("{}{}", header("star", io.seed), s.to_text()),
                json!({ "subcommand": "star", "seed": io.seed, "star": matrix_json(&s) }),
            );
            Ok(())
        }
        Cmd::Idem { io, n, g, kind } => run_idem(io, n, &g, &kind),
        Cmd::Regular(io) => {
            let a = one_matrix(&io)?;
            let (regular, witness) = is_regular(&a);
            if let Some(x) = &witness {
                if a.mul(x).mul(&a) != a {
                    return Err(fail_verification(json!({
                        "subcommand": "regular",
                        "input": a.to_text(),
                        "note": "reported witness failed re-verification",
                    })));
                }
            }
            let mut text = format!("{}regular: {regular}\n", header("regular", io.seed));
            if let Some(x) = &witness {
                text.push_str("# witness X with A X A = A, verified\n");
                text.push_str(&x.to_text());
            }
            print_report(
                io.output,
                text,
                json!({
                    "subcommand": "regular",
                    "seed": io.seed,
                    "regular": regular,
                    "witness": witness.as_ref().map(matrix_json),
                    "verified": witness.is_some(),
                }),
            );
            Ok(())
        }
        Cmd::Factor(io) => {
            let x = one_matrix(&io)?;
            let r = idempotent_factorize(&x)?;
            let mut product = Matrix::identity(x.n(), x.kind());
            for f in &r.factors {
                product = product.mul(f);
            }
            if product != x || r.factors.iter().any(|f| !is_idempotent(f)) {
                return Err(fail_verification(json!({
                    "subcommand": "factor",
                    "input": x.to_text(),
                    "note": "factorization failed re-verification",
                })));
            }
            let mut text = header("factor", io.seed);
            text.push_str(&format!("# factors: {}\n", r.factors.len()));
            for f in &r.factors {
                text.push_str(&f.to_text());
                text.push_str("# idempotent: true\n");
            }
            print_report(
                io.output,
                text,
                json!({
                    "subcommand": "factor",
                    "seed": io.seed,
                    "factors": r.factors.iter().map(|f| json!({
                        "matrix": matrix_json(f),
                        "idempotent": true,
                    })).collect::<Vec<_>>(),
                }),
            );
            Ok(())
        }
        Cmd::Deficiency(io) => run_deficiency(io),
        Cmd::Tightness(io) => {
            let e = one_matrix(&io)?;
            let pattern = tightness_pattern(&e)?;
            let triples: Vec<String> = pattern
                .tight_set()
                .iter()
                .map(|(i, k, j)| format!("({i},{k},{j})"))
                .collect();
            let descriptor = ht_class_descriptor(&e).ok();
            let mut text = format!(
                "{}tight triples: {}\n",
                header("tightness", io.seed),
                if triples.is_empty() {
                    "none (all loose)".into()
                } else {
                    triples.join(" ")
                }
            );
            if let Some(d) = &descriptor {
                text.push_str(&format!(
                    "class case: {:?}\nclass is group: {}\nmember constraints: {}\n",
                    d.case, d.class_is_group, d.constraints
                ));
            }
            print_report(
                io.output,
                text,
                json!({
                    "subcommand": "tightness",
                    "seed": io.seed,
                    "tight": pattern.tight_set().iter().collect::<Vec<_>>(),
                    "descriptor": descriptor.map(|d| json!({
                        "case": format!("{:?}", d.case),
                        "class_is_group": d.class_is_group,
                        "constraints": d.constraints,
                    })),
                }),
            );
            Ok(())
        }
        Cmd::Htclass { io, trials } => run_htclass(io, trials),
        Cmd::Greens { io, trials } => run_greens(io, trials),
        Cmd::Classify { family, n, output } => {
            let family = Family::parse(&family)?;
            let report = classify(&FamilySpec { family, n })?;
            match output {
                Output::Json => println!("{}", report.to_json()),
                Output::Text => print!("{}", report.to_text()),
            }
            Ok(())
        }
        Cmd::Verify {
            suite,
            seed,
            trials,
            output,
            witness_dir,
            list,
        } => {
            if list {
                for name in SUITE_NAMES {
                    println!("{name}");
                }
                return Ok(());
            }
            run_verify(&suite.expect("required"), seed, trials, output, &witness_dir)
        }
    }
}

fn run_idem(io: InputArgs, n: Option<usize>, g: &str, kind: &str) -> Result<(), Failure> {
    if let Some(n) = n {
        if n < 2 {
            return Err(Failure::Usage("generation needs --n at least 2".into()));
        }
        let kind = Kind::parse(kind)?;
        let g = Value::parse(kind, g)?;
        if g.is_zero() {
            return Err(Failure::Usage("--g must be a nonzero value".into()));
        }
        let e = tight_all_idempotent(kind, &vec![g; n - 1])?;
        print_report(
            io.output,
            format!("{}{}", header("idem", io.seed), e.to_text()),
            json!({ "subcommand": "idem", "seed": io.seed, "idempotent": matrix_json(&e) }),
        );
        return Ok(());
    }
    let e = one_matrix(&io)?;
    let square = e.mul(&e);
    let ok = square == e;
    print_report(
        io.output,
        format!("{}idempotent: {ok}\n", header("idem", io.seed)),
        json!({ "subcommand": "idem", "seed": io.seed, "idempotent": ok }),
    );
    if !ok {
        return Err(fail_verification(json!({
            "subcommand": "idem",
            "input": e.to_text(),
            "square": square.to_text(),
            "note": "square differs from the input",
        })));
    }
    Ok(())
}

fn run_deficiency(io: InputArgs) -> Result<(), Failure> {
    let ms = matrices_from(&io)?;
    match ms.as_slice() {
        [a] => {
            let n = a.n();
            let mut lines = Vec::new();
            let mut entries = Vec::new();
            for i in 1..=n {
                for k in i..=n {
                    for j in k..=n {
                        let path = Path::new(vec![i, k, j]).expect("nondecreasing");
                        let v = deficiency(a, &path)?;
                        lines.push(format!("def {path}: {}", v.token()));
                        entries.push(json!({ "path": path.to_string(), "value": v.token() }));
                    }
                }
            }
            print_report(
                io.output,
                format!("{}{}\n", header("deficiency", io.seed), lines.join("\n")),
                json!({ "subcommand": "deficiency", "seed": io.seed, "two_edge": entries }),
            );
            Ok(())
        }
        [a, b] => {
            let anchored = deficiency_equal(a, b, DeficiencyMode::OneAnchored)?;
            let all = deficiency_equal(a, b, DeficiencyMode::AllPaths)?;
            let mismatch = greenmat::deficiency::first_deficiency_mismatch(a, b);
            let mut text = format!(
                "{}anchored two-edge agreement: {anchored}\nall-path agreement: {all}\n",
                header("deficiency", io.seed)
            );
            if let Some((path, va, vb)) = &mismatch {
                text.push_str(&format!(
                    "first mismatch: {path} ({} vs {})\n",
                    va.token(),
                    vb.token()
                ));
            }
            print_report(
                io.output,
                text,
                json!({
                    "subcommand": "deficiency",
                    "seed": io.seed,
                    "anchored_agreement": anchored,
                    "all_path_agreement": all,
                    "first_mismatch": mismatch.map(|(p, va, vb)| json!({
                        "path": p.to_string(),
                        "left": va.token(),
                        "right": vb.token(),
                    })),
                }),
            );
            Ok(())
        }
        _ => Err(Failure::Usage(format!(
            "deficiency takes one or two matrices, found {}",
            ms.len()
        ))),
    }
}

fn run_htclass(io: InputArgs, trials: Option<usize>) -> Result<(), Failure> {
    let ms = matrices_from(&io)?;
    let (e, members) = ms
        .split_first()
        .ok_or_else(|| Failure::Usage("htclass needs at least one matrix".into()))?;
    if !is_idempotent(e) {
        return Err(Failure::Usage(
            "the first matrix must be idempotent".into(),
        ));
    }
    for (idx, m) in members.iter().enumerate() {
        // The tabulated two-route membership covers dimensions 3 and 4;
        // elsewhere membership is the definitional identity test.
        let member = match ht_membership(e, m) {
            Ok(b) => b,
            Err(Error::Unsupported(_)) => {
                m.flags().upper
                    && m.flags().full_diagonal
                    && plus_of(m) == *e
                    && star_of(m).map(|s| s == *e).unwrap_or(false)
            }
            Err(err) => return Err(err.into()),
        };
        if !member {
            return Err(fail_verification(json!({
                "subcommand": "htclass",
                "input": e.to_text(),
                "member": m.to_text(),
                "note": format!("matrix {} is not in the extended class of E", idx + 2),
            })));
        }
    }
    let report = if members.is_empty() {
        ht_closure_check(e, trials.unwrap_or(200), io.seed)?
    } else {
        ht_closure_check_with(e, members)?
    };
    let mut text = format!(
        "{}members: {}\nproducts tested: {}\nclosed: {}\n",
        header("htclass", io.seed),
        if members.is_empty() {
            format!("{} sampled", trials.unwrap_or(200))
        } else {
            format!("{} provided", members.len())
        },
        report.pairs_tested,
        report.closed
    );
    if let Some(w) = &report.witness {
        text.push_str("# violating product\n");
        text.push_str(&w.product.to_text());
    }
    print_report(
        io.output,
        text,
        serde_json::from_str(&report.to_json()).expect("report json is valid"),
    );
    if !report.closed {
        let w = report.witness.expect("open closure carries a witness");
        return Err(fail_verification(json!({
            "subcommand": "htclass",
            "input": format!("{}{}{}", e.to_text(), w.a.to_text(), w.b.to_text()),
            "product": w.product.to_text(),
            "product_plus": w.product_plus.to_text(),
            "product_star": w.product_star.to_text(),
            "note": "product of the two appended members leaves the class",
        })));
    }
    Ok(())
}

fn run_greens(io: InputArgs, trials: Option<usize>) -> Result<(), Failure> {
    let ms = matrices_from(&io)?;
    match ms.as_slice() {
        [a] => {
            let p = plus_of(a);
            let star = if a.flags().upper {
                Some(star_of(a)?)
            } else {
                None
            };
            let shapes: Vec<String> = a
                .satisfied_shapes()
                .iter()
                .map(|s| s.to_string())
                .collect();
            let mut text = format!(
                "{}shapes: {}\n# canonical left identity\n{}",
                header("greens", io.seed),
                shapes.join(" "),
                p.to_text()
            );
            if let Some(s) = &star {
                text.push_str("# canonical right identity\n");
                text.push_str(&s.to_text());
            }
            print_report(
                io.output,
                text,
                json!({
                    "subcommand": "greens",
                    "seed": io.seed,
                    "shapes": shapes,
                    "plus": matrix_json(&p),
                    "star": star.as_ref().map(matrix_json),
                }),
            );
            Ok(())
        }
        [a, b] => {
            if a.flags().unitriangular
                && b.flags().unitriangular
                && a.flags().positive_upper
                && b.flags().positive_upper
            {
                let rel = d_related_unitriangular(a, b)?;
                let mut text = format!(
                    "{}diagonal conjugacy: {}\n",
                    header("greens", io.seed),
                    rel.related
                );
                if let Some(g) = &rel.conjugator {
                    text.push_str("# conjugator G with G A G^-1 = B\n");
                    text.push_str(&g.to_text());
                }
                if let Some((path, va, vb)) = &rel.mismatch {
                    text.push_str(&format!(
                        "separating path: {path} ({} vs {})\n",
                        va.token(),
                        vb.token()
                    ));
                }
                print_report(
                    io.output,
                    text,
                    json!({
                        "subcommand": "greens",
                        "seed": io.seed,
                        "d_related": rel.related,
                        "conjugator": rel.conjugator.as_ref().map(matrix_json),
                        "mismatch": rel.mismatch.map(|(p, va, vb)| json!({
                            "path": p.to_string(),
                            "left": va.token(),
                            "right": vb.token(),
                        })),
                    }),
                );
                return Ok(());
            }
            if a.flags().positive_upper && b.flags().positive_upper {
                let report = leftcong_check(a, b, trials.unwrap_or(100), io.seed)?;
                let rnorm_a = normal_form(a)?.rnorm;
                let rnorm_b = normal_form(b)?.rnorm;
                debug_assert_eq!(report.r_related, rnorm_a == rnorm_b);
                let mut text = format!(
                    "{}right-scaling related: {}\nshared left identity: {}\n",
                    header("greens", io.seed),
                    report.r_related,
                    plus_of(a) == plus_of(b)
                );
                match (&report.separator, report.r_related) {
                    (Some(c), _) => {
                        text.push_str("# left factor separating the identities\n");
                        text.push_str(&c.to_text());
                    }
                    (None, false) => {
                        text.push_str(&format!(
                            "separator: none found in {} samples\n",
                            report.trials
                        ));
                    }
                    _ => {
                        text.push_str(&format!(
                            "identities agree under {} sampled left factors\n",
                            report.trials
                        ));
                    }
                }
                print_report(
                    io.output,
                    text,
                    json!({
                        "subcommand": "greens",
                        "seed": io.seed,
                        "r_related": report.r_related,
                        "same_plus": plus_of(a) == plus_of(b),
                        "trials": report.trials,
                        "separator": report.separator.as_ref().map(matrix_json),
                        "inconclusive": report.inconclusive,
                    }),
                );
                return Ok(());
            }
            Err(Failure::Usage(
                "pair reports cover positive upper matrices (diagonal conjugacy \
                 additionally needs unit diagonals)"
                    .into(),
            ))
        }
        _ => Err(Failure::Usage(format!(
            "greens takes one or two matrices, found {}",
            ms.len()
        ))),
    }
}

fn run_verify(
    suite: &str,
    seed: u64,
    trials: Option<usize>,
    output: Output,
    witness_dir: &std::path::Path,
) -> Result<(), Failure> {
    let reports: Vec<SuiteReport> = if suite == "all" {
        run_all(seed, trials)?
    } else {
        vec![run_suite(suite, seed, trials)?]
    };
    match output {
        Output::Text => {
            for r in &reports {
                print!("{}", r.to_text());
            }
        }
        Output::Json => {
            let docs: Vec<serde_json::Value> = reports
                .iter()
                .map(|r| serde_json::from_str(&r.to_json()).expect("report json is valid"))
                .collect();
            println!(
                "{}",
                serde_json::to_string_pretty(&docs).expect("report serializes")
            );
        }
    }
    let mut failed = false;
    for r in &reports {
        if r.passed {
            continue;
        }
        failed = true;
        let a = r.first_failure().expect("failed suite has a failure");
        let witness = json!({
            "suite": r.suite,
            "seed": r.seed,
            "assertion": a.id,
            "detail": a.detail,
            "witness": a.witness,
        });
        let path = witness_dir.join(format!("greenmat-witness-{}.json", r.suite));
        std::fs::write(
            &path,
            serde_json::to_string_pretty(&witness).expect("witness serializes"),
        )
        .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))?;
        eprintln!("greenmat: suite {} failed, witness at {}", r.suite, path.display());
    }
    if failed {
        return Err(Failure::Verification);
    }
    Ok(())
}
