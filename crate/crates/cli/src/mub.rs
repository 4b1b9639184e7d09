use std::fmt::Write as _;
use std::process::ExitCode;

use biqutrit::qutrit::verify_mub;
use biqutrit::report::{fmt_num, round_sig, RunManifest};
use biqutrit::Result;
use serde::Serialize;

use crate::output::{emit, to_json, OutArg};
use crate::EXIT_CHECK_FAILED;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Print JSON instead of a table.
    #[arg(long)]
    json: bool,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Serialize)]
struct Violation {
    a: String,
    b: String,
    overlap: f64,
    expected: f64,
}

#[derive(Serialize)]
struct MubJson {
    manifest: RunManifest,
    states: Vec<String>,
    overlaps: Vec<Vec<f64>>,
    max_deviation: f64,
    tolerance: f64,
    passed: bool,
    violations: Vec<Violation>,
}

pub fn run(args: Args) -> Result<ExitCode> {
    let r = verify_mub();
    let report = MubJson {
        manifest: RunManifest::new("mub", None),
        states: r.ids.iter().map(|id| id.name()).collect(),
        overlaps: r
            .overlaps
            .iter()
            .map(|row| row.iter().map(|&x| round_sig(x)).collect())
            .collect(),
        max_deviation: round_sig(r.max_deviation),
        tolerance: r.tolerance,
        passed: r.passed(),
        violations: r
            .violations
            .iter()
            .map(|v| Violation {
                a: v.a.name(),
                b: v.b.name(),
                overlap: v.overlap,
                expected: v.expected,
            })
            .collect(),
    };
    let out = if args.json {
        to_json(&report)
    } else {
        let mut s = String::from("state");
        for n in &report.states {
            let _ = write!(s, ",{n}");
        }
        s.push('\n');
        for (n, row) in report.states.iter().zip(&report.overlaps) {
            s.push_str(n);
            for x in row {
                let _ = write!(s, ",{}", fmt_num(*x));
            }
            s.push('\n');
        }
        let _ = writeln!(
            s,
            "# {} pairs, max deviation {:.3e}, tolerance {:e}: {}",
            r.pair_count(),
            r.max_deviation,
            r.tolerance,
            if r.passed() { "pass" } else { "FAIL" }
        );
        for v in &report.violations {
            let _ = writeln!(s, "# violation {} {}: {} (expected {})", v.a, v.b, v.overlap, v.expected);
        }
        s
    };
    emit(args.out.out.as_deref(), &out)?;
    if !r.passed() {
        for v in &report.violations {
            eprintln!("MUB violation: {} vs {}: {} (expected {})", v.a, v.b, v.overlap, v.expected);
        }
        return Ok(ExitCode::from(EXIT_CHECK_FAILED));
    }
    Ok(ExitCode::SUCCESS)
}
