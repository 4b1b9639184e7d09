use std::fmt::Write as _;
use std::process::ExitCode;
use std::str::FromStr;

use biqutrit::optics::filters_for_state;
use biqutrit::qutrit::{majorana_decompose, normalize, protocol_state, ProtocolStateId, PureQutrit};
use biqutrit::report::{fmt_num, round_sig, DensityJson, RunManifest};
use biqutrit::{Error, Result, C64};
use serde::Serialize;

use crate::output::{emit, parse_state, to_json, OutArg};

#[derive(Debug, clap::Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["id", "c"]))]
pub struct Args {
    /// Protocol state, e.g. `beta''`, `β″` or `beta2`.
    #[arg(value_parser = parse_state)]
    id: Option<ProtocolStateId>,
    /// Custom amplitudes `c1,c2,c3`; each real or complex like `0.5-0.2i`.
    #[arg(long)]
    c: Option<String>,
    /// Print JSON instead of text.
    #[arg(long)]
    json: bool,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Serialize)]
struct PointDeg {
    theta_deg: f64,
    phi_deg: f64,
}

#[derive(Serialize)]
struct FilterDeg {
    chi_deg: f64,
    theta_deg: f64,
}

#[derive(Serialize)]
struct StateReport {
    manifest: RunManifest,
    name: Option<String>,
    amplitudes: Vec<[f64; 2]>,
    magnitudes: Vec<f64>,
    phases_deg: Vec<f64>,
    density: DensityJson,
    majorana: Vec<PointDeg>,
    filters: Vec<FilterDeg>,
}

fn parse_amplitudes(s: &str) -> Result<PureQutrit> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(Error::InvalidInput(format!(
            "expected three comma-separated amplitudes, got '{s}'"
        )));
    }
    let mut c = [C64::new(0.0, 0.0); 3];
    for (slot, p) in c.iter_mut().zip(&parts) {
        *slot = C64::from_str(p)
            .map_err(|_| Error::InvalidInput(format!("invalid amplitude '{p}'")))?;
    }
    normalize(c)
}

fn build(args: &Args) -> Result<StateReport> {
    let (name, s, manifest) = match (&args.id, &args.c) {
        (Some(id), _) => (
            Some(id.name()),
            protocol_state(*id),
            RunManifest::new("state", None).param("id", id.name()),
        ),
        (None, Some(c)) => (
            None,
            parse_amplitudes(c)?,
            RunManifest::new("state", None).param("c", c),
        ),
        (None, None) => unreachable!("clap requires a source"),
    };
    let pair = majorana_decompose(&s);
    let (f1, f2) = filters_for_state(&s);
    Ok(StateReport {
        manifest,
        name,
        amplitudes: s.amplitudes().iter().map(|z| [round_sig(z.re), round_sig(z.im)]).collect(),
        magnitudes: s.magnitudes().iter().map(|&m| round_sig(m)).collect(),
        phases_deg: s.phases().iter().map(|p| round_sig(p.to_degrees())).collect(),
        density: DensityJson::new(&s.projector()),
        majorana: pair
            .points()
            .iter()
            .map(|p| PointDeg {
                theta_deg: round_sig(p.theta().to_degrees()),
                phi_deg: round_sig(p.phi().to_degrees()),
            })
            .collect(),
        filters: [f1, f2]
            .iter()
            .map(|f| FilterDeg {
                chi_deg: round_sig(f.chi.to_degrees()),
                theta_deg: round_sig(f.theta.to_degrees()),
            })
            .collect(),
    })
}

fn text(r: &StateReport) -> String {
    let mut s = String::new();
    if let Some(n) = &r.name {
        let _ = writeln!(s, "state {n}");
    }
    s.push_str("amplitudes (|c|, phase deg):\n");
    for (i, (m, p)) in r.magnitudes.iter().zip(&r.phases_deg).enumerate() {
        let _ = writeln!(s, "  c{} = {} at {}", i + 1, fmt_num(*m), fmt_num(*p));
    }
    s.push_str("density matrix:\n");
    for row in r.density.matrix.chunks(3) {
        let cells: Vec<String> = row
            .iter()
            .map(|[re, im]| format!("{}{:+}i", fmt_num(*re), round_sig(*im)))
            .collect();
        let _ = writeln!(s, "  {}", cells.join("  "));
    }
    s.push_str("majorana points (theta deg, phi deg):\n");
    for p in &r.majorana {
        let _ = writeln!(s, "  ({}, {})", fmt_num(p.theta_deg), fmt_num(p.phi_deg));
    }
    s.push_str("filters passing the state (qwp deg, hwp deg):\n");
    for (i, f) in r.filters.iter().enumerate() {
        let _ = writeln!(s, "  arm {}: ({}, {})", i + 1, fmt_num(f.chi_deg), fmt_num(f.theta_deg));
    }
    s
}

pub fn run(args: Args) -> Result<ExitCode> {
    let r = build(&args)?;
    let out = if args.json { to_json(&r) } else { text(&r) };
    emit(args.out.out.as_deref(), &out)?;
    Ok(ExitCode::SUCCESS)
}
