use std::fs::File;
use std::path::PathBuf;
use std::process::ExitCode;

use biqutrit::experiment::{effective_density, simulate_counts, Acquisition, ApparatusConfig};
use biqutrit::qutrit::{protocol_state, ProtocolStateId};
use biqutrit::report::{read_counts_csv, tomography_report, write_counts_csv, RunManifest};
use biqutrit::tomography::{protocol_settings, MleOptions, StateModel};
use biqutrit::{Error, Result};

use crate::output::{emit, parse_state, to_json, OutArg};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Events {
    Finite(f64),
    /// Expected counts, no shot noise.
    Infinite,
}

fn parse_events(s: &str) -> std::result::Result<Events, String> {
    match s {
        "inf" | "infinity" => Ok(Events::Infinite),
        _ => match s.parse::<f64>() {
            Ok(x) if x > 0.0 && x.is_finite() => Ok(Events::Finite(x)),
            _ => Err(format!("events must be a positive number or 'inf', got '{s}'")),
        },
    }
}

fn parse_model(s: &str) -> std::result::Result<StateModel, String> {
    match s {
        "mixed" => Ok(StateModel::Mixed),
        "pure" => Ok(StateModel::Pure),
        _ => Err(format!("model must be 'mixed' or 'pure', got '{s}'")),
    }
}

#[derive(Debug, clap::Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["id", "counts"]))]
pub struct Args {
    /// Simulate this protocol state.
    #[arg(value_parser = parse_state)]
    id: Option<ProtocolStateId>,
    /// Reconstruct from a `setting,count,weight` CSV instead.
    #[arg(long)]
    counts: Option<PathBuf>,
    /// State to compute fidelities against when reading counts.
    #[arg(long, value_parser = parse_state)]
    target: Option<ProtocolStateId>,
    /// Mean total coincidences over the nine settings, or `inf`.
    #[arg(long, default_value = "500", value_parser = parse_events)]
    events: Events,
    #[arg(long, env = "BIQUTRIT_SEED", default_value_t = 0)]
    seed: u64,
    /// Wavepacket overlap of the simulated source.
    #[arg(long, default_value_t = 1.0)]
    overlap: f64,
    /// Mean accidental coincidences per setting, simulated and modelled.
    #[arg(long, default_value_t = 0.0)]
    accidentals: f64,
    /// States the likelihood is maximized over: `mixed` or `pure`.
    #[arg(long, default_value = "mixed", value_parser = parse_model)]
    model: StateModel,
    /// Also write the simulated counts to this CSV file.
    #[arg(long)]
    write_counts: Option<PathBuf>,
    #[command(flatten)]
    out: OutArg,
}

pub fn run(args: Args) -> Result<ExitCode> {
    let settings = protocol_settings();
    let opts = MleOptions {
        accidental_rate: args.accidentals,
        model: args.model,
        ..Default::default()
    };
    let model = match args.model {
        StateModel::Mixed => "mixed",
        StateModel::Pure => "pure",
    };
    let (counts, target, manifest) = if let Some(path) = &args.counts {
        let counts = read_counts_csv(File::open(path)?).map_err(|e| match e {
            Error::Parse { line, message } => Error::InvalidInput(format!(
                "{}:{line}: {message}",
                path.display()
            )),
            other => other,
        })?;
        let manifest = RunManifest::new("tomo", None)
            .param("counts", path.display().to_string())
            .param("accidentals", args.accidentals)
            .param("model", model)
            .param("target", args.target.map(|t| t.name()));
        (counts, args.target, manifest)
    } else {
        let id = args.id.expect("clap requires a source");
        let cfg = ApparatusConfig::for_state(id)
            .with_overlap(args.overlap)
            .with_accidentals(args.accidentals);
        cfg.validate()?;
        let (mean, acquisition, events_param) = match args.events {
            Events::Finite(n) => (n, Acquisition::poisson(args.seed), serde_json::json!(n)),
            Events::Infinite => (1e6, Acquisition::Expectation, serde_json::json!("inf")),
        };
        let counts = simulate_counts(
            &effective_density(&cfg),
            &settings,
            mean,
            args.accidentals,
            acquisition,
        )?;
        let manifest = RunManifest::new("tomo", Some(args.seed))
            .param("state", id.name())
            .param("events", events_param)
            .param("overlap", args.overlap)
            .param("accidentals", args.accidentals)
            .param("model", model);
        if let Some(p) = &args.write_counts {
            std::fs::write(p, write_counts_csv(&manifest, &counts))?;
        }
        (counts, Some(id), manifest)
    };
    let state = target.map(|t| (t.name(), protocol_state(t)));
    let report = tomography_report(
        manifest,
        &counts,
        &settings,
        state.as_ref().map(|(n, s)| (n.as_str(), s)),
        &opts,
    )?;
    emit(args.out.out.as_deref(), &to_json(&report))?;
    Ok(ExitCode::SUCCESS)
}
