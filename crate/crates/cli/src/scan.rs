use std::fmt::Write as _;
use std::process::ExitCode;

use biqutrit::experiment::{
    degree_grid, hwp2_orthogonality_scan, orthogonality_scan, tomography_scan, ApparatusConfig,
    ScanSpec,
};
use biqutrit::qutrit::{protocol_state, ProtocolStateId};
use biqutrit::report::{
    fmt_num, write_orthogonality_scan_csv, write_tomography_scan_csv, RunManifest, SCAN_CHANNELS,
};
use biqutrit::tomography::fit_phase_scan;
use biqutrit::Result;

use crate::output::{emit, parse_state, OutArg};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Kind {
    /// Nine-setting tomography at each phase.
    Tomo,
    /// Coincidences with both filters tuned to the set state.
    Orthogonality,
}

#[derive(Debug, clap::Args)]
pub struct Args {
    #[arg(value_enum)]
    kind: Kind,
    /// Set state for orthogonality scans. States of the first basis are
    /// scanned over the HWP2 angle instead of φ12.
    #[arg(long = "set", value_parser = parse_state, default_value = "alpha'''")]
    set_state: ProtocolStateId,
    /// Fixed φ13 in degrees.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    phi13: f64,
    /// First grid point in degrees (default -180, or 0 for HWP2 scans).
    #[arg(long, allow_negative_numbers = true)]
    start: Option<f64>,
    /// Grid end in degrees, exclusive (default 180, or 90 for HWP2 scans).
    #[arg(long, allow_negative_numbers = true)]
    stop: Option<f64>,
    /// Grid step in degrees (default 10, or 2.5 for HWP2 scans).
    #[arg(long)]
    step: Option<f64>,
    #[arg(long, env = "BIQUTRIT_SEED", default_value_t = 0)]
    seed: u64,
    /// Mean total coincidences per tomography point, or per point of the
    /// set state itself for orthogonality scans.
    #[arg(long, default_value_t = 500.0)]
    events: f64,
    #[arg(long, default_value_t = 1.0)]
    overlap: f64,
    #[arg(long, default_value_t = 0.0)]
    accidentals: f64,
    /// Expected counts instead of Poisson draws.
    #[arg(long)]
    expectation: bool,
    /// Append sinusoid fits of every channel (tomography scans).
    #[arg(long)]
    fit: bool,
    #[command(flatten)]
    out: OutArg,
}

pub fn run(args: Args) -> Result<ExitCode> {
    let hwp2_axis = args.kind == Kind::Orthogonality && args.set_state.basis() == 1;
    let (d_start, d_stop, d_step) = if hwp2_axis { (0.0, 90.0, 2.5) } else { (-180.0, 180.0, 10.0) };
    let (start, stop, step) = (
        args.start.unwrap_or(d_start),
        args.stop.unwrap_or(d_stop),
        args.step.unwrap_or(d_step),
    );
    if !(step > 0.0) {
        return Err(biqutrit::Error::InvalidInput("step must be positive".into()));
    }
    let grid = degree_grid(start, stop, step);
    let cfg = ApparatusConfig::default()
        .with_overlap(args.overlap)
        .with_accidentals(args.accidentals)
        .with_mean_events(args.events);
    cfg.validate()?;
    let phi13 = args.phi13.to_radians();
    let mut manifest = RunManifest::new("scan", Some(args.seed))
        .param("kind", format!("{:?}", args.kind).to_lowercase())
        .param("phi13_deg", args.phi13)
        .param("start_deg", start)
        .param("stop_deg", stop)
        .param("step_deg", step)
        .param("events", args.events)
        .param("overlap", args.overlap)
        .param("accidentals", args.accidentals)
        .param("expectation", args.expectation);

    let text = match args.kind {
        Kind::Tomo => {
            let mut spec = ScanSpec::new(phi13, grid, args.seed);
            spec.expectation = args.expectation;
            let series = tomography_scan(&spec, &cfg)?;
            let mut s = write_tomography_scan_csv(&manifest, &series);
            if args.fit {
                let fit = fit_phase_scan(&series)?;
                for c in SCAN_CHANNELS {
                    let f = fit.channel(c);
                    let _ = writeln!(
                        s,
                        "# fit {}: amplitude={},phase_offset_deg={},constant={},residual_rms={}",
                        c.name(),
                        fmt_num(f.amplitude),
                        fmt_num(f.phase_offset.to_degrees()),
                        fmt_num(f.constant),
                        fmt_num(f.residual_rms)
                    );
                }
            }
            s
        }
        Kind::Orthogonality => {
            manifest = manifest.param("set", args.set_state.name());
            let set = protocol_state(args.set_state);
            if hwp2_axis {
                let scan = hwp2_orthogonality_scan(&set, &grid, &cfg, args.seed, args.expectation)?;
                write_orthogonality_scan_csv(&manifest, "hwp2_deg", &scan)
            } else {
                let mut spec = ScanSpec::new(phi13, grid, args.seed);
                spec.expectation = args.expectation;
                let scan = orthogonality_scan(&set, &spec, &cfg)?;
                write_orthogonality_scan_csv(&manifest, "phi12_deg", &scan)
            }
        }
    };
    emit(args.out.out.as_deref(), &text)?;
    Ok(ExitCode::SUCCESS)
}
