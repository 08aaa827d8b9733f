use std::path::PathBuf;
use std::time::Instant;

use serde_json::json;
use vsens_core::simulation::{load_config, ConfigError, ConfigErrorKind, Session};

use crate::{display, Failure};

#[derive(clap::Args)]
pub struct Args {
    /// Session config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the config's global seed.
    #[arg(long)]
    seed: Option<u64>,
    /// No summary on stderr.
    #[arg(long)]
    quiet: bool,
    /// Print the summary (or the error list) as JSON on stdout.
    #[arg(long)]
    json: bool,
}

fn validation_failure(args: &Args, errors: &[ConfigError]) -> Failure {
    if args.json {
        println!("{}", json!({ "ok": false, "errors": errors }));
    }
    for e in errors {
        eprintln!("  {e}");
    }
    Failure::invalid(format!(
        "{}: {} validation error(s)",
        display(&args.config),
        errors.len()
    ))
}

pub fn run(args: Args) -> Result<(), Failure> {
    let started = Instant::now();
    let (mut config, base) = match load_config(&args.config) {
        Ok(c) => c,
        Err(errors) => {
            let unreadable = errors.len() == 1
                && matches!(
                    errors[0].kind,
                    ConfigErrorKind::FileNotFound | ConfigErrorKind::Io
                );
            if unreadable {
                return Err(Failure::io(format!(
                    "cannot read config {}: {}",
                    display(&args.config),
                    errors[0].message
                )));
            }
            return Err(validation_failure(&args, &errors));
        }
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let mut session = Session::new(config, &base).map_err(|e| validation_failure(&args, &e))?;
    session
        .run_to_end()
        .map_err(|e| Failure::io(format!("simulation failed: {e}")))?;
    let ticks = session.tick_count();
    let recording = session.into_recording();
    let files = recording
        .write_dir(&args.out)
        .map_err(|e| Failure::io(format!("cannot write {}: {e}", display(&args.out))))?;
    let elapsed = started.elapsed().as_secs_f64();

    if args.json {
        let sensors: Vec<_> = recording
            .iter()
            .map(|(id, s)| json!({"id": id, "samples": s.len()}))
            .collect();
        let files: Vec<_> = files.iter().map(|p| display(p)).collect();
        let summary = json!({
            "ok": true,
            "out": display(&args.out),
            "ticks": ticks,
            "sensors": sensors,
            "files": files,
            "wall_time_s": elapsed,
        });
        println!("{summary}");
    }
    if !args.quiet {
        eprintln!(
            "{} sensor(s), {} ticks, {} samples -> {} in {:.3} s",
            recording.sensor_ids().count(),
            ticks,
            recording.total_samples(),
            display(&args.out),
            elapsed
        );
    }
    Ok(())
}
