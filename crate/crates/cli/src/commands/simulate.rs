use matchcast::data::{synthesize_dataset, write_events_csv, write_matches_csv, GroundTruth, SynthesisConfig};

use crate::args::SimulateArgs;
use crate::artifact::{config_hash, create_dir, read_json, write_csv, write_json};
use crate::error::CliResult;

pub const TRUTH: &str = "truth.json";

pub fn run(args: &SimulateArgs) -> CliResult<()> {
    let cfg = match &args.truth {
        Some(path) => read_json::<GroundTruth>(path, "truth")?.body.config,
        None => SynthesisConfig::structured(args.n, args.kinds, args.t_max, args.seed)?,
    };
    let hash = config_hash(&cfg)?;
    let (data, truth) = synthesize_dataset(&cfg)?;
    create_dir(&args.out)?;

    let mut matches = Vec::new();
    write_matches_csv(&data, &mut matches)?;
    let mut events = Vec::new();
    write_events_csv(&data, &mut events)?;
    write_csv(&args.out.join("matches.csv"), "matches", &hash, cfg.seed, &matches)?;
    write_csv(&args.out.join("events.csv"), "events", &hash, cfg.seed, &events)?;
    write_json(&args.out.join(TRUTH), "truth", &hash, cfg.seed, &truth)?;
    log::info!("simulated {} matches into {}", data.n(), args.out.display());
    Ok(())
}
