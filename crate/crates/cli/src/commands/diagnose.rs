use matchcast::diagnostics::{gelman_rubin, GrReport, RHAT_THRESHOLD};
use serde::Serialize;

use crate::args::RunDirArgs;
use crate::artifact::{config_hash, csv_bytes, fmt_opt, read_json, write_csv, write_json};
use crate::commands::fit::Trace;
use crate::error::{CliError, CliResult};
use crate::run::{Manifest, MANIFEST};

pub fn gr_json(t: usize) -> String {
    format!("gr_t{t:02}.json")
}

pub fn gr_csv(t: usize) -> String {
    format!("gr_t{t:02}.csv")
}

pub const GR_SUMMARY: &str = "gr_summary.csv";

pub fn report(trace: &Trace) -> CliResult<GrReport> {
    let entries = trace
        .series
        .iter()
        .map(|s| gelman_rubin(s.parameter.clone(), &s.draws))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(GrReport {
        chains: trace.chains.len(),
        draws_per_chain: trace.series.first().and_then(|s| s.draws.first()).map_or(0, Vec::len),
        threshold: RHAT_THRESHOLD,
        monitor_seed: trace.monitor_seed,
        converged: entries.iter().all(|e| e.converged),
        entries,
    })
}

pub fn run(args: &RunDirArgs) -> CliResult<()> {
    let manifest = read_json::<Manifest>(&args.run.join(MANIFEST), "manifest")?;
    #[derive(Serialize)]
    struct Settings<'a> {
        fit: &'a str,
        threshold: f64,
    }
    let hash = config_hash(&Settings { fit: &manifest.config_hash, threshold: RHAT_THRESHOLD })?;
    let seed = manifest.master_seed;

    let mut summary = Vec::new();
    for rec in manifest.body.fitted() {
        let name = rec.trace.as_deref().ok_or_else(|| CliError::Invalid(format!("no trace recorded for t = {}", rec.t)))?;
        let trace = read_json::<Trace>(&args.run.join(name), "trace")?;
        if trace.config_hash != manifest.config_hash {
            return Err(CliError::Invalid(format!("{name} belongs to a different run")));
        }
        let report = report(&trace.body)?;
        write_json(&args.run.join(gr_json(rec.t)), "gelman-rubin", &hash, seed, &report)?;
        let rows = report.entries.iter().map(|e| {
            vec![e.parameter.clone(), e.w.to_string(), e.b.to_string(), fmt_opt(e.rhat), e.converged.to_string()]
        });
        let bytes = csv_bytes(&["parameter", "W", "B", "Rhat", "converged"], rows)?;
        write_csv(&args.run.join(gr_csv(rec.t)), "gelman-rubin", &hash, seed, &bytes)?;

        let max_rhat = report.entries.iter().filter_map(|e| e.rhat).fold(None, |m: Option<f64>, r| Some(m.map_or(r, |m| m.max(r))));
        let degenerate = report.entries.iter().filter(|e| e.degenerate).count();
        if !report.converged {
            log::warn!("t = {}: not converged (max R̂ {})", rec.t, fmt_opt(max_rhat));
        }
        summary.push(vec![rec.t.to_string(), report.converged.to_string(), fmt_opt(max_rhat), degenerate.to_string()]);
    }
    let bytes = csv_bytes(&["minute", "converged", "max_rhat", "degenerate"], summary)?;
    write_csv(&args.run.join(GR_SUMMARY), "gelman-rubin-summary", &hash, seed, &bytes)
}
