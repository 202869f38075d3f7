use std::io::Write;

use anyhow::{bail, Result};
use commex_core::reduce::{plan_groups, reduce_group, summarize};
use rayon::prelude::*;

use crate::args::{Format, ReduceArgs};
use crate::output::{finish, OutDir};

pub fn cmd_reduce(args: &ReduceArgs, format: Format, out: &OutDir) -> Result<()> {
    let reduced = out.path("reduced");
    let groups = plan_groups(&args.inputs);
    let results: Vec<_> = groups.par_iter().map(|g| reduce_group(g, &reduced, args.state)).collect();
    let mut ok = Vec::new();
    let mut failed = Vec::new();
    for (path, r) in results.into_iter().flatten() {
        match r {
            Ok(r) => ok.push(r),
            Err(e) => {
                log::error!("{}: {e}", path.display());
                failed.push((path.display().to_string(), e.to_string()));
            }
        }
    }
    let summary = summarize(ok, failed);
    let state = match args.state {
        commex_core::reduce::StateMode::Cold => "cold",
        commex_core::reduce::StateMode::Warm => "warm",
    };
    let notes = [("state", state.to_string())];

    match format {
        Format::Csv => {
            let mut w = out.table("reduction_files.csv", "reduction_files", &notes)?;
            summary.write_files_csv(&mut w)?;
            finish(w, "reduction_files.csv")?;
        }
        Format::Jsonl => {
            let mut w = out.file("reduction_files.jsonl")?;
            for r in &summary.files {
                serde_json::to_writer(&mut w, r)?;
                w.write_all(b"\n")?;
            }
            finish(w, "reduction_files.jsonl")?;
        }
    }
    let mut w = out.table("reduction_cdf.csv", "reduction_cdf", &notes)?;
    summary.write_cdf_csv(&mut w)?;
    finish(w, "reduction_cdf.csv")?;
    let mut w = out.table("reduction_summary.csv", "reduction_summary", &notes)?;
    summary.write_summary_csv(&mut w)?;
    finish(w, "reduction_summary.csv")?;
    out.report("reduce_report.json", &summary)?;

    eprintln!(
        "reduced {} files: mean ratio {:.4}, bytes {} -> {}",
        summary.files.len(),
        summary.mean_ratio,
        summary.bytes_in,
        summary.bytes_out
    );
    if !summary.failures.is_empty() {
        bail!("{} of {} files failed", summary.failures.len(), summary.failures.len() + summary.files.len());
    }
    Ok(())
}
