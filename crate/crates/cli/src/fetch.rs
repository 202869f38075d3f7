use std::time::Duration;

use anyhow::{Context, Result};
use chrono::{Days, TimeDelta};
use commex_fetch::{
    fetch, plan_urls, ArchiveRoots, ArchiveTarget, FetchOptions, FetchReport, HttpTransport, PlannedFile, RetryPolicy,
};
use serde::Serialize;

use crate::args::FetchArgs;
use crate::output::{finish, OutDir};

#[derive(Serialize)]
struct FetchSummary<'a> {
    cache_dir: String,
    planned: usize,
    cached: usize,
    downloaded: usize,
    failed: usize,
    #[serde(flatten)]
    report: &'a FetchReport,
}

pub fn plan(args: &FetchArgs) -> Result<Vec<PlannedFile>> {
    let start = args.start.and_hms_opt(0, 0, 0).expect("midnight").and_utc();
    let mut end = start.checked_add_days(Days::new(args.days.into())).context("--days out of range")?;
    if let Some(h) = args.until_hour {
        end = end - TimeDelta::days(1) + TimeDelta::hours(h.into());
    }
    let mut roots = ArchiveRoots::default();
    if let Some(r) = &args.ripe_root {
        roots.ripe_ris = r.trim_end_matches('/').to_string();
    }
    if let Some(r) = &args.routeviews_root {
        roots.routeviews = r.trim_end_matches('/').to_string();
    }
    let mut out = Vec::new();
    for c in &args.collector {
        let target = ArchiveTarget::for_collector(c, args.kind, start, end)?;
        out.extend(plan_urls(&target, &roots)?);
    }
    Ok(out)
}

pub fn cmd_fetch(args: &FetchArgs, out: &OutDir) -> Result<()> {
    let plan = plan(args)?;
    let opts = FetchOptions {
        parallelism: args.parallelism.into(),
        retry: RetryPolicy { max_attempts: args.attempts, ..RetryPolicy::default() },
        offline: args.offline,
    };
    log::info!("{} files planned into {}", plan.len(), args.cache_dir.display());
    let report = fetch(&plan, &args.cache_dir, &HttpTransport::new(Duration::from_secs(300)), &opts);
    for f in report.failures() {
        log::warn!("{}: {:?}", f.url, f.status);
    }

    let mut w = out.file("fetched_files.txt")?;
    for p in report.available() {
        use std::io::Write;
        writeln!(w, "{}", p.display())?;
    }
    finish(w, "fetched_files.txt")?;
    let summary = FetchSummary {
        cache_dir: args.cache_dir.display().to_string(),
        planned: plan.len(),
        cached: report.hits(),
        downloaded: report.downloaded(),
        failed: report.failed(),
        report: &report,
    };
    out.report("fetch_report.json", &summary)?;
    eprintln!(
        "{} planned: {} cached, {} downloaded, {} failed",
        summary.planned, summary.cached, summary.downloaded, summary.failed
    );
    if summary.failed > 0 {
        anyhow::bail!("{} of {} files could not be fetched", summary.failed, summary.planned);
    }
    Ok(())
}
