use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;

use anyhow::{bail, Context, Result};
use commex_core::beacon::{
    beacon_case_report, partition_communities, BeaconList, BeaconSchedule, CaseSelection, RevealCategory,
    RevealPartition,
};
use commex_core::model::{repair_route_server_path, UpdateRecord};
use commex_core::mrt::AsPath;
use commex_core::reduce::{plan_groups, FileGroup};
use rayon::prelude::*;
use serde::Serialize;

use crate::args::BeaconArgs;
use crate::input::{collector_for, open_records};
use crate::output::{finish, OutDir};

#[derive(Serialize)]
struct PartitionSummary {
    total: usize,
    sizes: BTreeMap<&'static str, usize>,
    shares: BTreeMap<&'static str, f64>,
}

impl PartitionSummary {
    fn of<K: Ord>(p: &RevealPartition<K>) -> Self {
        PartitionSummary {
            total: p.total(),
            sizes: RevealCategory::ALL.iter().map(|c| (c.as_str(), p.set(*c).len())).collect(),
            shares: RevealCategory::ALL.iter().map(|c| (c.as_str(), p.share(*c))).collect(),
        }
    }
}

#[derive(Serialize)]
struct BeaconReport {
    beacon_prefixes: usize,
    beacon_records: usize,
    prefixes_seen: usize,
    values: PartitionSummary,
    attributes: PartitionSummary,
    cases: Vec<String>,
}

fn beacon_records(group: &FileGroup, args: &BeaconArgs, beacons: &BeaconList) -> Result<Vec<UpdateRecord>> {
    let mut out = Vec::new();
    for path in &group.files {
        let collector = collector_for(path, args.input.collector.as_deref());
        for r in open_records(path, &collector)? {
            let r = r?;
            if beacons.contains(&r.prefix) {
                out.push(repair_route_server_path(&r));
            }
        }
    }
    Ok(out)
}

fn case_file_name(prefix: &ipnet::IpNet) -> String {
    let s: String = prefix.to_string().chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect();
    format!("case_{s}.csv")
}

pub fn cmd_beacon(args: &BeaconArgs, out: &OutDir) -> Result<()> {
    let beacons = match &args.beacons {
        Some(p) => {
            let f = File::open(p).with_context(|| format!("opening {}", p.display()))?;
            BeaconList::load(BufReader::new(f)).with_context(|| format!("reading {}", p.display()))?
        }
        None => BeaconList::default(),
    };
    let case_path: Option<AsPath> = args
        .case_path
        .as_deref()
        .map(|s| s.parse().map_err(|e| anyhow::anyhow!("--case-path `{s}`: {e}")))
        .transpose()?;

    let groups = plan_groups(&args.input.inputs);
    let per_group: Vec<Vec<UpdateRecord>> =
        groups.par_iter().map(|g| beacon_records(g, args, &beacons)).collect::<Result<_>>()?;
    let records: Vec<UpdateRecord> = per_group.into_iter().flatten().collect();
    if records.is_empty() {
        bail!("no records for any of the {} beacon prefixes in the inputs", beacons.len());
    }

    let schedule = BeaconSchedule::default();
    let reveal = partition_communities(&records, &schedule);
    let notes = [("beacon_records", records.len().to_string())];
    let mut w = out.table("reveal_values.csv", "reveal_values", &notes)?;
    reveal.values.write_members_csv(&mut w, "community")?;
    finish(w, "reveal_values.csv")?;
    let mut w = out.table("reveal_values_summary.csv", "reveal_values_summary", &notes)?;
    reveal.values.write_summary_csv(&mut w)?;
    finish(w, "reveal_values_summary.csv")?;
    let mut w = out.table("reveal_attributes.csv", "reveal_attributes", &notes)?;
    reveal.attributes.write_members_csv(&mut w, "communities")?;
    finish(w, "reveal_attributes.csv")?;
    let mut w = out.table("reveal_attributes_summary.csv", "reveal_attributes_summary", &notes)?;
    reveal.attributes.write_summary_csv(&mut w)?;
    finish(w, "reveal_attributes_summary.csv")?;

    let mut cases = Vec::new();
    for prefix in &args.cases {
        let mut sel = CaseSelection::prefix(*prefix);
        if let Some(p) = &case_path {
            sel = sel.with_path(p.clone());
        }
        let report = beacon_case_report(&records, &sel).with_context(|| format!("case {prefix}"))?;
        let name = case_file_name(prefix);
        let mut w = out.table(&name, "case", &[("prefix", prefix.to_string())])?;
        report.write_csv(&mut w)?;
        finish(w, &name)?;
        cases.push(name);
    }

    let mut seen: Vec<_> = records.iter().map(|r| r.prefix).collect();
    seen.sort();
    seen.dedup();
    let report = BeaconReport {
        beacon_prefixes: beacons.len(),
        beacon_records: records.len(),
        prefixes_seen: seen.len(),
        values: PartitionSummary::of(&reveal.values),
        attributes: PartitionSummary::of(&reveal.attributes),
        cases,
    };
    out.report("beacon_report.json", &report)?;
    let (w, a, o, m) = reveal.values.sizes();
    eprintln!(
        "{} beacon records; community values: {w} withdrawal-only, {a} announce-only, {o} outside-only, {m} ambiguous",
        records.len()
    );
    Ok(())
}
