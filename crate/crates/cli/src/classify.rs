use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use commex_core::classify::{AnnouncementType, LabeledRecord, StreamState, TypeTally};
use commex_core::model::{repair_route_server_path, AllocationFilter, AllocationTable, FilterReport};
use commex_core::reduce::{plan_groups, FileGroup, StateMode};
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{ClassifyArgs, Format};
use crate::input::{collector_for, file_name, open_records};
use crate::output::{finish, OutDir};

const LABEL_COLUMNS: [&str; 13] = [
    "arrival_us",
    "collector",
    "peer_asn",
    "peer_address",
    "prefix",
    "type",
    "as_path",
    "communities",
    "after_withdrawal",
    "reordering",
    "flags",
    "source_file",
    "source_message_index",
];

#[derive(Clone, Debug, Default, Serialize)]
pub struct FileStats {
    pub file: String,
    pub collector: String,
    pub records: u64,
    pub dropped_unallocated: u64,
    pub announcements: u64,
    pub withdrawals: u64,
    /// Records carrying at least one normalization flag.
    pub flagged: u64,
}

struct GroupOutcome {
    tally: TypeTally,
    filter: FilterReport,
    files: Vec<FileStats>,
}

#[derive(Serialize)]
struct ClassifyReport<'a> {
    alloc_filter: bool,
    state: StateMode,
    files: Vec<FileStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    filter: Option<FilterReport>,
    announcements: u64,
    withdrawals: u64,
    labeled: u64,
    unnecessary: u64,
    unnecessary_share: f64,
    types: BTreeMap<&'a str, u64>,
    reorderings: u64,
    out_of_order: u64,
    after_withdrawal: u64,
    nc_only_peers: Vec<u32>,
    nn_only_peers: Vec<u32>,
}

fn load_tables(paths: &[PathBuf]) -> Result<AllocationTable> {
    let mut table = AllocationTable::new();
    for p in paths {
        let f = File::open(p).with_context(|| format!("opening {}", p.display()))?;
        table.load_delegated(BufReader::new(f)).with_context(|| format!("reading {}", p.display()))?;
    }
    Ok(table)
}

fn write_label(out: &mut dyn Write, format: Format, l: &LabeledRecord) -> Result<()> {
    match format {
        Format::Jsonl => {
            serde_json::to_writer(&mut *out, l)?;
            out.write_all(b"\n")?;
        }
        Format::Csv => {
            let r = &l.record;
            let attrs = r.attrs.as_ref();
            let path = attrs.and_then(|a| a.as_path.as_ref()).map(|p| p.to_string()).unwrap_or_default();
            let communities = attrs
                .map(|a| a.communities.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" "))
                .unwrap_or_default();
            let flags = r
                .flags
                .iter()
                .map(|f| serde_json::to_value(f).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default())
                .collect::<Vec<_>>()
                .join(" ");
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(&mut *out);
            w.write_record([
                r.arrival.0.to_string(),
                r.session.collector.clone(),
                r.session.peer_asn.to_string(),
                r.session.peer_address.to_string(),
                r.prefix.to_string(),
                l.label().to_string(),
                path,
                communities,
                l.classification.after_withdrawal.to_string(),
                l.classification.reordering.to_string(),
                flags,
                r.source_file.clone(),
                r.source_message_index.to_string(),
            ])?;
            w.flush()?;
        }
    }
    Ok(())
}

fn classify_group(
    group: &FileGroup,
    args: &ClassifyArgs,
    table: Option<&AllocationTable>,
    format: Format,
    part: &Path,
) -> Result<GroupOutcome> {
    let mut out = BufWriter::new(File::create(part).with_context(|| format!("creating {}", part.display()))?);
    let mut state = StreamState::new();
    let mut filter = table.map(AllocationFilter::new);
    let mut tally = TypeTally::new();
    let mut files = Vec::with_capacity(group.files.len());
    for path in &group.files {
        if args.state == StateMode::Cold {
            state = StreamState::new();
        }
        let collector = collector_for(path, args.input.collector.as_deref());
        let mut stats = FileStats { file: file_name(path), collector: collector.clone(), ..Default::default() };
        for r in open_records(path, &collector)? {
            let r = r?;
            stats.records += 1;
            let r = match filter.as_mut() {
                Some(f) => match f.check(r) {
                    Some(r) => r,
                    None => {
                        stats.dropped_unallocated += 1;
                        continue;
                    }
                },
                None => r,
            };
            let r = repair_route_server_path(&r);
            match state.observe(&r) {
                Some(c) => {
                    tally.add(r.session.peer_asn, &c);
                    stats.announcements += 1;
                    let l = LabeledRecord::new(r, c);
                    stats.flagged += !l.record.flags.is_empty() as u64;
                    write_label(&mut out, format, &l)?;
                }
                None => {
                    tally.withdrawals += 1;
                    stats.withdrawals += 1;
                    stats.flagged += !r.flags.is_empty() as u64;
                }
            }
        }
        log::info!(
            "{}: {} records, {} announcements, {} withdrawals",
            stats.file,
            stats.records,
            stats.announcements,
            stats.withdrawals
        );
        files.push(stats);
    }
    finish(out, &part.display().to_string())?;
    let filter = filter.map(|f| f.report()).unwrap_or_default();
    Ok(GroupOutcome { tally, filter, files })
}

fn add_filter(a: &mut FilterReport, b: &FilterReport) {
    a.kept += b.kept;
    a.dropped_prefix += b.dropped_prefix;
    a.dropped_asn += b.dropped_asn;
    a.table_gap += b.table_gap;
}

pub fn cmd_classify(args: &ClassifyArgs, format: Format, out: &OutDir) -> Result<()> {
    let table = match (args.no_alloc_filter, args.alloc_tables.is_empty()) {
        (true, _) => None,
        (false, false) => Some(load_tables(&args.alloc_tables)?),
        (false, true) => bail!("the allocation filter needs --alloc-table FILE; pass --no-alloc-filter to skip it"),
    };
    let groups = plan_groups(&args.input.inputs);
    let parts: Vec<PathBuf> = (0..groups.len()).map(|i| out.path(&format!(".labels-{i}.part"))).collect();
    let outcomes: Vec<GroupOutcome> = groups
        .par_iter()
        .zip(parts.par_iter())
        .map(|(g, part)| classify_group(g, args, table.as_ref(), format, part))
        .collect::<Result<_>>()?;

    let alloc = if table.is_some() { "on" } else { "off" };
    let state = match args.state {
        StateMode::Cold => "cold",
        StateMode::Warm => "warm",
    };
    let notes = [("alloc_filter", alloc.to_string()), ("state", state.to_string())];
    let labels_name = format!("labels.{}", format.extension());
    let mut labels = match format {
        Format::Csv => {
            let mut f = out.table(&labels_name, "labels", &notes)?;
            writeln!(f, "{}", LABEL_COLUMNS.join(","))?;
            f
        }
        Format::Jsonl => out.file(&labels_name)?,
    };
    for p in &parts {
        io::copy(&mut File::open(p)?, &mut labels)?;
        std::fs::remove_file(p)?;
    }
    finish(labels, &labels_name)?;

    let mut tally = TypeTally::new();
    let mut filter = FilterReport::default();
    let mut files = Vec::new();
    for o in outcomes {
        tally.merge(&o.tally);
        add_filter(&mut filter, &o.filter);
        files.extend(o.files);
    }
    let mut w = out.table("types.csv", "types", &notes)?;
    tally.write_types_csv(&mut w)?;
    finish(w, "types.csv")?;
    let mut w = out.table("peers.csv", "peers", &notes)?;
    tally.write_peers_csv(&mut w)?;
    finish(w, "peers.csv")?;

    let (nc_only_peers, nn_only_peers) = tally.exclusive_peers();
    let report = ClassifyReport {
        alloc_filter: table.is_some(),
        state: args.state,
        files,
        filter: table.is_some().then_some(filter),
        announcements: tally.announcements(),
        withdrawals: tally.withdrawals,
        labeled: tally.labeled(),
        unnecessary: tally.unnecessary(),
        unnecessary_share: match tally.labeled() {
            0 => 0.0,
            n => tally.unnecessary() as f64 / n as f64,
        },
        types: AnnouncementType::ALL.iter().map(|t| (t.as_str(), tally.count(*t))).collect(),
        reorderings: tally.reorderings,
        out_of_order: tally.out_of_order,
        after_withdrawal: tally.after_withdrawal,
        nc_only_peers,
        nn_only_peers,
    };
    out.report("classify_report.json", &report)?;
    eprintln!(
        "classified {} announcements ({} labeled, {} unnecessary) and {} withdrawals",
        report.announcements, report.labeled, report.unnecessary, report.withdrawals
    );
    Ok(())
}
