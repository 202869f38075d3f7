use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classify::StreamState;

use super::{reduce_file, ReduceError, ReductionReport, StateMode};

/// Project, collector and UTC day of an archive file, read from its path.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FileOrigin {
    pub project: String,
    pub collector: String,
    /// `YYYYMMDD` from an `updates.YYYYMMDD.HHMM` name, empty if absent.
    pub day: String,
}

impl FileOrigin {
    pub fn from_path(path: &Path) -> Self {
        let collector = path
            .components()
            .rev()
            .skip(1)
            .filter_map(|c| c.as_os_str().to_str())
            .find(|c| is_collector_name(c))
            .unwrap_or("unknown")
            .to_string();
        let project = if collector.starts_with("rrc") {
            "ripe_ris"
        } else if collector.starts_with("route-views") {
            "routeviews"
        } else {
            "unknown"
        }
        .to_string();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        let day = name
            .split('.')
            .find(|part| part.len() == 8 && part.bytes().all(|b| b.is_ascii_digit()))
            .unwrap_or("")
            .to_string();
        FileOrigin { project, collector, day }
    }
}

fn is_collector_name(s: &str) -> bool {
    (s.len() == 5 && s.starts_with("rrc") && s[3..].bytes().all(|b| b.is_ascii_digit())) || s.starts_with("route-views")
}

/// Files sharing classifier state under warm mode, in name order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FileGroup {
    pub origin: FileOrigin,
    pub files: Vec<PathBuf>,
}

pub fn plan_groups(files: &[PathBuf]) -> Vec<FileGroup> {
    let mut groups: BTreeMap<FileOrigin, Vec<PathBuf>> = BTreeMap::new();
    for f in files {
        groups.entry(FileOrigin::from_path(f)).or_default().push(f.clone());
    }
    groups
        .into_iter()
        .map(|(origin, mut files)| {
            files.sort_by(|a, b| a.file_name().cmp(&b.file_name()).then_with(|| a.cmp(b)));
            FileGroup { origin, files }
        })
        .collect()
}

/// Output path for `input` under `out_dir`, one directory per collector.
pub fn output_path(out_dir: &Path, origin: &FileOrigin, input: &Path) -> PathBuf {
    out_dir.join(&origin.collector).join(input.file_name().unwrap_or_default())
}

/// Reduce one group in order. A failed file is reported and, under warm
/// mode, the state built so far is carried past it.
pub fn reduce_group(
    group: &FileGroup,
    out_dir: &Path,
    mode: StateMode,
) -> Vec<(PathBuf, Result<ReductionReport, ReduceError>)> {
    let mut state = StreamState::new();
    let dir = out_dir.join(&group.origin.collector);
    let mut out = Vec::with_capacity(group.files.len());
    for input in &group.files {
        if mode == StateMode::Cold {
            state = StreamState::new();
        }
        let result = std::fs::create_dir_all(&dir)
            .map_err(|source| ReduceError::Io { path: dir.display().to_string(), source })
            .and_then(|_| {
                reduce_file(input, &output_path(out_dir, &group.origin, input), &mut state, &group.origin.collector)
            })
            .map(|mut r| {
                r.project = group.origin.project.clone();
                r
            });
        out.push((input.clone(), result));
    }
    out
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ProjectSummary {
    pub files: usize,
    pub mean_ratio: f64,
    pub bytes_in: u64,
    pub bytes_out: u64,
    pub bytes_reduction: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub files: Vec<ReductionReport>,
    /// (file, error message) for files excluded from the summary.
    pub failures: Vec<(String, String)>,
    pub mean_ratio: f64,
    /// (ratio, fraction of files with ratio at most this value)
    pub cdf: Vec<(f64, f64)>,
    pub per_project: BTreeMap<String, ProjectSummary>,
    pub bytes_in: u64,
    pub bytes_out: u64,
    pub bytes_reduction: f64,
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

fn byte_reduction(bytes_in: u64, bytes_out: u64) -> f64 {
    if bytes_in == 0 {
        0.0
    } else {
        1.0 - bytes_out as f64 / bytes_in as f64
    }
}

pub fn summarize(mut files: Vec<ReductionReport>, failures: Vec<(String, String)>) -> CorpusSummary {
    files.sort_by(|a, b| (&a.project, &a.collector, &a.file).cmp(&(&b.project, &b.collector, &b.file)));
    let mut ratios: Vec<f64> = files.iter().map(|r| r.reduction_ratio).collect();
    ratios.sort_by(f64::total_cmp);
    let n = ratios.len() as f64;
    let mut cdf: Vec<(f64, f64)> = Vec::new();
    for (i, &r) in ratios.iter().enumerate() {
        let y = (i + 1) as f64 / n;
        match cdf.last_mut() {
            Some(last) if last.0 == r => last.1 = y,
            _ => cdf.push((r, y)),
        }
    }
    let mut per_project: BTreeMap<String, ProjectSummary> = BTreeMap::new();
    for r in &files {
        let p = per_project.entry(r.project.clone()).or_default();
        p.files += 1;
        p.mean_ratio += r.reduction_ratio;
        p.bytes_in += r.total_bytes_in;
        p.bytes_out += r.total_bytes_out;
    }
    for p in per_project.values_mut() {
        p.mean_ratio /= p.files as f64;
        p.bytes_reduction = byte_reduction(p.bytes_in, p.bytes_out);
    }
    let bytes_in = files.iter().map(|r| r.total_bytes_in).sum();
    let bytes_out = files.iter().map(|r| r.total_bytes_out).sum();
    CorpusSummary {
        mean_ratio: mean(files.iter().map(|r| r.reduction_ratio)),
        cdf,
        per_project,
        bytes_in,
        bytes_out,
        bytes_reduction: byte_reduction(bytes_in, bytes_out),
        files,
        failures,
    }
}

/// Reduce every file into `out_dir` and summarize. Failed files are listed
/// and left out of the statistics.
pub fn corpus_reduction(files: &[PathBuf], out_dir: &Path, mode: StateMode) -> CorpusSummary {
    let mut ok = Vec::new();
    let mut failed = Vec::new();
    for group in plan_groups(files) {
        for (path, result) in reduce_group(&group, out_dir, mode) {
            match result {
                Ok(r) => ok.push(r),
                Err(e) => failed.push((path.display().to_string(), e.to_string())),
            }
        }
    }
    summarize(ok, failed)
}

impl CorpusSummary {
    pub fn write_files_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "file",
            "project",
            "collector",
            "total_messages",
            "discarded_messages",
            "reduction_ratio",
            "bytes_in",
            "bytes_out",
        ])?;
        for r in &self.files {
            w.write_record([
                r.file.clone(),
                r.project.clone(),
                r.collector.clone(),
                r.total_messages.to_string(),
                r.discarded_messages.to_string(),
                format!("{:.6}", r.reduction_ratio),
                r.total_bytes_in.to_string(),
                r.total_bytes_out.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_cdf_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["reduction_ratio", "cdf"])?;
        for (x, y) in &self.cdf {
            w.write_record([format!("{x:.6}"), format!("{y:.6}")])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Per-project rows followed by an `all` row.
    pub fn write_summary_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["project", "files", "mean_ratio", "bytes_in", "bytes_out", "bytes_reduction"])?;
        let all = ProjectSummary {
            files: self.files.len(),
            mean_ratio: self.mean_ratio,
            bytes_in: self.bytes_in,
            bytes_out: self.bytes_out,
            bytes_reduction: self.bytes_reduction,
        };
        for (name, p) in self.per_project.iter().chain(std::iter::once((&"all".to_string(), &all))) {
            w.write_record([
                name.clone(),
                p.files.to_string(),
                format!("{:.6}", p.mean_ratio),
                p.bytes_in.to_string(),
                p.bytes_out.to_string(),
                format!("{:.6}", p.bytes_reduction),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
