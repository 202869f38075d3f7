//! Pruning of update messages that carry only unnecessary announcements.

mod corpus;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{AnnouncementType, StreamState};
use crate::model::{expand_message, repair_route_server_path, UpdateKind};
use crate::mrt::{BgpMessage, Container, MessageKind, MrtError, MrtHeader, MrtReader, MrtWriter};

pub use corpus::{
    corpus_reduction, output_path, plan_groups, reduce_group, summarize, CorpusSummary, FileGroup, FileOrigin,
    ProjectSummary,
};

#[derive(Debug, Error)]
pub enum ReduceError {
    #[error("message announces {announced} prefixes but {labels} labels were supplied")]
    LabelMismatch { announced: usize, labels: usize },
    #[error(transparent)]
    Mrt(#[from] MrtError),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
}

/// Where classifier state comes from at the start of a file.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateMode {
    Cold,
    /// Carried over from earlier files of the same collector and UTC day.
    #[default]
    Warm,
}

impl FromStr for StateMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cold" => Ok(StateMode::Cold),
            "warm" => Ok(StateMode::Warm),
            other => Err(format!("unknown state mode `{other}` (expected cold or warm)")),
        }
    }
}

/// A message may be dropped only when it has no withdrawals and every
/// announced prefix is labeled `nc` or `nn`. Messages announcing nothing are
/// kept.
pub fn message_is_unnecessary(msg: &BgpMessage, labels: &[AnnouncementType]) -> Result<bool, ReduceError> {
    if labels.len() != msg.announced.len() {
        return Err(ReduceError::LabelMismatch { announced: msg.announced.len(), labels: labels.len() });
    }
    Ok(msg.withdrawn.is_empty() && !labels.is_empty() && labels.iter().all(|l| l.is_unnecessary()))
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReductionReport {
    pub file: String,
    #[serde(default)]
    pub project: String,
    #[serde(default)]
    pub collector: String,
    pub total_messages: u64,
    pub discarded_messages: u64,
    pub reduction_ratio: f64,
    pub total_bytes_in: u64,
    pub total_bytes_out: u64,
    /// Records other than update messages, all of which are kept.
    pub other_records: u64,
}

impl ReductionReport {
    pub fn kept_messages(&self) -> u64 {
        self.total_messages - self.discarded_messages
    }

    fn finish(&mut self) {
        self.reduction_ratio = match self.total_messages {
            0 => 0.0,
            n => self.discarded_messages as f64 / n as f64,
        };
    }
}

/// Label the announcements of one update message, advancing `state`.
pub fn label_message(
    state: &mut StreamState,
    header: &MrtHeader,
    msg: &BgpMessage,
    collector: &str,
    file: &str,
    index: u64,
) -> Vec<AnnouncementType> {
    let mut labels = Vec::with_capacity(msg.announced.len());
    for r in expand_message(header, msg, collector, file, index) {
        match r.kind {
            UpdateKind::Withdrawal => state.withdraw(&r),
            UpdateKind::Announcement => {
                let r = repair_route_server_path(&r);
                if let Ok(c) = state.classify(&r) {
                    labels.push(c.label);
                }
            }
        }
    }
    labels
}

/// Copy `reader` to `writer`, leaving out unnecessary update messages. Kept
/// records are written from their original bytes.
pub fn reduce_stream<W: Write>(
    reader: MrtReader<'_>,
    writer: &mut MrtWriter<W>,
    state: &mut StreamState,
    collector: &str,
    file: &str,
) -> Result<ReductionReport, ReduceError> {
    let mut report = ReductionReport { file: file.to_string(), collector: collector.to_string(), ..Default::default() };
    for (index, rec) in reader.enumerate() {
        let rec = rec?;
        report.total_bytes_in += rec.wire_len() as u64;
        let discard = match rec.message().filter(|m| m.kind == MessageKind::Update) {
            Some(msg) => {
                report.total_messages += 1;
                let labels = label_message(state, rec.header(), msg, collector, file, index as u64);
                message_is_unnecessary(msg, &labels)?
            }
            None => {
                report.other_records += 1;
                false
            }
        };
        if discard {
            report.discarded_messages += 1;
        } else {
            report.total_bytes_out += writer.write_record(&rec)? as u64;
        }
    }
    report.finish();
    Ok(report)
}

/// Reduce `input` into `output` using the same container format. The output
/// appears only once it is complete.
pub fn reduce_file(
    input: &Path,
    output: &Path,
    state: &mut StreamState,
    collector: &str,
) -> Result<ReductionReport, ReduceError> {
    let io_err = |path: &Path| {
        let path = path.display().to_string();
        move |source| ReduceError::Io { path: path.clone(), source }
    };
    let source = io::BufReader::new(File::open(input).map_err(io_err(input))?);
    let reader = MrtReader::new(source, Container::Detect)?;
    let container = reader.container();

    let dir = output.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(dir))?;
    let mut writer = MrtWriter::new(BufWriter::new(tmp), container);
    let file = input.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
    let report = reduce_stream(reader, &mut writer, state, collector, &file)?;
    let tmp = writer
        .finish()?
        .into_inner()
        .map_err(|e| ReduceError::Io { path: output.display().to_string(), source: e.into_error() })?;
    tmp.persist(output).map_err(|e| ReduceError::Io { path: output.display().to_string(), source: e.error })?;
    Ok(report)
}
