use std::collections::BTreeMap;
use std::io::Write;

use ipnet::IpNet;

use crate::classify::{AnnouncementType, StreamState};
use crate::model::{SessionKey, Timestamp, UpdateKind, UpdateRecord};
use crate::mrt::AsPath;

use super::BeaconError;

#[derive(Clone, Debug, Default)]
pub struct CaseSelection {
    pub prefix: Option<IpNet>,
    /// Exact AS path of the announcements to keep.
    pub path: Option<AsPath>,
    pub session: Option<SessionKey>,
}

impl CaseSelection {
    pub fn prefix(prefix: IpNet) -> Self {
        CaseSelection { prefix: Some(prefix), ..Default::default() }
    }

    pub fn with_path(mut self, path: AsPath) -> Self {
        self.path = Some(path);
        self
    }

    pub fn with_session(mut self, session: SessionKey) -> Self {
        self.session = Some(session);
        self
    }

    fn stream_matches(&self, r: &UpdateRecord) -> bool {
        self.prefix.is_none_or(|p| r.prefix == p) && self.session.as_ref().is_none_or(|s| &r.session == s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CasePoint {
    pub arrival: Timestamp,
    pub label: AnnouncementType,
    /// Count of `label` up to and including this point.
    pub cumulative: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CaseReport {
    pub points: Vec<CasePoint>,
    pub withdrawals: Vec<Timestamp>,
    pub totals: BTreeMap<AnnouncementType, u64>,
}

impl CaseReport {
    /// `arrival_us,type,cumulative_count`; withdrawal markers use type
    /// `withdrawal`.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["arrival_us", "type", "cumulative_count"])?;
        let mut wi = 0;
        let mut emit_withdrawals_before = |w: &mut csv::Writer<W>, limit: Option<Timestamp>| -> csv::Result<()> {
            while wi < self.withdrawals.len() && limit.is_none_or(|l| self.withdrawals[wi] <= l) {
                w.write_record([self.withdrawals[wi].0.to_string(), "withdrawal".into(), (wi + 1).to_string()])?;
                wi += 1;
            }
            Ok(())
        };
        for p in &self.points {
            emit_withdrawals_before(&mut w, Some(p.arrival))?;
            w.write_record([p.arrival.0.to_string(), p.label.to_string(), p.cumulative.to_string()])?;
        }
        emit_withdrawals_before(&mut w, None)?;
        w.flush()?;
        Ok(())
    }
}

/// Label the selected streams from cold state and return per-type
/// cumulative series. The path filter is applied after labeling, so each
/// kept announcement is still compared against its true predecessor.
pub fn beacon_case_report<'a>(
    records: impl IntoIterator<Item = &'a UpdateRecord>,
    selection: &CaseSelection,
) -> Result<CaseReport, BeaconError> {
    let mut state = StreamState::new();
    let mut report = CaseReport::default();
    for r in records.into_iter().filter(|r| selection.stream_matches(r)) {
        if r.kind == UpdateKind::Withdrawal {
            state.withdraw(r);
            report.withdrawals.push(r.arrival);
            continue;
        }
        let Ok(c) = state.classify(r) else { continue };
        let path = r.attrs.as_ref().and_then(|a| a.as_path.clone()).unwrap_or_default();
        if selection.path.as_ref().is_some_and(|want| *want != path) {
            continue;
        }
        let n = report.totals.entry(c.label).or_insert(0);
        *n += 1;
        report.points.push(CasePoint { arrival: r.arrival, label: c.label, cumulative: *n });
    }
    if report.points.is_empty() {
        return Err(BeaconError::EmptySelection);
    }
    Ok(report)
}
