//! Announcement-type labeling over per-(session, prefix) update streams.

mod state;
mod tally;
mod verdict;

pub use state::{shard_of, Classification, ClassifyError, LabeledRecord, StreamState};
pub use tally::{tally, tally_with, TypeTally};
pub use verdict::{community_verdict, is_reordering, path_verdict, AnnouncementType, CommunityVerdict, PathVerdict};

use crate::model::UpdateRecord;

/// Label every announcement in order; withdrawals only advance state.
pub fn label_records<I>(state: &mut StreamState, records: I) -> Vec<LabeledRecord>
where
    I: IntoIterator<Item = UpdateRecord>,
{
    records.into_iter().filter_map(|r| state.observe(&r).map(|c| LabeledRecord::new(r, c))).collect()
}
