//! Planning and cached download of MRT archive files.
//!
//! Cache layout, relative to the cache root:
//!
//! - `ripe_ris/<collector>/<YYYY.MM>/updates.<YYYYMMDD.HHMM>.gz` (and `bview.*`)
//! - `routeviews/<collector>/bgpdata/<YYYY.MM>/UPDATES/updates.<YYYYMMDD.HHMM>.bz2`
//!   (and `RIBS/rib.*`)
//!
//! A file appears at its cache path only after it downloaded completely and
//! its first MRT record decoded.

mod fetch;
mod plan;

pub use fetch::{
    fetch, FetchOptions, FetchOutcome, FetchReport, FetchStatus, HttpTransport, RetryPolicy, Transport, TransportError,
};
pub use plan::{
    bin_width, files_per_day, plan_urls, ArchiveKind, ArchiveRoots, ArchiveTarget, PlanError, PlannedFile, Project,
};
