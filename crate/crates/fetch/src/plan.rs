use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use chrono::{DateTime, Duration, DurationRound, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Project {
    Routeviews,
    RipeRis,
}

impl Project {
    pub fn as_str(self) -> &'static str {
        match self {
            Project::Routeviews => "routeviews",
            Project::RipeRis => "ripe_ris",
        }
    }

    /// Project that runs a collector of this name, if any.
    pub fn of_collector(name: &str) -> Option<Project> {
        if is_ripe_collector(name) {
            Some(Project::RipeRis)
        } else if is_routeviews_collector(name) {
            Some(Project::Routeviews)
        } else {
            None
        }
    }
}

impl fmt::Display for Project {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Project {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "routeviews" => Ok(Project::Routeviews),
            "ripe_ris" | "ripe" => Ok(Project::RipeRis),
            _ => Err(format!("unknown project `{s}` (expected routeviews or ripe_ris)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArchiveKind {
    Updates,
    Rib,
}

impl FromStr for ArchiveKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "updates" => Ok(ArchiveKind::Updates),
            "rib" => Ok(ArchiveKind::Rib),
            _ => Err(format!("unknown archive kind `{s}` (expected updates or rib)")),
        }
    }
}

/// Files of one collector whose nominal start time lies in `[start, end)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchiveTarget {
    pub project: Project,
    pub collector: String,
    pub kind: ArchiveKind,
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
}

impl ArchiveTarget {
    /// Target with the project inferred from the collector name.
    pub fn for_collector(
        collector: &str,
        kind: ArchiveKind,
        start: DateTime<Utc>,
        end: DateTime<Utc>,
    ) -> Result<Self, PlanError> {
        let project = Project::of_collector(collector)
            .ok_or_else(|| PlanError::UnknownCollector { project: None, collector: collector.into() })?;
        Ok(ArchiveTarget { project, collector: collector.into(), kind, start, end })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("unknown collector `{collector}`{}", .project.map(|p| format!(" for {p}")).unwrap_or_default())]
    UnknownCollector { project: Option<Project>, collector: String },
}

/// Archive roots; the defaults are the public archives.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchiveRoots {
    pub ripe_ris: String,
    pub routeviews: String,
}

impl Default for ArchiveRoots {
    fn default() -> Self {
        ArchiveRoots {
            ripe_ris: "https://data.ris.ripe.net".into(),
            routeviews: "https://archive.routeviews.org".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PlannedFile {
    pub url: String,
    /// Path relative to the cache root.
    pub local_path: PathBuf,
    pub start: DateTime<Utc>,
}

fn is_ripe_collector(name: &str) -> bool {
    name.len() == 5
        && name.starts_with("rrc")
        && name[3..].bytes().all(|b| b.is_ascii_digit())
        && name[3..].parse::<u8>().is_ok_and(|n| n <= 26)
}

fn is_routeviews_collector(name: &str) -> bool {
    let Some(rest) = name.strip_prefix("route-views") else { return false };
    if let Some(site) = rest.strip_prefix('.') {
        return !site.is_empty() && site.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit());
    }
    !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit())
}

/// Interval between consecutive files of a kind.
pub fn bin_width(project: Project, kind: ArchiveKind) -> Duration {
    match (project, kind) {
        (Project::RipeRis, ArchiveKind::Updates) => Duration::minutes(5),
        (Project::Routeviews, ArchiveKind::Updates) => Duration::minutes(15),
        (Project::RipeRis, ArchiveKind::Rib) => Duration::hours(8),
        (Project::Routeviews, ArchiveKind::Rib) => Duration::hours(2),
    }
}

pub fn files_per_day(project: Project, kind: ArchiveKind) -> usize {
    (Duration::days(1).num_seconds() / bin_width(project, kind).num_seconds()) as usize
}

/// Expected archive files for `target`, in time order.
pub fn plan_urls(target: &ArchiveTarget, roots: &ArchiveRoots) -> Result<Vec<PlannedFile>, PlanError> {
    let valid = match target.project {
        Project::RipeRis => is_ripe_collector(&target.collector),
        Project::Routeviews => is_routeviews_collector(&target.collector),
    };
    if !valid {
        return Err(PlanError::UnknownCollector { project: Some(target.project), collector: target.collector.clone() });
    }
    let width = bin_width(target.project, target.kind);
    let Ok(floor) = target.start.duration_trunc(width) else { return Ok(Vec::new()) };
    let mut t = if floor < target.start { floor + width } else { floor };
    let mut out = Vec::new();
    while t < target.end {
        out.push(planned(target, roots, t));
        t += width;
    }
    Ok(out)
}

fn planned(target: &ArchiveTarget, roots: &ArchiveRoots, t: DateTime<Utc>) -> PlannedFile {
    let month = t.format("%Y.%m").to_string();
    let stamp = t.format("%Y%m%d.%H%M").to_string();
    let c = &target.collector;
    let (url, local) = match target.project {
        Project::RipeRis => {
            let name = match target.kind {
                ArchiveKind::Updates => format!("updates.{stamp}.gz"),
                ArchiveKind::Rib => format!("bview.{stamp}.gz"),
            };
            let rel = format!("{c}/{month}/{name}");
            (format!("{}/{rel}", roots.ripe_ris.trim_end_matches('/')), format!("ripe_ris/{rel}"))
        }
        Project::Routeviews => {
            let (dir, name) = match target.kind {
                ArchiveKind::Updates => ("UPDATES", format!("updates.{stamp}.bz2")),
                ArchiveKind::Rib => ("RIBS", format!("rib.{stamp}.bz2")),
            };
            let tail = format!("bgpdata/{month}/{dir}/{name}");
            let remote = if c == "route-views2" { tail.clone() } else { format!("{c}/{tail}") };
            (format!("{}/{remote}", roots.routeviews.trim_end_matches('/')), format!("routeviews/{c}/{tail}"))
        }
    };
    PlannedFile { url, local_path: PathBuf::from(local), start: t }
}
