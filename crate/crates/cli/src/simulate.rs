use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use anyhow::{anyhow, Context, Result};
use commex_core::mrt::{Container, MrtWriter};
use commex_sim::{
    builtin_scenario, default_profiles, format_matrix, run_experiment_matrix, run_scenario, write_matrix_csv,
    CaptureLog, Experiment, ProfileSpec, Scenario, SimMessage, SOFTWARE,
};
use serde::Serialize;

use crate::args::{Format, SimulateArgs};
use crate::output::{finish, OutDir};

#[derive(Serialize)]
struct SessionStats {
    from: String,
    to: String,
    announcements: usize,
    withdrawals: usize,
    duplicates: usize,
}

#[derive(Serialize)]
struct SimulateReport {
    scenario: String,
    profile: String,
    messages: usize,
    sessions: Vec<SessionStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    collector_router: Option<String>,
    collector_messages: usize,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    outcome: BTreeMap<String, bool>,
}

fn load_scenario(name: &str, profile: Option<&ProfileSpec>) -> Result<Scenario> {
    let spec = profile.cloned().unwrap_or_default();
    if let Some(s) = builtin_scenario(name, spec) {
        return Ok(s);
    }
    let path = Path::new(name);
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("`{name}` is neither a built-in scenario (exp1..exp4) nor a readable file"))?;
    let mut s = Scenario::from_json(&text).with_context(|| format!("scenario {}", path.display()))?;
    if let Some(p) = profile {
        s.profile = p.clone();
        for r in &mut s.routers {
            r.profile = None;
        }
        s.validate().with_context(|| format!("scenario {}", path.display()))?;
    }
    Ok(s)
}

fn write_capture_csv(log: &CaptureLog, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "seq",
        "time",
        "from",
        "to",
        "prefix",
        "type",
        "as_path",
        "communities",
        "next_hop",
        "med",
        "local_pref",
    ])?;
    for m in log.entries() {
        let join = |xs: Vec<String>| xs.join(" ");
        let (kind, next_hop, med, local_pref) = match &m.message {
            SimMessage::Announcement { next_hop, med, local_pref, .. } => (
                "announcement",
                next_hop.to_string(),
                med.map(|v| v.to_string()).unwrap_or_default(),
                local_pref.map(|v| v.to_string()).unwrap_or_default(),
            ),
            SimMessage::Withdrawal => ("withdrawal", String::new(), String::new(), String::new()),
        };
        w.write_record([
            m.seq.to_string(),
            m.time.to_string(),
            m.from.clone(),
            m.to.clone(),
            m.prefix.to_string(),
            kind.to_string(),
            join(m.message.path().iter().map(|a| a.to_string()).collect()),
            join(m.message.communities().iter().map(|c| c.to_string()).collect()),
            next_hop,
            med,
            local_pref,
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn run_matrix(out: &OutDir) -> Result<()> {
    let rows = run_experiment_matrix(&default_profiles())?;
    print!("{}", format_matrix(&rows));
    let mut w = out.table("matrix.csv", "matrix", &[])?;
    write_matrix_csv(&rows, &mut w)?;
    finish(w, "matrix.csv")?;

    let mut w = out.table("matrix_software.csv", "matrix_software", &[])?;
    {
        let mut c = csv::Writer::from_writer(&mut w);
        c.write_record(["software", "version", "profile", "exp1", "exp2", "exp3", "exp4"])?;
        for s in SOFTWARE {
            let row =
                rows.iter().find(|r| r.profile == s.profile).ok_or_else(|| anyhow!("no row for {}", s.profile))?;
            let mut rec = vec![s.software.to_string(), s.version.to_string(), s.profile.to_string()];
            rec.extend(row.outcomes().iter().map(|b| b.to_string()));
            c.write_record(&rec)?;
        }
        c.flush()?;
    }
    finish(w, "matrix_software.csv")?;
    out.report("matrix_report.json", &serde_json::json!({ "rows": rows }))
}

pub fn cmd_simulate(args: &SimulateArgs, format: Format, out: &OutDir) -> Result<()> {
    if args.matrix {
        run_matrix(out)?;
    }
    let Some(name) = args.scenario.as_deref() else { return Ok(()) };
    let profile: Option<ProfileSpec> =
        args.profile.as_deref().map(|p| p.parse().map_err(|e: String| anyhow!("--profile: {e}"))).transpose()?;
    let scenario = load_scenario(name, profile.as_ref())?;
    let log = run_scenario(&scenario)?;

    let capture_name = format!("capture.{}", format.extension());
    match format {
        Format::Csv => {
            let mut w = out.table(&capture_name, "capture", &[("scenario", scenario.name.clone())])?;
            write_capture_csv(&log, &mut w)?;
            finish(w, &capture_name)?;
        }
        Format::Jsonl => {
            let mut w = out.file(&capture_name)?;
            log.write_jsonl(&mut w)?;
            finish(w, &capture_name)?;
        }
    }

    let router = &args.collector_router;
    let has_router = scenario.routers.iter().any(|r| &r.name == router);
    let mut collector_messages = 0;
    if has_router {
        let name = format!("capture_{router}.mrt");
        let mut w = MrtWriter::new(out.file(&name)?, Container::Plain);
        collector_messages = log.write_mrt(router, &mut w)? as usize;
        finish(w.finish()?, &name)?;
    } else {
        log::warn!("router {router} is not in the scenario; no MRT export");
    }

    let sessions =
        log.sessions()
            .into_iter()
            .map(|(from, to)| {
                let (a, w) = log.session(&from, &to).fold((0, 0), |(a, w), m| {
                    if m.message.is_announcement() {
                        (a + 1, w)
                    } else {
                        (a, w + 1)
                    }
                });
                let duplicates = log.duplicates(&from, &to, 0).len();
                SessionStats { from, to, announcements: a, withdrawals: w, duplicates }
            })
            .collect();
    let outcome = match name.parse::<Experiment>() {
        Ok(e) => BTreeMap::from([(e.name().to_string(), e.outcome(&log))]),
        Err(_) => BTreeMap::new(),
    };
    let report = SimulateReport {
        scenario: scenario.name.clone(),
        profile: scenario.profile.to_string(),
        messages: log.len(),
        sessions,
        collector_router: has_router.then(|| router.clone()),
        collector_messages,
        outcome,
    };
    out.report("simulate_report.json", &report)?;
    eprintln!("{}: {} messages, {} received by {router}", report.scenario, report.messages, collector_messages);
    Ok(())
}
