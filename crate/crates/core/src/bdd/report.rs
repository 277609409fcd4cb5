//! Run results and their JSON, xUnit XML and text renderings.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use super::parser::{Keyword, Phase};
use crate::agent::TraceEntry;
use crate::world::CharacterState;

/// What a failed step leaves behind for diagnosis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FailureSnapshot {
    /// The agent's known map, or empty when no level was loaded.
    pub map: String,
    pub character: Option<CharacterState>,
    /// The last trace entries, oldest first.
    pub trace: Vec<TraceEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum StepStatus {
    Passed,
    Failed { message: String, snapshot: FailureSnapshot },
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepResult {
    pub keyword: Keyword,
    pub phase: Phase,
    pub text: String,
    pub line: usize,
    pub status: StepStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioResult {
    pub name: String,
    pub ids: Vec<String>,
    pub seed: u64,
    pub steps: Vec<StepResult>,
    pub ticks: u64,
    pub cycles: u64,
    /// Seconds, or ticks under a fixed clock.
    pub time: f64,
    pub passed: bool,
    pub final_character: Option<CharacterState>,
}

impl ScenarioResult {
    pub fn first_failure(&self) -> Option<(&StepResult, &str, &FailureSnapshot)> {
        self.steps.iter().find_map(|s| match &s.status {
            StepStatus::Failed { message, snapshot } => Some((s, message.as_str(), snapshot)),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureResult {
    pub name: String,
    pub path: String,
    pub scenarios: Vec<ScenarioResult>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Totals {
    pub scenarios: usize,
    pub passed: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMetadata {
    pub levels: String,
    pub seed: u64,
    pub max_cycles: u64,
    pub fixed_clock: bool,
    pub tool_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub metadata: RunMetadata,
    pub features: Vec<FeatureResult>,
    pub totals: Totals,
}

impl Report {
    pub fn new(metadata: RunMetadata, features: Vec<FeatureResult>) -> Self {
        let mut totals = Totals::default();
        for s in features.iter().flat_map(|f| &f.scenarios) {
            totals.scenarios += 1;
            if s.passed {
                totals.passed += 1;
            } else {
                totals.failed += 1;
            }
        }
        Report {
            metadata,
            features,
            totals,
        }
    }

    pub fn all_passed(&self) -> bool {
        self.totals.failed == 0
    }

    /// Results without run metadata, for comparing runs made differently.
    pub fn payload(&self) -> serde_json::Value {
        serde_json::json!({ "features": self.features, "totals": self.totals })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown report format {0:?} (expected json, xunit or text)")]
pub struct UnknownFormat(pub String);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Xunit,
    Text,
}

impl FromStr for Format {
    type Err = UnknownFormat;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(Format::Json),
            "xunit" | "xunit-xml" | "xml" => Ok(Format::Xunit),
            "text" | "txt" => Ok(Format::Text),
            other => Err(UnknownFormat(other.to_string())),
        }
    }
}

pub fn write_report(report: &Report, format: Format) -> Vec<u8> {
    match format {
        Format::Json => {
            // serde_json's map is ordered, so going through Value sorts keys.
            let value = serde_json::to_value(report).expect("report serializes");
            let mut out = serde_json::to_string_pretty(&value).expect("value serializes");
            out.push('\n');
            out.into_bytes()
        }
        Format::Xunit => xunit(report).into_bytes(),
        Format::Text => text(report).into_bytes(),
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c if c.is_control() && c != '\n' && c != '\t' => {}
            c => out.push(c),
        }
    }
    out
}

fn failure_body(step: &StepResult, message: &str, snap: &FailureSnapshot) -> String {
    let mut body = format!(
        "line {}: {} {}\n{message}\n",
        step.line,
        step.keyword.as_str(),
        step.text
    );
    if let Some(c) = &snap.character {
        let _ = writeln!(
            body,
            "health={} oxygen={} energy={} score={} pos=({},{})",
            c.health, c.oxygen, c.energy, c.score, c.pos.x, c.pos.y
        );
    }
    if !snap.map.is_empty() {
        body.push('\n');
        body.push_str(&snap.map);
    }
    if !snap.trace.is_empty() {
        body.push_str("\nlast commands:\n");
        for t in &snap.trace {
            let _ = writeln!(
                body,
                "  tick {} [{}/{}] {} -> {}",
                t.tick, t.goal, t.leaf, t.command, t.result
            );
        }
    }
    body
}

fn xunit(report: &Report) -> String {
    let time: f64 = report.features.iter().flat_map(|f| &f.scenarios).map(|s| s.time).sum();
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        out,
        "<testsuites name=\"gridbdd\" tests=\"{}\" failures=\"{}\" time=\"{time:.3}\">",
        report.totals.scenarios, report.totals.failed
    );
    for f in &report.features {
        let failures = f.scenarios.iter().filter(|s| !s.passed).count();
        let time: f64 = f.scenarios.iter().map(|s| s.time).sum();
        let _ = writeln!(
            out,
            "  <testsuite name=\"{}\" tests=\"{}\" failures=\"{failures}\" errors=\"0\" skipped=\"0\" time=\"{time:.3}\">",
            escape(&f.name),
            f.scenarios.len()
        );
        for s in &f.scenarios {
            let _ = write!(
                out,
                "    <testcase classname=\"{}\" name=\"{}\" time=\"{:.3}\"",
                escape(&f.name),
                escape(&s.name),
                s.time
            );
            let failure = s.first_failure();
            if s.ids.is_empty() && failure.is_none() {
                out.push_str("/>\n");
                continue;
            }
            out.push_str(">\n");
            if !s.ids.is_empty() {
                out.push_str("      <properties>\n");
                for id in &s.ids {
                    let _ = writeln!(out, "        <property name=\"id\" value=\"{}\"/>", escape(id));
                }
                out.push_str("      </properties>\n");
            }
            if let Some((step, message, snap)) = failure {
                let _ = writeln!(
                    out,
                    "      <failure message=\"{}\" type=\"StepFailed\">{}</failure>",
                    escape(message),
                    escape(&failure_body(step, message, snap))
                );
            }
            out.push_str("    </testcase>\n");
        }
        out.push_str("  </testsuite>\n");
    }
    out.push_str("</testsuites>\n");
    out
}

fn text(report: &Report) -> String {
    let mut out = format!("{:<6} {:>7} {:>7}  SCENARIO\n", "RESULT", "TICKS", "CYCLES");
    for f in &report.features {
        for s in &f.scenarios {
            let _ = writeln!(
                out,
                "{:<6} {:>7} {:>7}  {} / {}",
                if s.passed { "PASS" } else { "FAIL" },
                s.ticks,
                s.cycles,
                f.name,
                s.name
            );
        }
    }
    let t = report.totals;
    let _ = writeln!(
        out,
        "\n{} scenarios: {} passed, {} failed",
        t.scenarios, t.passed, t.failed
    );
    for f in &report.features {
        for s in &f.scenarios {
            if let Some((step, message, snap)) = s.first_failure() {
                let _ = writeln!(out, "\nFAILED {} / {} ({})", f.name, s.name, f.path);
                for l in failure_body(step, message, snap).lines() {
                    let _ = writeln!(out, "  {l}");
                }
            }
        }
    }
    out
}
