//! Feature-file grammar: a plain Given-When-Then subset.
//!
//! ```text
//! Feature: <name>
//!   free description lines
//!
//!   # @id: T254794
//!   Scenario: <name>
//!     Given ...
//!     When ...
//!     And ...
//!     Then ...
//! ```
//!
//! Blank lines and `#` comments are ignored everywhere, except that
//! `# @id: <value>` annotations attach to the next scenario. Background,
//! Scenario Outline, tags and tables are not supported.

use std::fmt;

use serde::Serialize;

use crate::ParseError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Phase {
    Given,
    When,
    Then,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Given => "Given",
            Phase::When => "When",
            Phase::Then => "Then",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Keyword {
    Given,
    When,
    Then,
    And,
    But,
}

impl Keyword {
    const ALL: [Keyword; 5] = [Keyword::Given, Keyword::When, Keyword::Then, Keyword::And, Keyword::But];

    pub fn as_str(self) -> &'static str {
        match self {
            Keyword::Given => "Given",
            Keyword::When => "When",
            Keyword::Then => "Then",
            Keyword::And => "And",
            Keyword::But => "But",
        }
    }

    fn phase(self) -> Option<Phase> {
        match self {
            Keyword::Given => Some(Phase::Given),
            Keyword::When => Some(Phase::When),
            Keyword::Then => Some(Phase::Then),
            Keyword::And | Keyword::But => None,
        }
    }
}

/// One step line. Equality ignores the source line.
#[derive(Debug, Clone, Serialize)]
pub struct Step {
    pub keyword: Keyword,
    pub text: String,
    /// `And`/`But` take the phase of the step before them.
    pub phase: Phase,
    pub line: usize,
}

impl PartialEq for Step {
    fn eq(&self, other: &Self) -> bool {
        self.keyword == other.keyword && self.text == other.text && self.phase == other.phase
    }
}

/// Equality ignores the source line.
#[derive(Debug, Clone, Serialize)]
pub struct Scenario {
    pub name: String,
    /// Values of `# @id:` annotations preceding the scenario.
    pub ids: Vec<String>,
    pub steps: Vec<Step>,
    #[serde(skip)]
    pub line: usize,
}

impl PartialEq for Scenario {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.ids == other.ids && self.steps == other.steps
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureFile {
    pub name: String,
    pub description: Vec<String>,
    pub scenarios: Vec<Scenario>,
}

const ANNOTATION: &str = "@id:";

fn column_of(line: &str) -> usize {
    line.chars().take_while(|c| c.is_whitespace()).count() + 1
}

fn split_keyword(text: &str) -> Option<(Keyword, &str)> {
    Keyword::ALL.into_iter().find_map(|kw| {
        let rest = text.strip_prefix(kw.as_str())?;
        (rest.is_empty() || rest.starts_with(char::is_whitespace)).then(|| (kw, rest.trim()))
    })
}

/// The value of an `# @id:` comment, if `text` (already trimmed) is one.
fn annotation(text: &str) -> Option<&str> {
    text.strip_prefix('#')?
        .trim_start()
        .strip_prefix(ANNOTATION)
        .map(str::trim)
}

pub fn parse_feature(text: &str) -> Result<FeatureFile, ParseError> {
    let mut feature: Option<(FeatureFile, usize)> = None;
    let mut pending_ids = Vec::new();
    let mut current: Option<Scenario> = None;
    let mut current_col = 1;

    fn close(feature: &mut FeatureFile, scenario: Option<Scenario>, col: usize) -> Result<(), ParseError> {
        if let Some(s) = scenario {
            if s.steps.is_empty() {
                return Err(ParseError::new(
                    s.line,
                    col,
                    format!("scenario {:?} has no steps", s.name),
                ));
            }
            feature.scenarios.push(s);
        }
        Ok(())
    }

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let t = raw.trim();
        let col = column_of(raw);
        if t.is_empty() {
            continue;
        }
        if t.starts_with('#') {
            if let Some(id) = annotation(t) {
                if id.is_empty() {
                    return Err(ParseError::new(line_no, col, "empty @id annotation"));
                }
                pending_ids.push(id.to_string());
            }
            continue;
        }

        let Some((f, _)) = feature.as_mut() else {
            let Some(name) = t.strip_prefix("Feature:") else {
                return Err(ParseError::new(line_no, col, "missing Feature header"));
            };
            if name.trim().is_empty() {
                return Err(ParseError::new(line_no, col, "feature name is empty"));
            }
            feature = Some((
                FeatureFile {
                    name: name.trim().to_string(),
                    description: Vec::new(),
                    scenarios: Vec::new(),
                },
                line_no,
            ));
            continue;
        };

        if t.starts_with("Feature:") {
            return Err(ParseError::new(line_no, col, "second Feature header"));
        }
        for unsupported in [
            "Background:",
            "Scenario Outline:",
            "Scenario Template:",
            "Examples:",
            "Rule:",
        ] {
            if t.starts_with(unsupported) {
                return Err(ParseError::new(
                    line_no,
                    col,
                    format!("unsupported construct {:?}", unsupported.trim_end_matches(':')),
                ));
            }
        }
        if let Some(name) = t.strip_prefix("Scenario:") {
            let name = name.trim();
            if name.is_empty() {
                return Err(ParseError::new(line_no, col, "scenario name is empty"));
            }
            close(f, current.take(), current_col)?;
            if f.scenarios.iter().any(|s| s.name == name) {
                return Err(ParseError::new(
                    line_no,
                    col,
                    format!("duplicate scenario name {name:?}"),
                ));
            }
            current_col = col;
            current = Some(Scenario {
                name: name.to_string(),
                ids: std::mem::take(&mut pending_ids),
                steps: Vec::new(),
                line: line_no,
            });
            continue;
        }
        if let Some((keyword, rest)) = split_keyword(t) {
            let Some(s) = current.as_mut() else {
                return Err(ParseError::new(line_no, col, "step outside of a scenario"));
            };
            if rest.is_empty() {
                return Err(ParseError::new(
                    line_no,
                    col,
                    format!("{} step has no text", keyword.as_str()),
                ));
            }
            let previous = s.steps.last().map(|p| p.phase);
            let phase = match (keyword.phase(), previous) {
                (Some(p), _) => p,
                (None, Some(p)) => p,
                (None, None) => {
                    return Err(ParseError::new(
                        line_no,
                        col,
                        format!("{} cannot start a scenario", keyword.as_str()),
                    ))
                }
            };
            if let Some(prev) = previous.filter(|prev| phase < *prev) {
                return Err(ParseError::new(line_no, col, format!("{phase} step after {prev} step")));
            }
            s.steps.push(Step {
                keyword,
                text: rest.to_string(),
                phase,
                line: line_no,
            });
            continue;
        }
        if current.is_some() {
            return Err(ParseError::new(line_no, col, "expected a step or Scenario"));
        }
        if !f.scenarios.is_empty() {
            return Err(ParseError::new(line_no, col, "expected Scenario"));
        }
        f.description.push(t.to_string());
    }

    let Some((mut f, header_line)) = feature else {
        return Err(ParseError::new(1, 1, "missing Feature header"));
    };
    close(&mut f, current, current_col)?;
    if f.scenarios.is_empty() {
        return Err(ParseError::new(header_line, 1, "feature has no scenarios"));
    }
    Ok(f)
}

impl FeatureFile {
    /// Canonical text form. `parse_feature(&f.serialize()) == Ok(f)`.
    pub fn serialize(&self) -> String {
        let mut out = format!("Feature: {}\n", self.name);
        for d in &self.description {
            out.push_str(&format!("  {d}\n"));
        }
        for s in &self.scenarios {
            out.push('\n');
            for id in &s.ids {
                out.push_str(&format!("  # {ANNOTATION} {id}\n"));
            }
            out.push_str(&format!("  Scenario: {}\n", s.name));
            for step in &s.steps {
                out.push_str(&format!("    {} {}\n", step.keyword.as_str(), step.text));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const STATION: &str = "\
Feature: Grinding
  # @id: T254794
  Scenario: Grinder yields components
    Given the character is spawned at station \"grind_station\"
    When the character equips \"grinder\"
    And the character grinds \"blk1\" until destroyed
    Then the inventory contains 10 \"steel_plate\"
";

    fn err(text: &str) -> (usize, usize, String) {
        let e = parse_feature(text).unwrap_err();
        (e.line, e.column, e.message)
    }

    #[test]
    fn and_takes_previous_phase() {
        let f = parse_feature(STATION).unwrap();
        let phases: Vec<Phase> = f.scenarios[0].steps.iter().map(|s| s.phase).collect();
        assert_eq!(phases, [Phase::Given, Phase::When, Phase::When, Phase::Then]);
        assert_eq!(f.scenarios[0].ids, ["T254794"]);
        assert_eq!(f.scenarios[0].steps[2].line, 6);
    }

    #[test]
    fn round_trip() {
        let f = parse_feature(STATION).unwrap();
        assert_eq!(parse_feature(&f.serialize()).unwrap(), f);
    }

    #[test]
    fn empty_input_lacks_header() {
        assert_eq!(err(""), (1, 1, "missing Feature header".into()));
        assert_eq!(err("# only a comment\n").0, 1);
    }

    #[test]
    fn located_errors() {
        assert_eq!(
            err("Feature: x\n  Scenario: a\n"),
            (2, 3, "scenario \"a\" has no steps".into())
        );
        assert_eq!(
            err("Feature: x\n  Scenario: a\n    And y\n"),
            (3, 5, "And cannot start a scenario".into())
        );
        assert_eq!(
            err("Feature: x\nScenario: a\n  Given g\n  Then t\n  When w\n"),
            (5, 3, "When step after Then step".into())
        );
        assert_eq!(err("Feature: x\n  Given g\n").0, 2);
        assert_eq!(err("Feature: x\n").2, "feature has no scenarios");
    }

    #[test]
    fn step_equality_ignores_line() {
        let a = Step {
            keyword: Keyword::When,
            text: "t".into(),
            phase: Phase::When,
            line: 1,
        };
        assert_eq!(a, Step { line: 9, ..a.clone() });
    }
}
