//! Step definitions and matching.
//!
//! A pattern is literal text with typed placeholders: `{int}` matches an
//! optionally signed integer, `{float}` a decimal number and `{string}` a
//! double-quoted span (captured without the quotes). Among the patterns of
//! the step's phase that match, the one with the longest literal prefix
//! wins; equally long prefixes are ambiguous.

use std::fmt;
use std::sync::Arc;

use regex::Regex;
use thiserror::Error;

use super::parser::{Phase, Step};
use super::runner::{StepContext, StepError};

#[derive(Debug, Clone, PartialEq)]
pub enum Arg {
    Int(i64),
    Float(f64),
    Str(String),
}

impl Arg {
    pub fn as_int(&self) -> Option<i64> {
        match self {
            Arg::Int(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_float(&self) -> Option<f64> {
        match self {
            Arg::Float(v) => Some(*v),
            Arg::Int(v) => Some(*v as f64),
            Arg::Str(_) => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Arg::Str(s) => Some(s),
            _ => None,
        }
    }
}

pub type Handler = Arc<dyn Fn(&mut StepContext, &[Arg]) -> Result<(), StepError> + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Int,
    Float,
    Str,
}

#[derive(Clone)]
pub struct StepDefinition {
    pub phase: Phase,
    pub pattern: String,
    regex: Regex,
    slots: Vec<Slot>,
    literal_prefix: usize,
    pub handler: Handler,
}

impl fmt::Debug for StepDefinition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.phase, self.pattern)
    }
}

impl StepDefinition {
    pub fn new(phase: Phase, pattern: &str, handler: Handler) -> Self {
        let mut re = String::from("^");
        let mut slots = Vec::new();
        let mut literal_prefix = None;
        let mut rest = pattern;
        while !rest.is_empty() {
            let next = [("{int}", Slot::Int), ("{float}", Slot::Float), ("{string}", Slot::Str)]
                .into_iter()
                .filter_map(|(tok, slot)| rest.find(tok).map(|at| (at, tok, slot)))
                .min_by_key(|(at, _, _)| *at);
            let Some((at, tok, slot)) = next else {
                re.push_str(&regex::escape(rest));
                break;
            };
            re.push_str(&regex::escape(&rest[..at]));
            literal_prefix.get_or_insert(pattern.len() - rest.len() + at);
            re.push_str(match slot {
                Slot::Int => r"([+-]?\d+)",
                Slot::Float => r"([+-]?(?:\d+\.\d*|\.\d+|\d+))",
                Slot::Str => r#""([^"]*)""#,
            });
            slots.push(slot);
            rest = &rest[at + tok.len()..];
        }
        re.push('$');
        StepDefinition {
            phase,
            pattern: pattern.to_string(),
            regex: Regex::new(&re).expect("escaped pattern is a valid regex"),
            slots,
            literal_prefix: literal_prefix.unwrap_or(pattern.len()),
            handler,
        }
    }

    /// Number of placeholders, which is the number of arguments passed to
    /// the handler.
    pub fn arity(&self) -> usize {
        self.slots.len()
    }

    fn captures(&self, text: &str) -> Option<Vec<Arg>> {
        let caps = self.regex.captures(text)?;
        self.slots
            .iter()
            .enumerate()
            .map(|(i, slot)| {
                let s = caps.get(i + 1)?.as_str();
                match slot {
                    Slot::Int => s.parse().ok().map(Arg::Int),
                    Slot::Float => s.parse().ok().map(Arg::Float),
                    Slot::Str => Some(Arg::Str(s.to_string())),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("duplicate {phase} step pattern {pattern:?}")]
pub struct DuplicatePattern {
    pub phase: Phase,
    pub pattern: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatchError {
    #[error("no {phase} step matches {text:?}{}", suggest(.suggestions))]
    NoMatch {
        phase: Phase,
        text: String,
        suggestions: Vec<String>,
    },
    #[error("{phase} step {text:?} is ambiguous between {candidates:?}")]
    Ambiguous {
        phase: Phase,
        text: String,
        candidates: Vec<String>,
    },
}

fn suggest(s: &[String]) -> String {
    if s.is_empty() {
        String::new()
    } else {
        format!(
            "; did you mean {}?",
            s.iter().map(|p| format!("{p:?}")).collect::<Vec<_>>().join(" or ")
        )
    }
}

/// A step resolved to its definition with typed arguments.
#[derive(Debug, Clone)]
pub struct StepBinding<'r> {
    pub definition: &'r StepDefinition,
    pub args: Vec<Arg>,
}

#[derive(Debug, Clone, Default)]
pub struct StepRegistry {
    defs: Vec<StepDefinition>,
}

/// Maximum word-level edit distance for a pattern to be suggested.
const SUGGEST_DISTANCE: usize = 3;

fn word_distance(a: &[&str], b: &[&str]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    for (i, wa) in a.iter().enumerate() {
        let mut cur = vec![i + 1; b.len() + 1];
        for (j, wb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(wa != wb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        prev = cur;
    }
    prev[b.len()]
}

impl StepRegistry {
    pub fn new() -> Self {
        StepRegistry::default()
    }

    pub fn len(&self) -> usize {
        self.defs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.defs.is_empty()
    }

    pub fn definitions(&self) -> &[StepDefinition] {
        &self.defs
    }

    pub fn register(
        &mut self,
        phase: Phase,
        pattern: &str,
        handler: impl Fn(&mut StepContext, &[Arg]) -> Result<(), StepError> + Send + Sync + 'static,
    ) -> Result<(), DuplicatePattern> {
        if self.defs.iter().any(|d| d.phase == phase && d.pattern == pattern) {
            return Err(DuplicatePattern {
                phase,
                pattern: pattern.to_string(),
            });
        }
        self.defs.push(StepDefinition::new(phase, pattern, Arc::new(handler)));
        Ok(())
    }

    pub fn match_step(&self, step: &Step) -> Result<StepBinding<'_>, MatchError> {
        let mut best: Vec<(&StepDefinition, Vec<Arg>)> = Vec::new();
        for d in self.defs.iter().filter(|d| d.phase == step.phase) {
            let Some(args) = d.captures(&step.text) else {
                continue;
            };
            match best.first() {
                Some((b, _)) if b.literal_prefix > d.literal_prefix => {}
                Some((b, _)) if b.literal_prefix == d.literal_prefix => best.push((d, args)),
                _ => best = vec![(d, args)],
            }
        }
        match best.len() {
            0 => {
                let words: Vec<&str> = step.text.split_whitespace().collect();
                let mut near: Vec<(usize, &str)> = self
                    .defs
                    .iter()
                    .filter(|d| d.phase == step.phase)
                    .map(|d| {
                        let pat: Vec<&str> = d.pattern.split_whitespace().collect();
                        (word_distance(&words, &pat), d.pattern.as_str())
                    })
                    .filter(|(dist, _)| *dist <= SUGGEST_DISTANCE)
                    .collect();
                near.sort();
                Err(MatchError::NoMatch {
                    phase: step.phase,
                    text: step.text.clone(),
                    suggestions: near.into_iter().map(|(_, p)| p.to_string()).collect(),
                })
            }
            1 => {
                let (definition, args) = best.pop().expect("one candidate");
                Ok(StepBinding { definition, args })
            }
            _ => Err(MatchError::Ambiguous {
                phase: step.phase,
                text: step.text.clone(),
                candidates: best.iter().map(|(d, _)| d.pattern.clone()).collect(),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bdd::Keyword;

    fn step(phase: Phase, text: &str) -> Step {
        let keyword = match phase {
            Phase::Given => Keyword::Given,
            Phase::When => Keyword::When,
            Phase::Then => Keyword::Then,
        };
        Step {
            keyword,
            text: text.into(),
            phase,
            line: 1,
        }
    }

    fn registry(patterns: &[(Phase, &str)]) -> StepRegistry {
        let mut r = StepRegistry::new();
        for (phase, p) in patterns {
            r.register(*phase, p, |_, _| Ok(())).unwrap();
        }
        r
    }

    #[test]
    fn typed_captures() {
        let r = registry(&[(Phase::Then, "the inventory contains {int} {string}")]);
        let b = r
            .match_step(&step(Phase::Then, "the inventory contains 10 \"steel_plate\""))
            .unwrap();
        assert_eq!(b.args, [Arg::Int(10), Arg::Str("steel_plate".into())]);
        assert!(r
            .match_step(&step(Phase::Then, "the inventory contains 10.5 \"x\""))
            .is_err());
        assert!(r
            .match_step(&step(Phase::When, "the inventory contains 10 \"x\""))
            .is_err());
    }

    #[test]
    fn float_accepts_integers_and_decimals() {
        let r = registry(&[(Phase::Then, "within {float} of {string}")]);
        for (text, v) in [
            ("within 1.5 of \"b\"", 1.5),
            ("within 2 of \"b\"", 2.0),
            ("within -.5 of \"b\"", -0.5),
        ] {
            assert_eq!(r.match_step(&step(Phase::Then, text)).unwrap().args[0], Arg::Float(v));
        }
    }

    #[test]
    fn longest_literal_prefix_wins() {
        let r = registry(&[
            (Phase::When, "the {string} opens"),
            (Phase::When, "the door {string} opens"),
        ]);
        let b = r.match_step(&step(Phase::When, "the door \"d1\" opens")).unwrap();
        assert_eq!(b.definition.pattern, "the door {string} opens");
    }

    #[test]
    fn equal_prefixes_are_ambiguous() {
        let r = registry(&[(Phase::When, "go {int}"), (Phase::When, "go {float}")]);
        assert!(matches!(
            r.match_step(&step(Phase::When, "go 3")),
            Err(MatchError::Ambiguous { candidates, .. }) if candidates.len() == 2
        ));
    }

    #[test]
    fn no_match_suggests_near_patterns() {
        let r = registry(&[
            (Phase::When, "the character waits {int} ticks"),
            (Phase::When, "something else entirely here ok"),
        ]);
        let Err(MatchError::NoMatch { suggestions, .. }) = r.match_step(&step(Phase::When, "the character flies"))
        else {
            panic!("expected NoMatch");
        };
        assert_eq!(suggestions, ["the character waits {int} ticks"]);
    }

    #[test]
    fn duplicate_pattern_per_phase() {
        let mut r = registry(&[(Phase::Given, "the level {string} is loaded")]);
        assert!(r
            .register(Phase::Given, "the level {string} is loaded", |_, _| Ok(()))
            .is_err());
        assert!(r
            .register(Phase::Then, "the level {string} is loaded", |_, _| Ok(()))
            .is_ok());
    }

    #[test]
    fn word_distance_is_levenshtein() {
        assert_eq!(word_distance(&["a", "b", "c"], &["a", "x", "c", "d"]), 2);
        assert_eq!(word_distance(&[], &["a"]), 1);
    }
}
