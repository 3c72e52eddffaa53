//! Best-effort extraction of ranked root-cause candidates from free text.

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::prompts::{idv_title, PromptMode};

/// Candidates kept per response.
pub const MAX_CANDIDATES: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    /// IDV number, when the response names one of the known faults.
    pub label: Option<u8>,
    pub title: String,
    /// How many of the six deviations the response says it explains.
    pub explained_features: Option<u8>,
    pub narrative: String,
}

static IDV: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"IDV\s*\(\s*(\d{1,2})\s*\)").unwrap());

/// Leading list markers and emphasis: `- `, `1. `, `### `, `**`.
static LEAD: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\s*(?:(?:[-*#>•]+|\d+[.)])\s*|\*\*|__)*").unwrap());

static ROOT_CAUSE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)^root\s+cause\s*#?\s*(\d+)\s*(?:[:.)\-–]\s*)?(.*)$").unwrap()
});

static NUMBERED: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\s*(?:\*\*)?\s*([1-3])[.)]\s+(.+)$").unwrap());

static IDV_LIST_LINE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)^(?:IDV\s*\(\s*\d{1,2}\s*\)[\s,;/]*(?:and\s+|or\s+)?)+[.\s]*$").unwrap()
});

static COUNT_OF_SIX: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?i)\b(\d|zero|one|two|three|four|five|six)\s+(?:out\s+)?of\s+(?:the\s+|all\s+)?(?:6|six)\b",
    )
    .unwrap()
});

static SLASH_SIX: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b(\d)\s*/\s*6\b").unwrap());

static ALL_SIX: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)\ball\s+(?:6|six)\b").unwrap());

fn number_word(s: &str) -> Option<u8> {
    let v = match s.to_ascii_lowercase().as_str() {
        "zero" => 0,
        "one" => 1,
        "two" => 2,
        "three" => 3,
        "four" => 4,
        "five" => 5,
        "six" => 6,
        digits => digits.parse().ok()?,
    };
    (v <= 6).then_some(v)
}

/// First explained-feature count stated in `text`.
pub fn explained_count(text: &str) -> Option<u8> {
    let mut hits: Vec<(usize, u8)> = Vec::new();
    if let Some(c) = COUNT_OF_SIX.captures(text) {
        if let Some(v) = number_word(&c[1]) {
            hits.push((c.get(0).unwrap().start(), v));
        }
    }
    if let Some(c) = SLASH_SIX.captures(text) {
        if let Some(v) = number_word(&c[1]) {
            hits.push((c.get(0).unwrap().start(), v));
        }
    }
    if let Some(m) = ALL_SIX.find(text) {
        hits.push((m.start(), 6));
    }
    hits.into_iter().min_by_key(|h| h.0).map(|h| h.1)
}

struct Heading {
    start: usize,
    body_start: usize,
    label: Option<u8>,
    title: String,
}

fn clean_title(s: &str) -> String {
    s.trim()
        .trim_matches(|c: char| c == '*' || c == '_' || c == ':' || c == '-' || c.is_whitespace())
        .replace("**", "")
        .trim()
        .to_owned()
}

fn known_label(s: &str) -> Option<u8> {
    s.parse::<u8>().ok().filter(|id| idv_title(*id).is_some())
}

/// Lines with their byte offsets (start, end of content, start of next line).
fn lines(text: &str) -> impl Iterator<Item = (usize, &str, usize)> {
    let mut offset = 0;
    text.split_inclusive('\n').map(move |raw| {
        let start = offset;
        offset += raw.len();
        (start, raw.trim_end_matches(['\n', '\r']), offset)
    })
}

fn idv_headings(text: &str) -> Vec<Heading> {
    let mut out = Vec::new();
    for (start, line, next) in lines(text) {
        let lead = LEAD.find(line).map_or(0, |m| m.end());
        let mut rest = &line[lead..];
        if let Some(c) = ROOT_CAUSE.captures(rest) {
            let tail = c.get(2).unwrap();
            rest = LEAD
                .find(tail.as_str())
                .map_or(tail.as_str(), |m| &tail.as_str()[m.end()..]);
        }
        if IDV_LIST_LINE.is_match(rest) {
            for c in IDV.captures_iter(rest) {
                if let Some(label) = known_label(&c[1]) {
                    out.push(Heading {
                        start,
                        body_start: next,
                        label: Some(label),
                        title: String::new(),
                    });
                }
            }
            continue;
        }
        let Some(c) = IDV.captures(rest) else {
            continue;
        };
        if c.get(0).unwrap().start() != 0 {
            continue;
        }
        if let Some(label) = known_label(&c[1]) {
            out.push(Heading {
                start,
                body_start: next,
                label: Some(label),
                title: clean_title(&rest[c.get(0).unwrap().end()..]),
            });
        }
    }
    out
}

fn inline_idv(text: &str) -> Vec<Heading> {
    IDV.captures_iter(text)
        .filter_map(|c| {
            let m = c.get(0).unwrap();
            Some(Heading {
                start: m.start(),
                body_start: m.end(),
                label: Some(known_label(&c[1])?),
                title: String::new(),
            })
        })
        .collect()
}

fn root_cause_headings(text: &str) -> Vec<Heading> {
    let mut out = Vec::new();
    for (start, line, next) in lines(text) {
        let lead = LEAD.find(line).map_or(0, |m| m.end());
        if let Some(c) = ROOT_CAUSE.captures(&line[lead..]) {
            let title = clean_title(&c[2]);
            let label = IDV.captures(&title).and_then(|i| known_label(&i[1]));
            out.push(Heading {
                start,
                body_start: next,
                label,
                title,
            });
        }
    }
    if out.is_empty() {
        for (start, line, next) in lines(text) {
            if let Some(c) = NUMBERED.captures(line) {
                out.push(Heading {
                    start,
                    body_start: next,
                    label: None,
                    title: clean_title(&c[2]),
                });
            }
        }
    }
    out
}

fn assemble(text: &str, headings: Vec<Heading>) -> Vec<Candidate> {
    let mut out: Vec<Candidate> = Vec::new();
    for (i, h) in headings.iter().enumerate() {
        if h.label.is_some() && out.iter().any(|c| c.label == h.label) {
            continue;
        }
        let end = headings[i + 1..]
            .iter()
            .map(|n| n.start)
            .find(|&s| s >= h.body_start)
            .unwrap_or(text.len());
        let heading_line = &text[h.start..h.body_start.min(text.len())];
        let narrative = text[h.body_start.min(end)..end].trim().to_owned();
        let title = if h.title.is_empty() {
            h.label.and_then(idv_title).unwrap_or_default().to_owned()
        } else {
            h.title.clone()
        };
        out.push(Candidate {
            label: h.label,
            title,
            explained_features: explained_count(&narrative)
                .or_else(|| explained_count(heading_line)),
            narrative,
        });
        if out.len() == MAX_CANDIDATES {
            break;
        }
    }
    out
}

/// Extracts up to three ranked candidates. Never fails; unparseable text
/// yields an empty list.
///
/// In root-causes-included mode, lines that start with an IDV token are
/// treated as candidate headings when they name at least two faults;
/// otherwise every IDV token is taken in order of appearance.
pub fn parse_root_causes(text: &str, mode: PromptMode) -> Vec<Candidate> {
    match mode {
        PromptMode::RootCausesIncluded => {
            let headings = idv_headings(text);
            let mut distinct: Vec<Option<u8>> = headings.iter().map(|h| h.label).collect();
            distinct.sort_unstable();
            distinct.dedup();
            if distinct.len() < 2 {
                assemble(text, inline_idv(text))
            } else {
                assemble(text, headings)
            }
        }
        PromptMode::GeneralReasoning => assemble(text, root_cause_headings(text)),
    }
}

/// Labels of the parsed candidates, in rank order.
pub fn labels(candidates: &[Candidate]) -> Vec<u8> {
    candidates.iter().filter_map(|c| c.label).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        assert_eq!(
            explained_count("accounting for 4 out of the 6 features"),
            Some(4)
        );
        assert_eq!(
            explained_count("explains 5 out of the 6 feature deviations"),
            Some(5)
        );
        assert_eq!(explained_count("Features explained: 6/6."), Some(6));
        assert_eq!(explained_count("All six of the top features"), Some(6));
        assert_eq!(explained_count("four out of six changes"), Some(4));
        assert_eq!(explained_count("no count here"), None);
    }

    #[test]
    fn empty_text() {
        assert!(parse_root_causes("", PromptMode::RootCausesIncluded).is_empty());
        assert!(parse_root_causes("", PromptMode::GeneralReasoning).is_empty());
    }

    #[test]
    fn out_of_range_ids_ignored() {
        let c = parse_root_causes(
            "IDV(21) and IDV(0) and IDV(3)",
            PromptMode::RootCausesIncluded,
        );
        assert_eq!(labels(&c), vec![3]);
    }
}
