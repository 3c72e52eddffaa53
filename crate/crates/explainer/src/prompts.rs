//! Prompt templates and rendering.
//!
//! Templates are plain-text files with `{{name}}` placeholders. A mode
//! template holds the task framing, then a line `=== USER ===`, then the
//! user message.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use tepmon_core::catalog::{variable_catalog, VariableKind};
use tepmon_core::FeatureDeviation;

/// Number of deviations a fault prompt is built from.
pub const PROMPT_FEATURES: usize = 6;

const USER_MARKER: &str = "=== USER ===";

pub const CORPUS_FILE: &str = "system_process_description.txt";
pub const INCLUDED_FILE: &str = "root_causes_included.txt";
pub const GENERAL_FILE: &str = "general_reasoning.txt";
pub const CHAT_FILE: &str = "chat_assistant.txt";

/// Titles of the 15 known TEP disturbances, indexed by IDV number − 1.
pub const IDV_TITLES: [&str; 15] = [
    "A/C Feed Ratio, B Composition Constant (Stream 4) & Step",
    "B Composition, A/C Ratio Constant (Stream 4) & Step",
    "D Feed Temperature (Stream 2) & Step",
    "Reactor Cooling Water Inlet Temperature & Step",
    "Condenser Cooling Water Inlet Temperature & Step",
    "A Feed Loss (Stream 1) & Step",
    "C Header Pressure Loss - Reduced Availability (Stream 4) & Step",
    "A, B, C Feed Composition (Stream 4) & Random Variation",
    "D Feed Temperature (Stream 2) & Random Variation",
    "C Feed Temperature (Stream 4) & Random Variation",
    "Reactor Cooling Water Inlet Temperature & Random Variation",
    "Condenser Cooling Water Inlet Temperature & Random Variation",
    "Reaction Kinetics & Slow Drift",
    "Reactor Cooling Water Valve & Sticking",
    "Condenser Cooling Water Valve & Sticking",
];

pub fn idv_title(id: u8) -> Option<&'static str> {
    IDV_TITLES.get(usize::from(id).checked_sub(1)?).copied()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PromptMode {
    #[serde(alias = "included")]
    RootCausesIncluded,
    #[serde(alias = "general")]
    GeneralReasoning,
}

impl PromptMode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::RootCausesIncluded => "included",
            Self::GeneralReasoning => "general",
        }
    }
}

impl FromStr for PromptMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "included" | "root_causes_included" | "rootcausesincluded" => {
                Ok(Self::RootCausesIncluded)
            }
            "general" | "general_reasoning" | "generalreasoning" => Ok(Self::GeneralReasoning),
            other => Err(format!(
                "unknown prompt mode {other:?} (expected included|general)"
            )),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PromptError {
    #[error("process description corpus missing or empty at {0}")]
    MissingCorpus(String),
    #[error("prompt template {0} missing or malformed")]
    MissingTemplate(String),
    #[error("expected {PROMPT_FEATURES} deviations, got {0}")]
    WrongArity(usize),
    #[error("unresolved placeholder {{{{{0}}}}} in template")]
    UnresolvedPlaceholder(String),
}

/// Loaded prompt templates.
#[derive(Debug, Clone, PartialEq)]
pub struct PromptLibrary {
    corpus: String,
    included: String,
    general: String,
    chat: String,
}

impl PromptLibrary {
    /// Templates shipped with the repository, compiled in.
    pub fn embedded() -> Self {
        Self::from_texts(
            include_str!("../../../prompts/system_process_description.txt"),
            include_str!("../../../prompts/root_causes_included.txt"),
            include_str!("../../../prompts/general_reasoning.txt"),
            include_str!("../../../prompts/chat_assistant.txt"),
        )
        .expect("embedded templates are valid")
    }

    pub fn load(dir: &Path) -> Result<Self, PromptError> {
        let read = |name: &str| std::fs::read_to_string(dir.join(name)).ok();
        let corpus = read(CORPUS_FILE).ok_or_else(|| {
            PromptError::MissingCorpus(dir.join(CORPUS_FILE).display().to_string())
        })?;
        let template =
            |name: &str| read(name).ok_or_else(|| PromptError::MissingTemplate(name.into()));
        Self::from_texts(
            &corpus,
            &template(INCLUDED_FILE)?,
            &template(GENERAL_FILE)?,
            &template(CHAT_FILE)?,
        )
    }

    pub fn from_texts(
        corpus: &str,
        included: &str,
        general: &str,
        chat: &str,
    ) -> Result<Self, PromptError> {
        if corpus.trim().is_empty() {
            return Err(PromptError::MissingCorpus("<inline>".into()));
        }
        for (name, text) in [(INCLUDED_FILE, included), (GENERAL_FILE, general)] {
            if !text.contains(USER_MARKER) {
                return Err(PromptError::MissingTemplate(name.into()));
            }
        }
        Ok(Self {
            corpus: render(corpus, &[("variable_table", &variable_table())])?,
            included: included.to_owned(),
            general: general.to_owned(),
            chat: chat.to_owned(),
        })
    }

    /// Rendered process description.
    pub fn corpus(&self) -> &str {
        &self.corpus
    }

    /// System text for chat sessions.
    pub fn chat_system_text(&self, mode: PromptMode) -> String {
        let mut text = format!("{}\n\n{}", self.corpus.trim_end(), self.chat.trim_end());
        if mode == PromptMode::RootCausesIncluded {
            text.push_str("\n\nKnown root causes:\n");
            text.push_str(&root_cause_list());
        }
        text
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub mode: PromptMode,
    pub system_text: String,
    pub user_text: String,
    /// `Some` with the 15 entries in root-causes-included mode.
    pub root_cause_list: Option<Vec<String>>,
}

fn variable_table() -> String {
    let mut out = String::new();
    for kind in [VariableKind::Measured, VariableKind::Manipulated] {
        out.push_str(match kind {
            VariableKind::Measured => "Measured variables:\n",
            VariableKind::Manipulated => "\nManipulated variables:\n",
        });
        for d in variable_catalog().iter().filter(|d| d.kind == kind) {
            let _ = writeln!(out, "- {} {} ({})", d.tag, d.name, d.unit);
        }
    }
    out
}

/// Numbered "IDV(k) title" lines for the 15 known faults.
pub fn root_cause_list() -> String {
    root_cause_entries().join("\n")
}

fn root_cause_entries() -> Vec<String> {
    IDV_TITLES
        .iter()
        .enumerate()
        .map(|(i, t)| format!("IDV({}) {}", i + 1, t))
        .collect()
}

/// One line per deviation; the percent change is signed with 2 decimals.
pub fn render_deviations(deviations: &[FeatureDeviation]) -> String {
    let mut out = String::new();
    for (i, d) in deviations.iter().enumerate() {
        let kind = match d.variable.kind {
            VariableKind::Measured => "measured",
            VariableKind::Manipulated => "manipulated",
        };
        let change = match d.percent_change {
            Some(p) => format!("{p:+.2}%"),
            None => "undefined (normal mean is zero)".to_owned(),
        };
        let _ = writeln!(
            out,
            "{}. {} [{}, {}]: current {:.4} {}, normal mean {:.4} {}, change {}",
            i + 1,
            d.variable.name,
            d.variable.tag,
            kind,
            d.current_value,
            d.variable.unit,
            d.normal_mean,
            d.variable.unit,
            change
        );
    }
    out
}

fn render(template: &str, values: &[(&str, &str)]) -> Result<String, PromptError> {
    let mut out = template.to_owned();
    for (name, value) in values {
        out = out.replace(&format!("{{{{{name}}}}}"), value);
    }
    if let Some(start) = out.find("{{") {
        let rest = &out[start + 2..];
        let name = rest.split("}}").next().unwrap_or(rest);
        return Err(PromptError::UnresolvedPlaceholder(name.to_owned()));
    }
    Ok(out)
}

pub fn build_fault_prompt(
    deviations: &[FeatureDeviation],
    mode: PromptMode,
    library: &PromptLibrary,
) -> Result<PromptBundle, PromptError> {
    if deviations.len() != PROMPT_FEATURES {
        return Err(PromptError::WrongArity(deviations.len()));
    }
    let (template, list) = match mode {
        PromptMode::RootCausesIncluded => (&library.included, Some(root_cause_entries())),
        PromptMode::GeneralReasoning => (&library.general, None),
    };
    let rendered_list = list.as_ref().map(|l| l.join("\n")).unwrap_or_default();
    let rendered_devs = render_deviations(deviations);
    let mut values = vec![("deviations", rendered_devs.as_str())];
    if list.is_some() {
        values.push(("root_cause_list", rendered_list.as_str()));
    }
    let (task, user) = template.split_once(USER_MARKER).expect("validated at load");
    let task = render(task.trim(), &values)?;
    let user = render(user.trim(), &values)?;
    Ok(PromptBundle {
        mode,
        system_text: format!("{}\n\n{}", library.corpus.trim_end(), task),
        user_text: user,
        root_cause_list: list,
    })
}
