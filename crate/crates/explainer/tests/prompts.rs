mod common;

use proptest::prelude::*;
use regex::Regex;

use common::{deviations, FAULT7};
use tepmon_explain::prompts::{IDV_TITLES, PROMPT_FEATURES};
use tepmon_explain::{build_fault_prompt, PromptError, PromptLibrary, PromptMode};

fn recovered_percentages(text: &str) -> Vec<f64> {
    let re = Regex::new(r"change ([+-]\d+\.\d{2})%").unwrap();
    re.captures_iter(text)
        .map(|c| c[1].parse().unwrap())
        .collect()
}

#[test]
fn included_mode_lists_all_fifteen() {
    let lib = PromptLibrary::embedded();
    let b = build_fault_prompt(&deviations(&FAULT7), PromptMode::RootCausesIncluded, &lib).unwrap();
    for (i, title) in IDV_TITLES.iter().enumerate() {
        assert!(
            b.system_text.contains(&format!("IDV({}) {}", i + 1, title)),
            "{title}"
        );
    }
    assert!(b.system_text.contains("A Feed Loss (Stream 1)"));
    assert!(b.system_text.contains("top three most likely root causes"));
    assert_eq!(b.root_cause_list.as_ref().map(Vec::len), Some(15));
}

#[test]
fn general_mode_has_no_fault_list() {
    let lib = PromptLibrary::embedded();
    let b = build_fault_prompt(&deviations(&FAULT7), PromptMode::GeneralReasoning, &lib).unwrap();
    let all = format!("{}{}", b.system_text, b.user_text);
    assert!(!all.contains("IDV("));
    assert!(IDV_TITLES.iter().all(|t| !all.contains(t)));
    assert!(b.root_cause_list.is_none());
    assert!(b.system_text.contains("three potential root causes"));
}

#[test]
fn system_text_separates_measured_and_manipulated() {
    let lib = PromptLibrary::embedded();
    let b = build_fault_prompt(&deviations(&FAULT7), PromptMode::GeneralReasoning, &lib).unwrap();
    assert!(b.system_text.contains("Measured variables:"));
    assert!(b.system_text.contains("Manipulated variables:"));
    assert!(b.system_text.contains("XMV(4) A and C Feed Load"));
    assert!(!b.system_text.contains("{{"));
}

#[test]
fn rendering_is_deterministic() {
    let lib = PromptLibrary::embedded();
    let d = deviations(&FAULT7);
    for mode in [PromptMode::RootCausesIncluded, PromptMode::GeneralReasoning] {
        assert_eq!(
            build_fault_prompt(&d, mode, &lib).unwrap(),
            build_fault_prompt(&d, mode, &lib).unwrap()
        );
    }
}

#[test]
fn wrong_arity() {
    let lib = PromptLibrary::embedded();
    let five = &deviations(&FAULT7)[..5];
    assert!(matches!(
        build_fault_prompt(five, PromptMode::GeneralReasoning, &lib),
        Err(PromptError::WrongArity(5))
    ));
}

#[test]
fn missing_corpus_and_templates() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(
        PromptLibrary::load(dir.path()),
        Err(PromptError::MissingCorpus(_))
    ));
    std::fs::write(dir.path().join("system_process_description.txt"), "plant").unwrap();
    assert!(matches!(
        PromptLibrary::load(dir.path()),
        Err(PromptError::MissingTemplate(_))
    ));
    let repo = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../prompts");
    assert_eq!(
        PromptLibrary::load(&repo).unwrap(),
        PromptLibrary::embedded()
    );
}

#[test]
fn unresolved_placeholder_rejected() {
    let lib = PromptLibrary::from_texts(
        "plant",
        "{{oops}}\n=== USER ===\n{{deviations}}",
        "x\n=== USER ===\ny",
        "",
    )
    .unwrap();
    assert!(matches!(
        build_fault_prompt(&deviations(&FAULT7), PromptMode::RootCausesIncluded, &lib),
        Err(PromptError::UnresolvedPlaceholder(name)) if name == "oops"
    ));
}

#[test]
fn fig4_percentages_round_trip() {
    let lib = PromptLibrary::embedded();
    let b = build_fault_prompt(&deviations(&FAULT7), PromptMode::RootCausesIncluded, &lib).unwrap();
    let expected: Vec<f64> = FAULT7.iter().map(|f| f.1).collect();
    assert_eq!(recovered_percentages(&b.user_text), expected);
    for (name, _) in FAULT7 {
        assert!(b.user_text.contains(name));
    }
}

proptest! {
    #[test]
    fn percentages_round_trip(pcts in prop::collection::vec(-500.0f64..500.0, PROMPT_FEATURES)) {
        let names = ["Reactor Pressure", "Stripper Level", "Purge Valve", "D Feed",
                     "Component D in Purge", "Compressor Work"];
        let spec: Vec<(&str, f64)> = names.iter().copied().zip(pcts.iter().copied()).collect();
        let lib = PromptLibrary::embedded();
        for mode in [PromptMode::RootCausesIncluded, PromptMode::GeneralReasoning] {
            let b = build_fault_prompt(&deviations(&spec), mode, &lib).unwrap();
            let got = recovered_percentages(&b.user_text);
            let want: Vec<f64> =
                pcts.iter().map(|p| format!("{p:+.2}").parse::<f64>().unwrap()).collect();
            prop_assert_eq!(got, want);
        }
    }
}
