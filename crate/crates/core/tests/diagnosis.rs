use sctc_core::inventory::{Attribute, AttributeTable};
use sctc_core::mdd::{evaluate, parse_evaluation_file, Level};
use sctc_core::{diagnosis_report, AnnotatedUtterance};

// "there was a change"
const CANONICAL: &str = "dh eh r w aa z ah ch ey n jh";
const Z_AS_S: &str = "dh eh r w aa s ah ch ey n jh";

#[test]
fn devoiced_z_is_reported_as_voicing() {
    let table = AttributeTable::shipped();
    let u = AnnotatedUtterance::phonemes(CANONICAL, Z_AS_S, Z_AS_S).unwrap();
    let recognized = table.map_all(u.annotated()).unwrap();
    let report = diagnosis_report(&table, &u, &recognized).unwrap();

    assert_eq!(report.entries.len(), 1);
    let entry = &report.entries[0];
    assert_eq!(entry.position, 5);
    assert_eq!(entry.canonical, "z");
    let flagged: Vec<&str> = entry.findings.iter().map(|f| f.attribute.name()).collect();
    assert_eq!(flagged, ["voiced"]);
    assert!(report
        .to_string()
        .contains("expected +voiced, detected -voiced"));
}

#[test]
fn perfect_production_reports_nothing() {
    let table = AttributeTable::shipped();
    let u = AnnotatedUtterance::phonemes(CANONICAL, CANONICAL, CANONICAL).unwrap();
    let recognized = table.map_all(u.canonical()).unwrap();
    assert!(diagnosis_report(&table, &u, &recognized)
        .unwrap()
        .is_empty());
}

#[test]
fn r_as_ah_flags_vowel_and_liquid_among_the_signature_diff() {
    let table = AttributeTable::shipped();
    let u = AnnotatedUtterance::phonemes("dh eh r", "dh eh ah", "dh eh ah").unwrap();
    let recognized = table.map_all(u.annotated()).unwrap();
    let report = diagnosis_report(&table, &u, &recognized).unwrap();
    let flagged: Vec<Attribute> = report.entries[0]
        .findings
        .iter()
        .map(|f| f.attribute)
        .collect();
    let r = sctc_core::Phoneme::parse("r").unwrap();
    let ah = sctc_core::Phoneme::parse("ah").unwrap();
    let diff: Vec<Attribute> = table
        .signature_diff(r, ah)
        .iter()
        .map(|d| d.attribute)
        .collect();
    assert_eq!(flagged, diff);
    assert!(flagged.contains(&Attribute::parse("vowel").unwrap()));
    assert!(flagged.contains(&Attribute::parse("liquid").unwrap()));
}

#[test]
fn evaluation_file_reports_both_levels() {
    let table = AttributeTable::shipped();
    let text = format!("{CANONICAL}|{Z_AS_S}|{Z_AS_S}\n{CANONICAL}|{Z_AS_S}|{CANONICAL}\n");
    let utts = parse_evaluation_file(&text).unwrap();
    let report = evaluate(&table, &utts, Level::Both).unwrap();
    let phoneme = report.phoneme.as_ref().unwrap();
    // one correct diagnosis, one false acceptance, twenty true acceptances
    assert_eq!(phoneme.counts.correct_diagnoses, 1);
    assert_eq!(phoneme.counts.false_acceptances, 1);
    assert_eq!(phoneme.counts.true_acceptances, 20);
    let attribute = report.attribute.as_ref().unwrap();
    let voiced = &attribute.per_attribute[Attribute::parse("voiced").unwrap().index()];
    assert_eq!(voiced.report.counts.mispronounced(), 2);
    assert_eq!(attribute.overall.counts.mispronounced(), 2);
    assert!(report.to_text().contains("voiced"));
}
