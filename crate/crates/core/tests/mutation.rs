mod support;

use restoracle::mutation::{mutate, recount, run_campaign, CampaignError, MutationOperator};
use restoracle::oracle::{Checker, OracleSet, Provenance};
use restoracle::metrics::GroundTruth;
use restoracle::spec::{extract_fields, load_spec, ResponseField};
use support::*;

fn yelp_fields() -> Vec<ResponseField> {
    extract_fields(&load_spec(fixture("yelp/openapi.yaml")).unwrap(), "getBusinesses").unwrap()
}

fn yelp_truth() -> OracleSet {
    GroundTruth::load(fixture("yelp/ground_truth/getBusinesses.json")).unwrap().to_oracle_set()
}

#[test]
fn a_fixed_seed_mutates_one_country_character() {
    let fields = yelp_fields();
    let listing2 = read_json("yelp/responses/getBusinesses/listing2.json");
    let seed = (0..10_000u64)
        .find(|s| {
            let m = mutate("listing2", &listing2, &fields, *s).unwrap();
            m.operator == MutationOperator::StrMutateChar && m.path.to_string() == "businesses[0].location.country"
        })
        .expect("some seed picks the country");
    let m = mutate("listing2", &listing2, &fields, seed).unwrap();
    assert_eq!(m.before, "ES");
    let after = m.after.as_str().unwrap();
    assert_eq!(after.chars().count(), 2);
    assert_eq!(after.chars().zip("ES".chars()).filter(|(a, b)| a != b).count(), 1);
    assert_eq!(mutate("listing2", &listing2, &fields, seed).unwrap(), m);
}

#[test]
fn a_thousand_seeds_stay_valid_and_single_fault() {
    let fields = yelp_fields();
    let validator = response_validator("yelp/openapi.yaml", "getBusinesses");
    let listing2 = read_json("yelp/responses/getBusinesses/listing2.json");
    assert!(validator.is_valid(&listing2));
    for seed in 0..1000 {
        let m = mutate("listing2", &listing2, &fields, seed).unwrap();
        let mutant = m.apply_to(&listing2).unwrap();
        assert_ne!(mutant, listing2, "seed {seed}");
        assert!(validator.is_valid(&mutant), "seed {seed}: {m:?}");
        assert_eq!(diff_location(&listing2, &mutant), Some(m.path.clone()), "seed {seed}: {m:?}");
    }
}

#[test]
fn every_operator_occurs_on_the_catalog() {
    let spec = load_spec(fixture("catalog/openapi.yaml")).unwrap();
    let fields = extract_fields(&spec, "listProducts").unwrap();
    let page = read_json("catalog/responses/listProducts/page1.json");
    let seen: std::collections::BTreeSet<MutationOperator> = (0..3000).map(|s| mutate("p", &page, &fields, s).unwrap().operator).collect();
    assert_eq!(seen.len(), 12, "{seen:?}");
}

#[test]
fn empty_oracle_set_detects_nothing() {
    let out = run_campaign(&Checker::default(), &OracleSet::new("getBusinesses"), &yelp_responses(), &yelp_fields(), 5, 1).unwrap();
    assert_eq!(out.report.total_mutants, 20);
    assert_eq!(out.report.detected, 0);
    assert_eq!(out.report.fdr_percent, 0.0);
}

#[test]
fn emptied_country_is_detected() {
    let fields = yelp_fields();
    let listing2 = read_json("yelp/responses/getBusinesses/listing2.json");
    let seed = (0..10_000u64)
        .find(|s| {
            let m = mutate("listing2", &listing2, &fields, *s).unwrap();
            m.operator == MutationOperator::StrEmpty && m.path.to_string() == "businesses[0].location.country"
        })
        .unwrap();
    let m = mutate("listing2", &listing2, &fields, seed).unwrap();
    let v = restoracle::oracle::evaluate(&yelp_truth(), &m.apply_to(&listing2).unwrap());
    assert_eq!(v.len(), 1);
    assert_eq!(v[0].oracle_type.key(), "string_fixed_length");
}

#[test]
fn campaign_is_deterministic_and_recountable() {
    let checker = Checker::default();
    let truth = yelp_truth();
    let a = run_campaign(&checker, &truth, &yelp_responses(), &yelp_fields(), 20, 9).unwrap();
    let b = run_campaign(&checker, &truth, &yelp_responses(), &yelp_fields(), 20, 9).unwrap();
    assert_eq!(a.report, b.report);
    assert_eq!(a.mutants, b.mutants);
    let records: Vec<_> = a.mutants.iter().map(|m| m.record.clone()).collect();
    assert_eq!(recount(&checker, &truth, &yelp_responses(), &records).unwrap(), a.report.detected);
    let per_op: usize = a.report.per_operator.values().map(|s| s.mutants).sum();
    assert_eq!(per_op, 80);
}

#[test]
fn red_baseline_is_rejected() {
    let mut set = yelp_truth();
    set.insert("total".parse().unwrap(), restoracle::oracle::OracleType::from_key("number_min_value").unwrap(), restoracle::oracle::OracleValue::Bound(Some(100.0)), Provenance::HumanEdited);
    match run_campaign(&Checker::default(), &set, &yelp_responses(), &yelp_fields(), 1, 0) {
        Err(CampaignError::NotGreen { violations, .. }) => assert!(!violations.is_empty()),
        other => panic!("{:?}", other.map(|o| o.report)),
    }
}
