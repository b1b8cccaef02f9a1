// Seeded mutation campaign and failure detection ratio.
//
// Run: cargo run -p restoracle --example mutation_campaign

use restoracle::metrics::GroundTruth;
use restoracle::mutation::{mutate, run_campaign};
use restoracle::oracle::Checker;
use restoracle::spec::{extract_fields, load_spec};
use serde_json::Value;

pub fn run_example() -> anyhow::Result<()> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/yelp");
    let spec = load_spec(format!("{dir}/openapi.yaml"))?;
    let fields = extract_fields(&spec, "getBusinesses")?;
    let oracles = GroundTruth::load(format!("{dir}/ground_truth/getBusinesses.json"))?.to_oracle_set();
    let mut responses = Vec::new();
    for id in ["listing2", "madrid", "lisbon", "sydney"] {
        let v: Value = serde_json::from_str(&std::fs::read_to_string(format!("{dir}/responses/getBusinesses/{id}.json"))?)?;
        responses.push((id.to_string(), v));
    }

    let one = mutate("listing2", &responses[0].1, &fields, 7)?;
    println!("seed 7: {} at {}: {} -> {}", one.operator, one.path, one.before, one.after);

    let out = run_campaign(&Checker::default(), &oracles, &responses, &fields, 50, 7)?;
    let r = &out.report;
    println!("FDR {:.1}% ({}/{})", r.fdr_percent, r.detected, r.total_mutants);
    for (op, s) in &r.per_operator {
        println!("  {op:<20} {:>4} mutants {:>6.1}%", s.mutants, s.fdr_percent);
    }
    Ok(())
}

fn main() -> anyhow::Result<()> {
    run_example()
}
