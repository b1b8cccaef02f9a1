// Evaluate recorded responses against an oracle set.
//
// Run: cargo run -p restoracle --example check_responses

use restoracle::metrics::GroundTruth;
use restoracle::oracle::evaluate;
use serde_json::{json, Value};

pub fn run_example() -> anyhow::Result<()> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/yelp");
    let oracles = GroundTruth::load(format!("{dir}/ground_truth/getBusinesses.json"))?.to_oracle_set();
    let listing: Value = serde_json::from_str(&std::fs::read_to_string(format!("{dir}/responses/getBusinesses/listing2.json"))?)?;
    println!("recorded: {} violation(s)", evaluate(&oracles, &listing).len());

    let mut broken = listing.clone();
    broken["businesses"][0]["coordinates"]["latitude"] = json!(137.4);
    broken["businesses"][0]["location"]["country"] = json!("ESP");
    for v in evaluate(&oracles, &broken) {
        println!("  {}", v.message);
    }
    Ok(())
}

fn main() -> anyhow::Result<()> {
    run_example()
}
