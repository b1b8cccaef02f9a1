// Score inferred oracles against hand labels and compare two sets.
//
// Run: cargo run -p restoracle --example score_ground_truth

use restoracle::gateway::heuristic_answers;
use restoracle::metrics::{overlap, render_table, score, GroundTruth, MismatchPolicy};
use restoracle::oracle::{OracleSet, Provenance};
use restoracle::prompt::build_operation_prompts;
use restoracle::spec::load_spec;

pub fn run_example() -> anyhow::Result<()> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/yelp");
    let spec = load_spec(format!("{dir}/openapi.yaml"))?;
    let truth = GroundTruth::load(format!("{dir}/ground_truth/getBusinesses.json"))?;

    let mut heuristic = OracleSet::new("getBusinesses");
    for b in build_operation_prompts(&spec, "getBusinesses")? {
        for (key, value) in heuristic_answers(&b) {
            if let Some(ty) = restoracle::oracle::OracleType::from_key(&key) {
                if value.is_asserted() {
                    heuristic.insert(b.field_path.clone(), ty, value, Provenance::Heuristic);
                }
            }
        }
    }
    // A second, deliberately sparse set: only the bounds.
    let mut bounds = OracleSet::new("getBusinesses");
    for (p, t, v) in heuristic.iter().filter(|(_, t, _)| t.key().ends_with("min_value") || t.key().ends_with("max_value")) {
        bounds.insert(p.clone(), t, v.clone(), Provenance::HumanEdited);
    }

    let a = score(&heuristic, &truth, MismatchPolicy::FpAndFn)?;
    let b = score(&bounds, &truth, MismatchPolicy::FpAndFn)?;
    println!("{}", render_table(&[("heuristic", &a), ("bounds", &b)]));
    let o = overlap(&heuristic, &bounds, &truth)?;
    println!("{:?}", o.overall);
    Ok(())
}

fn main() -> anyhow::Result<()> {
    run_example()
}
