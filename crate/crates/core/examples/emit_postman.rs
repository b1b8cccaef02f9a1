// Turn an oracle set into a Postman collection with Chai assertions.
//
// Run: cargo run -p restoracle --example emit_postman

use restoracle::emit::{emit_assertion, emit_collection};
use restoracle::metrics::GroundTruth;
use restoracle::oracle::Checker;
use restoracle::spec::load_spec;

pub fn run_example() -> anyhow::Result<()> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/yelp");
    let spec = load_spec(format!("{dir}/openapi.yaml"))?;
    let oracles = GroundTruth::load(format!("{dir}/ground_truth/getBusinesses.json"))?.to_oracle_set();
    let checker = Checker::default();

    let (path, ty, value) = oracles
        .iter()
        .find(|(p, _, _)| p.to_string() == "businesses[*].price")
        .ok_or_else(|| anyhow::anyhow!("no price oracle"))?;
    println!("{}", emit_assertion(path, ty, value, &checker)?.join("\n"));

    let collection = emit_collection(&spec, &[oracles], &checker)?;
    let out = std::env::temp_dir().join("restoracle-example.postman.json");
    std::fs::write(&out, collection.to_json_string())?;
    println!("wrote {} ({} requests)", out.display(), collection.item.len());
    Ok(())
}

fn main() -> anyhow::Result<()> {
    run_example()
}
