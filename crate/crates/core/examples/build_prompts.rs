// Build the structured prompt for one response field.
//
// Run: cargo run -p restoracle --example build_prompts

use restoracle::prompt::build_operation_prompts;
use restoracle::spec::load_spec;

pub fn run_example() -> anyhow::Result<()> {
    let spec = load_spec(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/yelp/openapi.yaml"))?;
    let bundles = build_operation_prompts(&spec, "getBusinesses")?;
    println!("{} prompts", bundles.len());
    let price = bundles
        .iter()
        .find(|b| b.field_path.to_string() == "businesses[*].price")
        .ok_or_else(|| anyhow::anyhow!("no prompt for price"))?;
    println!("--- system ---\n{}", price.system_prompt);
    println!("--- user ---\n{}", price.user_prompt);
    println!("--- expected keys ---\n{}", price.expected_keys.join(", "));
    Ok(())
}

fn main() -> anyhow::Result<()> {
    run_example()
}
