// Repair a messy model answer into a per-field oracle record.
//
// Run: cargo run -p restoracle --example normalize_completion

use restoracle::normalize::normalize_text;
use restoracle::prompt::build_operation_prompts;
use restoracle::spec::load_spec;

const ANSWER: &str = r#"Sure! Here is the JSON you asked for:
```json
{
  "string_is_url": "false",
  "string_specific_values": ["$", "$$", "$$$", "$$$$",],
  "string_fixed_length": "None",
}
```
Let me know if you need anything else."#;

pub fn run_example() -> anyhow::Result<()> {
    let spec = load_spec(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/yelp/openapi.yaml"))?;
    let bundle = build_operation_prompts(&spec, "getBusinesses")?
        .into_iter()
        .find(|b| b.field_path.to_string() == "businesses[*].price")
        .ok_or_else(|| anyhow::anyhow!("no prompt for price"))?;
    let record = normalize_text(ANSWER, &bundle)?;
    println!("{}", record.render());
    for r in &record.repairs {
        println!("repair: {r:?}");
    }
    for (key, value) in record.asserted() {
        println!("asserted {key} = {value}");
    }
    Ok(())
}

fn main() -> anyhow::Result<()> {
    run_example()
}
