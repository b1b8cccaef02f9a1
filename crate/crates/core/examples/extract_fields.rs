// Flatten an operation's success schema into field records.
//
// Run: cargo run -p restoracle --example extract_fields

use restoracle::spec::{extract_fields, load_spec};

pub fn run_example() -> anyhow::Result<()> {
    let spec = load_spec(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/yelp/openapi.yaml"))?;
    for id in spec.operation_ids() {
        println!("{id}");
        for f in extract_fields(&spec, id)? {
            let kind = match f.element_datatype {
                Some(e) => format!("{}<{}>", f.datatype.as_str(), e.as_str()),
                None => f.datatype.as_str().to_string(),
            };
            let mark = if f.is_oracle_bearing() { "*" } else { " " };
            println!("  {mark} {:<40} {kind}", f.path.to_string());
        }
    }
    Ok(())
}

fn main() -> anyhow::Result<()> {
    run_example()
}
