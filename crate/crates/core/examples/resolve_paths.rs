// Resolve wildcard field paths against a response.
//
// Run: cargo run -p restoracle --example resolve_paths

use restoracle::path::JsonPath;
use serde_json::json;

pub fn run_example() -> anyhow::Result<()> {
    let body = json!({
        "businesses": [
            {"name": "A", "categories": [{"alias": "bars"}, {"alias": "tapas"}]},
            {"name": "B", "categories": []},
            {"name": "C", "categories": [{"alias": "cafes"}]}
        ]
    });
    for p in ["businesses[*].name", "businesses[*].categories[*].alias", "businesses[*].missing"] {
        let path = JsonPath::parse(p)?;
        let hits = path.resolve(&body);
        println!("{path}: {} location(s)", hits.len());
        for (loc, value) in hits {
            println!("  {loc} = {value}");
        }
    }
    Ok(())
}

fn main() -> anyhow::Result<()> {
    run_example()
}
