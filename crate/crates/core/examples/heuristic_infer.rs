// Infer an oracle set offline with the heuristic backend.
//
// Run: cargo run -p restoracle --example heuristic_infer

use restoracle::gateway::{BackendConfig, Gateway};
use restoracle::normalize::{assemble, normalize, FieldOracleRecord};
use restoracle::oracle::Provenance;
use restoracle::prompt::build_operation_prompts;
use restoracle::spec::{extract_fields, load_spec};

pub fn run_example() -> anyhow::Result<()> {
    let spec = load_spec(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/catalog/openapi.yaml"))?;
    let op = "listProducts";
    let bundles = build_operation_prompts(&spec, op)?;
    let gateway = Gateway::new(BackendConfig::heuristic())?;
    let batch = gateway.complete_batch(&bundles);

    let mut records = Vec::new();
    for (bundle, result) in bundles.iter().zip(&batch.items) {
        let record = match result.as_ref().ok().map(|c| normalize(c, bundle)) {
            Some(Ok(r)) => r,
            // Failed calls and unreadable answers count as "no oracle".
            _ => FieldOracleRecord::all_absent(bundle),
        };
        records.push(record);
    }
    let (set, report) = assemble(&records, op, &extract_fields(&spec, op)?, Provenance::Heuristic);
    println!("{}", set.to_json_string());
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    Ok(())
}

fn main() -> anyhow::Result<()> {
    run_example()
}
