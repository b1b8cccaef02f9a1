// Configure an OpenAI-compatible backend and complete one prompt.
//
// Without `OPENAI_API_KEY` this only prints the configuration.
//
// Run: OPENAI_API_KEY=... cargo run -p restoracle --example gateway_config

use restoracle::gateway::{BackendConfig, Gateway};
use restoracle::normalize::normalize;
use restoracle::prompt::build_operation_prompts;
use restoracle::spec::load_spec;

pub fn run_example() -> anyhow::Result<()> {
    let base = std::env::var("OPENAI_BASE_URL").unwrap_or_else(|_| "https://api.openai.com/v1".into());
    let mut config = BackendConfig::openai(base, "gpt-4o");
    config.max_retries = 3;
    config.audit_log = Some(std::env::temp_dir().join("restoracle-audit.jsonl"));
    println!("{}", serde_yaml::to_string(&config)?);

    if std::env::var(&config.api_key_env_var).is_err() {
        println!("{} not set; skipping the call", config.api_key_env_var);
        return Ok(());
    }
    let spec = load_spec(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/yelp/openapi.yaml"))?;
    let bundle = build_operation_prompts(&spec, "getBusinesses")?
        .into_iter()
        .find(|b| b.field_path.to_string() == "businesses[*].price")
        .ok_or_else(|| anyhow::anyhow!("no prompt for price"))?;
    let completion = Gateway::new(config)?.complete(&bundle)?;
    println!("{} tokens in, {} out, {} attempt(s)", completion.usage.input_tokens, completion.usage.output_tokens, completion.attempts);
    println!("{}", normalize(&completion, &bundle)?.render());
    Ok(())
}

fn main() -> anyhow::Result<()> {
    run_example()
}
