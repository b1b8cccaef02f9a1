//! File-based pipeline commands behind the `restoracle` binary.
//!
//! Each stage reads the previous stage's files and writes its own into the
//! output directory, plus a `manifest.<command>.json` recording the
//! configuration, input digests and output paths. Logs go to `tracing`;
//! data only goes to files.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::emit::{emit_collection, EmitError};
use crate::gateway::{BackendConfig, BackendKind, Gateway, GatewayError};
use crate::metrics::{overlap_many, render_table, score_many, GroundTruth, MetricsError, MismatchPolicy};
use crate::mutation::{recount, run_campaign, CampaignError, MutantOutcome, MutantRecord};
use crate::normalize::{assemble, normalize, FieldOracleRecord};
use crate::oracle::{evaluate_with, validate_set, CheckConfig, Checker, OracleSet, OracleSetError, Provenance};
use crate::prompt::{build_operation_prompts_with, PromptError, PromptTemplates};
use crate::spec::{extract_fields, load_spec, ApiSpec, SpecError};

/// Exit status of a command that ran to completion but found violations.
pub const EXIT_VIOLATIONS: i32 = 3;

#[derive(Debug, Error)]
pub enum CommandError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot access {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: String, source: serde_json::Error },
    #[error("invalid config {path}: {message}")]
    Config { path: String, message: String },
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    OracleSet(#[from] OracleSetError),
    #[error(transparent)]
    Emit(#[from] EmitError),
    #[error(transparent)]
    Campaign(#[from] CampaignError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("invalid check configuration: {0}")]
    Check(#[from] regex::Error),
}

impl CommandError {
    /// 2 for usage errors, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 2,
            _ => 1,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CommandError + '_ {
    move |source| CommandError::Io { path: path.display().to_string(), source }
}

/// Settings shared by all commands, read from `--config`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct Config {
    pub backend: BackendConfig,
    pub check: CheckConfig,
    pub mismatch_policy: MismatchPolicy,
    pub repetitions: usize,
    pub seed: u64,
    /// Alternative prompt templates (YAML).
    pub prompt_templates: Option<PathBuf>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            backend: BackendConfig::heuristic(),
            check: CheckConfig::default(),
            mismatch_policy: MismatchPolicy::default(),
            repetitions: 100,
            seed: 0,
            prompt_templates: None,
        }
    }
}

impl Config {
    /// Load a YAML or JSON config file.
    pub fn load(path: &Path) -> Result<Self, CommandError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        serde_yaml::from_str(&text).map_err(|e| CommandError::Config { path: path.display().to_string(), message: e.to_string() })
    }
}

/// Where and how a command runs.
#[derive(Debug, Clone)]
pub struct Context {
    pub config: Config,
    pub out: PathBuf,
}

impl Context {
    pub fn new(config: Config, out: impl Into<PathBuf>) -> Self {
        Self { config, out: out.into() }
    }

    fn checker(&self) -> Result<Checker, CommandError> {
        Ok(Checker::new(self.config.check.clone())?)
    }
}

/// What a finished command produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub exit_code: i32,
    pub outputs: Vec<PathBuf>,
    /// One-line human summary.
    pub summary: String,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct InputDigest {
    path: String,
    sha256: String,
}

/// Audit record written next to every command's outputs.
#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RunManifest {
    command: String,
    tool_version: String,
    arguments: Value,
    config: Value,
    inputs: Vec<InputDigest>,
    outputs: Vec<String>,
    exit_code: i32,
    started_at: String,
    finished_at: String,
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Hex SHA-256 of a file's bytes.
pub fn sha256_file(path: &Path) -> Result<String, CommandError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

struct Run<'a> {
    ctx: &'a Context,
    command: &'static str,
    arguments: Value,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    started_at: String,
}

impl<'a> Run<'a> {
    fn start(ctx: &'a Context, command: &'static str, arguments: Value) -> Result<Self, CommandError> {
        fs::create_dir_all(&ctx.out).map_err(io_err(&ctx.out))?;
        Ok(Self { ctx, command, arguments, inputs: Vec::new(), outputs: Vec::new(), started_at: now() })
    }

    fn input(&mut self, path: &Path) {
        if !self.inputs.iter().any(|p| p == path) {
            self.inputs.push(path.to_path_buf());
        }
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf, CommandError> {
        let path = self.ctx.out.join(name);
        fs::write(&path, contents).map_err(io_err(&path))?;
        self.outputs.push(path.clone());
        Ok(path)
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf, CommandError> {
        let mut text = serde_json::to_string_pretty(value).expect("outputs serialize");
        text.push('\n');
        self.write(name, &text)
    }

    fn write_jsonl<T: Serialize>(&mut self, name: &str, items: &[T]) -> Result<PathBuf, CommandError> {
        let path = self.ctx.out.join(name);
        let mut f = std::io::BufWriter::new(fs::File::create(&path).map_err(io_err(&path))?);
        for item in items {
            serde_json::to_writer(&mut f, item).expect("outputs serialize");
            f.write_all(b"\n").map_err(io_err(&path))?;
        }
        f.flush().map_err(io_err(&path))?;
        self.outputs.push(path.clone());
        Ok(path)
    }

    fn finish(mut self, exit_code: i32, summary: String) -> Result<Outcome, CommandError> {
        let inputs = self
            .inputs
            .iter()
            .map(|p| Ok(InputDigest { path: p.display().to_string(), sha256: sha256_file(p)? }))
            .collect::<Result<Vec<_>, CommandError>>()?;
        let manifest = RunManifest {
            command: self.command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            arguments: self.arguments.clone(),
            config: serde_json::to_value(&self.ctx.config).expect("config serializes"),
            inputs,
            outputs: self.outputs.iter().map(|p| p.display().to_string()).collect(),
            exit_code,
            started_at: self.started_at.clone(),
            finished_at: now(),
        };
        let name = format!("manifest.{}.json", self.command);
        let outputs = std::mem::take(&mut self.outputs);
        self.write_json(&name, &manifest)?;
        tracing::info!("{summary}");
        Ok(Outcome { exit_code, outputs, summary })
    }
}

fn select_operations(spec: &ApiSpec, filter: &[String]) -> Result<Vec<String>, CommandError> {
    if filter.is_empty() {
        return Ok(spec.operation_ids().map(str::to_string).collect());
    }
    for op in filter {
        spec.operation(op)?;
    }
    Ok(filter.to_vec())
}

fn load_set(run: &mut Run, path: &Path) -> Result<OracleSet, CommandError> {
    run.input(path);
    Ok(OracleSet::load(path, Provenance::Llm)?)
}

/// Response documents from files or directories of `*.json`, identified by
/// file stem. Directories are read in name order.
pub fn load_responses(paths: &[PathBuf]) -> Result<Vec<(String, Value, PathBuf)>, CommandError> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut entries: Vec<PathBuf> = fs::read_dir(p)
                .map_err(io_err(p))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|e| e.extension().is_some_and(|x| x == "json"))
                .collect();
            entries.sort();
            files.extend(entries);
        } else {
            files.push(p.clone());
        }
    }
    files
        .into_iter()
        .map(|f| {
            let text = fs::read_to_string(&f).map_err(io_err(&f))?;
            let value = serde_json::from_str(&text).map_err(|source| CommandError::Json { path: f.display().to_string(), source })?;
            let id = f.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            Ok((id, value, f))
        })
        .collect()
}

fn responses_for(run: &mut Run, paths: &[PathBuf]) -> Result<Vec<(String, Value)>, CommandError> {
    if paths.is_empty() {
        return Err(CommandError::Usage("at least one response file or directory is required".into()));
    }
    let loaded = load_responses(paths)?;
    let mut ids = std::collections::HashSet::new();
    let mut out = Vec::new();
    for (id, v, f) in loaded {
        if !ids.insert(id.clone()) {
            return Err(CommandError::Usage(format!("duplicate response id `{id}` ({})", f.display())));
        }
        run.input(&f);
        out.push((id, v));
    }
    Ok(out)
}

#[derive(Debug, Clone, Default)]
pub struct SpecArgs {
    pub spec: PathBuf,
    /// Empty means every operation.
    pub operations: Vec<String>,
}

/// Write `<operationId>.fields.json` per operation.
pub fn extract(ctx: &Context, args: &SpecArgs) -> Result<Outcome, CommandError> {
    let mut run = Run::start(ctx, "extract", json!({"spec": args.spec, "operations": args.operations}))?;
    run.input(&args.spec);
    let spec = load_spec(&args.spec)?;
    let mut total = 0;
    for op in select_operations(&spec, &args.operations)? {
        let fields = extract_fields(&spec, &op)?;
        total += fields.len();
        run.write_json(&format!("{op}.fields.json"), &fields)?;
    }
    run.finish(0, format!("extracted {total} fields"))
}

fn templates(ctx: &Context, run: &mut Run) -> Result<PromptTemplates, CommandError> {
    match &ctx.config.prompt_templates {
        None => Ok(PromptTemplates::builtin().clone()),
        Some(p) => {
            run.input(p);
            let text = fs::read_to_string(p).map_err(io_err(p))?;
            Ok(PromptTemplates::from_yaml_str(&text)?)
        }
    }
}

/// Write `<operationId>.prompts.jsonl`, one prompt bundle per line.
pub fn prompt(ctx: &Context, args: &SpecArgs) -> Result<Outcome, CommandError> {
    let mut run = Run::start(ctx, "prompt", json!({"spec": args.spec, "operations": args.operations}))?;
    run.input(&args.spec);
    let spec = load_spec(&args.spec)?;
    let templates = templates(ctx, &mut run)?;
    let mut total = 0;
    for op in select_operations(&spec, &args.operations)? {
        let bundles = build_operation_prompts_with(&templates, &spec, &op)?;
        total += bundles.len();
        run.write_jsonl(&format!("{op}.prompts.jsonl"), &bundles)?;
    }
    run.finish(0, format!("built {total} prompts"))
}

/// Prompt the configured backend and write per operation
/// `<op>.oracles.json`, `<op>.completions.jsonl` and `<op>.warnings.json`.
/// Failed fields are reported and count as answering "no oracle".
pub fn infer(ctx: &Context, args: &SpecArgs) -> Result<Outcome, CommandError> {
    let mut run = Run::start(ctx, "infer", json!({"spec": args.spec, "operations": args.operations}))?;
    run.input(&args.spec);
    let spec = load_spec(&args.spec)?;
    let templates = templates(ctx, &mut run)?;
    let gateway = Gateway::new(ctx.config.backend.clone())?;
    let provenance = match ctx.config.backend.kind {
        BackendKind::Heuristic => Provenance::Heuristic,
        BackendKind::OpenaiCompatible => Provenance::Llm,
    };
    let mut oracles = 0;
    let mut failures = 0;
    for op in select_operations(&spec, &args.operations)? {
        let fields = extract_fields(&spec, &op)?;
        let bundles = build_operation_prompts_with(&templates, &spec, &op)?;
        let batch = gateway.complete_batch(&bundles);
        let mut records = Vec::new();
        let mut completions = Vec::new();
        let mut problems = Vec::new();
        for (bundle, result) in bundles.iter().zip(&batch.items) {
            let record = match result {
                Ok(c) => {
                    completions.push(json!({"fieldPath": c.field_path, "text": c.text}));
                    normalize(c, bundle).unwrap_or_else(|e| {
                        problems.push(json!({"fieldPath": bundle.field_path, "error": e.to_string()}));
                        FieldOracleRecord::all_absent(bundle)
                    })
                }
                Err(e) => {
                    failures += 1;
                    tracing::warn!(field = %bundle.field_path, "completion failed: {e}");
                    problems.push(json!({"fieldPath": bundle.field_path, "error": e.to_string()}));
                    FieldOracleRecord::all_absent(bundle)
                }
            };
            records.push(record);
        }
        let (set, report) = assemble(&records, &op, &fields, provenance);
        oracles += set.len();
        let repairs: Vec<Value> = records
            .iter()
            .filter(|r| !r.repairs.is_empty() || !r.rejected_keys.is_empty() || !r.notes.is_empty())
            .map(|r| json!({"fieldPath": r.field_path, "repairs": r.repairs, "rejectedKeys": r.rejected_keys, "notes": r.notes}))
            .collect();
        run.write(&format!("{op}.oracles.json"), &set.to_json_string())?;
        run.write_jsonl(&format!("{op}.completions.jsonl"), &completions)?;
        run.write_json(
            &format!("{op}.warnings.json"),
            &json!({
                "operationId": op,
                "failures": problems,
                "normalization": repairs,
                "assembly": report,
                "usage": batch.usage,
            }),
        )?;
    }
    run.finish(0, format!("inferred {oracles} oracles ({failures} failed fields)"))
}

#[derive(Debug, Clone, Default)]
pub struct ReviewArgs {
    pub spec: PathBuf,
    pub oracles: PathBuf,
}

/// Re-validate a hand-edited oracle set. Entries that do not parse or do
/// not fit the spec are dropped and listed in `<op>.review.json`; the rest
/// is rewritten in canonical form with provenance `human-edited`.
pub fn review(ctx: &Context, args: &ReviewArgs) -> Result<Outcome, CommandError> {
    let mut run = Run::start(ctx, "review", json!({"spec": args.spec, "oracles": args.oracles}))?;
    run.input(&args.spec);
    run.input(&args.oracles);
    let spec = load_spec(&args.spec)?;
    let text = fs::read_to_string(&args.oracles).map_err(io_err(&args.oracles))?;
    let raw: Value = serde_json::from_str(&text)
        .map_err(|source| CommandError::Json { path: args.oracles.display().to_string(), source })?;
    let (mut set, diagnostics) = OracleSet::from_json_lenient(&raw, Provenance::HumanEdited)?;
    let fields = extract_fields(&spec, &set.operation_id)?;
    let mismatches = set.strip_mismatches(&fields);
    set.set_provenance(Provenance::HumanEdited);
    let op = set.operation_id.clone();
    run.write(&format!("{op}.oracles.json"), &set.to_json_string())?;
    let removed = diagnostics.len() + mismatches.len();
    run.write_json(
        &format!("{op}.review.json"),
        &json!({
            "operationId": op,
            "diagnostics": diagnostics,
            "mismatches": mismatches,
        }),
    )?;
    run.finish(0, format!("reviewed {} oracles, removed {removed}", set.len()))
}

#[derive(Debug, Clone, Default)]
pub struct EmitArgs {
    pub spec: PathBuf,
    pub oracles: Vec<PathBuf>,
}

/// Write `collection.postman.json` with one request per spec operation.
pub fn emit(ctx: &Context, args: &EmitArgs) -> Result<Outcome, CommandError> {
    let mut run = Run::start(ctx, "emit", json!({"spec": args.spec, "oracles": args.oracles}))?;
    run.input(&args.spec);
    let spec = load_spec(&args.spec)?;
    let sets = args.oracles.iter().map(|p| load_set(&mut run, p)).collect::<Result<Vec<_>, _>>()?;
    let collection = emit_collection(&spec, &sets, &ctx.checker()?)?;
    run.write("collection.postman.json", &collection.to_json_string())?;
    let n: usize = sets.iter().map(OracleSet::len).sum();
    run.finish(0, format!("emitted {n} oracles into {} requests", collection.item.len()))
}

#[derive(Debug, Clone, Default)]
pub struct CheckArgs {
    /// When given, the oracle set is validated against it first.
    pub spec: Option<PathBuf>,
    pub oracles: PathBuf,
    pub responses: Vec<PathBuf>,
}

/// Evaluate recorded responses and write `violations.json`. Exits with
/// [`EXIT_VIOLATIONS`] when any response violates an oracle.
pub fn check(ctx: &Context, args: &CheckArgs) -> Result<Outcome, CommandError> {
    let mut run = Run::start(ctx, "check", json!({"spec": args.spec, "oracles": args.oracles, "responses": args.responses}))?;
    let set = load_set(&mut run, &args.oracles)?;
    if let Some(spec_path) = &args.spec {
        run.input(spec_path);
        let spec = load_spec(spec_path)?;
        let mismatches = validate_set(&set, &extract_fields(&spec, &set.operation_id)?);
        if !mismatches.is_empty() {
            return Err(EmitError::ValidationFailed { operation_id: set.operation_id.clone(), mismatches }.into());
        }
    }
    let responses = responses_for(&mut run, &args.responses)?;
    let checker = ctx.checker()?;
    let mut total = 0;
    let report: Vec<Value> = responses
        .iter()
        .map(|(id, doc)| {
            let v = evaluate_with(&checker, &set, doc);
            total += v.len();
            json!({"responseId": id, "violations": v})
        })
        .collect();
    run.write_json("violations.json", &json!({"operationId": set.operation_id, "responses": report}))?;
    let code = if total == 0 { 0 } else { EXIT_VIOLATIONS };
    run.finish(code, format!("{total} violations in {} responses", responses.len()))
}

#[derive(Debug, Clone, Default)]
pub struct MutateArgs {
    pub spec: PathBuf,
    pub oracles: PathBuf,
    pub responses: Vec<PathBuf>,
    /// Overrides the configured repetitions.
    pub repetitions: Option<usize>,
    /// Overrides the configured seed.
    pub seed: Option<u64>,
}

/// Run a mutation campaign; writes `<op>.fdr.json` and `<op>.mutants.jsonl`.
/// A response that already fails the oracles aborts the campaign and its
/// violations are written to `violations.json`.
pub fn mutate(ctx: &Context, args: &MutateArgs) -> Result<Outcome, CommandError> {
    let reps = args.repetitions.unwrap_or(ctx.config.repetitions);
    let seed = args.seed.unwrap_or(ctx.config.seed);
    let mut run = Run::start(
        ctx,
        "mutate",
        json!({"spec": args.spec, "oracles": args.oracles, "responses": args.responses, "repetitions": reps, "seed": seed}),
    )?;
    run.input(&args.spec);
    let spec = load_spec(&args.spec)?;
    let set = load_set(&mut run, &args.oracles)?;
    let fields = extract_fields(&spec, &set.operation_id)?;
    let responses = responses_for(&mut run, &args.responses)?;
    let outcome = match run_campaign(&ctx.checker()?, &set, &responses, &fields, reps, seed) {
        Ok(o) => o,
        Err(CampaignError::NotGreen { response_id, violations }) => {
            run.write_json("violations.json", &json!({"operationId": set.operation_id, "responses": [{"responseId": response_id, "violations": violations}]}))?;
            return Err(CampaignError::NotGreen { response_id, violations }.into());
        }
        Err(e) => return Err(e.into()),
    };
    let op = &set.operation_id;
    run.write_json(&format!("{op}.fdr.json"), &outcome.report)?;
    run.write_jsonl(&format!("{op}.mutants.jsonl"), &outcome.mutants)?;
    let r = &outcome.report;
    run.finish(0, format!("FDR {:.1}% ({} of {} mutants detected)", r.fdr_percent, r.detected, r.total_mutants))
}

#[derive(Debug, Clone, Default)]
pub struct FdrArgs {
    pub oracles: PathBuf,
    pub responses: Vec<PathBuf>,
    pub mutants: PathBuf,
}

/// Recount detections of stored mutants against an oracle set; writes
/// `<op>.fdr.recount.json`.
pub fn fdr(ctx: &Context, args: &FdrArgs) -> Result<Outcome, CommandError> {
    let mut run = Run::start(ctx, "fdr", json!({"oracles": args.oracles, "responses": args.responses, "mutants": args.mutants}))?;
    let set = load_set(&mut run, &args.oracles)?;
    let responses = responses_for(&mut run, &args.responses)?;
    run.input(&args.mutants);
    let text = fs::read_to_string(&args.mutants).map_err(io_err(&args.mutants))?;
    let mut mutants: Vec<MutantRecord> = Vec::new();
    let mut recorded = 0;
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let parse_err = |source| CommandError::Json { path: args.mutants.display().to_string(), source };
        let v: Value = serde_json::from_str(line).map_err(parse_err)?;
        if v.get("detected").and_then(Value::as_bool) == Some(true) {
            recorded += 1;
        }
        let m: MutantOutcome = match serde_json::from_value::<MutantOutcome>(v.clone()) {
            Ok(m) => m,
            Err(_) => MutantOutcome { record: serde_json::from_value(v).map_err(parse_err)?, detected: false },
        };
        mutants.push(m.record);
    }
    let detected = recount(&ctx.checker()?, &set, &responses, &mutants)?;
    let total = mutants.len();
    let percent = if total == 0 { 0.0 } else { 100.0 * detected as f64 / total as f64 };
    run.write_json(
        &format!("{}.fdr.recount.json", set.operation_id),
        &json!({
            "operationId": set.operation_id,
            "totalMutants": total,
            "detected": detected,
            "fdrPercent": percent,
            "recordedDetected": recorded,
        }),
    )?;
    run.finish(0, format!("FDR {percent:.1}% ({detected} of {total} mutants detected)"))
}

#[derive(Debug, Clone, Default)]
pub struct ScoreArgs {
    pub predicted: Vec<PathBuf>,
    pub truth: Vec<PathBuf>,
    /// A second system's sets, for overlap analysis.
    pub compare: Vec<PathBuf>,
    /// Overrides the configured policy.
    pub policy: Option<MismatchPolicy>,
}

/// Score predicted sets against ground truth, pairing files by operation;
/// writes `score.json` and `score.txt`, plus `overlap.json` with `compare`.
/// Operations without a prediction are scored against an empty set.
pub fn score(ctx: &Context, args: &ScoreArgs) -> Result<Outcome, CommandError> {
    let policy = args.policy.unwrap_or(ctx.config.mismatch_policy);
    let mut run = Run::start(
        ctx,
        "score",
        json!({"predicted": args.predicted, "truth": args.truth, "compare": args.compare, "policy": policy}),
    )?;
    if args.truth.is_empty() {
        return Err(CommandError::Usage("at least one ground-truth file is required".into()));
    }
    let mut truths = Vec::new();
    for p in &args.truth {
        run.input(p);
        truths.push(GroundTruth::load(p)?);
    }
    let by_op = |run: &mut Run, paths: &[PathBuf]| -> Result<BTreeMap<String, OracleSet>, CommandError> {
        let mut m = BTreeMap::new();
        for p in paths {
            let s = load_set(run, p)?;
            if !truths.iter().any(|t| t.operation_id == s.operation_id) {
                return Err(MetricsError::OperationMismatch { predicted: s.operation_id, truth: "(none)".into() }.into());
            }
            m.insert(s.operation_id.clone(), s);
        }
        Ok(m)
    };
    let predicted = by_op(&mut run, &args.predicted)?;
    let compare = by_op(&mut run, &args.compare)?;
    let empty: BTreeMap<&str, OracleSet> = truths.iter().map(|t| (t.operation_id.as_str(), OracleSet::new(&t.operation_id))).collect();
    let pick = |m: &'_ BTreeMap<String, OracleSet>, op: &str| -> OracleSet { m.get(op).unwrap_or(&empty[op]).clone() };
    let a: Vec<OracleSet> = truths.iter().map(|t| pick(&predicted, &t.operation_id)).collect();
    let pairs: Vec<(&OracleSet, &GroundTruth)> = a.iter().zip(&truths).collect();
    let report = score_many(&pairs, policy)?;
    for w in &report.warnings {
        tracing::warn!("{w}");
    }
    run.write_json("score.json", &report)?;
    let mut tables = vec![("predicted", &report)];
    let compare_report;
    if !args.compare.is_empty() {
        let b: Vec<OracleSet> = truths.iter().map(|t| pick(&compare, &t.operation_id)).collect();
        let triples: Vec<_> = a.iter().zip(&b).zip(&truths).map(|((a, b), t)| (a, b, t)).collect();
        run.write_json("overlap.json", &overlap_many(&triples)?)?;
        let pairs: Vec<(&OracleSet, &GroundTruth)> = b.iter().zip(&truths).collect();
        compare_report = score_many(&pairs, policy)?;
        run.write_json("score.compare.json", &compare_report)?;
        tables.push(("compare", &compare_report));
    }
    run.write("score.txt", &render_table(&tables))?;
    let f1 = report.overall.f1.map_or("-".to_string(), |f| format!("{:.1}%", f * 100.0));
    run.finish(0, format!("overall F1 {f1} over {} operations", truths.len()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults_and_partial_yaml() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.yaml");
        fs::write(&p, "repetitions: 5\nbackend:\n  kind: heuristic\ncheck:\n  epsilon: 0.5\n").unwrap();
        let c = Config::load(&p).unwrap();
        assert_eq!(c.repetitions, 5);
        assert_eq!(c.check.epsilon, 0.5);
        assert_eq!(c.mismatch_policy, MismatchPolicy::FpAndFn);
        fs::write(&p, "repetitions: many\n").unwrap();
        assert_eq!(Config::load(&p).unwrap_err().exit_code(), 1);
    }

    #[test]
    fn digest_of_known_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x");
        fs::write(&p, "abc").unwrap();
        assert_eq!(sha256_file(&p).unwrap(), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
