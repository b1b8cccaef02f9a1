//! Static test-oracle generation for REST APIs.
//!
//! The pipeline runs from an OpenAPI document to executable assertions:
//!
//! 1. [`spec`] loads the document and flattens each operation's success
//!    response into [`spec::ResponseField`]s.
//! 2. [`prompt`] builds one structured prompt per field.
//! 3. [`gateway`] sends prompts to a chat-completions endpoint or to the
//!    offline heuristic backend.
//! 4. [`normalize`] repairs raw completions and assembles an
//!    [`oracle::OracleSet`] per operation.
//! 5. [`emit`] turns oracle sets into a Postman collection with Chai
//!    assertions; [`oracle::evaluate`] is the native equivalent.
//!
//! [`mutation`] and [`metrics`] score oracle sets by seeded fault injection
//! and against annotated ground truth. [`commands`] wires the stages together
//! behind file-based handoffs.

pub mod commands;
pub mod emit;
pub mod gateway;
pub mod metrics;
pub mod mutation;
pub mod normalize;
pub mod oracle;
pub mod path;
pub mod prompt;
pub mod spec;
