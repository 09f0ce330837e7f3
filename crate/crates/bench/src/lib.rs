//! Criterion harness crate. The measured code lives in rastervec-core;
//! see benches/pipeline_stages.rs.
