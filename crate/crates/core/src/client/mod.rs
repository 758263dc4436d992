//! Campaign runner: renders the zero-shot prompt for each transcript and
//! collects repeated completions from a JSON chat-completion endpoint.

mod campaign;
mod http;
mod prompt;

pub use campaign::{
    run_campaign, CampaignConfig, CampaignError, CampaignOptions, CampaignSummary, CellFailure,
    RawStoreEntry, RetryPolicy, CELL_FAILURES_FILE, PREDICTIONS_FILE, RAW_STORE_FILE,
};
pub use http::{chat_complete, AttemptLog, CellFailed, ChatClient, Completion};
pub use prompt::{render_prompt, PromptError, DEFAULT_PROMPT_TEMPLATE, TRANSCRIPT_PLACEHOLDER};
