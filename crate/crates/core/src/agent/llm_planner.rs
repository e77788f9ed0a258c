use log::warn;

use super::{
    assemble_prompt, attachments, parse_decision, AgentDecision, AgentError, NavContext, Planner,
    PromptMode, ReplyError, RulePlanner,
};
use crate::llm::LlmBackend;

/// Planner backed by a text-completion model.
///
/// A reply that fails to parse, or names a path id outside the candidate
/// set, is retried once; after that the rule planner decides and the
/// decision is flagged with `fallback`. Transport failures are returned as
/// errors.
pub struct LlmPlanner<B> {
    backend: B,
    fallback: RulePlanner,
}

impl<B: LlmBackend> LlmPlanner<B> {
    pub const ATTEMPTS: usize = 2;

    pub fn new(backend: B) -> Self {
        Self {
            backend,
            fallback: RulePlanner,
        }
    }

    pub fn backend(&self) -> &B {
        &self.backend
    }
}

fn validate(
    decision: &AgentDecision,
    ctx: &NavContext,
    mode: PromptMode,
) -> Result<(), ReplyError> {
    if mode == PromptMode::WithElg {
        let n = ctx.path_descriptions.as_ref().map_or(0, |p| p.len()) as i64;
        if decision.selected_path_id >= n {
            return Err(ReplyError::InvalidPathId(
                decision.selected_path_id.to_string(),
            ));
        }
    }
    Ok(())
}

impl<B: LlmBackend> Planner for LlmPlanner<B> {
    fn name(&self) -> &str {
        "llm"
    }

    fn plan_step(&self, ctx: &NavContext) -> Result<AgentDecision, AgentError> {
        let mode = ctx.mode()?;
        let prompt = assemble_prompt(ctx, mode)?;
        let images = attachments(ctx);
        for attempt in 1..=Self::ATTEMPTS {
            let reply = self.backend.complete(&prompt, &images)?;
            match parse_decision(&reply).and_then(|d| validate(&d, ctx, mode).map(|_| d)) {
                Ok(decision) => return Ok(decision),
                Err(e) => warn!("unusable planner reply (attempt {attempt}): {e}"),
            }
        }
        let mut decision = self.fallback.plan_step(ctx)?;
        decision.fallback = true;
        Ok(decision)
    }
}
