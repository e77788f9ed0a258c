use super::{AgentError, NavContext, PromptMode, View, ViewContent};
use crate::llm::Attachment;
use crate::template;
use crate::verbalizer::describe_step;

pub const WITH_ELG_PROMPT: &str = include_str!("../../prompts/v1/with_elg.txt");
pub const WITH_NEXT_LANDMARK_PROMPT: &str = include_str!("../../prompts/v1/with_next_landmark.txt");
pub const LANDMARK_FREE_PROMPT: &str = include_str!("../../prompts/v1/landmark_free.txt");

fn or_none(s: &str) -> &str {
    if s.trim().is_empty() {
        "None"
    } else {
        s
    }
}

fn render_views(ctx: &NavContext) -> String {
    View::PROMPT_ORDER
        .iter()
        .map(|&v| match ctx.observation.get(v) {
            ViewContent::Text(t) => format!("- {}: {}", v.label(), or_none(t)),
            ViewContent::Image(_) => format!("- {}: <image attached>", v.label()),
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Image views as backend attachments, in prompt order.
pub fn attachments(ctx: &NavContext) -> Vec<Attachment> {
    View::PROMPT_ORDER
        .iter()
        .filter_map(|&v| match ctx.observation.get(v) {
            ViewContent::Image(uri) => Some(Attachment {
                label: v.label().to_string(),
                uri: uri.clone(),
            }),
            ViewContent::Text(_) => None,
        })
        .collect()
}

/// Renders the template for `mode`. Fails when the context lacks what the
/// mode needs or carries what it excludes.
pub fn assemble_prompt(ctx: &NavContext, mode: PromptMode) -> Result<String, AgentError> {
    ctx.check_mode(mode)?;
    let visited = if ctx.visited_landmarks.is_empty() {
        "None".to_string()
    } else {
        ctx.visited_landmarks.join(", ")
    };
    let views = render_views(ctx);
    let mut values = vec![
        ("instruction", ctx.instruction.as_str()),
        ("history", or_none(&ctx.history)),
        ("visited", visited.as_str()),
        ("views", views.as_str()),
    ];
    let paths;
    let next;
    let source = match mode {
        PromptMode::WithElg => {
            paths = ctx
                .path_descriptions
                .as_ref()
                .expect("checked")
                .iter()
                .map(|p| format!("- Path {}: {}", p.path_id, p.text))
                .collect::<Vec<_>>()
                .join("\n");
            values.push(("candidate_paths", paths.as_str()));
            WITH_ELG_PROMPT
        }
        PromptMode::WithNextLandmark => {
            let n = ctx.next_landmark.as_ref().expect("checked");
            next = format!(
                "{}. Relative location: {}",
                n.name,
                describe_step(&n.motion, &crate::verbalizer::definite(&n.name), true)
            );
            values.push(("next_landmark", next.as_str()));
            WITH_NEXT_LANDMARK_PROMPT
        }
        PromptMode::LandmarkFree => LANDMARK_FREE_PROMPT,
    };
    Ok(template::render(source, &values)?)
}
