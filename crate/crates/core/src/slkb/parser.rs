use crate::instruction;
use crate::llm::LlmBackend;
use crate::template;

use super::SlkbError;

/// Prompt resource for language-model landmark extraction.
pub const LANDMARK_PARSER_PROMPT: &str = include_str!("../../prompts/v1/landmark_parser.txt");

/// Extracts the ordered landmark phrases of an instruction. An instruction
/// without landmarks yields an empty list.
pub trait LandmarkParser {
    fn parse(&self, instruction: &str) -> Result<Vec<String>, SlkbError>;
}

/// Deterministic grammar parser; see [`crate::instruction`].
#[derive(Debug, Clone, Copy, Default)]
pub struct RuleLandmarkParser;

impl LandmarkParser for RuleLandmarkParser {
    fn parse(&self, instruction: &str) -> Result<Vec<String>, SlkbError> {
        if instruction.trim().is_empty() {
            return Err(SlkbError::EmptyText);
        }
        Ok(instruction::parse_landmarks(instruction))
    }
}

/// Sends the landmark-parser prompt to a backend and reads back a JSON list.
pub struct LlmLandmarkParser<B> {
    backend: B,
}

impl<B: LlmBackend> LlmLandmarkParser<B> {
    pub fn new(backend: B) -> Self {
        Self { backend }
    }

    pub fn prompt(instruction: &str) -> String {
        template::render(LANDMARK_PARSER_PROMPT, &[("instruction", instruction)])
            .expect("landmark parser template is well-formed")
    }

    pub fn backend(&self) -> &B {
        &self.backend
    }
}

impl<B: LlmBackend> LandmarkParser for LlmLandmarkParser<B> {
    fn parse(&self, instruction: &str) -> Result<Vec<String>, SlkbError> {
        if instruction.trim().is_empty() {
            return Err(SlkbError::EmptyText);
        }
        let reply = self.backend.complete(&Self::prompt(instruction), &[])?;
        parse_list_reply(&reply)
    }
}

/// Reads the first bracketed JSON string list out of a reply.
fn parse_list_reply(reply: &str) -> Result<Vec<String>, SlkbError> {
    let start = reply
        .find('[')
        .ok_or_else(|| SlkbError::MalformedReply("no JSON list found".into()))?;
    let end = reply
        .rfind(']')
        .filter(|&e| e > start)
        .ok_or_else(|| SlkbError::MalformedReply("unterminated JSON list".into()))?;
    let items: Vec<String> = serde_json::from_str(&reply[start..=end])
        .map_err(|e| SlkbError::MalformedReply(e.to_string()))?;
    Ok(items
        .into_iter()
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::ScriptedBackend;

    #[test]
    fn rule_parser() {
        let p = RuleLandmarkParser;
        assert_eq!(
            p.parse("Turn left on Maple Street, then right at the bank.")
                .unwrap(),
            vec!["Maple Street", "bank"]
        );
        assert!(p.parse("elevate").unwrap().is_empty());
        assert!(p.parse(" ").is_err());
    }

    #[test]
    fn llm_parser_reads_list() {
        let backend = ScriptedBackend::new([
            "```json\n[\"Highway 1\", \"traffic light\"]\n```",
            "no list here",
        ]);
        let parser = LlmLandmarkParser::new(backend);
        let instruction = "Follow Highway 1 until the second traffic light.";
        assert_eq!(
            parser.parse(instruction).unwrap(),
            vec!["Highway 1", "traffic light"]
        );
        let prompts = parser.backend().prompts();
        assert!(prompts[0].contains("Navigation Landmark Parser"));
        assert!(prompts[0].contains(&format!("\"{instruction}\"")));
        assert!(matches!(
            parser.parse(instruction),
            Err(SlkbError::MalformedReply(_))
        ));
    }
}
