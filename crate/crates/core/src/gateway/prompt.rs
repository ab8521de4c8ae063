//! The stance prompt and response normalization.

use serde::{Deserialize, Serialize};

use super::GatewayError;
use crate::stance::PredictedStance;

const TEMPLATE_HEAD: &str = "Stance classification is the task of determining the expressed or implied opinion, or stance, of a statement toward a certain, specified target.\nAnalyze the following social media statement and determine its stance towards the provided [target]. Respond with a single word: FAVOR or AGAINST. Only return the stance as a single word, and no other text.\n[target]: ";
const TEMPLATE_STATEMENT: &str = "\nStatement: ";
const TEMPLATE_TAIL: &str = "\n";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptInstance {
    pub target: String,
    pub statement: String,
    pub rendered: String,
}

/// Renders the fixed zero-shot stance prompt for one statement.
pub fn build_prompt(target: &str, statement: &str) -> Result<PromptInstance, GatewayError> {
    if target.trim().is_empty() {
        return Err(GatewayError::Input("prompt target is empty".into()));
    }
    if statement.trim().is_empty() {
        return Err(GatewayError::Input("prompt statement is empty".into()));
    }
    let mut rendered = String::with_capacity(
        TEMPLATE_HEAD.len() + target.len() + TEMPLATE_STATEMENT.len() + statement.len() + 1,
    );
    rendered.push_str(TEMPLATE_HEAD);
    rendered.push_str(target);
    rendered.push_str(TEMPLATE_STATEMENT);
    rendered.push_str(statement);
    rendered.push_str(TEMPLATE_TAIL);
    Ok(PromptInstance {
        target: target.to_string(),
        statement: statement.to_string(),
        rendered,
    })
}

fn is_quote(c: char) -> bool {
    matches!(c, '"' | '\'' | '`' | '“' | '”' | '‘' | '’')
}

fn is_terminal_punct(c: char) -> bool {
    matches!(c, '.' | '!' | '?' | ',' | ';' | ':')
}

/// Strict parse: after trimming, lowercasing and stripping terminal
/// punctuation and surrounding quotes, only `favor` and `against` count.
/// Everything else, including sentences that mention a stance, is Neutral.
pub fn parse_stance(raw: &str) -> PredictedStance {
    let mut s = raw.trim().to_lowercase();
    loop {
        let stripped = s
            .trim()
            .trim_end_matches(is_terminal_punct)
            .trim_matches(is_quote)
            .trim()
            .to_string();
        if stripped == s {
            break;
        }
        s = stripped;
    }
    match s.as_str() {
        "favor" => PredictedStance::Favor,
        "against" => PredictedStance::Against,
        _ => PredictedStance::Neutral,
    }
}
