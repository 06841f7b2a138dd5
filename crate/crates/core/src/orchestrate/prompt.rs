//! Prompt construction: a fixed instruction/response layout with evidence
//! and claim slots, rendered byte-deterministically.

use super::OrchestrateError;

/// The prompt layout. The body carries exactly one `{evidence}` and one
/// `{claim}` slot; rendering splices the inputs into the body *without*
/// re-scanning them, so slot markers occurring inside a claim or an
/// evidence document are left verbatim.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    instruction_header: String,
    response_header: String,
    body: String,
}

const EVIDENCE_SLOT: &str = "{evidence}";
const CLAIM_SLOT: &str = "{claim}";

impl Default for PromptTemplate {
    fn default() -> Self {
        Self {
            instruction_header: "### Instruction".to_string(),
            response_header: "### Response".to_string(),
            body: "{evidence}; Based on the above evidence, determine if the claim is \
                   valid and explain why: {claim}"
                .to_string(),
        }
    }
}

fn count_occurrences(haystack: &str, needle: &str) -> usize {
    haystack.match_indices(needle).count()
}

impl PromptTemplate {
    /// A custom layout. The body must contain each slot exactly once.
    pub fn new(
        instruction_header: impl Into<String>,
        response_header: impl Into<String>,
        body: impl Into<String>,
    ) -> Result<Self, OrchestrateError> {
        let template = Self {
            instruction_header: instruction_header.into(),
            response_header: response_header.into(),
            body: body.into(),
        };
        for slot in [EVIDENCE_SLOT, CLAIM_SLOT] {
            let n = count_occurrences(&template.body, slot);
            if n != 1 {
                return Err(OrchestrateError::BadTemplate(format!(
                    "body must contain {slot} exactly once, found {n}"
                )));
            }
        }
        Ok(template)
    }

    /// Renders the full prompt: instruction header, the body with evidence
    /// documents newline-joined (in retrieval-rank order) and the claim
    /// spliced in, then the response header left open for generation.
    pub fn render(&self, claim: &str, evidence: &[String]) -> Result<String, OrchestrateError> {
        if evidence.is_empty() {
            return Err(OrchestrateError::EmptyEvidence);
        }
        let joined = evidence.join("\n");
        // Splice manually (single pass over the trusted body only) so that
        // slot markers inside the inputs are never expanded.
        let mut filled = String::with_capacity(self.body.len() + joined.len() + claim.len());
        let mut rest = self.body.as_str();
        while !rest.is_empty() {
            match (rest.find(EVIDENCE_SLOT), rest.find(CLAIM_SLOT)) {
                (Some(e), Some(c)) if e < c => {
                    filled.push_str(&rest[..e]);
                    filled.push_str(&joined);
                    rest = &rest[e + EVIDENCE_SLOT.len()..];
                }
                (_, Some(c)) => {
                    filled.push_str(&rest[..c]);
                    filled.push_str(claim);
                    rest = &rest[c + CLAIM_SLOT.len()..];
                }
                (Some(e), None) => {
                    filled.push_str(&rest[..e]);
                    filled.push_str(&joined);
                    rest = &rest[e + EVIDENCE_SLOT.len()..];
                }
                (None, None) => {
                    filled.push_str(rest);
                    rest = "";
                }
            }
        }
        Ok(format!("{}\n{}\n{}\n", self.instruction_header, filled, self.response_header))
    }
}
