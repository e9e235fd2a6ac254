use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use sha2::{Digest, Sha256};

use super::{Capabilities, ModelProvider, ModelRequest, ProviderError, ProviderErrorKind};
use crate::prompt::{self, CompiledPrompt, TemplateId};

/// Fixed answer to every vision prompt unless overridden.
pub const MOCK_VISION_TEXT: &str =
    "A detailed description produced by the mock vision model.";

/// Where and how the mock should fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Fail the prompt for chapter `k`.
    Chapter(u32),
    /// Fail the summary of chapter `k` (recognised by the mock's own
    /// `CH<k>:` prefix in the summarized text).
    Summary(u32),
    /// Fail every vision request.
    Vision,
}

#[derive(Debug)]
struct FaultRule {
    fault: Fault,
    kind: ProviderErrorKind,
    /// How many more times to fire; `None` = forever.
    remaining: Option<usize>,
}

type CallHook = Arc<dyn Fn(&CompiledPrompt) + Send + Sync>;

/// Deterministic stand-in for a real model.
///
/// * chapter prompts answer `CH<k>:` followed by the first 40 hex digits of
///   the SHA-256 of the prompt text
/// * summary prompts answer `SUM(` + the first 40 characters of the chapter
///   text + `)`
/// * vision prompts answer [`MOCK_VISION_TEXT`]
pub struct MockProvider {
    vision: bool,
    vision_text: String,
    delay: Option<Duration>,
    faults: Mutex<Vec<FaultRule>>,
    hook: Option<CallHook>,
    calls: AtomicUsize,
    text_calls: AtomicUsize,
    vision_calls: AtomicUsize,
    log: Mutex<Vec<CompiledPrompt>>,
}

impl Default for MockProvider {
    fn default() -> Self {
        Self::new()
    }
}

impl MockProvider {
    pub fn new() -> Self {
        Self {
            vision: true,
            vision_text: MOCK_VISION_TEXT.to_string(),
            delay: None,
            faults: Mutex::new(Vec::new()),
            hook: None,
            calls: AtomicUsize::new(0),
            text_calls: AtomicUsize::new(0),
            vision_calls: AtomicUsize::new(0),
            log: Mutex::new(Vec::new()),
        }
    }

    pub fn without_vision(mut self) -> Self {
        self.vision = false;
        self
    }

    pub fn with_vision_text(mut self, text: impl Into<String>) -> Self {
        self.vision_text = text.into();
        self
    }

    /// Sleeps before answering each call.
    pub fn with_delay(mut self, delay: Duration) -> Self {
        self.delay = Some(delay);
        self
    }

    /// Runs `hook` at the start of every call, before any fault fires.
    pub fn with_hook(mut self, hook: impl Fn(&CompiledPrompt) + Send + Sync + 'static) -> Self {
        self.hook = Some(Arc::new(hook));
        self
    }

    /// Fails permanently at `fault`, every time.
    pub fn failing(self, fault: Fault) -> Self {
        self.push_fault(fault, ProviderErrorKind::Permanent, None)
    }

    /// Fails transiently at `fault` for the next `times` matching calls.
    pub fn flaky(self, fault: Fault, times: usize) -> Self {
        self.push_fault(fault, ProviderErrorKind::Transient, Some(times))
    }

    fn push_fault(self, fault: Fault, kind: ProviderErrorKind, remaining: Option<usize>) -> Self {
        self.faults
            .lock()
            .expect("fault list poisoned")
            .push(FaultRule {
                fault,
                kind,
                remaining,
            });
        self
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn text_calls(&self) -> usize {
        self.text_calls.load(Ordering::SeqCst)
    }

    pub fn vision_calls(&self) -> usize {
        self.vision_calls.load(Ordering::SeqCst)
    }

    /// Every prompt received, in arrival order.
    pub fn received(&self) -> Vec<CompiledPrompt> {
        self.log.lock().expect("call log poisoned").clone()
    }

    fn fault_for(&self, prompt: &CompiledPrompt) -> Option<Fault> {
        match prompt.template_id {
            TemplateId::Chapter => prompt::chapter_number_of(&prompt.text).map(Fault::Chapter),
            TemplateId::Summary => prompt::summarized_text_of(&prompt.text)
                .and_then(mock_chapter_number)
                .map(Fault::Summary),
            TemplateId::Scenery | TemplateId::CharacterAppearance => Some(Fault::Vision),
        }
    }

    fn check_faults(&self, prompt: &CompiledPrompt) -> Result<(), ProviderError> {
        let Some(point) = self.fault_for(prompt) else {
            return Ok(());
        };
        let mut faults = self.faults.lock().expect("fault list poisoned");
        let Some(rule) = faults
            .iter_mut()
            .find(|r| r.fault == point && r.remaining != Some(0))
        else {
            return Ok(());
        };
        if let Some(n) = rule.remaining.as_mut() {
            *n -= 1;
        }
        Err(ProviderError {
            kind: rule.kind,
            message: format!("injected fault at {point:?}"),
        })
    }
}

fn mock_chapter_number(text: &str) -> Option<u32> {
    let rest = text.strip_prefix("CH")?;
    let digits: String = rest.chars().take_while(char::is_ascii_digit).collect();
    digits.parse().ok()
}

fn first_chars(text: &str, n: usize) -> &str {
    match text.char_indices().nth(n) {
        Some((end, _)) => &text[..end],
        None => text,
    }
}

/// The chapter response the mock gives for `prompt_text`.
pub(crate) fn mock_chapter_text(chapter: u32, prompt_text: &str) -> String {
    let digest = hex::encode(Sha256::digest(prompt_text.as_bytes()));
    format!("CH{chapter}:{}", &digest[..40])
}

/// The summary response the mock gives for `chapter_text`.
pub(crate) fn mock_summary_text(chapter_text: &str) -> String {
    format!("SUM({})", first_chars(chapter_text, 40))
}

impl ModelProvider for MockProvider {
    fn name(&self) -> &str {
        "mock"
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            text: true,
            vision: self.vision,
        }
    }

    fn complete(&self, request: &ModelRequest<'_>) -> Result<String, ProviderError> {
        let prompt = request.prompt;
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.log
            .lock()
            .expect("call log poisoned")
            .push(prompt.clone());
        if let Some(hook) = &self.hook {
            hook(prompt);
        }
        if let Some(delay) = self.delay {
            std::thread::sleep(delay);
        }
        match prompt.template_id {
            TemplateId::Scenery | TemplateId::CharacterAppearance => {
                self.vision_calls.fetch_add(1, Ordering::SeqCst);
                if !self.vision {
                    return Err(ProviderError::unsupported("mock configured without vision"));
                }
                if request.image.is_none() {
                    return Ok(String::new());
                }
                self.check_faults(prompt)?;
                Ok(self.vision_text.clone())
            }
            TemplateId::Chapter => {
                self.text_calls.fetch_add(1, Ordering::SeqCst);
                self.check_faults(prompt)?;
                let k = prompt::chapter_number_of(&prompt.text).unwrap_or(0);
                Ok(mock_chapter_text(k, &prompt.text))
            }
            TemplateId::Summary => {
                self.text_calls.fetch_add(1, Ordering::SeqCst);
                self.check_faults(prompt)?;
                let input = prompt::summarized_text_of(&prompt.text).unwrap_or(&prompt.text);
                Ok(mock_summary_text(input))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prompt::compile_summary_prompt;

    fn ask(mock: &MockProvider, prompt: &CompiledPrompt) -> Result<String, ProviderError> {
        mock.complete(&ModelRequest {
            prompt,
            image: None,
        })
    }

    #[test]
    fn summary_answer_shape() {
        let mock = MockProvider::new();
        let chapter = format!("CH1:{}", "a".repeat(60));
        let p = compile_summary_prompt(&chapter).unwrap();
        let answer = ask(&mock, &p).unwrap();
        assert_eq!(answer, format!("SUM(CH1:{})", "a".repeat(36)));
        assert_eq!(mock.text_calls(), 1);
    }

    #[test]
    fn chapter_answer_is_prompt_hash() {
        // sha256("") = e3b0c442...; the mock keeps 40 hex digits.
        assert_eq!(
            mock_chapter_text(2, ""),
            "CH2:e3b0c44298fc1c149afbf4c8996fb92427ae41e4"
        );
    }

    #[test]
    fn short_text_summary_is_whole_text() {
        assert_eq!(mock_summary_text("Ali won."), "SUM(Ali won.)");
        assert_eq!(mock_summary_text("é".repeat(50).as_str()), format!("SUM({})", "é".repeat(40)));
    }

    #[test]
    fn flaky_fault_fires_limited_times() {
        let mock = MockProvider::new().flaky(Fault::Summary(1), 1);
        let p = compile_summary_prompt("CH1:xyz").unwrap();
        let err = ask(&mock, &p).unwrap_err();
        assert!(err.is_transient());
        assert_eq!(ask(&mock, &p).unwrap(), "SUM(CH1:xyz)");
        // A different chapter is unaffected.
        let p2 = compile_summary_prompt("CH2:xyz").unwrap();
        assert!(ask(&mock, &p2).is_ok());
    }

    #[test]
    fn permanent_fault_always_fires() {
        let mock = MockProvider::new().failing(Fault::Summary(3));
        let p = compile_summary_prompt("CH3:xyz").unwrap();
        for _ in 0..3 {
            assert_eq!(ask(&mock, &p).unwrap_err().kind, ProviderErrorKind::Permanent);
        }
    }
}
