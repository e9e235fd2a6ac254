//! The four model prompts and their slot filling.
//!
//! Template bodies are kept exactly as authored, including their odd
//! delimiters (`<...>"""`) and grammar. Slots are written `[slot name]` and
//! are filled in a single left-to-right pass, so text supplied by authors or
//! the model is never scanned for slot markers again.

use serde::{Deserialize, Serialize};

use crate::events::{self, ExtractError};
use crate::model::{BlobRef, StoryProject, StoryStructure, Storyboard};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateId {
    Scenery,
    CharacterAppearance,
    Chapter,
    Summary,
}

pub const SCENERY_BODY: &str = "This image represents a place where events happened. Describe the place in detail. If the image has characters in it, do not describe them and ignore them. Your main focus is to describe the place and its surroundings in detail.";

pub const CHARACTER_BODY: &str = "Describe the character's appearance in detail for the attached image. The character name is [name], refrain from using pronouns, please use the character name instead. Make sure you start describing the character immediately. Do not use words like 'Certainly', or 'Okay'. If you do not receive an image, respond with nothing.";

pub const CHAPTER_BODY: &str = "Write chapter [chapter number] with dialogues using the following characters' details:
[characters names and details]
and the relationships between them are [list of relations].
now map it to the information you have in the following events:
[list of events]
[previous chapters summary]
<[description for the place where the events happened]>\"\"\"
Output Length: \"\"\"<3000 words>\"\"\"
Structure of Writing: \"\"\"<You are writing a chapter, follow the rules to write an amazing chapter\"\"\"
Take your time with the writing, perfecting this chapter.";

/// Added in front of the chapter body so the genre and act structure reach
/// the model.
pub const CHAPTER_PREAMBLE: &str =
    "You are writing a [genre] novel following a [structure] structure.\n";

pub const SUMMARY_BODY: &str = "Summarize the following the chapter shortly and concisely. Make sure you include all the important events in your summary as the next chapters will depend on it:
[chapter to summarize]";

/// Filler for the relations slot when a board has no relationships.
pub const NO_RELATIONS: &str = "none";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PromptTemplate {
    pub id: TemplateId,
    pub body: &'static str,
    pub slots: &'static [&'static str],
}

pub const SCENERY: PromptTemplate = PromptTemplate {
    id: TemplateId::Scenery,
    body: SCENERY_BODY,
    slots: &[],
};

pub const CHARACTER_APPEARANCE: PromptTemplate = PromptTemplate {
    id: TemplateId::CharacterAppearance,
    body: CHARACTER_BODY,
    slots: &["name"],
};

pub const CHAPTER_SLOTS: &[&str] = &[
    "genre",
    "structure",
    "chapter number",
    "characters names and details",
    "list of relations",
    "list of events",
    "previous chapters summary",
    "description for the place where the events happened",
];

pub const SUMMARY: PromptTemplate = PromptTemplate {
    id: TemplateId::Summary,
    body: SUMMARY_BODY,
    slots: &["chapter to summarize"],
};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Segment<'t> {
    Text(&'t str),
    Slot(&'t str),
}

fn segments<'t>(body: &'t str, slots: &[&str]) -> Vec<Segment<'t>> {
    let mut out = Vec::new();
    let rest = body;
    let mut literal_start = 0;
    let mut cursor = 0;
    while let Some(open) = rest[cursor..].find('[') {
        let open = cursor + open;
        let Some(close) = rest[open..].find(']') else {
            break;
        };
        let close = open + close;
        let name = &rest[open + 1..close];
        if slots.contains(&name) {
            if open > literal_start {
                out.push(Segment::Text(&rest[literal_start..open]));
            }
            out.push(Segment::Slot(name));
            literal_start = close + 1;
            cursor = close + 1;
        } else {
            cursor = open + 1;
        }
    }
    if literal_start < rest.len() {
        out.push(Segment::Text(&rest[literal_start..]));
    }
    out
}

impl PromptTemplate {
    /// Fills every slot in one pass. Values are inserted verbatim.
    pub fn render(&self, values: &[(&str, &str)]) -> Result<String, PromptError> {
        render_body(self.body, self.slots, values)
    }
}

fn render_body(body: &str, slots: &[&str], values: &[(&str, &str)]) -> Result<String, PromptError> {
    let mut text = String::with_capacity(body.len());
    for segment in segments(body, slots) {
        match segment {
            Segment::Text(t) => text.push_str(t),
            Segment::Slot(name) => {
                let value = values
                    .iter()
                    .find(|(k, _)| *k == name)
                    .map(|(_, v)| *v)
                    .ok_or_else(|| PromptError::MissingSlot(name.to_string()))?;
                text.push_str(value);
            }
        }
    }
    Ok(text)
}

/// Full chapter template: preamble followed by the chapter body.
pub fn chapter_template_body() -> String {
    format!("{CHAPTER_PREAMBLE}{CHAPTER_BODY}")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompiledPrompt {
    pub template_id: TemplateId,
    pub text: String,
    pub attachment: Option<BlobRef>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PromptError {
    #[error("no image to describe")]
    MissingImage,
    #[error("character name must not be empty")]
    EmptyName,
    #[error("chapter text must not be empty")]
    EmptyChapter,
    #[error("chapter has no events")]
    NoEvents,
    #[error("chapter numbers start at 1")]
    BadChapterNumber,
    #[error("chapter {chapter} needs {expected} previous summaries, got {found}")]
    SummaryCountMismatch {
        chapter: u32,
        expected: usize,
        found: usize,
    },
    #[error("slot [{0}] has no value")]
    MissingSlot(String),
    #[error(transparent)]
    Extract(#[from] ExtractError),
}

pub fn compile_scenery_prompt(image: Option<&BlobRef>) -> Result<CompiledPrompt, PromptError> {
    let image = image.ok_or(PromptError::MissingImage)?;
    Ok(CompiledPrompt {
        template_id: TemplateId::Scenery,
        text: SCENERY.render(&[])?,
        attachment: Some(image.clone()),
    })
}

pub fn compile_character_prompt(
    name: &str,
    image: Option<&BlobRef>,
) -> Result<CompiledPrompt, PromptError> {
    let name = name.trim();
    if name.is_empty() {
        return Err(PromptError::EmptyName);
    }
    let image = image.ok_or(PromptError::MissingImage)?;
    Ok(CompiledPrompt {
        template_id: TemplateId::CharacterAppearance,
        text: CHARACTER_APPEARANCE.render(&[("name", name)])?,
        attachment: Some(image.clone()),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CharacterDetails {
    pub name: String,
    pub appearance: Option<String>,
}

/// Everything the chapter prompt needs, already rendered to text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChapterPromptInput {
    pub genre: String,
    pub structure: StoryStructure,
    /// 1-based.
    pub chapter_no: u32,
    pub characters: Vec<CharacterDetails>,
    pub relations: Vec<String>,
    /// In narrative order.
    pub events: Vec<String>,
    /// Summaries of chapters `1..chapter_no`, in chapter order.
    pub previous_summaries: Vec<String>,
    pub place_description: Option<String>,
}

impl ChapterPromptInput {
    /// Builds the input for the chapter generated from `board`.
    pub fn from_board(
        project: &StoryProject,
        board: &Storyboard,
        chapter_no: u32,
        previous_summaries: Vec<String>,
    ) -> Result<Self, PromptError> {
        let events = events::extract_events(board, project)?;
        let relations = events::extract_relations(board, project)?;
        let characters = board
            .characters()
            .filter_map(|id| project.character(id))
            .map(|c| CharacterDetails {
                name: c.name.clone(),
                appearance: c.appearance.clone(),
            })
            .collect();
        Ok(Self {
            genre: project.genre.clone(),
            structure: project.structure,
            chapter_no,
            characters,
            relations: relations
                .iter()
                .map(|r| events::render_relation_text(r, project))
                .collect(),
            events: events
                .iter()
                .map(|e| events::render_event_text(e, project))
                .collect(),
            previous_summaries,
            place_description: board.scenery_description.clone(),
        })
    }
}

fn characters_block(characters: &[CharacterDetails]) -> String {
    characters
        .iter()
        .map(|c| match c.appearance.as_deref() {
            Some(a) => format!("{}: {}", c.name, a),
            None => c.name.clone(),
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn events_block(events: &[String]) -> String {
    events
        .iter()
        .enumerate()
        .map(|(i, e)| format!("{}. {}", i + 1, e))
        .collect::<Vec<_>>()
        .join("\n")
}

fn summaries_block(summaries: &[String]) -> String {
    summaries
        .iter()
        .enumerate()
        .map(|(i, s)| format!("Summary of chapter {}: {}", i + 1, s))
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn compile_chapter_prompt(input: &ChapterPromptInput) -> Result<CompiledPrompt, PromptError> {
    if input.chapter_no == 0 {
        return Err(PromptError::BadChapterNumber);
    }
    let expected = input.chapter_no as usize - 1;
    if input.previous_summaries.len() != expected {
        return Err(PromptError::SummaryCountMismatch {
            chapter: input.chapter_no,
            expected,
            found: input.previous_summaries.len(),
        });
    }
    if input.events.is_empty() {
        return Err(PromptError::NoEvents);
    }

    let chapter_no = input.chapter_no.to_string();
    let characters = characters_block(&input.characters);
    let relations = if input.relations.is_empty() {
        NO_RELATIONS.to_string()
    } else {
        input.relations.join(", ")
    };
    let events = events_block(&input.events);
    let summaries = summaries_block(&input.previous_summaries);
    let place = input.place_description.as_deref().unwrap_or("");

    let body = chapter_template_body();
    let text = render_body(
        &body,
        CHAPTER_SLOTS,
        &[
            ("genre", input.genre.as_str()),
            ("structure", input.structure.prompt_name()),
            ("chapter number", &chapter_no),
            ("characters names and details", &characters),
            ("list of relations", &relations),
            ("list of events", &events),
            ("previous chapters summary", &summaries),
            ("description for the place where the events happened", place),
        ],
    )?;
    Ok(CompiledPrompt {
        template_id: TemplateId::Chapter,
        text,
        attachment: None,
    })
}

pub fn compile_summary_prompt(chapter_text: &str) -> Result<CompiledPrompt, PromptError> {
    if chapter_text.trim().is_empty() {
        return Err(PromptError::EmptyChapter);
    }
    Ok(CompiledPrompt {
        template_id: TemplateId::Summary,
        text: SUMMARY.render(&[("chapter to summarize", chapter_text)])?,
        attachment: None,
    })
}

/// A compile call written as data, so prompt fixtures can live in files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "compile", rename_all = "snake_case")]
pub enum PromptCall {
    Scenery,
    CharacterAppearance { name: String },
    Summary { chapter_text: String },
    Chapter { input: ChapterPromptInput },
}

impl PromptCall {
    /// Compiles the call. Image prompts get a placeholder attachment.
    pub fn compile(&self) -> Result<CompiledPrompt, PromptError> {
        let image = BlobRef("0".repeat(64));
        match self {
            PromptCall::Scenery => compile_scenery_prompt(Some(&image)),
            PromptCall::CharacterAppearance { name } => compile_character_prompt(name, Some(&image)),
            PromptCall::Summary { chapter_text } => compile_summary_prompt(chapter_text),
            PromptCall::Chapter { input } => compile_chapter_prompt(input),
        }
    }
}

/// Recovers the chapter number from a compiled chapter prompt.
pub fn chapter_number_of(prompt: &str) -> Option<u32> {
    let rest = &prompt[prompt.find("Write chapter ")? + "Write chapter ".len()..];
    let digits: String = rest.chars().take_while(char::is_ascii_digit).collect();
    digits.parse().ok()
}

/// Recovers the chapter text from a compiled summary prompt.
pub fn summarized_text_of(prompt: &str) -> Option<&str> {
    let prefix = SUMMARY_BODY.strip_suffix("[chapter to summarize]")?;
    prompt.strip_prefix(prefix)
}
