use crate::model::{BoardId, Character, CharacterId, ModelError, StoryProject, Storyboard};
use crate::prompt::{self, CompiledPrompt};
use crate::provider::{BlobSource, ModelProvider, ModelRequest, ProviderError};

use super::{call_with_retry, CallFailure, CancelToken};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DescribeError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("no image attached")]
    NoImage,
    #[error("image {0} is not in the blob store")]
    MissingBlob(String),
    #[error("provider {0} cannot read images")]
    VisionUnsupported(String),
    #[error(transparent)]
    Provider(#[from] ProviderError),
}

fn ask_vision(
    provider: &dyn ModelProvider,
    blobs: &dyn BlobSource,
    prompt: CompiledPrompt,
) -> Result<String, DescribeError> {
    if !provider.capabilities().vision {
        return Err(DescribeError::VisionUnsupported(provider.name().to_string()));
    }
    let blob = prompt.attachment.as_ref().ok_or(DescribeError::NoImage)?;
    let image = blobs
        .image(blob)
        .ok_or_else(|| DescribeError::MissingBlob(blob.to_string()))?;
    let request = ModelRequest {
        prompt: &prompt,
        image: Some(&image),
    };
    let text = match call_with_retry(provider, &request, &CancelToken::new()) {
        Ok(text) => text,
        Err(CallFailure::Provider(e)) => return Err(e.into()),
        Err(CallFailure::Cancelled) => unreachable!("fresh token is never cancelled"),
    };
    let text = text.trim();
    if text.is_empty() {
        return Err(ProviderError::permanent("empty description").into());
    }
    Ok(text.to_string())
}

/// Describes a character from its image and stores the text as its
/// appearance. Re-running overwrites the previous description.
pub fn describe_character(
    project: &mut StoryProject,
    character: CharacterId,
    provider: &dyn ModelProvider,
    blobs: &dyn BlobSource,
) -> Result<Character, DescribeError> {
    let c = project
        .character(character)
        .ok_or(ModelError::UnknownCharacter(character))?;
    let image = c.image_ref.as_ref().ok_or(DescribeError::NoImage)?;
    let prompt = prompt::compile_character_prompt(&c.name, Some(image))
        .map_err(|_| DescribeError::NoImage)?;
    let text = ask_vision(provider, blobs, prompt)?;
    project.set_character_appearance(character, Some(text))?;
    Ok(project
        .character(character)
        .cloned()
        .expect("character checked above"))
}

/// Describes the board's scenery image; the text later fills the chapter
/// prompt's place description.
pub fn describe_scenery(
    project: &mut StoryProject,
    board: BoardId,
    provider: &dyn ModelProvider,
    blobs: &dyn BlobSource,
) -> Result<Storyboard, DescribeError> {
    let b = project.board(board).ok_or(ModelError::UnknownBoard(board))?;
    let prompt = prompt::compile_scenery_prompt(b.scenery_image_ref.as_ref())
        .map_err(|_| DescribeError::NoImage)?;
    let text = ask_vision(provider, blobs, prompt)?;
    project.set_scenery_description(board, Some(text))?;
    Ok(project.board(board).cloned().expect("board checked above"))
}
