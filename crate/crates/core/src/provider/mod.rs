//! Language/vision model abstraction.
//!
//! Calls are blocking. The generation pipeline runs on a worker thread and
//! treats every call as one request/response round trip.

mod mock;
mod openai;

use std::collections::HashMap;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::model::BlobRef;
use crate::prompt::CompiledPrompt;

pub use mock::{Fault, MockProvider, MOCK_VISION_TEXT};
pub use openai::{OpenAiCompatible, OpenAiConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Capabilities {
    pub text: bool,
    pub vision: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageData {
    pub media_type: String,
    pub bytes: Vec<u8>,
}

impl ImageData {
    pub fn new(bytes: Vec<u8>) -> Self {
        Self {
            media_type: sniff_media_type(&bytes).to_string(),
            bytes,
        }
    }
}

/// Guesses an image media type from magic bytes.
pub fn sniff_media_type(bytes: &[u8]) -> &'static str {
    match bytes {
        [0x89, b'P', b'N', b'G', ..] => "image/png",
        [0xFF, 0xD8, 0xFF, ..] => "image/jpeg",
        [b'G', b'I', b'F', b'8', ..] => "image/gif",
        [b'R', b'I', b'F', b'F', _, _, _, _, b'W', b'E', b'B', b'P', ..] => "image/webp",
        _ => "application/octet-stream",
    }
}

/// Resolves blob references to image bytes.
pub trait BlobSource {
    fn image(&self, blob: &BlobRef) -> Option<ImageData>;
}

/// In-memory blob map, handy for tests and one-off runs.
#[derive(Debug, Default)]
pub struct MemoryBlobs {
    blobs: Mutex<HashMap<BlobRef, Vec<u8>>>,
}

impl MemoryBlobs {
    pub fn insert(&self, bytes: Vec<u8>) -> BlobRef {
        let blob = crate::store::blob_ref_for(&bytes);
        self.blobs
            .lock()
            .expect("blob map poisoned")
            .insert(blob.clone(), bytes);
        blob
    }
}

impl BlobSource for MemoryBlobs {
    fn image(&self, blob: &BlobRef) -> Option<ImageData> {
        let blobs = self.blobs.lock().expect("blob map poisoned");
        blobs.get(blob).cloned().map(ImageData::new)
    }
}

pub struct ModelRequest<'a> {
    pub prompt: &'a CompiledPrompt,
    pub image: Option<&'a ImageData>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderErrorKind {
    /// Worth one more attempt (timeouts, rate limits, 5xx).
    Transient,
    Permanent,
    /// The provider lacks a capability the request needs.
    Unsupported,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{kind:?} provider failure: {message}")]
pub struct ProviderError {
    pub kind: ProviderErrorKind,
    pub message: String,
}

impl ProviderError {
    pub fn transient(message: impl Into<String>) -> Self {
        Self {
            kind: ProviderErrorKind::Transient,
            message: message.into(),
        }
    }

    pub fn permanent(message: impl Into<String>) -> Self {
        Self {
            kind: ProviderErrorKind::Permanent,
            message: message.into(),
        }
    }

    pub fn unsupported(message: impl Into<String>) -> Self {
        Self {
            kind: ProviderErrorKind::Unsupported,
            message: message.into(),
        }
    }

    pub fn is_transient(&self) -> bool {
        self.kind == ProviderErrorKind::Transient
    }
}

pub trait ModelProvider: Send + Sync {
    fn name(&self) -> &str;

    fn capabilities(&self) -> Capabilities;

    fn complete(&self, request: &ModelRequest<'_>) -> Result<String, ProviderError>;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sniffs_common_formats() {
        assert_eq!(sniff_media_type(b"\x89PNG\r\n\x1a\n"), "image/png");
        assert_eq!(sniff_media_type(&[0xFF, 0xD8, 0xFF, 0xE0]), "image/jpeg");
        assert_eq!(sniff_media_type(b"GIF89a"), "image/gif");
        assert_eq!(sniff_media_type(b"RIFF\0\0\0\0WEBPVP8 "), "image/webp");
        assert_eq!(sniff_media_type(b"hello"), "application/octet-stream");
    }

    #[test]
    fn memory_blobs_round_trip() {
        let blobs = MemoryBlobs::default();
        let r = blobs.insert(b"GIF89a...".to_vec());
        assert_eq!(blobs.image(&r).unwrap().media_type, "image/gif");
        assert!(blobs.image(&BlobRef("00".into())).is_none());
    }
}
