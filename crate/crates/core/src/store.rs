//! On-disk project storage.
//!
//! ```text
//! <data-dir>/projects/<id>/project.json      canonical document
//! <data-dir>/projects/<id>/project.json.bak  previous document
//! <data-dir>/projects/<id>/version           last version token
//! <data-dir>/projects/<id>/transcript.log    JSON lines, append-only
//! <data-dir>/projects/<id>/blobs/<sha256>    image bytes
//! ```
//!
//! Every document write goes to a temporary file in the same directory and
//! is renamed over the target, so readers see the old or the new bytes and
//! nothing in between.

use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::model::{BlobRef, ProjectId, StoryProject, SCHEMA_VERSION};
use crate::provider::{BlobSource, ImageData};

const PROJECTS: &str = "projects";
const DOCUMENT: &str = "project.json";
const BACKUP: &str = "project.json.bak";
const VERSION: &str = "version";
const TRANSCRIPT: &str = "transcript.log";
const BLOBS: &str = "blobs";

/// Monotonic per-project save counter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VersionToken(pub u64);

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("project {0} not found")]
    NotFound(String),
    #[error("project {0} already exists")]
    AlreadyExists(String),
    #[error("blob {0} not found")]
    BlobNotFound(String),
    #[error("corrupt project document: {reason}")]
    CorruptDocument {
        reason: String,
        /// A readable earlier document, when one exists.
        backup: Option<PathBuf>,
    },
    #[error("project failed validation: {0}")]
    ValidationFailed(String),
    #[error("storage failure: {0}")]
    StorageFailure(#[from] io::Error),
}

impl StoreError {
    pub fn code(&self) -> &'static str {
        match self {
            StoreError::NotFound(_) => "not_found",
            StoreError::AlreadyExists(_) => "already_exists",
            StoreError::BlobNotFound(_) => "blob_not_found",
            StoreError::CorruptDocument { .. } => "corrupt_document",
            StoreError::ValidationFailed(_) => "validation_failed",
            StoreError::StorageFailure(_) => "storage_failure",
        }
    }
}

/// Content address of `bytes`.
pub fn blob_ref_for(bytes: &[u8]) -> BlobRef {
    BlobRef(hex::encode(Sha256::digest(bytes)))
}

fn is_blob_name(blob: &BlobRef) -> bool {
    blob.0.len() == 64 && blob.0.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f'))
}

/// Canonical document bytes: sorted keys, two-space indent, trailing newline.
pub fn canonical_bytes(project: &StoryProject) -> Vec<u8> {
    // Going through `Value` sorts every object's keys.
    let value = serde_json::to_value(project).expect("project serializes");
    let mut out = serde_json::to_vec_pretty(&value).expect("value serializes");
    out.push(b'\n');
    out
}

/// Parses and checks a document; `id` is attached to the result.
pub fn parse_document(id: &ProjectId, bytes: &[u8]) -> Result<StoryProject, String> {
    let mut project: StoryProject = serde_json::from_slice(bytes).map_err(|e| e.to_string())?;
    if project.schema_version != SCHEMA_VERSION {
        return Err(format!(
            "unsupported schema_version {}",
            project.schema_version
        ));
    }
    project.id = id.clone();
    project.check_invariants().map_err(|e| e.to_string())?;
    Ok(project)
}

/// Test hook: make the next document write stop part-way, as a crash would.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WriteFault {
    /// Write this many bytes of the temporary file, then fail before the
    /// rename.
    CrashBeforeRename { written: usize },
}

pub struct ProjectStore {
    root: PathBuf,
    write_lock: Mutex<()>,
    fault: Mutex<Option<WriteFault>>,
}

impl ProjectStore {
    pub fn open(data_dir: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = data_dir.into();
        fs::create_dir_all(root.join(PROJECTS))?;
        Ok(Self {
            root,
            write_lock: Mutex::new(()),
            fault: Mutex::new(None),
        })
    }

    pub fn data_dir(&self) -> &Path {
        &self.root
    }

    pub fn project_dir(&self, id: &ProjectId) -> PathBuf {
        self.root.join(PROJECTS).join(id.as_str())
    }

    pub fn document_path(&self, id: &ProjectId) -> PathBuf {
        self.project_dir(id).join(DOCUMENT)
    }

    pub fn transcript_path(&self, id: &ProjectId) -> PathBuf {
        self.project_dir(id).join(TRANSCRIPT)
    }

    pub fn inject_fault(&self, fault: WriteFault) {
        *self.fault.lock().expect("fault slot poisoned") = Some(fault);
    }

    pub fn exists(&self, id: &ProjectId) -> bool {
        self.document_path(id).is_file()
    }

    /// Stores a new project; fails if the id is taken.
    pub fn create(&self, project: &StoryProject) -> Result<VersionToken, StoreError> {
        let dir = self.project_dir(&project.id);
        match fs::create_dir(&dir) {
            Ok(()) => {}
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => {
                return Err(StoreError::AlreadyExists(project.id.to_string()))
            }
            Err(e) => return Err(e.into()),
        }
        self.save(project)
    }

    /// Atomically replaces the stored document.
    pub fn save(&self, project: &StoryProject) -> Result<VersionToken, StoreError> {
        if project.schema_version != SCHEMA_VERSION {
            return Err(StoreError::ValidationFailed(format!(
                "unsupported schema_version {}",
                project.schema_version
            )));
        }
        project
            .check_invariants()
            .map_err(|e| StoreError::ValidationFailed(e.to_string()))?;

        let _guard = self.write_lock.lock().expect("write lock poisoned");
        let dir = self.project_dir(&project.id);
        if !dir.is_dir() {
            return Err(StoreError::NotFound(project.id.to_string()));
        }
        let doc = dir.join(DOCUMENT);
        if doc.is_file() {
            let previous = fs::read(&doc)?;
            if parse_document(&project.id, &previous).is_ok() {
                write_atomic(&dir, &dir.join(BACKUP), &previous, None)?;
            }
        }
        let fault = self.fault.lock().expect("fault slot poisoned").take();
        write_atomic(&dir, &doc, &canonical_bytes(project), fault)?;

        let next = VersionToken(read_version(&dir)?.0 + 1);
        write_atomic(&dir, &dir.join(VERSION), next.0.to_string().as_bytes(), None)?;
        Ok(next)
    }

    pub fn version(&self, id: &ProjectId) -> Result<VersionToken, StoreError> {
        if !self.exists(id) {
            return Err(StoreError::NotFound(id.to_string()));
        }
        read_version(&self.project_dir(id))
    }

    pub fn load(&self, id: &ProjectId) -> Result<StoryProject, StoreError> {
        let path = self.document_path(id);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == io::ErrorKind::NotFound => {
                return Err(StoreError::NotFound(id.to_string()))
            }
            Err(e) => return Err(e.into()),
        };
        parse_document(id, &bytes).map_err(|reason| {
            tracing::warn!(project = %id, %reason, "corrupt project document");
            let backup = self.project_dir(id).join(BACKUP);
            StoreError::CorruptDocument {
                reason,
                backup: backup.is_file().then_some(backup),
            }
        })
    }

    /// Loads the previous document kept by the last successful save.
    pub fn load_backup(&self, id: &ProjectId) -> Result<StoryProject, StoreError> {
        let path = self.project_dir(id).join(BACKUP);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == io::ErrorKind::NotFound => {
                return Err(StoreError::NotFound(id.to_string()))
            }
            Err(e) => return Err(e.into()),
        };
        parse_document(id, &bytes).map_err(|reason| StoreError::CorruptDocument {
            reason,
            backup: None,
        })
    }

    /// Ids of every stored project, sorted.
    pub fn list(&self) -> Result<Vec<ProjectId>, StoreError> {
        let mut ids = Vec::new();
        for entry in fs::read_dir(self.root.join(PROJECTS))? {
            let entry = entry?;
            let Some(name) = entry.file_name().to_str().map(str::to_string) else {
                continue;
            };
            if let Ok(id) = ProjectId::new(name) {
                if self.exists(&id) {
                    ids.push(id);
                }
            }
        }
        ids.sort();
        Ok(ids)
    }

    /// Appends one JSON line to the project's transcript log.
    pub fn append_transcript<T: Serialize>(
        &self,
        id: &ProjectId,
        record: &T,
    ) -> Result<(), StoreError> {
        let dir = self.project_dir(id);
        if !dir.is_dir() {
            return Err(StoreError::NotFound(id.to_string()));
        }
        let mut line = serde_json::to_vec(record).map_err(io::Error::other)?;
        line.push(b'\n');
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(dir.join(TRANSCRIPT))?;
        file.write_all(&line)?;
        file.sync_data()?;
        Ok(())
    }

    /// Transcript lines in append order; empty if nothing was logged.
    pub fn read_transcript(&self, id: &ProjectId) -> Result<Vec<serde_json::Value>, StoreError> {
        let text = match fs::read_to_string(self.transcript_path(id)) {
            Ok(t) => t,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(e.into()),
        };
        text.lines()
            .filter(|l| !l.is_empty())
            .map(|l| serde_json::from_str(l).map_err(|e| io::Error::other(e).into()))
            .collect()
    }

    pub fn put_blob(&self, id: &ProjectId, bytes: &[u8]) -> Result<BlobRef, StoreError> {
        let dir = self.project_dir(id);
        if !dir.is_dir() {
            return Err(StoreError::NotFound(id.to_string()));
        }
        let blob = blob_ref_for(bytes);
        let blobs = dir.join(BLOBS);
        fs::create_dir_all(&blobs)?;
        let path = blobs.join(blob.as_str());
        if !path.is_file() {
            write_atomic(&blobs, &path, bytes, None)?;
        }
        Ok(blob)
    }

    pub fn get_blob(&self, id: &ProjectId, blob: &BlobRef) -> Result<Vec<u8>, StoreError> {
        if !is_blob_name(blob) {
            return Err(StoreError::BlobNotFound(blob.to_string()));
        }
        match fs::read(self.project_dir(id).join(BLOBS).join(blob.as_str())) {
            Ok(b) => Ok(b),
            Err(e) if e.kind() == io::ErrorKind::NotFound => {
                Err(StoreError::BlobNotFound(blob.to_string()))
            }
            Err(e) => Err(e.into()),
        }
    }

    /// The project's blobs as a [`BlobSource`].
    pub fn blobs<'a>(&'a self, id: &'a ProjectId) -> ProjectBlobs<'a> {
        ProjectBlobs { store: self, id }
    }
}

pub struct ProjectBlobs<'a> {
    store: &'a ProjectStore,
    id: &'a ProjectId,
}

impl BlobSource for ProjectBlobs<'_> {
    fn image(&self, blob: &BlobRef) -> Option<ImageData> {
        self.store.get_blob(self.id, blob).ok().map(ImageData::new)
    }
}

fn read_version(dir: &Path) -> Result<VersionToken, StoreError> {
    match fs::read_to_string(dir.join(VERSION)) {
        Ok(s) => Ok(VersionToken(s.trim().parse().unwrap_or(0))),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(VersionToken(0)),
        Err(e) => Err(e.into()),
    }
}

fn write_atomic(
    dir: &Path,
    target: &Path,
    bytes: &[u8],
    fault: Option<WriteFault>,
) -> Result<(), StoreError> {
    let mut tmp = tempfile::Builder::new()
        .prefix(".tmp-")
        .tempfile_in(dir)?;
    if let Some(WriteFault::CrashBeforeRename { written }) = fault {
        tmp.write_all(&bytes[..written.min(bytes.len())])?;
        // Leave the partial file behind like a killed process would.
        let _ = tmp.keep();
        return Err(io::Error::other("injected crash before rename").into());
    }
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(target).map_err(|e| e.error)?;
    if let Ok(d) = File::open(dir) {
        let _ = d.sync_all();
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{NodeKind, Position, StoryStructure};

    fn sample(id: &str) -> StoryProject {
        let mut p = StoryProject::new(
            ProjectId::new(id).unwrap(),
            "Harbour",
            "mystery",
            StoryStructure::Free,
        );
        let b = p.add_board();
        let a = p.add_character("Ahmad").unwrap();
        let j = p.add_character("John").unwrap();
        let na = p.add_node(b, NodeKind::character(a), Position::new(1.0, 2.0)).unwrap();
        let nj = p.add_node(b, NodeKind::character(j), Position::new(3.0, 4.0)).unwrap();
        let act = p.add_node(b, NodeKind::action("met"), Position::default()).unwrap();
        p.add_edge(b, na, act).unwrap();
        p.add_edge(b, act, nj).unwrap();
        p
    }

    fn store() -> (tempfile::TempDir, ProjectStore) {
        let dir = tempfile::tempdir().unwrap();
        let store = ProjectStore::open(dir.path()).unwrap();
        (dir, store)
    }

    #[test]
    fn round_trip() {
        let (_d, s) = store();
        let p = sample("p1");
        s.create(&p).unwrap();
        assert_eq!(s.load(&p.id).unwrap(), p);
    }

    #[test]
    fn bytes_are_canonical() {
        let (_d, s) = store();
        let p = sample("p1");
        s.create(&p).unwrap();
        let first = fs::read(s.document_path(&p.id)).unwrap();
        let loaded = s.load(&p.id).unwrap();
        s.save(&loaded).unwrap();
        assert_eq!(fs::read(s.document_path(&p.id)).unwrap(), first);
        let text = String::from_utf8(first).unwrap();
        let keys: Vec<&str> = text
            .lines()
            .filter(|l| l.starts_with("  \""))
            .map(|l| l.trim().split('"').nth(1).unwrap())
            .collect();
        assert_eq!(
            keys,
            ["boards", "chapters", "characters", "genre", "schema_version", "structure", "title"]
        );
    }

    #[test]
    fn versions_increase() {
        let (_d, s) = store();
        let p = sample("p1");
        let v1 = s.create(&p).unwrap();
        let v2 = s.save(&p).unwrap();
        assert!(v2 > v1);
        assert_eq!(s.version(&p.id).unwrap(), v2);
    }

    #[test]
    fn unknown_schema_rejected() {
        let (_d, s) = store();
        let mut p = sample("p1");
        s.create(&p).unwrap();
        p.schema_version = 99;
        assert!(matches!(s.save(&p), Err(StoreError::ValidationFailed(_))));
    }

    #[test]
    fn missing_and_empty() {
        let (_d, s) = store();
        let id = ProjectId::new("nope").unwrap();
        assert!(matches!(s.load(&id), Err(StoreError::NotFound(_))));
        assert!(s.list().unwrap().is_empty());
    }

    #[test]
    fn create_twice() {
        let (_d, s) = store();
        let p = sample("p1");
        s.create(&p).unwrap();
        assert!(matches!(s.create(&p), Err(StoreError::AlreadyExists(_))));
        assert!(matches!(
            s.save(&sample("p2")),
            Err(StoreError::NotFound(_))
        ));
    }

    #[test]
    fn truncated_document_is_corrupt_with_backup() {
        let (_d, s) = store();
        let mut p = sample("p1");
        s.create(&p).unwrap();
        p.set_title("Second draft");
        s.save(&p).unwrap();
        let path = s.document_path(&p.id);
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..bytes.len() / 2]).unwrap();
        match s.load(&p.id) {
            Err(StoreError::CorruptDocument { backup, .. }) => {
                assert_eq!(backup, Some(s.project_dir(&p.id).join(BACKUP)))
            }
            other => panic!("expected CorruptDocument, got {other:?}"),
        }
        assert_eq!(s.load_backup(&p.id).unwrap().title, "Harbour");
    }

    #[test]
    fn crash_mid_write_keeps_previous_document() {
        let (_d, s) = store();
        let mut p = sample("p1");
        s.create(&p).unwrap();
        let before = s.load(&p.id).unwrap();
        p.set_title("Never lands");
        s.inject_fault(WriteFault::CrashBeforeRename { written: 17 });
        assert!(matches!(s.save(&p), Err(StoreError::StorageFailure(_))));
        assert_eq!(s.load(&p.id).unwrap(), before);
        // The fault was one-shot.
        s.save(&p).unwrap();
        assert_eq!(s.load(&p.id).unwrap().title, "Never lands");
    }

    #[test]
    fn invariant_violation_on_disk_is_corrupt() {
        let (_d, s) = store();
        let p = sample("p1");
        s.create(&p).unwrap();
        let path = s.document_path(&p.id);
        let text = fs::read_to_string(&path).unwrap();
        fs::write(&path, text.replace("\"Ahmad\"", "\"\"")).unwrap();
        assert!(matches!(s.load(&p.id), Err(StoreError::CorruptDocument { .. })));
    }

    #[test]
    fn unknown_field_is_corrupt() {
        let (_d, s) = store();
        let p = sample("p1");
        s.create(&p).unwrap();
        let path = s.document_path(&p.id);
        let text = fs::read_to_string(&path).unwrap();
        fs::write(&path, text.replacen('{', "{\"extra\": 1,", 1)).unwrap();
        assert!(matches!(s.load(&p.id), Err(StoreError::CorruptDocument { .. })));
    }

    #[test]
    fn blobs_by_content() {
        let (_d, s) = store();
        let p = sample("p1");
        s.create(&p).unwrap();
        let r = s.put_blob(&p.id, b"\x89PNG\r\n\x1a\nxyz").unwrap();
        assert_eq!(r, blob_ref_for(b"\x89PNG\r\n\x1a\nxyz"));
        assert_eq!(s.put_blob(&p.id, b"\x89PNG\r\n\x1a\nxyz").unwrap(), r);
        assert!(s.project_dir(&p.id).join("blobs").join(r.as_str()).is_file());
        let img = s.blobs(&p.id).image(&r).unwrap();
        assert_eq!(img.media_type, "image/png");
        assert!(matches!(
            s.get_blob(&p.id, &BlobRef("../project.json".into())),
            Err(StoreError::BlobNotFound(_))
        ));
    }

    #[test]
    fn transcript_appends() {
        let (_d, s) = store();
        let p = sample("p1");
        s.create(&p).unwrap();
        s.append_transcript(&p.id, &serde_json::json!({"n": 1})).unwrap();
        s.append_transcript(&p.id, &serde_json::json!({"n": 2})).unwrap();
        let lines = s.read_transcript(&p.id).unwrap();
        assert_eq!(lines, [serde_json::json!({"n": 1}), serde_json::json!({"n": 2})]);
    }

    #[test]
    fn list_sorted() {
        let (_d, s) = store();
        s.create(&sample("b")).unwrap();
        s.create(&sample("a")).unwrap();
        let ids: Vec<String> = s.list().unwrap().iter().map(|i| i.to_string()).collect();
        assert_eq!(ids, ["a", "b"]);
    }
}
