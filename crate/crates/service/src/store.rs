//! A directory of JSON files, one collection per subdirectory.
//!
//! ```text
//! templates/<id>.sign.json
//! hands/<id>.hands.json
//! lessons/<id>.lesson.json
//! attempts/attempt-<id>.sign.json
//! attempts/result-<id>.json
//! sessions/<id>.session.jsonl
//! ```
//!
//! Every write goes to a temporary file in the target directory and is then
//! renamed into place, so readers never see a partial document. Writes to
//! one collection are serialized; reads take no lock.

use std::collections::BTreeMap;
use std::fs;
use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::Serialize;
use signcoach_core::format::{parse_json, parse_lesson, parse_library, validate_template, SchemaViolation, SignFile};
use signcoach_core::handshape::HandshapeLibrary;
use signcoach_core::scoring::ComparisonResult;
use signcoach_core::session::{Lesson, SessionLog};
use signcoach_core::template::SignTemplate;

/// The library used for handshape matching.
pub const DEFAULT_LIBRARY: &str = "default";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Collection {
    Templates,
    Hands,
    Lessons,
    Attempts,
    Results,
    Sessions,
}

impl Collection {
    pub const ALL: [Collection; 6] = [
        Collection::Templates,
        Collection::Hands,
        Collection::Lessons,
        Collection::Attempts,
        Collection::Results,
        Collection::Sessions,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Collection::Templates => "templates",
            Collection::Hands => "hands",
            Collection::Lessons => "lessons",
            Collection::Attempts => "attempts",
            Collection::Results => "results",
            Collection::Sessions => "sessions",
        }
    }

    fn dir(self) -> &'static str {
        match self {
            Collection::Results => "attempts",
            other => other.name(),
        }
    }

    fn prefix(self) -> &'static str {
        match self {
            Collection::Attempts => "attempt-",
            Collection::Results => "result-",
            _ => "",
        }
    }

    fn suffix(self) -> &'static str {
        match self {
            Collection::Templates | Collection::Attempts => ".sign.json",
            Collection::Hands => ".hands.json",
            Collection::Lessons => ".lesson.json",
            Collection::Results => ".json",
            Collection::Sessions => ".session.jsonl",
        }
    }

    fn file_name(self, id: &str) -> String {
        format!("{}{id}{}", self.prefix(), self.suffix())
    }

    fn id_of(self, file_name: &str) -> Option<&str> {
        let id = file_name.strip_prefix(self.prefix())?.strip_suffix(self.suffix())?;
        // `attempts/` holds both kinds; a result never ends in `.sign.json`
        if self == Collection::Results && id.ends_with(".sign") {
            return None;
        }
        valid_id(id).then_some(id)
    }

    /// Checks that `text` is a valid document of this collection whose
    /// embedded id, if any, is `id`.
    pub fn validate(self, id: &str, text: &str) -> Result<(), SchemaViolation> {
        let embedded = match self {
            Collection::Templates => Some(validate_template(text)?.id),
            Collection::Hands => parse_library(text).map(|_| None)?,
            Collection::Lessons => Some(parse_lesson(text)?.id),
            Collection::Attempts => SignFile::parse(text)?.to_recording().map(|_| None)?,
            Collection::Results => parse_json::<ComparisonResult>(text).map(|_| None)?,
            Collection::Sessions => SessionLog::parse(text)
                .map(|log| Some(log.session_id))
                .map_err(|e| SchemaViolation::new("$", e.to_string()))?,
        };
        match embedded {
            Some(found) if found != id => Err(SchemaViolation::new(
                "id",
                format!("document id `{found}` does not match `{id}`"),
            )),
            _ => Ok(()),
        }
    }
}

fn valid_id(id: &str) -> bool {
    !id.is_empty()
        && !id.starts_with('.')
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{collection} `{id}` not found")]
    NotFound { collection: &'static str, id: String },
    #[error("{collection} `{id}` already exists")]
    Conflict { collection: &'static str, id: String },
    #[error(transparent)]
    Schema(#[from] SchemaViolation),
    #[error("invalid id `{0}`: use letters, digits, `-`, `_` and `.`")]
    InvalidId(String),
    #[error("store i/o: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DeletionReceipt {
    pub collection: &'static str,
    pub id: String,
    pub deleted: bool,
}

#[derive(Debug)]
pub struct Store {
    root: PathBuf,
    locks: BTreeMap<Collection, Mutex<()>>,
}

impl Store {
    /// Opens a store, creating the directory layout if needed.
    pub fn open(root: impl Into<PathBuf>) -> Result<Store, StoreError> {
        let root = root.into();
        for c in Collection::ALL {
            fs::create_dir_all(root.join(c.dir()))?;
        }
        Ok(Store {
            root,
            locks: Collection::ALL.into_iter().map(|c| (c, Mutex::new(()))).collect(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, collection: Collection, id: &str) -> PathBuf {
        self.root.join(collection.dir()).join(collection.file_name(id))
    }

    fn checked_path(&self, collection: Collection, id: &str) -> Result<PathBuf, StoreError> {
        if !valid_id(id) {
            return Err(StoreError::InvalidId(id.to_string()));
        }
        Ok(self.path(collection, id))
    }

    fn not_found(collection: Collection, id: &str) -> StoreError {
        StoreError::NotFound {
            collection: collection.name(),
            id: id.to_string(),
        }
    }

    fn write_atomic(&self, collection: Collection, id: &str, text: &str, replace: bool) -> Result<(), StoreError> {
        let path = self.checked_path(collection, id)?;
        collection.validate(id, text)?;
        let _guard = self.locks[&collection].lock().unwrap_or_else(|p| p.into_inner());
        let mut tmp = tempfile::NamedTempFile::new_in(path.parent().expect("store paths have a parent"))?;
        tmp.write_all(text.as_bytes())?;
        tmp.as_file().sync_all()?;
        if replace {
            tmp.persist(&path).map_err(|e| e.error)?;
        } else {
            tmp.persist_noclobber(&path).map_err(|e| match e.error.kind() {
                ErrorKind::AlreadyExists => StoreError::Conflict {
                    collection: collection.name(),
                    id: id.to_string(),
                },
                _ => StoreError::Io(e.error),
            })?;
        }
        Ok(())
    }

    /// Adds a new document; fails with `Conflict` if the id is taken.
    pub fn create(&self, collection: Collection, id: &str, text: &str) -> Result<(), StoreError> {
        self.write_atomic(collection, id, text, false)
    }

    /// Writes a document, replacing any previous version.
    pub fn put(&self, collection: Collection, id: &str, text: &str) -> Result<(), StoreError> {
        self.write_atomic(collection, id, text, true)
    }

    /// The stored bytes, exactly as written.
    pub fn get(&self, collection: Collection, id: &str) -> Result<String, StoreError> {
        let path = self.checked_path(collection, id)?;
        fs::read_to_string(&path).map_err(|e| match e.kind() {
            ErrorKind::NotFound => Store::not_found(collection, id),
            _ => StoreError::Io(e),
        })
    }

    pub fn delete(&self, collection: Collection, id: &str) -> Result<DeletionReceipt, StoreError> {
        let path = self.checked_path(collection, id)?;
        let _guard = self.locks[&collection].lock().unwrap_or_else(|p| p.into_inner());
        fs::remove_file(&path).map_err(|e| match e.kind() {
            ErrorKind::NotFound => Store::not_found(collection, id),
            _ => StoreError::Io(e),
        })?;
        Ok(DeletionReceipt {
            collection: collection.name(),
            id: id.to_string(),
            deleted: true,
        })
    }

    /// Ids in lexicographic order.
    pub fn list(&self, collection: Collection) -> Result<Vec<String>, StoreError> {
        let mut ids = Vec::new();
        for entry in fs::read_dir(self.root.join(collection.dir()))? {
            let name = entry?.file_name();
            if let Some(id) = name.to_str().and_then(|n| collection.id_of(n)) {
                ids.push(id.to_string());
            }
        }
        ids.sort();
        Ok(ids)
    }

    pub fn template(&self, id: &str) -> Result<SignTemplate, StoreError> {
        Ok(validate_template(&self.get(Collection::Templates, id)?)?)
    }

    /// Templates for every sign of `lesson`.
    pub fn lesson_templates(&self, lesson: &Lesson) -> Result<BTreeMap<String, SignTemplate>, StoreError> {
        lesson.signs.iter().map(|id| Ok((id.clone(), self.template(id)?))).collect()
    }

    pub fn lesson(&self, id: &str) -> Result<Lesson, StoreError> {
        Ok(parse_lesson(&self.get(Collection::Lessons, id)?)?)
    }

    pub fn library(&self) -> Result<HandshapeLibrary, StoreError> {
        Ok(parse_library(&self.get(Collection::Hands, DEFAULT_LIBRARY)?)?)
    }

    /// Stores an attempt and its result under one fresh id.
    pub fn save_attempt(&self, attempt: &SignFile, result: &ComparisonResult) -> Result<String, StoreError> {
        let id = ulid::Ulid::new().to_string().to_lowercase();
        let mut text = serde_json::to_string_pretty(result).expect("results serialize");
        text.push('\n');
        self.create(Collection::Attempts, &id, &attempt.to_json())?;
        self.create(Collection::Results, &id, &text)?;
        Ok(id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_names_round_trip() {
        for c in Collection::ALL {
            assert_eq!(c.id_of(&c.file_name("abc-1")), Some("abc-1"));
        }
        assert_eq!(Collection::Results.id_of("attempt-x.sign.json"), None);
        assert_eq!(Collection::Results.id_of("result-x.sign.json"), None);
        assert_eq!(Collection::Attempts.id_of("result-x.json"), None);
        assert_eq!(Collection::Templates.id_of(".tmpXYZ"), None);
    }

    #[test]
    fn ids_are_plain_names() {
        assert!(valid_id("thank-you"));
        assert!(valid_id("a.b_c"));
        for bad in ["", ".hidden", "../x", "a/b", "a b"] {
            assert!(!valid_id(bad), "{bad}");
        }
    }
}
