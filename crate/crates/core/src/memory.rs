//! Episode-scoped indexed memory.
//!
//! Two maps: `texts_map` for candidate response texts (`resp_1`, `text_0`, …)
//! and `imgs_map` for image artifacts (`original_image`, `img_0`, …).
//! Bindings are immutable once created so reward attribution can refer to
//! exactly what the model saw. Images are stored as path handles plus cached
//! dimensions, not pixel buffers.

use std::fmt;
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A file-backed image handle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageArtifact {
    pub path: PathBuf,
    pub width: u32,
    pub height: u32,
}

impl ImageArtifact {
    pub fn new(path: impl Into<PathBuf>, width: u32, height: u32) -> Self {
        ImageArtifact { path: path.into(), width, height }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    Texts,
    Imgs,
}

impl fmt::Display for MapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MapKind::Texts => write!(f, "texts_map"),
            MapKind::Imgs => write!(f, "imgs_map"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MemoryError {
    #[error("key {key:?} is already bound in {kind}")]
    DuplicateKey { kind: MapKind, key: String },
    #[error("key {key:?} not found in {kind}; available keys: [{}]", available.join(", "))]
    KeyNotFound { kind: MapKind, key: String, available: Vec<String> },
}

/// The per-episode store. Insertion order is preserved, which makes key
/// listings and the serialized manifest deterministic.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct MemoryMap {
    texts: IndexMap<String, String>,
    imgs: IndexMap<String, ImageArtifact>,
}

impl MemoryMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bind_text(
        &mut self,
        key: impl Into<String>,
        text: impl Into<String>,
    ) -> Result<(), MemoryError> {
        let key = key.into();
        if self.texts.contains_key(&key) {
            return Err(MemoryError::DuplicateKey { kind: MapKind::Texts, key });
        }
        self.texts.insert(key, text.into());
        Ok(())
    }

    pub fn bind_image(
        &mut self,
        key: impl Into<String>,
        artifact: ImageArtifact,
    ) -> Result<(), MemoryError> {
        let key = key.into();
        if self.imgs.contains_key(&key) {
            return Err(MemoryError::DuplicateKey { kind: MapKind::Imgs, key });
        }
        self.imgs.insert(key, artifact);
        Ok(())
    }

    /// On a miss the error enumerates every key currently bound in that map,
    /// so the model can self-correct on the next turn.
    pub fn resolve_text(&self, key: &str) -> Result<&str, MemoryError> {
        self.texts.get(key).map(String::as_str).ok_or_else(|| MemoryError::KeyNotFound {
            kind: MapKind::Texts,
            key: key.to_string(),
            available: self.keys(MapKind::Texts),
        })
    }

    pub fn resolve_image(&self, key: &str) -> Result<&ImageArtifact, MemoryError> {
        self.imgs.get(key).ok_or_else(|| MemoryError::KeyNotFound {
            kind: MapKind::Imgs,
            key: key.to_string(),
            available: self.keys(MapKind::Imgs),
        })
    }

    pub fn keys(&self, kind: MapKind) -> Vec<String> {
        match kind {
            MapKind::Texts => self.texts.keys().cloned().collect(),
            MapKind::Imgs => self.imgs.keys().cloned().collect(),
        }
    }

    pub fn contains(&self, kind: MapKind, key: &str) -> bool {
        match kind {
            MapKind::Texts => self.texts.contains_key(key),
            MapKind::Imgs => self.imgs.contains_key(key),
        }
    }

    /// Smallest unused `<prefix>_<n>` in the map. Pure read: repeated calls
    /// without an intervening bind return the same key.
    pub fn next_key(&self, kind: MapKind, prefix: &str) -> String {
        for n in 0.. {
            let candidate = format!("{prefix}_{n}");
            if !self.contains(kind, &candidate) {
                return candidate;
            }
        }
        unreachable!("some suffix below usize::MAX is unused")
    }

    pub fn texts(&self) -> impl Iterator<Item = (&str, &str)> {
        self.texts.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn images(&self) -> impl Iterator<Item = (&str, &ImageArtifact)> {
        self.imgs.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Structured text manifest (key → path/text) used by golden-file tests.
    /// Image paths are rendered relative to `root` when they live under it.
    pub fn manifest(&self, root: &Path) -> String {
        let mut lines = Vec::new();
        for (key, text) in &self.texts {
            lines.push(format!("texts/{key}: {}", text.replace('\n', "\\n")));
        }
        for (key, img) in &self.imgs {
            let shown = img.path.strip_prefix(root).unwrap_or(&img.path);
            lines.push(format!(
                "imgs/{key}: {} ({}x{})",
                shown.display(),
                img.width,
                img.height
            ));
        }
        lines.join("\n")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bind_then_resolve_round_trips() {
        let mut mem = MemoryMap::new();
        mem.bind_image("original_image", ImageArtifact::new("/tmp/x.png", 4, 4)).unwrap();
        assert_eq!(mem.resolve_image("original_image").unwrap().width, 4);
        mem.bind_text("resp_1", "first").unwrap();
        assert_eq!(mem.resolve_text("resp_1").unwrap(), "first");
    }

    #[test]
    fn double_bind_is_rejected() {
        let mut mem = MemoryMap::new();
        mem.bind_text("resp_1", "a").unwrap();
        let err = mem.bind_text("resp_1", "b").unwrap_err();
        assert_eq!(err, MemoryError::DuplicateKey { kind: MapKind::Texts, key: "resp_1".into() });
        // Original binding is untouched.
        assert_eq!(mem.resolve_text("resp_1").unwrap(), "a");
    }

    #[test]
    fn listing_preserves_binding_order() {
        let mut mem = MemoryMap::new();
        mem.bind_text("resp_1", "r1").unwrap();
        mem.bind_text("resp_2", "r2").unwrap();
        assert_eq!(mem.keys(MapKind::Texts), vec!["resp_1", "resp_2"]);
    }

    #[test]
    fn miss_enumerates_available_keys() {
        let mut mem = MemoryMap::new();
        mem.bind_image("original_image", ImageArtifact::new("a.png", 1, 1)).unwrap();
        mem.bind_image("img_0", ImageArtifact::new("b.png", 1, 1)).unwrap();
        let err = mem.resolve_image("img_7").unwrap_err();
        assert_eq!(
            err,
            MemoryError::KeyNotFound {
                kind: MapKind::Imgs,
                key: "img_7".into(),
                available: vec!["original_image".into(), "img_0".into()],
            }
        );
    }

    #[test]
    fn miss_on_empty_map_lists_nothing() {
        let mem = MemoryMap::new();
        let err = mem.resolve_text("resp_1").unwrap_err();
        assert_eq!(
            err,
            MemoryError::KeyNotFound {
                kind: MapKind::Texts,
                key: "resp_1".into(),
                available: vec![],
            }
        );
        assert!(err.to_string().contains("available keys: []"));
    }

    #[test]
    fn next_key_skips_bound_suffixes() {
        let mut mem = MemoryMap::new();
        assert_eq!(mem.next_key(MapKind::Imgs, "observation"), "observation_0");
        mem.bind_image("img_0", ImageArtifact::new("a.png", 1, 1)).unwrap();
        assert_eq!(mem.next_key(MapKind::Imgs, "img"), "img_1");
        mem.bind_image("img_1", ImageArtifact::new("b.png", 1, 1)).unwrap();
        mem.bind_image("img_2", ImageArtifact::new("c.png", 1, 1)).unwrap();
        assert_eq!(mem.next_key(MapKind::Imgs, "img"), "img_3");
        // Pure read: same answer twice.
        assert_eq!(mem.next_key(MapKind::Imgs, "img"), "img_3");
    }

    #[test]
    fn manifest_lists_both_maps() {
        let mut mem = MemoryMap::new();
        mem.bind_text("text_0", "line one\nline two").unwrap();
        mem.bind_image("original_image", ImageArtifact::new("/run/artifacts/o.png", 8, 6)).unwrap();
        let manifest = mem.manifest(Path::new("/run"));
        assert_eq!(
            manifest,
            "texts/text_0: line one\\nline two\nimgs/original_image: artifacts/o.png (8x6)"
        );
    }
}
