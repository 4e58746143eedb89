//! The two retrieval tools and the store behind them.
//!
//! `doc_page_retrieval_by_query` ranks a document's pages against a natural
//! language query and returns a stitched image of the top hits;
//! `doc_page_retrieval_by_index` bypasses retrieval and returns one page
//! directly. Page images resolve through an extension fallback (png, jpg,
//! jpeg) and missing files are reported with every attempted path.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, OnceLock};

use image::DynamicImage;
use serde_json::{Map, Value};

use super::embed::Embedder;
use super::index::{IndexError, PageRecord, VectorIndex};
use super::stitch::{resize_to_long_side, stitch_pages, StitchConfig};
use crate::memory::ImageArtifact;
use crate::toolkit::{ParamSpec, ParamType, Tool, ToolCtx, ToolResponse, ToolSchema};

pub const EXTENSION_FALLBACK: [&str; 3] = ["png", "jpg", "jpeg"];

#[derive(Debug, Clone)]
pub struct DocStoreConfig {
    pub image_root: PathBuf,
    /// Number of pages retrieved per query.
    pub top_k: usize,
    pub stitch: StitchConfig,
}

impl DocStoreConfig {
    pub fn new(image_root: impl Into<PathBuf>) -> Self {
        DocStoreConfig { image_root: image_root.into(), top_k: 5, stitch: StitchConfig::default() }
    }
}

/// Read-only page store shared by all episodes of a run.
pub struct DocStore {
    index: VectorIndex,
    embedder: Arc<dyn Embedder>,
    cfg: DocStoreConfig,
}

impl DocStore {
    pub fn new(index: VectorIndex, embedder: Arc<dyn Embedder>, cfg: DocStoreConfig) -> Self {
        DocStore { index, embedder, cfg }
    }

    /// Indexes `pages` (1-based order) as document `source`.
    pub fn ingest(
        index: &mut VectorIndex,
        embedder: &dyn Embedder,
        source: &str,
        page_texts: &[String],
    ) -> Result<(), IndexError> {
        let vectors = Self::embed_or_empty(embedder, page_texts);
        for (i, (text, vector)) in page_texts.iter().zip(vectors).enumerate() {
            index.add(PageRecord {
                source: source.to_string(),
                page: (i + 1) as u32,
                text: text.clone(),
                vector,
            })?;
        }
        Ok(())
    }

    fn embed_or_empty(embedder: &dyn Embedder, texts: &[String]) -> Vec<Vec<f32>> {
        embedder.embed(texts).unwrap_or_else(|_| vec![vec![0.0; embedder.dim()]; texts.len()])
    }

    /// Builds the index by scanning `image_root` for `{filename}_{page}.{ext}`
    /// page images, embedding the sidecar `.txt` of each page when present
    /// and the file stem otherwise. Scan order is sorted, so indexes are
    /// reproducible.
    pub fn build_from_image_root(
        embedder: &dyn Embedder,
        image_root: &Path,
    ) -> Result<VectorIndex, IndexError> {
        let mut pages: Vec<(String, u32, String)> = Vec::new();
        let mut entries: Vec<PathBuf> = fs::read_dir(image_root)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .collect();
        entries.sort();
        for path in entries {
            let Some(ext) = path.extension().and_then(|e| e.to_str()) else { continue };
            if !EXTENSION_FALLBACK.contains(&ext.to_ascii_lowercase().as_str()) {
                continue;
            }
            let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else { continue };
            let Some((source, page)) = split_page_stem(stem) else { continue };
            let sidecar = image_root.join(format!("{stem}.txt"));
            let text = fs::read_to_string(&sidecar).unwrap_or_else(|_| stem.to_string());
            pages.push((source.to_string(), page, text));
        }
        pages.sort_by(|a, b| (&a.0, a.1).cmp(&(&b.0, b.1)));
        let mut index = VectorIndex::new();
        let texts: Vec<String> = pages.iter().map(|(_, _, t)| t.clone()).collect();
        let vectors = Self::embed_or_empty(embedder, &texts);
        for ((source, page, text), vector) in pages.into_iter().zip(vectors) {
            index.add(PageRecord { source, page, text, vector })?;
        }
        Ok(index)
    }

    pub fn index(&self) -> &VectorIndex {
        &self.index
    }

    pub fn page_count(&self, source: &str) -> usize {
        self.index.page_count(source)
    }

    /// Resolves a page image by trying each extension in fallback order.
    pub fn resolve_page_image(&self, source: &str, page: u32) -> Result<PathBuf, Vec<PathBuf>> {
        let mut attempted = Vec::new();
        for ext in EXTENSION_FALLBACK {
            let candidate = self.cfg.image_root.join(format!("{source}_{page}.{ext}"));
            if candidate.is_file() {
                return Ok(candidate);
            }
            attempted.push(candidate);
        }
        Err(attempted)
    }

    /// Top-k page indices for the query, deduplicated preserving rank order.
    pub fn retrieve_pages(&self, source: &str, query: &str) -> Result<Vec<u32>, String> {
        let vectors = self
            .embedder
            .embed(&[query.to_string()])
            .map_err(|e| format!("retrieval is not available: {e}"))?;
        let hits = self.index.query(source, &vectors[0], self.cfg.top_k);
        let mut pages = Vec::new();
        for (page, _) in hits {
            if !pages.contains(&page) {
                pages.push(page);
            }
        }
        Ok(pages)
    }
}

/// Splits `report_3` into (`report`, 3); the page number is the suffix after
/// the last underscore.
fn split_page_stem(stem: &str) -> Option<(&str, u32)> {
    let (source, page) = stem.rsplit_once('_')?;
    if source.is_empty() {
        return None;
    }
    page.parse::<u32>().ok().map(|p| (source, p))
}

/// Loads the store at most once, even under concurrent first calls.
pub struct LazyDocStore {
    cell: OnceLock<Arc<DocStore>>,
    loader: Box<dyn Fn() -> DocStore + Send + Sync>,
    loads: AtomicUsize,
}

impl LazyDocStore {
    pub fn new(loader: impl Fn() -> DocStore + Send + Sync + 'static) -> Self {
        LazyDocStore { cell: OnceLock::new(), loader: Box::new(loader), loads: AtomicUsize::new(0) }
    }

    pub fn get(&self) -> Arc<DocStore> {
        self.cell
            .get_or_init(|| {
                self.loads.fetch_add(1, Ordering::SeqCst);
                Arc::new((self.loader)())
            })
            .clone()
    }

    /// How many times the loader actually ran.
    pub fn load_count(&self) -> usize {
        self.loads.load(Ordering::SeqCst)
    }
}

fn load_page(store: &DocStore, source: &str, page: u32) -> Result<(DynamicImage, PathBuf), String> {
    let path = store.resolve_page_image(source, page).map_err(|attempted| {
        let listed: Vec<String> = attempted.iter().map(|p| p.display().to_string()).collect();
        format!("page image for {source:?} page {page} not found; attempted paths: [{}]", listed.join(", "))
    })?;
    let img = image::open(&path).map_err(|e| format!("failed to load {}: {e}", path.display()))?;
    Ok((img, path))
}

fn bind_produced_image(
    ctx: &mut ToolCtx<'_>,
    image: &DynamicImage,
) -> Result<(String, String), String> {
    let key = ctx.fresh_image_key();
    let path = ctx.scratch_path(&format!("{key}.png"));
    image.save(&path).map_err(|e| format!("failed to save image: {e}"))?;
    ctx.memory
        .bind_image(&key, ImageArtifact::new(&path, image.width(), image.height()))
        .map_err(|e| e.to_string())?;
    let obs = ctx.next_observation_name();
    Ok((key, obs))
}

pub struct DocQueryTool {
    store: Arc<LazyDocStore>,
    schema: ToolSchema,
}

impl DocQueryTool {
    pub fn new(store: Arc<LazyDocStore>) -> Self {
        DocQueryTool {
            store,
            schema: ToolSchema {
                name: "doc_page_retrieval_by_query",
                description: "Retrieves the pages of a document most relevant to a natural-language query and returns them stitched left to right into one image.",
                parameters: vec![
                    ParamSpec::required("filename", ParamType::String, "Document identifier."),
                    ParamSpec::required("query", ParamType::String, "Natural-language search query."),
                ],
            },
        }
    }
}

impl Tool for DocQueryTool {
    fn schema(&self) -> &ToolSchema {
        &self.schema
    }

    fn execute(&self, args: &Map<String, Value>, ctx: &mut ToolCtx<'_>) -> ToolResponse {
        let store = self.store.get();
        let source = args["filename"].as_str().unwrap_or_default();
        let query = args["query"].as_str().unwrap_or_default();
        if !store.index().has_source(source) {
            return ToolResponse::error(format!(
                "unknown document {source:?}; indexed documents: [{}]",
                store.index().sources().join(", ")
            ));
        }
        let pages = match store.retrieve_pages(source, query) {
            Ok(pages) => pages,
            Err(e) => return ToolResponse::error(e),
        };
        if pages.is_empty() {
            return ToolResponse::ok(format!(
                "No pages of {source:?} matched the query. You may want to refine the query."
            ));
        }
        let mut images = Vec::with_capacity(pages.len());
        for &page in &pages {
            match load_page(&store, source, page) {
                Ok((img, _)) => images.push(img),
                Err(e) => return ToolResponse::error(e),
            }
        }
        let stitched = stitch_pages(&images, &store.cfg.stitch);
        let (key, obs) = match bind_produced_image(ctx, &stitched) {
            Ok(pair) => pair,
            Err(e) => return ToolResponse::error(e),
        };
        let listed: Vec<String> = pages.iter().map(u32::to_string).collect();
        ToolResponse::with_image(
            format!(
                "Retrieved pages [{}] of document {source:?}, stitched left to right in that order \
                 and bound as {key:?} ({obs}). If the retrieved context is not relevant, you may \
                 want to refine the query.",
                listed.join(", ")
            ),
            key,
        )
    }
}

pub struct DocIndexTool {
    store: Arc<LazyDocStore>,
    schema: ToolSchema,
}

impl DocIndexTool {
    pub fn new(store: Arc<LazyDocStore>) -> Self {
        DocIndexTool {
            store,
            schema: ToolSchema {
                name: "doc_page_retrieval_by_index",
                description: "Returns one specific page of a document as an image, bypassing dense retrieval. Page indices start from 1.",
                parameters: vec![
                    ParamSpec::required("filename", ParamType::String, "Document identifier."),
                    ParamSpec::required("image_idx", ParamType::Integer, "1-based page index."),
                ],
            },
        }
    }
}

impl Tool for DocIndexTool {
    fn schema(&self) -> &ToolSchema {
        &self.schema
    }

    fn execute(&self, args: &Map<String, Value>, ctx: &mut ToolCtx<'_>) -> ToolResponse {
        let store = self.store.get();
        let source = args["filename"].as_str().unwrap_or_default();
        if !store.index().has_source(source) {
            return ToolResponse::error(format!(
                "unknown document {source:?}; indexed documents: [{}]",
                store.index().sources().join(", ")
            ));
        }
        let idx = args["image_idx"].as_i64().unwrap_or_default();
        let count = store.page_count(source) as i64;
        if idx < 1 || idx > count {
            return ToolResponse::error(format!(
                "page index {idx} out of range for {source:?}: valid indices are 1..={count}"
            ));
        }
        let (image, _) = match load_page(&store, source, idx as u32) {
            Ok(pair) => pair,
            Err(e) => return ToolResponse::error(e),
        };
        let resized = resize_to_long_side(&image, store.cfg.stitch.max_side);
        let (key, obs) = match bind_produced_image(ctx, &resized) {
            Ok(pair) => pair,
            Err(e) => return ToolResponse::error(e),
        };
        ToolResponse::with_image(
            format!("Page {idx} of document {source:?} is bound as {key:?} ({obs})."),
            key,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::docretrieval::embed::HashEmbedder;
    use crate::memory::MemoryMap;
    use crate::toolkit::ToolRegistry;
    use crate::trajectory::ToolCall;
    use serde_json::json;

    fn write_page(root: &Path, source: &str, page: u32, ext: &str, text: Option<&str>) {
        let img = image::RgbImage::from_pixel(64, 96, image::Rgb([page as u8 * 10, 0, 0]));
        let path = root.join(format!("{source}_{page}.{ext}"));
        match ext {
            "png" => img.save(&path).unwrap(),
            _ => image::DynamicImage::ImageRgb8(img).save_with_format(&path, image::ImageFormat::Jpeg).unwrap(),
        }
        if let Some(t) = text {
            fs::write(root.join(format!("{source}_{page}.txt")), t).unwrap();
        }
    }

    fn fixture_store(root: &Path) -> Arc<LazyDocStore> {
        write_page(root, "report", 1, "png", Some("introduction and overview"));
        write_page(root, "report", 2, "png", Some("quarterly finance revenue numbers"));
        write_page(root, "report", 3, "jpg", Some("appendix with charts"));
        let embedder: Arc<dyn Embedder> = Arc::new(HashEmbedder::new(128, 3));
        let index = DocStore::build_from_image_root(embedder.as_ref(), root).unwrap();
        let cfg = DocStoreConfig::new(root);
        Arc::new(LazyDocStore::new(move || {
            DocStore::new(index.clone(), embedder.clone(), cfg.clone())
        }))
    }

    fn registry(store: Arc<LazyDocStore>) -> ToolRegistry {
        let mut reg = ToolRegistry::new();
        reg.register(Arc::new(DocQueryTool::new(store.clone()))).unwrap();
        reg.register(Arc::new(DocIndexTool::new(store))).unwrap();
        reg
    }

    fn call(name: &str, args: Value) -> ToolCall {
        ToolCall { name: name.into(), arguments: args.as_object().unwrap().clone() }
    }

    #[test]
    fn query_tool_ranks_the_matching_page_first() {
        let dir = tempfile::tempdir().unwrap();
        let store = fixture_store(dir.path());
        let scratch = tempfile::tempdir().unwrap();
        let mut mem = MemoryMap::new();
        let mut ctx = ToolCtx::new(&mut mem, scratch.path());
        let resp = registry(store).dispatch(
            &call(
                "doc_page_retrieval_by_query",
                json!({"filename": "report", "query": "quarterly finance revenue numbers"}),
            ),
            &mut ctx,
        );
        assert!(!resp.is_error, "{}", resp.text);
        assert!(resp.text.starts_with("Retrieved pages [2"), "{}", resp.text);
        assert!(resp.text.contains("refine the query"));
        assert_eq!(resp.images, vec!["img_0"]);
        assert!(mem.resolve_image("img_0").is_ok());
    }

    #[test]
    fn unknown_document_is_an_error_listing_sources() {
        let dir = tempfile::tempdir().unwrap();
        let store = fixture_store(dir.path());
        let scratch = tempfile::tempdir().unwrap();
        let mut mem = MemoryMap::new();
        let mut ctx = ToolCtx::new(&mut mem, scratch.path());
        let resp = registry(store).dispatch(
            &call("doc_page_retrieval_by_query", json!({"filename": "nope", "query": "x"})),
            &mut ctx,
        );
        assert!(resp.is_error);
        assert!(resp.text.contains("indexed documents: [report]"));
    }

    #[test]
    fn index_tool_fetches_one_page_with_extension_fallback() {
        let dir = tempfile::tempdir().unwrap();
        let store = fixture_store(dir.path());
        let scratch = tempfile::tempdir().unwrap();
        let mut mem = MemoryMap::new();
        let mut ctx = ToolCtx::new(&mut mem, scratch.path());
        // Page 3 is stored as .jpg; the .png candidate fails first.
        let resp = registry(store).dispatch(
            &call("doc_page_retrieval_by_index", json!({"filename": "report", "image_idx": 3})),
            &mut ctx,
        );
        assert!(!resp.is_error, "{}", resp.text);
        assert_eq!(resp.text, "Page 3 of document \"report\" is bound as \"img_0\" (observation_0).");
    }

    #[test]
    fn out_of_range_page_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let store = fixture_store(dir.path());
        let scratch = tempfile::tempdir().unwrap();
        let mut mem = MemoryMap::new();
        let mut ctx = ToolCtx::new(&mut mem, scratch.path());
        let resp = registry(store).dispatch(
            &call("doc_page_retrieval_by_index", json!({"filename": "report", "image_idx": 9})),
            &mut ctx,
        );
        assert!(resp.is_error);
        assert_eq!(
            resp.text,
            "page index 9 out of range for \"report\": valid indices are 1..=3"
        );
    }

    #[test]
    fn missing_page_image_lists_attempted_paths() {
        let dir = tempfile::tempdir().unwrap();
        let embedder: Arc<dyn Embedder> = Arc::new(HashEmbedder::new(64, 1));
        let mut index = VectorIndex::new();
        DocStore::ingest(&mut index, embedder.as_ref(), "ghost", &["page one".into()]).unwrap();
        let cfg = DocStoreConfig::new(dir.path());
        let root = dir.path().to_path_buf();
        let store = Arc::new(LazyDocStore::new(move || {
            DocStore::new(index.clone(), embedder.clone(), cfg.clone())
        }));
        let scratch = tempfile::tempdir().unwrap();
        let mut mem = MemoryMap::new();
        let mut ctx = ToolCtx::new(&mut mem, scratch.path());
        let resp = registry(store).dispatch(
            &call("doc_page_retrieval_by_index", json!({"filename": "ghost", "image_idx": 1})),
            &mut ctx,
        );
        assert!(resp.is_error);
        for ext in EXTENSION_FALLBACK {
            assert!(
                resp.text.contains(&root.join(format!("ghost_1.{ext}")).display().to_string()),
                "missing {ext} in: {}",
                resp.text
            );
        }
    }

    #[test]
    fn lazy_store_initializes_exactly_once_under_concurrency() {
        let dir = tempfile::tempdir().unwrap();
        let store = fixture_store(dir.path());
        std::thread::scope(|scope| {
            for _ in 0..16 {
                let store = store.clone();
                scope.spawn(move || {
                    let _ = store.get();
                });
            }
        });
        assert_eq!(store.load_count(), 1);
    }

    #[test]
    fn page_stem_parsing_handles_underscores() {
        assert_eq!(split_page_stem("report_3"), Some(("report", 3)));
        assert_eq!(split_page_stem("a_b_12"), Some(("a_b", 12)));
        assert_eq!(split_page_stem("nopage"), None);
        assert_eq!(split_page_stem("_3"), None);
    }
}
