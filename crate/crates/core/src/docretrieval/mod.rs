//! Document page retrieval.
//!
//! Pages are pre-rendered images under an image root with the
//! `{filename}_{page}.{ext}` naming pattern. Page texts are embedded into
//! unit vectors and ranked by exact brute-force cosine against the query;
//! corpora are tens of pages per document, so exactness is cheap and keeps
//! the ranking oracle-checkable. The store persists as one flat file of
//! records and initializes at most once under a lazy guard.

pub mod embed;
pub mod index;
pub mod stitch;
pub mod tools;

pub use embed::{cosine, Embedder, EmbedError, HashEmbedder, RemoteEmbedder};
pub use index::{IndexError, PageRecord, VectorIndex};
pub use stitch::{resize_to_long_side, stitch_pages, StitchConfig};
pub use tools::{DocIndexTool, DocQueryTool, DocStore, DocStoreConfig, LazyDocStore};
