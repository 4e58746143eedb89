//! Text embedding behind a small interface.
//!
//! Two backends: a remote embeddings endpoint for real runs, and a
//! deterministic test embedder that hashes character n-grams into a
//! fixed-dimension vector. Both produce unit-normalized vectors.

use serde_json::json;
use thiserror::Error;

pub const DEFAULT_EMBED_DIM: usize = 512;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("embedding backend unavailable: {0}")]
    BackendUnavailable(String),
}

pub trait Embedder: Send + Sync {
    fn dim(&self) -> usize;
    /// Same text, same vector; every vector has unit L2 norm.
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, EmbedError>;
}

pub fn cosine(a: &[f32], b: &[f32]) -> f32 {
    let dot: f32 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f32 = a.iter().map(|x| x * x).sum::<f32>().sqrt();
    let nb: f32 = b.iter().map(|x| x * x).sum::<f32>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

pub fn l2_normalize(v: &mut [f32]) {
    let norm: f32 = v.iter().map(|x| x * x).sum::<f32>().sqrt();
    if norm > 0.0 {
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
}

/// Deterministic test embedder: seeded FNV-1a hashes of character n-grams
/// (n = 1..=3) scattered into sign buckets. Shared n-grams between texts
/// yield higher cosine, which is all the ranking tests need.
#[derive(Debug, Clone)]
pub struct HashEmbedder {
    dim: usize,
    seed: u64,
}

impl HashEmbedder {
    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        HashEmbedder { dim, seed }
    }
}

impl Default for HashEmbedder {
    fn default() -> Self {
        HashEmbedder::new(DEFAULT_EMBED_DIM, 0)
    }
}

fn fnv1a(bytes: &[u8], seed: u64) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64 ^ seed.wrapping_mul(0x0100_0000_01b3);
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0100_0000_01b3);
    }
    hash
}

impl Embedder for HashEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, EmbedError> {
        Ok(texts
            .iter()
            .map(|text| {
                let mut v = vec![0.0f32; self.dim];
                let chars: Vec<char> = text.to_lowercase().chars().collect();
                for n in 1..=3usize {
                    for window in chars.windows(n.min(chars.len().max(1))) {
                        if window.len() != n {
                            continue;
                        }
                        let gram: String = window.iter().collect();
                        let hash = fnv1a(gram.as_bytes(), self.seed.wrapping_add(n as u64));
                        let bucket = ((hash >> 1) % self.dim as u64) as usize;
                        let sign = if hash & 1 == 0 { 1.0 } else { -1.0 };
                        v[bucket] += sign;
                    }
                }
                if v.iter().all(|x| *x == 0.0) {
                    v[0] = 1.0;
                }
                l2_normalize(&mut v);
                v
            })
            .collect())
    }
}

/// OpenAI-style `/embeddings` endpoint backend.
pub struct RemoteEmbedder {
    endpoint: String,
    model: String,
    api_key: Option<String>,
    dim: usize,
    client: reqwest::blocking::Client,
}

impl RemoteEmbedder {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>, api_key: Option<String>, dim: usize) -> Self {
        RemoteEmbedder {
            endpoint: endpoint.into(),
            model: model.into(),
            api_key,
            dim,
            client: reqwest::blocking::Client::new(),
        }
    }
}

impl Embedder for RemoteEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, EmbedError> {
        let mut req = self.client.post(&self.endpoint).json(&json!({
            "model": self.model,
            "input": texts,
        }));
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| EmbedError::BackendUnavailable(e.to_string()))?;
        if !resp.status().is_success() {
            return Err(EmbedError::BackendUnavailable(format!(
                "endpoint returned {}",
                resp.status()
            )));
        }
        let body: serde_json::Value =
            resp.json().map_err(|e| EmbedError::BackendUnavailable(e.to_string()))?;
        let data = body["data"]
            .as_array()
            .ok_or_else(|| EmbedError::BackendUnavailable("missing data array".into()))?;
        let mut out = Vec::with_capacity(data.len());
        for item in data {
            let mut v: Vec<f32> = item["embedding"]
                .as_array()
                .ok_or_else(|| EmbedError::BackendUnavailable("missing embedding".into()))?
                .iter()
                .map(|x| x.as_f64().unwrap_or(0.0) as f32)
                .collect();
            if v.len() != self.dim {
                return Err(EmbedError::BackendUnavailable(format!(
                    "expected dimension {}, got {}",
                    self.dim,
                    v.len()
                )));
            }
            l2_normalize(&mut v);
            out.push(v);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_texts_embed_identically() {
        let e = HashEmbedder::default();
        let vs = e.embed(&["a".into(), "a".into()]).unwrap();
        assert_eq!(vs[0], vs[1]);
    }

    #[test]
    fn vectors_are_unit_norm() {
        let e = HashEmbedder::default();
        for text in ["x", "red apple", "a longer piece of text with words"] {
            let v = &e.embed(&[text.into()]).unwrap()[0];
            let norm: f32 = v.iter().map(|x| x * x).sum::<f32>().sqrt();
            assert!((norm - 1.0).abs() < 1e-6, "norm of {text:?} = {norm}");
        }
    }

    #[test]
    fn shared_ngrams_raise_cosine() {
        let e = HashEmbedder::default();
        let vs = e
            .embed(&["red apple".into(), "red apple pie".into(), "quantum flux".into()])
            .unwrap();
        let near = cosine(&vs[0], &vs[1]);
        let far = cosine(&vs[0], &vs[2]);
        assert!(near > far, "near={near} far={far}");
    }

    #[test]
    fn different_seeds_give_different_spaces() {
        let a = HashEmbedder::new(64, 1).embed(&["abc".into()]).unwrap();
        let b = HashEmbedder::new(64, 2).embed(&["abc".into()]).unwrap();
        assert_ne!(a, b);
    }
}
