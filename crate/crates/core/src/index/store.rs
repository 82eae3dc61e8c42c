//! On-disk index directory.
//!
//! ```text
//! manifest.json  format version, dimension, count, graph params, seed, sha256 of each file
//! vectors.bin    count x dimension little-endian f32
//! codes.bin      count x ceil(dimension / 8) bytes, bit 0 = LSB of byte 0
//! graph.bin      u32 entry point (u32::MAX when empty), u32 max level, then per node:
//!                u32 level, and for each layer 0..=level a u32 count and that many u32 ids
//! meta.jsonl     one entry per node, in node order
//! ```
//! All integers are little-endian.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::binary::{words_for, BinaryCode};
use super::hnsw::{CodeStore, Hnsw, HnswParams};
use super::meta::EntryMeta;
use super::scoring::norm;
use super::search::VectorIndex;
use super::IndexError;

pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const VECTORS_FILE: &str = "vectors.bin";
pub const CODES_FILE: &str = "codes.bin";
pub const GRAPH_FILE: &str = "graph.bin";
pub const META_FILE: &str = "meta.jsonl";
const DATA_FILES: [&str; 4] = [VECTORS_FILE, CODES_FILE, GRAPH_FILE, META_FILE];
const NO_ENTRY: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub dimension: usize,
    pub count: usize,
    pub hnsw_params: HnswParams,
    pub rng_seed: u64,
    /// file name -> lowercase hex sha256
    pub checksums: BTreeMap<String, String>,
}

impl Manifest {
    pub fn read(dir: &Path) -> Result<Self, IndexError> {
        let text = fs::read_to_string(dir.join(MANIFEST_FILE))?;
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| IndexError::Corrupt(format!("{MANIFEST_FILE}: {e}")))?;
        let found = value
            .get("format_version")
            .and_then(serde_json::Value::as_u64);
        if found != Some(FORMAT_VERSION as u64) {
            return Err(IndexError::VersionMismatch {
                expected: FORMAT_VERSION.to_string(),
                found: found.map_or_else(|| "missing".to_string(), |v| v.to_string()),
            });
        }
        serde_json::from_value(value)
            .map_err(|e| IndexError::Corrupt(format!("{MANIFEST_FILE}: {e}")))
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Write to a sibling temp file, then rename over the target.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), IndexError> {
    let tmp = path.with_extension("tmp");
    {
        let mut file = fs::File::create(&tmp)?;
        file.write_all(bytes)?;
        file.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn encode_graph(graph: &Hnsw) -> Vec<u8> {
    let mut out = Vec::new();
    let mut put = |x: u32| out.extend_from_slice(&x.to_le_bytes());
    put(graph.entry_point.unwrap_or(NO_ENTRY));
    put(graph.max_level as u32);
    for layers in &graph.links {
        put((layers.len() - 1) as u32);
        for list in layers {
            put(list.len() as u32);
            for &n in list {
                put(n);
            }
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl Reader<'_> {
    fn u32(&mut self) -> Result<u32, IndexError> {
        let end = self.at + 4;
        let chunk = self
            .bytes
            .get(self.at..end)
            .ok_or_else(|| IndexError::Corrupt(format!("{GRAPH_FILE}: truncated")))?;
        self.at = end;
        Ok(u32::from_le_bytes(chunk.try_into().expect("4 bytes")))
    }
}

fn decode_graph(bytes: &[u8], count: usize, params: HnswParams) -> Result<Hnsw, IndexError> {
    let corrupt = |what: &str| IndexError::Corrupt(format!("{GRAPH_FILE}: {what}"));
    let mut r = Reader { bytes, at: 0 };
    let entry = r.u32()?;
    let max_level = r.u32()? as usize;
    let mut links = Vec::with_capacity(count);
    for _ in 0..count {
        let level = r.u32()? as usize;
        if level > max_level {
            return Err(corrupt("node level above max level"));
        }
        let mut layers = Vec::with_capacity(level + 1);
        for _ in 0..=level {
            let n = r.u32()? as usize;
            let mut list = Vec::with_capacity(n.min(1024));
            for _ in 0..n {
                let id = r.u32()?;
                if id as usize >= count {
                    return Err(corrupt("neighbor out of range"));
                }
                list.push(id);
            }
            layers.push(list);
        }
        links.push(layers);
    }
    if r.at != bytes.len() {
        return Err(corrupt("trailing bytes"));
    }
    let entry_point = match entry {
        NO_ENTRY if count == 0 => None,
        e if (e as usize) < count => Some(e),
        _ => return Err(corrupt("bad entry point")),
    };
    Ok(Hnsw {
        params,
        links,
        entry_point,
        max_level,
    })
}

impl VectorIndex {
    /// Write the index into `dir`, creating it if needed. The manifest is
    /// written last, so a reader never sees checksums for files that are
    /// not yet in place.
    pub fn save(&self, dir: &Path) -> Result<Manifest, IndexError> {
        fs::create_dir_all(dir)?;
        let vectors: Vec<u8> = self.vectors.iter().flat_map(|x| x.to_le_bytes()).collect();
        let mut codes = Vec::with_capacity(self.len() * self.dimension.div_ceil(8));
        for node in 0..self.len() as u32 {
            let code = BinaryCode::from_words(self.dimension, self.codes.get(node).to_vec());
            codes.extend_from_slice(&code.to_bytes());
        }
        let graph = encode_graph(&self.graph);
        let mut meta = String::new();
        for entry in &self.metas {
            meta.push_str(
                &serde_json::to_string(entry).map_err(|e| IndexError::Corrupt(e.to_string()))?,
            );
            meta.push('\n');
        }
        let files: [(&str, &[u8]); 4] = [
            (VECTORS_FILE, &vectors),
            (CODES_FILE, &codes),
            (GRAPH_FILE, &graph),
            (META_FILE, meta.as_bytes()),
        ];
        let mut checksums = BTreeMap::new();
        for (name, bytes) in files {
            write_atomic(&dir.join(name), bytes)?;
            checksums.insert(name.to_string(), sha256_hex(bytes));
        }
        let manifest = Manifest {
            format_version: FORMAT_VERSION,
            dimension: self.dimension,
            count: self.len(),
            hnsw_params: *self.graph.params(),
            rng_seed: self.graph.params().rng_seed,
            checksums,
        };
        let mut text = serde_json::to_string_pretty(&manifest)
            .map_err(|e| IndexError::Corrupt(e.to_string()))?;
        text.push('\n');
        write_atomic(&dir.join(MANIFEST_FILE), text.as_bytes())?;
        Ok(manifest)
    }

    pub fn load(dir: &Path) -> Result<Self, IndexError> {
        let manifest = Manifest::read(dir)?;
        manifest.hnsw_params.validate()?;
        if manifest.rng_seed != manifest.hnsw_params.rng_seed {
            return Err(IndexError::Corrupt("manifest seeds disagree".into()));
        }
        let mut blobs = HashMap::new();
        for name in DATA_FILES {
            let bytes = fs::read(dir.join(name))?;
            let expected = manifest
                .checksums
                .get(name)
                .ok_or_else(|| IndexError::Corrupt(format!("no checksum for {name}")))?;
            if &sha256_hex(&bytes) != expected {
                return Err(IndexError::ChecksumMismatch {
                    file: name.to_string(),
                });
            }
            blobs.insert(name, bytes);
        }
        let (dim, count) = (manifest.dimension, manifest.count);
        let vectors_raw = &blobs[VECTORS_FILE];
        if vectors_raw.len() != count * dim * 4 {
            return Err(IndexError::Corrupt(format!("{VECTORS_FILE}: wrong length")));
        }
        let vectors: Vec<f32> = vectors_raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        let code_bytes = dim.div_ceil(8);
        let codes_raw = &blobs[CODES_FILE];
        if codes_raw.len() != count * code_bytes {
            return Err(IndexError::Corrupt(format!("{CODES_FILE}: wrong length")));
        }
        let mut codes = CodeStore::new(words_for(dim));
        for chunk in codes_raw.chunks_exact(code_bytes.max(1)).take(count) {
            codes.push(BinaryCode::from_bytes(dim, chunk)?.words());
        }
        let meta_text = std::str::from_utf8(&blobs[META_FILE])
            .map_err(|e| IndexError::Corrupt(format!("{META_FILE}: {e}")))?;
        let metas: Vec<EntryMeta> = meta_text
            .lines()
            .filter(|l| !l.is_empty())
            .map(|l| {
                serde_json::from_str(l)
                    .map_err(|e| IndexError::Corrupt(format!("{META_FILE}: {e}")))
            })
            .collect::<Result<_, _>>()?;
        if metas.len() != count {
            return Err(IndexError::Corrupt(format!(
                "{META_FILE}: expected {count} entries"
            )));
        }
        let graph = decode_graph(&blobs[GRAPH_FILE], count, manifest.hnsw_params)?;
        let mut ids = HashMap::with_capacity(count);
        for (node, m) in metas.iter().enumerate() {
            if ids
                .insert(m.record.record_id.clone(), node as u32)
                .is_some()
            {
                return Err(IndexError::DuplicateId(m.record.record_id.clone()));
            }
        }
        let norms = vectors.chunks_exact(dim).map(norm).collect();
        Ok(VectorIndex {
            dimension: dim,
            vectors,
            norms,
            codes,
            metas,
            ids,
            graph,
        })
    }
}
