//! Line-delimited JSON storage for [`KnowledgeBase`].
//!
//! ```text
//! {"slkb_version":1,"embedding":"ngram3-tok-256"}
//! {"desc":"blue bridge","pts":[{"x":1.0,"y":2.0,"z":3.0,"c":0.9}]}
//! ```

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{EmbeddingProvider, KnowledgeBase, NgramEmbedder, ScoredPosition, SlkbError};
use crate::geometry::WorldPoint;

pub const KB_FORMAT_VERSION: u64 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    slkb_version: u64,
    embedding: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Point {
    x: f64,
    y: f64,
    z: f64,
    c: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Entry {
    desc: String,
    pts: Vec<Point>,
}

impl KnowledgeBase {
    pub fn write_to<W: Write>(&self, mut writer: W) -> Result<(), SlkbError> {
        let header = Header {
            slkb_version: KB_FORMAT_VERSION,
            embedding: self.provider.id().to_string(),
        };
        writeln!(writer, "{}", to_json(&header))?;
        for (desc, positions) in &self.entries {
            let entry = Entry {
                desc: desc.clone(),
                pts: positions
                    .iter()
                    .map(|p| Point {
                        x: p.position.x,
                        y: p.position.y,
                        z: p.position.z,
                        c: p.confidence,
                    })
                    .collect(),
            };
            writeln!(writer, "{}", to_json(&entry))?;
        }
        writer.flush()?;
        Ok(())
    }

    /// Reads a knowledge base, re-embedding keys with `provider`. The file's
    /// embedding id must match the provider's.
    pub fn read_from<R: BufRead>(
        reader: R,
        provider: Arc<dyn EmbeddingProvider>,
    ) -> Result<Self, SlkbError> {
        let mut lines = reader.lines().enumerate();
        let (_, first) = lines.next().ok_or(SlkbError::Parse {
            line: 1,
            message: "missing header".into(),
        })?;
        let header: Header = serde_json::from_str(&first?).map_err(|e| SlkbError::Parse {
            line: 1,
            message: e.to_string(),
        })?;
        if header.slkb_version != KB_FORMAT_VERSION {
            return Err(SlkbError::Version {
                found: header.slkb_version,
                expected: KB_FORMAT_VERSION,
            });
        }
        if header.embedding != provider.id() {
            return Err(SlkbError::ProviderMismatch {
                file: header.embedding,
                provider: provider.id().to_string(),
            });
        }
        let mut kb = KnowledgeBase::new(provider);
        for (idx, line) in lines {
            let line_no = idx + 1;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parse_err = |message: String| SlkbError::Parse {
                line: line_no,
                message,
            };
            let entry: Entry = serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
            if entry.desc.trim().is_empty() {
                return Err(parse_err("empty description".into()));
            }
            if entry.pts.is_empty() {
                return Err(parse_err(format!("no positions for `{}`", entry.desc)));
            }
            if kb.entries.contains_key(&entry.desc) {
                return Err(parse_err(format!("duplicate description `{}`", entry.desc)));
            }
            let positions = entry
                .pts
                .into_iter()
                .map(|p| ScoredPosition {
                    position: WorldPoint::new(p.x, p.y, p.z),
                    confidence: p.c,
                })
                .collect();
            kb.insert_raw(entry.desc, positions)?;
        }
        Ok(kb)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), SlkbError> {
        self.write_to(BufWriter::new(File::create(path)?))
    }

    /// Loads with the default n-gram provider.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, SlkbError> {
        Self::load_with(path, Arc::new(NgramEmbedder))
    }

    pub fn load_with(
        path: impl AsRef<Path>,
        provider: Arc<dyn EmbeddingProvider>,
    ) -> Result<Self, SlkbError> {
        Self::read_from(BufReader::new(File::open(path)?), provider)
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("plain structs serialize")
}
