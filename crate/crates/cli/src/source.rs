//! Where posteriorgrams come from: a GRU weight file, or a synthetic spec
//! that maps each clip to phone segments.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use wordverify::corpus_io::{
    content_key, parse_wav, read_posteriorgrams, write_features, write_posteriorgrams, AudioClip,
};
use wordverify::frontend::{extract_features, FeatureSequence};
use wordverify::model::{class_list_hash, load_model, synthesize_posteriorgrams};
use wordverify::{FrontendConfig, GruModel, PosteriorgramSequence};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthClip {
    /// `(class index, frame count)` per segment.
    pub segments: Vec<(usize, usize)>,
    pub peak: f64,
    pub seed: u64,
}

/// Keys are audio paths exactly as written in the manifests.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub clips: BTreeMap<String, SynthClip>,
}

impl SyntheticSpec {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::format(path, e))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("spec serializes");
        std::fs::write(path, text).map_err(|e| CliError::io(path, e))
    }
}

pub enum Source {
    Model(GruModel),
    Synthetic { spec: SyntheticSpec, id: String },
}

impl Source {
    pub fn open(model: Option<&Path>, synthetic: Option<&Path>) -> Result<Self> {
        match (model, synthetic) {
            (Some(m), None) => Ok(Source::Model(load_model(m)?)),
            (None, Some(s)) => {
                let bytes = std::fs::read(s).map_err(|e| CliError::io(s, e))?;
                let spec = SyntheticSpec::load(s)?;
                Ok(Source::Synthetic {
                    spec,
                    id: format!("synthetic-{}", &content_key(&bytes, "")[..16]),
                })
            }
            _ => Err(CliError::Usage(
                "exactly one of --model or --synthetic is required".into(),
            )),
        }
    }

    /// Identifier folded into cache keys; includes the class list so a
    /// reordered inventory never reuses stale posteriorgrams.
    pub fn id(&self) -> String {
        let base = match self {
            Source::Model(m) => m.id(),
            Source::Synthetic { id, .. } => id.clone(),
        };
        format!("{base}+{}", class_list_hash())
    }

    fn posteriorgram(&self, key: &str, features: &FeatureSequence) -> Result<PosteriorgramSequence> {
        match self {
            Source::Model(m) => Ok(m.infer_posteriorgrams(features)?),
            Source::Synthetic { spec, .. } => {
                let clip = spec
                    .clips
                    .get(key)
                    .ok_or_else(|| CliError::MissingSynthetic(key.to_string()))?;
                Ok(synthesize_posteriorgrams(&clip.segments, clip.peak, clip.seed)?)
            }
        }
    }
}

/// One audio file referenced by a manifest.
pub struct Clip {
    /// Path as written in the manifest.
    pub key: String,
    pub path: PathBuf,
    pub bytes: Vec<u8>,
    pub audio: AudioClip,
}

impl Clip {
    pub fn load(base: &Path, rel: &str) -> Result<Self> {
        let path = base.join(rel);
        let bytes = std::fs::read(&path).map_err(|e| CliError::io(&path, e))?;
        let audio = parse_wav(&bytes, false)?;
        Ok(Self {
            key: rel.to_string(),
            path,
            bytes,
            audio,
        })
    }
}

pub struct Engine {
    pub source: Source,
    pub frontend: FrontendConfig,
    source_id: String,
    cache_dir: Option<PathBuf>,
    dump_dir: Option<PathBuf>,
}

fn round_f32(mut seq: PosteriorgramSequence) -> PosteriorgramSequence {
    for row in &mut seq.frames {
        for v in row.iter_mut() {
            *v = *v as f32 as f64;
        }
    }
    seq
}

impl Engine {
    pub fn new(source: Source) -> Self {
        let source_id = source.id();
        Self {
            source,
            frontend: FrontendConfig::default(),
            source_id,
            cache_dir: None,
            dump_dir: None,
        }
    }

    pub fn with_cache(mut self, dir: Option<PathBuf>) -> Self {
        self.cache_dir = dir;
        self
    }

    pub fn with_feature_dump(mut self, dir: Option<PathBuf>) -> Self {
        self.dump_dir = dir;
        self
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    pub fn cache_path(&self, clip: &Clip) -> Option<PathBuf> {
        self.cache_dir
            .as_ref()
            .map(|d| d.join(format!("{}.pg", content_key(&clip.bytes, &self.source_id))))
    }

    pub fn features(&self, clip: &Clip) -> Result<FeatureSequence> {
        let f = extract_features(&clip.audio, &self.frontend)?;
        if let Some(dir) = &self.dump_dir {
            let name = format!("{}.ft", content_key(&clip.bytes, "features"));
            write_features(dir.join(name), &f)?;
        }
        Ok(f)
    }

    /// Feature extraction and inference without touching the cache. Values
    /// are rounded to the container's f32 precision so cached and fresh runs
    /// agree bit for bit.
    pub fn compute(&self, clip: &Clip) -> Result<PosteriorgramSequence> {
        let f = self.features(clip)?;
        Ok(round_f32(self.source.posteriorgram(&clip.key, &f)?))
    }

    pub fn posteriorgram(&self, clip: &Clip) -> Result<PosteriorgramSequence> {
        let Some(path) = self.cache_path(clip) else {
            return self.compute(clip);
        };
        if path.exists() {
            return Ok(read_posteriorgrams(&path, &self.source_id)?);
        }
        let mut pg = self.compute(clip)?;
        write_posteriorgrams(&path, &pg)?;
        pg.source_id = self.source_id.clone();
        Ok(pg)
    }
}
