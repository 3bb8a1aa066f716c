//! Batch generation: sample, resolve and emit `n` maps from one template.
//!
//! Every map is a pure function of (template, bindings from distributions,
//! master seed, map index), so maps are computed in parallel and written in
//! index order afterwards.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use roadforge_core::netgen::{plan_to_tile, resolve, NetworkTemplate};
use roadforge_core::projection::LonLat;
use roadforge_core::stats::ParameterDistribution;
use roadforge_core::variation::{bind_all, sample, SampleContext, VariationError};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::odr::emit_opendrive;
use crate::records::{write_file, write_json, RecordError};
use crate::template::{parse_template, TemplateError};
use crate::tilefile::serialize_tile;

pub const MANIFEST_FILE: &str = "manifest.json";
/// First tile anchor; later maps step by `TILE_ANCHOR_STEP_DEG` on a grid
/// `TILE_GRID_COLUMNS` wide so emitted tiles never overlap.
pub const TILE_ANCHOR_ORIGIN: LonLat = LonLat { lon: 13.4, lat: 52.5 };
pub const TILE_ANCHOR_STEP_DEG: f64 = 0.02;
pub const TILE_GRID_COLUMNS: u64 = 50;

#[derive(Debug, thiserror::Error)]
pub enum GenerateError {
    #[error("n must be at least 1")]
    EmptyBatch,
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("binding distributions: {0}")]
    Binding(#[from] VariationError),
    #[error(transparent)]
    Record(#[from] RecordError),
    #[error("thread pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone)]
pub struct GenerateOptions {
    pub n: u64,
    pub master_seed: u64,
    pub out_dir: PathBuf,
    pub emit_tiles: bool,
    pub force: bool,
    /// Worker count; `None` lets the pool decide.
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapEntry {
    pub index: u64,
    pub status: MapStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sha256: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tile: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub bindings: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub template: String,
    pub template_sha256: String,
    pub master_seed: u64,
    pub n: u64,
    pub succeeded: u64,
    pub failed: u64,
    pub maps: Vec<MapEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

pub fn map_file_name(index: u64) -> String {
    format!("map_{index:04}.xodr")
}

pub fn tile_file_name(index: u64) -> String {
    format!("map_{index:04}.tile.json")
}

pub fn tile_anchor(index: u64) -> LonLat {
    let (col, row) = (index % TILE_GRID_COLUMNS, index / TILE_GRID_COLUMNS);
    LonLat::new(
        TILE_ANCHOR_ORIGIN.lon + TILE_ANCHOR_STEP_DEG * col as f64,
        TILE_ANCHOR_ORIGIN.lat + TILE_ANCHOR_STEP_DEG * row as f64,
    )
}

struct MapOutput {
    entry: MapEntry,
    xodr: Option<String>,
    tile: Option<String>,
}

fn generate_one(template: &NetworkTemplate, hash: &str, index: u64, opts: &GenerateOptions) -> MapOutput {
    let ctx = SampleContext::new(opts.master_seed, index);
    let failed = |bindings, error: String| MapOutput {
        entry: MapEntry { index, status: MapStatus::Failed, file: None, sha256: None, tile: None, error: Some(error), bindings },
        xodr: None,
        tile: None,
    };
    let bindings = match sample(&template.vars, &ctx) {
        Ok(b) => b,
        Err(e) => return failed(BTreeMap::new(), format!("sampling: {e}")),
    };
    let mut plan = match resolve(template, &bindings) {
        Ok(p) => p,
        Err(e) => return failed(bindings, e.to_string()),
    };
    plan.meta.master_seed = opts.master_seed;
    plan.meta.map_index = index;
    plan.meta.template_hash = hash.to_string();
    let xodr = match emit_opendrive(&plan) {
        Ok((_, xml)) => xml,
        Err(e) => return failed(bindings, e.to_string()),
    };
    let tile = opts.emit_tiles.then(|| {
        let id = format!("map_{index:04}");
        serialize_tile(&plan_to_tile(&plan, &id, tile_anchor(index), &format!("m{index:04}_")))
    });
    MapOutput {
        entry: MapEntry {
            index,
            status: MapStatus::Ok,
            file: Some(map_file_name(index)),
            sha256: Some(sha256_hex(xodr.as_bytes())),
            tile: tile.as_ref().map(|_| tile_file_name(index)),
            error: None,
            bindings,
        },
        xodr: Some(xodr),
        tile,
    }
}

/// Generates the batch into `opts.out_dir`. Per-map failures are recorded
/// in the manifest and do not stop the batch; the returned manifest says
/// how many failed.
pub fn generate_batch(
    template_xml: &str,
    template_name: &str,
    distributions: &[ParameterDistribution],
    opts: &GenerateOptions,
) -> Result<Manifest, GenerateError> {
    if opts.n == 0 {
        return Err(GenerateError::EmptyBatch);
    }
    let mut template = parse_template(template_xml)?;
    template.vars = bind_all(&template.vars, distributions)?;
    let hash = sha256_hex(template_xml.as_bytes());

    // Refuse before doing any work if an output would be replaced.
    if !opts.force {
        let mut targets = vec![opts.out_dir.join(MANIFEST_FILE)];
        for i in 0..opts.n {
            targets.push(opts.out_dir.join(map_file_name(i)));
            if opts.emit_tiles {
                targets.push(opts.out_dir.join(tile_file_name(i)));
            }
        }
        if let Some(p) = targets.iter().find(|p| p.exists()) {
            return Err(RecordError::Exists(p.display().to_string()).into());
        }
    }

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = opts.threads {
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| GenerateError::Pool(e.to_string()))?;
    let outputs: Vec<MapOutput> =
        pool.install(|| (0..opts.n).into_par_iter().map(|i| generate_one(&template, &hash, i, opts)).collect());

    let mut maps = Vec::with_capacity(outputs.len());
    for o in outputs {
        if let Some(x) = &o.xodr {
            write_file(&opts.out_dir.join(map_file_name(o.entry.index)), x.as_bytes(), opts.force)?;
        }
        if let Some(t) = &o.tile {
            write_file(&opts.out_dir.join(tile_file_name(o.entry.index)), t.as_bytes(), opts.force)?;
        }
        maps.push(o.entry);
    }
    let failed = maps.iter().filter(|m| m.status == MapStatus::Failed).count() as u64;
    let manifest = Manifest {
        template: template_name.to_string(),
        template_sha256: hash,
        master_seed: opts.master_seed,
        n: opts.n,
        succeeded: opts.n - failed,
        failed,
        maps,
    };
    write_json(&opts.out_dir.join(MANIFEST_FILE), &manifest, opts.force)?;
    Ok(manifest)
}

/// File name component used in the manifest for a template path.
pub fn template_display_name(path: &Path) -> String {
    path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned())
}
