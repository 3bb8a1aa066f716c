//! Extraction and analysis over whole corpora, with tile loading and
//! per-intersection analysis spread over a thread pool.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use roadforge_core::analyzer::{analyze, collect_report, AnalysisReport, AnalyzeConfig, AnalyzedIntersection, IntersectionType};
use roadforge_core::extractor::{extract, ExtractConfig, RawIntersection};
use roadforge_core::maptile::MapTile;
use roadforge_core::stats::{aggregate, fit_normal, Binning, Filters, Parameter, ParameterDistribution, StatsError};

use crate::tilefile::{read_tile, TileError};

pub const TILE_SUFFIX: &str = ".tile.json";
pub const TYPES: [IntersectionType; 4] = [IntersectionType::T3, IntersectionType::Y3, IntersectionType::X4, IntersectionType::K4];

/// `*.tile.json` files directly inside `dir`, sorted by name.
pub fn tile_paths(dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for e in std::fs::read_dir(dir)? {
        let p = e?.path();
        if p.is_file() && p.file_name().is_some_and(|n| n.to_string_lossy().ends_with(TILE_SUFFIX)) {
            out.push(p);
        }
    }
    out.sort();
    Ok(out)
}

/// Loads tiles in parallel; the first failure in path order is reported.
pub fn load_tiles(paths: &[PathBuf]) -> Result<Vec<MapTile>, (PathBuf, TileError)> {
    let loaded: Vec<_> = paths.par_iter().map(|p| read_tile(p)).collect();
    loaded.into_iter().zip(paths).map(|(r, p)| r.map_err(|e| (p.clone(), e))).collect()
}

pub fn extract_corpus(tiles: &[MapTile], cfg: &ExtractConfig) -> Vec<RawIntersection> {
    extract(tiles, cfg)
}

/// Analyzes every intersection; the report keeps input order.
pub fn analyze_corpus(inters: &[RawIntersection], cfg: &AnalyzeConfig) -> AnalysisReport {
    collect_report(inters.par_iter().map(|i| analyze(i, cfg)).collect())
}

fn distributions_for(
    analyzed: &[AnalyzedIntersection],
    filters: &Filters,
    skip_type: bool,
    out: &mut Vec<ParameterDistribution>,
) -> Result<(), StatsError> {
    for p in Parameter::ALL {
        if skip_type && p == Parameter::Type {
            continue;
        }
        match aggregate(analyzed, p, p.scope(), filters, &Binning::Auto) {
            Ok(mut d) => {
                if d.n >= 2 {
                    fit_normal(&mut d)?;
                }
                out.push(d);
            }
            Err(StatsError::NoSamples) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(())
}

/// One record per parameter with samples under `filters`. Without a `type`
/// filter, per-type records for each intersection type follow.
pub fn build_distributions(analyzed: &[AnalyzedIntersection], filters: &Filters) -> Result<Vec<ParameterDistribution>, StatsError> {
    filters.validate()?;
    let mut out = Vec::new();
    distributions_for(analyzed, filters, false, &mut out)?;
    if filters.get("type").is_none() {
        for t in TYPES {
            distributions_for(analyzed, &filters.clone().with("type", t.as_str()), true, &mut out)?;
        }
    }
    Ok(out)
}

/// File name for a distribution's plot, unique within one analysis run.
pub fn plot_file_name(d: &ParameterDistribution) -> String {
    let mut name = format!("{}_{}", d.parameter.as_str(), d.scope.as_str());
    for (k, v) in &d.filters.0 {
        let v: String = v.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '-' }).collect();
        name.push_str(&format!("_{k}-{v}"));
    }
    name.push_str(".svg");
    name
}
