//! Command-line entry point.
//!
//! Exit codes: 0 success, 1 findings or failures, 2 usage errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use rayon::ThreadPool;
use roadforge_core::analyzer::AnalyzeConfig;
use roadforge_core::extractor::ExtractConfig;
use roadforge_core::stats::Filters;

use crate::generate::{generate_batch, template_display_name, GenerateOptions, MapStatus};
use crate::odrcheck::{has_errors, validate_file, Severity};
use crate::pipeline::{analyze_corpus, build_distributions, extract_corpus, load_tiles, plot_file_name, tile_paths};
use crate::records::{read_distributions, read_intersections, write_file, write_json};
use crate::svg::{render_histogram, BarScale};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "roadforge", version, about = "Intersection statistics from map tiles and stochastic OpenDRIVE generation")]
pub struct Cli {
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long, global = true, env = "ROADFORGE_THREADS", value_parser = clap::value_parser!(u16).range(1..))]
    pub threads: Option<u16>,
    /// Replace existing output files.
    #[arg(long, global = true)]
    pub force: bool,
    /// Print per-item details.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Find intersections in a directory of `.tile.json` files.
    Extract {
        #[arg(long)]
        tiles: PathBuf,
        /// Output `.intersections.json`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Classify and measure intersections and write their distributions.
    Analyze {
        /// Input `.intersections.json`.
        #[arg(long = "in")]
        input: PathBuf,
        /// Output `.distributions.json`.
        #[arg(long)]
        out: PathBuf,
        /// Directory for one SVG histogram per distribution.
        #[arg(long)]
        plots: Option<PathBuf>,
        /// Corpus filter `key=value`; repeatable.
        #[arg(long = "filter", value_parser = parse_filter)]
        filters: Vec<(String, String)>,
        /// Drop lanes flagged as suspect.
        #[arg(long)]
        exclude_suspect: bool,
        /// Also write the per-intersection `.analyzed.json`.
        #[arg(long)]
        analyzed: Option<PathBuf>,
    },
    /// Generate OpenDRIVE maps from a template.
    Generate {
        #[arg(long)]
        template: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// `.distributions.json` used to bind `fromDist` variables.
        #[arg(long)]
        distributions: Option<PathBuf>,
        /// Also write a `.tile.json` rendering of every map.
        #[arg(long)]
        emit_tiles: bool,
    },
    /// Check OpenDRIVE files and write `.findings.json` next to each.
    Validate {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Directory for the findings files instead of the inputs' directories.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_filter(s: &str) -> Result<(String, String), String> {
    match s.split_once('=') {
        Some((k, v)) if !k.is_empty() && !v.is_empty() => Ok((k.to_string(), v.to_string())),
        _ => Err(format!("expected key=value, got \"{s}\"")),
    }
}

struct Io<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
    verbose: u8,
}

macro_rules! say {
    ($w:expr, $($t:tt)*) => {{ let _ = writeln!($w, $($t)*); }};
}

fn ms(start: Instant) -> u128 {
    start.elapsed().as_millis()
}

/// Parses `args` (program name first) and runs the subcommand.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            if e.use_stderr() {
                say!(err, "{}", e.render());
            } else {
                say!(out, "{}", e.render());
            }
            return code;
        }
    };
    let mut io = Io { out, err, verbose: cli.verbose };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        builder = builder.num_threads(t as usize);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            say!(io.err, "error: thread pool: {e}");
            return EXIT_FAILURE;
        }
    };
    let threads = cli.threads.map(usize::from);
    match cli.command {
        Command::Extract { tiles, out } => extract_cmd(&mut io, &pool, &tiles, &out, cli.force),
        Command::Analyze { input, out, plots, filters, exclude_suspect, analyzed } => {
            let mut f = Filters::new();
            for (k, v) in &filters {
                f = f.with(k, v);
            }
            if exclude_suspect {
                f = f.with("excludeSuspect", "true");
            }
            if let Err(e) = f.validate() {
                say!(io.err, "error: {e}");
                return EXIT_USAGE;
            }
            analyze_cmd(&mut io, &pool, &input, &out, plots.as_deref(), &f, analyzed.as_deref(), cli.force)
        }
        Command::Generate { template, n, seed, out, distributions, emit_tiles } => {
            let opts = GenerateOptions { n, master_seed: seed, out_dir: out, emit_tiles, force: cli.force, threads };
            generate_cmd(&mut io, &template, distributions.as_deref(), &opts)
        }
        Command::Validate { files, out } => validate_cmd(&mut io, &pool, &files, out.as_deref(), cli.force),
    }
}

fn extract_cmd(io: &mut Io, pool: &ThreadPool, dir: &Path, out: &Path, force: bool) -> i32 {
    let start = Instant::now();
    let paths = match tile_paths(dir) {
        Ok(p) => p,
        Err(e) => {
            say!(io.err, "error: {}: {e}", dir.display());
            return EXIT_FAILURE;
        }
    };
    let tiles = match pool.install(|| load_tiles(&paths)) {
        Ok(t) => t,
        Err((p, e)) => {
            say!(io.err, "error: {}: {e}", p.display());
            return EXIT_FAILURE;
        }
    };
    let inters = extract_corpus(&tiles, &ExtractConfig::default());
    if let Err(e) = write_json(out, &inters, force) {
        say!(io.err, "error: {e}");
        return EXIT_FAILURE;
    }
    say!(io.out, "extract: {} tiles, {} intersections -> {} in {} ms", tiles.len(), inters.len(), out.display(), ms(start));
    EXIT_OK
}

#[allow(clippy::too_many_arguments)]
fn analyze_cmd(
    io: &mut Io,
    pool: &ThreadPool,
    input: &Path,
    out: &Path,
    plots: Option<&Path>,
    filters: &Filters,
    analyzed_out: Option<&Path>,
    force: bool,
) -> i32 {
    let start = Instant::now();
    let inters = match read_intersections(input) {
        Ok(i) => i,
        Err(e) => {
            say!(io.err, "error: {e}");
            return EXIT_FAILURE;
        }
    };
    let report = pool.install(|| analyze_corpus(&inters, &AnalyzeConfig::default()));
    let dists = match build_distributions(&report.intersections, filters) {
        Ok(d) => d,
        Err(e) => {
            say!(io.err, "error: {e}");
            return EXIT_FAILURE;
        }
    };
    let mut result = write_json(out, &dists, force);
    if let (Ok(()), Some(p)) = (&result, analyzed_out) {
        result = write_json(p, &report, force);
    }
    if let (Ok(()), Some(dir)) = (&result, plots) {
        for d in &dists {
            result = write_file(&dir.join(plot_file_name(d)), render_histogram(d, BarScale::Count).as_bytes(), force);
            if result.is_err() {
                break;
            }
        }
    }
    if let Err(e) = result {
        say!(io.err, "error: {e}");
        return EXIT_FAILURE;
    }
    let s = &report.skipped;
    say!(
        io.out,
        "analyze: {} intersections analyzed, {} skipped ({} too few arms, {} too many arms), {} distributions -> {} in {} ms",
        report.intersections.len(),
        s.too_few_arms + s.too_many_arms,
        s.too_few_arms,
        s.too_many_arms,
        dists.len(),
        out.display(),
        ms(start)
    );
    EXIT_OK
}

fn generate_cmd(io: &mut Io, template: &Path, distributions: Option<&Path>, opts: &GenerateOptions) -> i32 {
    let start = Instant::now();
    let xml = match std::fs::read_to_string(template) {
        Ok(x) => x,
        Err(e) => {
            say!(io.err, "error: {}: {e}", template.display());
            return EXIT_FAILURE;
        }
    };
    let dists = match distributions.map(read_distributions).transpose() {
        Ok(d) => d.unwrap_or_default(),
        Err(e) => {
            say!(io.err, "error: {e}");
            return EXIT_FAILURE;
        }
    };
    let manifest = match generate_batch(&xml, &template_display_name(template), &dists, opts) {
        Ok(m) => m,
        Err(e) => {
            say!(io.err, "error: {}: {e}", template.display());
            return EXIT_FAILURE;
        }
    };
    for m in manifest.maps.iter().filter(|m| m.status == MapStatus::Failed || io.verbose > 0) {
        match &m.error {
            Some(e) => say!(io.err, "map {}: failed: {e}", m.index),
            None => say!(io.out, "map {}: {}", m.index, m.file.as_deref().unwrap_or("")),
        }
    }
    say!(
        io.out,
        "generate: {} of {} maps written, {} failed, seed {} -> {} in {} ms",
        manifest.succeeded,
        manifest.n,
        manifest.failed,
        manifest.master_seed,
        opts.out_dir.display(),
        ms(start)
    );
    if manifest.failed > 0 {
        EXIT_FAILURE
    } else {
        EXIT_OK
    }
}

/// `<dir>/<name without .xodr>.findings.json`.
pub fn findings_path(file: &Path, out: Option<&Path>) -> PathBuf {
    let name = file.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let stem = name.strip_suffix(".xodr").unwrap_or(&name);
    let dir = out.map(Path::to_path_buf).or_else(|| file.parent().map(Path::to_path_buf)).unwrap_or_default();
    dir.join(format!("{stem}.findings.json"))
}

fn validate_cmd(io: &mut Io, pool: &ThreadPool, files: &[PathBuf], out: Option<&Path>, force: bool) -> i32 {
    use rayon::prelude::*;
    let start = Instant::now();
    let results: Vec<_> = pool.install(|| files.par_iter().map(|f| validate_file(f)).collect());
    let (mut errors, mut warnings, mut failed_files, mut io_failures) = (0usize, 0usize, 0usize, 0usize);
    for (f, r) in files.iter().zip(results) {
        let findings = match r {
            Ok(x) => x,
            Err(e) => {
                say!(io.err, "error: {}: {e}", f.display());
                io_failures += 1;
                continue;
            }
        };
        for x in &findings {
            say!(io.out, "{}: {x}", f.display());
        }
        errors += findings.iter().filter(|x| x.severity == Severity::Error).count();
        warnings += findings.iter().filter(|x| x.severity == Severity::Warning).count();
        if has_errors(&findings) {
            failed_files += 1;
        }
        if let Err(e) = write_json(&findings_path(f, out), &findings, force) {
            say!(io.err, "error: {e}");
            io_failures += 1;
        }
    }
    say!(
        io.out,
        "validate: {} files, {} with errors, {} errors, {} warnings{} in {} ms",
        files.len(),
        failed_files,
        errors,
        warnings,
        if io_failures > 0 { format!(", {io_failures} i/o failures") } else { String::new() },
        ms(start)
    );
    if errors > 0 || io_failures > 0 {
        EXIT_FAILURE
    } else {
        EXIT_OK
    }
}
