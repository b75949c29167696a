//! The `isoscan` command line.
//!
//! Exit codes: 0 success, 1 bad configuration, 2 missing or malformed data,
//! 3 internal invariant violation (including a failed oracle check).

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::dem::hgt::{self, SUPPORTED_SAMPLES};
use crate::dem::synth::{generate_synthetic, Profile, SynthSpec};
use crate::dem::{DemError, TileKey};
use crate::multipass::{
    area_peaks, compare_results, load_area, run_pipeline, run_single_sweep, DistanceMode,
    HgtDirectory, PipelineConfig, PipelineError,
};
use crate::oracle::{brute_force_all, SampleUniverse};
use crate::output::write_csv;
use crate::quad::Quadrilateral;
use crate::sweep::IlpResult;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "isoscan", version, about = "Isolation of every peak in a tiled elevation model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute isolations for an area and write them as CSV.
    Compute(ComputeArgs),
    /// Write seeded synthetic .hgt tiles.
    Synth(SynthArgs),
    /// Time repeated runs and print machine-readable rows.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Multipass,
    SingleSweep,
    OracleCheck,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DistanceArg {
    Staged,
    GreatCircleOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProfileArg {
    Cones,
    Fractal,
    Plateau,
    Terraces,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BenchMode {
    Multipass,
    SingleSweep,
    Both,
}

#[derive(Debug, Args)]
struct AreaArgs {
    /// Directory holding the .hgt tiles.
    #[arg(long)]
    data_dir: PathBuf,
    /// Whole-degree area: LATMIN LATMAX LNGMIN LNGMAX.
    #[arg(long, num_args = 4, allow_negative_numbers = true, value_names = ["LATMIN", "LATMAX", "LNGMIN", "LNGMAX"])]
    bounds: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    min_isolation_km: f64,
    /// Worker threads, 0 for all cores.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Downsampling stride of the bounding pass.
    #[arg(long, default_value_t = 2)]
    stride: usize,
    #[arg(long, value_enum, default_value_t = DistanceArg::Staged)]
    distance_mode: DistanceArg,
}

#[derive(Debug, Args)]
struct ComputeArgs {
    #[command(flatten)]
    area: AreaArgs,
    #[arg(long, value_enum, default_value_t = Mode::Multipass)]
    mode: Mode,
    /// CSV destination, `-` for standard output.
    #[arg(long, default_value = "-")]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// World size in tiles, ROWSxCOLS.
    #[arg(long, default_value = "1x1")]
    tiles: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = ProfileArg::Cones)]
    profile: ProfileArg,
    #[arg(long)]
    out: PathBuf,
    /// Latitude of the south-west tile.
    #[arg(long, default_value_t = 46, allow_negative_numbers = true)]
    origin_lat: i32,
    /// Longitude of the south-west tile.
    #[arg(long, default_value_t = 10, allow_negative_numbers = true)]
    origin_lng: i32,
    /// Samples per tile side.
    #[arg(long, default_value_t = 1201)]
    samples: usize,
    /// Number of cones for the cones profile.
    #[arg(long)]
    cones: Option<usize>,
    #[arg(long)]
    overwrite: bool,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[command(flatten)]
    area: AreaArgs,
    #[arg(long, default_value_t = 5)]
    reps: usize,
    #[arg(long, value_enum, default_value_t = BenchMode::Both)]
    mode: BenchMode,
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }

    fn internal(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INTERNAL,
            message: message.into(),
        }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        let code = match &e {
            PipelineError::BadArea(_) | PipelineError::Pool(_) => EXIT_CONFIG,
            PipelineError::Tile {
                source: DemError::Stride { .. },
                ..
            } => EXIT_CONFIG,
            PipelineError::MissingTiles(_) | PipelineError::Tile { .. } => EXIT_DATA,
            PipelineError::Sweep { .. } | PipelineError::Invariant(_) => EXIT_INTERNAL,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

/// Parses `args` (program name first) and runs the command. Returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let outcome = match cli.command {
        Command::Compute(a) => compute(&a),
        Command::Synth(a) => synth(&a),
        Command::Bench(a) => bench(&a),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("isoscan: {}", f.message);
            f.code
        }
    }
}

fn area_of(a: &AreaArgs) -> Result<Quadrilateral, Failure> {
    let [lat_min, lat_max, lng_min, lng_max] = a.bounds[..] else {
        return Err(Failure::config("--bounds takes four values"));
    };
    let aligned = [lat_min, lat_max, lng_min, lng_max]
        .iter()
        .all(|v| v.is_finite() && v.fract() == 0.0);
    let q = Quadrilateral::new(lat_min, lat_max, lng_min, lng_max)
        .filter(|q| aligned && q.lat_min < q.lat_max && q.lng_min < q.lng_max)
        .ok_or_else(|| Failure::config("--bounds must be whole degrees with min < max"))?;
    if q.lng_min <= -180.0 {
        return Err(Failure::config(
            "areas must not touch longitude -180; the world is split at the antimeridian",
        ));
    }
    Ok(q)
}

fn config_of(a: &AreaArgs) -> Result<PipelineConfig, Failure> {
    if !(a.min_isolation_km.is_finite() && a.min_isolation_km >= 0.0) {
        return Err(Failure::config("--min-isolation-km must be a non-negative number"));
    }
    if a.stride == 0 {
        return Err(Failure::config("--stride must be at least 1"));
    }
    Ok(PipelineConfig {
        min_isolation_m: a.min_isolation_km * 1000.0,
        stride: a.stride,
        threads: a.threads,
        distance_mode: match a.distance_mode {
            DistanceArg::Staged => DistanceMode::Staged,
            DistanceArg::GreatCircleOnly => DistanceMode::GreatCircleOnly,
        },
        ..Default::default()
    })
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

fn emit(path: &PathBuf, results: &[IlpResult]) -> Result<(), Failure> {
    let written = if path.as_os_str() == "-" {
        write_csv(io::stdout().lock(), results)
    } else {
        fs::File::create(path).and_then(|f| write_csv(io::BufWriter::new(f), results))
    };
    written.map_err(|e| Failure::config(format!("{}: {e}", path.display())))
}

fn compute(a: &ComputeArgs) -> Result<(), Failure> {
    let area = area_of(&a.area)?;
    let config = config_of(&a.area)?;
    let source = HgtDirectory::new(&a.area.data_dir);
    let results = match a.mode {
        Mode::Multipass | Mode::OracleCheck => {
            let out = run_pipeline(&area, &source, &config)?;
            let s = &out.stats;
            eprintln!(
                "tiles={} samples={} peaks={} reported={} deferred={} assignments={} voids_filled={} io_s={:.3} bounding_s={:.3} highpoint_s={:.3} finalization_s={:.3} total_s={:.3}",
                s.tiles,
                s.samples,
                s.peaks,
                s.reported,
                s.deferred,
                s.assignments,
                source.voids_filled(),
                secs(s.io),
                secs(s.bounding),
                secs(s.highpoint),
                secs(s.finalization),
                secs(s.total)
            );
            out.results
        }
        Mode::SingleSweep => {
            let (results, s) = run_single_sweep(&area, &source, &config)?;
            eprintln!(
                "tiles={} samples={} peaks={} reported={} voids_filled={} io_s={:.3} sweep_s={:.3} total_s={:.3}",
                s.tiles,
                s.samples,
                s.peaks,
                s.reported,
                source.voids_filled(),
                secs(s.io),
                secs(s.sweep),
                secs(s.total)
            );
            results
        }
    };
    emit(&a.output, &results)?;
    if a.mode == Mode::OracleCheck {
        let tiles = load_area(&area, &source)?;
        let universe = SampleUniverse::from_rasters(tiles.iter().map(|t| t.raster()));
        let metric = config.distance_mode.final_metric(config.model);
        let mut expected = brute_force_all(&area_peaks(&tiles), &universe, &metric);
        expected.retain(|r| r.isolation_m.map_or(true, |d| d >= config.min_isolation_m));
        compare_results(&results, &expected)
            .map_err(|e| Failure::internal(format!("oracle check failed: {e}")))?;
        eprintln!("oracle check passed for {} peaks", expected.len());
    }
    Ok(())
}

fn parse_tiles(s: &str) -> Option<(usize, usize)> {
    let (r, c) = s.split_once(['x', 'X'])?;
    let (r, c) = (r.trim().parse().ok()?, c.trim().parse().ok()?);
    (r > 0 && c > 0).then_some((r, c))
}

fn synth(a: &SynthArgs) -> Result<(), Failure> {
    let (rows, cols) =
        parse_tiles(&a.tiles).ok_or_else(|| Failure::config("--tiles must look like 2x3"))?;
    if !SUPPORTED_SAMPLES.contains(&a.samples) {
        return Err(Failure::config(format!(
            "--samples must be one of {SUPPORTED_SAMPLES:?}"
        )));
    }
    let origin = TileKey::new(a.origin_lat, a.origin_lng);
    let fits = a.origin_lat >= -90
        && a.origin_lat + rows as i32 <= 90
        && a.origin_lng > -180
        && a.origin_lng + cols as i32 <= 180;
    if !fits {
        return Err(Failure::config("synthetic world leaves the coordinate domain"));
    }
    let profile = match a.profile {
        ProfileArg::Cones => Profile::Cones,
        ProfileArg::Fractal => Profile::Fractal,
        ProfileArg::Plateau => Profile::Plateau,
        ProfileArg::Terraces => Profile::Terraces,
    };
    let mut spec = SynthSpec::new(rows, cols, profile, a.seed)
        .samples(a.samples)
        .origin(origin);
    spec.cones = a.cones;
    fs::create_dir_all(&a.out).map_err(|e| Failure::config(format!("{}: {e}", a.out.display())))?;
    if !a.overwrite {
        let existing: Vec<String> = (0..rows as i32)
            .flat_map(|i| (0..cols as i32).map(move |j| TileKey::new(origin.lat + i, origin.lng + j)))
            .map(hgt::file_name)
            .filter(|n| a.out.join(n).exists())
            .collect();
        if !existing.is_empty() {
            return Err(Failure::config(format!(
                "refusing to overwrite {} (pass --overwrite)",
                existing.join(", ")
            )));
        }
    }
    let tiles = generate_synthetic(&spec).map_err(|e| Failure::config(e.to_string()))?;
    for t in &tiles {
        let path = hgt::save(t, &a.out).map_err(|e| Failure::config(e.to_string()))?;
        println!("{}", path.display());
    }
    Ok(())
}

fn bench(a: &BenchArgs) -> Result<(), Failure> {
    let area = area_of(&a.area)?;
    let config = config_of(&a.area)?;
    if a.reps == 0 {
        return Err(Failure::config("--reps must be at least 1"));
    }
    let source = HgtDirectory::new(&a.area.data_dir);
    let mut out = io::stdout().lock();
    let mut line = |s: String| {
        let _ = writeln!(out, "{s}");
    };
    line("mode,rep,tiles,samples,peaks,seconds,samples_per_s,peaks_per_s,io_s,bounding_s,highpoint_s,finalization_s".into());
    let modes: &[Mode] = match a.mode {
        BenchMode::Multipass => &[Mode::Multipass],
        BenchMode::SingleSweep => &[Mode::SingleSweep],
        BenchMode::Both => &[Mode::SingleSweep, Mode::Multipass],
    };
    for &mode in modes {
        let name = if mode == Mode::Multipass { "multipass" } else { "single-sweep" };
        let mut rows: Vec<[f64; 10]> = Vec::with_capacity(a.reps);
        for rep in 0..a.reps {
            let t = Instant::now();
            let row = if mode == Mode::Multipass {
                let o = run_pipeline(&area, &source, &config)?;
                let s = o.stats;
                let compute = secs(s.total) - secs(s.io) / config_threads(config.threads);
                [
                    s.tiles as f64,
                    s.samples as f64,
                    s.peaks as f64,
                    secs(t.elapsed()),
                    s.samples as f64 / compute,
                    s.peaks as f64 / compute,
                    secs(s.io),
                    secs(s.bounding),
                    secs(s.highpoint),
                    secs(s.finalization),
                ]
            } else {
                let (_, s) = run_single_sweep(&area, &source, &config)?;
                let compute = secs(s.total) - secs(s.io);
                [
                    s.tiles as f64,
                    s.samples as f64,
                    s.peaks as f64,
                    secs(t.elapsed()),
                    s.samples as f64 / compute,
                    s.peaks as f64 / compute,
                    secs(s.io),
                    0.0,
                    0.0,
                    secs(s.sweep),
                ]
            };
            line(format_bench_row(name, &rep.to_string(), &row));
            rows.push(row);
        }
        let mut mean = [0.0; 10];
        for r in &rows {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v / rows.len() as f64;
            }
        }
        line(format_bench_row(name, "mean", &mean));
    }
    Ok(())
}

fn config_threads(threads: usize) -> f64 {
    if threads == 0 {
        rayon::current_num_threads() as f64
    } else {
        threads as f64
    }
}

fn format_bench_row(mode: &str, rep: &str, r: &[f64; 10]) -> String {
    format!(
        "{mode},{rep},{},{},{},{:.4},{:.1},{:.1},{:.4},{:.4},{:.4},{:.4}",
        r[0], r[1], r[2], r[3], r[4], r[5], r[6], r[7], r[8], r[9]
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiles_argument() {
        assert_eq!(parse_tiles("2x3"), Some((2, 3)));
        assert_eq!(parse_tiles("4X4"), Some((4, 4)));
        assert_eq!(parse_tiles("0x3"), None);
        assert_eq!(parse_tiles("2by3"), None);
    }

    #[test]
    fn bad_arguments_are_config_errors() {
        assert_eq!(run(["isoscan", "frobnicate"]), EXIT_CONFIG);
        assert_eq!(
            run(["isoscan", "compute", "--data-dir", "/nonexistent", "--bounds", "46", "46.5", "10", "11"]),
            EXIT_CONFIG
        );
        assert_eq!(
            run(["isoscan", "compute", "--data-dir", "/nonexistent", "--bounds", "0", "1", "-180", "-179"]),
            EXIT_CONFIG
        );
        assert_eq!(run(["isoscan", "--help"]), EXIT_OK);
    }

    #[test]
    fn missing_data_is_exit_two() {
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path().to_str().unwrap();
        assert_eq!(
            run(["isoscan", "compute", "--data-dir", d, "--bounds", "46", "47", "10", "11"]),
            EXIT_DATA
        );
    }
}
