//! Command-line front end. `run` returns the process exit code: 0 on
//! success, 1 for usage errors, 2 for data errors.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::builder::TypedValueParser;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::cloud::PointCloud;
use crate::coding::codec::{encode_cloud, ChannelSet, Decoder, ModeSelection, QuantConfig, DEFAULT_M};
use crate::color::luma;
use crate::error::Error;
use crate::metrics::{bits_per_point, compaction_comparison, format_db, psnr, rd_sweep, write_rd_csv, PEAK};
use crate::ply::{parse_ply, write_ply, PlyFormat};
use crate::trainer::{train_offline, train_online, DEFAULT_GRID_STEP, DEFAULT_K, DEFAULT_SAMPLE_BLOCKS};
use crate::transform::GraphParams;

#[derive(Debug, Parser)]
#[command(name = "pcgt", version, about = "Graph transform point cloud attribute codec")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compress the attributes of a PLY cloud.
    Encode(EncodeArgs),
    /// Reconstruct attributes from a bitstream and the matching geometry.
    Decode(DecodeArgs),
    /// Grid-search (f, t) over training clouds.
    Train(TrainArgs),
    /// Compare graph transform and DCT compaction on sampled blocks.
    Analyze(AnalyzeArgs),
    /// Rate and Y-PSNR over a grid of qp and modes.
    RdSweep(RdSweepArgs),
    /// Y-PSNR between two clouds.
    Psnr(PsnrArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Channels {
    Y,
    Ycbcr,
}

impl From<Channels> for ChannelSet {
    fn from(c: Channels) -> Self {
        match c {
            Channels::Y => ChannelSet::Luma,
            Channels::Ycbcr => ChannelSet::YCbCr,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeArg {
    Auto,
    Fixed(u16),
}

fn parse_mode(s: &str) -> Result<ModeArg, String> {
    if s == "auto" {
        return Ok(ModeArg::Auto);
    }
    match s.parse::<u16>() {
        Ok(x) if x >= 1 => Ok(ModeArg::Fixed(x)),
        _ => Err(format!("expected `auto` or an integer in 1..=65535, got `{s}`")),
    }
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    /// Edge weight scale: the weight at the mean squared distance.
    #[arg(long, default_value_t = GraphParams::DEFAULT_F)]
    pub f: f64,
    /// Edge threshold on weights.
    #[arg(long, default_value_t = GraphParams::DEFAULT_T)]
    pub t: f64,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u16).range(1..))]
    pub qp: u16,
    /// Kept dimensions, or `auto` for rate-distortion optimized selection.
    #[arg(long, default_value = "auto", value_parser = parse_mode)]
    pub mode: ModeArg,
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Lagrange multiplier scale.
    #[arg(long, default_value_t = DEFAULT_M)]
    pub m: f64,
    /// Rate limit in bits per point; selects the lowest-distortion mode that fits.
    #[arg(long)]
    pub rmax: Option<f64>,
    /// Mode candidates for automatic selection.
    #[arg(long, value_delimiter = ',', default_value = "4,8,16,32,64",
          value_parser = clap::value_parser!(u16).range(1..))]
    pub modes: Vec<u16>,
    #[arg(long, value_enum, default_value_t = Channels::Y)]
    pub channels: Channels,
    /// Search (f, t) on sampled blocks of the input first.
    #[arg(long)]
    pub online_train: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    #[arg(long)]
    pub geometry: PathBuf,
    #[arg(long)]
    pub bitstream: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// Write ASCII instead of binary PLY.
    #[arg(long)]
    pub ascii: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, num_args = 1.., required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_GRID_STEP)]
    pub grid_step: f64,
    #[arg(long, default_value_t = DEFAULT_K, value_parser = clap::value_parser!(u64).range(1..).map(|v| v as usize))]
    pub k: usize,
    /// Full grid as CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u64).range(1..).map(|v| v as usize))]
    pub blocks: usize,
    #[arg(long, default_value_t = DEFAULT_K, value_parser = clap::value_parser!(u64).range(1..).map(|v| v as usize))]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Per-block compaction ratios as CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-dimension coefficient variances as CSV.
    #[arg(long)]
    pub variance_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RdSweepArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "8,16,32,48,64,80,96",
          value_parser = clap::value_parser!(u16).range(1..))]
    pub qps: Vec<u16>,
    #[arg(long, value_delimiter = ',', default_value = "4,8,16,32,64",
          value_parser = clap::value_parser!(u16).range(1..))]
    pub modes: Vec<u16>,
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long, value_enum, default_value_t = Channels::Y)]
    pub channels: Channels,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PsnrArgs {
    #[arg(long = "ref")]
    pub reference: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    #[arg(long, default_value = "Y")]
    pub channel: String,
}

enum Failure {
    Usage(String),
    Data(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Data(e.to_string())
    }
}

type CliResult<T = ()> = std::result::Result<T, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn graph_params(g: &GraphArgs) -> CliResult<GraphParams> {
    GraphParams::new(g.f, g.t).map_err(|e| usage(e.to_string()))
}

fn read_cloud(path: &Path) -> CliResult<PointCloud> {
    let bytes = fs::read(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    parse_ply(&bytes).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

/// Writes through a temporary file in the destination directory and
/// renames it into place.
fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let fail = |e: &dyn std::fmt::Display| Failure::Data(format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| fail(&e))?;
    tmp.write_all(bytes).map_err(|e| fail(&e))?;
    tmp.persist(path).map_err(|e| fail(&e.error))?;
    Ok(())
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> crate::Result<()>) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn channel_values(cloud: &PointCloud, channel: &str) -> crate::Result<Vec<f64>> {
    if channel == "Y" {
        luma(cloud)
    } else {
        Ok(cloud.require_channel(channel)?.to_vec())
    }
}

fn encode(a: &EncodeArgs, out: &mut dyn Write) -> CliResult {
    let mut params = graph_params(&a.graph)?;
    if !(a.m >= 0.0 && a.m.is_finite()) {
        return Err(usage(format!("--m {} must be a non-negative number", a.m)));
    }
    let mode = match (a.mode, a.rmax) {
        (ModeArg::Fixed(_), Some(_)) => return Err(usage("--rmax needs --mode auto")),
        (_, Some(r)) if !(r >= 0.0 && r.is_finite()) => {
            return Err(usage(format!("--rmax {r} must be a non-negative number")))
        }
        (_, Some(r)) => ModeSelection::Constrained { max_bpp: r },
        (ModeArg::Auto, None) => ModeSelection::Lagrangian,
        (ModeArg::Fixed(x), None) => ModeSelection::Fixed(x),
    };
    let config = QuantConfig {
        qp: a.qp,
        mode,
        m: a.m,
        candidates: a.modes.clone(),
    };

    let cloud = read_cloud(&a.input)?;
    if a.online_train {
        let report = train_online(&cloud, "Y", DEFAULT_SAMPLE_BLOCKS, a.seed, DEFAULT_K, DEFAULT_GRID_STEP)?;
        params = report.best;
    }
    let channels = ChannelSet::from(a.channels);
    let result = encode_cloud(&cloud, channels, &params, &config)?;
    write_atomic(&a.output, result.bytes())?;

    let n = cloud.point_count();
    let bpp = bits_per_point(result.encoded.rate_bits(), n)?;
    let db = psnr(&luma(&cloud)?, result.reconstruction.channel("Y").unwrap(), PEAK)?;
    let _ = writeln!(
        out,
        "qp={} x={} bpp={bpp:.6} psnr={}",
        a.qp,
        result.mode(),
        psnr_text(db)
    );
    Ok(())
}

fn psnr_text(db: f64) -> String {
    if db.is_finite() {
        format!("{db:.4}")
    } else {
        format_db(db)
    }
}

fn decode(a: &DecodeArgs) -> CliResult {
    let geometry = read_cloud(&a.geometry)?;
    let bytes = fs::read(&a.bitstream).map_err(|e| Failure::Data(format!("{}: {e}", a.bitstream.display())))?;
    let decoded = Decoder::new(&geometry).decode(&bytes)?;
    let format = if a.ascii {
        PlyFormat::Ascii
    } else {
        PlyFormat::BinaryLittleEndian
    };
    write_atomic(&a.output, &write_ply(&decoded, format))
}

fn train(a: &TrainArgs, out: &mut dyn Write) -> CliResult {
    crate::trainer::grid_values(a.grid_step).map_err(|e| usage(e.to_string()))?;
    let clouds = a.inputs.iter().map(|p| read_cloud(p)).collect::<CliResult<Vec<_>>>()?;
    let report = train_offline(&clouds, "Y", a.k, a.grid_step)?;
    if let Some(path) = &a.out {
        write_atomic(path, &csv_bytes(|b| report.write_csv(b))?)?;
    }
    let _ = writeln!(
        out,
        "f={} t={} objective={:.6}",
        report.best.f(),
        report.best.t(),
        report.best_objective
    );
    Ok(())
}

fn analyze_cmd(a: &AnalyzeArgs, out: &mut dyn Write) -> CliResult {
    let params = graph_params(&a.graph)?;
    let cloud = read_cloud(&a.input)?;
    let cmp = compaction_comparison(&cloud, "Y", &params, a.blocks, a.k, a.seed)?;
    if let Some(path) = &a.out {
        write_atomic(path, &csv_bytes(|b| cmp.write_compaction_csv(b))?)?;
    }
    if let Some(path) = &a.variance_out {
        write_atomic(path, &csv_bytes(|b| cmp.write_variance_csv(b))?)?;
    }
    let n = cmp.rows.len() as f64;
    let _ = writeln!(
        out,
        "blocks={} gt_wins={} mean_gt={:.6} mean_dct={:.6}",
        cmp.rows.len(),
        cmp.gt_wins(),
        cmp.rows.iter().map(|r| r.gt_ratio).sum::<f64>() / n,
        cmp.rows.iter().map(|r| r.dct_ratio).sum::<f64>() / n,
    );
    Ok(())
}

fn rd_sweep_cmd(a: &RdSweepArgs, out: &mut dyn Write) -> CliResult {
    let params = graph_params(&a.graph)?;
    let cloud = read_cloud(&a.input)?;
    let points = rd_sweep(&cloud, a.channels.into(), &params, &a.qps, &a.modes)?;
    let csv = csv_bytes(|b| write_rd_csv(&points, b))?;
    match &a.out {
        Some(path) => write_atomic(path, &csv),
        None => {
            let _ = out.write_all(&csv);
            Ok(())
        }
    }
}

fn psnr_cmd(a: &PsnrArgs, out: &mut dyn Write) -> CliResult {
    let reference = read_cloud(&a.reference)?;
    let test = read_cloud(&a.test)?;
    if reference.point_count() != test.point_count() {
        return Err(Failure::Data(format!(
            "point counts differ: {} vs {}",
            reference.point_count(),
            test.point_count()
        )));
    }
    let db = psnr(
        &channel_values(&reference, &a.channel)?,
        &channel_values(&test, &a.channel)?,
        PEAK,
    )?;
    let _ = writeln!(out, "{}", format_db(db));
    Ok(())
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Encode(a) => encode(a, out),
        Command::Decode(a) => decode(a),
        Command::Train(a) => train(a, out),
        Command::Analyze(a) => analyze_cmd(a, out),
        Command::RdSweep(a) => rd_sweep_cmd(a, out),
        Command::Psnr(a) => psnr_cmd(a, out),
    };
    match result {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            1
        }
        Err(Failure::Data(msg)) => {
            let _ = writeln!(err, "error: {}", msg.replace('\n', " "));
            2
        }
    }
}
