//! The `gtfs2stn` command line.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use gtfs2stn_core::analysis::TimeWindow;
use gtfs2stn_core::gtfs::time::{parse_clock, parse_window};
use gtfs2stn_core::gtfs::{load_feed, validate};
use gtfs2stn_core::network::{
    build_network, deserialize_network, links_geojson, nodes_geojson, serialize_network, BuildConfig, Network,
    DEFAULT_MAX_WALK_M, DEFAULT_WALK_SPEED_MPS,
};
use gtfs2stn_core::router::{Direction, QueryEndpoint};

use crate::ops::{self, IsochroneParams, ProfileFormat, ProfileParams};
use crate::server::ServerConfig;

#[derive(Debug, Parser)]
#[command(name = "gtfs2stn", version, about = "GTFS feeds to time-expanded transit networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a feed. Exit 0 if clean, 1 on fatal findings, 2 if it cannot be read.
    Validate { feed: PathBuf },
    /// Compile a feed into a network file.
    Build(BuildArgs),
    /// Travel-time bands from (or, with --reverse, to) one or more places.
    Isochrone(IsochroneArgs),
    /// Journey time between two places across a departure window.
    Profile(ProfileArgs),
    /// Average stop visit frequency per grid cell.
    Grid(GridArgs),
    /// Difference of two grid maps (b minus a).
    GridDiff {
        a: PathBuf,
        b: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Write a network's event nodes and links as GeoJSON.
    Export {
        network: PathBuf,
        #[arg(long)]
        nodes: Option<PathBuf>,
        #[arg(long)]
        links: Option<PathBuf>,
    },
    /// Run the HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    pub feed: PathBuf,
    /// Service ids to include, comma separated or repeated.
    #[arg(long, required = true, value_delimiter = ',')]
    pub services: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_MAX_WALK_M)]
    pub max_walk: f64,
    #[arg(long, default_value_t = DEFAULT_WALK_SPEED_MPS)]
    pub walk_speed: f64,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct IsochroneArgs {
    pub network: PathBuf,
    /// Stop id or `lat,lon`. Repeat for several origins (or destinations).
    #[arg(long = "from", required = true, allow_hyphen_values = true)]
    pub from: Vec<String>,
    /// Departure time, or the arrive-by time with --reverse.
    #[arg(long, visible_alias = "arrive")]
    pub depart: String,
    /// Cutoff in minutes.
    #[arg(long)]
    pub cutoff: u32,
    #[arg(long)]
    pub reverse: bool,
    /// Band thresholds in minutes.
    #[arg(long, value_delimiter = ',')]
    pub bands: Option<Vec<u32>>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    pub network: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    pub from: String,
    #[arg(long, allow_hyphen_values = true)]
    pub to: String,
    /// Departure window such as `06:00-22:00`.
    #[arg(long)]
    pub window: String,
    /// Sampling step such as `10m`.
    #[arg(long, default_value = "10m")]
    pub step: String,
    #[arg(long, value_enum, default_value_t)]
    pub format: ProfileFormat,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    pub feed: PathBuf,
    #[arg(long, required = true, value_delimiter = ',')]
    pub services: Vec<String>,
    /// Cell size in degrees.
    #[arg(long)]
    pub cell: f64,
    #[arg(long)]
    pub window: String,
    #[arg(long, default_value = "")]
    pub label: String,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = "GTFS2STN_BIND", default_value = "127.0.0.1:8080")]
    pub bind: String,
    /// Idle time after which a session is dropped.
    #[arg(long, env = "GTFS2STN_SESSION_TTL_S", default_value_t = 3600)]
    pub session_ttl_s: u64,
    #[arg(long, env = "GTFS2STN_UPLOAD_CAP_BYTES", default_value_t = 256 * 1024 * 1024)]
    pub upload_cap_bytes: usize,
}

pub fn parse_endpoint(text: &str) -> anyhow::Result<QueryEndpoint> {
    Ok(text.parse()?)
}

fn read_network(path: &Path) -> anyhow::Result<Network> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    deserialize_network(&bytes).with_context(|| format!("decoding {}", path.display()))
}

fn emit(output: Option<&Path>, doc: &str, out: &mut dyn Write) -> anyhow::Result<()> {
    match output {
        Some(p) => std::fs::write(p, doc).with_context(|| format!("writing {}", p.display())),
        None => Ok(out.write_all(doc.as_bytes())?),
    }
}

/// Runs one command and returns the process exit code. Documents go to
/// their `-o` file or to `out`; progress notes go to `out` as well.
pub fn run(cli: Cli, out: &mut dyn Write) -> anyhow::Result<u8> {
    match cli.command {
        Command::Validate { feed } => {
            let feed = match load_feed(&feed) {
                Ok(f) => f,
                Err(e) => {
                    writeln!(out, "error: {e}")?;
                    return Ok(2);
                }
            };
            let report = validate(&feed);
            for c in &report.counts {
                writeln!(out, "{}: {}", c.table, c.rows)?;
            }
            for f in &report.errors {
                let row = f.row.map(|r| format!(" row {r}")).unwrap_or_default();
                writeln!(out, "{} {}{}: {}", f.severity, f.table, row, f.message)?;
            }
            Ok(if report.has_fatal() { 1 } else { 0 })
        }
        Command::Build(a) => {
            let feed = load_feed(&a.feed).with_context(|| format!("loading {}", a.feed.display()))?;
            let cfg = BuildConfig::new(a.services).with_walk(a.max_walk, a.walk_speed);
            let net = build_network(&feed, &cfg)?;
            std::fs::write(&a.output, serialize_network(&net))
                .with_context(|| format!("writing {}", a.output.display()))?;
            let s = net.stats();
            writeln!(
                out,
                "nodes: {}\nlinks: {}\nwaiting: {}\ntransit: {}\nwalking: {}",
                s.nodes, s.links, s.waiting_links, s.transit_links, s.walking_links
            )?;
            Ok(0)
        }
        Command::Isochrone(a) => {
            let net = read_network(&a.network)?;
            let params = IsochroneParams {
                endpoints: a.from.iter().map(|s| parse_endpoint(s)).collect::<Result<_, _>>()?,
                time_s: parse_clock(&a.depart)?,
                direction: if a.reverse { Direction::Reverse } else { Direction::Forward },
                cutoff_s: minutes(a.cutoff)?,
                bands_s: a.bands.map(|b| b.into_iter().map(minutes).collect::<Result<_, _>>()).transpose()?,
            };
            emit(a.output.as_deref(), &ops::isochrone_document(&net, &params)?, out)?;
            Ok(0)
        }
        Command::Profile(a) => {
            let net = read_network(&a.network)?;
            let (start_s, end_s) = parse_window(&a.window)?;
            let params = ProfileParams {
                origin: parse_endpoint(&a.from)?,
                destination: parse_endpoint(&a.to)?,
                start_s,
                end_s,
                step_s: ops::parse_step(&a.step).map_err(anyhow::Error::msg)?,
            };
            let profile = ops::profile(&net, &params)?;
            emit(a.output.as_deref(), &ops::profile_document(&profile, a.format), out)?;
            Ok(0)
        }
        Command::Grid(a) => {
            let feed = load_feed(&a.feed).with_context(|| format!("loading {}", a.feed.display()))?;
            let (start, end) = parse_window(&a.window)?;
            let doc = ops::grid_document(&feed, &a.services, a.cell, TimeWindow::new(start, end)?, &a.label)?;
            emit(a.output.as_deref(), &doc, out)?;
            Ok(0)
        }
        Command::GridDiff { a, b, output } => {
            let read = |p: &Path| std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()));
            let doc = ops::grid_diff_document(&read(&a)?, &read(&b)?)?;
            emit(output.as_deref(), &doc, out)?;
            Ok(0)
        }
        Command::Export { network, nodes, links } => {
            if nodes.is_none() && links.is_none() {
                bail!("nothing to export: pass --nodes and/or --links");
            }
            let net = read_network(&network)?;
            if let Some(p) = nodes {
                std::fs::write(&p, nodes_geojson(&net).to_string())?;
            }
            if let Some(p) = links {
                std::fs::write(&p, links_geojson(&net).to_string())?;
            }
            Ok(0)
        }
        Command::Serve(a) => {
            let config = ServerConfig {
                session_ttl: std::time::Duration::from_secs(a.session_ttl_s),
                upload_cap_bytes: a.upload_cap_bytes,
                ..ServerConfig::default()
            };
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(crate::server::serve(&a.bind, config))?;
            Ok(0)
        }
    }
}

fn minutes(m: u32) -> anyhow::Result<u32> {
    m.checked_mul(60).context("minutes out of range")
}
