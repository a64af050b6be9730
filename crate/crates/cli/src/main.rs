use std::collections::BTreeSet;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use pitchlog::derive::{ActivityTable, MovementOptions};
use pitchlog::ingest::{LoadOptions, MatchPaths};
use pitchlog::mining::{dfg_metrics, discover_ocdfg, filter_log, LogFilter, WhereClause};
use pitchlog::ocel::{self, parse_object_types, IdentityScope, ObjectType, OcelLog};
use pitchlog::pipeline::{self, Conversion, MatchInput, PipelineConfig};
use pitchlog::render::{dfg_to_dot, spatial_instance_svg, RenderOptions};
use pitchlog::spatial::GridSpec;

#[derive(Parser)]
#[command(
    name = "pitchlog",
    version,
    about = "Convert football tracking and event data into object-centric event logs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert matches into an OCEL 2.0 JSON log and print a summary.
    Convert {
        #[command(flatten)]
        run: RunArgs,
        /// Output OCEL 2.0 JSON file.
        #[arg(short, long)]
        out: PathBuf,
        /// Also write the per-match component breakdown as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Print summary statistics of an OCEL 2.0 JSON log.
    Stats {
        /// OCEL 2.0 JSON file.
        ocel: PathBuf,
    },
    /// List possession spans as TSV (id, team, start_s, end_s, outcome).
    Possessions {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Discover an object-centric directly-follows graph and write it as DOT.
    Dfg {
        #[command(flatten)]
        source: Source,
        /// Comma-separated object types (match, team, player, possession, grid_position, ball).
        #[arg(long, default_value = "ball,player,possession")]
        types: String,
        /// Object filter `<type>.<attr>=<value>`; repeat to combine with AND.
        #[arg(long = "where", value_name = "TYPE.ATTR=VALUE")]
        filters: Vec<String>,
        /// Output DOT file [default: standard output].
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Draw one possession on the pitch grid as SVG.
    Spatial {
        #[command(flatten)]
        source: Source,
        /// Possession object id, e.g. AA156.
        #[arg(long)]
        possession: String,
        /// Comma-separated object types whose traces are drawn.
        #[arg(long, default_value = "ball")]
        types: String,
        /// Output SVG file [default: standard output].
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Default)]
struct RunArgs {
    /// Match input: a directory holding the three provider CSV files, or
    /// `HOME.csv,AWAY.csv,EVENTS.csv[,ID]`. Repeatable.
    #[arg(long = "match", value_name = "DIR|HOME,AWAY,EVENTS[,ID]")]
    matches: Vec<String>,
    /// JSON run configuration; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Grid columns along the pitch length [default: 6].
    #[arg(long)]
    cols: Option<u16>,
    /// Grid rows along the pitch width [default: 4].
    #[arg(long)]
    rows: Option<u16>,
    /// Pitch length in meters [default: 105].
    #[arg(long)]
    pitch_length: Option<f64>,
    /// Pitch width in meters [default: 68].
    #[arg(long)]
    pitch_width: Option<f64>,
    /// Tracking sample rate in Hz [default: 25].
    #[arg(long)]
    sample_rate: Option<f64>,
    /// Object identity scope: global or per-match [default: global].
    #[arg(long)]
    scope: Option<String>,
    /// Minimum seconds in a new cell before a movement event fires [default: 0].
    #[arg(long)]
    min_dwell: Option<f64>,
    /// Mirror second-period coordinates so both halves attack the same way.
    #[arg(long)]
    normalize_direction: bool,
    /// JSON activity mapping table replacing the built-in one.
    #[arg(long)]
    activity_map: Option<PathBuf>,
    /// Worker threads [default: all cores].
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args, Debug)]
struct Source {
    /// Read an existing OCEL 2.0 JSON log instead of converting matches.
    #[arg(long, conflicts_with = "matches")]
    ocel: Option<PathBuf>,
    #[command(flatten)]
    run: RunArgs,
}

/// Run configuration file. Every field is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    #[serde(default)]
    matches: Vec<String>,
    cols: Option<u16>,
    rows: Option<u16>,
    pitch_length_m: Option<f64>,
    pitch_width_m: Option<f64>,
    sample_rate: Option<f64>,
    scope: Option<String>,
    min_dwell_s: Option<f64>,
    normalize_direction: Option<bool>,
    activity_map: Option<PathBuf>,
    jobs: Option<usize>,
}

struct Resolved {
    inputs: Vec<MatchInput>,
    config: PipelineConfig,
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if !(v.is_finite() && v > 0.0) {
        bail!("{name} must be positive, got {v}");
    }
    Ok(v)
}

fn parse_match(spec: &str) -> Result<MatchInput> {
    let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [dir] => {
            let dir = Path::new(dir);
            let paths = MatchPaths::from_dir(dir)?;
            let match_id = dir
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| "match".into());
            Ok(MatchInput { match_id, paths })
        }
        [home, away, events, rest @ ..] if rest.len() <= 1 => {
            let match_id = match rest.first() {
                Some(id) => id.to_string(),
                None => Path::new(events)
                    .file_stem()
                    .map(|s| {
                        s.to_string_lossy()
                            .trim_end_matches("_RawEventsData")
                            .to_string()
                    })
                    .unwrap_or_else(|| "match".into()),
            };
            Ok(MatchInput {
                match_id,
                paths: MatchPaths {
                    tracking_home: home.into(),
                    tracking_away: away.into(),
                    events: events.into(),
                },
            })
        }
        _ => bail!("invalid --match `{spec}`: expected DIR or HOME,AWAY,EVENTS[,ID]"),
    }
}

fn resolve(args: &RunArgs) -> Result<Resolved> {
    let file: RunConfig = match &args.config {
        Some(path) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => RunConfig::default(),
    };
    let defaults = GridSpec::default();
    let pitch = GridSpec {
        cols: args.cols.or(file.cols).unwrap_or(defaults.cols),
        rows: args.rows.or(file.rows).unwrap_or(defaults.rows),
        pitch_length_m: positive(
            "pitch length",
            args.pitch_length
                .or(file.pitch_length_m)
                .unwrap_or(defaults.pitch_length_m),
        )?,
        pitch_width_m: positive(
            "pitch width",
            args.pitch_width
                .or(file.pitch_width_m)
                .unwrap_or(defaults.pitch_width_m),
        )?,
    };
    pitch.validate()?;
    let load = LoadOptions {
        sample_rate: positive(
            "sample rate",
            args.sample_rate
                .or(file.sample_rate)
                .unwrap_or(LoadOptions::default().sample_rate),
        )?,
        normalize_direction: args.normalize_direction || file.normalize_direction.unwrap_or(false),
        pitch,
    };
    let scope: IdentityScope = match args.scope.as_ref().or(file.scope.as_ref()) {
        Some(s) => s.parse()?,
        None => IdentityScope::default(),
    };
    let min_dwell_s = args.min_dwell.or(file.min_dwell_s).unwrap_or(0.0);
    if !(min_dwell_s.is_finite() && min_dwell_s >= 0.0) {
        bail!("minimum dwell must be non-negative, got {min_dwell_s}");
    }
    let activities = match args.activity_map.as_ref().or(file.activity_map.as_ref()) {
        Some(path) => ActivityTable::load(path)?,
        None => ActivityTable::default(),
    };
    if let Some(jobs) = args.jobs.or(file.jobs) {
        if jobs == 0 {
            bail!("--jobs must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("configuring worker threads")?;
    }
    let specs = if args.matches.is_empty() {
        &file.matches
    } else {
        &args.matches
    };
    if specs.is_empty() {
        bail!("no input matches given (use --match)");
    }
    let inputs = specs
        .iter()
        .map(|s| parse_match(s))
        .collect::<Result<_>>()?;
    Ok(Resolved {
        inputs,
        config: PipelineConfig {
            load,
            scope,
            movement: MovementOptions { min_dwell_s },
            activities,
            backfill: true,
        },
    })
}

fn run_conversion(args: &RunArgs) -> Result<(Conversion, PipelineConfig)> {
    let resolved = resolve(args)?;
    let conversion = pipeline::convert(&resolved.inputs, &resolved.config)?;
    for r in &conversion.reports {
        for w in &r.warnings {
            log::warn!("{}: {w}", r.match_id);
        }
    }
    Ok((conversion, resolved.config))
}

fn load_source(source: &Source) -> Result<(OcelLog, GridSpec)> {
    match &source.ocel {
        Some(path) => {
            let log = read_log(path)?;
            let mut grid = GridSpec::default();
            if let Some(c) = source.run.cols {
                grid.cols = c;
            }
            if let Some(r) = source.run.rows {
                grid.rows = r;
            }
            grid.validate()?;
            Ok((log, grid))
        }
        None => {
            let (conversion, config) = run_conversion(&source.run)?;
            Ok((conversion.log, *config.grid()))
        }
    }
}

fn read_log(path: &Path) -> Result<OcelLog> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if text.trim().is_empty() {
        return Ok(OcelLog::default());
    }
    Ok(ocel::from_json_str(&text).map_err(|e| e.in_file(path))?)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => io::stdout()
            .write_all(text.as_bytes())
            .context("writing to standard output"),
    }
}

fn types_arg(list: &str) -> Result<BTreeSet<ObjectType>> {
    let types = parse_object_types(list)?;
    if types.is_empty() {
        bail!("--types must name at least one object type");
    }
    Ok(types)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Convert { run, out, report } => {
            let (conversion, _) = run_conversion(&run)?;
            ocel::write_ocel_json(&conversion.log, &out)?;
            let mut stdout = io::stdout().lock();
            for r in &conversion.reports {
                writeln!(stdout, "{r}")?;
            }
            for (k, v) in pipeline::breakdown(&conversion.reports) {
                writeln!(stdout, "breakdown.{k}\t{v}")?;
            }
            writeln!(stdout, "{}", ocel::stats(&conversion.log))?;
            if let Some(path) = report {
                let text = serde_json::to_string_pretty(&conversion.reports)? + "\n";
                fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
            }
        }
        Command::Stats { ocel: path } => {
            let log = read_log(&path)?;
            println!("{}", ocel::stats(&log));
        }
        Command::Possessions { run } => {
            let (conversion, _) = run_conversion(&run)?;
            let mut text = String::from("id\tteam\tstart_s\tend_s\toutcome\n");
            for m in &conversion.matches {
                for s in &m.spans {
                    text += &format!(
                        "{}\t{}\t{:.2}\t{:.2}\t{}\n",
                        s.id, s.team, s.start_time_s, s.end_time_s, s.outcome
                    );
                }
            }
            emit(None, &text)?;
        }
        Command::Dfg {
            source,
            types,
            filters,
            out,
        } => {
            let types = types_arg(&types)?;
            let clauses = filters
                .iter()
                .map(|f| f.parse::<WhereClause>())
                .collect::<Result<Vec<_>, _>>()?;
            let (log, _) = load_source(&source)?;
            let filtered = filter_log(&log, &LogFilter::from_clauses(&clauses, None)?)?;
            let dfg = discover_ocdfg(&filtered, &types);
            emit(out.as_deref(), &dfg_to_dot(&dfg, &RenderOptions::default()))?;
            if out.is_some() {
                for (t, m) in dfg_metrics(&dfg) {
                    println!(
                        "{t}\tnodes={}\tedges={}\tself_loops={}\tmax_self_loop={}",
                        m.nodes,
                        m.edges,
                        m.self_loops,
                        m.max_self_loop
                            .map_or("-".to_string(), |(a, n)| format!("{a}:{n}"))
                    );
                }
            }
        }
        Command::Spatial {
            source,
            possession,
            types,
            out,
        } => {
            let types = types_arg(&types)?;
            let (log, grid) = load_source(&source)?;
            let svg =
                spatial_instance_svg(&log, &possession, &types, &grid, &RenderOptions::default())?;
            emit(out.as_deref(), &svg)?;
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let invariant = err
        .chain()
        .filter_map(|e| e.downcast_ref::<pitchlog::Error>())
        .any(pitchlog::Error::is_invariant_violation);
    if invariant {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // Usage errors share exit code 1 with other input errors; 2 is reserved
    // for invariant violations.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
