//! `mixbet`: solve mixing bets, identify belief intervals from choices,
//! build CDF envelopes, run elicitation sessions and emit figure data.

use std::collections::BTreeMap;
use std::fs;
use std::net::{Ipv4Addr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use mixbet_core::report::DEFAULT_U_DELTAS;
use mixbet_core::{
    build_envelope, cohort_summary, convergence_study, figure_dataset, mixing_curve, mixing_interval,
    uniform_odds_grid, FigureName, MixingIntervalResult, ObservationSet, OddsQuota, PreferenceModel, StudyFamily,
    ThresholdBounds, UtilityScale,
};
use mixbet_session::{play_session_as, ResponseNoise, SessionConfig, SessionStore};

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Core(#[from] mixbet_core::Error),
    #[error(transparent)]
    Session(#[from] mixbet_session::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Usage(String),
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Parser)]
#[command(name = "mixbet", version, about = "Mixing bets for eliciting ambiguous beliefs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum ObsFormat {
    Csv,
    Ndjson,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Variational,
    SecondOrder,
}

#[derive(clap::Args)]
struct Scale {
    /// Utility of losing the prize
    #[arg(long, default_value_t = 0.0)]
    u0: f64,
    /// Utility gain from winning the prize
    #[arg(long, default_value_t = 1.0)]
    u_delta: f64,
}

impl Scale {
    fn get(&self) -> Result<UtilityScale> {
        Ok(UtilityScale::from_delta(self.u0, self.u_delta)?)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Optimal mixing for a model over an odds grid
    Solve {
        /// Preference model JSON
        #[arg(long)]
        model: PathBuf,
        /// Grid {0, 1/n, ..., 1}
        #[arg(long, default_value_t = 1000, conflicts_with = "q")]
        grid: usize,
        /// Explicit odds quotas, comma separated and increasing
        #[arg(long, value_delimiter = ',')]
        q: Vec<f64>,
        #[command(flatten)]
        scale: Scale,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mixing interval from one subject's observations
    Identify {
        /// Observations as CSV (q,x,mode), ndjson or JSON
        input: PathBuf,
        /// Input format; guessed from the extension when omitted
        #[arg(long, value_enum)]
        format: Option<ObsFormat>,
        /// Margin for counting a continuous allocation as mixing
        #[arg(long, default_value_t = mixbet_core::identify::DEFAULT_MIXING_EPS)]
        eps: f64,
    },
    /// Ambiguity ratio and mean midpoint per topic over many subjects
    Cohort {
        /// Directory of observation files
        #[arg(long)]
        dir: PathBuf,
        /// JSON object mapping file name to topic
        #[arg(long)]
        topics: PathBuf,
        #[arg(long, default_value_t = mixbet_core::identify::DEFAULT_MIXING_EPS)]
        eps: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// CDF envelope breakpoints from threshold intervals (CSV c,lo,hi)
    Envelope {
        input: PathBuf,
        /// Known minimum of the variable
        #[arg(long)]
        lower_clamp: Option<f64>,
        /// Known maximum of the variable
        #[arg(long)]
        upper_clamp: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve the session API and the browser client
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "sessions")]
        data_dir: PathBuf,
        /// Directory of static assets for the browser client
        #[arg(long)]
        static_dir: Option<PathBuf>,
        /// Listen on all interfaces instead of localhost
        #[arg(long)]
        public: bool,
    },
    /// Let a model play a session; prints its observations per topic
    Simulate {
        #[arg(long)]
        model: PathBuf,
        /// Session config JSON
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        scale: Scale,
        /// Logistic response noise scale; off when omitted
        #[arg(long)]
        noise: Option<f64>,
        #[arg(long, default_value_t = 0)]
        noise_seed: u64,
        /// Also write the session event log here
        #[arg(long)]
        log: Option<PathBuf>,
        /// Store the played session in this data directory, ready for `resolve`
        #[arg(long)]
        data_dir: Option<PathBuf>,
        #[arg(long, default_value = "simulated")]
        session_id: String,
    },
    /// Resolve a stored session and print the resolution record
    Resolve {
        #[arg(long)]
        session: String,
        /// JSON object mapping topic to whether the event happened
        #[arg(long)]
        realizations: PathBuf,
        #[arg(long, default_value = "sessions")]
        data_dir: PathBuf,
    },
    /// Figure data as CSV
    Figure {
        #[arg(long)]
        name: String,
        /// Figure parameter, repeatable
        #[arg(long = "param", value_name = "KEY=VALUE")]
        params: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Distance of the mixing interval from the belief interval as stakes grow
    Converge {
        #[arg(long, value_enum)]
        family: Family,
        #[arg(long = "param", value_name = "KEY=VALUE")]
        params: Vec<String>,
        /// Increasing utility spreads, comma separated
        #[arg(long, value_delimiter = ',')]
        u_delta: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(|source| CliError::Io { path: path.to_path_buf(), source }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(mixbet_core::Error::from)?;
    s.push('\n');
    Ok(s)
}

fn parse_params(raw: &[String]) -> Result<BTreeMap<String, String>> {
    raw.iter()
        .map(|kv| match kv.split_once('=') {
            Some((k, v)) if !k.is_empty() => Ok((k.trim().to_string(), v.trim().to_string())),
            _ => Err(CliError::Usage(format!("parameter `{kv}` is not KEY=VALUE"))),
        })
        .collect()
}

fn load_observations(path: &Path, format: Option<ObsFormat>) -> Result<ObservationSet> {
    let format = match format {
        Some(f) => f,
        None => match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => ObsFormat::Csv,
            Some("ndjson" | "jsonl") => ObsFormat::Ndjson,
            Some("json") => ObsFormat::Json,
            _ => return Err(CliError::Usage(format!("{}: pass --format csv|ndjson|json", path.display()))),
        },
    };
    let text = read(path)?;
    Ok(match format {
        ObsFormat::Csv => ObservationSet::from_csv(&text)?,
        ObsFormat::Ndjson => ObservationSet::from_ndjson(&text)?,
        ObsFormat::Json => ObservationSet::from_json(&text)?,
    })
}

fn identify(input: &Path, format: Option<ObsFormat>, eps: f64) -> Result<MixingIntervalResult> {
    Ok(mixing_interval(&load_observations(input, format)?, eps)?)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Solve { model, grid, q, scale, format, out } => {
            let model = PreferenceModel::from_json(&read(&model)?)?;
            let grid = if q.is_empty() {
                uniform_odds_grid(grid)
            } else {
                q.into_iter().map(OddsQuota::new).collect::<mixbet_core::Result<Vec<_>>>()?
            };
            let curve = mixing_curve(&model, &grid, &scale.get()?)?;
            let text = match format {
                Format::Csv => curve.to_csv(),
                Format::Json => curve.to_json()? + "\n",
            };
            emit(out.as_deref(), &text)
        }
        Command::Identify { input, format, eps } => emit(None, &to_json(&identify(&input, format, eps)?)?),
        Command::Cohort { dir, topics, eps, out } => {
            let map: BTreeMap<String, String> = serde_json::from_str(&read(&topics)?)
                .map_err(|e| CliError::Usage(format!("{}: {e}", topics.display())))?;
            let mut results = Vec::with_capacity(map.len());
            let mut labels = Vec::with_capacity(map.len());
            for (file, topic) in &map {
                results.push(identify(&dir.join(file), None, eps)?);
                labels.push(topic.as_str());
            }
            emit(out.as_deref(), &cohort_summary(&results, &labels)?.to_csv()?)
        }
        Command::Envelope { input, lower_clamp, upper_clamp, out } => {
            let bounds = ThresholdBounds::from_csv(&read(&input)?)?.with_clamps(lower_clamp, upper_clamp)?;
            emit(out.as_deref(), &build_envelope(&bounds)?.breakpoints_csv())
        }
        Command::Serve { port, data_dir, static_dir, public } => {
            let store = Arc::new(SessionStore::open(&data_dir)?);
            let host = if public { Ipv4Addr::UNSPECIFIED } else { Ipv4Addr::LOCALHOST };
            let addr = SocketAddr::from((host, port));
            let runtime = tokio::runtime::Runtime::new().map_err(|source| CliError::Io { path: data_dir, source })?;
            eprintln!("listening on http://{addr}");
            runtime
                .block_on(mixbet_session::http::serve(addr, store, static_dir))
                .map_err(|e| CliError::Session(e.into()))
        }
        Command::Simulate { model, config, scale, noise, noise_seed, log, data_dir, session_id } => {
            let model = PreferenceModel::from_json(&read(&model)?)?;
            let cfg = SessionConfig::from_json(&read(&config)?)?;
            let noise = noise.map(|scale| ResponseNoise { scale, seed: noise_seed });
            let session = play_session_as(&session_id, &model, &cfg, &scale.get()?, noise.as_ref())?;
            if let Some(path) = log {
                emit(Some(&path), &session.to_ndjson())?;
            }
            let observations = session.all_observations()?;
            if let Some(dir) = data_dir {
                SessionStore::open(dir)?.import(session)?;
            }
            emit(None, &to_json(&observations)?)
        }
        Command::Resolve { session, realizations, data_dir } => {
            let realizations: BTreeMap<String, bool> = serde_json::from_str(&read(&realizations)?)
                .map_err(|e| CliError::Usage(format!("{}: {e}", realizations.display())))?;
            let store = SessionStore::open(&data_dir)?;
            emit(None, &to_json(&store.resolve(&session, &realizations)?)?)
        }
        Command::Figure { name, params, out } => {
            let name: FigureName = name.parse()?;
            emit(out.as_deref(), &figure_dataset(name, &parse_params(&params)?)?.to_csv())
        }
        Command::Converge { family, params, u_delta, out } => {
            let family = match family {
                Family::Variational => StudyFamily::Variational,
                Family::SecondOrder => StudyFamily::SecondOrder,
            };
            let u_deltas = if u_delta.is_empty() { DEFAULT_U_DELTAS.to_vec() } else { u_delta };
            emit(out.as_deref(), &convergence_study(family, &parse_params(&params)?, &u_deltas)?.to_csv())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mixbet: {e}");
            ExitCode::FAILURE
        }
    }
}
