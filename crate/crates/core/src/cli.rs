//! Command-line front end. [`run`] parses arguments, executes one command
//! and returns the process exit code: 0 on success, 1 when the self test
//! fails, 2 on any error.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::dtstore::DtTable;
use crate::lattice::{AmbientData, P2Class, XClass};
use crate::qseries::{dt21_series, goettsche_series, indefinite_theta, vartheta, QSeries};
use crate::rational::{fmt_q, parse_q, Q};
use crate::selftest::{run_selftest, shipped_table};
use crate::wallcross::{format_side, ConstraintParams, Engine, Mode, WindowConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config {path}: {msg}")]
    Config { path: String, msg: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Wallcross(#[from] crate::wallcross::WallcrossError),
    #[error(transparent)]
    Lattice(#[from] crate::lattice::LatticeError),
}

impl From<crate::dtstore::DtError> for CliError {
    fn from(e: crate::dtstore::DtError) -> Self {
        CliError::Wallcross(e.into())
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "wallx",
    version,
    about = "Exact wall-crossing for stable pairs and DT invariants on local P2"
)]
pub struct Cli {
    /// `key = value` defaults; command-line flags take precedence.
    #[arg(long, global = true, env = "WALLX_CONFIG")]
    pub config: Option<PathBuf>,
    /// Extra DT values as JSON `[{"r", "c", "m2", "value"}]`.
    #[arg(long, global = true)]
    pub dt_table: Option<PathBuf>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub m_window: Option<i64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub r_window: Option<i64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub n_pad: Option<i64>,
    #[arg(long, global = true)]
    pub saturation_steps: Option<u32>,
    #[arg(long, global = true)]
    pub max_candidates: Option<usize>,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Which {
    Eta3,
    Dt21,
    Theta,
    Indefinite,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Table of P_{n, c[l]} for c <= cmax, n <= nmax.
    PtLocal {
        #[arg(long)]
        cmax: i64,
        #[arg(long, allow_hyphen_values = true)]
        nmax: i64,
        #[arg(long)]
        mode: Option<String>,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// One DT invariant and where it came from; `m` may be a half-integer.
    Dt {
        #[arg(long, allow_hyphen_values = true)]
        r: i64,
        #[arg(long, allow_hyphen_values = true)]
        c: i64,
        #[arg(long, allow_hyphen_values = true)]
        m: String,
    },
    /// Coefficients of a q-series up to `order`.
    Series {
        #[arg(long, value_enum)]
        which: Which,
        #[arg(long)]
        order: String,
        #[arg(long, default_value_t = 2)]
        r: i64,
        #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
        a: i64,
    },
    /// Orbifold stable pair invariant of the rank-zero class (0, d, l, 0, n).
    Orbifold {
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        d: String,
        #[arg(long, allow_hyphen_values = true)]
        l: String,
        #[arg(long, allow_hyphen_values = true)]
        n: String,
        #[arg(long)]
        mode: Option<String>,
    },
    /// Constraint relation between pair invariants of beta0 + s[l].
    CheckConstraint {
        #[arg(long, allow_hyphen_values = true)]
        d_beta0: String,
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        l_beta0: String,
        #[arg(long, allow_hyphen_values = true)]
        n: i64,
        #[arg(long)]
        mode: Option<String>,
        #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
        target_shift: i64,
        #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
        min_shift: i64,
        #[arg(long, allow_hyphen_values = true)]
        n_floor: Option<i64>,
    },
    /// Runs the acceptance checks and prints one line per check.
    Selftest {
        /// Replaces the builtin DT of the line class.
        #[arg(long, allow_hyphen_values = true)]
        line_dt_override: Option<String>,
    },
}

/// Settings merged from the config file and the flags.
#[derive(Debug, Clone, Default)]
pub struct Settings {
    pub windows: WindowConfig,
    pub mode: Option<Mode>,
    pub threads: Option<usize>,
    pub dt_table: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config(text: &str, path: &str, s: &mut Settings) -> Result<()> {
    let bad = |msg: String| CliError::Config {
        path: path.to_string(),
        msg,
    };
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| bad(format!("line {}: expected key = value", i + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        let int = |v: &str| {
            v.parse::<i64>()
                .map_err(|_| bad(format!("line {}: {k} needs an integer", i + 1)))
        };
        match k {
            "m_window" => s.windows.m_window = int(v)?,
            "r_window" => s.windows.r_window = int(v)?,
            "n_pad" => s.windows.n_pad = int(v)?,
            "saturation_steps" => s.windows.saturation_steps = int(v)? as u32,
            "max_candidates" => s.windows.max_candidates = int(v)? as usize,
            "threads" => s.threads = Some(int(v)? as usize),
            "mode" => s.mode = Some(v.parse().map_err(|e| bad(format!("line {}: {e}", i + 1)))?),
            "dt_table" => s.dt_table = Some(PathBuf::from(v)),
            "out" => s.out = Some(PathBuf::from(v)),
            _ => return Err(bad(format!("line {}: unknown key {k:?}", i + 1))),
        }
    }
    Ok(())
}

impl Cli {
    pub fn settings(&self) -> Result<Settings> {
        let mut s = Settings::default();
        if let Some(p) = &self.config {
            let text = fs::read_to_string(p).map_err(io_err(p))?;
            parse_config(&text, &p.display().to_string(), &mut s)?;
        }
        let w = &mut s.windows;
        if let Some(v) = self.m_window {
            w.m_window = v;
        }
        if let Some(v) = self.r_window {
            w.r_window = v;
        }
        if let Some(v) = self.n_pad {
            w.n_pad = v;
        }
        if let Some(v) = self.saturation_steps {
            w.saturation_steps = v;
        }
        if let Some(v) = self.max_candidates {
            w.max_candidates = v;
        }
        if self.threads.is_some() {
            s.threads = self.threads;
        }
        if self.dt_table.is_some() {
            s.dt_table = self.dt_table.clone();
        }
        if self.out.is_some() {
            s.out = self.out.clone();
        }
        Ok(s)
    }
}

fn q_arg(s: &str, what: &str) -> Result<Q> {
    parse_q(s).map_err(|e| CliError::Usage(format!("--{what}: {e}")))
}

fn mode_arg(flag: &Option<String>, s: &Settings) -> Result<Mode> {
    match flag {
        Some(m) => Ok(m.parse()?),
        None => Ok(s.mode.unwrap_or(Mode::Behrend)),
    }
}

fn load_table(base: DtTable, s: &Settings) -> Result<DtTable> {
    let mut t = base;
    if let Some(p) = &s.dt_table {
        t.load_user_file(p)?;
    }
    t.freeze();
    Ok(t)
}

fn series_json(s: &QSeries) -> String {
    let v: Vec<serde_json::Value> = s
        .terms()
        .map(|(e, c)| serde_json::json!({ "exp": fmt_q(e), "coef": fmt_q(c) }))
        .collect();
    serde_json::to_string_pretty(&v).expect("serializable")
}

fn emit(text: &str, s: &Settings, out: &mut dyn Write) -> Result<()> {
    match &s.out {
        Some(p) => fs::write(p, format!("{text}\n")).map_err(io_err(p)),
        None => writeln!(out, "{text}").map_err(io_err(Path::new("<stdout>"))),
    }
}

fn execute(cli: &Cli, s: &Settings, out: &mut (dyn Write + Send)) -> Result<i32> {
    let say = |out: &mut dyn Write, line: String| -> Result<()> {
        writeln!(out, "{line}").map_err(io_err(Path::new("<stdout>")))
    };
    match &cli.command {
        Command::PtLocal {
            cmax,
            nmax,
            mode,
            format,
        } => {
            let mode = mode_arg(mode, s)?;
            let engine = Engine::new(load_table(DtTable::new(), s)?, s.windows.clone())?;
            let table = engine.pt_local(mode, *cmax, *nmax)?;
            let csv = match format {
                Some(f) => *f == Format::Csv,
                None => s
                    .out
                    .as_ref()
                    .is_some_and(|p| p.extension().is_some_and(|e| e == "csv")),
            };
            let text = if csv { table.to_csv() } else { table.to_json() };
            emit(text.trim_end(), s, out)?;
        }
        Command::Dt { r, c, m } => {
            let cls = P2Class::from_m(*r, *c, &q_arg(m, "m")?)?;
            let engine = Engine::new(load_table(DtTable::new(), s)?, s.windows.clone())?;
            let (v, src) = engine.dt(&cls)?;
            emit(&format!("{} ({src})", fmt_q(&v)), s, out)?;
        }
        Command::Series { which, order, r, a } => {
            let order = q_arg(order, "order")?;
            let series = match which {
                Which::Eta3 => goettsche_series(&order),
                Which::Dt21 => dt21_series(&order),
                Which::Theta => {
                    if *r < 1 {
                        return Err(CliError::Usage("--r must be at least 1".into()));
                    }
                    vartheta(*r, *a, &order)
                }
                Which::Indefinite => indefinite_theta(&order),
            };
            emit(&series_json(&series), s, out)?;
        }
        Command::Orbifold { d, l, n, mode } => {
            let mode = mode_arg(mode, s)?;
            let u = XClass::new(0, q_arg(d, "d")?, q_arg(l, "l")?, 0, q_arg(n, "n")?);
            let engine = Engine::new(load_table(DtTable::new(), s)?, s.windows.clone())?;
            emit(&fmt_q(&engine.orbifold_pt(&u, mode)?), s, out)?;
        }
        Command::CheckConstraint {
            d_beta0,
            l_beta0,
            n,
            mode,
            target_shift,
            min_shift,
            n_floor,
        } => {
            let mode = mode_arg(mode, s)?;
            let amb = AmbientData::new(q_arg(d_beta0, "d-beta0")?, q_arg(l_beta0, "l-beta0")?);
            let params = ConstraintParams {
                n0: *n,
                amb,
                target_shift: *target_shift,
                min_shift: *min_shift,
                n_floor: *n_floor,
            };
            let engine = Engine::new(load_table(DtTable::new(), s)?, s.windows.clone())?;
            let rel = engine.constraint_relation(&params, mode)?;
            let target = (*n, *target_shift);
            if let Some(p) = &s.out {
                fs::write(p, format!("{}\n", rel.to_json())).map_err(io_err(p))?;
            }
            say(out, rel.to_string())?;
            if let Some(solved) = rel.solved_for(target) {
                let lhs: BTreeMap<_, _> =
                    [(target, Q::from_integer(1.into()))].into_iter().collect();
                say(
                    out,
                    format!("{} = {}", format_side(&lhs), format_side(&solved)),
                )?;
            }
        }
        Command::Selftest { line_dt_override } => {
            let mut dt = shipped_table();
            if let Some(v) = line_dt_override {
                dt.override_line_value(q_arg(v, "line-dt-override")?)?;
            }
            let dt = load_table(dt, s)?;
            let reports = run_selftest(&dt, &s.windows);
            let mut failed = Vec::new();
            for r in &reports {
                say(out, r.to_string())?;
                if !r.passed {
                    failed.push(format!("{} ({})", r.id, r.name));
                }
            }
            if failed.is_empty() {
                say(out, format!("all {} checks passed", reports.len()))?;
            } else {
                say(out, format!("FAILED: {}", failed.join(", ")))?;
                return Ok(1);
            }
        }
    }
    Ok(0)
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut (dyn Write + Send), err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    let result = cli.settings().and_then(|s| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(s.threads.unwrap_or(0))
            .build()
            .map_err(|e| CliError::Usage(format!("--threads: {e}")))?;
        pool.install(|| execute(&cli, &s, out))
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "wallx: error: {e}");
            2
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String, String) {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        let code = run(args.iter().copied(), &mut o, &mut e);
        (
            code,
            String::from_utf8(o).unwrap(),
            String::from_utf8(e).unwrap(),
        )
    }

    #[test]
    fn config_file_then_flags() {
        let mut s = Settings::default();
        parse_config(
            "# windows\nm_window = 11\nmode = euler\n\nn_pad=4",
            "cfg",
            &mut s,
        )
        .unwrap();
        assert_eq!((s.windows.m_window, s.windows.n_pad), (11, 4));
        assert_eq!(s.mode, Some(Mode::Euler));
        assert!(parse_config("bogus = 1", "cfg", &mut s).is_err());
        assert!(parse_config("m_window 3", "cfg", &mut s).is_err());
    }

    #[test]
    fn dt_command() {
        let (code, out, _) = run_str(&["wallx", "dt", "--r", "0", "--c", "1", "--m", "1/2"]);
        assert_eq!(code, 0);
        assert_eq!(out.trim(), "3 (builtin)");
        let (code, out, _) = run_str(&["wallx", "dt", "--r", "2", "--c", "-1", "--m", "-3/2"]);
        assert_eq!(code, 0);
        assert_eq!(out.trim(), "9 (series)");
    }

    #[test]
    fn missing_dt_names_the_key() {
        let (code, _, err) = run_str(&["wallx", "dt", "--r", "3", "--c", "0", "--m", "0"]);
        assert_eq!(code, 2);
        assert!(err.contains("DT(3, 0, 0)"), "{err}");
    }

    #[test]
    fn series_command() {
        let (code, out, _) = run_str(&["wallx", "series", "--which", "eta3", "--order", "2"]);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v[2]["coef"], "9");
        assert_eq!(v[2]["exp"], "2");
    }

    #[test]
    fn bad_arguments() {
        let (code, _, err) = run_str(&["wallx", "pt-local", "--cmax"]);
        assert_eq!(code, 2);
        assert!(!err.is_empty());
        let (code, _, err) = run_str(&[
            "wallx", "pt-local", "--cmax", "1", "--nmax", "2", "--mode", "x",
        ]);
        assert_eq!(code, 2);
        assert!(err.contains("unknown mode"));
    }
}
