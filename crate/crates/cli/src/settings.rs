use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use h3spec::Error;

use crate::Shared;

/// Keys accepted in a config file.
const KNOWN_KEYS: &[&str] = &[
    "cutoff",
    "mode",
    "radius",
    "threads",
    "out",
    "kmin",
    "kmax",
    "kstep",
    "budget",
    "dedup_tol",
    "merge_tol",
    "volume",
    "multiplicity",
    "htilde",
    "eps_low",
    "eps_high",
    "window",
    "fit_min",
    "fit_max",
    "lstep",
    "ref_volume",
    "smin",
    "smax",
    "sstep",
    "terms",
    "model",
    "free",
    "curve_points",
];

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Budget(String),
    Numeric(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Budget(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) | CliError::Budget(m) | CliError::Numeric(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Budget { .. } => CliError::Budget(msg),
            Error::NoConvergence { .. } | Error::Fit(_) | Error::Overflow(_) => CliError::Numeric(msg),
            _ => CliError::Input(msg),
        }
    }
}

pub fn input(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

pub fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| input(format!("{}: {e}", path.display())))
}

/// Parse errors are reported against the file they came from.
pub fn in_file<T>(path: &Path, r: h3spec::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| {
        let mut c = CliError::from(e);
        if let CliError::Input(m) = &mut c {
            *m = format!("{}: {m}", path.display());
        }
        c
    })
}

pub struct Settings {
    file: BTreeMap<String, (usize, String)>,
    config: Option<PathBuf>,
    pub cutoff: Option<f64>,
    pub mode: Option<String>,
    pub radius: Option<f64>,
    pub out: Option<PathBuf>,
    pub kmin: Option<f64>,
    pub kmax: Option<f64>,
    pub kstep: Option<f64>,
    pub budget: Option<usize>,
    pub dedup_tol: Option<f64>,
    pub merge_tol: Option<f64>,
}

impl Settings {
    pub fn load(shared: &Shared) -> Result<Self, CliError> {
        let file = match &shared.config {
            Some(p) => {
                let map = in_file(p, h3spec::io::parse_config(&read(p)?))?;
                if let Some((k, (ln, _))) = map.iter().find(|(k, _)| !KNOWN_KEYS.contains(&k.as_str())) {
                    return Err(input(format!("{}: line {ln}: unknown key `{k}`", p.display())));
                }
                map
            }
            None => BTreeMap::new(),
        };
        Ok(Self {
            file,
            config: shared.config.clone(),
            cutoff: shared.cutoff,
            mode: shared.mode.clone(),
            radius: shared.radius,
            out: shared.out.clone(),
            kmin: shared.kmin,
            kmax: shared.kmax,
            kstep: shared.kstep,
            budget: shared.budget,
            dedup_tol: shared.dedup_tol,
            merge_tol: shared.merge_tol,
        })
    }

    /// The flag value, else the config value, else nothing.
    pub fn opt<T: FromStr>(&self, key: &str, flag: Option<T>) -> Result<Option<T>, CliError> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.file.get(key) {
            None => Ok(None),
            Some((ln, v)) => v.parse().map(Some).map_err(|_| {
                let file = self.config.as_deref().unwrap_or(Path::new("config"));
                input(format!("{}: line {ln}: bad value `{v}` for `{key}`", file.display()))
            }),
        }
    }

    pub fn get<T: FromStr>(&self, key: &str, flag: Option<T>, default: T) -> Result<T, CliError> {
        Ok(self.opt(key, flag)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, key: &str, flag: Option<T>) -> Result<T, CliError> {
        self.opt(key, flag)?
            .ok_or_else(|| input(format!("`--{}` is required", key.replace('_', "-"))))
    }

    pub fn out_dir(&self) -> Result<PathBuf, CliError> {
        let dir = self.get("out", self.out.clone(), PathBuf::from("."))?;
        std::fs::create_dir_all(&dir).map_err(|e| input(format!("{}: {e}", dir.display())))?;
        Ok(dir)
    }
}

/// `dir/<stem of input>.<suffix>`
pub fn output_path(dir: &Path, input: &Path, suffix: &str) -> PathBuf {
    let stem = input
        .file_name()
        .and_then(|s| s.to_str())
        .map(|s| s.split('.').next().unwrap_or(s))
        .filter(|s| !s.is_empty())
        .unwrap_or("out");
    dir.join(format!("{stem}.{suffix}"))
}

pub fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| input(format!("{}: {e}", path.display())))
}

/// Comma-separated reals.
pub fn reals<const N: usize>(key: &str, s: &str) -> Result<[f64; N], CliError> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| input(format!("`{key}` expects comma-separated numbers, got `{s}`")))?;
    v.try_into()
        .map_err(|_| input(format!("`{key}` expects {N} numbers, got `{s}`")))
}
