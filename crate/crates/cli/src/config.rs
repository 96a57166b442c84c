//! Run configuration: per-command parameter tables, the flat `key = value`
//! config file, and resolution of flags over file over defaults.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use fluxlattice::gutzwiller::Interaction;
use fluxlattice::{Boundary, FluxRatio, LatticeSpec};
use serde_json::{json, Value as Json};

#[derive(Debug)]
pub enum CliError {
    /// Bad invocation or configuration; exit code 2.
    Usage(String),
    /// Failure while running a valid configuration; exit code 1.
    Runtime(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<fluxlattice::Error> for CliError {
    fn from(e: fluxlattice::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Int,
    Float,
    Flux,
    Boundary,
    Bool,
    /// Comma-separated numbers or a `start:stop:count` range.
    FloatList,
    Choice(&'static [&'static str]),
    Path,
}

#[derive(Debug, Clone, Copy)]
pub struct Param {
    pub key: &'static str,
    pub kind: Kind,
    pub default: &'static str,
    pub help: &'static str,
}

const fn p(key: &'static str, kind: Kind, default: &'static str, help: &'static str) -> Param {
    Param { key, kind, default, help }
}

/// Keys every command accepts.
pub const COMMON: &[Param] = &[
    p("out", Kind::Path, "out", "output directory"),
    p("threads", Kind::Int, "1", "worker threads; results do not depend on it"),
];

pub const COMMANDS: &[(&str, &str, &[Param])] = &[
    (
        "butterfly",
        "Hofstadter butterfly over all fractions p/r with r <= rmax",
        &[
            p("rmax", Kind::Int, "8", "largest flux denominator"),
            p("ksamples", Kind::Int, "64", "k-points per axis of the magnetic zone"),
            p("svg", Kind::Bool, "true", "also write a scatter plot"),
        ],
    ),
    (
        "spectrum",
        "Band structure of one rational flux",
        &[
            p("alpha", Kind::Flux, "1/3", "flux per plaquette p/r"),
            p("ksamples", Kind::Int, "64", "k-points per axis of the magnetic zone"),
            p("gap-tol", Kind::Float, "0.001", "gap (in J) below which bands count as touching"),
        ],
    ),
    (
        "evolve",
        "Row-density dynamics of the uniform initial state",
        &[
            p("alpha", Kind::Flux, "1/6", "flux per plaquette (p/r, decimal or 1/2pi)"),
            p("nx", Kind::Int, "36", "sites along x"),
            p("ny", Kind::Int, "36", "sites along y"),
            p("bc-x", Kind::Boundary, "periodic", "x boundary (open|periodic)"),
            p("bc-y", Kind::Boundary, "periodic", "y boundary (open|periodic)"),
            p("tmax", Kind::Float, "6", "final time in 1/J"),
            p("samples", Kind::Int, "60", "number of time steps between snapshots"),
            p("method", Kind::Choice(&["auto", "spectral", "chebyshev"]), "auto", "propagator"),
            p("period-at", Kind::Float, "4", "time at which the row-density period is reported"),
            p("dump-operator", Kind::Bool, "false", "write the sparse Hamiltonian to operator.txt"),
            p("svg", Kind::Bool, "true", "also write a density heat map"),
        ],
    ),
    (
        "wannier",
        "Wannier overlaps Γx, Γy and tunnelling J versus lattice depth",
        &[
            p("depth", Kind::FloatList, "2:30:29", "lattice depths V0/E_R (list or start:stop:count)"),
            p("alpha", Kind::FloatList, "0,0.125,0.25,0.375,0.5", "flux values for Γy"),
            p("planewaves", Kind::Int, "41", "plane waves in the band calculation (odd)"),
        ],
    ),
    (
        "laser-angles",
        "Beam angles producing a Raman momentum transfer q",
        &[
            p("q", Kind::Float, "1.4142135623730951", "momentum transfer"),
            p("delta-prime", Kind::Float, "0", "(Δ + ω_eg)/c, same units as q"),
            p("kg", Kind::Float, "1", "wave number of the g beam"),
            p("format", Kind::Choice(&["text", "kv"]), "text", "stdout format"),
        ],
    ),
    (
        "gutzwiller",
        "Gutzwiller mean-field ground state in a harmonic trap",
        &[
            p("alpha", Kind::Flux, "0", "flux per plaquette"),
            p("u", Kind::Float, "16", "onsite interaction in J"),
            p("mu", Kind::Float, "6", "chemical potential in J"),
            p("omega-t", Kind::Float, "0.06", "trap curvature in J per site²"),
            p("nmax", Kind::Int, "8", "Fock-space cutoff"),
            p("size", Kind::Int, "32", "lattice is size × size, open boundaries"),
            p("interaction", Kind::Choice(&["half", "normal-ordered"]), "half", "U n(n-1)/2 or U n(n-1)"),
            p("tol", Kind::Float, "1e-8", "convergence threshold on max |Δφ|"),
            p("max-sweeps", Kind::Int, "5000", "sweep limit"),
            p("svg", Kind::Bool, "true", "also write |φ| and σ² maps"),
        ],
    ),
];

pub fn command_params(command: &str) -> Option<&'static [Param]> {
    COMMANDS.iter().find(|(n, _, _)| *n == command).map(|(_, _, p)| *p)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(u64),
    Float(f64),
    Flux(FluxRatio),
    Boundary(Boundary),
    Bool(bool),
    List(Vec<f64>),
    Text(String),
}

impl Value {
    fn to_json(&self) -> Json {
        match self {
            Value::Int(v) => json!(v),
            Value::Float(v) => json!(v),
            Value::Flux(f) => json!(f.to_string()),
            Value::Boundary(b) => json!(b.to_string()),
            Value::Bool(b) => json!(b),
            Value::List(v) => json!(v),
            Value::Text(s) => json!(s),
        }
    }
}

fn parse_float(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

fn parse_list(s: &str) -> Option<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() == 3 {
        let (a, b) = (parse_float(parts[0])?, parse_float(parts[1])?);
        let n: usize = parts[2].trim().parse().ok()?;
        return match n {
            0 => None,
            1 => Some(vec![a]),
            _ => Some((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()),
        };
    }
    let v: Option<Vec<f64>> = s.split(',').map(parse_float).collect();
    v.filter(|v| !v.is_empty())
}

pub fn parse_value(param: &Param, raw: &str) -> CliResult<Value> {
    let bad = |what: &str| {
        CliError::Usage(format!("--{}: expected {what}, got {raw:?}", param.key))
    };
    let raw_t = raw.trim();
    Ok(match param.kind {
        Kind::Int => Value::Int(raw_t.parse().map_err(|_| bad("a non-negative integer"))?),
        Kind::Float => Value::Float(parse_float(raw_t).ok_or_else(|| bad("a number"))?),
        Kind::Flux => Value::Flux(raw_t.parse().map_err(|_| bad("a flux like 1/6, 0.25 or 1/2pi"))?),
        Kind::Boundary => Value::Boundary(raw_t.parse().map_err(|_| bad("open or periodic"))?),
        Kind::Bool => Value::Bool(match raw_t {
            "true" | "yes" | "1" => true,
            "false" | "no" | "0" => false,
            _ => return Err(bad("true or false")),
        }),
        Kind::FloatList => Value::List(parse_list(raw_t).ok_or_else(|| bad("a list a,b,c or a range start:stop:count"))?),
        Kind::Choice(choices) => {
            if !choices.contains(&raw_t) {
                return Err(bad(&format!("one of {}", choices.join(", "))));
            }
            Value::Text(raw_t.to_string())
        }
        Kind::Path => Value::Text(raw_t.to_string()),
    })
}

/// Contents of a config file: the command it names (if any) and its keys.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    pub command: Option<String>,
    pub values: BTreeMap<String, String>,
}

/// Parses `key = value` lines. `#` starts a comment; a line
/// `command = name` (or a bare name on its own line) selects the command.
pub fn parse_config_text(text: &str) -> CliResult<ConfigFile> {
    let mut out = ConfigFile::default();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = match line.split_once('=') {
            Some((k, v)) => (k.trim().replace('_', "-"), v.trim().to_string()),
            None if !line.contains(char::is_whitespace) => ("command".to_string(), line.to_string()),
            None => {
                return Err(CliError::Usage(format!(
                    "config line {}: expected `key = value`, got {line:?}",
                    no + 1
                )))
            }
        };
        if key == "command" {
            if out.command.replace(value).is_some() {
                return Err(CliError::Usage(format!("config line {}: command given twice", no + 1)));
            }
        } else if out.values.insert(key.clone(), value).is_some() {
            return Err(CliError::Usage(format!("config line {}: duplicate key {key:?}", no + 1)));
        }
    }
    Ok(out)
}

pub fn read_config_file(path: &Path) -> CliResult<ConfigFile> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    parse_config_text(&text)
}

/// Fully resolved configuration of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: String,
    pub values: BTreeMap<String, Value>,
}

impl RunConfig {
    /// Merges defaults, file values and flags (in increasing priority) and
    /// validates the result.
    pub fn resolve(
        command: &str,
        file: &BTreeMap<String, String>,
        flags: &BTreeMap<String, String>,
    ) -> CliResult<Self> {
        let params = command_params(command)
            .ok_or_else(|| CliError::Usage(format!("unknown command {command:?}")))?;
        for key in file.keys() {
            if !params.iter().chain(COMMON).any(|p| p.key == key) {
                return Err(CliError::Usage(format!(
                    "unknown key {key:?} for command {command}"
                )));
            }
        }
        let mut values = BTreeMap::new();
        for param in params.iter().chain(COMMON) {
            let raw = flags
                .get(param.key)
                .or_else(|| file.get(param.key))
                .map(String::as_str)
                .unwrap_or(param.default);
            values.insert(param.key.to_string(), parse_value(param, raw)?);
        }
        let cfg = RunConfig { command: command.to_string(), values };
        cfg.validate()?;
        Ok(cfg)
    }

    fn get(&self, key: &str) -> &Value {
        self.values
            .get(key)
            .unwrap_or_else(|| panic!("no parameter {key} for {}", self.command))
    }

    pub fn int(&self, key: &str) -> usize {
        match self.get(key) {
            Value::Int(v) => *v as usize,
            other => panic!("{key} is not an integer: {other:?}"),
        }
    }

    pub fn float(&self, key: &str) -> f64 {
        match self.get(key) {
            Value::Float(v) => *v,
            other => panic!("{key} is not a number: {other:?}"),
        }
    }

    pub fn flux(&self, key: &str) -> FluxRatio {
        match self.get(key) {
            Value::Flux(f) => *f,
            other => panic!("{key} is not a flux: {other:?}"),
        }
    }

    pub fn boundary(&self, key: &str) -> Boundary {
        match self.get(key) {
            Value::Boundary(b) => *b,
            other => panic!("{key} is not a boundary: {other:?}"),
        }
    }

    pub fn flag(&self, key: &str) -> bool {
        match self.get(key) {
            Value::Bool(b) => *b,
            other => panic!("{key} is not a bool: {other:?}"),
        }
    }

    pub fn list(&self, key: &str) -> &[f64] {
        match self.get(key) {
            Value::List(v) => v,
            other => panic!("{key} is not a list: {other:?}"),
        }
    }

    pub fn text(&self, key: &str) -> &str {
        match self.get(key) {
            Value::Text(s) => s,
            other => panic!("{key} is not text: {other:?}"),
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        PathBuf::from(self.text("out"))
    }

    pub fn threads(&self) -> usize {
        self.int("threads")
    }

    pub fn interaction(&self) -> Interaction {
        self.text("interaction").parse().expect("validated choice")
    }

    /// Lattice of the `evolve` command.
    pub fn evolve_lattice(&self) -> CliResult<LatticeSpec> {
        LatticeSpec::new(self.int("nx"), self.int("ny"), self.boundary("bc-x"), self.boundary("bc-y"))
            .map_err(|e| CliError::Usage(e.to_string()))
    }

    fn validate(&self) -> CliResult<()> {
        let usage = |m: String| Err(CliError::Usage(m));
        if self.threads() == 0 {
            return usage("--threads must be >= 1".into());
        }
        match self.command.as_str() {
            "butterfly" => {
                if self.int("rmax") < 1 {
                    return usage("--rmax must be >= 1".into());
                }
                if self.int("ksamples") < 2 {
                    return usage("--ksamples must be >= 2".into());
                }
            }
            "spectrum" => {
                if !self.flux("alpha").is_rational() {
                    return usage("--alpha must be a fraction p/r for a band structure".into());
                }
                if self.int("ksamples") < 2 {
                    return usage("--ksamples must be >= 2".into());
                }
                if !(self.float("gap-tol") > 0.0) {
                    return usage("--gap-tol must be > 0".into());
                }
            }
            "evolve" => {
                let spec = self.evolve_lattice()?;
                spec.check_flux(&self.flux("alpha"))
                    .map_err(|e| CliError::Usage(format!("commensurability: {e}")))?;
                if self.int("samples") < 1 {
                    return usage("--samples must be >= 1".into());
                }
                if !(self.float("tmax") >= 0.0) {
                    return usage("--tmax must be >= 0".into());
                }
            }
            "wannier" => {
                let npw = self.int("planewaves");
                if npw < 11 || npw % 2 == 0 {
                    return usage(format!("--planewaves must be odd and >= 11, got {npw}"));
                }
                if self.list("depth").iter().any(|&d| d < 0.0) {
                    return usage("--depth values must be >= 0".into());
                }
            }
            "laser-angles" => {
                if !(self.float("kg") > 0.0) {
                    return usage("--kg must be > 0".into());
                }
            }
            "gutzwiller" => {
                if self.int("size") < 1 || self.int("nmax") < 1 {
                    return usage("--size and --nmax must be >= 1".into());
                }
                if self.float("u") < 0.0 {
                    return usage("--u must be >= 0".into());
                }
                if self.float("omega-t") < 0.0 {
                    return usage("--omega-t must be >= 0".into());
                }
                if !(self.float("tol") > 0.0) {
                    return usage("--tol must be > 0".into());
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Resolved configuration as pretty JSON with sorted keys.
    pub fn to_json(&self) -> String {
        let params: serde_json::Map<String, Json> = self
            .values
            .iter()
            .map(|(k, v)| (k.clone(), v.to_json()))
            .collect();
        let doc = json!({ "command": self.command, "parameters": params });
        let mut s = serde_json::to_string_pretty(&doc).expect("serialisable");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn defaults_fill_in() {
        let c = RunConfig::resolve("butterfly", &BTreeMap::new(), &flags(&[("rmax", "8")])).unwrap();
        assert_eq!(c.int("rmax"), 8);
        assert_eq!(c.int("ksamples"), 64);
        assert_eq!(c.threads(), 1);
    }

    #[test]
    fn flags_beat_file_beat_defaults() {
        let file = flags(&[("ksamples", "16"), ("rmax", "3")]);
        let c = RunConfig::resolve("butterfly", &file, &flags(&[("rmax", "5")])).unwrap();
        assert_eq!(c.int("rmax"), 5);
        assert_eq!(c.int("ksamples"), 16);
    }

    #[test]
    fn incommensurate_periodic_lattice_is_usage_error() {
        let f = flags(&[("alpha", "1/6"), ("ny", "35"), ("bc-y", "periodic")]);
        match RunConfig::resolve("evolve", &BTreeMap::new(), &f) {
            Err(CliError::Usage(m)) => assert!(m.contains("commensurability"), "{m}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_and_bad_types_rejected() {
        assert!(matches!(
            RunConfig::resolve("butterfly", &flags(&[("colour", "red")]), &BTreeMap::new()),
            Err(CliError::Usage(_))
        ));
        assert!(matches!(
            RunConfig::resolve("butterfly", &BTreeMap::new(), &flags(&[("rmax", "eight")])),
            Err(CliError::Usage(_))
        ));
        assert!(matches!(
            RunConfig::resolve("nope", &BTreeMap::new(), &BTreeMap::new()),
            Err(CliError::Usage(_))
        ));
    }

    #[test]
    fn config_text() {
        let f = parse_config_text("# dynamics run\ncommand = evolve\nalpha = 1/6\nbc_y = open  # trailing\n").unwrap();
        assert_eq!(f.command.as_deref(), Some("evolve"));
        assert_eq!(f.values["bc-y"], "open");
        let f = parse_config_text("butterfly\nrmax = 2\n").unwrap();
        assert_eq!(f.command.as_deref(), Some("butterfly"));
        assert!(parse_config_text("rmax = 2\nrmax = 3\n").is_err());
        assert!(parse_config_text("not a pair\n").is_err());
    }

    #[test]
    fn lists_and_ranges() {
        assert_eq!(parse_list("1,2.5"), Some(vec![1.0, 2.5]));
        assert_eq!(parse_list("2:4:3"), Some(vec![2.0, 3.0, 4.0]));
        assert_eq!(parse_list("2:4:0"), None);
        assert_eq!(parse_list(""), None);
    }

    #[test]
    fn json_is_sorted_and_stable() {
        let c = RunConfig::resolve("laser-angles", &BTreeMap::new(), &BTreeMap::new()).unwrap();
        let j = c.to_json();
        let keys: Vec<usize> = ["delta-prime", "format", "kg", "out", "q", "threads"]
            .iter()
            .map(|k| j.find(&format!("\"{k}\"")).unwrap())
            .collect();
        assert!(keys.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(j, c.clone().to_json());
    }
}
