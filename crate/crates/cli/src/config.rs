//! Flat `key = value` experiment files with `#` comments.

use std::collections::BTreeMap;
use std::fmt;

use vortlab_core::data::ProfileParams;
use vortlab_core::iteration::Retention;
use vortlab_core::{CompletionMode, ConvPath, DataSpec, Grid, IterationConfig, RadialProfile, SignPack};

#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub line: Option<usize>,
    pub key: String,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: key `{}`: {}", self.key, self.message),
            None => write!(f, "key `{}`: {}", self.key, self.message),
        }
    }
}

impl std::error::Error for ParseError {}

fn err(key: &str, message: impl Into<String>) -> ParseError {
    ParseError {
        line: None,
        key: key.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileKind {
    Singular,
    Smooth,
    Zero,
}

/// Everything one `run` needs.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub extent: f64,
    pub n: usize,
    pub nu: f64,
    pub t_final: f64,
    pub n_steps: usize,
    pub k_max: usize,
    pub conv_path: ConvPath,
    pub stop_tol: f64,
    pub retention: Option<usize>,
    pub i0: usize,
    pub mode: CompletionMode,
    pub profile: ProfileKind,
    pub k: u32,
    pub alpha0: f64,
    pub beta0: f64,
    pub amplitude: f64,
    pub flip_burgers: bool,
    pub flip_leray: bool,
    pub track_vorticity: bool,
    pub contraction: bool,
    pub decay: bool,
    pub incompressibility: bool,
    pub recursion: bool,
    pub blowup: bool,
    pub blowup_levels: usize,
    pub blowup_n0: usize,
    pub moment: bool,
    pub moment_fields: usize,
    pub manufactured: bool,
    pub nu_sweep: Vec<f64>,
    pub snapshots: bool,
    pub seed: u64,
    pub threads: usize,
    pub output_dir: String,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let p = ProfileParams::DEFAULT;
        Self {
            name: "experiment".into(),
            extent: 4.0,
            n: 33,
            nu: 0.1,
            t_final: 0.5,
            n_steps: 16,
            k_max: 8,
            conv_path: ConvPath::FastSeparable,
            stop_tol: 1e-10,
            retention: None,
            i0: 1,
            mode: CompletionMode::ProjectedDivFree,
            profile: ProfileKind::Singular,
            k: p.k,
            alpha0: p.alpha0,
            beta0: p.beta0,
            amplitude: 1.0,
            flip_burgers: false,
            flip_leray: false,
            track_vorticity: false,
            contraction: true,
            decay: true,
            incompressibility: true,
            recursion: false,
            blowup: true,
            blowup_levels: 3,
            blowup_n0: 257,
            moment: false,
            moment_fields: 100,
            manufactured: false,
            nu_sweep: Vec::new(),
            snapshots: false,
            seed: 0,
            threads: 0,
            output_dir: "vortlab-out".into(),
        }
    }
}

fn parse_bool(key: &str, v: &str) -> Result<bool, ParseError> {
    match v {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(err(key, format!("expected a boolean, got `{v}`"))),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, ParseError> {
    v.parse().map_err(|_| err(key, format!("cannot parse `{v}`")))
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut cfg = Self::default();
        let mut seen = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at = |mut e: ParseError| {
                e.line = Some(i + 1);
                e
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| at(err(line, "expected `key = value`")))?;
            let (key, value) = (key.trim(), value.trim());
            if seen.insert(key.to_string(), i + 1).is_some() {
                return Err(at(err(key, "set twice")));
            }
            cfg.set(key, value).map_err(at)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, v: &str) -> Result<(), ParseError> {
        match key {
            "name" => self.name = v.into(),
            "R" => self.extent = parse_num(key, v)?,
            "n" => self.n = parse_num(key, v)?,
            "nu" => self.nu = parse_num(key, v)?,
            "T" => self.t_final = parse_num(key, v)?,
            "n_steps" => self.n_steps = parse_num(key, v)?,
            "k_max" => self.k_max = parse_num(key, v)?,
            "conv_path" => self.conv_path = ConvPath::parse(v).ok_or_else(|| err(key, "expected direct or separable"))?,
            "stop_tol" => self.stop_tol = parse_num(key, v)?,
            "retention" => {
                self.retention = match v {
                    "all" => None,
                    _ => Some(parse_num(key, v)?),
                }
            }
            "i0" => self.i0 = parse_num(key, v)?,
            "mode" => {
                self.mode = match v {
                    "projected" => CompletionMode::ProjectedDivFree,
                    "literal" => CompletionMode::PaperLiteralSingleComponent,
                    _ => return Err(err(key, "expected projected or literal")),
                }
            }
            "profile" => {
                self.profile = match v {
                    "singular" => ProfileKind::Singular,
                    "smooth" => ProfileKind::Smooth,
                    "zero" => ProfileKind::Zero,
                    _ => return Err(err(key, "expected singular, smooth or zero")),
                }
            }
            "k" => self.k = parse_num(key, v)?,
            "alpha0" => self.alpha0 = parse_num(key, v)?,
            "beta0" => self.beta0 = parse_num(key, v)?,
            "amplitude" => self.amplitude = parse_num(key, v)?,
            "flip_burgers" => self.flip_burgers = parse_bool(key, v)?,
            "flip_leray" => self.flip_leray = parse_bool(key, v)?,
            "track_vorticity" => self.track_vorticity = parse_bool(key, v)?,
            "contraction" => self.contraction = parse_bool(key, v)?,
            "decay" => self.decay = parse_bool(key, v)?,
            "incompressibility" => self.incompressibility = parse_bool(key, v)?,
            "recursion" => self.recursion = parse_bool(key, v)?,
            "blowup" => self.blowup = parse_bool(key, v)?,
            "blowup_levels" => self.blowup_levels = parse_num(key, v)?,
            "blowup_n0" => self.blowup_n0 = parse_num(key, v)?,
            "moment" => self.moment = parse_bool(key, v)?,
            "moment_fields" => self.moment_fields = parse_num(key, v)?,
            "manufactured" => self.manufactured = parse_bool(key, v)?,
            "nu_sweep" => {
                self.nu_sweep = if v.is_empty() {
                    Vec::new()
                } else {
                    v.split(',').map(|s| parse_num(key, s.trim())).collect::<Result<_, _>>()?
                }
            }
            "snapshots" => self.snapshots = parse_bool(key, v)?,
            "seed" => self.seed = parse_num(key, v)?,
            "threads" => self.threads = parse_num(key, v)?,
            "output_dir" => self.output_dir = v.into(),
            _ => return Err(err(key, "unknown key")),
        }
        Ok(())
    }

    /// Structural checks. Values outside the admissible `beta0` interval
    /// only produce a warning when the profile is built.
    pub fn validate(&self) -> Result<(), ParseError> {
        if let Err(e) = Grid::new(self.extent, self.n) {
            let key = if matches!(e, vortlab_core::Error::BadExtent(_)) { "R" } else { "n" };
            return Err(err(key, e.to_string()));
        }
        if !(1..=3).contains(&self.i0) {
            return Err(err("i0", "must be 1, 2 or 3"));
        }
        if self.profile == ProfileKind::Singular {
            ProfileParams::new(self.k, self.alpha0, self.beta0).map_err(|e| match e {
                vortlab_core::Error::Parameter { name, .. } => err(name, e.to_string()),
                other => err("profile", other.to_string()),
            })?;
        }
        self.iteration_config().validate().map_err(|e| match e {
            vortlab_core::Error::Parameter { name, .. } => err(name, e.to_string()),
            other => err("iteration", other.to_string()),
        })?;
        if self.decay && self.extent < 3.0 {
            return Err(err("R", "decay envelopes need R >= 3"));
        }
        if self.blowup && (self.blowup_levels < 3 || self.blowup_n0 % 2 == 0) {
            return Err(err("blowup_levels", "need at least 3 levels and an odd blowup_n0"));
        }
        if !self.nu_sweep.is_empty() {
            if self.nu_sweep.len() < 3 {
                return Err(err("nu_sweep", "need at least three viscosities"));
            }
            if self.nu_sweep.windows(2).any(|w| !(w[1] < w[0])) || self.nu_sweep.iter().any(|&v| !(v > 0.0)) {
                return Err(err("nu_sweep", "viscosities must be positive and strictly descending"));
            }
        }
        Ok(())
    }

    pub fn radial_profile(&self) -> RadialProfile {
        match self.profile {
            ProfileKind::Singular => RadialProfile::Singular(ProfileParams {
                k: self.k,
                alpha0: self.alpha0,
                beta0: self.beta0,
            }),
            ProfileKind::Smooth => RadialProfile::Smooth { amplitude: self.amplitude },
            ProfileKind::Zero => RadialProfile::Zero,
        }
    }

    pub fn grid(&self) -> Grid {
        Grid::new(self.extent, self.n).expect("validated")
    }

    pub fn data_spec(&self) -> DataSpec {
        DataSpec {
            axis: self.i0 - 1,
            mode: self.mode,
            profile: self.radial_profile(),
        }
    }

    pub fn iteration_config(&self) -> IterationConfig {
        let grid = Grid::new(self.extent, self.n).unwrap_or_else(|_| Grid::new(4.0, 9).expect("fallback grid"));
        let mut c = IterationConfig::new(self.nu, self.t_final, self.data_spec(), grid);
        c.n_steps = self.n_steps;
        c.k_max = self.k_max;
        c.conv_path = self.conv_path;
        c.stop_tol = self.stop_tol;
        c.signs = SignPack {
            flip_burgers: self.flip_burgers,
            flip_leray: self.flip_leray,
        };
        c.track_vorticity = self.track_vorticity || self.recursion;
        c.retention = self.retention.map_or(Retention::All, Retention::Last);
        c
    }

    /// Every result-affecting key with its resolved value, sorted. Output
    /// location and thread count are excluded.
    pub fn canonical(&self) -> String {
        let mode = match self.mode {
            CompletionMode::ProjectedDivFree => "projected",
            CompletionMode::PaperLiteralSingleComponent => "literal",
        };
        let profile = match self.profile {
            ProfileKind::Singular => "singular",
            ProfileKind::Smooth => "smooth",
            ProfileKind::Zero => "zero",
        };
        let pairs: Vec<(&str, String)> = vec![
            ("R", self.extent.to_string()),
            ("T", self.t_final.to_string()),
            ("alpha0", self.alpha0.to_string()),
            ("amplitude", self.amplitude.to_string()),
            ("beta0", self.beta0.to_string()),
            ("blowup", self.blowup.to_string()),
            ("blowup_levels", self.blowup_levels.to_string()),
            ("blowup_n0", self.blowup_n0.to_string()),
            ("contraction", self.contraction.to_string()),
            ("conv_path", self.conv_path.label().into()),
            ("decay", self.decay.to_string()),
            ("flip_burgers", self.flip_burgers.to_string()),
            ("flip_leray", self.flip_leray.to_string()),
            ("i0", self.i0.to_string()),
            ("incompressibility", self.incompressibility.to_string()),
            ("k", self.k.to_string()),
            ("k_max", self.k_max.to_string()),
            ("manufactured", self.manufactured.to_string()),
            ("mode", mode.into()),
            ("moment", self.moment.to_string()),
            ("moment_fields", self.moment_fields.to_string()),
            ("n", self.n.to_string()),
            ("n_steps", self.n_steps.to_string()),
            ("name", self.name.clone()),
            ("nu", self.nu.to_string()),
            ("nu_sweep", fmt_list(&self.nu_sweep)),
            ("profile", profile.into()),
            ("recursion", self.recursion.to_string()),
            ("retention", self.retention.map_or("all".into(), |n| n.to_string())),
            ("seed", self.seed.to_string()),
            ("snapshots", self.snapshots.to_string()),
            ("stop_tol", self.stop_tol.to_string()),
            ("track_vorticity", self.track_vorticity.to_string()),
        ];
        pairs.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

/// Bundled experiment files, by stable name.
pub const PRESETS: &[(&str, &str)] = &[
    (
        "smoke",
        "# quick end-to-end check on a 16-cell grid
name = smoke
R = 4
n = 17
nu = 0.1
T = 0.5
n_steps = 4
k_max = 4
profile = smooth
mode = projected
contraction = true
decay = true
incompressibility = true
recursion = true
blowup = true
moment = true
moment_fields = 20
manufactured = true
",
    ),
    (
        "singular-default",
        "# singular data with alpha0 = 0.25, beta0 = 2.2 on 32 cells
name = singular-default
R = 4
n = 33
nu = 0.1
T = 0.5
n_steps = 16
k_max = 8
profile = singular
k = 0
alpha0 = 0.25
beta0 = 2.2
mode = projected
stop_tol = 0
",
    ),
    (
        "lipschitz-boundary",
        "# beta0 = 2 + alpha0: bounded, oscillatory vorticity
name = lipschitz-boundary
R = 4
n = 33
nu = 0.1
T = 0.5
n_steps = 16
k_max = 8
profile = singular
k = 0
alpha0 = 0.25
beta0 = 2.25
mode = projected
stop_tol = 0
",
    ),
    (
        "kink-k2",
        "# kink data of order 2: beta0 in (3, 3 + alpha0)
name = kink-k2
R = 4
n = 33
nu = 0.1
T = 0.5
n_steps = 16
k_max = 8
profile = singular
k = 2
alpha0 = 0.25
beta0 = 3.1
mode = projected
stop_tol = 0
",
    ),
    (
        "nu-sweep",
        "# viscosity sweep on smooth data
name = nu-sweep
R = 4
n = 33
nu = 0.2
T = 0.125
n_steps = 16
k_max = 5
profile = smooth
mode = projected
contraction = false
decay = false
incompressibility = false
blowup = false
nu_sweep = 0.2, 0.1, 0.05, 0.025
",
    ),
    (
        "moment-audit",
        "# Gaussian moment bound on randomized Lipschitz fields
name = moment-audit
R = 4
n = 33
nu = 0.1
T = 0.5
n_steps = 4
k_max = 3
profile = zero
contraction = false
decay = false
incompressibility = false
blowup = false
moment = true
moment_fields = 100
seed = 7
",
    ),
];

pub fn preset(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|p| p.0 == name).map(|p| p.1)
}
