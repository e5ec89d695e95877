//! Plain-text configuration: flat `key = value` lines grouped by
//! `[section]` headers, with `#`/`;` comments. Each subcommand resolves the
//! file against its own defaults and renders a canonical echo whose content
//! hash names the output directory.

use gls_sync::{Bounds, InjectionMode, Regime, SimConfig, Vec3};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub msg: String,
}

impl ConfigError {
    fn at(line: usize, msg: impl Into<String>) -> Self {
        Self {
            line: Some(line),
            msg: msg.into(),
        }
    }

    fn plain(msg: impl Into<String>) -> Self {
        Self {
            line: None,
            msg: msg.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(n) => write!(f, "config line {n}: {}", self.msg),
            None => write!(f, "config: {}", self.msg),
        }
    }
}

type Entry = (String, usize); // value, line number

/// Parsed but untyped file: section -> key -> (value, line).
#[derive(Debug, Default)]
pub struct RawConfig {
    sections: BTreeMap<String, BTreeMap<String, Entry>>,
}

const KNOWN_SECTIONS: [&str; 4] = ["sim", "sigma", "comms", "stability"];

pub fn parse_str(text: &str) -> Result<RawConfig, ConfigError> {
    let mut raw = RawConfig::default();
    let mut section: Option<String> = None;
    for (i, line_raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = line_raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| ConfigError::at(lineno, "unterminated section header"))?
                .trim();
            if !KNOWN_SECTIONS.contains(&name) {
                return Err(ConfigError::at(lineno, format!("unknown section [{name}]")));
            }
            section = Some(name.to_string());
            raw.sections.entry(name.to_string()).or_default();
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ConfigError::at(lineno, "expected key = value"))?;
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() {
            return Err(ConfigError::at(lineno, "empty key"));
        }
        let sec = section
            .clone()
            .ok_or_else(|| ConfigError::at(lineno, format!("key {key:?} before any [section]")))?;
        let entries = raw.sections.get_mut(&sec).unwrap();
        if entries
            .insert(key.to_string(), (value.to_string(), lineno))
            .is_some()
        {
            return Err(ConfigError::at(
                lineno,
                format!("duplicate key {key:?} in [{sec}]"),
            ));
        }
    }
    Ok(raw)
}

impl RawConfig {
    fn take(&mut self, section: &str, key: &str) -> Option<Entry> {
        self.sections.get_mut(section)?.remove(key)
    }

    /// Every key must have been consumed by the resolver; anything left is
    /// a typo worth failing loudly on.
    fn reject_leftovers(&self) -> Result<(), ConfigError> {
        for (sec, entries) in &self.sections {
            if let Some((key, (_, line))) = entries.iter().next() {
                return Err(ConfigError::at(
                    *line,
                    format!("unknown key {key:?} in [{sec}]"),
                ));
            }
        }
        Ok(())
    }
}

fn parse_f64(key: &str, entry: &Entry) -> Result<f64, ConfigError> {
    entry
        .0
        .parse::<f64>()
        .map_err(|_| ConfigError::at(entry.1, format!("{key}: expected a number, got {:?}", entry.0)))
}

fn parse_usize(key: &str, entry: &Entry) -> Result<usize, ConfigError> {
    entry.0.parse::<usize>().map_err(|_| {
        ConfigError::at(
            entry.1,
            format!("{key}: expected a non-negative integer, got {:?}", entry.0),
        )
    })
}

fn parse_triple(key: &str, entry: &Entry) -> Result<Vec3, ConfigError> {
    let parts: Vec<&str> = entry.0.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(ConfigError::at(
            entry.1,
            format!("{key}: expected three comma-separated numbers"),
        ));
    }
    let mut out = [0.0; 3];
    for (i, part) in parts.iter().enumerate() {
        out[i] = part.parse::<f64>().map_err(|_| {
            ConfigError::at(entry.1, format!("{key}: bad component {part:?}"))
        })?;
    }
    Ok(out)
}

/// One σ component: a fixed value or an inclusive start:stop:step range
/// (ranges are meaningful only for sweeps).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SigmaComponent {
    Scalar(f64),
    Range { start: f64, stop: f64, step: f64 },
}

impl SigmaComponent {
    fn parse(key: &str, entry: &Entry) -> Result<Self, ConfigError> {
        if entry.0.contains(':') {
            let parts: Vec<&str> = entry.0.split(':').map(str::trim).collect();
            if parts.len() != 3 {
                return Err(ConfigError::at(
                    entry.1,
                    format!("{key}: range must be start:stop:step"),
                ));
            }
            let nums: Result<Vec<f64>, _> = parts.iter().map(|p| p.parse::<f64>()).collect();
            let nums = nums.map_err(|_| {
                ConfigError::at(entry.1, format!("{key}: bad range component"))
            })?;
            let (start, stop, step) = (nums[0], nums[1], nums[2]);
            if step <= 0.0 || step.is_nan() {
                return Err(ConfigError::at(entry.1, format!("{key}: step must be > 0")));
            }
            if stop < start {
                return Err(ConfigError::at(
                    entry.1,
                    format!("{key}: empty range (stop < start)"),
                ));
            }
            Ok(Self::Range { start, stop, step })
        } else {
            Ok(Self::Scalar(parse_f64(key, entry)?))
        }
    }

    fn expand(&self) -> Vec<f64> {
        match *self {
            Self::Scalar(v) => vec![v],
            Self::Range { start, stop, step } => {
                let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
                (0..n).map(|i| start + i as f64 * step).collect()
            }
        }
    }

    fn scalar(&self, key: &str) -> Result<f64, ConfigError> {
        match self {
            Self::Scalar(v) => Ok(*v),
            Self::Range { .. } => Err(ConfigError::plain(format!(
                "{key}: ranges only apply to the sweep subcommand"
            ))),
        }
    }

    fn render(&self) -> String {
        match *self {
            Self::Scalar(v) => format!("{v}"),
            Self::Range { start, stop, step } => format!("{start}:{stop}:{step}"),
        }
    }
}

/// Built-in sweep grids.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepPreset {
    /// σ = (s,s,s) for s in 0..1 step 0.2.
    Literal,
    /// σ = (1,1,s) for s in −1..1 step 0.2.
    Figure,
}

impl SweepPreset {
    pub fn parse(s: &str) -> Result<Self, ConfigError> {
        match s {
            "literal" => Ok(Self::Literal),
            "figure" => Ok(Self::Figure),
            other => Err(ConfigError::plain(format!(
                "preset must be literal or figure, got {other:?}"
            ))),
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Self::Literal => "literal",
            Self::Figure => "figure",
        }
    }

    fn grid(&self) -> Vec<Vec3> {
        match self {
            Self::Literal => gls_sync::literal_sigma_grid(),
            Self::Figure => gls_sync::figure_sigma_grid(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SigmaSpec {
    Preset(SweepPreset),
    Components([SigmaComponent; 3]),
}

impl SigmaSpec {
    pub fn grid(&self) -> Result<Vec<Vec3>, ConfigError> {
        let grid = match self {
            Self::Preset(p) => p.grid(),
            Self::Components(parts) => {
                let (s1, s2, s3) = (parts[0].expand(), parts[1].expand(), parts[2].expand());
                let mut out = Vec::with_capacity(s1.len() * s2.len() * s3.len());
                for a in &s1 {
                    for b in &s2 {
                        for c in &s3 {
                            out.push([*a, *b, *c]);
                        }
                    }
                }
                out
            }
        };
        if grid.is_empty() {
            return Err(ConfigError::plain("empty sigma grid"));
        }
        Ok(grid)
    }

    fn scalars(&self) -> Result<Vec3, ConfigError> {
        match self {
            Self::Preset(_) => Err(ConfigError::plain(
                "sigma preset only applies to the sweep subcommand",
            )),
            Self::Components(parts) => Ok([
                parts[0].scalar("s1")?,
                parts[1].scalar("s2")?,
                parts[2].scalar("s3")?,
            ]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommsSettings {
    pub case: u8,
    pub regime: Regime,
    pub mode: InjectionMode,
    pub amplitude: f64,
    pub offset: f64,
    pub band_halfwidth: f64,
    pub fit_trim: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Simulate,
    Sweep,
    Stability,
    Comms,
    Spectrum,
}

impl CommandKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Simulate => "simulate",
            Self::Sweep => "sweep",
            Self::Stability => "stability",
            Self::Comms => "comms",
            Self::Spectrum => "spectrum",
        }
    }

    fn default_steps(&self) -> (usize, usize) {
        match self {
            // long master run for amplitude bounds
            Self::Stability => (40000, 2000),
            // 8192-sample analysis window
            Self::Comms | Self::Spectrum => (10239, 2048),
            Self::Simulate | Self::Sweep => (4000, 2000),
        }
    }
}

/// Flag-level overrides that take precedence over file keys.
#[derive(Debug, Default, Clone, Copy)]
pub struct Overrides {
    pub preset: Option<SweepPreset>,
    pub case: Option<u8>,
    pub regime: Option<Regime>,
}

/// A fully resolved run configuration for one subcommand.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub kind: CommandKind,
    pub sim: SimConfig,
    pub sigma: SigmaSpec,
    pub comms: CommsSettings,
    pub stability_override: Option<Bounds>,
}

pub fn resolve(
    kind: CommandKind,
    mut raw: RawConfig,
    over: &Overrides,
) -> Result<Resolved, ConfigError> {
    let (default_steps, default_transient) = kind.default_steps();
    let mut sim = SimConfig {
        n_steps: default_steps,
        transient_steps: default_transient,
        ..SimConfig::default()
    };
    if let Some(e) = raw.take("sim", "h") {
        sim.h = parse_f64("h", &e)?;
    }
    if let Some(e) = raw.take("sim", "k") {
        sim.k = parse_f64("k", &e)?;
    }
    if let Some(e) = raw.take("sim", "n_steps") {
        sim.n_steps = parse_usize("n_steps", &e)?;
    }
    if let Some(e) = raw.take("sim", "transient_steps") {
        sim.transient_steps = parse_usize("transient_steps", &e)?;
    }
    if let Some(e) = raw.take("sim", "x0") {
        sim.x0 = parse_triple("x0", &e)?;
    }
    if let Some(e) = raw.take("sim", "y0") {
        sim.y0 = parse_triple("y0", &e)?;
    }

    let file_components = {
        let mut parts = [
            SigmaComponent::Scalar(1.0),
            SigmaComponent::Scalar(1.0),
            SigmaComponent::Scalar(1.0),
        ];
        let mut any = false;
        for (i, key) in ["s1", "s2", "s3"].iter().enumerate() {
            if let Some(e) = raw.take("sigma", key) {
                parts[i] = SigmaComponent::parse(key, &e)?;
                any = true;
            }
        }
        (parts, any)
    };
    let file_preset = match raw.take("sigma", "preset") {
        Some(e) => Some(SweepPreset::parse(&e.0).map_err(|err| ConfigError::at(e.1, err.msg))?),
        None => None,
    };
    if file_preset.is_some() && file_components.1 {
        return Err(ConfigError::plain(
            "[sigma] cannot mix preset with s1/s2/s3",
        ));
    }
    let sigma = match (over.preset, file_preset) {
        (Some(p), _) => SigmaSpec::Preset(p),
        (None, Some(p)) => SigmaSpec::Preset(p),
        (None, None) => SigmaSpec::Components(file_components.0),
    };

    let mut comms = CommsSettings {
        case: 1,
        regime: Regime::Positive,
        mode: InjectionMode::Mask,
        amplitude: gls_sync::comms::DEFAULT_AMPLITUDE,
        offset: 0.0,
        band_halfwidth: gls_sync::comms::DEFAULT_BAND_HALFWIDTH,
        fit_trim: gls_sync::comms::DEFAULT_FIT_TRIM,
    };
    if let Some(e) = raw.take("comms", "case") {
        let c = parse_usize("case", &e)?;
        if !(1..=4).contains(&c) {
            return Err(ConfigError::at(e.1, "case: must be 1..=4".to_string()));
        }
        comms.case = c as u8;
    }
    if let Some(e) = raw.take("comms", "regime") {
        comms.regime =
            Regime::parse(&e.0).map_err(|err| ConfigError::at(e.1, err.to_string()))?;
    }
    if let Some(e) = raw.take("comms", "mode") {
        comms.mode =
            InjectionMode::parse(&e.0).map_err(|err| ConfigError::at(e.1, err.to_string()))?;
    }
    if let Some(e) = raw.take("comms", "amplitude") {
        comms.amplitude = parse_f64("amplitude", &e)?;
    }
    if let Some(e) = raw.take("comms", "offset") {
        comms.offset = parse_f64("offset", &e)?;
    }
    if let Some(e) = raw.take("comms", "band_halfwidth") {
        comms.band_halfwidth = parse_f64("band_halfwidth", &e)?;
    }
    if let Some(e) = raw.take("comms", "fit_trim") {
        comms.fit_trim = parse_usize("fit_trim", &e)?;
    }
    if let Some(c) = over.case {
        comms.case = c;
    }
    if let Some(r) = over.regime {
        comms.regime = r;
    }

    let stability_override = {
        let m = raw.take("stability", "M");
        let n = raw.take("stability", "N");
        let p = raw.take("stability", "P");
        match (m, n, p) {
            (None, None, None) => None,
            (Some(m), Some(n), Some(p)) => Some(Bounds {
                m: parse_f64("M", &m)?,
                n: parse_f64("N", &n)?,
                p: parse_f64("P", &p)?,
            }),
            _ => {
                return Err(ConfigError::plain(
                    "[stability] override needs all of M, N, P",
                ))
            }
        }
    };

    raw.reject_leftovers()?;

    // commands that integrate a single coupled pair need scalar σ now
    match kind {
        CommandKind::Simulate | CommandKind::Stability => {
            sim.sigma = sigma.scalars()?;
        }
        CommandKind::Comms => {
            sim.sigma = comms.regime.sigma();
        }
        CommandKind::Sweep | CommandKind::Spectrum => {}
    }

    Ok(Resolved {
        kind,
        sim,
        sigma,
        comms,
        stability_override,
    })
}

impl Resolved {
    /// Canonical text echo: fixed key order, round-trip-exact numbers, only
    /// the sections this subcommand consumes. Hashing this names the output
    /// directory; re-parsing it reproduces the configuration.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        let sim = &self.sim;
        s.push_str("[sim]\n");
        s.push_str(&format!("h = {}\n", sim.h));
        s.push_str(&format!("k = {}\n", sim.k));
        s.push_str(&format!("n_steps = {}\n", sim.n_steps));
        s.push_str(&format!("transient_steps = {}\n", sim.transient_steps));
        s.push_str(&format!("x0 = {},{},{}\n", sim.x0[0], sim.x0[1], sim.x0[2]));
        s.push_str(&format!("y0 = {},{},{}\n", sim.y0[0], sim.y0[1], sim.y0[2]));

        match self.kind {
            CommandKind::Simulate | CommandKind::Sweep | CommandKind::Stability => {
                s.push_str("\n[sigma]\n");
                match &self.sigma {
                    SigmaSpec::Preset(p) => s.push_str(&format!("preset = {}\n", p.name())),
                    SigmaSpec::Components(parts) => {
                        for (i, key) in ["s1", "s2", "s3"].iter().enumerate() {
                            s.push_str(&format!("{key} = {}\n", parts[i].render()));
                        }
                    }
                }
            }
            CommandKind::Comms => {
                s.push_str("\n[comms]\n");
                let c = &self.comms;
                s.push_str(&format!("amplitude = {}\n", c.amplitude));
                s.push_str(&format!("band_halfwidth = {}\n", c.band_halfwidth));
                s.push_str(&format!("case = {}\n", c.case));
                s.push_str(&format!("fit_trim = {}\n", c.fit_trim));
                s.push_str(&format!("mode = {}\n", c.mode.label()));
                s.push_str(&format!("offset = {}\n", c.offset));
                s.push_str(&format!("regime = {}\n", c.regime.label()));
            }
            CommandKind::Spectrum => {}
        }

        if self.kind == CommandKind::Stability {
            if let Some(b) = &self.stability_override {
                s.push_str("\n[stability]\n");
                s.push_str(&format!("M = {}\n", b.m));
                s.push_str(&format!("N = {}\n", b.n));
                s.push_str(&format!("P = {}\n", b.p));
            }
        }
        s
    }

    pub fn hash12(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        hex[..12].to_string()
    }
}
