//! Flat `key = value` experiment configuration.
//!
//! ```text
//! # Wegner sweep on a 10×10 cuboid
//! experiment = wegner
//! seed = 7
//! law = holder:alpha=0.5
//! coupling = 1
//! realizations = 2000
//! geometry.dim = 2
//! geometry.side = 10
//! interval = 1.0 ± 0.05
//! ```
//!
//! Keys are dotted (`section.key`), `#` starts a comment, lists are
//! `;`-separated and intervals are written `c ± h`, `c +- h` or `[a, b]`.
//! Parsing reports every problem it finds, each with its line number.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use anderson_core::msa::MassRule;
use anderson_core::{FrozenAssignment, Interval, LatticeBox, Region, Site, SiteLaw, TiltedRegion};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExperimentKind {
    Spectrum,
    Classify,
    Wegner,
    Flip,
    Sperner,
    Msa,
    Ucp,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::Spectrum,
        ExperimentKind::Classify,
        ExperimentKind::Wegner,
        ExperimentKind::Flip,
        ExperimentKind::Sperner,
        ExperimentKind::Msa,
        ExperimentKind::Ucp,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Spectrum => "spectrum",
            ExperimentKind::Classify => "classify",
            ExperimentKind::Wegner => "wegner",
            ExperimentKind::Flip => "flip",
            ExperimentKind::Sperner => "sperner",
            ExperimentKind::Msa => "msa",
            ExperimentKind::Ucp => "ucp",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown experiment `{s}` (expected one of spectrum, classify, wegner, flip, sperner, msa, ucp)"))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Shape {
    /// Centred cube, odd side.
    Box,
    /// `{0,…,L−1}^d`.
    #[default]
    Cuboid,
    /// Tilted square `{0 ≤ x+y < ℓ, 0 ≤ x−y < ℓ}`, d = 2.
    Tilted,
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Shape::Box => "box",
            Shape::Cuboid => "cuboid",
            Shape::Tilted => "tilted",
        })
    }
}

impl FromStr for Shape {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "box" => Ok(Shape::Box),
            "cuboid" => Ok(Shape::Cuboid),
            "tilted" => Ok(Shape::Tilted),
            _ => Err(format!("unknown shape `{s}` (expected box, cuboid or tilted)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Geometry {
    pub dim: usize,
    pub side: usize,
    pub shape: Shape,
}

impl Geometry {
    pub fn region(&self) -> anderson_core::Result<Region> {
        match self.shape {
            Shape::Box => Ok(Region::from_box(LatticeBox::centered(self.dim, self.side)?)),
            Shape::Cuboid => Region::cuboid(Site::origin(self.dim)?, self.side),
            Shape::Tilted => Region::tilted(TiltedRegion::square(0, 0, self.side)?),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Scheme {
    Spectrum,
    Classify { mass: f64, zeta: f64 },
    /// An empty list means the single window given by `interval`.
    Wegner { half_widths: Vec<f64> },
    Flip { site: Site, grid: usize, m_star: Option<f64> },
    Sperner { frozen: FrozenAssignment, m_star: Option<f64>, grid: usize },
    Msa { l0: usize, eta: f64, kappa: f64, scales: usize, m0: f64, rule: MassRule, zeta: f64 },
    Ucp { sides: Vec<usize>, epsilon: f64, alpha: f64, frozen_fraction: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub output: PathBuf,
    pub law: SiteLaw,
    pub coupling: f64,
    pub realizations: usize,
    pub dim: usize,
    /// Absent for experiments that build their own regions (msa, ucp).
    pub geometry: Option<Geometry>,
    pub energy: Option<f64>,
    pub interval: Option<Interval<f64>>,
    pub scheme: Scheme,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}: {}", self.key, self.message),
            None => write!(f, "{}: {}", self.key, self.message),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

impl ConfigErrors {
    pub fn mentions(&self, key: &str) -> bool {
        self.0.iter().any(|e| e.key == key)
    }
}

pub fn parse_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

fn parse_int<T: FromStr>(s: &str) -> Result<T, String> {
    s.trim().parse().map_err(|_| format!("`{s}` is not a nonnegative integer"))
}

/// `c ± h`, `c +- h` or `[a, b]`.
pub fn parse_interval(s: &str) -> Result<Interval<f64>, String> {
    let t = s.trim();
    let iv = if let Some(inner) = t.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
        let (a, b) = inner.split_once(',').ok_or_else(|| format!("interval `{s}` needs two endpoints"))?;
        Interval::new(parse_f64(a)?, parse_f64(b)?)
    } else if let Some((c, h)) = t.split_once('±').or_else(|| t.split_once("+-")) {
        Interval::centered(parse_f64(c)?, parse_f64(h)?)
    } else {
        return Err(format!("`{s}` is not an interval (use `c ± h` or `[a, b]`)"));
    };
    iv.map_err(|e| e.to_string())
}

fn parse_list<T>(s: &str, item: impl Fn(&str) -> Result<T, String>) -> Result<Vec<T>, String> {
    s.split(';').map(str::trim).filter(|p| !p.is_empty()).map(item).collect()
}

/// `1,2` or `(1,2)`.
pub fn parse_site(s: &str) -> Result<Site, String> {
    let t = s.trim().trim_start_matches('(').trim_end_matches(')');
    let coords = t
        .split(',')
        .map(|c| c.trim().parse::<i64>().map_err(|_| format!("`{s}` is not a site")))
        .collect::<Result<Vec<_>, _>>()?;
    Site::new(&coords).map_err(|e| e.to_string())
}

/// `x,y:v; x,y:v`.
pub fn parse_frozen(s: &str) -> Result<FrozenAssignment, String> {
    let mut out = FrozenAssignment::new();
    for entry in parse_list(s, |p| {
        let (site, v) = p.split_once(':').ok_or_else(|| format!("`{p}` is not `site:value`"))?;
        Ok((parse_site(site)?, parse_f64(v)?))
    })? {
        if out.insert(entry.0, entry.1).is_some() {
            return Err(format!("site {} frozen twice", entry.0));
        }
    }
    Ok(out)
}

fn fmt_site(s: &Site) -> String {
    s.coords().iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
}

struct Entry {
    value: String,
    line: usize,
}

/// Pulls keys out of the parsed line map, collecting errors as it goes.
struct Fields {
    entries: BTreeMap<String, Entry>,
    lines: BTreeMap<String, usize>,
    errors: Vec<ConfigError>,
}

impl Fields {
    fn error(&mut self, key: &str, message: impl Into<String>) {
        self.errors.push(ConfigError {
            line: self.lines.get(key).copied(),
            key: key.to_string(),
            message: message.into(),
        });
    }

    fn optional<T>(&mut self, key: &str, parse: impl Fn(&str) -> Result<T, String>) -> Option<T> {
        let entry = self.entries.remove(key)?;
        match parse(&entry.value) {
            Ok(v) => Some(v),
            Err(m) => {
                self.error(key, m);
                None
            }
        }
    }

    fn required<T>(&mut self, key: &str, parse: impl Fn(&str) -> Result<T, String>) -> Option<T> {
        if !self.entries.contains_key(key) {
            self.error(key, "missing required key");
            return None;
        }
        self.optional(key, parse)
    }

    fn check(&mut self, key: &str, ok: bool, message: impl FnOnce() -> String) {
        if !ok {
            self.error(key, message());
        }
    }

    fn check_open_unit(&mut self, key: &str, v: Option<f64>) {
        if let Some(v) = v {
            self.check(key, v > 0.0 && v < 1.0, || format!("{v} must lie in (0,1)"));
        }
    }
}

fn lex(text: &str) -> (BTreeMap<String, Entry>, BTreeMap<String, usize>, Vec<ConfigError>) {
    let mut entries = BTreeMap::new();
    let mut lines = BTreeMap::new();
    let mut errors = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            errors.push(ConfigError {
                line: Some(line),
                key: content.to_string(),
                message: "expected `key = value`".into(),
            });
            continue;
        };
        let key = key.trim().to_string();
        let valid_key = !key.is_empty()
            && key.split('.').all(|part| {
                !part.is_empty() && part.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
            });
        if !valid_key {
            errors.push(ConfigError {
                line: Some(line),
                key,
                message: "malformed key".into(),
            });
            continue;
        }
        if let Some(prev) = lines.get(&key) {
            errors.push(ConfigError {
                line: Some(line),
                key,
                message: format!("duplicate key (first set on line {prev})"),
            });
            continue;
        }
        lines.insert(key.clone(), line);
        entries.insert(
            key,
            Entry {
                value: value.trim().to_string(),
                line,
            },
        );
    }
    (entries, lines, errors)
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigErrors> {
    let (entries, lines, errors) = lex(text);
    let mut f = Fields {
        entries,
        lines,
        errors,
    };

    let kind = f.required("experiment", |s| s.parse::<ExperimentKind>());
    let seed = f.required("seed", parse_int::<u64>);
    let output = f.optional("output", |s| Ok(PathBuf::from(s))).unwrap_or_else(|| PathBuf::from("out"));
    let law = f.required("law", |s| s.parse::<SiteLaw>().map_err(|e| e.to_string()));
    let coupling = f.required("coupling", parse_f64);
    if let Some(g) = coupling {
        f.check("coupling", g >= 0.0, || format!("coupling {g} must be nonnegative"));
    }
    let dim = f.required("geometry.dim", parse_int::<usize>);
    if let Some(d) = dim {
        f.check("geometry.dim", (1..=3).contains(&d), || format!("dimension {d} not in 1..=3"));
    }

    let Some(kind) = kind else {
        return Err(ConfigErrors(f.errors));
    };

    let min_realizations = match kind {
        ExperimentKind::Wegner => Some(100),
        ExperimentKind::Msa => Some(200),
        ExperimentKind::Ucp => Some(100),
        _ => None,
    };
    let realizations = match (kind, min_realizations) {
        (ExperimentKind::Sperner, _) => Some(1),
        (_, Some(min)) => {
            let n = f.required("realizations", parse_int::<usize>);
            if let Some(n) = n {
                f.check("realizations", n >= min, || format!("{kind} needs at least {min} realizations, got {n}"));
            }
            n
        }
        (_, None) => {
            let n = f.optional("realizations", parse_int::<usize>).unwrap_or(1);
            f.check("realizations", n >= 1, || "at least one realization".into());
            Some(n)
        }
    };

    let geometry = match kind {
        ExperimentKind::Msa | ExperimentKind::Ucp => None,
        _ => {
            let side = f.required("geometry.side", parse_int::<usize>);
            let shape = f.optional("geometry.shape", |s| s.parse::<Shape>()).unwrap_or_default();
            match (dim, side) {
                (Some(dim), Some(side)) => {
                    let g = Geometry { dim, side, shape };
                    if let Err(e) = g.region() {
                        f.error("geometry.side", e.to_string());
                    }
                    Some(g)
                }
                _ => None,
            }
        }
    };

    let energy_needed = matches!(kind, ExperimentKind::Classify | ExperimentKind::Msa);
    let energy = if energy_needed {
        f.required("energy", parse_f64)
    } else if kind == ExperimentKind::Wegner {
        f.optional("energy", parse_f64)
    } else {
        None
    };
    let interval = match kind {
        ExperimentKind::Flip | ExperimentKind::Sperner => f.required("interval", parse_interval),
        ExperimentKind::Wegner => f.optional("interval", parse_interval),
        _ => None,
    };
    let needs_bernoulli = |f: &mut Fields, key: &str| {
        if let Some(l) = law {
            f.check(key, l.is_bernoulli(), || format!("requires a Bernoulli law, got {l}"));
        }
    };

    let scheme = match kind {
        ExperimentKind::Spectrum => Some(Scheme::Spectrum),
        ExperimentKind::Classify => {
            let mass = f.required("classify.mass", parse_f64);
            let zeta = f.optional("classify.zeta", parse_f64).unwrap_or(0.5);
            f.check_open_unit("classify.mass", mass);
            f.check_open_unit("classify.zeta", Some(zeta));
            if let Some(g) = geometry {
                f.check("geometry.shape", g.shape != Shape::Tilted, || "classification needs a box or cuboid".into());
            }
            mass.map(|mass| Scheme::Classify { mass, zeta })
        }
        ExperimentKind::Wegner => {
            let half_widths = f.optional("wegner.half_widths", |s| parse_list(s, parse_f64)).unwrap_or_default();
            for &h in &half_widths {
                f.check("wegner.half_widths", h > 0.0, || format!("half width {h} must be positive"));
            }
            if half_widths.is_empty() {
                f.check("interval", interval.is_some(), || "missing required key (or give energy and wegner.half_widths)".into());
            } else {
                f.check("wegner.half_widths", interval.is_none(), || "give either interval or wegner.half_widths, not both".into());
                f.check("energy", energy.is_some(), || "missing required key for a half-width sweep".into());
            }
            Some(Scheme::Wegner { half_widths })
        }
        ExperimentKind::Flip => {
            let site = f.required("flip.site", parse_site);
            let grid = f.optional("flip.grid", parse_int::<usize>).unwrap_or(41);
            let m_star = f.optional("flip.m_star", parse_f64);
            f.check("flip.grid", grid >= 2, || "grid needs at least 2 points".into());
            if let Some(m) = m_star {
                f.check("flip.m_star", m > 0.0, || format!("m_star {m} must be positive"));
                needs_bernoulli(&mut f, "flip.m_star");
            }
            if let (Some(s), Some(g)) = (site, geometry) {
                if let Ok(r) = g.region() {
                    f.check("flip.site", r.contains(&s), || format!("site {s} is not in the region"));
                }
            }
            site.map(|site| Scheme::Flip { site, grid, m_star })
        }
        ExperimentKind::Sperner => {
            needs_bernoulli(&mut f, "law");
            let frozen = f.optional("sperner.frozen", parse_frozen).unwrap_or_default();
            let m_star = f.optional("sperner.m_star", parse_f64);
            let grid = f.optional("sperner.grid", parse_int::<usize>).unwrap_or(21);
            f.check("sperner.grid", grid >= 2, || "grid needs at least 2 points".into());
            if let Some(m) = m_star {
                f.check("sperner.m_star", m > 0.0, || format!("m_star {m} must be positive"));
            }
            if let Some(region) = geometry.and_then(|g| g.region().ok()) {
                for (s, v) in &frozen {
                    f.check("sperner.frozen", region.contains(s), || format!("site {s} is not in the region"));
                    if let Some(l) = law {
                        f.check("sperner.frozen", l.in_support(*v), || format!("value {v} at {s} is outside the support of {l}"));
                    }
                }
                let free = region.len() - frozen.keys().filter(|s| region.contains(s)).count();
                f.check("sperner.frozen", free <= anderson_core::sperner::MAX_FREE_SITES, || {
                    format!("{free} free sites exceed the enumeration cap of {}", anderson_core::sperner::MAX_FREE_SITES)
                });
            }
            Some(Scheme::Sperner { frozen, m_star, grid })
        }
        ExperimentKind::Msa => {
            let l0 = f.required("msa.l0", parse_int::<usize>);
            let eta = f.required("msa.eta", parse_f64);
            let kappa = f.required("msa.kappa", parse_f64);
            let scales = f.required("msa.scales", parse_int::<usize>);
            let m0 = f.required("msa.m0", parse_f64);
            let rule = f
                .optional("msa.mass_rule", |s| s.parse::<MassRule>().map_err(|e| e.to_string()))
                .unwrap_or_default();
            let zeta = f.optional("msa.zeta", parse_f64).unwrap_or(0.5);
            if let Some(l) = l0 {
                f.check("msa.l0", l >= 5 && l % 2 == 1, || format!("L0 = {l} must be odd and at least 5"));
            }
            if let Some(e) = eta {
                f.check("msa.eta", e > 0.0 && e <= 0.1, || format!("eta = {e} must lie in (0, 1/10]"));
            }
            if let (Some(k), Some(d)) = (kappa, dim) {
                f.check("msa.kappa", k > 2.0 * d as f64, || format!("kappa = {k} must exceed 2d = {}", 2 * d));
            }
            if let Some(k) = scales {
                f.check("msa.scales", k >= 1, || "at least one scale".into());
            }
            f.check_open_unit("msa.m0", m0);
            f.check_open_unit("msa.zeta", Some(zeta));
            match (l0, eta, kappa, scales, m0) {
                (Some(l0), Some(eta), Some(kappa), Some(scales), Some(m0)) => Some(Scheme::Msa {
                    l0,
                    eta,
                    kappa,
                    scales,
                    m0,
                    rule,
                    zeta,
                }),
                _ => None,
            }
        }
        ExperimentKind::Ucp => {
            if let Some(d) = dim {
                f.check("geometry.dim", d == 2, || "UCP trials run on tilted squares in d = 2".into());
            }
            let sides = f.required("ucp.sides", |s| parse_list(s, parse_int::<usize>));
            let epsilon = f.required("ucp.epsilon", parse_f64);
            let alpha = f.optional("ucp.alpha", parse_f64).unwrap_or(1.0);
            let frozen_fraction = f.optional("ucp.frozen_fraction", parse_f64).unwrap_or(0.0);
            if let Some(sides) = &sides {
                f.check("ucp.sides", !sides.is_empty(), || "at least one side".into());
                for &l in sides {
                    f.check("ucp.sides", l >= anderson_core::ucp::MIN_UCP_SIDE, || {
                        format!("side {l} below {}", anderson_core::ucp::MIN_UCP_SIDE)
                    });
                }
            }
            f.check_open_unit("ucp.epsilon", epsilon);
            f.check("ucp.alpha", alpha > 0.0, || format!("alpha = {alpha} must be positive"));
            f.check("ucp.frozen_fraction", (0.0..1.0).contains(&frozen_fraction), || {
                format!("frozen fraction {frozen_fraction} not in [0,1)")
            });
            match (sides, epsilon) {
                (Some(sides), Some(epsilon)) => Some(Scheme::Ucp {
                    sides,
                    epsilon,
                    alpha,
                    frozen_fraction,
                }),
                _ => None,
            }
        }
    };

    let leftover: Vec<(String, usize)> = f.entries.iter().map(|(k, e)| (k.clone(), e.line)).collect();
    for (key, line) in leftover {
        f.errors.push(ConfigError {
            line: Some(line),
            key,
            message: format!("unknown key for experiment {kind}"),
        });
    }

    match (seed, law, coupling, dim, realizations, scheme) {
        (Some(seed), Some(law), Some(coupling), Some(dim), Some(realizations), Some(scheme)) if f.errors.is_empty() => {
            Ok(ExperimentConfig {
                kind,
                seed,
                output,
                law,
                coupling,
                realizations,
                dim,
                geometry,
                energy,
                interval,
                scheme,
            })
        }
        _ => {
            f.errors.sort_by_key(|e| (e.line.unwrap_or(usize::MAX), e.key.clone()));
            Err(ConfigErrors(f.errors))
        }
    }
}

impl ExperimentConfig {
    /// Canonical text form; `parse_config(&c.to_text()) == Ok(c)`.
    pub fn to_text(&self) -> String {
        self.render(true)
    }

    /// Canonical text without the output directory, so identical runs written
    /// to different places describe themselves identically.
    pub fn to_portable_text(&self) -> String {
        self.render(false)
    }

    fn render(&self, with_output: bool) -> String {
        let mut out = Vec::new();
        let mut kv = |k: &str, v: String| out.push(format!("{k} = {v}"));
        kv("experiment", self.kind.to_string());
        kv("seed", self.seed.to_string());
        if with_output {
            kv("output", self.output.display().to_string());
        }
        kv("law", self.law.to_string());
        kv("coupling", format!("{:?}", self.coupling));
        if self.kind != ExperimentKind::Sperner {
            kv("realizations", self.realizations.to_string());
        }
        kv("geometry.dim", self.dim.to_string());
        if let Some(g) = &self.geometry {
            kv("geometry.side", g.side.to_string());
            kv("geometry.shape", g.shape.to_string());
        }
        if let Some(e) = self.energy {
            kv("energy", format!("{e:?}"));
        }
        if let Some(i) = &self.interval {
            kv("interval", format!("[{:?}, {:?}]", i.lo(), i.hi()));
        }
        let floats = |xs: &[f64]| xs.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join("; ");
        match &self.scheme {
            Scheme::Spectrum => {}
            Scheme::Classify { mass, zeta } => {
                kv("classify.mass", format!("{mass:?}"));
                kv("classify.zeta", format!("{zeta:?}"));
            }
            Scheme::Wegner { half_widths } => {
                if !half_widths.is_empty() {
                    kv("wegner.half_widths", floats(half_widths));
                }
            }
            Scheme::Flip { site, grid, m_star } => {
                kv("flip.site", fmt_site(site));
                kv("flip.grid", grid.to_string());
                if let Some(m) = m_star {
                    kv("flip.m_star", format!("{m:?}"));
                }
            }
            Scheme::Sperner { frozen, m_star, grid } => {
                if !frozen.is_empty() {
                    let items: Vec<String> = frozen.iter().map(|(s, v)| format!("{}:{v:?}", fmt_site(s))).collect();
                    kv("sperner.frozen", items.join("; "));
                }
                if let Some(m) = m_star {
                    kv("sperner.m_star", format!("{m:?}"));
                }
                kv("sperner.grid", grid.to_string());
            }
            Scheme::Msa { l0, eta, kappa, scales, m0, rule, zeta } => {
                kv("msa.l0", l0.to_string());
                kv("msa.eta", format!("{eta:?}"));
                kv("msa.kappa", format!("{kappa:?}"));
                kv("msa.scales", scales.to_string());
                kv("msa.m0", format!("{m0:?}"));
                kv("msa.mass_rule", rule.to_string());
                kv("msa.zeta", format!("{zeta:?}"));
            }
            Scheme::Ucp { sides, epsilon, alpha, frozen_fraction } => {
                kv("ucp.sides", sides.iter().map(|l| l.to_string()).collect::<Vec<_>>().join("; "));
                kv("ucp.epsilon", format!("{epsilon:?}"));
                kv("ucp.alpha", format!("{alpha:?}"));
                kv("ucp.frozen_fraction", format!("{frozen_fraction:?}"));
            }
        }
        out.push(String::new());
        out.join("\n")
    }

    pub fn region(&self) -> anderson_core::Result<Region> {
        self.geometry
            .ok_or_else(|| anderson_core::Error::Geometry(format!("{} builds its own regions", self.kind)))?
            .region()
    }
}
