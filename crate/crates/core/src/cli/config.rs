//! INI-style run configuration.
//!
//! ```text
//! [mesh]
//! scenario = test1
//! nx = 5
//! [time]
//! dt = 1e-4
//! ```
//!
//! Every key must be known to its section; a misspelled key is an error
//! pointing at its line rather than a silently ignored default.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::assembly::{ElementPairing, ProblemSetup};
use crate::error::{Error, Result};
use crate::mesh::{apply_mapping, build_channel_mesh, read_mesh, test2_mapping, EdgeTag, Region, TriangleMesh};
use crate::model::{
    boundary_set_test1, boundary_set_test2, scalar_tensor, BoundaryConditionSet, Component, Field, FluidWall,
    InflowPressure, NitscheParameters, PhysicalParameters, SourceKind,
};
use crate::scenario;
use crate::timestepping::Integrator;

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: usize,
}

/// Parsed `[section]` → `key = value` pairs with their line numbers.
#[derive(Debug, Clone)]
pub struct IniDocument {
    path: PathBuf,
    sections: BTreeMap<String, BTreeMap<String, Entry>>,
}

const SCHEMA: &[(&str, &[&str])] = &[
    ("mesh", &["scenario", "file", "nx", "ny", "x_min", "x_max", "y_split", "y_lo", "y_hi", "mapping", "pairing"]),
    (
        "physics",
        &["mu_f", "mu_p", "lambda_p", "s0", "alpha", "k", "k_xx", "k_xy", "k_yy", "beta", "sources", "injection_rate"],
    ),
    ("nitsche", &["mode", "gamma_f", "varsigma", "gamma_stab", "gamma_stab_prime", "gamma_q", "gamma_p"]),
    ("time", &["dt", "t_final", "integrator"]),
    ("output", &["dir", "stride"]),
    ("bc", &["preset", "fluid_ext", "p_in", "fix", "release"]),
];

impl IniDocument {
    pub fn parse(text: &str, path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let mut sections: BTreeMap<String, BTreeMap<String, Entry>> = BTreeMap::new();
        let mut current: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            if let Some(name) = body.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| Error::parse(&path, line, "unterminated section header"))?
                    .trim();
                if !SCHEMA.iter().any(|(s, _)| *s == name) {
                    return Err(Error::parse(&path, line, format!("unknown section [{name}]")));
                }
                sections.entry(name.to_string()).or_default();
                current = Some(name.to_string());
                continue;
            }
            let (key, value) = body
                .split_once('=')
                .ok_or_else(|| Error::parse(&path, line, format!("expected `key = value`, got `{body}`")))?;
            let (key, value) = (key.trim(), value.trim());
            let Some(section) = &current else {
                return Err(Error::parse(&path, line, format!("key `{key}` appears before any section")));
            };
            let known = SCHEMA.iter().find(|(s, _)| s == section).map(|(_, k)| *k).unwrap_or(&[]);
            if !known.contains(&key) {
                return Err(Error::parse(&path, line, format!("unknown key `{key}` in [{section}]")));
            }
            let table = sections.get_mut(section).expect("section registered on header");
            if let Some(prev) = table.get(key) {
                return Err(Error::parse(&path, line, format!("duplicate key `{key}` (first set on line {})", prev.line)));
            }
            table.insert(key.to_string(), Entry { value: value.to_string(), line });
        }
        Ok(IniDocument { path, sections })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::from(e).context(format!("reading {}", path.display())))?;
        Self::parse(&text, path)
    }

    fn entry(&self, section: &str, key: &str) -> Option<&Entry> {
        self.sections.get(section).and_then(|s| s.get(key))
    }

    pub fn raw(&self, section: &str, key: &str) -> Option<&str> {
        self.entry(section, key).map(|e| e.value.as_str())
    }

    /// Typed value, with parse failures reported at the key's line.
    pub fn get<T>(&self, section: &str, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        match self.entry(section, key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse::<T>()
                .map(Some)
                .map_err(|err| Error::parse(&self.path, e.line, format!("{key} = {}: {err}", e.value))),
        }
    }

    fn set<T>(&self, section: &str, key: &str, slot: &mut T) -> Result<()>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        if let Some(v) = self.get(section, key)? {
            *slot = v;
        }
        Ok(())
    }

    /// Error located at `key`, or at the file when the key is absent.
    fn invalid(&self, section: &str, key: &str, message: impl Into<String>) -> Error {
        let line = self.entry(section, key).map_or(0, |e| e.line);
        Error::parse(&self.path, line, message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Test1,
    Test2ExternalMesh,
    Custom,
}

impl FromStr for Scenario {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "test1" => Ok(Scenario::Test1),
            "test2_external_mesh" => Ok(Scenario::Test2ExternalMesh),
            "custom" => Ok(Scenario::Custom),
            other => Err(format!("unknown scenario `{other}` (test1, test2_external_mesh, custom)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mapping {
    None,
    Test2,
}

impl FromStr for Mapping {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "none" => Ok(Mapping::None),
            "test2" => Ok(Mapping::Test2),
            other => Err(format!("unknown mapping `{other}` (none, test2)")),
        }
    }
}

/// Structured channel: `nx` columns, `ny` rows in each region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelSpec {
    pub nx: usize,
    pub ny: usize,
    pub x_range: (f64, f64),
    pub y_split: f64,
    pub y_lo: f64,
    pub y_hi: f64,
    pub mapping: Mapping,
}

impl ChannelSpec {
    pub fn test1(n: usize) -> Self {
        ChannelSpec { nx: n, ny: n, x_range: (0.0, 1.0), y_split: 0.0, y_lo: -1.0, y_hi: 1.0, mapping: Mapping::None }
    }

    pub fn test2(nx: usize, ny: usize) -> Self {
        ChannelSpec {
            nx,
            ny,
            x_range: (-100.0, 100.0),
            y_split: 0.0,
            y_lo: -100.0,
            y_hi: 28.0,
            mapping: Mapping::Test2,
        }
    }

    /// The mesh with every cell count multiplied by `factor`.
    pub fn build(&self, factor: usize) -> Result<TriangleMesh> {
        let m = build_channel_mesh(self.nx * factor, self.ny * factor, self.x_range, self.y_split, self.y_lo, self.y_hi)?;
        match self.mapping {
            Mapping::None => Ok(m),
            Mapping::Test2 => apply_mapping(&m, test2_mapping),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeshSpec {
    Channel(ChannelSpec),
    File(PathBuf),
}

impl MeshSpec {
    pub fn build(&self) -> Result<TriangleMesh> {
        match self {
            MeshSpec::Channel(c) => c.build(1),
            MeshSpec::File(p) => read_mesh(p).map_err(|e| e.context(format!("mesh file {}", p.display()))),
        }
    }
}

/// Source data before the mesh is known; injection rates become densities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SourceSpec {
    Zero,
    Test1,
    Injection { rate: f64 },
}

impl SourceSpec {
    pub fn resolve(self, mesh: &TriangleMesh) -> Result<SourceKind> {
        Ok(match self {
            SourceSpec::Zero => SourceKind::Zero,
            SourceSpec::Test1 => SourceKind::Test1,
            SourceSpec::Injection { rate } => {
                let area = mesh.region_area(Region::Fluid);
                if !(area > 0.0) {
                    return Err(Error::Geometry("injection needs a fluid region".into()));
                }
                SourceKind::Injection { g: rate / area }
            }
        })
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub mesh: MeshSpec,
    pub params: PhysicalParameters,
    pub nitsche: NitscheParameters,
    pub pairing: ElementPairing,
    pub bc: BoundaryConditionSet,
    pub sources: SourceSpec,
    pub dt: f64,
    pub t_final: f64,
    pub integrator: Integrator,
    pub out_dir: PathBuf,
    pub stride: usize,
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_document(&IniDocument::load(path)?, path.parent().unwrap_or(Path::new(".")))
    }

    /// Builds the configuration; relative paths resolve against `base`.
    pub fn from_document(doc: &IniDocument, base: &Path) -> Result<Self> {
        let scenario = doc.get::<Scenario>("mesh", "scenario")?.unwrap_or(Scenario::Custom);
        let mut cfg = Self::defaults(scenario);

        let file = doc.raw("mesh", "file").map(|f| base.join(f));
        let channel_keys = ["nx", "ny", "x_min", "x_max", "y_split", "y_lo", "y_hi", "mapping"];
        if let Some(f) = file {
            if let Some(k) = channel_keys.iter().find(|k| doc.raw("mesh", k).is_some()) {
                return Err(doc.invalid("mesh", k, format!("`{k}` conflicts with `file`")));
            }
            cfg.mesh = MeshSpec::File(f);
        } else if let MeshSpec::Channel(c) = &mut cfg.mesh {
            doc.set("mesh", "nx", &mut c.nx)?;
            doc.set("mesh", "ny", &mut c.ny)?;
            doc.set("mesh", "x_min", &mut c.x_range.0)?;
            doc.set("mesh", "x_max", &mut c.x_range.1)?;
            doc.set("mesh", "y_split", &mut c.y_split)?;
            doc.set("mesh", "y_lo", &mut c.y_lo)?;
            doc.set("mesh", "y_hi", &mut c.y_hi)?;
            doc.set("mesh", "mapping", &mut c.mapping)?;
            if c.nx == 0 || c.ny == 0 {
                return Err(doc.invalid("mesh", if c.nx == 0 { "nx" } else { "ny" }, "cell counts must be at least 1"));
            }
        } else {
            return Err(doc.invalid("mesh", "file", "this scenario reads its mesh from `file`"));
        }
        doc.set("mesh", "pairing", &mut cfg.pairing)?;

        let p = &mut cfg.params;
        doc.set("physics", "mu_f", &mut p.mu_f)?;
        doc.set("physics", "mu_p", &mut p.mu_p)?;
        doc.set("physics", "lambda_p", &mut p.lambda_p)?;
        doc.set("physics", "s0", &mut p.s0)?;
        doc.set("physics", "alpha", &mut p.alpha)?;
        doc.set("physics", "beta", &mut p.beta)?;
        if let Some(k) = doc.get::<f64>("physics", "k")? {
            if ["k_xx", "k_xy", "k_yy"].iter().any(|c| doc.raw("physics", c).is_some()) {
                return Err(doc.invalid("physics", "k", "give either `k` or the tensor entries, not both"));
            }
            p.conductivity = scalar_tensor(k);
        }
        doc.set("physics", "k_xx", &mut p.conductivity[0][0])?;
        doc.set("physics", "k_yy", &mut p.conductivity[1][1])?;
        if let Some(v) = doc.get::<f64>("physics", "k_xy")? {
            p.conductivity[0][1] = v;
            p.conductivity[1][0] = v;
        }
        p.validate().map_err(|e| doc.invalid("physics", "mu_f", e.to_string()))?;

        if let Some(kind) = doc.raw("physics", "sources") {
            cfg.sources = match kind {
                "zero" => SourceSpec::Zero,
                "test1" => SourceSpec::Test1,
                "injection" => SourceSpec::Injection { rate: scenario::TEST2_INJECTION },
                other => {
                    return Err(doc.invalid("physics", "sources", format!("unknown sources `{other}` (zero, test1, injection)")))
                }
            };
        }
        if let Some(rate) = doc.get::<f64>("physics", "injection_rate")? {
            match &mut cfg.sources {
                SourceSpec::Injection { rate: r } => *r = rate,
                _ => return Err(doc.invalid("physics", "injection_rate", "injection_rate needs `sources = injection`")),
            }
        }

        let n = &mut cfg.nitsche;
        doc.set("nitsche", "mode", &mut n.mode)?;
        doc.set("nitsche", "gamma_f", &mut n.gamma_f)?;
        doc.set("nitsche", "varsigma", &mut n.varsigma)?;
        doc.set("nitsche", "gamma_stab", &mut n.gamma_stab)?;
        doc.set("nitsche", "gamma_stab_prime", &mut n.gamma_stab_prime)?;
        doc.set("nitsche", "gamma_q", &mut n.gamma_q)?;
        doc.set("nitsche", "gamma_p", &mut n.gamma_p)?;
        n.validate().map_err(|e| doc.invalid("nitsche", "gamma_f", e.to_string()))?;

        doc.set("time", "dt", &mut cfg.dt)?;
        doc.set("time", "t_final", &mut cfg.t_final)?;
        doc.set("time", "integrator", &mut cfg.integrator)?;
        if !(cfg.dt > 0.0) || !cfg.dt.is_finite() {
            return Err(doc.invalid("time", "dt", format!("dt must be positive, got {}", cfg.dt)));
        }
        if !(cfg.t_final >= cfg.dt) || !cfg.t_final.is_finite() {
            return Err(doc.invalid("time", "t_final", format!("t_final = {} must be at least dt = {}", cfg.t_final, cfg.dt)));
        }

        cfg.out_dir = base.join(doc.raw("output", "dir").unwrap_or("out"));
        doc.set("output", "stride", &mut cfg.stride)?;
        if cfg.stride == 0 {
            return Err(doc.invalid("output", "stride", "stride must be at least 1"));
        }

        cfg.bc = Self::boundary_conditions(doc, scenario, cfg.bc)?;
        if let MeshSpec::File(f) = &cfg.mesh {
            if !f.is_file() {
                return Err(doc.invalid("mesh", "file", format!("mesh file {} does not exist", f.display())));
            }
        }
        Ok(cfg)
    }

    fn defaults(scenario: Scenario) -> Self {
        let common = |params, nitsche, pairing, bc, sources, dt, t_final, mesh| RunConfig {
            scenario,
            mesh,
            params,
            nitsche,
            pairing,
            bc,
            sources,
            dt,
            t_final,
            integrator: Integrator::Decoupled,
            out_dir: PathBuf::from("out"),
            stride: 1,
        };
        match scenario {
            Scenario::Test1 => {
                let s = scenario::test1_setup();
                common(
                    s.params,
                    s.nitsche,
                    s.pairing,
                    s.bc,
                    SourceSpec::Test1,
                    scenario::TEST1_DT,
                    scenario::TEST1_T,
                    MeshSpec::Channel(ChannelSpec::test1(5)),
                )
            }
            Scenario::Test2ExternalMesh => {
                let n = NitscheParameters {
                    mode: crate::model::CouplingMode::BjsPlus,
                    gamma_p: scenario::TEST2_GAMMA_P,
                    ..NitscheParameters::default()
                };
                common(
                    PhysicalParameters::table3(),
                    n,
                    ElementPairing::P1P1,
                    boundary_set_test2(),
                    SourceSpec::Injection { rate: scenario::TEST2_INJECTION },
                    scenario::TEST2_DT,
                    scenario::TEST2_T,
                    MeshSpec::File(PathBuf::new()),
                )
            }
            Scenario::Custom => common(
                PhysicalParameters::table2(),
                NitscheParameters::default(),
                ElementPairing::TaylorHood,
                BoundaryConditionSet::new(),
                SourceSpec::Zero,
                scenario::TEST1_DT,
                scenario::TEST1_T,
                MeshSpec::Channel(ChannelSpec::test1(5)),
            ),
        }
    }

    fn boundary_conditions(doc: &IniDocument, scenario: Scenario, default: BoundaryConditionSet) -> Result<BoundaryConditionSet> {
        let wall = doc.get::<FluidWall>("bc", "fluid_ext")?;
        let mut bc = match doc.raw("bc", "preset") {
            None if scenario == Scenario::Test1 => boundary_set_test1(wall.unwrap_or(FluidWall::NoSlip)),
            None => default,
            Some("test1") => boundary_set_test1(wall.unwrap_or(FluidWall::NoSlip)),
            Some("test2") => boundary_set_test2(),
            Some("none") => BoundaryConditionSet::new(),
            Some(other) => return Err(doc.invalid("bc", "preset", format!("unknown preset `{other}` (test1, test2, none)"))),
        };
        let uses_test1 = matches!(doc.raw("bc", "preset"), Some("test1")) || (doc.raw("bc", "preset").is_none() && scenario == Scenario::Test1);
        if wall.is_some() && !uses_test1 {
            return Err(doc.invalid("bc", "fluid_ext", "fluid_ext only applies to the test1 preset"));
        }
        if let Some(list) = doc.raw("bc", "release") {
            for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                let (tag, field) = item
                    .split_once(':')
                    .ok_or_else(|| doc.invalid("bc", "release", format!("expected `tag:field`, got `{item}`")))?;
                let tag: EdgeTag = tag.parse().map_err(|e: String| doc.invalid("bc", "release", e))?;
                let field: Field = field.parse().map_err(|e: String| doc.invalid("bc", "release", e))?;
                bc.release(tag, field);
            }
        }
        if let Some(list) = doc.raw("bc", "fix") {
            for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                let parts: Vec<&str> = item.split(':').collect();
                if !(2..=3).contains(&parts.len()) {
                    return Err(doc.invalid("bc", "fix", format!("expected `tag:field[:component]`, got `{item}`")));
                }
                let tag: EdgeTag = parts[0].parse().map_err(|e: String| doc.invalid("bc", "fix", e))?;
                let field: Field = parts[1].parse().map_err(|e: String| doc.invalid("bc", "fix", e))?;
                let comp: Component = match parts.get(2) {
                    Some(c) => c.parse().map_err(|e: String| doc.invalid("bc", "fix", e))?,
                    None => Component::All,
                };
                bc.fix(tag, field, comp).map_err(|e| doc.invalid("bc", "fix", e.to_string()))?;
            }
        }
        if let Some(expr) = doc.raw("bc", "p_in") {
            bc.p_in = InflowPressure::parse(expr).map_err(|e| doc.invalid("bc", "p_in", e.to_string()))?;
        }
        Ok(bc)
    }

    /// Number of steps reaching `t_final`, rounding down.
    pub fn steps(&self) -> usize {
        ((self.t_final / self.dt) * (1.0 + 1e-12)).floor() as usize
    }

    pub fn setup_for(&self, mesh: &TriangleMesh) -> Result<ProblemSetup> {
        Ok(ProblemSetup {
            params: self.params,
            nitsche: self.nitsche,
            pairing: self.pairing,
            bc: self.bc.clone(),
            sources: self.sources.resolve(mesh)?,
        })
    }
}
