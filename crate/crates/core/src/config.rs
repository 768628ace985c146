//! Line-oriented `key = value` run configuration.
//!
//! Grammar: one `key = value` per line, `#` starts a comment, blank lines
//! are ignored, keys are dotted (`section.name`). Every key must be known
//! and may appear at most once per source; overrides replace file values.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use crate::error::{Error, IoError};
use crate::flow::{FlowConfig, FlowKind};
use crate::geometry::Ambient;
use crate::grid::{check_grid_size, ImmersionGrid};
use crate::hopf::CurveGrid;
use crate::moebius::{Generator, MoebiusMap};
use crate::surfaces::{clifford_stereo, clifford_torus, torus_of_revolution};

type Res<T> = Result<T, IoError>;

/// Known keys with their defaults.
pub const KEYS: &[(&str, &str)] = &[
    ("energy.ambient", "euclidean"),
    ("flow.kind", "miwf"),
    ("flow.max_steps", "0"),
    ("flow.min_a0sq", "0.0001"),
    ("flow.safety", "0.5"),
    ("flow.snapshot_every", "0"),
    ("flow.t_end", "0"),
    ("grid.nu", "64"),
    ("grid.nv", "64"),
    ("hopf.curve", "great_circle"),
    ("hopf.n", "256"),
    ("hopf.ntheta", "128"),
    ("hopf.safety", "0.5"),
    ("hopf.steps", "100"),
    ("linearize.h", "0.00001"),
    ("linearize.pairs", "5"),
    ("linearize.seed", "1"),
    ("linearize.split", "10"),
    ("linearize.steps", "20"),
    ("map.generators", ""),
    ("output.dir", ""),
    ("surface.R", "2"),
    ("surface.file", ""),
    ("surface.kind", "torus_of_revolution"),
    ("surface.r", "1"),
];

fn default_of(key: &str) -> Option<&'static str> {
    KEYS.iter().find(|(k, _)| *k == key).map(|(_, v)| *v)
}

/// Parses configuration text into raw key/value pairs.
pub fn parse_str(text: &str) -> Res<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = parse_assignment(line).map_err(|reason| IoError::Parse { line: i + 1, reason })?;
        if out.insert(k.clone(), v).is_some() {
            return Err(IoError::Parse { line: i + 1, reason: format!("duplicate key `{k}`") });
        }
    }
    Ok(out)
}

fn parse_assignment(line: &str) -> Result<(String, String), String> {
    let (k, v) = line.split_once('=').ok_or_else(|| format!("expected `key = value`, got `{line}`"))?;
    let k = k.trim();
    let valid = !k.is_empty()
        && k.split('.').all(|part| !part.is_empty() && part.chars().all(|c| c.is_ascii_alphanumeric() || c == '_'));
    if !valid {
        return Err(format!("malformed key `{k}`"));
    }
    Ok((k.to_string(), v.trim().to_string()))
}

pub fn parse_file(path: &Path) -> Res<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).map_err(|source| IoError::File { path: path.to_path_buf(), source })?;
    parse_str(&text)
}

/// Parses `key=value` overrides (as given on the command line).
pub fn parse_overrides<S: AsRef<str>>(items: &[S]) -> Res<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, item) in items.iter().enumerate() {
        let (k, v) = parse_assignment(item.as_ref()).map_err(|reason| IoError::Parse { line: i + 1, reason })?;
        if out.insert(k.clone(), v).is_some() {
            return Err(IoError::Parse { line: i + 1, reason: format!("duplicate override `{k}`") });
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub enum SurfaceSpec {
    TorusOfRevolution { big_r: f64, small_r: f64 },
    Clifford,
    CliffordStereo,
    /// Snapshot CSV as written by [`crate::io::write_snapshot_csv`].
    File(PathBuf),
}

impl SurfaceSpec {
    pub fn build(&self, nu: usize, nv: usize) -> Res<ImmersionGrid<f64>> {
        Ok(match self {
            SurfaceSpec::TorusOfRevolution { big_r, small_r } => torus_of_revolution(*big_r, *small_r, nu, nv)?,
            SurfaceSpec::Clifford => clifford_torus(nu, nv)?,
            SurfaceSpec::CliffordStereo => clifford_stereo(nu, nv)?,
            SurfaceSpec::File(p) => crate::io::read_snapshot_csv(p)?,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum CurvePreset {
    GreatCircle,
    /// Polar angle in radians.
    Latitude(f64),
    Wavy { amplitude: f64, mode: u32 },
}

impl CurvePreset {
    pub fn build(&self, n: usize) -> crate::Result<CurveGrid> {
        match *self {
            CurvePreset::GreatCircle => CurveGrid::great_circle(n),
            CurvePreset::Latitude(t) => CurveGrid::latitude(n, t),
            CurvePreset::Wavy { amplitude, mode } => CurveGrid::wavy(n, amplitude, mode),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HopfOptions {
    pub curve: CurvePreset,
    pub n: usize,
    pub ntheta: usize,
    pub steps: usize,
    pub safety: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearizeOptions {
    pub h: f64,
    pub steps: usize,
    pub seed: u64,
    pub pairs: usize,
    /// Step index of the intermediate time in the semigroup check.
    pub split: usize,
}

/// Validated run configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub surface: SurfaceSpec,
    pub nu: usize,
    pub nv: usize,
    pub flow: FlowConfig,
    pub ambient: Ambient,
    pub output_dir: Option<PathBuf>,
    pub generators: Vec<GeneratorSpec>,
    pub hopf: HopfOptions,
    pub linearize: LinearizeOptions,
    /// Effective values of every key, defaults included.
    values: BTreeMap<String, String>,
}

/// A Möbius generator before the ambient dimension is known.
#[derive(Clone, Debug, PartialEq)]
pub enum GeneratorSpec {
    Translation(Vec<f64>),
    /// Rotation by `angle` in the coordinate plane `(i, j)`.
    Rotation { i: usize, j: usize, angle: f64 },
    /// Row-major `n × n` entries.
    Orthogonal(Vec<f64>),
    Dilation(f64),
    Inversion { center: Vec<f64>, radius: f64 },
}

impl GeneratorSpec {
    fn to_generator(&self, n: usize) -> crate::Result<Generator> {
        let len = |v: &[f64], want: usize, what: &str| {
            if v.len() == want {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{what} needs {want} numbers in R^{n}, got {}", v.len())))
            }
        };
        Ok(match self {
            GeneratorSpec::Translation(b) => {
                len(b, n, "translation")?;
                Generator::Translation(b.clone())
            }
            GeneratorSpec::Rotation { i, j, angle } => {
                if *i >= n || *j >= n || i == j {
                    return Err(Error::InvalidParameter(format!("rotation plane ({i}, {j}) invalid in R^{n}")));
                }
                let mut q: Vec<Vec<f64>> = (0..n).map(|a| (0..n).map(|b| if a == b { 1.0 } else { 0.0 }).collect()).collect();
                let (s, c) = angle.sin_cos();
                q[*i][*i] = c;
                q[*j][*j] = c;
                q[*i][*j] = -s;
                q[*j][*i] = s;
                Generator::Orthogonal(q)
            }
            GeneratorSpec::Orthogonal(e) => {
                len(e, n * n, "orthogonal")?;
                Generator::Orthogonal(e.chunks(n).map(|r| r.to_vec()).collect())
            }
            GeneratorSpec::Dilation(l) => Generator::Dilation(*l),
            GeneratorSpec::Inversion { center, radius } => {
                len(center, n, "inversion center")?;
                Generator::SphereInversion { center: center.clone(), radius: *radius }
            }
        })
    }
}

/// Builds the map for surfaces in `R^n`.
pub fn build_map(specs: &[GeneratorSpec], n: usize) -> crate::Result<MoebiusMap> {
    MoebiusMap::new(n, specs.iter().map(|s| s.to_generator(n)).collect::<crate::Result<_>>()?)
}

fn numbers(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(|x| x.trim().parse::<f64>().map_err(|_| format!("`{}` is not a number", x.trim()))).collect()
}

fn parse_generators(s: &str) -> Result<Vec<GeneratorSpec>, String> {
    let mut out = Vec::new();
    for item in s.split(';').map(str::trim).filter(|x| !x.is_empty()) {
        let (name, args) = item.split_once(':').ok_or_else(|| format!("generator `{item}` lacks `name:args`"))?;
        let v = numbers(args)?;
        let g = match name.trim() {
            "translation" => GeneratorSpec::Translation(v),
            "orthogonal" => GeneratorSpec::Orthogonal(v),
            "dilation" if v.len() == 1 => {
                if !(v[0] > 0.0) {
                    return Err("dilation factor must be > 0".into());
                }
                GeneratorSpec::Dilation(v[0])
            }
            "rotation" if v.len() == 3 => {
                let idx = |x: f64| if x >= 0.0 && x.fract() == 0.0 { Ok(x as usize) } else { Err(format!("bad axis index {x}")) };
                GeneratorSpec::Rotation { i: idx(v[0])?, j: idx(v[1])?, angle: v[2] }
            }
            "inversion" if v.len() >= 2 => {
                let radius = *v.last().unwrap();
                if !(radius > 0.0) {
                    return Err("inversion radius must be > 0".into());
                }
                GeneratorSpec::Inversion { center: v[..v.len() - 1].to_vec(), radius }
            }
            other => return Err(format!("unknown or malformed generator `{other}:{args}`")),
        };
        out.push(g);
    }
    Ok(out)
}

fn parse_curve(s: &str) -> Result<CurvePreset, String> {
    match s.split_once(':') {
        None if s == "great_circle" => Ok(CurvePreset::GreatCircle),
        Some(("latitude", a)) => {
            let t: f64 = a.trim().parse().map_err(|_| format!("`{a}` is not a number"))?;
            if !(t > 0.0 && t < PI) {
                return Err("latitude polar angle must lie in (0, π)".into());
            }
            Ok(CurvePreset::Latitude(t))
        }
        Some(("wavy", a)) => {
            let v = numbers(a)?;
            if v.len() != 2 || v[1] < 0.0 || v[1].fract() != 0.0 {
                return Err("wavy expects `wavy:amplitude,mode` with an integer mode".into());
            }
            Ok(CurvePreset::Wavy { amplitude: v[0], mode: v[1] as u32 })
        }
        _ => Err(format!("unknown curve preset `{s}`")),
    }
}

impl RunConfig {
    /// Merges `file` and `overrides` (overrides win) over the defaults and
    /// validates every value.
    pub fn from_sources(file: &BTreeMap<String, String>, overrides: &BTreeMap<String, String>) -> Res<Self> {
        let mut values: BTreeMap<String, String> = KEYS.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        for (k, v) in file.iter().chain(overrides) {
            if default_of(k).is_none() {
                return Err(IoError::Validation { key: k.clone(), reason: "unknown key".into() });
            }
            values.insert(k.clone(), v.clone());
        }
        Self::from_values(values)
    }

    pub fn from_str_config(text: &str) -> Res<Self> {
        Self::from_sources(&parse_str(text)?, &BTreeMap::new())
    }

    fn from_values(values: BTreeMap<String, String>) -> Res<Self> {
        let get = |k: &str| values[k].as_str();
        let bad = |k: &str, reason: String| IoError::Validation { key: k.to_string(), reason };
        let float = |k: &str| -> Res<f64> {
            let v: f64 = get(k).parse().map_err(|_| bad(k, format!("`{}` is not a number", get(k))))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(bad(k, "must be finite".into()))
            }
        };
        let int = |k: &str| -> Res<usize> { get(k).parse().map_err(|_| bad(k, format!("`{}` is not a non-negative integer", get(k)))) };

        let surface = match get("surface.kind") {
            "torus_of_revolution" => {
                let (big_r, small_r) = (float("surface.R")?, float("surface.r")?);
                if !(small_r > 0.0) {
                    return Err(bad("surface.r", "must be > 0".into()));
                }
                if !(big_r > small_r) {
                    return Err(bad("surface.R", "must exceed surface.r".into()));
                }
                SurfaceSpec::TorusOfRevolution { big_r, small_r }
            }
            "clifford" => SurfaceSpec::Clifford,
            "clifford_stereo" => SurfaceSpec::CliffordStereo,
            "file" => {
                if get("surface.file").is_empty() {
                    return Err(bad("surface.file", "required when surface.kind = file".into()));
                }
                SurfaceSpec::File(PathBuf::from(get("surface.file")))
            }
            other => return Err(bad("surface.kind", format!("unknown surface kind `{other}`"))),
        };
        let (nu, nv) = (int("grid.nu")?, int("grid.nv")?);
        check_grid_size(nu, 16).map_err(|e| bad("grid.nu", e.to_string()))?;
        check_grid_size(16, nv).map_err(|e| bad("grid.nv", e.to_string()))?;

        let kind: FlowKind = get("flow.kind").parse().map_err(|e| bad("flow.kind", e))?;
        let max_steps = int("flow.max_steps")?;
        let flow = FlowConfig {
            kind,
            t_end: float("flow.t_end")?,
            safety: float("flow.safety")?,
            min_a0sq: float("flow.min_a0sq")?,
            snapshot_every: int("flow.snapshot_every")?,
            max_steps: (max_steps > 0).then_some(max_steps),
        };
        if flow.t_end < 0.0 {
            return Err(bad("flow.t_end", "must be >= 0".into()));
        }
        if !(flow.safety > 0.0 && flow.safety <= 1.0) {
            return Err(bad("flow.safety", "must lie in (0, 1]".into()));
        }
        if !(flow.min_a0sq > 0.0) {
            return Err(bad("flow.min_a0sq", "must be > 0".into()));
        }
        let ambient = match get("energy.ambient") {
            "euclidean" => Ambient::Euclidean,
            "sphere" => Ambient::Sphere,
            other => return Err(bad("energy.ambient", format!("expected euclidean or sphere, got `{other}`"))),
        };
        let generators = parse_generators(get("map.generators")).map_err(|e| bad("map.generators", e))?;
        let hopf = HopfOptions {
            curve: parse_curve(get("hopf.curve")).map_err(|e| bad("hopf.curve", e))?,
            n: int("hopf.n")?,
            ntheta: int("hopf.ntheta")?,
            steps: int("hopf.steps")?,
            safety: float("hopf.safety")?,
        };
        if hopf.n < 16 || !hopf.n.is_multiple_of(2) {
            return Err(bad("hopf.n", "must be even and >= 16".into()));
        }
        check_grid_size(hopf.ntheta, 16).map_err(|e| bad("hopf.ntheta", e.to_string()))?;
        if !(hopf.safety > 0.0 && hopf.safety <= 1.0) {
            return Err(bad("hopf.safety", "must lie in (0, 1]".into()));
        }
        let linearize = LinearizeOptions {
            h: float("linearize.h")?,
            steps: int("linearize.steps")?,
            seed: get("linearize.seed").parse().map_err(|_| bad("linearize.seed", "not an unsigned integer".into()))?,
            pairs: int("linearize.pairs")?,
            split: int("linearize.split")?,
        };
        if !(linearize.h > 0.0) {
            return Err(bad("linearize.h", "must be > 0".into()));
        }
        if linearize.steps < 2 {
            return Err(bad("linearize.steps", "must be >= 2".into()));
        }
        if linearize.split == 0 || linearize.split >= linearize.steps {
            return Err(bad("linearize.split", "must lie strictly between 0 and linearize.steps".into()));
        }
        let output_dir = match get("output.dir") {
            "" => None,
            d => Some(PathBuf::from(d)),
        };
        Ok(RunConfig { surface, nu, nv, flow, ambient, output_dir, generators, hopf, linearize, values })
    }

    /// Value of a key after defaults and overrides.
    pub fn value(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Every key in sorted order, in the input grammar.
    pub fn echo(&self) -> String {
        let mut s = String::from("# effective configuration\n");
        for (k, v) in &self.values {
            s.push_str(&format!("{k} = {v}\n"));
        }
        s
    }

    pub fn build_surface(&self) -> Res<ImmersionGrid<f64>> {
        self.surface.build(self.nu, self.nv)
    }
}
