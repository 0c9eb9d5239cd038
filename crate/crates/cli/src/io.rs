//! Inputs and outputs shared by the subcommands.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use twistor_core::discriminant::{discriminant_locus_polys, z_vars, LocusPolys, Surface};
use twistor_core::numeric::Chart;
use twistor_core::poly::MultiPoly;
use twistor_core::presets;
use twistor_core::ring::GaussRat;
use twistor_core::tracer::SliceCurve;

/// Resolve `preset:NAME`, a file holding a polynomial (text or JSON), or an
/// inline polynomial in `z1..z4`.
pub fn load_surface(input: &str) -> Result<Surface> {
    if let Some(name) = input.strip_prefix("preset:") {
        return Ok(presets::by_name(name)?);
    }
    let path = Path::new(input);
    let src = if path.is_file() {
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?
    } else {
        input.to_string()
    };
    let src = src.trim();
    let surface = if src.starts_with('{') {
        let p = MultiPoly::<GaussRat>::from_json(src)?;
        if p.vars() != z_vars().as_slice() {
            bail!("surface polynomial must use variables z1..z4, found {:?}", p.vars());
        }
        Surface::new(p)?
    } else {
        Surface::parse(src).with_context(|| format!("cannot read surface `{input}`"))?
    };
    if surface.degree() != 3 {
        bail!("expected a cubic surface, got degree {}", surface.degree());
    }
    Ok(surface)
}

pub fn write_polys(dir: &Path, polys: &LocusPolys) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("P.json"), polys.p.to_json() + "\n")?;
    fs::write(dir.join("Q.json"), polys.q.to_json() + "\n")?;
    Ok(())
}

pub fn read_polys(dir: &Path) -> Result<LocusPolys> {
    let read = |name: &str| -> Result<MultiPoly<num_bigint::BigInt>> {
        let path = dir.join(name);
        let src = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        MultiPoly::from_json(&src).with_context(|| format!("decoding {}", path.display()))
    };
    Ok(LocusPolys { p: read("P.json")?, q: read("Q.json")? })
}

/// `P, Q` from a directory written by `discriminant`, else computed.
pub fn polys_for(surface: &str, polys: Option<&Path>) -> Result<LocusPolys> {
    match polys {
        Some(dir) => read_polys(dir),
        None => Ok(discriminant_locus_polys(&load_surface(surface)?)?),
    }
}

/// One traced curve in standard coordinates.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CurveDoc {
    pub t: f64,
    pub chart: String,
    pub closed: bool,
    pub points: Vec<[f64; 3]>,
}

impl CurveDoc {
    pub fn from_curve(c: &SliceCurve) -> Self {
        let chart = match c.chart() {
            Chart::Standard => "standard",
            Chart::Inverted => "inverted",
        };
        Self { t: c.t, chart: chart.into(), closed: c.closed, points: c.std_xyz() }
    }
}

#[derive(Serialize)]
struct CsvRow {
    t: f64,
    curve_id: usize,
    x1: f64,
    x2: f64,
    x3: f64,
}

pub fn write_csv<W: std::io::Write>(out: W, t: f64, curves: &[CurveDoc]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    // an empty slice still gets its header
    w.write_record(["t", "curve_id", "x1", "x2", "x3"])?;
    for (id, c) in curves.iter().enumerate() {
        for p in &c.points {
            w.serialize(CsvRow { t, curve_id: id, x1: p[0], x2: p[1], x3: p[2] })?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_json(path: &Path, v: &impl Serialize) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    fs::write(path, s).with_context(|| format!("writing {}", path.display()))
}

/// Overlay `patch` onto `base`, recursing into objects.
pub fn merge(base: &mut Value, patch: &Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (b, p) => *b = p.clone(),
    }
}

/// A default config with the overrides applied; unknown keys are errors.
pub fn configured<T: Serialize + serde::de::DeserializeOwned>(default: T, overrides: Option<&Value>) -> Result<T> {
    let Some(o) = overrides else { return Ok(default) };
    let mut v = serde_json::to_value(&default)?;
    check_keys(&v, o, "")?;
    merge(&mut v, o);
    Ok(serde_json::from_value(v)?)
}

fn check_keys(base: &Value, patch: &Value, at: &str) -> Result<()> {
    if let (Value::Object(b), Value::Object(p)) = (base, patch) {
        for (k, v) in p {
            match b.get(k) {
                Some(bv) => check_keys(bv, v, &format!("{at}{k}."))?,
                None => bail!("unknown config key `{at}{k}`"),
            }
        }
    }
    Ok(())
}

/// A reproducible description of one invocation.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunManifest {
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surface: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Per-section config overrides: `trace`, `topology`, `fibers`, `suite`.
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub config: Value,
    /// Remaining command-line flags.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub args: Vec<String>,
}

impl RunManifest {
    pub fn read(path: &Path) -> Result<Self> {
        let src = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&src).with_context(|| format!("decoding manifest {}", path.display()))
    }

    pub fn argv(&self) -> Vec<String> {
        let mut v = vec!["twistor".to_string(), self.command.clone()];
        if let Some(s) = &self.surface {
            v.extend(["--surface".into(), s.clone()]);
        }
        if let Some(o) = &self.out {
            v.extend(["--out".into(), o.display().to_string()]);
        }
        if let Some(s) = self.seed {
            v.extend(["--seed".into(), s.to_string()]);
        }
        v.extend(self.args.iter().cloned());
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use twistor_core::tracer::TraceConfig;

    #[test]
    fn overrides_are_partial() {
        let o = serde_json::json!({ "grid": 11, "bbox_lo": [-1.0, -1.0, -1.0] });
        let c = configured(TraceConfig::default(), Some(&o)).unwrap();
        assert_eq!(c.grid, 11);
        assert_eq!(c.bbox_lo, [-1.0; 3]);
        assert_eq!(c.tol, TraceConfig::default().tol);
    }

    #[test]
    fn unknown_override_is_rejected() {
        let o = serde_json::json!({ "grdi": 11 });
        assert!(configured(TraceConfig::default(), Some(&o)).is_err());
    }

    #[test]
    fn surfaces_from_presets_and_text() {
        assert_eq!(load_surface("preset:fermat").unwrap(), presets::fermat());
        assert_eq!(load_surface("z1^3+z2^3+z3^3+z4^3").unwrap(), presets::fermat());
        assert!(load_surface("z1^2*z2^2").is_err());
        assert!(load_surface("z1^3 + (").is_err());
        assert!(load_surface("preset:nope").is_err());
    }
}
