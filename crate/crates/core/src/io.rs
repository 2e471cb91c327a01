//! JSON file formats for foliations, coefficient curves, paths, variations
//! and morphisms.
//!
//! A foliation reference (`"foliation"`, `"source"`, `"target"`) is either an
//! inline foliation object, a file name resolved against the directory of the
//! referencing file, or a catalog name such as `"ROT2"`.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::catalog;
use crate::error::{Error, Result};
use crate::flowengine::{CoeffCurve, UPoly};
use crate::foliation::{Chart, FoliationPresentation, InvolutivityCertificate};
use crate::fpath::Variation;
use crate::morphism::FoliatedMorphism;
use crate::symcore::coeff::to_f64_vec;
use crate::symcore::{parse_point, parse_poly, PolyVectorField, Polynomial};

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ChartSpec {
    Named(String),
    Box { min: Vec<f64>, max: Vec<f64> },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FoliationFile {
    dim: usize,
    #[serde(default)]
    chart: Option<ChartSpec>,
    generators: Vec<String>,
    #[serde(default)]
    structure_coeffs: Option<Vec<Vec<Vec<String>>>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CoeffFile {
    breakpoints: Vec<f64>,
    pieces: Vec<Vec<String>>,
    /// Pieces are polynomials in the piece-local `u ∈ [0, 1]` rather than in `t`.
    #[serde(default)]
    local: bool,
}

fn parse_json<T: for<'de> Deserialize<'de>>(v: &Value, what: &str) -> Result<T> {
    T::deserialize(v).map_err(|e| Error::Parse(format!("{what}: {e}")))
}

fn names(dim: usize) -> Vec<String> {
    crate::symcore::poly::default_var_names(dim)
}

fn render(p: &Polynomial) -> String {
    let n = names(p.nvars());
    let refs: Vec<&str> = n.iter().map(String::as_str).collect();
    p.render(&refs)
}

pub fn foliation_to_json(f: &FoliationPresentation) -> Value {
    let chart = match f.chart() {
        Chart::All => json!("all"),
        Chart::Box { min, max } => json!({ "min": min, "max": max }),
    };
    let cert: Vec<Vec<Vec<String>>> =
        f.certificate().as_array().iter().map(|row| row.iter().map(|c| c.iter().map(render).collect()).collect()).collect();
    json!({
        "dim": f.dim(),
        "chart": chart,
        "generators": f.generators().iter().map(PolyVectorField::render).collect::<Vec<_>>(),
        "structure_coeffs": cert,
    })
}

/// Missing `structure_coeffs` means all brackets are claimed to vanish.
pub fn foliation_from_json(v: &Value) -> Result<FoliationPresentation> {
    let file: FoliationFile = parse_json(v, "foliation")?;
    let chart = match file.chart {
        None => Chart::All,
        Some(ChartSpec::Named(s)) if s.eq_ignore_ascii_case("all") => Chart::All,
        Some(ChartSpec::Named(s)) => return Err(Error::Parse(format!("unknown chart `{s}`"))),
        Some(ChartSpec::Box { min, max }) => Chart::Box { min, max },
    };
    let gens = file.generators.iter().map(|g| PolyVectorField::parse_in(g, file.dim)).collect::<Result<Vec<_>>>()?;
    let q = gens.len();
    let cert = match file.structure_coeffs {
        None => InvolutivityCertificate::zero(q, file.dim),
        Some(raw) => {
            let polys = raw
                .iter()
                .map(|row| row.iter().map(|c| c.iter().map(|s| parse_poly(s, file.dim)).collect()).collect())
                .collect::<Result<Vec<Vec<Vec<Polynomial>>>>>()?;
            InvolutivityCertificate::from_array(q, file.dim, polys)?
        }
    };
    FoliationPresentation::new(file.dim, chart, gens, cert)
}

pub fn coeffs_to_json(c: &CoeffCurve) -> Value {
    let pieces: Vec<Vec<String>> = c.pieces().iter().map(|row| row.iter().map(|p| p.render("u")).collect()).collect();
    json!({ "breakpoints": c.breakpoints(), "local": true, "pieces": pieces })
}

pub fn coeffs_from_json(v: &Value) -> Result<CoeffCurve> {
    let file: CoeffFile = parse_json(v, "coefficients")?;
    if file.local {
        let pieces = file.pieces.iter().map(|row| row.iter().map(|s| UPoly::parse(s, "u")).collect()).collect::<Result<Vec<_>>>()?;
        CoeffCurve::new(file.breakpoints, pieces)
    } else {
        let pieces = file
            .pieces
            .iter()
            .map(|row| row.iter().map(|s| Ok(UPoly::parse(s, "t")?.to_polynomial())).collect())
            .collect::<Result<Vec<_>>>()?;
        CoeffCurve::from_absolute(file.breakpoints, &pieces)
    }
}

/// A point given as JSON numbers or as exact strings such as `"1/3"`.
pub fn point_from_json(v: &Value) -> Result<Vec<f64>> {
    let Value::Array(items) = v else {
        return match v {
            Value::String(s) => Ok(to_f64_vec(&parse_point(s)?)),
            _ => Err(Error::Parse("a point must be an array or a string".into())),
        };
    };
    items
        .iter()
        .map(|x| match x {
            Value::Number(n) => n.as_f64().ok_or_else(|| Error::Parse(format!("bad number {n}"))),
            Value::String(s) => match parse_point(s)?.as_slice() {
                [r] => Ok(crate::symcore::Coeff::to_f64(r)),
                _ => Err(Error::Parse(format!("`{s}` is not a single coordinate"))),
            },
            other => Err(Error::Parse(format!("bad coordinate {other}"))),
        })
        .collect()
}

/// Reads JSON files and resolves foliation references relative to them.
#[derive(Clone, Debug, Default)]
pub struct Loader {
    dir: PathBuf,
}

pub fn read_json(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

pub fn write_json(path: &Path, v: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(v).expect("JSON values serialize");
    fs::write(path, text + "\n").map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

impl Loader {
    /// Resolve references against `dir`.
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Loader { dir: dir.into() }
    }

    /// Resolve references against the directory containing `file`.
    pub fn beside(file: &Path) -> Self {
        Loader::new(file.parent().map(Path::to_path_buf).unwrap_or_default())
    }

    pub fn foliation(&self, v: &Value) -> Result<Arc<FoliationPresentation>> {
        match v {
            Value::Object(_) => Ok(Arc::new(foliation_from_json(v)?)),
            Value::String(s) => {
                let path = self.dir.join(s);
                if path.is_file() {
                    let inner = read_json(&path)?;
                    return Loader::beside(&path).foliation(&inner);
                }
                catalog::named()
                    .into_iter()
                    .find(|(name, _)| name.eq_ignore_ascii_case(s))
                    .map(|(_, f)| Arc::new(f))
                    .ok_or_else(|| Error::Io(format!("`{s}` is neither a file nor a catalog foliation")))
            }
            _ => Err(Error::Parse("foliation reference must be an object or a string".into())),
        }
    }

    pub fn foliation_file(path: &Path) -> Result<Arc<FoliationPresentation>> {
        let v = read_json(path)?;
        Loader::beside(path).foliation(&v)
    }

    fn field<'a>(v: &'a Value, key: &str, what: &str) -> Result<&'a Value> {
        v.get(key).ok_or_else(|| Error::Parse(format!("{what}: missing `{key}`")))
    }

    fn coeffs(&self, v: &Value) -> Result<CoeffCurve> {
        match v {
            Value::String(s) => coeffs_from_json(&read_json(&self.dir.join(s))?),
            _ => coeffs_from_json(v),
        }
    }

    /// The file's own `"foliation"` if present, else `given`; both present must agree.
    fn foliation_or(&self, v: &Value, given: Option<&Arc<FoliationPresentation>>, what: &str) -> Result<Arc<FoliationPresentation>> {
        match (v.get("foliation"), given) {
            (Some(r), Some(g)) => {
                let own = self.foliation(r)?;
                if *own != **g {
                    return Err(Error::Invalid(format!("{what}: foliation differs from the one supplied")));
                }
                Ok(own)
            }
            (Some(r), None) => self.foliation(r),
            (None, Some(g)) => Ok(g.clone()),
            (None, None) => Err(Error::Parse(format!("{what}: missing `foliation`"))),
        }
    }

    pub fn path(&self, v: &Value) -> Result<PathSpec> {
        self.path_over(v, None)
    }

    /// Like [`Loader::path`], with `given` standing in for a missing `"foliation"`.
    pub fn path_over(&self, v: &Value, given: Option<&Arc<FoliationPresentation>>) -> Result<PathSpec> {
        let foliation = self.foliation_or(v, given, "path")?;
        let coeffs = self.coeffs(Self::field(v, "coeffs", "path")?)?;
        let start = point_from_json(Self::field(v, "start", "path")?)?;
        if coeffs.q() != foliation.q() {
            return Err(Error::DimensionMismatch { expected: foliation.q(), got: coeffs.q() });
        }
        foliation.check_point(&start)?;
        Ok(PathSpec { foliation, coeffs, start })
    }

    pub fn path_file(path: &Path) -> Result<PathSpec> {
        Loader::beside(path).path(&read_json(path)?)
    }

    pub fn variation(&self, v: &Value, tol: f64) -> Result<Variation> {
        self.variation_over(v, None, tol)
    }

    pub fn variation_over(&self, v: &Value, given: Option<&Arc<FoliationPresentation>>, tol: f64) -> Result<Variation> {
        let foliation = self.foliation_or(v, given, "variation")?;
        let start = point_from_json(Self::field(v, "start", "variation")?)?;
        let Value::Array(items) = Self::field(v, "s_pieces", "variation")? else {
            return Err(Error::Parse("variation: `s_pieces` must be an array".into()));
        };
        let terms = items
            .iter()
            .map(|item| {
                let w = Self::field(item, "weight", "s_pieces")?
                    .as_str()
                    .ok_or_else(|| Error::Parse("s_pieces: `weight` must be a polynomial in s".into()))?;
                Ok((UPoly::parse(w, "s")?, self.coeffs(Self::field(item, "coeffs", "s_pieces")?)?))
            })
            .collect::<Result<Vec<_>>>()?;
        Variation::new(foliation, terms, start, tol)
    }

    pub fn variation_file(path: &Path, tol: f64) -> Result<Variation> {
        Loader::beside(path).variation(&read_json(path)?, tol)
    }

    pub fn morphism(&self, v: &Value) -> Result<FoliatedMorphism> {
        let source = self.foliation(Self::field(v, "source", "morphism")?)?;
        let target = self.foliation(Self::field(v, "target", "morphism")?)?;
        let m = source.dim();
        let strings = |key: &str| -> Result<Vec<Value>> {
            match Self::field(v, key, "morphism")? {
                Value::Array(a) => Ok(a.clone()),
                _ => Err(Error::Parse(format!("morphism: `{key}` must be an array"))),
            }
        };
        let poly = |x: &Value| -> Result<Polynomial> {
            match x {
                Value::String(s) => parse_poly(s, m),
                Value::Number(n) => parse_poly(&n.to_string(), m),
                _ => Err(Error::Parse("morphism entries must be polynomial strings".into())),
            }
        };
        let map = strings("f")?.iter().map(poly).collect::<Result<Vec<_>>>()?;
        let coeffs = strings("u")?
            .iter()
            .map(|row| match row {
                Value::Array(r) => r.iter().map(poly).collect::<Result<Vec<_>>>(),
                _ => Err(Error::Parse("morphism: `u` must be a matrix".into())),
            })
            .collect::<Result<Vec<_>>>()?;
        FoliatedMorphism::new(source, target, map, coeffs)
    }

    pub fn morphism_file(path: &Path) -> Result<FoliatedMorphism> {
        Loader::beside(path).morphism(&read_json(path)?)
    }
}

/// Contents of a path file.
#[derive(Clone, Debug, PartialEq)]
pub struct PathSpec {
    pub foliation: Arc<FoliationPresentation>,
    pub coeffs: CoeffCurve,
    pub start: Vec<f64>,
}

impl PathSpec {
    pub fn to_json(&self) -> Value {
        json!({
            "foliation": foliation_to_json(&self.foliation),
            "coeffs": coeffs_to_json(&self.coeffs),
            "start": self.start,
        })
    }

    pub fn build(&self, tol: f64) -> Result<crate::fpath::FPath> {
        crate::fpath::make_fpath(self.foliation.clone(), self.coeffs.clone(), &self.start, tol)
    }
}

pub fn variation_to_json(v: &Variation) -> Value {
    let pieces: Vec<Value> =
        v.terms.iter().map(|(w, c)| json!({ "weight": w.render("s"), "coeffs": coeffs_to_json(c) })).collect();
    json!({ "foliation": foliation_to_json(&v.foliation), "start": v.start, "s_pieces": pieces })
}

pub fn morphism_to_json(phi: &FoliatedMorphism) -> Value {
    json!({
        "source": foliation_to_json(&phi.source),
        "target": foliation_to_json(&phi.target),
        "f": phi.map.iter().map(render).collect::<Vec<_>>(),
        "u": phi.coeffs.iter().map(|row| row.iter().map(render).collect::<Vec<_>>()).collect::<Vec<_>>(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_round_trips() {
        for (name, f) in catalog::named() {
            let back = foliation_from_json(&foliation_to_json(&f)).unwrap();
            assert_eq!(back, f, "{name}");
        }
    }

    #[test]
    fn absolute_pieces_are_converted() {
        let v = json!({ "breakpoints": [0.0, 0.5, 1.0], "pieces": [["2*t"], ["1 - t^2"]] });
        let c = coeffs_from_json(&v).unwrap();
        for t in [0.0, 0.2, 0.5, 0.7, 1.0] {
            let want = if t < 0.5 { 2.0 * t } else { 1.0 - t * t };
            assert!((c.eval(t)[0] - want).abs() < 1e-15);
        }
        assert_eq!(coeffs_from_json(&coeffs_to_json(&c)).unwrap(), c);
    }

    #[test]
    fn references_and_points() {
        let l = Loader::default();
        assert_eq!(*l.foliation(&json!("rot2")).unwrap(), catalog::rot2());
        assert!(matches!(l.foliation(&json!("nowhere.json")), Err(Error::Io(_))));
        assert_eq!(point_from_json(&json!([1, "1/4", -0.5])).unwrap(), vec![1.0, 0.25, -0.5]);
        assert_eq!(point_from_json(&json!("1/2, 3")).unwrap(), vec![0.5, 3.0]);
        let missing = json!({ "dim": 2, "generators": ["[y, -x]"] });
        assert_eq!(foliation_from_json(&missing).unwrap(), catalog::rot2());
        assert!(foliation_from_json(&json!({ "dim": 3, "generators": ["[y, -x]"] })).is_err());
    }
}
