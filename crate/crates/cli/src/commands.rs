use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use nalgebra::DMatrix;
use serde_json::{json, Value};
use singfol::algebroid::{anchor_residual, is_ahomotopy, project_to_apath};
use singfol::bisubmersion::{compose_points, make_phb, psi_tilde, verify_bisubmersion, PhbBox, PhbPoint};
use singfol::fiber::minimal_generators;
use singfol::foliation::{trace_leaf, verify_involutivity};
use singfol::foliation::FoliationPresentation;
use singfol::fpath::variation::{Grid, Variation};
use singfol::fpath::{is_homotopy, FPath};
use singfol::holonomy::{default_slices, holonomy_report, GermJet};
use singfol::io::{coeffs_to_json, foliation_to_json, read_json, write_json, Loader, PathSpec};
use singfol::morphism::{pushforward_apath, pushforward_projectable_fpath, verify_morphism};
use singfol::symcore::parse_point;
use singfol::symcore::coeff::to_f64_vec;
use singfol::{Error, Result};

use crate::{Cli, Command, Global};

fn point(src: &str) -> Result<Vec<f64>> {
    Ok(to_f64_vec(&parse_point(src)?))
}

fn matrix(m: &DMatrix<f64>) -> Value {
    json!((0..m.nrows()).map(|r| (0..m.ncols()).map(|c| m[(r, c)]).collect::<Vec<_>>()).collect::<Vec<_>>())
}

fn jet_json(j: &GermJet) -> Value {
    let coeffs: Vec<Value> = j
        .taylor
        .iter()
        .map(|p| json!(p.terms().map(|(m, c)| json!({ "exponents": m.0, "coeff": c })).collect::<Vec<_>>()))
        .collect();
    json!({
        "order": j.order,
        "linear_part_slice": matrix(&j.linear_part()),
        "linear_part": matrix(&(&j.target.frame * j.linear_part() * j.source.frame.transpose())),
        "jet_coefficients": coeffs,
        "source_slice": { "base": j.source.base, "frame": matrix(&j.source.frame), "extent": j.source.extent },
        "target_slice": { "base": j.target.base, "frame": matrix(&j.target.frame), "extent": j.target.extent },
    })
}

fn path_json(p: &FPath) -> Value {
    json!({
        "foliation": foliation_to_json(p.foliation()),
        "coeffs": coeffs_to_json(p.coeffs()),
        "start": p.source(),
    })
}

fn emit(g: &Global, report: &Value) -> Result<()> {
    match &g.out {
        Some(path) => write_json(path, report),
        None => {
            println!("{}", serde_json::to_string_pretty(report).expect("JSON values serialize"));
            Ok(())
        }
    }
}

fn emit_csv(g: &Global, header: &[String], rows: &[Vec<f64>]) -> Result<()> {
    let Some(path) = &g.csv else { return Ok(()) };
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        let cells: Vec<String> = r.iter().map(|v| format!("{v:?}")).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    fs::write(path, out).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn coord_header(d: usize) -> Vec<String> {
    (1..=d).map(|i| format!("x{i}")).collect()
}

/// Run one command; `Ok(false)` means the computation finished but the check failed.
pub fn run(cli: &Cli) -> Result<bool> {
    let g = &cli.global;
    let (report, ok) = match &cli.command {
        Command::Verify { foliation } => {
            let f = Loader::foliation_file(foliation)?;
            let rep = verify_involutivity(&f);
            let failures: Vec<[usize; 2]> = rep.failures.iter().map(|&(i, j)| [i + 1, j + 1]).collect();
            (json!({ "ok": rep.ok, "failures": failures }), rep.ok)
        }
        Command::Leaf { foliation, at, budget, step } => {
            let f = Loader::foliation_file(foliation)?;
            let sample = trace_leaf(&f, &point(at)?, *budget, *step, g.seed)?;
            emit_csv(g, &coord_header(f.dim()), &sample.points)?;
            (
                json!({ "est_dim": sample.est_dim, "n_points": sample.points.len(), "truncated": sample.truncated }),
                true,
            )
        }
        Command::Fiber { foliation, at } => {
            let f = Loader::foliation_file(foliation)?;
            let x = parse_point(at)?;
            let rep = minimal_generators(&f, &x)?;
            let mut v = serde_json::to_value(&rep).expect("report serializes");
            v["minimal_generators"] = json!(rep.minimal_generator_indices.iter().map(|i| i + 1).collect::<Vec<_>>());
            v.as_object_mut().unwrap().remove("minimal_generator_indices");
            (v, true)
        }
        Command::Flow { path, foliation, samples } => {
            let p = load_path(path, foliation)?.1.build(g.tol)?;
            let n = (*samples).max(1);
            let rows: Vec<Vec<f64>> = (0..=n)
                .map(|k| {
                    let t = k as f64 / n as f64;
                    std::iter::once(t).chain(p.base.eval(t)).collect()
                })
                .collect();
            let mut header = vec!["t".to_string()];
            header.extend(coord_header(p.dim()));
            emit_csv(g, &header, &rows)?;
            (json!({ "source": p.source(), "target": p.target() }), true)
        }
        Command::Holonomy { path, foliation, order, extent } => {
            let p = load_path(path, foliation)?.1.build(g.tol)?;
            let (s0, s1) = default_slices(&p, *extent)?;
            let rep = holonomy_report(&p, &s0, &s1, order.unwrap_or(g.jet_order), g.tol)?;
            let mut v = jet_json(&rep.jet);
            v["correction_residual"] = json!(rep.correction.residual);
            v["correction_terms"] = json!(rep.correction.terms.len());
            v["equivalence_status"] = serde_json::to_value(rep.equivalence_status).expect("status serializes");
            (v, true)
        }
        Command::Homotopy { variation, foliation, tau } => {
            let v = load_variation(variation, foliation, g.tol)?;
            let rep = is_homotopy(&v, *tau)?;
            (serde_json::to_value(&rep).expect("report serializes"), rep.ok)
        }
        Command::Apath { path, foliation } => apath(path, foliation, g)?,
        Command::Ahomotopy { variation, foliation, tau } => {
            let v = load_variation(variation, foliation, g.tol)?;
            let rep = is_ahomotopy(&v, &Grid::default(), *tau)?;
            (serde_json::to_value(&rep).expect("report serializes"), rep.ok)
        }
        Command::Bisub { foliation, center, c_radius, y_radius, verify, samples, psi } => {
            let f = Loader::foliation_file(foliation)?;
            let x = point(center)?;
            let b = Arc::new(make_phb(f, &x, PhbBox { c_radius: *c_radius, y_radius: *y_radius }, g.tol)?);
            let mut v = json!({
                "center": x,
                "generators": b.gen_indices.iter().map(|i| i + 1).collect::<Vec<_>>(),
                "basis_check": b.basis_check,
            });
            let mut ok = true;
            if *verify {
                let rep = verify_bisubmersion(&b, &b.sample_points(*samples))?;
                ok &= rep.ok;
                v["verify"] = serde_json::to_value(&rep).expect("report serializes");
            }
            if !psi.is_empty() {
                let pts = psi.iter().map(|s| phb_point(&b, s)).collect::<Result<Vec<_>>>()?;
                let mut it = pts.into_iter();
                let first = it.next().unwrap();
                let chain = it.try_fold(first, |acc, q| compose_points(&acc, &q))?;
                let path = psi_tilde(&chain)?;
                v["psi"] = json!({
                    "source": path.source(),
                    "target": path.target(),
                    "path": path_json(&path),
                });
            }
            (v, ok)
        }
        Command::Morphism { morphism } => {
            let phi = Loader::morphism_file(morphism)?;
            let rep = verify_morphism(&phi)?;
            let mut v = serde_json::to_value(&rep).expect("report serializes");
            v["anchor_failures"] = json!(rep.anchor_failures.iter().map(|i| i + 1).collect::<Vec<_>>());
            v["bracket_failures"] = json!(rep.bracket_failures.iter().map(|&(a, b)| [a + 1, b + 1]).collect::<Vec<_>>());
            (v, rep.ok)
        }
        Command::Pushforward { morphism, path, projectable, drop_vertical } => {
            let phi = Loader::morphism_file(morphism)?;
            let spec = Loader::path_file(path)?;
            if *spec.foliation != *phi.source {
                return Err(Error::Invalid("path and morphism source presentations differ".into()));
            }
            let p = spec.build(g.tol)?;
            let out = if *projectable {
                pushforward_projectable_fpath(&phi, &p, *drop_vertical)?
            } else {
                singfol::algebroid::lift_apath(&pushforward_apath(&phi, &project_to_apath(&p)?)?)?
            };
            let mut v = path_json(&out);
            v["target"] = json!(out.target());
            (v, true)
        }
    };
    emit(g, &report)?;
    Ok(ok)
}

fn given(foliation: &Option<PathBuf>) -> Result<Option<Arc<FoliationPresentation>>> {
    foliation.as_deref().map(Loader::foliation_file).transpose()
}

fn load_path(path: &Path, foliation: &Option<PathBuf>) -> Result<(Value, PathSpec)> {
    let raw = read_json(path)?;
    let spec = Loader::beside(path).path_over(&raw, given(foliation)?.as_ref())?;
    Ok((raw, spec))
}

fn load_variation(path: &Path, foliation: &Option<PathBuf>, tol: f64) -> Result<Variation> {
    Loader::beside(path).variation_over(&read_json(path)?, given(foliation)?.as_ref(), tol)
}

/// `c1,..,cm;y1,..,yn` on a bisubmersion.
fn phb_point(b: &Arc<singfol::bisubmersion::PathHolonomyBisubmersion>, src: &str) -> Result<PhbPoint> {
    let (c, y) = src.split_once(';').ok_or_else(|| Error::Parse(format!("`{src}`: expected `c;y`")))?;
    PhbPoint::new(b.clone(), point(c)?, point(y)?)
}

/// The path file may carry an explicit polynomial base curve `"base": ["p1(t)", ...]`;
/// otherwise the integral curve of the coefficients is used.
fn apath(path: &Path, foliation: &Option<PathBuf>, g: &Global) -> Result<(Value, bool)> {
    let (raw, spec) = load_path(path, foliation)?;
    let p = spec.build(g.tol)?;
    let residual = match raw.get("base") {
        None => anchor_residual(p.foliation(), &p.base, p.coeffs()),
        Some(Value::Array(items)) => {
            let comps = items
                .iter()
                .map(|s| {
                    let s = s.as_str().ok_or_else(|| Error::Parse("base components must be strings".into()))?;
                    singfol::flowengine::UPoly::parse(s, "t")
                })
                .collect::<Result<Vec<_>>>()?;
            if comps.len() != spec.foliation.dim() {
                return Err(Error::DimensionMismatch { expected: spec.foliation.dim(), got: comps.len() });
            }
            let start: Vec<f64> = comps.iter().map(|c| c.eval(0.0)).collect();
            if singfol::linalg::dist(&start, &spec.start) > singfol::fpath::TAU_PT {
                return Err(Error::Invalid("base curve does not start at `start`".into()));
            }
            polynomial_anchor_residual(&spec, &comps)
        }
        Some(_) => return Err(Error::Parse("`base` must be an array of polynomials in t".into())),
    };
    let ok = residual <= singfol::algebroid::ANCHOR_TOL;
    Ok((json!({ "ok": ok, "anchor_residual": residual, "target": p.target() }), ok))
}

fn polynomial_anchor_residual(spec: &PathSpec, base: &[singfol::flowengine::UPoly]) -> f64 {
    const N: usize = 40;
    let vel: Vec<_> = base.iter().map(|c| c.deriv()).collect();
    (0..N)
        .map(|i| {
            let t = (i as f64 + 0.5) / N as f64;
            let x: Vec<f64> = base.iter().map(|c| c.eval(t)).collect();
            let v: Vec<f64> = vel.iter().map(|c| c.eval(t)).collect();
            singfol::linalg::dist(&spec.foliation.compiled().combine(&spec.coeffs.eval(t), &x), &v)
        })
        .fold(0.0, f64::max)
}
