//! JSON input and output. Rationals are written as `"p/q"` strings (integers bare or as
//! strings on input); every exact quantity in a report has a float mirror under `<key>_f64`.

use num_traits::ToPrimitive;
use serde_json::{json, Map, Value};

use crate::destabilizer::{BalancingCheck, DestabilizerRun, EnergyReport, OptimalDestabilizer};
use crate::error::{Error, Result};
use crate::function::{AffineFunction, PlConvexFunction};
use crate::geometry::{FanoPair, HalfSpace, StructureReport};
use crate::invariants::{InvariantReport, LctReport};
use crate::moments::MomentTable;
use crate::rational::{format_rational, parse_rational, to_f64, Rational};
use crate::stability::StabilityReport;

fn bad(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

/// A rational from a JSON string or number.
pub fn rational_from_json(v: &Value) -> Result<Rational> {
    match v {
        Value::String(s) => parse_rational(s),
        Value::Number(n) => parse_rational(&n.to_string()),
        other => Err(bad(format!("expected a rational, found {other}"))),
    }
}

fn rational_vec(v: &Value, what: &str) -> Result<Vec<Rational>> {
    v.as_array()
        .ok_or_else(|| bad(format!("{what} must be an array")))?
        .iter()
        .map(rational_from_json)
        .collect()
}

fn rational_rows(v: &Value, what: &str) -> Result<Vec<Vec<Rational>>> {
    v.as_array()
        .ok_or_else(|| bad(format!("{what} must be an array of arrays")))?
        .iter()
        .enumerate()
        .map(|(i, row)| rational_vec(row, &format!("{what}[{i}]")))
        .collect()
}

fn infer_dim(declared: Option<usize>, rows: &[Vec<Rational>], what: &str) -> Result<usize> {
    let n = declared.or_else(|| rows.first().map(Vec::len)).ok_or_else(|| bad(format!("{what} is empty")))?;
    if let Some((i, _)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
        return Err(bad(format!("{what}[{i}] does not have {n} coordinates")));
    }
    Ok(n)
}

/// Parses `{"dim", "fano_vertices" | "dual_vertices" | "halfspaces"}`.
pub fn parse_polytope(text: &str) -> Result<FanoPair> {
    let v: Value = serde_json::from_str(text)?;
    polytope_from_value(&v)
}

pub fn polytope_from_value(v: &Value) -> Result<FanoPair> {
    let obj = v.as_object().ok_or_else(|| bad("polytope must be a JSON object"))?;
    let dim = match obj.get("dim") {
        None => None,
        Some(d) => Some(d.as_u64().ok_or_else(|| bad("dim must be a non-negative integer"))? as usize),
    };
    if let Some(rows) = obj.get("fano_vertices") {
        let rows = rational_rows(rows, "fano_vertices")?;
        let n = infer_dim(dim, &rows, "fano_vertices")?;
        return FanoPair::from_fano_vertices(n, &rows);
    }
    if let Some(rows) = obj.get("dual_vertices") {
        let rows = rational_rows(rows, "dual_vertices")?;
        let n = infer_dim(dim, &rows, "dual_vertices")?;
        return FanoPair::from_delta_vertices(n, &rows);
    }
    if let Some(hs) = obj.get("halfspaces") {
        let list = hs.as_array().ok_or_else(|| bad("halfspaces must be an array"))?;
        let mut out = Vec::with_capacity(list.len());
        for (i, h) in list.iter().enumerate() {
            let normal = rational_vec(h.get("normal").ok_or_else(|| bad(format!("halfspaces[{i}] has no normal")))?, "normal")?;
            let offset = rational_from_json(h.get("offset").ok_or_else(|| bad(format!("halfspaces[{i}] has no offset")))?)?;
            out.push(HalfSpace::new(normal, offset));
        }
        let normals: Vec<Vec<Rational>> = out.iter().map(|h| h.normal.clone()).collect();
        let n = infer_dim(dim, &normals, "halfspaces")?;
        return FanoPair::from_halfspaces(n, out);
    }
    Err(bad("polytope needs one of fano_vertices, dual_vertices or halfspaces"))
}

fn rat_str(r: &Rational) -> Value {
    Value::String(format_rational(r))
}

fn rat_strs(v: &[Rational]) -> Value {
    Value::Array(v.iter().map(rat_str).collect())
}

fn floats(v: &[Rational]) -> Value {
    json!(v.iter().map(to_f64).collect::<Vec<_>>())
}

/// Inserts `key: "p/q"` and `key_f64: float`.
fn put_exact(m: &mut Map<String, Value>, key: &str, r: &Rational) {
    m.insert(key.into(), rat_str(r));
    m.insert(format!("{key}_f64"), json!(to_f64(r)));
}

pub fn polytope_to_json(pair: &FanoPair) -> Value {
    json!({
        "dim": pair.dim(),
        "fano_vertices": pair
            .fano_vertices
            .iter()
            .map(|p| p.iter().map(|x| x.to_i64().map(Value::from).unwrap_or_else(|| Value::String(x.to_string()))).collect())
            .collect::<Vec<Vec<Value>>>(),
        "dual_vertices": pair.delta.vertices.iter().map(|v| rat_strs(v)).collect::<Vec<_>>(),
        "halfspaces": pair.delta.halfspaces.iter().map(|h| json!({"normal": rat_strs(&h.normal), "offset": rat_str(&h.offset)})).collect::<Vec<_>>(),
    })
}

/// Parses `{"pieces": [[c0, c1, ..., cn], ...]}` for a function on `R^dim`.
pub fn parse_pl(text: &str, dim: usize) -> Result<PlConvexFunction> {
    let v: Value = serde_json::from_str(text)?;
    pl_from_value(&v, dim)
}

pub fn pl_from_value(v: &Value, dim: usize) -> Result<PlConvexFunction> {
    let pieces = v.get("pieces").ok_or_else(|| bad("PL function needs a pieces array"))?;
    let rows = rational_rows(pieces, "pieces")?;
    if let Some((i, _)) = rows.iter().enumerate().find(|(_, r)| r.len() != dim + 1) {
        return Err(bad(format!("pieces[{i}] must have {} coefficients (constant first)", dim + 1)));
    }
    PlConvexFunction::new(dim, rows.into_iter().map(AffineFunction::new).collect())
}

pub fn pl_to_json(g: &PlConvexFunction) -> Value {
    json!({ "pieces": g.pieces.iter().map(|p| rat_strs(&p.coeffs)).collect::<Vec<_>>() })
}

fn affine_json(f: &AffineFunction) -> Value {
    json!({
        "c0": rat_str(f.constant()),
        "slope": rat_strs(f.slope()),
        "c0_f64": to_f64(f.constant()),
        "slope_f64": floats(f.slope()),
    })
}

pub fn stability_to_json(r: &StabilityReport) -> Value {
    let mut m = Map::new();
    m.insert("classification".into(), json!(r.classification.as_str()));
    put_exact(&mut m, "delta", &r.ricci.min_value);
    put_exact(&mut m, "alpha_x", &r.ricci.alpha);
    put_exact(&mut m, "volume", &r.ricci.volume);
    m.insert("l".into(), affine_json(&r.ricci.l));
    m.insert("theta".into(), affine_json(&r.ricci.theta));
    m.insert("argmin".into(), json!(r.ricci.argmin.iter().map(|v| rat_strs(v)).collect::<Vec<_>>()));
    m.insert("barycenter".into(), rat_strs(&r.barycenter));
    m.insert("barycenter_f64".into(), floats(&r.barycenter));
    Value::Object(m)
}

pub fn structure_to_json(s: &StructureReport) -> Value {
    let mut m = Map::new();
    m.insert("dim".into(), json!(s.dim));
    m.insert("num_fano_vertices".into(), json!(s.num_fano_vertices));
    m.insert("num_delta_vertices".into(), json!(s.num_delta_vertices));
    m.insert("reflexive".into(), json!(s.reflexive));
    m.insert("gorenstein_index".into(), json!(s.gorenstein_index.to_string()));
    m.insert("simplicial".into(), json!(s.simplicial));
    m.insert("smooth".into(), json!(s.smooth));
    put_exact(&mut m, "delta_volume", &s.delta_volume);
    Value::Object(m)
}

/// `{"dim", "max_degree", "moments": [{"alpha": [...], "value": "p/q", "value_f64": x}]}`.
pub fn moments_to_json(t: &MomentTable) -> Value {
    json!({
        "dim": t.dim,
        "max_degree": t.max_degree,
        "moments": t.moments.iter().map(|(a, v)| json!({"alpha": a, "value": rat_str(v), "value_f64": to_f64(v)})).collect::<Vec<_>>(),
    })
}

pub fn invariant_to_json(r: &InvariantReport, lct: Option<&LctReport>) -> Value {
    let mut m = Map::new();
    put_exact(&mut m, "ding", &r.ding);
    put_exact(&mut m, "df", &r.df);
    put_exact(&mut m, "df_relative", &r.df_relative);
    put_exact(&mut m, "gap", &r.gap.difference);
    put_exact(&mut m, "gap_cone", &r.gap.cone);
    put_exact(&mut m, "ding_weighted_ricci", &r.ding_weighted_ricci);
    put_exact(&mut m, "integral", &r.integral);
    put_exact(&mut m, "boundary_integral", &r.boundary_integral);
    put_exact(&mut m, "l2_norm_sq", &r.l2_norm_sq);
    put_exact(&mut m, "value_at_origin", &r.value_at_origin);
    m.insert("num_regions".into(), json!(r.num_regions));
    m.insert("dropped_pieces".into(), json!(r.dropped_pieces));
    if let Some(l) = lct {
        let mut o = Map::new();
        put_exact(&mut o, "ding", &l.ding);
        put_exact(&mut o, "lct", &l.lct);
        o.insert("l_cap".into(), json!(l.l_cap.to_string()));
        o.insert("r".into(), json!(l.r.to_string()));
        put_exact(&mut o, "box_volume", &l.box_volume);
        put_exact(&mut o, "top_intersection", &l.top_intersection);
        m.insert("ding_via_lct".into(), Value::Object(o));
    }
    Value::Object(m)
}

fn destabilizer_json(d: &OptimalDestabilizer) -> Value {
    let mut m = Map::new();
    m.insert("h".into(), affine_json(&d.h));
    put_exact(&mut m, "volume_support", &d.volume);
    m.insert("B0".into(), json!(to_f64(&d.b_at_zero())));
    m.insert("residual".into(), json!(d.residual_norm));
    m.insert("iterations".into(), json!(d.iterations));
    m.insert("solver".into(), json!(d.solver.as_str()));
    m.insert("exact".into(), json!(d.exact));
    m.insert("history".into(), json!(d.history));
    Value::Object(m)
}

pub fn destabilize_to_json(run: &DestabilizerRun, energy: &EnergyReport, balancing: &BalancingCheck) -> Value {
    let mut m = match destabilizer_json(&run.primary) {
        Value::Object(m) => m,
        _ => unreachable!(),
    };
    m.insert("energy_infimum".into(), json!(energy.energy_infimum));
    if let Some(e) = &energy.energy_infimum_exact {
        m.insert("energy_infimum_exact".into(), rat_str(e));
    }
    m.insert("mw_supremum".into(), json!(energy.mw_supremum));
    m.insert("witness".into(), pl_to_json(&energy.witness));
    m.insert("witness_ratio".into(), json!(energy.witness_ratio));
    if let Some(s) = &run.secondary {
        m.insert("cross_check".into(), destabilizer_json(s));
    }
    m.insert("agreement".into(), json!(run.agreement));
    m.insert(
        "balancing".into(),
        json!({
            "mass_defect": balancing.mass_defect,
            "first_moments": balancing.first_moments,
            "l2_defect": balancing.l2_defect,
            "samples": balancing.samples,
            "min_weighted_ding": balancing.min_weighted_ding,
            "norm_comparisons": balancing.norm_comparisons,
            "min_norm_gap": balancing.min_norm_gap,
            "passed": balancing.passed,
            "diagnostics": balancing.diagnostics,
        }),
    );
    Value::Object(m)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Table,
    Csv,
}

impl Format {
    pub fn parse(s: &str) -> Result<Format> {
        match s {
            "json" => Ok(Format::Json),
            "table" => Ok(Format::Table),
            "csv" => Ok(Format::Csv),
            _ => Err(bad(format!("unknown format {s:?} (expected json, table or csv)"))),
        }
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Flattens nested objects into `a.b.c` paths; arrays of scalars stay on one line.
fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, x, out);
            }
        }
        Value::Array(a) if a.iter().any(|x| x.is_object() || x.is_array()) => {
            for (i, x) in a.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), x, out);
            }
        }
        Value::Array(a) => out.push((prefix.into(), a.iter().map(scalar).collect::<Vec<_>>().join(" "))),
        other => out.push((prefix.into(), scalar(other))),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Renders a report. For CSV, a top-level `rows` array of flat objects becomes one line per
/// row; anything else is written as `key,value` pairs.
pub fn render(v: &Value, format: Format) -> String {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(v).expect("serialisable");
            s.push('\n');
            s
        }
        Format::Table => {
            let mut rows = Vec::new();
            flatten("", v, &mut rows);
            let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
            rows.iter().map(|(k, x)| format!("{k:<width$}  {x}\n")).collect()
        }
        Format::Csv => {
            if let Some(Value::Array(rows)) = v.get("rows") {
                if let Some(Value::Object(first)) = rows.first() {
                    let keys: Vec<&String> = first.keys().collect();
                    let mut s = keys.iter().map(|k| csv_field(k)).collect::<Vec<_>>().join(",");
                    s.push('\n');
                    for r in rows {
                        let line: Vec<String> = keys.iter().map(|k| csv_field(&r.get(*k).map(scalar).unwrap_or_default())).collect();
                        s.push_str(&line.join(","));
                        s.push('\n');
                    }
                    return s;
                }
            }
            let mut rows = Vec::new();
            flatten("", v, &mut rows);
            let mut s = String::from("key,value\n");
            for (k, x) in rows {
                s.push_str(&format!("{},{}\n", csv_field(&k), csv_field(&x)));
            }
            s
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::rational::rat;

    #[test]
    fn polytope_json_round_trips() {
        for e in catalog::catalog().unwrap() {
            let text = serde_json::to_string(&polytope_to_json(&e.pair)).unwrap();
            let back = parse_polytope(&text).unwrap();
            assert_eq!(back.delta, e.pair.delta, "{}", e.label);
            let v: Value = serde_json::from_str(&text).unwrap();
            let via_dual = polytope_from_value(&json!({"dual_vertices": v["dual_vertices"]})).unwrap();
            assert_eq!(via_dual.delta, e.pair.delta);
            let via_hs = polytope_from_value(&json!({"halfspaces": v["halfspaces"]})).unwrap();
            assert_eq!(via_hs.delta, e.pair.delta);
        }
    }

    #[test]
    fn accepts_bare_integers_decimals_and_fractions() {
        let p = parse_polytope(r#"{"dim": 2, "fano_vertices": [[1, 0], ["0", "1"], [-1, "-1"]]}"#).unwrap();
        assert_eq!(p.delta.volume(), rat(9, 2));
        let g = parse_pl(r#"{"pieces": [[0, "1/2", 0.25], ["0", 0, 0]]}"#, 2).unwrap();
        assert_eq!(g.pieces[0].coeffs, vec![rat(0, 1), rat(1, 2), rat(1, 4)]);
        assert_eq!(parse_pl(&serde_json::to_string(&pl_to_json(&g)).unwrap(), 2).unwrap(), g);
    }

    #[test]
    fn malformed_input_is_an_input_error() {
        for bad in [
            r#"{"dim": 2, "fano_vertices": [[1, 0], [0, 1, 3]]}"#,
            r#"{"dim": 2}"#,
            r#"{"fano_vertices": [[1, 0], [0, "x"]]}"#,
            r#"{"dim": 2, "fano_vertices": [[1, 0]"#,
        ] {
            assert_eq!(parse_polytope(bad).unwrap_err().exit_code(), 1, "{bad}");
        }
        assert!(parse_pl(r#"{"pieces": [[0, 1]]}"#, 2).is_err());
    }

    #[test]
    fn stability_report_fields_reparse_exactly() {
        let e = catalog::entry("cp2-blowup").unwrap();
        let r = crate::stability::classify(&e.pair).unwrap();
        let v = stability_to_json(&r);
        assert_eq!(v["classification"], "UniformlyStable");
        assert_eq!(rational_from_json(&v["delta"]).unwrap(), r.ricci.min_value);
        assert_eq!(rational_from_json(&v["l"]["c0"]).unwrap(), rat(3, 11));
        let text = render(&v, Format::Json);
        let back: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(back, v);
        assert!(render(&v, Format::Table).contains("l.c0"));
        assert!(render(&v, Format::Csv).starts_with("key,value\n"));
    }

    #[test]
    fn csv_rows_render_one_line_each() {
        let v = json!({"rows": [{"t": 1.0, "slope": 0.5}, {"t": 2.0, "slope": 0.75}]});
        assert_eq!(render(&v, Format::Csv), "slope,t\n0.5,1.0\n0.75,2.0\n");
    }
}
