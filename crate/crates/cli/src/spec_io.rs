//! Network spec files: a hand-written walker so that every complaint carries a JSON pointer.
//!
//! Polynomials in `num`/`den` arrays are listed from the highest power down.

use std::path::Path;

use gridcert::models::{AgcParams, DroopDelayParams, SwingParams};
use gridcert::network::{BusLimits, BusModel, LineData, NetworkSpec, OperatingPoint};
use gridcert::tf::{Polynomial, RationalFunction, TransferMatrix2x2};
use serde_json::{json, Map, Value};

use crate::CliError;

fn schema(pointer: &str, reason: impl Into<String>) -> CliError {
    CliError::Schema {
        pointer: pointer.to_string(),
        reason: reason.into(),
    }
}

fn object<'a>(v: &'a Value, ptr: &str) -> Result<&'a Map<String, Value>, CliError> {
    v.as_object().ok_or_else(|| schema(ptr, "expected an object"))
}

fn field<'a>(obj: &'a Map<String, Value>, ptr: &str, key: &str) -> Result<&'a Value, CliError> {
    obj.get(key).ok_or_else(|| schema(&format!("{ptr}/{key}"), "missing field"))
}

fn number(v: &Value, ptr: &str) -> Result<f64, CliError> {
    v.as_f64().ok_or_else(|| schema(ptr, "expected a number"))
}

fn number_field(obj: &Map<String, Value>, ptr: &str, key: &str) -> Result<f64, CliError> {
    number(field(obj, ptr, key)?, &format!("{ptr}/{key}"))
}

fn numbers(v: &Value, ptr: &str) -> Result<Vec<f64>, CliError> {
    let arr = v.as_array().ok_or_else(|| schema(ptr, "expected an array of numbers"))?;
    arr.iter().enumerate().map(|(k, x)| number(x, &format!("{ptr}/{k}"))).collect()
}

fn index(v: &Value, ptr: &str) -> Result<usize, CliError> {
    v.as_u64()
        .map(|u| u as usize)
        .ok_or_else(|| schema(ptr, "expected a non-negative integer bus index"))
}

/// Descending coefficients to a polynomial.
pub fn poly_from_descending(c: &[f64]) -> Polynomial {
    let mut asc = c.to_vec();
    asc.reverse();
    Polynomial::from_slice(&asc)
}

pub fn descending(p: &Polynomial) -> Vec<f64> {
    let mut c = p.coeffs().to_vec();
    c.reverse();
    c
}

fn rational(v: &Value, ptr: &str) -> Result<RationalFunction, CliError> {
    let obj = object(v, ptr)?;
    let num = numbers(field(obj, ptr, "num")?, &format!("{ptr}/num"))?;
    let den = numbers(field(obj, ptr, "den")?, &format!("{ptr}/den"))?;
    if num.is_empty() || den.is_empty() {
        return Err(schema(ptr, "coefficient arrays must not be empty"));
    }
    RationalFunction::new(poly_from_descending(&num), poly_from_descending(&den)).map_err(|e| schema(ptr, e.to_string()))
}

pub fn rational_json(g: &RationalFunction) -> Value {
    json!({"num": descending(g.num()), "den": descending(g.den())})
}

fn bus(v: &Value, ptr: &str) -> Result<BusModel, CliError> {
    let obj = object(v, ptr)?;
    let kind = field(obj, ptr, "kind")?
        .as_str()
        .ok_or_else(|| schema(&format!("{ptr}/kind"), "expected a string"))?;
    let invalid = |e: gridcert::Error| schema(ptr, e.to_string());
    let f = |key: &str| number_field(obj, ptr, key);
    match kind {
        "swing" => Ok(BusModel::Swing(SwingParams::new(f("m")?, f("d")?).map_err(invalid)?)),
        "droop_delay" => Ok(BusModel::DroopDelay(
            DroopDelayParams::new(f("m")?, f("d")?, f("r")?, f("tau")?).map_err(invalid)?,
        )),
        "agc" => {
            let p = AgcParams {
                m: f("m")?,
                d: f("d")?,
                tg: f("tg")?,
                tt: f("tt")?,
                r: f("r")?,
                beta: f("beta")?,
                k: f("k")?,
            };
            p.validate().map_err(invalid)?;
            Ok(BusModel::Agc(p))
        }
        "custom" => {
            if let Some(g) = obj.get("closed_loop") {
                return Ok(BusModel::from_closed_loop(rational(g, &format!("{ptr}/closed_loop"))?));
            }
            let pp = format!("{ptr}/plant");
            let rows = field(obj, ptr, "plant")?
                .as_array()
                .filter(|r| r.len() == 2)
                .ok_or_else(|| schema(&pp, "expected a 2x2 array of transfer functions"))?;
            let mut g = Vec::with_capacity(4);
            for (a, row) in rows.iter().enumerate() {
                let row = row
                    .as_array()
                    .filter(|r| r.len() == 2)
                    .ok_or_else(|| schema(&format!("{pp}/{a}"), "expected a row of 2 transfer functions"))?;
                for (b, x) in row.iter().enumerate() {
                    g.push(rational(x, &format!("{pp}/{a}/{b}"))?);
                }
            }
            let controller = rational(field(obj, ptr, "controller")?, &format!("{ptr}/controller"))?;
            let [g11, g12, g21, g22]: [RationalFunction; 4] = g.try_into().expect("four blocks");
            Ok(BusModel::Custom {
                plant: TransferMatrix2x2::new(g11, g12, g21, g22),
                controller,
            })
        }
        other => Err(schema(&format!("{ptr}/kind"), format!("unknown bus kind {other:?}"))),
    }
}

fn line(v: &Value, ptr: &str, n: usize) -> Result<LineData, CliError> {
    let arr = v
        .as_array()
        .filter(|a| a.len() == 3)
        .ok_or_else(|| schema(ptr, "expected [i, j, b]"))?;
    let i = index(&arr[0], &format!("{ptr}/0"))?;
    let j = index(&arr[1], &format!("{ptr}/1"))?;
    let b = number(&arr[2], &format!("{ptr}/2"))?;
    if i == j {
        return Err(CliError::Index {
            pointer: ptr.into(),
            reason: format!("self-loop at bus {i}"),
        });
    }
    if i >= n || j >= n {
        return Err(CliError::Index {
            pointer: ptr.into(),
            reason: format!("bus index out of range for {n} buses"),
        });
    }
    if !(b >= 0.0 && b.is_finite()) {
        return Err(schema(&format!("{ptr}/2"), "susceptance must be finite and non-negative"));
    }
    Ok(LineData { i, j, b })
}

fn per_bus(v: &Value, ptr: &str, n: usize) -> Result<Vec<f64>, CliError> {
    let x = numbers(v, ptr)?;
    if x.len() != n {
        return Err(schema(ptr, format!("expected {n} entries, found {}", x.len())));
    }
    Ok(x)
}

/// Parses and validates a network document.
pub fn parse_spec_str(text: &str) -> Result<NetworkSpec, CliError> {
    let doc: Value = serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
    let root = object(&doc, "")?;
    for key in root.keys() {
        if !matches!(key.as_str(), "buses" | "lines" | "vmax" | "operating_point") {
            log::warn!("ignoring unknown top-level key {key:?}");
        }
    }
    let buses_v = field(root, "", "buses")?
        .as_array()
        .ok_or_else(|| schema("/buses", "expected an array"))?;
    let buses = buses_v
        .iter()
        .enumerate()
        .map(|(k, b)| bus(b, &format!("/buses/{k}")))
        .collect::<Result<Vec<_>, _>>()?;
    let n = buses.len();
    if n == 0 {
        return Err(schema("/buses", "at least one bus is required"));
    }
    let lines = field(root, "", "lines")?
        .as_array()
        .ok_or_else(|| schema("/lines", "expected an array"))?
        .iter()
        .enumerate()
        .map(|(k, l)| line(l, &format!("/lines/{k}"), n))
        .collect::<Result<Vec<_>, _>>()?;
    let vmax = per_bus(field(root, "", "vmax")?, "/vmax", n)?;
    let operating_point = match root.get("operating_point") {
        None | Some(Value::Null) => None,
        Some(op) => {
            let o = object(op, "/operating_point")?;
            Some(OperatingPoint {
                v0: per_bus(field(o, "/operating_point", "v0")?, "/operating_point/v0", n)?,
                theta0: per_bus(field(o, "/operating_point", "theta0")?, "/operating_point/theta0", n)?,
            })
        }
    };
    NetworkSpec::new(buses, lines, BusLimits { vmax }, operating_point).map_err(|e| match e {
        gridcert::Error::Index(reason) => CliError::Index {
            pointer: "/lines".into(),
            reason,
        },
        e => schema("", e.to_string()),
    })
}

pub fn parse_spec(path: &Path) -> Result<NetworkSpec, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_spec_str(&text)
}

/// Inverse of [`parse_spec_str`].
pub fn emit_spec(spec: &NetworkSpec) -> Value {
    let buses: Vec<Value> = spec
        .buses
        .iter()
        .map(|b| match b {
            BusModel::Swing(p) => json!({"kind": "swing", "m": p.m, "d": p.d}),
            BusModel::DroopDelay(p) => json!({"kind": "droop_delay", "m": p.m, "d": p.d, "r": p.r, "tau": p.tau}),
            BusModel::Agc(p) => json!({
                "kind": "agc", "m": p.m, "d": p.d, "tg": p.tg, "tt": p.tt, "r": p.r, "beta": p.beta, "k": p.k
            }),
            BusModel::Custom { plant, controller } => json!({
                "kind": "custom",
                "plant": [
                    [rational_json(&plant.g11), rational_json(&plant.g12)],
                    [rational_json(&plant.g21), rational_json(&plant.g22)]
                ],
                "controller": rational_json(controller),
            }),
        })
        .collect();
    let lines: Vec<Value> = spec.lines.iter().map(|l| json!([l.i, l.j, l.b])).collect();
    let mut doc = json!({"buses": buses, "lines": lines, "vmax": spec.limits.vmax});
    if let Some(op) = &spec.operating_point {
        doc["operating_point"] = json!({"v0": op.v0, "theta0": op.theta0});
    }
    doc
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "buses": [{"kind": "swing", "m": 1, "d": 1}, {"kind": "swing", "m": 1, "d": 1}],
        "lines": [[0, 1, 1.0]],
        "vmax": [1, 1]
    }"#;

    fn pointer(r: Result<NetworkSpec, CliError>) -> String {
        match r {
            Err(CliError::Schema { pointer, .. }) | Err(CliError::Index { pointer, .. }) => pointer,
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn minimal_two_bus() {
        let s = parse_spec_str(MINIMAL).unwrap();
        assert_eq!(s.n(), 2);
        assert_eq!(s.lines.len(), 1);
        assert!(s.operating_point.is_none());
    }

    #[test]
    fn errors_carry_pointers() {
        let no_vmax = MINIMAL.replace(r#""vmax": [1, 1]"#, r#""other": 0"#);
        assert_eq!(pointer(parse_spec_str(&no_vmax)), "/vmax");
        let self_loop = MINIMAL.replace("[0, 1, 1.0]", "[0, 0, 1.0]");
        assert!(matches!(parse_spec_str(&self_loop), Err(CliError::Index { .. })));
        let bad_d = MINIMAL.replacen(r#""d": 1}"#, r#""d": -1}"#, 1);
        assert_eq!(pointer(parse_spec_str(&bad_d)), "/buses/0");
        let bad_kind = MINIMAL.replacen("swing", "turbine", 1);
        assert_eq!(pointer(parse_spec_str(&bad_kind)), "/buses/0/kind");
        let short = MINIMAL.replace("[1, 1]", "[1]");
        assert_eq!(pointer(parse_spec_str(&short)), "/vmax");
        assert!(matches!(parse_spec_str("{"), Err(CliError::Parse(_))));
    }

    #[test]
    fn custom_closed_loop_shortcut() {
        let doc = r#"{"buses": [{"kind": "custom", "closed_loop": {"num": [1], "den": [1, 2]}},
                                {"kind": "swing", "m": 0, "d": 1}],
                      "lines": [[1, 0, 0.5]], "vmax": [1, 1]}"#;
        let s = parse_spec_str(doc).unwrap();
        let g = s.buses[0].closed_loop().unwrap();
        use gridcert::tf::FrequencyResponse;
        assert!((g.dc_value().unwrap().re - 0.5).abs() < 1e-15);
    }
}
