//! JSON input of configurations and pentapods.
//!
//! Coordinates may be JSON numbers, decimal strings, or `"p/q"` strings.
//! Every coordinate is read both as a double and as an exact rational; a
//! JSON number is taken as the decimal it prints as, so `0.1` is `1/10`.

use num_rational::BigRational;
use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::exact::{format_rational, parse_rational, rational_to_f64, RationalConfig};
use crate::geometry::{PointConfig, Vec3};
use crate::pentapod::Pentapod;

/// A configuration read from JSON, with exact coordinates alongside.
#[derive(Debug, Clone)]
pub struct ParsedConfig {
    pub config: PointConfig,
    pub exact: RationalConfig,
}

fn parse_err(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

fn coordinate(v: &Value) -> Result<BigRational> {
    match v {
        Value::Number(n) => parse_rational(&n.to_string()),
        Value::String(s) => parse_rational(s),
        other => Err(parse_err(format!("coordinate must be a number or string, got {other}"))),
    }
}

fn raw_points(v: &Value) -> Result<(Option<String>, Vec<[BigRational; 3]>)> {
    let obj = v.as_object().ok_or_else(|| parse_err("configuration must be a JSON object"))?;
    let label = match obj.get("label") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(s.clone()),
        Some(_) => return Err(parse_err("label must be a string")),
    };
    let pts = obj
        .get("points")
        .and_then(Value::as_array)
        .ok_or_else(|| parse_err("configuration needs a \"points\" array"))?;
    let points = pts
        .iter()
        .map(|p| {
            let c = p
                .as_array()
                .filter(|c| c.len() == 3)
                .ok_or_else(|| parse_err("each point must be an array of 3 coordinates"))?;
            Ok([coordinate(&c[0])?, coordinate(&c[1])?, coordinate(&c[2])?])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((label, points))
}

fn to_vec3(p: &[BigRational; 3]) -> Vec3 {
    Vec3::new(rational_to_f64(&p[0]), rational_to_f64(&p[1]), rational_to_f64(&p[2]))
}

pub fn config_from_value(v: &Value) -> Result<ParsedConfig> {
    let (label, points) = raw_points(v)?;
    let mut config = PointConfig::new(points.iter().map(to_vec3).collect())?;
    config.label = label;
    Ok(ParsedConfig {
        config,
        exact: RationalConfig { points },
    })
}

pub fn parse_config(text: &str) -> Result<ParsedConfig> {
    let v: Value = serde_json::from_str(text).map_err(|e| parse_err(e.to_string()))?;
    config_from_value(&v)
}

pub fn parse_pentapod(text: &str) -> Result<Pentapod> {
    let v: Value = serde_json::from_str(text).map_err(|e| parse_err(e.to_string()))?;
    let obj = v.as_object().ok_or_else(|| parse_err("pentapod must be a JSON object"))?;
    let side = |key: &str| -> Result<(Option<String>, Vec<Vec3>)> {
        let s = obj.get(key).ok_or_else(|| parse_err(format!("pentapod needs \"{key}\"")))?;
        let (label, pts) = raw_points(s)?;
        Ok((label, pts.iter().map(to_vec3).collect()))
    };
    let (pl, platform) = side("platform")?;
    let (bl, base) = side("base")?;
    let leg_lengths = match obj.get("leg_lengths") {
        None | Some(Value::Null) => None,
        Some(l) => {
            let arr = l
                .as_array()
                .filter(|a| a.len() == 5)
                .ok_or_else(|| parse_err("leg_lengths must be an array of 5 numbers"))?;
            let mut d = [0.0; 5];
            for (k, x) in arr.iter().enumerate() {
                d[k] = rational_to_f64(&coordinate(x)?);
            }
            Some(d)
        }
    };
    let mut pp = Pentapod::new(platform, base, leg_lengths)?;
    pp.platform.label = pl;
    pp.base.label = bl;
    Ok(pp)
}

/// A configuration with coordinates printed as `"p/q"` strings.
#[derive(Debug, Clone, Serialize)]
pub struct ExactConfigJson {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub points: Vec<[String; 3]>,
}

impl ExactConfigJson {
    pub fn new(label: Option<String>, cfg: &RationalConfig) -> Self {
        ExactConfigJson {
            label,
            points: cfg.points.iter().map(|p| p.clone().map(|x| format_rational(&x))).collect(),
        }
    }
}
