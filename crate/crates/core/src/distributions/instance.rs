use std::fmt;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Map, Value};

use super::discrete::DiscreteDistribution;
use super::oracle::{CdfOracle, Family};
use crate::error::{Error, Result};
use crate::rational::{self, Rational};

/// Which item the buyer takes when several share the largest gap.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize)]
pub enum TieBreak {
    /// The earliest item wins ties.
    #[default]
    #[serde(rename = "lowest")]
    LowestIndex,
    /// The latest item wins ties.
    #[serde(rename = "highest")]
    HighestIndex,
}

impl TieBreak {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "lowest" => Ok(Self::LowestIndex),
            "highest" => Ok(Self::HighestIndex),
            _ => Err(Error::Parse(format!("tie_break must be \"lowest\" or \"highest\", got {s:?}"))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::LowestIndex => "lowest",
            Self::HighestIndex => "highest",
        }
    }
}

impl fmt::Display for TieBreak {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Distribution class the caller vouches for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Class {
    Mhr,
    Regular,
}

impl Class {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "mhr" => Ok(Self::Mhr),
            "regular" => Ok(Self::Regular),
            _ => Err(Error::Parse(format!("class must be \"mhr\" or \"regular\", got {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Item {
    Discrete(DiscreteDistribution),
    Oracle(CdfOracle),
}

impl Item {
    pub fn as_discrete(&self) -> Option<&DiscreteDistribution> {
        match self {
            Item::Discrete(d) => Some(d),
            Item::Oracle(_) => None,
        }
    }

    pub fn u_min_f64(&self) -> f64 {
        match self {
            Item::Discrete(d) => rational::to_f64(d.u_min()),
            Item::Oracle(o) => o.u_min(),
        }
    }

    pub fn u_max_f64(&self) -> f64 {
        match self {
            Item::Discrete(d) => rational::to_f64(d.u_max()),
            Item::Oracle(o) => o.u_max(),
        }
    }

    /// `alpha_p` as a float; discrete items are exact.
    pub fn quantile_f64(&self, p: f64, precision: f64) -> Result<f64> {
        match self {
            Item::Discrete(d) => {
                let p = rational::from_f64(p)?;
                Ok(rational::to_f64(&d.quantile(&p)?))
            }
            Item::Oracle(o) => o.quantile(p, precision),
        }
    }

    /// `Pr[X <= x]`.
    pub fn cdf_f64(&self, x: f64) -> f64 {
        match self {
            Item::Discrete(d) => match rational::from_f64(x) {
                Ok(x) => rational::to_f64(&d.cdf(&x)),
                Err(_) if x > 0.0 => 1.0,
                Err(_) => 0.0,
            },
            Item::Oracle(o) => o.cdf(x),
        }
    }

    /// `Pr[X >= x]`.
    pub fn survival_ge_f64(&self, x: f64) -> f64 {
        match self {
            Item::Discrete(d) => match rational::from_f64(x) {
                Ok(x) => rational::to_f64(&d.survival_ge(&x)),
                Err(_) if x > 0.0 => 0.0,
                Err(_) => 1.0,
            },
            Item::Oracle(o) => o.survival_ge(x),
        }
    }

    pub fn tail_contribution_f64(&self, x: f64) -> f64 {
        match self {
            Item::Discrete(d) => match rational::from_f64(x) {
                Ok(x) => rational::to_f64(&d.tail_contribution(&x)),
                Err(_) if x > 0.0 => 0.0,
                Err(_) => rational::to_f64(&d.mean()),
            },
            Item::Oracle(o) => o.tail_contribution(x),
        }
    }
}

/// Independent item values for one unit-demand buyer.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub items: Vec<Item>,
    pub tie_break: TieBreak,
    pub class: Option<Class>,
}

impl Instance {
    pub fn new(items: Vec<Item>, tie_break: TieBreak) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::Domain("an instance needs at least one item".into()));
        }
        Ok(Self { items, tie_break, class: None })
    }

    pub fn discrete(items: Vec<DiscreteDistribution>, tie_break: TieBreak) -> Result<Self> {
        Self::new(items.into_iter().map(Item::Discrete).collect(), tie_break)
    }

    pub fn oracles(items: Vec<CdfOracle>, tie_break: TieBreak) -> Result<Self> {
        Self::new(items.into_iter().map(Item::Oracle).collect(), tie_break)
    }

    pub fn with_class(mut self, class: Class) -> Self {
        self.class = Some(class);
        self
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// All items as discrete distributions, or an unsupported-input error.
    pub fn discrete_items(&self) -> Result<Vec<&DiscreteDistribution>> {
        self.items
            .iter()
            .enumerate()
            .map(|(i, item)| {
                item.as_discrete().ok_or_else(|| {
                    Error::Unsupported(format!(
                        "item {i} is a parametric oracle; exact evaluation needs discrete items"
                    ))
                })
            })
            .collect()
    }

    pub fn is_all_discrete(&self) -> bool {
        self.items.iter().all(|i| matches!(i, Item::Discrete(_)))
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text)
            .map_err(|e| Error::Parse(format!("malformed JSON at line {} column {}: {e}", e.line(), e.column())))?;
        Self::from_json(&value)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text).map_err(|e| match e {
            Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn from_json(value: &Value) -> Result<Self> {
        let obj = value.as_object().ok_or_else(|| Error::Parse("instance must be a JSON object".into()))?;
        let tie_break = match obj.get("tie_break") {
            None => TieBreak::default(),
            Some(v) => TieBreak::parse(v.as_str().ok_or_else(|| Error::Parse("tie_break must be a string".into()))?)?,
        };
        let class = match obj.get("class") {
            None | Some(Value::Null) => None,
            Some(v) => Some(Class::parse(v.as_str().ok_or_else(|| Error::Parse("class must be a string".into()))?)?),
        };
        let items = obj
            .get("items")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Parse("instance needs an \"items\" array".into()))?;
        let items = items
            .iter()
            .enumerate()
            .map(|(i, v)| parse_item(v).map_err(|e| Error::Parse(format!("item {i}: {}", strip(e)))))
            .collect::<Result<Vec<_>>>()?;
        let mut instance = Self::new(items, tie_break).map_err(|e| Error::Parse(strip(e)))?;
        instance.class = class;
        Ok(instance)
    }

    pub fn to_json(&self) -> Value {
        let mut obj = Map::new();
        obj.insert("tie_break".into(), json!(self.tie_break.as_str()));
        if let Some(class) = self.class {
            obj.insert("class".into(), serde_json::to_value(class).expect("serializable"));
        }
        let items: Vec<Value> = self.items.iter().map(item_to_json).collect();
        obj.insert("items".into(), Value::Array(items));
        Value::Object(obj)
    }
}

fn strip(e: Error) -> String {
    match e {
        Error::Parse(m) | Error::Domain(m) | Error::Unsupported(m) => m,
        other => other.to_string(),
    }
}

fn parse_rational(v: &Value) -> Result<Rational> {
    match v {
        Value::String(s) => rational::parse(s),
        Value::Number(n) => rational::parse(&n.to_string()),
        _ => Err(Error::Parse(format!("expected a number or \"p/q\" string, got {v}"))),
    }
}

fn parse_f64(obj: &Map<String, Value>, key: &str, default: Option<f64>) -> Result<f64> {
    match obj.get(key) {
        Some(v) => Ok(rational::to_f64(&parse_rational(v)?)),
        None => default.ok_or_else(|| Error::Parse(format!("missing field {key:?}"))),
    }
}

fn parse_rational_list(obj: &Map<String, Value>, key: &str) -> Result<Vec<Rational>> {
    obj.get(key)
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Parse(format!("missing array {key:?}")))?
        .iter()
        .map(parse_rational)
        .collect()
}

fn parse_item(v: &Value) -> Result<Item> {
    let obj = v.as_object().ok_or_else(|| Error::Parse("item must be an object".into()))?;
    let kind =
        obj.get("kind").and_then(Value::as_str).ok_or_else(|| Error::Parse("item needs a \"kind\" string".into()))?;
    let family = match kind {
        "discrete" => {
            let support = parse_rational_list(obj, "support")?;
            let masses = parse_rational_list(obj, "masses")?;
            return Ok(Item::Discrete(DiscreteDistribution::new(support, masses)?));
        }
        "exponential" => Family::Exponential { lambda: parse_f64(obj, "lambda", None)? },
        "uniform" => Family::Uniform { a: parse_f64(obj, "a", None)?, b: parse_f64(obj, "b", None)? },
        "truncated_normal" => {
            Family::TruncatedNormal { mu: parse_f64(obj, "mu", None)?, sigma: parse_f64(obj, "sigma", None)? }
        }
        "power_tail" => {
            Family::PowerTail { alpha: parse_f64(obj, "alpha", None)?, scale: parse_f64(obj, "scale", Some(1.0))? }
        }
        other => return Err(Error::Parse(format!("unknown distribution family {other:?}"))),
    };
    Ok(Item::Oracle(CdfOracle::new(family)?))
}

fn item_to_json(item: &Item) -> Value {
    match item {
        Item::Discrete(d) => json!({
            "kind": "discrete",
            "support": d.support().iter().map(rational::format).collect::<Vec<_>>(),
            "masses": d.masses().iter().map(rational::format).collect::<Vec<_>>(),
        }),
        Item::Oracle(o) => {
            let mut v = match o.family() {
                Family::Exponential { lambda } => json!({"kind": "exponential", "lambda": lambda}),
                Family::Uniform { a, b } => json!({"kind": "uniform", "a": a, "b": b}),
                Family::TruncatedNormal { mu, sigma } => {
                    json!({"kind": "truncated_normal", "mu": mu, "sigma": sigma})
                }
                Family::PowerTail { alpha, scale } => {
                    json!({"kind": "power_tail", "alpha": alpha, "scale": scale})
                }
            };
            if let Some(c) = o.clamp() {
                v["truncation"] = json!({
                    "low_threshold": c.low_threshold,
                    "low_point": c.low_point,
                    "high_point": c.high_point,
                });
            }
            v
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    #[test]
    fn parses_counterexample_instance() {
        let inst = Instance::from_json_str(
            r#"{"tie_break":"lowest","items":[
                {"kind":"discrete","support":[1,5],"masses":["1/2","1/2"]},
                {"kind":"discrete","support":[3,3.5],"masses":[0.5,"0.5"]}]}"#,
        )
        .unwrap();
        assert_eq!(inst.tie_break, TieBreak::LowestIndex);
        let d = inst.items[1].as_discrete().unwrap();
        assert_eq!(d.support(), &[int(3), ratio(7, 2)]);
        assert_eq!(d.masses(), &[ratio(1, 2), ratio(1, 2)]);
    }

    #[test]
    fn decimals_are_exact() {
        let inst =
            Instance::from_json_str(r#"{"items":[{"kind":"discrete","support":[1,2,3],"masses":[0.1,0.2,0.7]}]}"#)
                .unwrap();
        assert_eq!(inst.items[0].as_discrete().unwrap().masses()[0], ratio(1, 10));
    }

    #[test]
    fn parses_oracles_and_class() {
        let inst = Instance::from_json_str(
            r#"{"class":"mhr","tie_break":"highest","items":[
                {"kind":"exponential","lambda":1.0},
                {"kind":"uniform","a":0,"b":1},
                {"kind":"truncated_normal","mu":1,"sigma":0.5},
                {"kind":"power_tail","alpha":2}]}"#,
        )
        .unwrap();
        assert_eq!(inst.class, Some(Class::Mhr));
        assert_eq!(inst.len(), 4);
        assert!(!inst.is_all_discrete());
        assert!(inst.discrete_items().is_err());
    }

    #[test]
    fn reports_line_and_column_on_malformed_json() {
        let err = Instance::from_json_str("{\n  \"items\": [,]\n}").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn rejects_unknown_family_and_bad_masses() {
        let err = Instance::from_json_str(r#"{"items":[{"kind":"lognormal"}]}"#).unwrap_err();
        assert!(err.to_string().contains("lognormal"));
        assert!(Instance::from_json_str(r#"{"items":[{"kind":"discrete","support":[1],"masses":["1/2"]}]}"#).is_err());
        assert!(Instance::from_json_str(r#"{"items":[]}"#).is_err());
    }

    #[test]
    fn json_round_trip() {
        let text =
            r#"{"tie_break":"highest","items":[{"kind":"discrete","support":["1/3",2],"masses":["1/4","3/4"]}]}"#;
        let inst = Instance::from_json_str(text).unwrap();
        let back = Instance::from_json(&inst.to_json()).unwrap();
        assert_eq!(inst, back);
    }
}
