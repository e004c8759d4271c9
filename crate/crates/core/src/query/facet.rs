//! Query chains and their JSON wire format.

use serde_json::{json, Map, Number, Value as Json};
use thiserror::Error;

use crate::model::{Polarity, StatementType};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QueryError {
    #[error("malformed query document: {0}")]
    Json(String),
    #[error("facet {facet}: unknown facet kind {name:?}")]
    UnknownFacet { facet: usize, name: String },
    #[error("facet {facet}: unknown field {field:?}")]
    UnknownField { facet: usize, field: String },
    #[error("facet {facet}: unknown operator {op:?}")]
    UnknownOp { facet: usize, op: String },
    #[error("facet {facet}: missing key {key:?}")]
    Missing { facet: usize, key: &'static str },
    #[error("facet {facet}: operator {op} not applicable to field {field}: {detail}")]
    TypeMismatch {
        facet: usize,
        field: String,
        op: String,
        detail: String,
    },
    #[error("facet {facet}: {reason}")]
    InvalidValue { facet: usize, reason: String },
    #[error("facet {facet}: unknown entity {id:?}")]
    UnknownEntity { facet: usize, id: String },
}

impl QueryError {
    /// Index of the offending facet, when there is one.
    pub fn facet(&self) -> Option<usize> {
        match self {
            QueryError::Json(_) => None,
            QueryError::UnknownFacet { facet, .. }
            | QueryError::UnknownField { facet, .. }
            | QueryError::UnknownOp { facet, .. }
            | QueryError::Missing { facet, .. }
            | QueryError::TypeMismatch { facet, .. }
            | QueryError::InvalidValue { facet, .. }
            | QueryError::UnknownEntity { facet, .. } => Some(*facet),
        }
    }

    pub(crate) fn at(self, index: usize) -> Self {
        match self {
            QueryError::UnknownEntity { id, .. } => QueryError::UnknownEntity { facet: index, id },
            QueryError::InvalidValue { reason, .. } => QueryError::InvalidValue {
                facet: index,
                reason,
            },
            other => other,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Op {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Contains,
}

impl Op {
    pub const ALL: [Op; 7] = [Op::Eq, Op::Ne, Op::Lt, Op::Le, Op::Gt, Op::Ge, Op::Contains];

    pub fn as_str(self) -> &'static str {
        match self {
            Op::Eq => "=",
            Op::Ne => "!=",
            Op::Lt => "<",
            Op::Le => "<=",
            Op::Gt => ">",
            Op::Ge => ">=",
            Op::Contains => "contains",
        }
    }

    fn parse(s: &str) -> Option<Op> {
        Op::ALL.into_iter().find(|o| o.as_str() == s)
    }

    fn is_ordering(self) -> bool {
        matches!(self, Op::Lt | Op::Le | Op::Gt | Op::Ge)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldKind {
    Text,
    Number,
    Bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NodeField {
    Id,
    Name,
    Category,
    Degree,
    InDegree,
    OutDegree,
}

impl NodeField {
    pub const ALL: [NodeField; 6] = [
        NodeField::Id,
        NodeField::Name,
        NodeField::Category,
        NodeField::Degree,
        NodeField::InDegree,
        NodeField::OutDegree,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            NodeField::Id => "id",
            NodeField::Name => "name",
            NodeField::Category => "category",
            NodeField::Degree => "degree",
            NodeField::InDegree => "in_degree",
            NodeField::OutDegree => "out_degree",
        }
    }

    pub fn kind(self) -> FieldKind {
        match self {
            NodeField::Id | NodeField::Name | NodeField::Category => FieldKind::Text,
            _ => FieldKind::Number,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EdgeField {
    Type,
    Polarity,
    Curated,
    EvidenceCount,
    Belief,
}

impl EdgeField {
    pub const ALL: [EdgeField; 5] = [
        EdgeField::Type,
        EdgeField::Polarity,
        EdgeField::Curated,
        EdgeField::EvidenceCount,
        EdgeField::Belief,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EdgeField::Type => "type",
            EdgeField::Polarity => "polarity",
            EdgeField::Curated => "curated",
            EdgeField::EvidenceCount => "evidence_count",
            EdgeField::Belief => "belief",
        }
    }

    pub fn kind(self) -> FieldKind {
        match self {
            EdgeField::Type | EdgeField::Polarity => FieldKind::Text,
            EdgeField::Curated => FieldKind::Bool,
            EdgeField::EvidenceCount | EdgeField::Belief => FieldKind::Number,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Text(String),
    Number(f64),
    Bool(bool),
}

impl Value {
    fn kind(&self) -> FieldKind {
        match self {
            Value::Text(_) => FieldKind::Text,
            Value::Number(_) => FieldKind::Number,
            Value::Bool(_) => FieldKind::Bool,
        }
    }

    fn to_json(&self) -> Json {
        match self {
            Value::Text(s) => Json::String(s.clone()),
            Value::Bool(b) => Json::Bool(*b),
            Value::Number(x) => number_json(*x),
        }
    }
}

fn number_json(x: f64) -> Json {
    if x.fract() == 0.0 && x.abs() < 9.0e15 {
        Json::Number(Number::from(x as i64))
    } else {
        Number::from_f64(x).map_or(Json::Null, Json::Number)
    }
}

pub const DEFAULT_MAX_LEN: usize = 4;
pub const DEFAULT_CAP: usize = 1_000;
pub const MAX_PATH_LEN: usize = 8;

#[derive(Clone, Debug, PartialEq)]
pub enum Facet {
    Node {
        field: NodeField,
        op: Op,
        value: Value,
    },
    Edge {
        field: EdgeField,
        op: Op,
        value: Value,
    },
    Doc {
        dois: Vec<String>,
    },
    Path {
        sources: Vec<String>,
        targets: Vec<String>,
        max_len: usize,
        cap: usize,
    },
}

impl Facet {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Facet::Node { .. } => "node",
            Facet::Edge { .. } => "edge",
            Facet::Doc { .. } => "doc",
            Facet::Path { .. } => "path",
        }
    }

    pub fn is_attribute(&self) -> bool {
        !matches!(self, Facet::Path { .. })
    }

    pub fn to_json(&self) -> Json {
        match self {
            Facet::Node { field, op, value } => json!({
                "facet": "node", "field": field.as_str(), "op": op.as_str(), "value": value.to_json()
            }),
            Facet::Edge { field, op, value } => json!({
                "facet": "edge", "field": field.as_str(), "op": op.as_str(), "value": value.to_json()
            }),
            Facet::Doc { dois } => json!({ "facet": "doc", "dois": dois }),
            Facet::Path {
                sources,
                targets,
                max_len,
                cap,
            } => json!({
                "facet": "path", "sources": sources, "targets": targets, "max_len": max_len, "cap": cap
            }),
        }
    }
}

/// Ordered facets applied as successive refinements.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct QueryChain {
    pub facets: Vec<Facet>,
}

impl QueryChain {
    pub fn new(facets: Vec<Facet>) -> Self {
        Self { facets }
    }

    pub fn to_json(&self) -> Json {
        json!({ "chain": self.facets.iter().map(Facet::to_json).collect::<Vec<_>>() })
    }

    /// Validates an already decoded JSON document.
    pub fn from_json(doc: &Json) -> Result<Self, QueryError> {
        let chain = doc
            .get("chain")
            .ok_or_else(|| QueryError::Json("missing \"chain\" array".into()))?
            .as_array()
            .ok_or_else(|| QueryError::Json("\"chain\" must be an array".into()))?;
        let facets = chain
            .iter()
            .enumerate()
            .map(|(i, f)| parse_facet(i, f))
            .collect::<Result<_, _>>()?;
        Ok(Self { facets })
    }
}

/// Parses and validates a chain document such as
/// `{"chain":[{"facet":"edge","field":"type","op":"=","value":"Inhibition"}]}`.
pub fn parse_query(text: &str) -> Result<QueryChain, QueryError> {
    let doc: Json = serde_json::from_str(text).map_err(|e| QueryError::Json(e.to_string()))?;
    QueryChain::from_json(&doc)
}

fn parse_facet(index: usize, facet: &Json) -> Result<Facet, QueryError> {
    let obj = facet.as_object().ok_or_else(|| QueryError::InvalidValue {
        facet: index,
        reason: "facet must be an object".into(),
    })?;
    let kind = str_key(index, obj, "facet")?;
    match kind {
        "node" => {
            let field_name = str_key(index, obj, "field")?;
            let field = NodeField::ALL
                .into_iter()
                .find(|f| f.as_str() == field_name)
                .ok_or_else(|| QueryError::UnknownField {
                    facet: index,
                    field: field_name.to_string(),
                })?;
            let (op, value) = op_and_value(index, obj, field_name, field.kind())?;
            Ok(Facet::Node { field, op, value })
        }
        "edge" => {
            let field_name = str_key(index, obj, "field")?;
            let field = EdgeField::ALL
                .into_iter()
                .find(|f| f.as_str() == field_name)
                .ok_or_else(|| QueryError::UnknownField {
                    facet: index,
                    field: field_name.to_string(),
                })?;
            let (op, value) = op_and_value(index, obj, field_name, field.kind())?;
            if let (Value::Text(s), Op::Eq | Op::Ne) = (&value, op) {
                let known = match field {
                    EdgeField::Type => s.parse::<StatementType>().is_ok(),
                    EdgeField::Polarity => s.parse::<Polarity>().is_ok(),
                    _ => true,
                };
                if !known {
                    return Err(QueryError::InvalidValue {
                        facet: index,
                        reason: format!("{s:?} is not a valid {field_name}"),
                    });
                }
            }
            Ok(Facet::Edge { field, op, value })
        }
        "doc" => {
            let dois = str_list(index, obj, "dois")?;
            if dois.is_empty() {
                return Err(QueryError::InvalidValue {
                    facet: index,
                    reason: "dois must be nonempty".into(),
                });
            }
            Ok(Facet::Doc { dois })
        }
        "path" => {
            let sources = str_list(index, obj, "sources")?;
            let targets = str_list(index, obj, "targets")?;
            let max_len = opt_count(index, obj, "max_len")?.unwrap_or(DEFAULT_MAX_LEN);
            let cap = opt_count(index, obj, "cap")?.unwrap_or(DEFAULT_CAP);
            if !(1..=MAX_PATH_LEN).contains(&max_len) {
                return Err(QueryError::InvalidValue {
                    facet: index,
                    reason: format!("max_len must lie in [1, {MAX_PATH_LEN}]"),
                });
            }
            if cap == 0 {
                return Err(QueryError::InvalidValue {
                    facet: index,
                    reason: "cap must be at least 1".into(),
                });
            }
            Ok(Facet::Path {
                sources,
                targets,
                max_len,
                cap,
            })
        }
        other => Err(QueryError::UnknownFacet {
            facet: index,
            name: other.to_string(),
        }),
    }
}

fn str_key<'a>(index: usize, obj: &'a Map<String, Json>, key: &'static str) -> Result<&'a str, QueryError> {
    obj.get(key)
        .ok_or(QueryError::Missing { facet: index, key })?
        .as_str()
        .ok_or_else(|| QueryError::InvalidValue {
            facet: index,
            reason: format!("{key} must be a string"),
        })
}

fn str_list(index: usize, obj: &Map<String, Json>, key: &'static str) -> Result<Vec<String>, QueryError> {
    let list = obj
        .get(key)
        .ok_or(QueryError::Missing { facet: index, key })?
        .as_array()
        .ok_or_else(|| QueryError::InvalidValue {
            facet: index,
            reason: format!("{key} must be an array of strings"),
        })?;
    list.iter()
        .map(|v| {
            v.as_str().map(str::to_string).ok_or_else(|| QueryError::InvalidValue {
                facet: index,
                reason: format!("{key} must be an array of strings"),
            })
        })
        .collect()
}

fn opt_count(index: usize, obj: &Map<String, Json>, key: &'static str) -> Result<Option<usize>, QueryError> {
    match obj.get(key) {
        None => Ok(None),
        Some(v) => v
            .as_u64()
            .map(|n| Some(n as usize))
            .ok_or_else(|| QueryError::InvalidValue {
                facet: index,
                reason: format!("{key} must be a nonnegative integer"),
            }),
    }
}

fn op_and_value(
    index: usize,
    obj: &Map<String, Json>,
    field_name: &str,
    kind: FieldKind,
) -> Result<(Op, Value), QueryError> {
    let op_name = str_key(index, obj, "op")?;
    let op = Op::parse(op_name).ok_or_else(|| QueryError::UnknownOp {
        facet: index,
        op: op_name.to_string(),
    })?;
    let raw = obj.get("value").ok_or(QueryError::Missing { facet: index, key: "value" })?;
    let value = match raw {
        Json::String(s) => Value::Text(s.clone()),
        Json::Bool(b) => Value::Bool(*b),
        Json::Number(n) => Value::Number(n.as_f64().unwrap_or(f64::NAN)),
        _ => {
            return Err(QueryError::InvalidValue {
                facet: index,
                reason: "value must be a string, number or boolean".into(),
            })
        }
    };
    let mismatch = |detail: String| QueryError::TypeMismatch {
        facet: index,
        field: field_name.to_string(),
        op: op_name.to_string(),
        detail,
    };
    if op.is_ordering() && kind != FieldKind::Number {
        return Err(mismatch("ordering operators need a numeric field".into()));
    }
    if op == Op::Contains && kind != FieldKind::Text {
        return Err(mismatch("contains needs a string field".into()));
    }
    if value.kind() != kind {
        return Err(mismatch(format!(
            "value {raw} does not match the field's {kind:?} type"
        )));
    }
    Ok((op, value))
}
