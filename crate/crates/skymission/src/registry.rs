//! Extension mechanism for actions: named, typed, parameterizable action
//! definitions. New actions are registered as data; neither the grammar nor
//! the mission model changes. A key/value text file (see `docs/actions.md`)
//! can declare user actions at load time.

use crate::diag::Diagnostic;
use crate::model::{ActionInstance, Literal, LiteralKind};
use serde::Deserialize;
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum ValueType {
    Bool,
    Number,
    Text,
    Image,
    PointCloud,
    Unit,
}

impl fmt::Display for ValueType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ValueType::Bool => "Bool",
            ValueType::Number => "Number",
            ValueType::Text => "Text",
            ValueType::Image => "Image",
            ValueType::PointCloud => "PointCloud",
            ValueType::Unit => "Unit",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Category {
    Regular,
    Processing,
    Filter,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParamSpec {
    pub name: String,
    pub kind: LiteralKind,
    pub required: bool,
    pub default: Option<Literal>,
}

impl ParamSpec {
    pub fn required(name: &str, kind: LiteralKind) -> Self {
        ParamSpec {
            name: name.to_string(),
            kind,
            required: true,
            default: None,
        }
    }

    pub fn optional(name: &str, default: Literal) -> Self {
        ParamSpec {
            name: name.to_string(),
            kind: default.kind(),
            required: false,
            default: Some(default),
        }
    }
}

/// A named, typed, parameterizable capability. `behavior` names a simulation
/// hook resolved at run time against the simulator's hook table.
#[derive(Clone, Debug, PartialEq)]
pub struct ActionDefinition {
    pub name: String,
    pub category: Category,
    pub input_type: Option<ValueType>,
    pub output_type: ValueType,
    pub params: Vec<ParamSpec>,
    pub behavior: String,
}

impl ActionDefinition {
    pub fn param(&self, name: &str) -> Option<&ParamSpec> {
        self.params.iter().find(|p| p.name == name)
    }
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum RegistryError {
    #[error("action `{0}` is already registered")]
    DuplicateName(String),
    #[error("regular action `{0}` must not declare an input type")]
    RegularWithInput(String),
    #[error("processing action `{0}` must declare an input type")]
    ProcessingWithoutInput(String),
    #[error("filter action `{0}` must have output type Unit and no input type")]
    BadFilterSignature(String),
}

#[derive(Clone, Debug, Default)]
pub struct Registry {
    defs: BTreeMap<String, ActionDefinition>,
}

impl Registry {
    pub fn new() -> Self {
        Registry::default()
    }

    pub fn register(&mut self, def: ActionDefinition) -> Result<(), RegistryError> {
        match def.category {
            Category::Regular if def.input_type.is_some() => {
                return Err(RegistryError::RegularWithInput(def.name));
            }
            Category::Processing if def.input_type.is_none() => {
                return Err(RegistryError::ProcessingWithoutInput(def.name));
            }
            Category::Filter if def.output_type != ValueType::Unit || def.input_type.is_some() => {
                return Err(RegistryError::BadFilterSignature(def.name));
            }
            _ => {}
        }
        if self.defs.contains_key(&def.name) {
            return Err(RegistryError::DuplicateName(def.name));
        }
        self.defs.insert(def.name.clone(), def);
        Ok(())
    }

    pub fn lookup(&self, name: &str) -> Option<&ActionDefinition> {
        self.defs.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.defs.keys().map(|s| s.as_str())
    }

    /// Checks one action use against its definition's parameter schema.
    /// Every violation is reported; nothing aborts.
    pub fn validate_instance(inst: &ActionInstance, def: &ActionDefinition) -> Vec<Diagnostic> {
        let mut diags = Vec::new();
        for (key, value) in inst.params.iter() {
            match def.param(key) {
                None => diags.push(Diagnostic::error(
                    "T004",
                    format!("unknown parameter `{}` for action `{}`", key, def.name),
                    inst.span,
                )),
                Some(spec) if spec.kind != value.kind() => diags.push(Diagnostic::error(
                    "T006",
                    format!(
                        "parameter `{}` of `{}` expects {} but got {}",
                        key,
                        def.name,
                        spec.kind,
                        value.kind()
                    ),
                    inst.span,
                )),
                Some(_) => {}
            }
        }
        for spec in &def.params {
            if spec.required && spec.default.is_none() && inst.params.get(&spec.name).is_none() {
                diags.push(Diagnostic::error(
                    "T005",
                    format!(
                        "missing required parameter `{}` for action `{}`",
                        spec.name, def.name
                    ),
                    inst.span,
                ));
            }
        }
        diags
    }

    /// Effective parameter value: instance value, else schema default.
    pub fn effective_param<'a>(
        inst: &'a ActionInstance,
        def: &'a ActionDefinition,
        name: &str,
    ) -> Option<&'a Literal> {
        inst.params
            .get(name)
            .or_else(|| def.param(name).and_then(|p| p.default.as_ref()))
    }
}

fn regular(name: &str, output: ValueType, behavior: &str, params: Vec<ParamSpec>) -> ActionDefinition {
    ActionDefinition {
        name: name.to_string(),
        category: Category::Regular,
        input_type: None,
        output_type: output,
        params,
        behavior: behavior.to_string(),
    }
}

fn processing(
    name: &str,
    input: ValueType,
    output: ValueType,
    behavior: &str,
    params: Vec<ParamSpec>,
) -> ActionDefinition {
    ActionDefinition {
        name: name.to_string(),
        category: Category::Processing,
        input_type: Some(input),
        output_type: output,
        params,
        behavior: behavior.to_string(),
    }
}

fn filter(name: &str, behavior: &str, params: Vec<ParamSpec>) -> ActionDefinition {
    ActionDefinition {
        name: name.to_string(),
        category: Category::Filter,
        input_type: None,
        output_type: ValueType::Unit,
        params,
        behavior: behavior.to_string(),
    }
}

/// The built-in action catalog. Defaults are repo conventions, documented in
/// `docs/actions.md`.
pub fn builtin_catalog() -> Registry {
    let mut reg = Registry::new();
    let defs = vec![
        regular(
            "take_picture",
            ValueType::Image,
            "capture",
            vec![
                ParamSpec::optional("resolution", Literal::Text("640x480".into())),
                ParamSpec::optional("quality", Literal::Number(0.9)),
            ],
        ),
        regular(
            "take_infrared_picture",
            ValueType::Image,
            "capture",
            vec![ParamSpec::optional(
                "resolution",
                Literal::Text("640x480".into()),
            )],
        ),
        regular("laser_scan", ValueType::PointCloud, "capture", vec![]),
        regular(
            "read_sensor",
            ValueType::Number,
            "scripted",
            vec![ParamSpec::required("name", LiteralKind::Text)],
        ),
        regular("record_video_start", ValueType::Unit, "noop", vec![]),
        regular("record_video_stop", ValueType::Unit, "noop", vec![]),
        regular("scan_wifi", ValueType::Number, "scripted", vec![]),
        processing(
            "recognize_image",
            ValueType::Image,
            ValueType::Text,
            "scripted",
            vec![],
        ),
        processing(
            "threshold_exceeded",
            ValueType::Number,
            ValueType::Bool,
            "threshold",
            vec![ParamSpec::optional("limit", Literal::Number(0.0))],
        ),
        processing(
            "interpret_scan",
            ValueType::PointCloud,
            ValueType::Number,
            "scripted",
            vec![],
        ),
        filter(
            "maintain_speed",
            "maintain_speed",
            vec![ParamSpec::required("limit", LiteralKind::Number)],
        ),
        filter(
            "avoid_obstacles",
            "avoid_obstacles",
            vec![ParamSpec::required("clearance", LiteralKind::Number)],
        ),
        filter(
            "max_altitude",
            "max_altitude",
            vec![ParamSpec::required("limit", LiteralKind::Number)],
        ),
    ];
    for def in defs {
        reg.register(def).expect("builtin catalog is consistent");
    }
    reg
}

// --- extension file loading ------------------------------------------------

#[derive(Debug, Deserialize)]
struct ExtensionFile {
    #[serde(default)]
    action: Vec<ExtensionAction>,
}

#[derive(Debug, Deserialize)]
struct ExtensionAction {
    name: String,
    category: String,
    #[serde(default)]
    input: Option<String>,
    #[serde(default)]
    output: Option<String>,
    #[serde(default)]
    behavior: Option<String>,
    #[serde(default)]
    param: Vec<ExtensionParam>,
}

#[derive(Debug, Deserialize)]
struct ExtensionParam {
    name: String,
    #[serde(rename = "type")]
    kind: String,
    #[serde(default)]
    required: bool,
    #[serde(default)]
    default: Option<toml::Value>,
}

#[derive(Debug, Error)]
pub enum ExtensionError {
    #[error("invalid extension file: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("action `{0}`: unknown {1} `{2}`")]
    UnknownName(String, &'static str, String),
    #[error("action `{0}`: parameter `{1}` default does not match its type")]
    BadDefault(String, String),
    #[error(transparent)]
    Registry(#[from] RegistryError),
}

fn parse_value_type(s: &str) -> Option<ValueType> {
    Some(match s.to_ascii_lowercase().as_str() {
        "bool" => ValueType::Bool,
        "number" => ValueType::Number,
        "text" => ValueType::Text,
        "image" => ValueType::Image,
        "pointcloud" | "point_cloud" => ValueType::PointCloud,
        "unit" => ValueType::Unit,
        _ => return None,
    })
}

fn parse_literal_kind(s: &str) -> Option<LiteralKind> {
    Some(match s.to_ascii_lowercase().as_str() {
        "bool" => LiteralKind::Bool,
        "number" => LiteralKind::Number,
        "text" => LiteralKind::Text,
        "point" => LiteralKind::Point,
        "rect" => LiteralKind::Rect,
        _ => return None,
    })
}

fn toml_to_literal(v: &toml::Value, kind: LiteralKind) -> Option<Literal> {
    match (kind, v) {
        (LiteralKind::Bool, toml::Value::Boolean(b)) => Some(Literal::Bool(*b)),
        (LiteralKind::Number, toml::Value::Float(f)) => Some(Literal::Number(*f)),
        (LiteralKind::Number, toml::Value::Integer(i)) => Some(Literal::Number(*i as f64)),
        (LiteralKind::Text, toml::Value::String(s)) => Some(Literal::Text(s.clone())),
        _ => None,
    }
}

/// Parses an `actions.toml`-style extension file and registers its actions.
pub fn load_extensions(reg: &mut Registry, text: &str) -> Result<usize, ExtensionError> {
    let file: ExtensionFile = toml::from_str(text)?;
    let mut count = 0;
    for a in file.action {
        let category = match a.category.to_ascii_lowercase().as_str() {
            "regular" => Category::Regular,
            "processing" => Category::Processing,
            "filter" => Category::Filter,
            other => {
                return Err(ExtensionError::UnknownName(
                    a.name,
                    "category",
                    other.to_string(),
                ))
            }
        };
        let input_type = match &a.input {
            Some(s) => Some(parse_value_type(s).ok_or_else(|| {
                ExtensionError::UnknownName(a.name.clone(), "input type", s.clone())
            })?),
            None => None,
        };
        let output_type = match &a.output {
            Some(s) => parse_value_type(s).ok_or_else(|| {
                ExtensionError::UnknownName(a.name.clone(), "output type", s.clone())
            })?,
            None => ValueType::Unit,
        };
        let mut params = Vec::new();
        for p in &a.param {
            let kind = parse_literal_kind(&p.kind).ok_or_else(|| {
                ExtensionError::UnknownName(a.name.clone(), "parameter type", p.kind.clone())
            })?;
            let default = match &p.default {
                Some(v) => Some(toml_to_literal(v, kind).ok_or_else(|| {
                    ExtensionError::BadDefault(a.name.clone(), p.name.clone())
                })?),
                None => None,
            };
            params.push(ParamSpec {
                name: p.name.clone(),
                kind,
                required: p.required && default.is_none(),
                default,
            });
        }
        reg.register(ActionDefinition {
            name: a.name,
            category,
            input_type,
            output_type,
            params,
            behavior: a.behavior.unwrap_or_else(|| "scripted".to_string()),
        })?;
        count += 1;
    }
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_lookup_total() {
        let reg = builtin_catalog();
        for name in [
            "take_picture",
            "take_infrared_picture",
            "laser_scan",
            "read_sensor",
            "record_video_start",
            "record_video_stop",
            "scan_wifi",
            "recognize_image",
            "threshold_exceeded",
            "interpret_scan",
            "maintain_speed",
            "avoid_obstacles",
            "max_altitude",
        ] {
            assert!(reg.lookup(name).is_some(), "missing builtin {name}");
        }
        let ri = reg.lookup("recognize_image").unwrap();
        assert_eq!(ri.category, Category::Processing);
        assert_eq!(ri.input_type, Some(ValueType::Image));
        assert_eq!(ri.output_type, ValueType::Text);
        assert_eq!(reg.lookup("maintain_speed").unwrap().category, Category::Filter);
        assert_eq!(reg.lookup("avoid_obstacles").unwrap().category, Category::Filter);
    }

    #[test]
    fn register_new_processing_action() {
        let mut reg = builtin_catalog();
        reg.register(processing(
            "count_trees",
            ValueType::Image,
            ValueType::Number,
            "scripted",
            vec![],
        ))
        .unwrap();
        let d = reg.lookup("count_trees").unwrap();
        assert_eq!(d.input_type, Some(ValueType::Image));
        assert_eq!(d.output_type, ValueType::Number);
    }

    #[test]
    fn duplicate_name_rejected() {
        let mut reg = builtin_catalog();
        let err = reg
            .register(regular("take_picture", ValueType::Image, "capture", vec![]))
            .unwrap_err();
        assert_eq!(err, RegistryError::DuplicateName("take_picture".into()));
    }

    #[test]
    fn filter_with_nonunit_output_rejected() {
        let mut reg = Registry::new();
        let err = reg
            .register(ActionDefinition {
                name: "bad".into(),
                category: Category::Filter,
                input_type: None,
                output_type: ValueType::Text,
                params: vec![],
                behavior: "x".into(),
            })
            .unwrap_err();
        assert_eq!(err, RegistryError::BadFilterSignature("bad".into()));
    }

    #[test]
    fn validate_instance_defaults_and_unknowns() {
        let reg = builtin_catalog();
        let def = reg.lookup("take_picture").unwrap();

        let ok = ActionInstance::new("take_picture")
            .with_param("resolution", Literal::Text("640x480".into()))
            .with_param("quality", Literal::Number(0.8));
        assert!(Registry::validate_instance(&ok, def).is_empty());

        // everything defaulted
        let bare = ActionInstance::new("take_picture");
        assert!(Registry::validate_instance(&bare, def).is_empty());

        let unknown = ActionInstance::new("take_picture").with_param("speed", Literal::Number(3.0));
        let diags = Registry::validate_instance(&unknown, def);
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].code, "T004");

        let rs = reg.lookup("read_sensor").unwrap();
        let missing = ActionInstance::new("read_sensor");
        let diags = Registry::validate_instance(&missing, rs);
        assert_eq!(diags[0].code, "T005");
    }

    #[test]
    fn extension_file_roundtrip() {
        let mut reg = builtin_catalog();
        let text = r#"
[[action]]
name = "count_trees"
category = "processing"
input = "image"
output = "number"

  [[action.param]]
  name = "min_size"
  type = "number"
  default = 1.0
"#;
        assert_eq!(load_extensions(&mut reg, text).unwrap(), 1);
        let d = reg.lookup("count_trees").unwrap();
        assert_eq!(d.output_type, ValueType::Number);
        assert_eq!(d.params[0].default, Some(Literal::Number(1.0)));
    }
}
