//! Scenario files: frame, model, sources and an optional observation stream.

use std::fmt;
use std::path::Path;

use pcr_fusion::{validate_bba, Bba, Element, Frame, Model, World};
use serde::de::{MapAccess, Visitor};
use serde::{Deserialize, Deserializer};
use serde_json::value::RawValue;

/// An input problem, reported with exit code 2.
#[derive(Debug)]
pub struct InputError(pub String);

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Raw<'a> {
    frame: Vec<String>,
    #[serde(default)]
    model: ModelSpec,
    #[serde(borrow)]
    sources: Vec<&'a RawValue>,
    #[serde(default, borrow)]
    stream: Vec<&'a RawValue>,
    #[serde(default)]
    rules: Vec<String>,
    #[serde(default, borrow)]
    weights: Option<&'a RawValue>,
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    #[default]
    Shafer,
    Free,
    Hybrid,
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum WorldSpec {
    #[default]
    Closed,
    Open,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    #[serde(default)]
    pub kind: Kind,
    #[serde(default)]
    pub empty: Vec<String>,
    #[serde(default)]
    pub world: WorldSpec,
    #[serde(default)]
    pub theta0: bool,
    /// Sources may put mass on elements the model makes empty.
    #[serde(default)]
    pub dynamic: bool,
}

/// `{"expr": mass, ...}` with keys kept in file order and duplicates refused.
struct Masses(Vec<(String, f64)>);

impl<'de> Deserialize<'de> for Masses {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct MassVisitor;

        impl<'de> Visitor<'de> for MassVisitor {
            type Value = Masses;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an object mapping set expressions to masses")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Masses, A::Error> {
                let mut out: Vec<(String, f64)> = Vec::new();
                while let Some((key, mass)) = map.next_entry::<String, f64>()? {
                    if out.iter().any(|(k, _)| *k == key) {
                        return Err(serde::de::Error::custom(format!("duplicate key `{key}`")));
                    }
                    out.push((key, mass));
                }
                Ok(Masses(out))
            }
        }

        deserializer.deserialize_map(MassVisitor)
    }
}

pub struct Scenario {
    pub name: String,
    pub model: Model,
    pub spec: ModelSpec,
    pub sources: Vec<Bba>,
    pub stream: Vec<Bba>,
    pub rules: Vec<String>,
    pub weights: Option<Vec<(Element, f64)>>,
}

fn line_of(text: &str, raw: &RawValue) -> usize {
    let offset = raw.get().as_ptr() as usize - text.as_ptr() as usize;
    text[..offset].bytes().filter(|&b| b == b'\n').count() + 1
}

fn build_model(spec: &ModelSpec, frame: Frame) -> Result<Model, String> {
    let constraints = spec
        .empty
        .iter()
        .map(|e| {
            frame
                .element(e)
                .map_err(|err| format!("model.empty `{e}`: {err}"))
        })
        .collect::<Result<Vec<Element>, String>>()?;
    let model = match spec.kind {
        Kind::Shafer => Model::shafer(frame)
            .with_constraints(constraints)
            .map_err(|e| e.to_string())?,
        Kind::Hybrid => Model::hybrid(frame, constraints).map_err(|e| e.to_string())?,
        Kind::Free if constraints.is_empty() => Model::free(frame).map_err(|e| e.to_string())?,
        Kind::Free => return Err("a free model takes no empty constraints; use \"hybrid\"".into()),
    };
    let world = match spec.world {
        WorldSpec::Closed => World::Closed,
        WorldSpec::Open => World::Open,
    };
    Ok(model.with_world(world).with_closure(spec.theta0))
}

pub fn load(path: &Path) -> Result<Scenario, InputError> {
    let shown = path.display().to_string();
    let fail = |line: Option<usize>, message: String| {
        InputError(match line {
            Some(l) => format!("{shown}:{l}: {message}"),
            None => format!("{shown}: {message}"),
        })
    };
    let text = std::fs::read_to_string(path).map_err(|e| fail(None, e.to_string()))?;
    let raw: Raw = serde_json::from_str(&text).map_err(|e| {
        let line = (e.line() > 0).then_some(e.line());
        fail(line, e.to_string())
    })?;
    let frame = Frame::new(raw.frame).map_err(|e| fail(None, format!("frame: {e}")))?;
    let model = build_model(&raw.model, frame.clone()).map_err(|e| fail(None, e))?;
    let parse = |what: &str, index: usize, value: &RawValue| -> Result<Bba, InputError> {
        let line = Some(line_of(&text, value));
        let context = format!("{what}[{index}]");
        let masses: Masses =
            serde_json::from_str(value.get()).map_err(|e| fail(line, format!("{context}: {e}")))?;
        let mut entries = Vec::with_capacity(masses.0.len());
        for (expr, mass) in masses.0 {
            let element = frame
                .element(&expr)
                .map_err(|e| fail(line, format!("{context}: `{expr}`: {e}")))?;
            entries.push((element, mass));
        }
        let bba = Bba::new(entries).map_err(|e| fail(line, format!("{context}: {e}")))?;
        let checked = if raw.model.dynamic {
            let total = bba.total();
            if (total - 1.0).abs() > pcr_fusion::bba::NORMALIZATION_TOLERANCE {
                Err(pcr_fusion::BbaError::NotNormalized(total))
            } else {
                Ok(())
            }
        } else {
            validate_bba(&bba, &model)
        };
        checked.map_err(|e| fail(line, format!("{context}: {}: {e}", error_kind(&e))))?;
        Ok(bba)
    };
    if raw.sources.is_empty() {
        return Err(fail(None, "sources: at least one source is needed".into()));
    }
    let sources = raw
        .sources
        .iter()
        .enumerate()
        .map(|(i, v)| parse("sources", i, v))
        .collect::<Result<Vec<_>, _>>()?;
    let stream = raw
        .stream
        .iter()
        .enumerate()
        .map(|(i, v)| parse("stream", i, v))
        .collect::<Result<Vec<_>, _>>()?;
    let weights = match raw.weights {
        None => None,
        Some(value) => {
            let line = Some(line_of(&text, value));
            let masses: Masses = serde_json::from_str(value.get())
                .map_err(|e| fail(line, format!("weights: {e}")))?;
            let mut entries = Vec::with_capacity(masses.0.len());
            for (expr, w) in masses.0 {
                let element = frame
                    .element(&expr)
                    .map_err(|e| fail(line, format!("weights: `{expr}`: {e}")))?;
                entries.push((element, w));
            }
            Some(entries)
        }
    };
    let name = path
        .file_name()
        .map_or_else(|| shown.clone(), |n| n.to_string_lossy().into_owned());
    Ok(Scenario {
        name,
        model,
        spec: raw.model,
        sources,
        stream,
        rules: raw.rules,
        weights,
    })
}

fn error_kind(e: &pcr_fusion::BbaError) -> &'static str {
    use pcr_fusion::BbaError::*;
    match e {
        NotNormalized(_) => "NotNormalized",
        NegativeMass { .. } => "NegativeMass",
        MassOnEmpty { .. } => "MassOnEmpty",
        ForeignElement => "ForeignElement",
        NoSources => "NoSources",
        Parse(_) => "Parse",
    }
}
