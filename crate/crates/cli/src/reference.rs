//! The bundled constants file: reference metrics and frozen defaults.

use std::collections::BTreeMap;

use mp2_core::models::ModelKind;

use crate::error::CliError;

const BUNDLED: &str = include_str!("../data/reference.txt");

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Constants {
    /// `(dataset, model, metric, k)` → value.
    references: BTreeMap<(String, String, String, usize), f64>,
    /// Applies to every model.
    common: Vec<(String, String)>,
    per_model: BTreeMap<String, Vec<(String, String)>>,
}

impl Constants {
    pub fn bundled() -> &'static Constants {
        static CELL: std::sync::OnceLock<Constants> = std::sync::OnceLock::new();
        CELL.get_or_init(|| Constants::parse(BUNDLED).expect("bundled constants file is valid"))
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut out = Constants::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |msg: &str| CliError::Config(format!("constants line {}: {msg}", n + 1));
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields[0] {
                "reference" => {
                    let [_, dataset, model, metric_k, value] = fields[..] else {
                        return Err(bad("expected `reference <dataset> <model> <metric>@<k> <value>`"));
                    };
                    let (metric, k) = metric_k.split_once('@').ok_or_else(|| bad("metric needs @k"))?;
                    let k: usize = k.parse().map_err(|_| bad("bad cutoff"))?;
                    let value: f64 = value.parse().map_err(|_| bad("bad value"))?;
                    let model: ModelKind = model.parse().map_err(|_| bad("unknown model"))?;
                    out.references.insert(
                        (dataset.into(), model.name().into(), metric.into(), k),
                        value,
                    );
                }
                "default" => {
                    if fields.len() < 2 {
                        return Err(bad("expected `default <model|*> key=value ...`"));
                    }
                    let pairs = fields[2..]
                        .iter()
                        .map(|kv| {
                            kv.split_once('=')
                                .map(|(k, v)| (k.to_string(), v.to_string()))
                                .ok_or_else(|| bad(&format!("expected key=value, got `{kv}`")))
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    if fields[1] == "*" {
                        out.common.extend(pairs);
                    } else {
                        let model: ModelKind = fields[1].parse().map_err(|_| bad("unknown model"))?;
                        out.per_model.entry(model.name().into()).or_default().extend(pairs);
                    }
                }
                other => return Err(bad(&format!("unknown directive `{other}`"))),
            }
        }
        Ok(out)
    }

    pub fn reference(&self, dataset: &str, model: ModelKind, metric: &str, k: usize) -> Option<f64> {
        self.references
            .get(&(dataset.to_string(), model.name().to_string(), metric.to_string(), k))
            .copied()
    }

    /// Frozen defaults for `model`, common entries first.
    pub fn defaults(&self, model: ModelKind) -> Vec<(String, String)> {
        let mut out = self.common.clone();
        if let Some(extra) = self.per_model.get(model.name()) {
            out.extend(extra.iter().cloned());
        }
        out
    }
}
