//! Grid sweeps: the cartesian product of `path=v1,v2,...` overrides applied
//! to a base config.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::tasks::run;

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub path: Vec<String>,
    pub values: Vec<toml::Value>,
}

/// Parse `a.b.c=v1,v2`. Values are TOML literals; bare words become strings.
pub fn parse_axis(spec: &str) -> Result<Axis> {
    let (path, values) = spec
        .split_once('=')
        .ok_or_else(|| HarnessError::Config(format!("sweep axis '{spec}' lacks '='")))?;
    let path: Vec<String> = path.trim().split('.').map(str::to_string).collect();
    if path.iter().any(String::is_empty) {
        return Err(HarnessError::Config(format!("bad sweep path in '{spec}'")));
    }
    let values = values.split(',').map(|v| parse_value(v.trim())).collect();
    Ok(Axis { path, values })
}

fn parse_value(text: &str) -> toml::Value {
    let doc = format!("v = {text}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(text.to_string()),
    }
}

fn set(root: &mut toml::Table, path: &[String], value: toml::Value) -> Result<()> {
    let (first, rest) = path.split_first().expect("non-empty path");
    if rest.is_empty() {
        root.insert(first.clone(), value);
        return Ok(());
    }
    let entry = root
        .entry(first.clone())
        .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    set_value(entry, rest, value)
}

// Numeric segments index into arrays, e.g. `model.layers.0.capacity`.
fn set_value(target: &mut toml::Value, path: &[String], value: toml::Value) -> Result<()> {
    let (key, rest) = path.split_first().expect("non-empty path");
    let slot = match target {
        toml::Value::Table(t) if rest.is_empty() => {
            t.insert(key.clone(), value);
            return Ok(());
        }
        toml::Value::Table(t) => t
            .entry(key.clone())
            .or_insert_with(|| toml::Value::Table(toml::Table::new())),
        toml::Value::Array(a) => {
            let len = a.len();
            let i: usize = key
                .parse()
                .map_err(|_| HarnessError::Config(format!("'{key}' is not an array index")))?;
            let item = a.get_mut(i).ok_or_else(|| {
                HarnessError::Config(format!("index {i} out of range for array of {len}"))
            })?;
            if rest.is_empty() {
                *item = value;
                return Ok(());
            }
            item
        }
        _ => {
            return Err(HarnessError::Config(format!(
                "sweep path crosses a scalar at '{key}'"
            )))
        }
    };
    set_value(slot, rest, value)
}

/// Every combination of axis values applied to `base`.
pub fn expand(
    base: &ExperimentConfig,
    axes: &[Axis],
) -> Result<Vec<(BTreeMap<String, String>, ExperimentConfig)>> {
    let base_table =
        toml::Table::try_from(base).map_err(|e| HarnessError::Config(e.to_string()))?;
    let mut points = vec![(BTreeMap::new(), base_table)];
    for axis in axes {
        let mut next = Vec::with_capacity(points.len() * axis.values.len());
        for (labels, table) in &points {
            for v in &axis.values {
                let mut t = table.clone();
                set(&mut t, &axis.path, v.clone())?;
                let mut l = labels.clone();
                l.insert(axis.path.join("."), v.to_string());
                next.push((l, t));
            }
        }
        points = next;
    }
    points
        .into_iter()
        .map(|(l, t)| {
            let cfg: ExperimentConfig = t.try_into().map_err(HarnessError::Toml)?;
            cfg.validate()?;
            Ok((l, cfg))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRun {
    pub label: String,
    pub cumulative_mse: f64,
    pub cumulative_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub overrides: BTreeMap<String, String>,
    pub summary: BTreeMap<String, f64>,
    pub runs: Vec<SweepRun>,
}

pub fn sweep(base: &ExperimentConfig, axes: &[Axis]) -> Result<Vec<SweepPoint>> {
    expand(base, axes)?
        .into_iter()
        .map(|(overrides, cfg)| {
            let report = run(&cfg)?;
            let runs = report
                .runs
                .iter()
                .map(|r| SweepRun {
                    label: r.label.clone(),
                    cumulative_mse: r.cumulative_mse,
                    cumulative_accuracy: r.cumulative_accuracy,
                })
                .collect();
            Ok(SweepPoint {
                overrides,
                summary: report.summary,
                runs,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_literals_and_words() {
        let a = parse_axis("learn.lr=0.5, 2, true, iid").unwrap();
        assert_eq!(a.path, vec!["learn", "lr"]);
        assert_eq!(a.values[0], toml::Value::Float(0.5));
        assert_eq!(a.values[1], toml::Value::Integer(2));
        assert_eq!(a.values[2], toml::Value::Boolean(true));
        assert_eq!(a.values[3], toml::Value::String("iid".into()));
        assert!(parse_axis("nothing").is_err());
    }

    #[test]
    fn expands_grid_including_array_paths() {
        let base = ExperimentConfig::from_toml(crate::template("assoc-auto").unwrap()).unwrap();
        let axes = [
            parse_axis("model.layers.0.capacity=32,64").unwrap(),
            parse_axis("eval.corruption.variance=0.1,0.2,0.3").unwrap(),
        ];
        let points = expand(&base, &axes).unwrap();
        assert_eq!(points.len(), 6);
        assert_eq!(points[5].1.model.layers[0].capacity, 64);
        assert_eq!(points[5].0["eval.corruption.variance"], "0.3");
        assert!(expand(&base, &[parse_axis("model.layers.3.capacity=1").unwrap()]).is_err());
        assert!(expand(&base, &[parse_axis("seed.x=1").unwrap()]).is_err());
    }
}
