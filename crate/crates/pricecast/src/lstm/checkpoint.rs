//! Keyed-text checkpoints for trained stacks: dimensions, seed, every
//! tensor, and the training configuration. Identical stacks serialize to
//! identical bytes.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use ndarray::{Array1, Array2};

use super::cell::{Gate, LstmLayerParams};
use super::train::TrainConfig;
use super::LstmStack;
use crate::error::{Error, Result};

/// A parsed checkpoint.
#[derive(Debug, Clone)]
pub struct LstmCheckpoint {
    pub stack: LstmStack,
    pub fingerprint: String,
    pub train_config: Option<TrainConfig>,
}

fn join(values: impl IntoIterator<Item = f64>) -> String {
    values
        .into_iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn write_gate(out: &mut String, prefix: &str, gate: &Gate) {
    let _ = writeln!(out, "{prefix}.w_h = {}", join(gate.w_h.iter().cloned()));
    let _ = writeln!(out, "{prefix}.w_x = {}", join(gate.w_x.iter().cloned()));
    let _ = writeln!(out, "{prefix}.b = {}", join(gate.b.iter().cloned()));
}

/// Serialize a stack (and optionally the config it was trained with).
pub fn checkpoint_to_text(
    stack: &LstmStack,
    train_config: Option<&TrainConfig>,
    fingerprint: &str,
) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "format = lstm-stack-v1");
    let _ = writeln!(out, "fingerprint = {fingerprint}");
    let _ = writeln!(out, "seed = {}", stack.seed);
    let _ = writeln!(out, "input_size = {}", stack.layers[0].input_size);
    let _ = writeln!(
        out,
        "units = {}",
        stack
            .layers
            .iter()
            .map(|l| l.units.to_string())
            .collect::<Vec<_>>()
            .join(",")
    );
    let _ = writeln!(out, "dropout = {}", join(stack.dropout_rates.iter().cloned()));
    if let Some(config) = train_config {
        let _ = writeln!(out, "train.epochs = {}", config.epochs);
        let _ = writeln!(out, "train.batch_size = {}", config.batch_size);
        let _ = writeln!(out, "train.learning_rate = {}", config.learning_rate);
        let _ = writeln!(out, "train.beta1 = {}", config.beta1);
        let _ = writeln!(out, "train.beta2 = {}", config.beta2);
        let _ = writeln!(out, "train.epsilon = {}", config.epsilon);
        let _ = writeln!(out, "train.seed = {}", config.seed);
        let _ = writeln!(out, "train.shuffle = {}", config.shuffle);
    }
    for (i, layer) in stack.layers.iter().enumerate() {
        write_gate(&mut out, &format!("layer{i}.forget"), &layer.forget);
        write_gate(&mut out, &format!("layer{i}.input"), &layer.input);
        write_gate(&mut out, &format!("layer{i}.candidate"), &layer.candidate);
        write_gate(&mut out, &format!("layer{i}.output"), &layer.output);
    }
    let _ = writeln!(out, "dense.w = {}", join(stack.dense_w.iter().cloned()));
    let _ = writeln!(out, "dense.b = {}", stack.dense_b);
    out
}

fn parse_floats(text: &str) -> Result<Vec<f64>> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Checkpoint(format!("bad number {t:?}")))
        })
        .collect()
}

/// Parse a checkpoint produced by [`checkpoint_to_text`].
pub fn checkpoint_from_text(text: &str) -> Result<LstmCheckpoint> {
    let mut map: BTreeMap<String, String> = BTreeMap::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Checkpoint(format!("bad line {line:?}")))?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    let get = |key: &str| -> Result<&String> {
        map.get(key)
            .ok_or_else(|| Error::Checkpoint(format!("missing key {key:?}")))
    };
    if get("format")? != "lstm-stack-v1" {
        return Err(Error::Checkpoint(format!(
            "unsupported format {:?}",
            get("format")?
        )));
    }

    let input_size: usize = get("input_size")?
        .parse()
        .map_err(|_| Error::Checkpoint("bad input_size".to_string()))?;
    let units: Vec<usize> = get("units")?
        .split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| Error::Checkpoint(format!("bad unit count {t:?}")))
        })
        .collect::<Result<_>>()?;
    let dropout_rates = parse_floats(get("dropout")?)?;
    if units.is_empty() || units.len() != dropout_rates.len() {
        return Err(Error::Checkpoint(
            "units and dropout lists disagree".to_string(),
        ));
    }
    let seed: u64 = get("seed")?
        .parse()
        .map_err(|_| Error::Checkpoint("bad seed".to_string()))?;

    let read_matrix = |key: &str, rows: usize, cols: usize| -> Result<Array2<f64>> {
        let values = parse_floats(get(key)?)?;
        if values.len() != rows * cols {
            return Err(Error::Checkpoint(format!(
                "{key}: expected {} values, got {}",
                rows * cols,
                values.len()
            )));
        }
        Array2::from_shape_vec((rows, cols), values)
            .map_err(|e| Error::Checkpoint(format!("{key}: {e}")))
    };
    let read_vector = |key: &str, len: usize| -> Result<Array1<f64>> {
        let values = parse_floats(get(key)?)?;
        if values.len() != len {
            return Err(Error::Checkpoint(format!(
                "{key}: expected {len} values, got {}",
                values.len()
            )));
        }
        Ok(Array1::from_vec(values))
    };

    let mut layers = Vec::with_capacity(units.len());
    let mut in_size = input_size;
    for (i, &u) in units.iter().enumerate() {
        let read_gate = |name: &str| -> Result<Gate> {
            Ok(Gate {
                w_h: read_matrix(&format!("layer{i}.{name}.w_h"), u, u)?,
                w_x: read_matrix(&format!("layer{i}.{name}.w_x"), u, in_size)?,
                b: read_vector(&format!("layer{i}.{name}.b"), u)?,
            })
        };
        layers.push(LstmLayerParams {
            units: u,
            input_size: in_size,
            forget: read_gate("forget")?,
            input: read_gate("input")?,
            candidate: read_gate("candidate")?,
            output: read_gate("output")?,
        });
        in_size = u;
    }
    let dense_w = read_vector("dense.w", in_size)?;
    let dense_b: f64 = get("dense.b")?
        .parse()
        .map_err(|_| Error::Checkpoint("bad dense.b".to_string()))?;

    let train_config = if map.contains_key("train.epochs") {
        let parse = |key: &str| get(key);
        Some(TrainConfig {
            epochs: parse("train.epochs")?
                .parse()
                .map_err(|_| Error::Checkpoint("bad train.epochs".to_string()))?,
            batch_size: parse("train.batch_size")?
                .parse()
                .map_err(|_| Error::Checkpoint("bad train.batch_size".to_string()))?,
            learning_rate: parse("train.learning_rate")?
                .parse()
                .map_err(|_| Error::Checkpoint("bad train.learning_rate".to_string()))?,
            beta1: parse("train.beta1")?
                .parse()
                .map_err(|_| Error::Checkpoint("bad train.beta1".to_string()))?,
            beta2: parse("train.beta2")?
                .parse()
                .map_err(|_| Error::Checkpoint("bad train.beta2".to_string()))?,
            epsilon: parse("train.epsilon")?
                .parse()
                .map_err(|_| Error::Checkpoint("bad train.epsilon".to_string()))?,
            seed: parse("train.seed")?
                .parse()
                .map_err(|_| Error::Checkpoint("bad train.seed".to_string()))?,
            shuffle: parse("train.shuffle")?
                .parse()
                .map_err(|_| Error::Checkpoint("bad train.shuffle".to_string()))?,
        })
    } else {
        None
    };

    Ok(LstmCheckpoint {
        stack: LstmStack {
            layers,
            dropout_rates,
            dense_w,
            dense_b,
            seed,
        },
        fingerprint: get("fingerprint")?.clone(),
        train_config,
    })
}
