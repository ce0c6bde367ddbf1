//! Line-oriented text checkpoints.
//!
//! Parameters are stored as the hex bit pattern of each value widened to
//! `f64`, so a save/load round trip is bit-exact for both scalar types. The
//! raw user and item id tables travel with the parameters so a checkpoint can
//! be scored against a split manifest without re-reading the ratings file.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::data::IdMap;
use crate::error::{Error, Result};
use crate::layers::{Activation, TowerParams};
use crate::numerics::{Matrix, OptimizerKind, OptimizerState};
use crate::scalar::Scalar;

use super::{Hyperparams, ModelKind, ModelState};

const MAGIC: &str = "mp2-checkpoint 1";

/// A trained model together with the id tables it was trained against.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint<T> {
    pub model: ModelState<T>,
    pub users: IdMap,
    pub items: IdMap,
}

pub fn write_checkpoint<T: Scalar, W: Write>(ckpt: &Checkpoint<T>, mut out: W) -> Result<()> {
    let m = &ckpt.model;
    writeln!(out, "{MAGIC}")?;
    writeln!(out, "scalar {}", T::NAME)?;
    writeln!(out, "kind {}", m.kind)?;
    let pairs = m.hyper.to_pairs();
    writeln!(out, "hyper {}", pairs.len())?;
    for (k, v) in pairs {
        writeln!(out, "{k}={v}")?;
    }
    for (name, ids) in [("users", &ckpt.users), ("items", &ckpt.items)] {
        writeln!(out, "{name} {}", ids.len())?;
        for raw in ids.raw_ids() {
            writeln!(out, "{raw}")?;
        }
    }
    let mut towers = vec![("user", &m.user_tower), ("item", &m.item_vanilla)];
    if let Some(t) = &m.item_momentum {
        towers.push(("item_momentum", t));
    }
    if let Some(t) = &m.item_pointwise {
        towers.push(("item_pointwise", t));
    }
    writeln!(out, "towers {}", towers.len())?;
    for (name, t) in towers {
        writeln!(out, "tower {name} {} {}", t.activation, t.depth())?;
        for m in t.matrices() {
            write_matrix(&mut out, m)?;
        }
    }
    writeln!(out, "optimizers {}", m.optimizers.len())?;
    for states in &m.optimizers {
        writeln!(out, "group {}", states.len())?;
        for s in states {
            writeln!(
                out,
                "optimizer {} {} {} {} {} {}",
                s.kind,
                hex(s.learning_rate),
                hex(s.beta1),
                hex(s.beta2),
                hex(s.epsilon),
                s.step_count
            )?;
            write_matrix(&mut out, &s.m)?;
            write_matrix(&mut out, &s.v)?;
        }
    }
    writeln!(out, "end")?;
    Ok(())
}

pub fn read_checkpoint<T: Scalar, R: BufRead>(reader: R) -> Result<Checkpoint<T>> {
    let mut r = Reader {
        lines: reader.lines(),
        line: 0,
    };
    if r.next()? != MAGIC {
        return Err(r.err("not a checkpoint (bad header)"));
    }
    let scalar = r.field("scalar")?;
    if scalar != T::NAME {
        return Err(r.err(&format!("checkpoint holds {scalar}, requested {}", T::NAME)));
    }
    let kind: ModelKind = r.field("kind")?.parse().map_err(|_| r.err("unknown model kind"))?;

    let mut hyper = Hyperparams::default();
    for _ in 0..r.count("hyper")? {
        let line = r.next()?;
        let (k, v) = line.split_once('=').ok_or_else(|| r.err("expected key=value"))?;
        if !hyper.set(k, v).map_err(|e| r.err(&e.to_string()))? {
            return Err(r.err(&format!("unknown hyperparameter `{k}`")));
        }
    }

    let id_table = |r: &mut Reader<R>, name: &str| -> Result<IdMap> {
        let n = r.count(name)?;
        let raw = (0..n).map(|_| r.next()).collect::<Result<Vec<_>>>()?;
        IdMap::from_raw(raw).map_err(|e| r.err(&e.to_string()))
    };
    let users = id_table(&mut r, "users")?;
    let items = id_table(&mut r, "items")?;

    let mut towers: Vec<(String, TowerParams<T>)> = Vec::new();
    for _ in 0..r.count("towers")? {
        let line = r.next()?;
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 4 || parts[0] != "tower" {
            return Err(r.err("expected `tower <name> <activation> <depth>`"));
        }
        let activation: Activation = parts[2].parse().map_err(|_| r.err("bad activation"))?;
        let depth: usize = parts[3].parse().map_err(|_| r.err("bad depth"))?;
        let name = parts[1].to_string();
        let embedding = read_matrix(&mut r)?;
        let (mut weights, mut biases) = (Vec::new(), Vec::new());
        for _ in 0..depth {
            weights.push(read_matrix(&mut r)?);
            biases.push(read_matrix(&mut r)?);
        }
        let tower = TowerParams::from_parts(embedding, weights, biases, activation)
            .map_err(|e| r.err(&e.to_string()))?;
        towers.push((name, tower));
    }
    let mut take = |name: &str| {
        towers
            .iter()
            .position(|(n, _)| n == name)
            .map(|i| towers.remove(i).1)
    };
    let user_tower = take("user").ok_or_else(|| Error::Format("missing user tower".into()))?;
    let item_vanilla = take("item").ok_or_else(|| Error::Format("missing item tower".into()))?;
    let item_momentum = take("item_momentum");
    let item_pointwise = take("item_pointwise");
    if let Some((name, _)) = towers.first() {
        return Err(Error::Format(format!("unexpected tower `{name}`")));
    }
    if item_momentum.is_some() != (kind == ModelKind::Mp2)
        || item_pointwise.is_some() != (kind == ModelKind::ThreeTower)
    {
        return Err(Error::Format(format!("tower set does not match kind {kind}")));
    }
    if user_tower.rows() != users.len() || item_vanilla.rows() != items.len() {
        return Err(Error::Format("id tables disagree with embedding rows".into()));
    }

    let mut optimizers = Vec::new();
    for _ in 0..r.count("optimizers")? {
        let mut group = Vec::new();
        for _ in 0..r.count("group")? {
            let line = r.next()?;
            let p: Vec<&str> = line.split_whitespace().collect();
            if p.len() != 7 || p[0] != "optimizer" {
                return Err(r.err("expected optimizer line"));
            }
            let kind: OptimizerKind = p[1].parse().map_err(|_| r.err("bad optimizer kind"))?;
            let scalar = |s: &str| unhex::<T>(s).ok_or_else(|| r.err("bad hex value"));
            let state = OptimizerState {
                kind,
                learning_rate: scalar(p[2])?,
                beta1: scalar(p[3])?,
                beta2: scalar(p[4])?,
                epsilon: scalar(p[5])?,
                step_count: p[6].parse().map_err(|_| r.err("bad step count"))?,
                m: read_matrix(&mut r)?,
                v: read_matrix(&mut r)?,
            };
            group.push(state);
        }
        optimizers.push(group);
    }
    if r.next()? != "end" {
        return Err(r.err("expected `end`"));
    }

    let model = ModelState {
        kind,
        hyper,
        user_tower,
        item_vanilla,
        item_momentum,
        item_pointwise,
        optimizers,
    };
    let layout_ok = model.optimizers.len() == model.trainable_towers().len()
        && model
            .trainable_towers()
            .iter()
            .zip(&model.optimizers)
            .all(|(t, g)| g.len() == t.matrices().len());
    if !layout_ok {
        return Err(Error::Format("optimizer state does not match the towers".into()));
    }
    Ok(Checkpoint { model, users, items })
}

pub fn save_checkpoint<T: Scalar>(ckpt: &Checkpoint<T>, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_checkpoint(ckpt, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint<T: Scalar>(path: &Path) -> Result<Checkpoint<T>> {
    read_checkpoint(BufReader::new(File::open(path)?))
}

fn hex<T: Scalar>(x: T) -> String {
    format!("{:016x}", x.as_f64().to_bits())
}

fn unhex<T: Scalar>(s: &str) -> Option<T> {
    u64::from_str_radix(s, 16).ok().map(|b| T::lit(f64::from_bits(b)))
}

fn write_matrix<T: Scalar, W: Write>(out: &mut W, m: &Matrix<T>) -> Result<()> {
    writeln!(out, "matrix {} {}", m.rows(), m.cols())?;
    let cells: Vec<String> = m.as_slice().iter().map(|&x| hex(x)).collect();
    writeln!(out, "{}", cells.join(" "))?;
    Ok(())
}

fn read_matrix<T: Scalar, R: BufRead>(r: &mut Reader<R>) -> Result<Matrix<T>> {
    let line = r.next()?;
    let p: Vec<&str> = line.split_whitespace().collect();
    let dims = match p.as_slice() {
        ["matrix", rows, cols] => rows.parse::<usize>().ok().zip(cols.parse::<usize>().ok()),
        _ => None,
    };
    let (rows, cols) = dims.ok_or_else(|| r.err("expected `matrix <rows> <cols>`"))?;
    let body = r.next()?;
    let data = body
        .split_whitespace()
        .map(|s| unhex::<T>(s).ok_or_else(|| r.err("bad hex value")))
        .collect::<Result<Vec<T>>>()?;
    Matrix::new(rows, cols, data).map_err(|e| r.err(&e.to_string()))
}

struct Reader<R> {
    lines: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Reader<R> {
    fn next(&mut self) -> Result<String> {
        self.line += 1;
        match self.lines.next() {
            Some(l) => Ok(l?),
            None => Err(self.err("unexpected end of file")),
        }
    }

    fn err(&self, msg: &str) -> Error {
        Error::Format(format!("line {}: {msg}", self.line))
    }

    /// Reads `<key> <value>` and returns the value.
    fn field(&mut self, key: &str) -> Result<String> {
        let line = self.next()?;
        match line.split_once(' ') {
            Some((k, v)) if k == key => Ok(v.to_string()),
            _ => Err(self.err(&format!("expected `{key} ...`"))),
        }
    }

    fn count(&mut self, key: &str) -> Result<usize> {
        self.field(key)?
            .trim()
            .parse()
            .map_err(|_| self.err(&format!("bad count for `{key}`")))
    }
}
