//! Binary model files.
//!
//! All integers and floats are little-endian; strings are a `u32` byte length
//! followed by UTF-8.
//!
//! ```text
//! magic      8 bytes  "AMRMODEL"
//! version    u16      1
//! kind       u8       0 naive, 1 linear, 2 ridge, 3 gbt_exact, 4 gbt_histogram, 5 lstm
//! columns    u32 count, then strings
//! importance u8 flag, then one f64 per column when the flag is 1
//! meta       u32 length, then JSON (hyperparameters and traces)
//! payload    kind-specific, see below
//! ```
//!
//! Payloads: naive `u32 lag_column`; linear/ridge `f64 lambda, f64 intercept,
//! u32 p, p × f64`; boosting `u8 mode, f64 base, f64 learning_rate, u32 trees`
//! then per tree `u32 nodes` and per node either `0u8, f64 weight` or
//! `1u8, u32 feature, f64 threshold, f64 gain, u32 left, u32 right`; LSTM
//! `u32 input_dim, u32 hidden, u32 n_params, params, x_mean, x_sd, f64 y_mean,
//! f64 y_sd`.

use std::io::{Cursor, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};

use super::gbt::{GbtEnsemble, SplitMode, Tree, TreeNode};
use super::linear::LinearModel;
use super::lstm::{LstmModel, LstmNet};
use super::{ModelError, ModelKind, ModelParams, TrainedModel, TrainingMeta};

pub const MODEL_MAGIC: &[u8; 8] = b"AMRMODEL";
pub const MODEL_VERSION: u16 = 1;

fn fmt_err(msg: impl Into<String>) -> ModelError {
    ModelError::Format(msg.into())
}

fn put_str(w: &mut Vec<u8>, s: &str) {
    w.write_u32::<LE>(s.len() as u32).unwrap();
    w.extend_from_slice(s.as_bytes());
}

fn put_f64s(w: &mut Vec<u8>, v: &[f64]) {
    for x in v {
        w.write_f64::<LE>(*x).unwrap();
    }
}

pub fn to_bytes(model: &TrainedModel) -> Vec<u8> {
    let mut w = Vec::new();
    w.extend_from_slice(MODEL_MAGIC);
    w.write_u16::<LE>(MODEL_VERSION).unwrap();
    w.write_u8(model.kind.tag()).unwrap();
    w.write_u32::<LE>(model.columns.len() as u32).unwrap();
    for c in &model.columns {
        put_str(&mut w, c);
    }
    match &model.feature_importances {
        Some(imp) => {
            w.write_u8(1).unwrap();
            put_f64s(&mut w, imp);
        }
        None => w.write_u8(0).unwrap(),
    }
    let meta = serde_json::to_vec(&model.meta).expect("meta is plain JSON");
    w.write_u32::<LE>(meta.len() as u32).unwrap();
    w.extend_from_slice(&meta);

    match &model.params {
        ModelParams::Naive { lag_column } => w.write_u32::<LE>(*lag_column as u32).unwrap(),
        ModelParams::Linear(m) => {
            w.write_f64::<LE>(m.lambda).unwrap();
            w.write_f64::<LE>(m.intercept).unwrap();
            w.write_u32::<LE>(m.weights.len() as u32).unwrap();
            put_f64s(&mut w, &m.weights);
        }
        ModelParams::Gbt(e) => {
            w.write_u8(match e.mode {
                SplitMode::Exact => 0,
                SplitMode::Histogram => 1,
            })
            .unwrap();
            w.write_f64::<LE>(e.base_score).unwrap();
            w.write_f64::<LE>(e.learning_rate).unwrap();
            w.write_u32::<LE>(e.trees.len() as u32).unwrap();
            for t in &e.trees {
                w.write_u32::<LE>(t.nodes.len() as u32).unwrap();
                for n in &t.nodes {
                    match *n {
                        TreeNode::Leaf { weight } => {
                            w.write_u8(0).unwrap();
                            w.write_f64::<LE>(weight).unwrap();
                        }
                        TreeNode::Split {
                            feature,
                            threshold,
                            gain,
                            left,
                            right,
                        } => {
                            w.write_u8(1).unwrap();
                            w.write_u32::<LE>(feature as u32).unwrap();
                            w.write_f64::<LE>(threshold).unwrap();
                            w.write_f64::<LE>(gain).unwrap();
                            w.write_u32::<LE>(left as u32).unwrap();
                            w.write_u32::<LE>(right as u32).unwrap();
                        }
                    }
                }
            }
        }
        ModelParams::Lstm(m) => {
            w.write_u32::<LE>(m.net.input_dim as u32).unwrap();
            w.write_u32::<LE>(m.net.hidden as u32).unwrap();
            w.write_u32::<LE>(m.net.params.len() as u32).unwrap();
            put_f64s(&mut w, &m.net.params);
            put_f64s(&mut w, &m.x_mean);
            put_f64s(&mut w, &m.x_sd);
            w.write_f64::<LE>(m.y_mean).unwrap();
            w.write_f64::<LE>(m.y_sd).unwrap();
        }
    }
    w
}

struct Reader<'a> {
    cur: Cursor<&'a [u8]>,
}

impl Reader<'_> {
    fn u8(&mut self) -> Result<u8, ModelError> {
        self.cur.read_u8().map_err(|_| fmt_err("truncated file"))
    }
    fn u16(&mut self) -> Result<u16, ModelError> {
        self.cur.read_u16::<LE>().map_err(|_| fmt_err("truncated file"))
    }
    fn u32(&mut self) -> Result<usize, ModelError> {
        self.cur
            .read_u32::<LE>()
            .map(|v| v as usize)
            .map_err(|_| fmt_err("truncated file"))
    }
    fn f64(&mut self) -> Result<f64, ModelError> {
        self.cur.read_f64::<LE>().map_err(|_| fmt_err("truncated file"))
    }
    fn f64s(&mut self, n: usize) -> Result<Vec<f64>, ModelError> {
        if n > self.remaining() / 8 {
            return Err(fmt_err("truncated file"));
        }
        (0..n).map(|_| self.f64()).collect()
    }
    fn bytes(&mut self, n: usize) -> Result<Vec<u8>, ModelError> {
        if n > self.remaining() {
            return Err(fmt_err("truncated file"));
        }
        let mut buf = vec![0; n];
        self.cur.read_exact(&mut buf).map_err(|_| fmt_err("truncated file"))?;
        Ok(buf)
    }
    fn string(&mut self) -> Result<String, ModelError> {
        let n = self.u32()?;
        String::from_utf8(self.bytes(n)?).map_err(|_| fmt_err("column name is not UTF-8"))
    }
    fn remaining(&self) -> usize {
        self.cur.get_ref().len() - self.cur.position() as usize
    }
}

fn read_tree(r: &mut Reader<'_>, n_columns: usize) -> Result<Tree, ModelError> {
    let n = r.u32()?;
    if n == 0 {
        return Err(fmt_err("tree without nodes"));
    }
    let mut nodes = Vec::with_capacity(n.min(1 << 16));
    for at in 0..n {
        nodes.push(match r.u8()? {
            0 => TreeNode::Leaf { weight: r.f64()? },
            1 => {
                let feature = r.u32()?;
                let threshold = r.f64()?;
                let gain = r.f64()?;
                let left = r.u32()?;
                let right = r.u32()?;
                // Children always follow their parent, which rules out cycles.
                if feature >= n_columns || left <= at || right <= at || left >= n || right >= n {
                    return Err(fmt_err(format!("invalid split node {at}")));
                }
                TreeNode::Split {
                    feature,
                    threshold,
                    gain,
                    left,
                    right,
                }
            }
            t => return Err(fmt_err(format!("unknown node tag {t}"))),
        });
    }
    Ok(Tree { nodes })
}

pub fn from_bytes(bytes: &[u8]) -> Result<TrainedModel, ModelError> {
    let mut r = Reader {
        cur: Cursor::new(bytes),
    };
    if r.bytes(MODEL_MAGIC.len())? != MODEL_MAGIC {
        return Err(fmt_err("not a model file"));
    }
    let version = r.u16()?;
    if version != MODEL_VERSION {
        return Err(fmt_err(format!("unsupported version {version}")));
    }
    let tag = r.u8()?;
    let kind = ModelKind::from_tag(tag).ok_or_else(|| fmt_err(format!("unknown model kind {tag}")))?;
    let n_columns = r.u32()?;
    let columns = (0..n_columns)
        .map(|_| r.string())
        .collect::<Result<Vec<_>, _>>()?;
    let feature_importances = match r.u8()? {
        0 => None,
        1 => Some(r.f64s(n_columns)?),
        f => return Err(fmt_err(format!("bad importance flag {f}"))),
    };
    let meta_len = r.u32()?;
    let meta: TrainingMeta = serde_json::from_slice(&r.bytes(meta_len)?)
        .map_err(|e| fmt_err(format!("meta: {e}")))?;

    let params = match kind {
        ModelKind::Naive => {
            let lag_column = r.u32()?;
            if lag_column >= n_columns {
                return Err(fmt_err("lag column out of range"));
            }
            ModelParams::Naive { lag_column }
        }
        ModelKind::Linear | ModelKind::Ridge => {
            let lambda = r.f64()?;
            let intercept = r.f64()?;
            let p = r.u32()?;
            if p != n_columns {
                return Err(fmt_err("weight count does not match columns"));
            }
            ModelParams::Linear(LinearModel {
                intercept,
                weights: r.f64s(p)?,
                lambda,
            })
        }
        ModelKind::GbtExact | ModelKind::GbtHistogram => {
            let mode = match r.u8()? {
                0 => SplitMode::Exact,
                1 => SplitMode::Histogram,
                m => return Err(fmt_err(format!("unknown split mode {m}"))),
            };
            if mode.kind() != kind {
                return Err(fmt_err("split mode does not match model kind"));
            }
            let base_score = r.f64()?;
            let learning_rate = r.f64()?;
            let n_trees = r.u32()?;
            let trees = (0..n_trees)
                .map(|_| read_tree(&mut r, n_columns))
                .collect::<Result<Vec<_>, _>>()?;
            ModelParams::Gbt(GbtEnsemble {
                mode,
                base_score,
                learning_rate,
                trees,
            })
        }
        ModelKind::Lstm => {
            let input_dim = r.u32()?;
            let hidden = r.u32()?;
            let n_params = r.u32()?;
            if input_dim != n_columns || n_params != LstmNet::param_count(input_dim, hidden) {
                return Err(fmt_err("LSTM shape does not match columns"));
            }
            let params = r.f64s(n_params)?;
            ModelParams::Lstm(LstmModel {
                net: LstmNet {
                    input_dim,
                    hidden,
                    params,
                },
                x_mean: r.f64s(input_dim)?,
                x_sd: r.f64s(input_dim)?,
                y_mean: r.f64()?,
                y_sd: r.f64()?,
            })
        }
    };
    if r.remaining() != 0 {
        return Err(fmt_err("trailing bytes after payload"));
    }
    Ok(TrainedModel {
        kind,
        columns,
        params,
        feature_importances,
        meta,
    })
}

pub fn save_model(model: &TrainedModel, path: &Path) -> Result<(), ModelError> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(&to_bytes(model))?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<TrainedModel, ModelError> {
    from_bytes(&std::fs::read(path)?)
}
