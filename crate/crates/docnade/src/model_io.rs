//! Deterministic, versioned model serialization.
//!
//! A model file is fully self-contained: magic, a length-prefixed UTF-8
//! header (metadata plus the tree/partition payload), a tensor directory,
//! packed little-endian `f64` blocks, and a trailing FNV-1a checksum over
//! everything before it. The byte layout is documented in
//! `docs/model-format.md`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::corpus::{LogBase, Vocabulary};
use crate::models::deep::{DeepDocNadeModel, DeepLayer};
use crate::models::docnade::DocNadeModel;
use crate::models::lm::DocNadeLmModel;
use crate::nn::{Activation, ParamTensor, Parameterized, Shape};
use crate::seeding::fnv1a64;
use crate::tree::{BinaryWordTree, Child, ClassPartition};
use crate::{Error, Result};

pub const MAGIC: &[u8; 7] = b"DNADEK1";
pub const FORMAT_VERSION: &str = "1";

/// A model of any of the three families, as stored on disk.
#[derive(Debug)]
#[allow(clippy::large_enum_variant)] // moved a handful of times per process
pub enum Model {
    DocNade(DocNadeModel),
    DeepDocNade(DeepDocNadeModel),
    DocNadeLm(DocNadeLmModel),
}

impl Model {
    pub fn kind(&self) -> &'static str {
        match self {
            Model::DocNade(_) => "docnade",
            Model::DeepDocNade(_) => "deep_docnade",
            Model::DocNadeLm(_) => "docnade_lm",
        }
    }

    pub fn vocab_size(&self) -> usize {
        match self {
            Model::DocNade(m) => m.vocab_size(),
            Model::DeepDocNade(m) => m.vocab_size(),
            Model::DocNadeLm(m) => m.vocab_size(),
        }
    }

    pub fn activation(&self) -> Activation {
        match self {
            Model::DocNade(m) => m.activation(),
            Model::DeepDocNade(m) => m.activation(),
            Model::DocNadeLm(m) => m.activation(),
        }
    }

    /// The first-layer word embedding matrix (`H×V` or `H×(V+1)` for the
    /// language model's n-gram table when requested separately).
    pub fn embedding(&self) -> &ParamTensor {
        match self {
            Model::DocNade(m) => &m.embedding,
            Model::DeepDocNade(m) => &m.layers[0].weight,
            Model::DocNadeLm(m) => &m.dn_embedding,
        }
    }

    fn tensors(&self) -> Vec<&ParamTensor> {
        match self {
            Model::DocNade(m) => m.params(),
            Model::DeepDocNade(m) => m.params(),
            Model::DocNadeLm(m) => m.params(),
        }
    }
}

/// Run metadata stored alongside the parameters. Evaluation replays the
/// training-time preprocessing from these fields.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelMeta {
    pub vocab_hash: u64,
    pub seed: u64,
    /// Whether bag corpora were compressed with the log-count transform.
    pub log_counts: bool,
    pub log_base: LogBase,
    /// Language-model sentence grouping (1 = per-sentence documents).
    pub sentence_group: usize,
}

impl ModelMeta {
    pub fn new(vocab_hash: u64, seed: u64) -> Self {
        ModelMeta {
            vocab_hash,
            seed,
            log_counts: false,
            log_base: LogBase::Natural,
            sentence_group: 1,
        }
    }

    pub fn check_vocab(&self, vocab: &Vocabulary) -> Result<()> {
        let actual = vocab.hash64();
        if actual != self.vocab_hash {
            return Err(Error::VocabHashMismatch {
                expected: self.vocab_hash,
                actual,
            });
        }
        Ok(())
    }
}

/// Writes the model atomically (temp file + rename). Identical models
/// produce identical bytes.
pub fn save(model: &Model, meta: &ModelMeta, path: &Path) -> Result<()> {
    let bytes = encode(model, meta);
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    fs::write(&tmp, &bytes).map_err(Error::io(&tmp))?;
    fs::rename(&tmp, path).map_err(Error::io(path))
}

pub fn encode(model: &Model, meta: &ModelMeta) -> Vec<u8> {
    let header = header_string(model, meta);
    let tensors = model.tensors();

    let mut bytes = Vec::new();
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&(header.len() as u32).to_le_bytes());
    bytes.extend_from_slice(header.as_bytes());

    bytes.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    let mut data_offset = 0u64;
    for t in &tensors {
        bytes.extend_from_slice(&(t.name.len() as u32).to_le_bytes());
        bytes.extend_from_slice(t.name.as_bytes());
        match t.shape {
            Shape::Vector(n) => {
                bytes.push(1);
                bytes.extend_from_slice(&(n as u64).to_le_bytes());
            }
            Shape::Matrix(r, c) => {
                bytes.push(2);
                bytes.extend_from_slice(&(r as u64).to_le_bytes());
                bytes.extend_from_slice(&(c as u64).to_le_bytes());
            }
        }
        bytes.extend_from_slice(&data_offset.to_le_bytes());
        data_offset += 8 * t.len() as u64;
    }
    for t in &tensors {
        for v in &t.values {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    let checksum = fnv1a64(&bytes);
    bytes.extend_from_slice(&checksum.to_le_bytes());
    bytes
}

fn header_string(model: &Model, meta: &ModelMeta) -> String {
    let mut h = String::new();
    let mut put = |k: &str, v: String| {
        let _ = writeln!(h, "{k}={v}");
    };
    put("version", FORMAT_VERSION.into());
    put("kind", model.kind().into());
    put("vocab_size", model.vocab_size().to_string());
    put("activation", model.activation().name().into());
    put("seed", meta.seed.to_string());
    put("vocab_hash", meta.vocab_hash.to_string());
    put("log_counts", meta.log_counts.to_string());
    put("log_base", meta.log_base.name().into());
    put("sentence_group", meta.sentence_group.to_string());
    match model {
        Model::DocNade(m) => {
            put("hidden", m.hidden_size().to_string());
            put("tree_nodes", encode_tree(m.tree()));
        }
        Model::DeepDocNade(m) => {
            let widths: Vec<String> = m.hidden_sizes().iter().map(usize::to_string).collect();
            put("layers", widths.join(","));
        }
        Model::DocNadeLm(m) => {
            put("hidden", m.hidden_size().to_string());
            put("ngram", m.ngram().to_string());
            put("document_context", m.uses_document_context().to_string());
            let classes: Vec<String> = m
                .partition()
                .class_table()
                .iter()
                .map(u32::to_string)
                .collect();
            put("class_of", classes.join(" "));
        }
    }
    h
}

/// Internal nodes in index order (the builders emit preorder), each child as
/// `i<node>` or `l<word>`.
fn encode_tree(tree: &BinaryWordTree) -> String {
    let mut entries = Vec::with_capacity(2 * tree.internal_count());
    for node in tree.nodes() {
        for child in node {
            entries.push(match child {
                Child::Internal(i) => format!("i{i}"),
                Child::Leaf(w) => format!("l{w}"),
            });
        }
    }
    entries.join(" ")
}

fn decode_tree(field: &str, vocab_size: usize) -> Result<BinaryWordTree> {
    let mut nodes = Vec::new();
    let mut pair: Vec<Child> = Vec::with_capacity(2);
    for entry in field.split_whitespace() {
        let (kind, index) = entry.split_at(1);
        let index: u32 = index
            .parse()
            .map_err(|_| Error::Config(format!("bad tree entry `{entry}`")))?;
        pair.push(match kind {
            "i" => Child::Internal(index),
            "l" => Child::Leaf(index),
            _ => return Err(Error::Config(format!("bad tree entry `{entry}`"))),
        });
        if pair.len() == 2 {
            nodes.push([pair[0], pair[1]]);
            pair.clear();
        }
    }
    if !pair.is_empty() {
        return Err(Error::Config("odd tree entry count".into()));
    }
    BinaryWordTree::from_nodes(nodes, vocab_size)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn corrupt(&self, message: impl Into<String>) -> Error {
        Error::CorruptModel {
            offset: self.pos as u64,
            message: message.into(),
        }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(self.corrupt(format!(
                "need {n} bytes, {} remain",
                self.bytes.len() - self.pos
            )));
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
}

/// Loads and revalidates a model file.
pub fn load(path: &Path) -> Result<(Model, ModelMeta)> {
    let bytes = fs::read(path).map_err(Error::io(path))?;
    decode(&bytes)
}

pub fn decode(bytes: &[u8]) -> Result<(Model, ModelMeta)> {
    if bytes.len() < MAGIC.len() + 4 + 8 {
        return Err(Error::CorruptModel {
            offset: bytes.len() as u64,
            message: "file too short".into(),
        });
    }
    if &bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::BadMagic);
    }
    let body = &bytes[..bytes.len() - 8];
    let stored = u64::from_le_bytes(bytes[bytes.len() - 8..].try_into().unwrap());
    if fnv1a64(body) != stored {
        return Err(Error::CorruptModel {
            offset: (bytes.len() - 8) as u64,
            message: "checksum mismatch".into(),
        });
    }

    let mut r = Reader {
        bytes: body,
        pos: MAGIC.len(),
    };
    let header_len = r.u32()? as usize;
    let header = std::str::from_utf8(r.take(header_len)?)
        .map_err(|_| Error::CorruptModel {
            offset: MAGIC.len() as u64 + 4,
            message: "header is not UTF-8".into(),
        })?
        .to_owned();
    let fields = parse_header(&header)?;

    let version = require(&fields, "version")?;
    if version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion(version.to_owned()));
    }

    let n_tensors = r.u32()? as usize;
    let mut directory = Vec::with_capacity(n_tensors);
    for _ in 0..n_tensors {
        let name_len = r.u32()? as usize;
        let name = std::str::from_utf8(r.take(name_len)?)
            .map_err(|_| r.corrupt("tensor name is not UTF-8"))?
            .to_owned();
        let ndim = r.u8()?;
        let shape = match ndim {
            1 => Shape::Vector(r.u64()? as usize),
            2 => {
                let rows = r.u64()? as usize;
                let cols = r.u64()? as usize;
                Shape::Matrix(rows, cols)
            }
            other => return Err(r.corrupt(format!("bad tensor rank {other}"))),
        };
        let offset = r.u64()? as usize;
        directory.push((name, shape, offset));
    }

    let data_start = r.pos;
    let data = &body[data_start..];
    let mut tensors: BTreeMap<String, ParamTensor> = BTreeMap::new();
    for (name, shape, offset) in directory {
        let byte_len = 8 * shape.len();
        if offset + byte_len > data.len() {
            return Err(Error::CorruptModel {
                offset: (data_start + offset) as u64,
                message: format!("tensor `{name}` overruns the data block"),
            });
        }
        let values: Vec<f64> = data[offset..offset + byte_len]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let tensor = ParamTensor::from_values(name.clone(), shape, values)?;
        tensors.insert(name, tensor);
    }

    let meta = ModelMeta {
        vocab_hash: require(&fields, "vocab_hash")?
            .parse()
            .map_err(|_| Error::Config("bad vocab_hash".into()))?,
        seed: require(&fields, "seed")?
            .parse()
            .map_err(|_| Error::Config("bad seed".into()))?,
        log_counts: require(&fields, "log_counts")? == "true",
        log_base: LogBase::parse(require(&fields, "log_base")?)?,
        sentence_group: require(&fields, "sentence_group")?
            .parse()
            .map_err(|_| Error::Config("bad sentence_group".into()))?,
    };

    let vocab_size: usize = require(&fields, "vocab_size")?
        .parse()
        .map_err(|_| Error::Config("bad vocab_size".into()))?;
    let activation = Activation::parse(require(&fields, "activation")?)?;

    let mut take = |name: &str| -> Result<ParamTensor> {
        tensors
            .remove(name)
            .ok_or_else(|| Error::Config(format!("missing tensor `{name}`")))
    };

    let model = match require(&fields, "kind")? {
        "docnade" => {
            let tree = decode_tree(require(&fields, "tree_nodes")?, vocab_size)?;
            Model::DocNade(DocNadeModel::from_parts(
                tree,
                activation,
                take("embedding")?,
                take("hidden_bias")?,
                take("node_weight")?,
                take("node_bias")?,
            )?)
        }
        "deep_docnade" => {
            let widths: Vec<usize> = require(&fields, "layers")?
                .split(',')
                .map(|w| {
                    w.parse()
                        .map_err(|_| Error::Config("bad layer width".into()))
                })
                .collect::<Result<_>>()?;
            let mut layers = Vec::with_capacity(widths.len());
            for n in 1..=widths.len() {
                layers.push(DeepLayer {
                    weight: take(&format!("layer{n}_weight"))?,
                    bias: take(&format!("layer{n}_bias"))?,
                });
            }
            Model::DeepDocNade(DeepDocNadeModel::from_parts(
                vocab_size,
                activation,
                layers,
                take("out_weight")?,
                take("out_bias")?,
            )?)
        }
        "docnade_lm" => {
            let ngram: usize = require(&fields, "ngram")?
                .parse()
                .map_err(|_| Error::Config("bad ngram".into()))?;
            let class_of: Vec<u32> = require(&fields, "class_of")?
                .split_whitespace()
                .map(|c| c.parse().map_err(|_| Error::Config("bad class id".into())))
                .collect::<Result<_>>()?;
            if class_of.len() != vocab_size {
                return Err(Error::Config(format!(
                    "class table covers {} of {} words",
                    class_of.len(),
                    vocab_size
                )));
            }
            let partition = ClassPartition::from_class_of(class_of)?;
            let use_dn = require(&fields, "document_context")? == "true";
            let position_weights = (1..ngram)
                .map(|k| take(&format!("ngram_weight_{k}")))
                .collect::<Result<Vec<_>>>()?;
            Model::DocNadeLm(DocNadeLmModel::from_parts(
                ngram,
                partition,
                activation,
                use_dn,
                take("dn_embedding")?,
                take("lm_embedding")?,
                position_weights,
                take("hidden_bias")?,
                take("class_weight")?,
                take("class_bias")?,
                take("word_weight")?,
                take("word_bias")?,
            )?)
        }
        other => return Err(Error::Config(format!("unknown model kind `{other}`"))),
    };
    Ok((model, meta))
}

fn parse_header(header: &str) -> Result<BTreeMap<String, String>> {
    let mut fields = BTreeMap::new();
    for line in header.lines() {
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("bad header line `{line}`")))?;
        fields.insert(k.to_owned(), v.to_owned());
    }
    Ok(fields)
}

fn require<'m>(fields: &'m BTreeMap<String, String>, key: &str) -> Result<&'m str> {
    fields
        .get(key)
        .map(String::as_str)
        .ok_or_else(|| Error::Config(format!("missing header field `{key}`")))
}
