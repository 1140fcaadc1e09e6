//! On-disk corpus formats.
//!
//! * Vocabulary file: one token per line; the 0-based line number is the word
//!   id. An optional tab-separated second column holds the training
//!   frequency.
//! * Bag corpus (`.bow`): one document per line,
//!   `doc_id<TAB>label,label,…<TAB>id:count id:count …` (empty label field
//!   allowed).
//! * Sequence corpus (`.seq`): one document per line,
//!   `doc_id<TAB>label,…<TAB>id id id …`.
//!
//! All ids are decimal ASCII and files are newline-terminated.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{DocBody, Document, Vocabulary, WordCounts};
use crate::{Error, Result};

pub fn write_vocab(vocab: &Vocabulary, path: &Path) -> Result<()> {
    let mut out = String::new();
    for id in 0..vocab.len() as u32 {
        let _ = writeln!(out, "{}\t{}", vocab.token(id).unwrap(), vocab.frequency(id));
    }
    fs::write(path, out).map_err(Error::io(path))
}

pub fn read_vocab(path: &Path) -> Result<Vocabulary> {
    let text = fs::read_to_string(path).map_err(Error::io(path))?;
    let mut tokens = Vec::new();
    let mut frequencies = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let (token, freq) = match line.split_once('\t') {
            Some((t, f)) => {
                let freq = f
                    .parse::<u64>()
                    .map_err(|_| parse_err(path, lineno, "bad frequency"))?;
                (t, freq)
            }
            None => (line, 0),
        };
        if token.is_empty() {
            return Err(parse_err(path, lineno, "empty token"));
        }
        tokens.push(token.to_owned());
        frequencies.push(freq);
    }
    if tokens.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Vocabulary::from_tokens(tokens, frequencies)
}

pub fn write_bow(docs: &[Document], path: &Path) -> Result<()> {
    let mut out = String::new();
    for doc in docs {
        let counts = doc.counts();
        let body = counts
            .iter()
            .map(|(id, n)| format!("{id}:{n}"))
            .collect::<Vec<_>>()
            .join(" ");
        let _ = writeln!(
            out,
            "{}\t{}\t{}",
            doc.source_id,
            join_labels(&doc.labels),
            body
        );
    }
    fs::write(path, out).map_err(Error::io(path))
}

pub fn read_bow(path: &Path) -> Result<Vec<Document>> {
    let text = fs::read_to_string(path).map_err(Error::io(path))?;
    let mut docs = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let (source_id, labels, body) = split_line(path, lineno, line)?;
        let mut counts = WordCounts::new();
        for entry in body.split_whitespace() {
            let (id, n) = entry
                .split_once(':')
                .ok_or_else(|| parse_err(path, lineno, "expected id:count"))?;
            let id = id
                .parse::<u32>()
                .map_err(|_| parse_err(path, lineno, "bad word id"))?;
            let n = n
                .parse::<u32>()
                .map_err(|_| parse_err(path, lineno, "bad count"))?;
            if n == 0 {
                return Err(parse_err(path, lineno, "zero count"));
            }
            counts.add(id, n);
        }
        docs.push(Document::bag(source_id, labels, counts));
    }
    Ok(docs)
}

pub fn write_seq(docs: &[Document], path: &Path) -> Result<()> {
    let mut out = String::new();
    for doc in docs {
        let ids = match &doc.body {
            DocBody::Sequence(ids) => ids,
            DocBody::Bag(_) => {
                return Err(Error::Config(format!(
                    "document `{}` has no word order; cannot write a sequence file",
                    doc.source_id
                )))
            }
        };
        let body = ids.iter().map(u32::to_string).collect::<Vec<_>>().join(" ");
        let _ = writeln!(
            out,
            "{}\t{}\t{}",
            doc.source_id,
            join_labels(&doc.labels),
            body
        );
    }
    fs::write(path, out).map_err(Error::io(path))
}

pub fn read_seq(path: &Path) -> Result<Vec<Document>> {
    let text = fs::read_to_string(path).map_err(Error::io(path))?;
    let mut docs = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let (source_id, labels, body) = split_line(path, lineno, line)?;
        let ids = body
            .split_whitespace()
            .map(|tok| {
                tok.parse::<u32>()
                    .map_err(|_| parse_err(path, lineno, "bad word id"))
            })
            .collect::<Result<Vec<u32>>>()?;
        docs.push(Document::sequence(source_id, labels, ids));
    }
    Ok(docs)
}

fn split_line(path: &Path, lineno: usize, line: &str) -> Result<(String, Vec<u32>, String)> {
    let mut fields = line.splitn(3, '\t');
    let source_id = fields
        .next()
        .filter(|s| !s.is_empty())
        .ok_or_else(|| parse_err(path, lineno, "missing document id"))?;
    let labels_field = fields
        .next()
        .ok_or_else(|| parse_err(path, lineno, "missing label field"))?;
    let body = fields
        .next()
        .ok_or_else(|| parse_err(path, lineno, "missing body field"))?;
    let labels = parse_labels(path, lineno, labels_field)?;
    Ok((source_id.to_owned(), labels, body.to_owned()))
}

fn parse_labels(path: &Path, lineno: usize, field: &str) -> Result<Vec<u32>> {
    if field.is_empty() {
        return Ok(Vec::new());
    }
    field
        .split(',')
        .map(|l| {
            l.parse::<u32>()
                .map_err(|_| parse_err(path, lineno, "bad label id"))
        })
        .collect()
}

fn join_labels(labels: &[u32]) -> String {
    labels
        .iter()
        .map(u32::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

fn parse_err(path: &Path, lineno: usize, message: &str) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line: lineno + 1,
        message: message.to_owned(),
    }
}
