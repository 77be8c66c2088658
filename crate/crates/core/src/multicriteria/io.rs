use std::io::{BufRead, Write};

use super::ScoredObject;
use crate::error::{param, Error, Result};

/// A multicriteria instance with object placement.
///
/// Text format: a header line `m count`, then one line per object with its
/// id, owning PE (1-based) and `m` scores, all separated by whitespace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub m: usize,
    /// Objects of every PE, PE 1 first.
    pub per_pe: Vec<Vec<ScoredObject>>,
}

impl Instance {
    pub fn p(&self) -> usize {
        self.per_pe.len()
    }

    pub fn len(&self) -> usize {
        self.per_pe.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn all_objects(&self) -> impl Iterator<Item = &ScoredObject> {
        self.per_pe.iter().flatten()
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn field<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    tok.parse().map_err(|_| parse_err(line, format!("bad {what} {tok:?}")))
}

/// Reads an instance for `p` PEs. Blank lines and lines starting with `#`
/// are skipped.
pub fn read_instance(reader: impl BufRead, p: usize) -> Result<Instance> {
    if p == 0 {
        return param("p must be at least 1");
    }
    let mut lines = reader
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| l.as_ref().map_or(true, |l| !l.trim().is_empty() && !l.trim_start().starts_with('#')));
    let (hl, header) = lines.next().ok_or_else(|| parse_err(1, "empty instance"))?;
    let header = header?;
    let mut tok = header.split_whitespace();
    let m: usize = field(tok.next(), hl, "criterion count")?;
    let count: usize = field(tok.next(), hl, "object count")?;
    if m == 0 {
        return Err(parse_err(hl, "criterion count must be positive"));
    }
    let mut per_pe = vec![Vec::new(); p];
    let mut read = 0;
    for (ln, line) in lines {
        let line = line?;
        let mut tok = line.split_whitespace();
        let id: u64 = field(tok.next(), ln, "object id")?;
        let owner: usize = field(tok.next(), ln, "owning PE")?;
        if owner == 0 || owner > p {
            return Err(parse_err(ln, format!("owning PE {owner} outside 1..={p}")));
        }
        let scores = (0..m).map(|_| field(tok.next(), ln, "score")).collect::<Result<Vec<u64>>>()?;
        if tok.next().is_some() {
            return Err(parse_err(ln, format!("more than {m} scores")));
        }
        per_pe[owner - 1].push(ScoredObject::new(id, scores));
        read += 1;
    }
    if read != count {
        return Err(parse_err(hl, format!("header announces {count} objects, found {read}")));
    }
    Ok(Instance { m, per_pe })
}

pub fn write_instance(mut w: impl Write, inst: &Instance) -> Result<()> {
    writeln!(w, "{} {}", inst.m, inst.len())?;
    for (pe, objs) in inst.per_pe.iter().enumerate() {
        for o in objs {
            write!(w, "{} {}", o.id, pe + 1)?;
            for s in &o.scores {
                write!(w, " {s}")?;
            }
            writeln!(w)?;
        }
    }
    Ok(())
}
