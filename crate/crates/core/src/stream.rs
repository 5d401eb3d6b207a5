//! Stream records, edge-list parsing and the bipartite adjacency snapshot.
//!
//! The i-side (users) and j-side (items) live in separate id namespaces: the
//! same external label on both sides denotes two distinct vertices.

use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use rustc_hash::{FxHashMap, FxHashSet};
use thiserror::Error;

pub type VertexId = u32;
pub type Timestamp = u64;

/// Partition of a bipartite vertex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    I,
    J,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::I => Side::J,
            Side::J => Side::I,
        }
    }
}

/// One timestamped edge insertion. Deletions and updates are not modelled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct StreamRecord {
    pub tau: Timestamp,
    pub i: VertexId,
    pub j: VertexId,
}

impl StreamRecord {
    pub fn new(tau: Timestamp, i: VertexId, j: VertexId) -> Self {
        StreamRecord { tau, i, j }
    }
}

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: missing field `{field}`")]
    MissingField { line: usize, field: &'static str },
    #[error("line {line}: invalid timestamp {value:?}")]
    InvalidTimestamp { line: usize, value: String },
    #[error("line {line}: negative timestamp {value}")]
    NegativeTimestamp { line: usize, value: i64 },
}

#[derive(Debug, Error)]
pub enum StreamError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Delimiter {
    Whitespace,
    Char(char),
}

/// Column layout of an edge-list file. Extra columns are ignored, so KONECT
/// style `user item weight time` files work with `tau_col = 3`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EdgeListFormat {
    pub delimiter: Delimiter,
    pub i_col: usize,
    pub j_col: usize,
    pub tau_col: usize,
}

impl Default for EdgeListFormat {
    fn default() -> Self {
        EdgeListFormat {
            delimiter: Delimiter::Whitespace,
            i_col: 0,
            j_col: 1,
            tau_col: 2,
        }
    }
}

impl EdgeListFormat {
    pub fn comma() -> Self {
        EdgeListFormat {
            delimiter: Delimiter::Char(','),
            ..Default::default()
        }
    }

    pub fn with_columns(mut self, i_col: usize, j_col: usize, tau_col: usize) -> Self {
        self.i_col = i_col;
        self.j_col = j_col;
        self.tau_col = tau_col;
        self
    }

    fn split<'a>(&self, line: &'a str) -> Vec<&'a str> {
        match self.delimiter {
            Delimiter::Whitespace => line.split_whitespace().collect(),
            Delimiter::Char(c) => line.split(c).map(str::trim).collect(),
        }
    }
}

/// Maps external string labels to dense per-side integer ids.
#[derive(Clone, Debug, Default)]
pub struct Interner {
    ids: [FxHashMap<String, VertexId>; 2],
    names: [Vec<String>; 2],
}

impl Interner {
    pub fn new() -> Self {
        Self::default()
    }

    fn slot(side: Side) -> usize {
        match side {
            Side::I => 0,
            Side::J => 1,
        }
    }

    pub fn intern(&mut self, side: Side, label: &str) -> VertexId {
        let s = Self::slot(side);
        if let Some(&id) = self.ids[s].get(label) {
            return id;
        }
        let id = self.names[s].len() as VertexId;
        self.names[s].push(label.to_owned());
        self.ids[s].insert(label.to_owned(), id);
        id
    }

    pub fn get(&self, side: Side, label: &str) -> Option<VertexId> {
        self.ids[Self::slot(side)].get(label).copied()
    }

    pub fn name(&self, side: Side, id: VertexId) -> Option<&str> {
        self.names[Self::slot(side)]
            .get(id as usize)
            .map(String::as_str)
    }

    pub fn len(&self, side: Side) -> usize {
        self.names[Self::slot(side)].len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.iter().all(Vec::is_empty)
    }
}

/// Stateful line parser; owns the interner so ids stay dense across a file.
#[derive(Clone, Debug, Default)]
pub struct RecordParser {
    format: EdgeListFormat,
    interner: Interner,
}

impl RecordParser {
    pub fn new(format: EdgeListFormat) -> Self {
        RecordParser {
            format,
            interner: Interner::new(),
        }
    }

    pub fn interner(&self) -> &Interner {
        &self.interner
    }

    pub fn into_interner(self) -> Interner {
        self.interner
    }

    /// Parses one data line. Comment and blank lines are the caller's concern;
    /// see [`RecordParser::parse_line`].
    pub fn parse_record(&mut self, line: &str, line_no: usize) -> Result<StreamRecord, ParseError> {
        let fields = self.format.split(line);
        let field = |idx: usize, name: &'static str| {
            fields
                .get(idx)
                .copied()
                .filter(|f| !f.is_empty())
                .ok_or(ParseError::MissingField { line: line_no, field: name })
        };
        let i = field(self.format.i_col, "i")?;
        let j = field(self.format.j_col, "j")?;
        let tau_raw = field(self.format.tau_col, "tau")?;
        let tau = parse_timestamp(tau_raw, line_no)?;
        let i = self.interner.intern(Side::I, i);
        let j = self.interner.intern(Side::J, j);
        Ok(StreamRecord { tau, i, j })
    }

    /// Like `parse_record` but returns `None` for blank lines and `%`/`#` comments.
    pub fn parse_line(&mut self, line: &str, line_no: usize) -> Result<Option<StreamRecord>, ParseError> {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') || trimmed.starts_with('#') {
            return Ok(None);
        }
        self.parse_record(trimmed, line_no).map(Some)
    }
}

fn parse_timestamp(raw: &str, line: usize) -> Result<Timestamp, ParseError> {
    match raw.parse::<i64>() {
        Ok(v) if v < 0 => Err(ParseError::NegativeTimestamp { line, value: v }),
        Ok(v) => Ok(v as Timestamp),
        Err(_) => Err(ParseError::InvalidTimestamp {
            line,
            value: raw.to_owned(),
        }),
    }
}

/// A finite, time-ordered stream of records, plus the label mapping if it was
/// loaded from a file.
#[derive(Clone, Debug, Default)]
pub struct StreamSource {
    records: Vec<StreamRecord>,
    interner: Option<Interner>,
}

impl StreamSource {
    /// Builds a source, stably sorting by timestamp so equal stamps keep their
    /// original order.
    pub fn from_records(mut records: Vec<StreamRecord>) -> Self {
        records.sort_by_key(|r| r.tau);
        StreamSource {
            records,
            interner: None,
        }
    }

    /// Builds a source without reordering. Used to replay out-of-order input.
    pub fn from_records_unsorted(records: Vec<StreamRecord>) -> Self {
        StreamSource {
            records,
            interner: None,
        }
    }

    pub fn read_path(path: impl AsRef<Path>, format: EdgeListFormat) -> Result<Self, StreamError> {
        let file = File::open(path)?;
        Self::from_reader(BufReader::new(file), format, true)
    }

    pub fn from_reader<R: BufRead>(reader: R, format: EdgeListFormat, sort: bool) -> Result<Self, StreamError> {
        let mut parser = RecordParser::new(format);
        let mut records = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            if let Some(r) = parser.parse_line(&line, idx + 1)? {
                records.push(r);
            }
        }
        let mut source = if sort {
            Self::from_records(records)
        } else {
            Self::from_records_unsorted(records)
        };
        source.interner = Some(parser.into_interner());
        Ok(source)
    }

    pub fn records(&self) -> &[StreamRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<StreamRecord> {
        self.records
    }

    pub fn interner(&self) -> Option<&Interner> {
        self.interner.as_ref()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Distinct timestamps in stream order.
    pub fn unique_timestamps(&self) -> Vec<Timestamp> {
        let mut out: Vec<Timestamp> = self.records.iter().map(|r| r.tau).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Average records per unique timestamp.
    pub fn average_rate(&self) -> f64 {
        let n_t = self.unique_timestamps().len();
        if n_t == 0 {
            0.0
        } else {
            self.records.len() as f64 / n_t as f64
        }
    }

    /// Writes the stream as `i j tau` lines, using the original labels when known.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> io::Result<()> {
        for r in &self.records {
            match &self.interner {
                Some(names) => {
                    let i = names.name(Side::I, r.i).unwrap_or_default();
                    let j = names.name(Side::J, r.j).unwrap_or_default();
                    writeln!(out, "{i} {j} {}", r.tau)?;
                }
                None => writeln!(out, "{} {} {}", r.i, r.j, r.tau)?,
            }
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn edge_key(i: VertexId, j: VertexId) -> u64 {
    ((i as u64) << 32) | j as u64
}

#[inline]
pub(crate) fn split_key(key: u64) -> (VertexId, VertexId) {
    ((key >> 32) as VertexId, key as VertexId)
}

/// In-memory adjacency of a window's graph.
///
/// Neighbour lists are kept in insertion order; membership goes through the
/// edge set, so each list behaves as a set. Counting code builds its own
/// sorted, compacted view (see [`crate::exact`]).
#[derive(Clone, Debug, Default)]
pub struct BipartiteSnapshot {
    i_adj: FxHashMap<VertexId, Vec<VertexId>>,
    j_adj: FxHashMap<VertexId, Vec<VertexId>>,
    edges: FxHashSet<u64>,
    i_first_seen: FxHashMap<VertexId, Timestamp>,
    j_first_seen: FxHashMap<VertexId, Timestamp>,
    edge_stamps: Option<FxHashMap<u64, Timestamp>>,
}

impl BipartiteSnapshot {
    pub fn new() -> Self {
        Self::default()
    }

    /// A snapshot that also remembers the arrival stamp of every edge.
    pub fn with_edge_stamps() -> Self {
        BipartiteSnapshot {
            edge_stamps: Some(FxHashMap::default()),
            ..Default::default()
        }
    }

    /// Builds a snapshot from untimed `(i, j)` pairs; every stamp is 0.
    pub fn from_edges<I: IntoIterator<Item = (VertexId, VertexId)>>(edges: I) -> Self {
        let mut g = Self::new();
        for (i, j) in edges {
            g.insert_edge(i, j, 0);
        }
        g
    }

    pub fn tracks_edge_stamps(&self) -> bool {
        self.edge_stamps.is_some()
    }

    /// Inserts the record's edge. Returns `false` (and changes nothing) for a
    /// duplicate edge.
    pub fn ingest(&mut self, r: &StreamRecord) -> bool {
        self.insert_edge(r.i, r.j, r.tau)
    }

    pub fn insert_edge(&mut self, i: VertexId, j: VertexId, tau: Timestamp) -> bool {
        let key = edge_key(i, j);
        if !self.edges.insert(key) {
            return false;
        }
        self.i_adj.entry(i).or_default().push(j);
        self.j_adj.entry(j).or_default().push(i);
        self.i_first_seen.entry(i).or_insert(tau);
        self.j_first_seen.entry(j).or_insert(tau);
        if let Some(stamps) = self.edge_stamps.as_mut() {
            stamps.insert(key, tau);
        }
        true
    }

    /// Removes one edge; vertices left without neighbours disappear.
    pub fn remove_edge(&mut self, i: VertexId, j: VertexId) -> bool {
        let key = edge_key(i, j);
        if !self.edges.remove(&key) {
            return false;
        }
        if let Some(stamps) = self.edge_stamps.as_mut() {
            stamps.remove(&key);
        }
        remove_neighbor(&mut self.i_adj, &mut self.i_first_seen, i, j);
        remove_neighbor(&mut self.j_adj, &mut self.j_first_seen, j, i);
        true
    }

    /// Drops every edge whose arrival stamp is `<= cutoff`. Requires edge stamps;
    /// vertices left without neighbours are removed, including their first-seen stamp.
    pub fn retire_until(&mut self, cutoff: Timestamp) -> usize {
        let Some(stamps) = self.edge_stamps.as_mut() else {
            return 0;
        };
        let retired: Vec<u64> = stamps
            .iter()
            .filter(|(_, &t)| t <= cutoff)
            .map(|(&k, _)| k)
            .collect();
        for key in &retired {
            stamps.remove(key);
            self.edges.remove(key);
            let (i, j) = split_key(*key);
            remove_neighbor(&mut self.i_adj, &mut self.i_first_seen, i, j);
            remove_neighbor(&mut self.j_adj, &mut self.j_first_seen, j, i);
        }
        retired.len()
    }

    pub fn clear(&mut self) {
        self.i_adj.clear();
        self.j_adj.clear();
        self.edges.clear();
        self.i_first_seen.clear();
        self.j_first_seen.clear();
        if let Some(s) = self.edge_stamps.as_mut() {
            s.clear();
        }
    }

    pub fn contains_edge(&self, i: VertexId, j: VertexId) -> bool {
        self.edges.contains(&edge_key(i, j))
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn vertex_count(&self, side: Side) -> usize {
        self.adj(side).len()
    }

    /// Degree of `v`, or `None` if the vertex is absent on that side.
    pub fn degree(&self, v: VertexId, side: Side) -> Option<usize> {
        self.adj(side).get(&v).map(Vec::len)
    }

    pub fn neighbors(&self, v: VertexId, side: Side) -> &[VertexId] {
        self.adj(side).get(&v).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn vertices(&self, side: Side) -> impl Iterator<Item = VertexId> + '_ {
        self.adj(side).keys().copied()
    }

    /// `(vertex, degree)` pairs for one side, in unspecified order.
    pub fn degrees(&self, side: Side) -> impl Iterator<Item = (VertexId, usize)> + '_ {
        self.adj(side).iter().map(|(&v, n)| (v, n.len()))
    }

    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        self.edges.iter().map(|&k| split_key(k))
    }

    /// Edges sorted by `(i, j)`.
    pub fn sorted_edges(&self) -> Vec<(VertexId, VertexId)> {
        let mut out: Vec<_> = self.edges().collect();
        out.sort_unstable();
        out
    }

    pub fn first_seen(&self, v: VertexId, side: Side) -> Option<Timestamp> {
        match side {
            Side::I => self.i_first_seen.get(&v).copied(),
            Side::J => self.j_first_seen.get(&v).copied(),
        }
    }

    pub fn edge_stamp(&self, i: VertexId, j: VertexId) -> Option<Timestamp> {
        self.edge_stamps.as_ref()?.get(&edge_key(i, j)).copied()
    }

    pub fn average_degree(&self, side: Side) -> f64 {
        let n = self.vertex_count(side);
        if n == 0 {
            0.0
        } else {
            self.edge_count() as f64 / n as f64
        }
    }

    pub(crate) fn adj(&self, side: Side) -> &FxHashMap<VertexId, Vec<VertexId>> {
        match side {
            Side::I => &self.i_adj,
            Side::J => &self.j_adj,
        }
    }
}

fn remove_neighbor(
    adj: &mut FxHashMap<VertexId, Vec<VertexId>>,
    first_seen: &mut FxHashMap<VertexId, Timestamp>,
    v: VertexId,
    n: VertexId,
) {
    if let Some(list) = adj.get_mut(&v) {
        list.retain(|&x| x != n);
        if list.is_empty() {
            adj.remove(&v);
            first_seen.remove(&v);
        }
    }
}
