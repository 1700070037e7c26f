use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sparse::SparseMatrix;
use crate::tensor::Tensor;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub name: String,
    pub nodes: usize,
    pub features: usize,
    pub classes: usize,
}

/// Boolean node masks. A node belongs to at most one of them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<bool>,
    pub val: Vec<bool>,
    pub test: Vec<bool>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SplitIds {
    train: Vec<usize>,
    val: Vec<usize>,
    test: Vec<usize>,
}

impl Split {
    pub fn from_ids(n: usize, train: &[usize], val: &[usize], test: &[usize]) -> Result<Self> {
        let mut owner = vec![None::<&str>; n];
        let mut masks = [vec![false; n], vec![false; n], vec![false; n]];
        for ((name, ids), mask) in [("train", train), ("val", val), ("test", test)]
            .into_iter()
            .zip(masks.iter_mut())
        {
            for &i in ids {
                if i >= n {
                    return Err(Error::Dataset(format!("{name} id {i} out of range for {n} nodes")));
                }
                if let Some(prev) = owner[i] {
                    return Err(Error::Dataset(format!("node {i} is in both {prev} and {name}")));
                }
                owner[i] = Some(name);
                mask[i] = true;
            }
        }
        let [train, val, test] = masks;
        Ok(Self { train, val, test })
    }

    pub fn sizes(&self) -> (usize, usize, usize) {
        let count = |m: &[bool]| m.iter().filter(|&&b| b).count();
        (count(&self.train), count(&self.val), count(&self.test))
    }

    fn ids(mask: &[bool]) -> Vec<usize> {
        mask.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect()
    }

    fn to_ids(&self) -> SplitIds {
        SplitIds {
            train: Self::ids(&self.train),
            val: Self::ids(&self.val),
            test: Self::ids(&self.test),
        }
    }
}

/// A node-classification graph held in memory.
#[derive(Clone, Debug)]
pub struct GraphDataset<T: Scalar> {
    pub name: String,
    /// Symmetric binary adjacency without self-loops.
    pub adjacency: SparseMatrix<T>,
    /// `[n × d_in]`.
    pub features: Tensor<T>,
    pub labels: Vec<usize>,
    pub num_classes: usize,
    /// Splits shipped with the package, possibly empty.
    pub splits: Vec<Split>,
}

impl<T: Scalar> GraphDataset<T> {
    /// Builds a dataset from an undirected edge list. Self-edges and
    /// duplicates are dropped.
    pub fn from_edges(
        name: impl Into<String>,
        edges: impl IntoIterator<Item = (usize, usize)>,
        features: Tensor<T>,
        labels: Vec<usize>,
        num_classes: usize,
    ) -> Result<Self> {
        let n = labels.len();
        let (rows, _) = features.dims2("GraphDataset")?;
        if rows != n {
            return Err(Error::Dataset(format!("{rows} feature rows for {n} labels")));
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= num_classes) {
            return Err(Error::Dataset(format!("label {bad} not below {num_classes} classes")));
        }
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::Dataset(format!("edge ({u}, {v}) references a node id ≥ {n}")));
            }
            if u != v {
                set.insert((u.min(v), u.max(v)));
            }
        }
        let triplets = set.iter().flat_map(|&(u, v)| [(u, v, T::one()), (v, u, T::one())]);
        let adjacency = SparseMatrix::from_triplets(n, n, triplets)?;
        if !adjacency.is_symmetric() {
            return Err(Error::Dataset("adjacency is not symmetric".into()));
        }
        Ok(Self {
            name: name.into(),
            adjacency,
            features: features.detach(),
            labels,
            num_classes,
            splits: Vec::new(),
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.labels.len()
    }

    pub fn num_features(&self) -> usize {
        self.features.shape()[1]
    }

    /// Undirected edges `(i, j)` with `i < j`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.adjacency
            .iter()
            .filter(|&(i, j, _)| i < j)
            .map(|(i, j, _)| (i, j))
            .collect()
    }

    pub fn meta(&self) -> DatasetMeta {
        DatasetMeta {
            name: self.name.clone(),
            nodes: self.num_nodes(),
            features: self.num_features(),
            classes: self.num_classes,
        }
    }

    /// Copy with each feature row scaled to sum to one. All-zero rows stay zero.
    pub fn row_normalized(&self) -> Self {
        let d = self.num_features();
        let mut data = self.features.to_vec();
        for row in data.chunks_mut(d.max(1)) {
            let s: T = row.iter().copied().sum();
            if s != T::zero() {
                row.iter_mut().for_each(|v| *v /= s);
            }
        }
        let mut out = self.clone();
        out.features = Tensor::constant(vec![self.num_nodes(), d], data);
        out
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

/// Non-empty lines with their 1-based line numbers.
fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn parse_field<V: std::str::FromStr>(path: &Path, line: usize, field: &str) -> Result<V> {
    field
        .parse()
        .map_err(|_| parse_err(path, line, format!("cannot parse {field:?}")))
}

/// Reads a dataset package directory.
pub fn load_dataset<T: Scalar>(dir: impl AsRef<Path>) -> Result<GraphDataset<T>> {
    let dir = dir.as_ref();
    let meta_path = dir.join("meta.json");
    let meta: DatasetMeta =
        serde_json::from_str(&read(&meta_path)?).map_err(|e| parse_err(&meta_path, e.line(), e.to_string()))?;
    let n = meta.nodes;

    let path = dir.join("edges.tsv");
    let mut edges = Vec::new();
    for (ln, line) in lines(&read(&path)?) {
        let mut it = line.split_whitespace();
        let (Some(a), Some(b), None) = (it.next(), it.next(), it.next()) else {
            return Err(parse_err(&path, ln, "expected two node ids"));
        };
        let (u, v): (usize, usize) = (parse_field(&path, ln, a)?, parse_field(&path, ln, b)?);
        if u >= n || v >= n {
            return Err(parse_err(&path, ln, format!("node id out of range for {n} nodes")));
        }
        edges.push((u, v));
    }

    let path = dir.join("features.tsv");
    let d = meta.features;
    let mut feats = Vec::with_capacity(n * d);
    let mut rows = 0;
    for (ln, line) in lines(&read(&path)?) {
        let before = feats.len();
        for f in line.split('\t') {
            let v: f64 = parse_field(&path, ln, f.trim())?;
            if !v.is_finite() {
                return Err(parse_err(&path, ln, "non-finite feature"));
            }
            feats.push(T::lit(v));
        }
        if feats.len() - before != d {
            return Err(parse_err(
                &path,
                ln,
                format!("expected {d} features, got {}", feats.len() - before),
            ));
        }
        rows += 1;
    }
    if rows != n {
        return Err(Error::Dataset(format!("{}: {rows} rows for {n} nodes", path.display())));
    }

    let path = dir.join("labels.tsv");
    let mut labels = Vec::with_capacity(n);
    for (ln, line) in lines(&read(&path)?) {
        let y: usize = parse_field(&path, ln, line)?;
        if y >= meta.classes {
            return Err(parse_err(
                &path,
                ln,
                format!("label {y} not below {} classes", meta.classes),
            ));
        }
        labels.push(y);
    }
    if labels.len() != n {
        return Err(Error::Dataset(format!(
            "{}: {} labels for {n} nodes",
            path.display(),
            labels.len()
        )));
    }

    let features = Tensor::constant(vec![n, d], feats);
    let mut ds = GraphDataset::from_edges(meta.name, edges, features, labels, meta.classes)?;

    let path = dir.join("splits.json");
    if path.exists() {
        let raw: Vec<SplitIds> =
            serde_json::from_str(&read(&path)?).map_err(|e| parse_err(&path, e.line(), e.to_string()))?;
        ds.splits = raw
            .iter()
            .map(|s| Split::from_ids(n, &s.train, &s.val, &s.test))
            .collect::<Result<_>>()?;
    }
    Ok(ds)
}

fn write(path: PathBuf, text: &str) -> Result<()> {
    fs::write(&path, text).map_err(|e| Error::io(path, e))
}

/// Writes `ds` as a package that [`load_dataset`] reads back identically.
pub fn save_dataset<T: Scalar>(ds: &GraphDataset<T>, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write(dir.join("meta.json"), &serde_json::to_string_pretty(&ds.meta())?)?;

    let mut s = String::new();
    for (i, j) in ds.edges() {
        let _ = writeln!(s, "{i}\t{j}");
    }
    write(dir.join("edges.tsv"), &s)?;

    let d = ds.num_features();
    let mut s = String::new();
    for row in ds.features.data().chunks(d.max(1)) {
        let fields: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        s.push_str(&fields.join("\t"));
        s.push('\n');
    }
    write(dir.join("features.tsv"), &s)?;

    let mut s = String::new();
    for y in &ds.labels {
        let _ = writeln!(s, "{y}");
    }
    write(dir.join("labels.tsv"), &s)?;

    if !ds.splits.is_empty() {
        let ids: Vec<SplitIds> = ds.splits.iter().map(Split::to_ids).collect();
        write(dir.join("splits.json"), &serde_json::to_string(&ids)?)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> GraphDataset<f64> {
        let x = Tensor::from_rows(&[vec![1.0, 0.0], vec![0.5, 0.5], vec![0.0, 2.0]]);
        GraphDataset::from_edges("tiny", [(0, 1), (1, 0), (1, 1), (2, 1)], x, vec![0, 1, 1], 2).unwrap()
    }

    #[test]
    fn edges_are_deduplicated_and_symmetrized() {
        let ds = tiny();
        assert_eq!(ds.edges(), vec![(0, 1), (1, 2)]);
        assert_eq!(ds.adjacency.nnz(), 4);
        assert!(!ds.adjacency.contains(1, 1));
    }

    #[test]
    fn dangling_ids_are_rejected() {
        let x = Tensor::<f64>::zeros(&[2, 1]);
        let r = GraphDataset::from_edges("bad", [(0, 2)], x, vec![0, 0], 1);
        assert!(matches!(r, Err(Error::Dataset(_))));
    }

    #[test]
    fn row_normalization() {
        let ds = tiny().row_normalized();
        assert_eq!(ds.features.data(), &[1.0, 0.0, 0.5, 0.5, 0.0, 1.0]);
    }

    #[test]
    fn split_ids_must_be_disjoint() {
        assert!(Split::from_ids(3, &[0], &[0], &[1]).is_err());
        assert!(Split::from_ids(3, &[0], &[1], &[3]).is_err());
        assert_eq!(Split::from_ids(3, &[0], &[1], &[2]).unwrap().sizes(), (1, 1, 1));
    }

    #[test]
    fn round_trip_through_disk() {
        let mut ds = tiny();
        ds.features = Tensor::from_rows(&[vec![0.1, 1e-300], vec![-3.25, 7.0], vec![1.0 / 3.0, 0.0]]);
        ds.splits = vec![Split::from_ids(3, &[2], &[0], &[1]).unwrap()];
        let dir = tempfile::tempdir().unwrap();
        save_dataset(&ds, dir.path()).unwrap();
        let back: GraphDataset<f64> = load_dataset(dir.path()).unwrap();
        assert_eq!(back.meta(), ds.meta());
        assert_eq!(back.adjacency, ds.adjacency);
        assert_eq!(back.features.data(), ds.features.data());
        assert_eq!(back.labels, ds.labels);
        assert_eq!(back.splits, ds.splits);
    }

    #[test]
    fn missing_file_names_path() {
        let dir = tempfile::tempdir().unwrap();
        let err = load_dataset::<f64>(dir.path()).unwrap_err();
        assert!(err.to_string().contains("meta.json"));
    }

    #[test]
    fn out_of_range_edge_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        save_dataset(&tiny(), dir.path()).unwrap();
        fs::write(dir.path().join("edges.tsv"), "0\t1\n1\t9\n").unwrap();
        let err = load_dataset::<f64>(dir.path()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }
}
