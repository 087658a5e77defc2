use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::split::SplitSpec;
use crate::linalg::one_hot;
use crate::{Error, Result};

const META: &str = "meta.json";
const EDGES: &str = "edges.csv";
const FEATURES: &str = "features.csv";
const LABELS: &str = "labels.csv";
const SPLITS: &str = "splits.json";

/// An undirected attributed graph with clean class labels.
///
/// Edges are stored once per unordered pair as `(src, dst)` with `src < dst`,
/// sorted ascending. Self-loops are never stored; they are added when the
/// adjacency is normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphBundle {
    num_classes: usize,
    edges: Vec<(usize, usize)>,
    features: Array2<f64>,
    labels: Vec<usize>,
    split: Option<SplitSpec>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Meta {
    num_nodes: usize,
    num_features: usize,
    num_classes: usize,
}

impl GraphBundle {
    /// Validate and assemble a bundle. `edges` may be given in any order and
    /// orientation but must not contain self-loops or repeated pairs.
    pub fn new(
        features: Array2<f64>,
        labels: Vec<usize>,
        num_classes: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let n = features.nrows();
        if n == 0 {
            return Err(Error::Param("graph must have at least one node".into()));
        }
        if num_classes == 0 {
            return Err(Error::Param("num_classes must be positive".into()));
        }
        if labels.len() != n {
            return Err(Error::Contract(format!(
                "{} labels for {} nodes",
                labels.len(),
                n
            )));
        }
        if let Some(&c) = labels.iter().find(|&&c| c >= num_classes) {
            return Err(Error::Param(format!(
                "class index out of range: {c} >= {num_classes}"
            )));
        }
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::Param(format!(
                    "edge ({a},{b}) has endpoint outside [0, {n})"
                )));
            }
            if a == b {
                return Err(Error::Param(format!("self-loop on node {a}")));
            }
            if !set.insert((a.min(b), a.max(b))) {
                return Err(Error::Param(format!("duplicate edge ({a},{b})")));
            }
        }
        Ok(Self {
            num_classes,
            edges: set.into_iter().collect(),
            features,
            labels,
            split: None,
        })
    }

    pub fn with_split(mut self, split: SplitSpec) -> Result<Self> {
        if split.num_nodes() != self.num_nodes() {
            return Err(Error::Contract(format!(
                "split covers {} nodes, bundle has {}",
                split.num_nodes(),
                self.num_nodes()
            )));
        }
        self.split = Some(split);
        Ok(self)
    }

    pub fn num_nodes(&self) -> usize {
        self.features.nrows()
    }

    pub fn num_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    /// Clean class index per node.
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Clean labels as an `N × C` one-hot matrix.
    pub fn clean_one_hot(&self) -> Array2<f64> {
        one_hot(&self.labels, self.num_classes)
    }

    pub fn split(&self) -> Option<&SplitSpec> {
        self.split.as_ref()
    }

    /// Same graph and labels with replaced features (used after attribute corruption).
    pub fn with_features(&self, features: Array2<f64>) -> Result<Self> {
        if features.dim() != self.features.dim() {
            return Err(Error::Contract(format!(
                "feature shape {:?} does not match {:?}",
                features.dim(),
                self.features.dim()
            )));
        }
        Ok(Self {
            features,
            ..self.clone()
        })
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_usize(file: &Path, line: usize, field: &str) -> Result<usize> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::parse(file, line, format!("expected a node/class index, got {field:?}")))
}

fn data_lines<'a>(
    file: &'a Path,
    text: &'a str,
    header: &'a str,
) -> Result<impl Iterator<Item = (usize, &'a str)> + 'a> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, h)) if h.trim() == header => {}
        Some((n, h)) => {
            return Err(Error::parse(
                file,
                n,
                format!("expected header {header:?}, got {h:?}"),
            ))
        }
        None => return Err(Error::parse(file, 1, format!("missing header {header:?}"))),
    }
    Ok(lines.filter(|(_, l)| !l.trim().is_empty()))
}

fn two_fields<'a>(file: &Path, line: usize, text: &'a str) -> Result<(&'a str, &'a str)> {
    let mut it = text.split(',');
    match (it.next(), it.next(), it.next()) {
        (Some(a), Some(b), None) => Ok((a, b)),
        _ => Err(Error::parse(file, line, "expected exactly two fields")),
    }
}

/// Read a bundle directory (`meta.json`, `edges.csv`, `features.csv`,
/// `labels.csv`, optional `splits.json`) and validate it.
pub fn load_bundle(dir: impl AsRef<Path>) -> Result<GraphBundle> {
    let dir = dir.as_ref();

    let meta_path = dir.join(META);
    let meta: Meta = serde_json::from_str(&read(&meta_path)?).map_err(|e| {
        Error::parse(&meta_path, e.line(), format!("malformed meta.json: {e}"))
    })?;
    let (n, d, c) = (meta.num_nodes, meta.num_features, meta.num_classes);
    if n == 0 {
        return Err(Error::parse(&meta_path, 1, "num_nodes must be positive"));
    }

    let feat_path = dir.join(FEATURES);
    let features = read_matrix_csv(&feat_path)?;
    if features.dim() != (n, d) {
        return Err(Error::parse(
            &feat_path,
            features.nrows(),
            format!("expected {n}×{d} features, got {:?}", features.dim()),
        ));
    }

    let edge_path = dir.join(EDGES);
    let text = read(&edge_path)?;
    let mut edges = Vec::new();
    let mut seen = BTreeSet::new();
    for (lineno, line) in data_lines(&edge_path, &text, "src,dst")? {
        let (a, b) = two_fields(&edge_path, lineno, line)?;
        let (a, b) = (
            parse_usize(&edge_path, lineno, a)?,
            parse_usize(&edge_path, lineno, b)?,
        );
        if a >= n || b >= n {
            return Err(Error::parse(&edge_path, lineno, "node index out of range"));
        }
        if a >= b {
            return Err(Error::parse(&edge_path, lineno, "edge must satisfy src < dst"));
        }
        if !seen.insert((a, b)) {
            return Err(Error::parse(&edge_path, lineno, "duplicate edge"));
        }
        edges.push((a, b));
    }

    let label_path = dir.join(LABELS);
    let text = read(&label_path)?;
    let mut labels: Vec<Option<usize>> = vec![None; n];
    for (lineno, line) in data_lines(&label_path, &text, "node,label")? {
        let (a, b) = two_fields(&label_path, lineno, line)?;
        let node = parse_usize(&label_path, lineno, a)?;
        let class = parse_usize(&label_path, lineno, b)?;
        if node >= n {
            return Err(Error::parse(&label_path, lineno, "node index out of range"));
        }
        if class >= c {
            return Err(Error::parse(&label_path, lineno, "class index out of range"));
        }
        if labels[node].replace(class).is_some() {
            return Err(Error::parse(
                &label_path,
                lineno,
                format!("node {node} labeled twice (labels must be one-hot)"),
            ));
        }
    }
    let labels = labels
        .into_iter()
        .enumerate()
        .map(|(i, l)| {
            l.ok_or_else(|| Error::parse(&label_path, 0, format!("node {i} has no label")))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut bundle = GraphBundle::new(features, labels, c, edges)?;

    let split_path = dir.join(SPLITS);
    if split_path.exists() {
        let split: SplitSpec = serde_json::from_str(&read(&split_path)?).map_err(|e| {
            Error::parse(&split_path, e.line(), format!("malformed splits.json: {e}"))
        })?;
        let split = SplitSpec::new(n, split.labeled().to_vec(), split.unlabeled().to_vec())
            .map_err(|e| Error::parse(&split_path, 1, e.to_string()))?;
        bundle = bundle.with_split(split)?;
    }
    Ok(bundle)
}

/// Headerless CSV of equal-length numeric rows.
pub fn read_matrix_csv(path: impl AsRef<Path>) -> Result<Array2<f64>> {
    let path = path.as_ref();
    let text = read(path)?;
    let mut values = Vec::new();
    let mut width = None;
    let mut rows = 0;
    for (lineno, line) in text.lines().enumerate().map(|(i, l)| (i + 1, l)) {
        if line.trim().is_empty() {
            continue;
        }
        let before = values.len();
        for field in line.split(',') {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| Error::parse(path, lineno, format!("malformed number {field:?}")))?;
            values.push(v);
        }
        let got = values.len() - before;
        match width {
            None => width = Some(got),
            Some(w) if w != got => {
                return Err(Error::parse(path, lineno, format!("expected {w} values, got {got}")))
            }
            Some(_) => {}
        }
        rows += 1;
    }
    let width = width.ok_or_else(|| Error::parse(path, 1, "matrix file is empty"))?;
    Ok(Array2::from_shape_vec((rows, width), values).expect("row lengths checked"))
}

/// Inverse of [`read_matrix_csv`], bit-exact for every finite value.
pub fn write_matrix_csv(m: ArrayView2<'_, f64>, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::new();
    for row in m.rows() {
        let line: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    write(path.as_ref().to_path_buf(), out)
}

/// Format a float with 17 significant digits, enough for a bit-exact
/// binary64 round trip.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn write(path: PathBuf, contents: String) -> Result<()> {
    fs::write(&path, contents).map_err(|e| Error::io(path, e))
}

/// Write a bundle directory, creating it if necessary.
pub fn save_bundle(bundle: &GraphBundle, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let meta = Meta {
        num_nodes: bundle.num_nodes(),
        num_features: bundle.num_features(),
        num_classes: bundle.num_classes(),
    };
    write(
        dir.join(META),
        serde_json::to_string(&meta).expect("meta serializes") + "\n",
    )?;

    let mut edges = String::from("src,dst\n");
    for &(a, b) in bundle.edges() {
        edges.push_str(&format!("{a},{b}\n"));
    }
    write(dir.join(EDGES), edges)?;

    write_matrix_csv(bundle.features().view(), dir.join(FEATURES))?;

    let mut labels = String::from("node,label\n");
    for (i, c) in bundle.labels().iter().enumerate() {
        labels.push_str(&format!("{i},{c}\n"));
    }
    write(dir.join(LABELS), labels)?;

    if let Some(split) = bundle.split() {
        write(
            dir.join(SPLITS),
            serde_json::to_string(split).expect("split serializes") + "\n",
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn write_files(dir: &Path, meta: &str, edges: &str, features: &str, labels: &str) {
        fs::write(dir.join(META), meta).unwrap();
        fs::write(dir.join(EDGES), edges).unwrap();
        fs::write(dir.join(FEATURES), features).unwrap();
        fs::write(dir.join(LABELS), labels).unwrap();
    }

    #[test]
    fn smallest_valid_bundle() {
        let tmp = tempfile::tempdir().unwrap();
        write_files(
            tmp.path(),
            r#"{"num_nodes":2,"num_features":1,"num_classes":2}"#,
            "src,dst\n0,1\n",
            "0.5\n-1.0\n",
            "node,label\n0,0\n1,1\n",
        );
        let b = load_bundle(tmp.path()).unwrap();
        assert_eq!(b.edges(), &[(0, 1)]);
        assert_eq!(b.labels(), &[0, 1]);
        assert_eq!(b.features(), &array![[0.5], [-1.0]]);
    }

    #[test]
    fn label_class_out_of_range_names_file_and_line() {
        let tmp = tempfile::tempdir().unwrap();
        let mut labels = String::from("node,label\n");
        for i in 0..6 {
            labels.push_str(&format!("{i},0\n"));
        }
        labels.push_str("5,9\n");
        write_files(
            tmp.path(),
            r#"{"num_nodes":6,"num_features":1,"num_classes":7}"#,
            "src,dst\n",
            "0\n0\n0\n0\n0\n0\n",
            &labels,
        );
        let err = load_bundle(tmp.path()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("class index out of range"), "{msg}");
        assert!(msg.contains("labels.csv:8"), "{msg}");
        assert!(err.is_config());
    }

    #[test]
    fn malformed_rows_are_rejected() {
        let tmp = tempfile::tempdir().unwrap();
        let meta = r#"{"num_nodes":2,"num_features":2,"num_classes":2}"#;
        write_files(tmp.path(), meta, "src,dst\n0,1\n", "1,2\n3\n", "node,label\n0,0\n1,1\n");
        assert!(load_bundle(tmp.path()).unwrap_err().to_string().contains("features.csv:2"));

        write_files(tmp.path(), meta, "src,dst\n0,2\n", "1,2\n3,4\n", "node,label\n0,0\n1,1\n");
        assert!(load_bundle(tmp.path()).unwrap_err().to_string().contains("edges.csv:2"));

        write_files(tmp.path(), meta, "src,dst\n1,0\n", "1,2\n3,4\n", "node,label\n0,0\n1,1\n");
        assert!(load_bundle(tmp.path()).is_err());

        write_files(tmp.path(), meta, "src,dst\n", "1,2\n3,4\n", "node,label\n0,0\n0,1\n");
        assert!(load_bundle(tmp.path()).unwrap_err().to_string().contains("one-hot"));

        write_files(tmp.path(), meta, "src,dst\n", "1,x\n3,4\n", "node,label\n0,0\n1,1\n");
        assert!(load_bundle(tmp.path()).unwrap_err().to_string().contains("malformed number"));
    }

    #[test]
    fn missing_file_is_io_error() {
        let tmp = tempfile::tempdir().unwrap();
        let err = load_bundle(tmp.path()).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
        assert!(err.to_string().contains("meta.json"));
    }

    #[test]
    fn empty_edge_graph_writes_header_only() {
        let tmp = tempfile::tempdir().unwrap();
        let b = GraphBundle::new(array![[1.0], [2.0]], vec![0, 0], 1, []).unwrap();
        save_bundle(&b, tmp.path()).unwrap();
        assert_eq!(fs::read_to_string(tmp.path().join(EDGES)).unwrap(), "src,dst\n");
        assert_eq!(load_bundle(tmp.path()).unwrap(), b);
    }

    #[test]
    fn zero_nodes_rejected() {
        let err = GraphBundle::new(Array2::zeros((0, 3)), vec![], 2, []).unwrap_err();
        assert!(matches!(err, Error::Param(_)));
    }

    #[test]
    fn edges_are_canonicalized() {
        let b = GraphBundle::new(Array2::zeros((3, 1)), vec![0; 3], 1, [(2, 0), (1, 0)]).unwrap();
        assert_eq!(b.edges(), &[(0, 1), (0, 2)]);
        assert!(GraphBundle::new(Array2::zeros((3, 1)), vec![0; 3], 1, [(0, 1), (1, 0)]).is_err());
        assert!(GraphBundle::new(Array2::zeros((3, 1)), vec![0; 3], 1, [(1, 1)]).is_err());
    }
}
