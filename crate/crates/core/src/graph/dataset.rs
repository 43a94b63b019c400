//! Dataset directory IO. A dataset is a directory with meta.json
//! (num_nodes/num_features/num_classes), edges.tsv (one "src<TAB>dst" line
//! per edge), features.csv (one comma-separated row per node), and an
//! optional labels.csv (one integer per node).

use crate::error::{Error, Result};
use crate::graph::AttributedGraph;
use crate::linalg::{DenseMatrix, Scalar};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Meta {
    pub num_nodes: usize,
    pub num_features: usize,
    pub num_classes: usize,
}

fn read_text(path: &Path) -> Result<String> {
    if !path.is_file() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_meta(dir: &Path) -> Result<Meta> {
    let path = dir.join("meta.json");
    let text = read_text(&path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.clone(),
        line: e.line(),
        message: e.to_string(),
    })
}

fn parse_edges(dir: &Path, meta: &Meta) -> Result<Vec<(usize, usize)>> {
    let path = dir.join("edges.tsv");
    let text = read_text(&path)?;
    let mut edges = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        let mut parts = trimmed.split('\t');
        let parse_field = |field: Option<&str>| -> Result<usize> {
            let s = field.ok_or_else(|| Error::Parse {
                path: path.clone(),
                line,
                message: "expected \"src<TAB>dst\"".into(),
            })?;
            s.trim().parse::<usize>().map_err(|_| Error::Parse {
                path: path.clone(),
                line,
                message: format!("bad node index {s:?}"),
            })
        };
        let a = parse_field(parts.next())?;
        let b = parse_field(parts.next())?;
        if parts.next().is_some() {
            return Err(Error::Parse {
                path: path.clone(),
                line,
                message: "expected exactly two fields".into(),
            });
        }
        if a >= meta.num_nodes || b >= meta.num_nodes {
            return Err(Error::Parse {
                path: path.clone(),
                line,
                message: format!("edge ({a},{b}) out of range for {} nodes", meta.num_nodes),
            });
        }
        edges.push((a, b));
    }
    Ok(edges)
}

fn parse_features<S: Scalar>(dir: &Path, meta: &Meta) -> Result<DenseMatrix<S>> {
    let path = dir.join("features.csv");
    let text = read_text(&path)?;
    let mut data = Vec::with_capacity(meta.num_nodes * meta.num_features);
    let mut rows = 0usize;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        rows += 1;
        if rows > meta.num_nodes {
            return Err(Error::Parse {
                path: path.clone(),
                line,
                message: format!("more than {} feature rows", meta.num_nodes),
            });
        }
        let mut count = 0usize;
        for field in trimmed.split(',') {
            let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
                path: path.clone(),
                line,
                message: format!("bad float {field:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    path: path.clone(),
                    line,
                    message: format!("non-finite feature {field:?}"),
                });
            }
            data.push(S::from_f64(v));
            count += 1;
        }
        if count != meta.num_features {
            return Err(Error::Parse {
                path: path.clone(),
                line,
                message: format!("{count} features, expected {}", meta.num_features),
            });
        }
    }
    if rows != meta.num_nodes {
        return Err(Error::Parse {
            path: path.clone(),
            line: rows,
            message: format!("{rows} feature rows, expected {}", meta.num_nodes),
        });
    }
    Ok(DenseMatrix::from_flat(meta.num_nodes, meta.num_features, data))
}

fn parse_labels(dir: &Path, meta: &Meta) -> Result<Option<Vec<usize>>> {
    let path = dir.join("labels.csv");
    if !path.is_file() {
        return Ok(None);
    }
    let text = read_text(&path)?;
    let mut labels = Vec::with_capacity(meta.num_nodes);
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        let y: usize = trimmed.parse().map_err(|_| Error::Parse {
            path: path.clone(),
            line,
            message: format!("bad label {trimmed:?}"),
        })?;
        if y >= meta.num_classes {
            return Err(Error::Parse {
                path: path.clone(),
                line,
                message: format!("label {y} out of range for {} classes", meta.num_classes),
            });
        }
        labels.push(y);
    }
    if labels.len() != meta.num_nodes {
        return Err(Error::Parse {
            path: path.clone(),
            line: labels.len(),
            message: format!("{} labels, expected {}", labels.len(), meta.num_nodes),
        });
    }
    Ok(Some(labels))
}

/// Loads a dataset directory. edges.tsv is required; datasets without a
/// graph go through `load_dataset_graph_free`.
pub fn load_dataset<S: Scalar>(dir: impl AsRef<Path>) -> Result<AttributedGraph<S>> {
    let dir = dir.as_ref();
    let meta = read_meta(dir)?;
    let edges = parse_edges(dir, &meta)?;
    let features = parse_features::<S>(dir, &meta)?;
    let labels = parse_labels(dir, &meta)?;
    AttributedGraph::new(&edges, features, labels, meta.num_classes)
}

/// Loads a dataset whose edges.tsv may be absent. Returns the graph (empty
/// edge set when the file is missing) and whether edges were present.
pub fn load_dataset_graph_free<S: Scalar>(
    dir: impl AsRef<Path>,
) -> Result<(AttributedGraph<S>, bool)> {
    let dir = dir.as_ref();
    let meta = read_meta(dir)?;
    let has_edges = dir.join("edges.tsv").is_file();
    let edges = if has_edges {
        parse_edges(dir, &meta)?
    } else {
        Vec::new()
    };
    let features = parse_features::<S>(dir, &meta)?;
    let labels = parse_labels(dir, &meta)?;
    Ok((AttributedGraph::new(&edges, features, labels, meta.num_classes)?, has_edges))
}

/// Writes a dataset directory in the load format. Creates the directory if
/// needed; float formatting round-trips exactly through load.
pub fn save_dataset<S: Scalar>(dir: impl AsRef<Path>, g: &AttributedGraph<S>) -> Result<()> {
    let dir = dir.as_ref();
    let io_err = |source| Error::Io {
        path: dir.to_path_buf(),
        source,
    };
    fs::create_dir_all(dir).map_err(io_err)?;
    let meta = Meta {
        num_nodes: g.num_nodes(),
        num_features: g.num_features(),
        num_classes: g.num_classes(),
    };
    let write = |name: &str, contents: String| -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, contents).map_err(|source| Error::Io { path, source })
    };
    write("meta.json", serde_json::to_string_pretty(&meta).expect("meta serializes"))?;
    let mut edges = String::new();
    for (a, b) in g.edges() {
        edges.push_str(&format!("{a}\t{b}\n"));
    }
    write("edges.tsv", edges)?;
    let mut features = String::new();
    for i in 0..g.num_nodes() {
        let row: Vec<String> = g
            .features()
            .row(i)
            .iter()
            .map(|v| format!("{}", v.to_f64()))
            .collect();
        features.push_str(&row.join(","));
        features.push('\n');
    }
    write("features.csv", features)?;
    if let Some(labels) = g.labels() {
        let mut out = String::new();
        for y in labels {
            out.push_str(&format!("{y}\n"));
        }
        write("labels.csv", out)?;
    }
    Ok(())
}
