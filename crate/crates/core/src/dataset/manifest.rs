use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Test => "test",
        })
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            _ => Err(Error::InvalidValue(format!("unknown split `{s}`"))),
        }
    }
}

/// One sample. Paths are stored as written in the CSV, relative to the
/// manifest's directory unless absolute.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub gt: PathBuf,
    pub footprint: PathBuf,
    pub sidecar: PathBuf,
    pub split: Split,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Manifest {
    /// Directory relative paths resolve against.
    pub root: PathBuf,
    /// Sorted by id.
    pub entries: Vec<ManifestEntry>,
}

pub const MANIFEST_COLUMNS: [&str; 5] = ["id", "gt", "footprint", "sidecar", "split"];

impl Manifest {
    pub fn new(root: impl Into<PathBuf>, mut entries: Vec<ManifestEntry>) -> Result<Self> {
        entries.sort_by(|a, b| a.id.cmp(&b.id));
        if let Some(w) = entries.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(Error::DuplicateId(w[0].id.clone()));
        }
        Ok(Self {
            root: root.into(),
            entries,
        })
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.root.join(path)
        }
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.split == split)
    }

    /// `(id, path)` for every referenced file that does not exist.
    pub fn missing_files(&self) -> Vec<(String, PathBuf)> {
        let mut out = Vec::new();
        for e in &self.entries {
            for p in [&e.gt, &e.footprint, &e.sidecar] {
                let full = self.resolve(p);
                if !full.is_file() {
                    out.push((e.id.clone(), full));
                }
            }
        }
        out
    }
}

pub fn parse_manifest(text: &str, root: impl Into<PathBuf>) -> Result<Manifest> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers: BTreeSet<String> = reader
        .headers()
        .map_err(|e| Error::format("manifest", e.to_string()))?
        .iter()
        .map(str::to_owned)
        .collect();
    if let Some(col) = MANIFEST_COLUMNS.iter().find(|c| !headers.contains(**c)) {
        return Err(Error::MissingColumn((*col).to_owned()));
    }
    let entries = reader
        .deserialize()
        .collect::<std::result::Result<Vec<ManifestEntry>, _>>()
        .map_err(|e| Error::format("manifest", e.to_string()))?;
    Manifest::new(root, entries)
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_manifest(&text, root)
}

pub fn write_manifest(path: impl AsRef<Path>, manifest: &Manifest) -> Result<()> {
    let path = path.as_ref();
    let mut writer = csv::Writer::from_writer(Vec::new());
    if manifest.entries.is_empty() {
        writer
            .write_record(MANIFEST_COLUMNS)
            .map_err(|e| Error::format("manifest", e.to_string()))?;
    }
    for e in &manifest.entries {
        writer.serialize(e).map_err(|e| Error::format("manifest", e.to_string()))?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::format("manifest", e.to_string()))?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "id,gt,footprint,sidecar,split\n";

    #[test]
    fn header_only_is_empty() {
        let m = parse_manifest(HEADER, ".").unwrap();
        assert!(m.entries.is_empty());
    }

    #[test]
    fn rows_come_back_sorted() {
        let text = format!(
            "{HEADER}c,c.rhm,c_fp.rhm,c.json,test\na,a.rhm,a_fp.rhm,a.json,train\nb,b.rhm,b_fp.rhm,b.json,test\n"
        );
        let m = parse_manifest(&text, "/data").unwrap();
        let ids: Vec<&str> = m.entries.iter().map(|e| e.id.as_str()).collect();
        assert_eq!(ids, ["a", "b", "c"]);
        assert_eq!(m.resolve(&m.entries[0].gt), PathBuf::from("/data/a.rhm"));
        assert_eq!(m.split(Split::Test).count(), 2);
    }

    #[test]
    fn duplicate_ids_are_named() {
        let text = format!("{HEADER}x,a,b,c,train\nx,d,e,f,test\n");
        match parse_manifest(&text, ".") {
            Err(Error::DuplicateId(id)) => assert_eq!(id, "x"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_column() {
        assert!(matches!(
            parse_manifest("id,gt,footprint,split\n", "."),
            Err(Error::MissingColumn(c)) if c == "sidecar"
        ));
    }

    #[test]
    fn write_then_load() {
        let dir = tempfile::tempdir().unwrap();
        let entry = |id: &str| ManifestEntry {
            id: id.into(),
            gt: format!("{id}.rhm").into(),
            footprint: format!("{id}_fp.rhm").into(),
            sidecar: format!("{id}.json").into(),
            split: Split::Train,
        };
        let m = Manifest::new(dir.path(), vec![entry("b"), entry("a")]).unwrap();
        let path = dir.path().join("manifest.csv");
        write_manifest(&path, &m).unwrap();
        let back = load_manifest(&path).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.missing_files().len(), 6);
        write_manifest(&path, &Manifest::default()).unwrap();
        assert!(load_manifest(&path).unwrap().entries.is_empty());
    }
}
