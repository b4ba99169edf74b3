//! Dataset manifests: `# key=value` metadata lines followed by a CSV table
//! with columns `path,label,subject,split,fold`. Paths are relative to the
//! manifest's directory.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use voxnet_core::dataset::VolumeDataset;
use voxnet_core::Diagnosis;

use crate::error::{Error, Result};
use crate::fsutil;
use crate::volume_io::{load_header, load_volume};

pub const HEADER: [&str; 5] = ["path", "label", "subject", "split", "fold"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "train" => Ok(Split::Train),
            "validation" | "val" => Ok(Split::Validation),
            "test" => Ok(Split::Test),
            _ => Err(format!("unknown split `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub label: Option<Diagnosis>,
    pub subject: String,
    pub split: Option<Split>,
    pub fold: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Manifest {
    pub metadata: BTreeMap<String, String>,
    pub records: Vec<ManifestEntry>,
    /// Directory that entry paths are relative to.
    pub base_dir: PathBuf,
    /// Extents shared by every volume, once checked.
    pub extents: Option<[usize; 3]>,
}

#[derive(Debug, Deserialize)]
struct Row {
    path: String,
    label: String,
    subject: String,
    split: String,
    fold: String,
}

fn optional(s: &str) -> Option<&str> {
    let s = s.trim();
    (!s.is_empty()).then_some(s)
}

impl Manifest {
    pub fn parse(text: &str, base_dir: &Path, origin: &Path) -> Result<Self> {
        let mut metadata = BTreeMap::new();
        for line in text.lines() {
            if let Some(rest) = line.strip_prefix('#') {
                if let Some((k, v)) = rest.split_once('=') {
                    metadata.insert(k.trim().to_string(), v.trim().to_string());
                }
            }
        }
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = reader.headers().map_err(|e| Error::format(origin, e.to_string()))?.clone();
        if !headers.is_empty() && headers.iter().ne(HEADER) {
            return Err(Error::format(origin, format!("expected columns {}", HEADER.join(","))));
        }
        let mut records = Vec::new();
        let mut seen = HashSet::new();
        for row in reader.deserialize::<Row>() {
            let row = row.map_err(|e| Error::format(origin, e.to_string()))?;
            let bad = |what: &str, value: &str| Error::format(origin, format!("subject `{}`: bad {what} `{value}`", row.subject));
            let label = optional(&row.label)
                .map(|l| l.parse::<Diagnosis>().map_err(|_| bad("label", l)))
                .transpose()?;
            let split = optional(&row.split)
                .map(|s| s.parse::<Split>().map_err(|_| bad("split", s)))
                .transpose()?;
            let fold = optional(&row.fold)
                .map(|f| f.parse::<usize>().map_err(|_| bad("fold", f)))
                .transpose()?;
            if row.subject.is_empty() {
                return Err(Error::format(origin, format!("entry `{}` has no subject id", row.path)));
            }
            if !seen.insert(row.subject.clone()) {
                return Err(Error::format(origin, format!("duplicate subject id `{}`", row.subject)));
            }
            records.push(ManifestEntry {
                path: PathBuf::from(row.path),
                label,
                subject: row.subject,
                split,
                fold,
            });
        }
        Ok(Manifest {
            metadata,
            records,
            base_dir: base_dir.to_path_buf(),
            extents: None,
        })
    }

    pub fn render(&self) -> Result<String> {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            out.push_str(&format!("# {k}={v}\n"));
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Usage(e.to_string());
        w.write_record(HEADER).map_err(io)?;
        for r in &self.records {
            w.write_record([
                r.path.to_string_lossy().as_ref(),
                r.label.map_or("", Diagnosis::name),
                &r.subject,
                r.split.map_or("", Split::name),
                &r.fold.map(|f| f.to_string()).unwrap_or_default(),
            ])
            .map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Usage(e.to_string()))?;
        out.push_str(&String::from_utf8(bytes).expect("csv output is UTF-8"));
        Ok(out)
    }

    pub fn resolve(&self, entry: &ManifestEntry) -> PathBuf {
        self.base_dir.join(&entry.path)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn labels(&self) -> Vec<Option<Diagnosis>> {
        self.records.iter().map(|r| r.label).collect()
    }

    pub fn class_counts(&self) -> [usize; 3] {
        let mut counts = [0; 3];
        for d in self.records.iter().filter_map(|r| r.label) {
            counts[d.id()] += 1;
        }
        counts
    }

    /// Split tags, when every entry has one.
    pub fn splits(&self) -> Option<Vec<Split>> {
        self.records.iter().map(|r| r.split).collect()
    }

    /// Fold tags, when every entry has one.
    pub fn folds(&self) -> Option<Vec<usize>> {
        self.records.iter().map(|r| r.fold).collect()
    }

    /// Reads every volume, in manifest order.
    pub fn load_dataset(&self) -> Result<VolumeDataset> {
        let mut records = Vec::with_capacity(self.records.len());
        for entry in &self.records {
            let path = self.resolve(entry);
            let mut record = load_volume(&path)?;
            if entry.label.is_some() && record.label.is_some() && entry.label != record.label {
                return Err(Error::format(&path, format!("label disagrees with the manifest entry for `{}`", entry.subject)));
            }
            record.label = entry.label.or(record.label);
            record.id = entry.subject.clone();
            records.push(record);
        }
        Ok(VolumeDataset::new(records)?)
    }
}

/// Parses `path` and checks that every referenced volume exists and that all
/// share one set of extents.
pub fn load_manifest(path: &Path) -> Result<Manifest> {
    let bytes = fsutil::read(path)?;
    let text = String::from_utf8(bytes).map_err(|_| Error::format(path, "not UTF-8"))?;
    let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
    let mut manifest = Manifest::parse(&text, &base, path)?;
    let mut extents: Option<([usize; 3], &str)> = None;
    for entry in &manifest.records {
        let vpath = manifest.resolve(entry);
        let header = load_header(&vpath)?;
        match extents {
            None => extents = Some((header.extents, &entry.subject)),
            Some((e, first)) if e != header.extents => {
                return Err(Error::format(
                    &vpath,
                    format!("extents {:?} differ from {:?} of `{first}`", header.extents, e),
                ))
            }
            _ => {}
        }
    }
    manifest.extents = extents.map(|(e, _)| e);
    Ok(manifest)
}

pub fn save_manifest(path: &Path, manifest: &Manifest) -> Result<()> {
    fsutil::write_atomic(path, manifest.render()?.as_bytes())
}
