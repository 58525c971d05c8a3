use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use crate::augment::AugmentationSpec;
use crate::error::{Error, Result};

pub const MANIFEST_HEADER: &str = "augmetric-manifest v1";

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ManifestEntry {
    pub scan: PathBuf,
    pub mask: PathBuf,
}

/// A list of scan/mask pairs. Relative paths resolve against `base_dir`.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub id: String,
    pub base_dir: PathBuf,
    entries: Vec<ManifestEntry>,
    pub provenance: Option<AugmentationSpec>,
}

impl DatasetManifest {
    pub fn new(
        id: impl Into<String>,
        base_dir: impl Into<PathBuf>,
        entries: Vec<ManifestEntry>,
        provenance: Option<AugmentationSpec>,
    ) -> Result<Self> {
        let id = id.into();
        if entries.is_empty() {
            return Err(Error::dataset(&id, "manifest has no entries"));
        }
        let mut seen = HashSet::new();
        for e in &entries {
            if !seen.insert(&e.scan) || !seen.insert(&e.mask) {
                return Err(Error::dataset(
                    &id,
                    format!("duplicate path in entry {e:?}"),
                ));
            }
        }
        Ok(Self {
            id,
            base_dir: base_dir.into(),
            entries,
            provenance,
        })
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{MANIFEST_HEADER}\n# id: {}\n", self.id);
        if let Some(spec) = &self.provenance {
            out.push_str(&format!("# spec: {spec}\n"));
        }
        for e in &self.entries {
            out.push_str(&format!("{}\t{}\n", e.scan.display(), e.mask.display()));
        }
        out
    }

    /// Parses manifest text. `fallback_id` is used when no `# id:` line is present.
    pub fn parse(text: &str, base_dir: impl Into<PathBuf>, fallback_id: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, l)) if l.trim_end() == MANIFEST_HEADER => {}
            _ => {
                return Err(Error::Format(format!(
                    "manifest must start with `{MANIFEST_HEADER}`"
                )))
            }
        }
        let mut id = None;
        let mut provenance = None;
        let mut entries = Vec::new();
        for (i, line) in lines {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                let comment = comment.trim();
                if let Some(v) = comment.strip_prefix("id:") {
                    id = Some(v.trim().to_string());
                } else if let Some(v) = comment.strip_prefix("spec:") {
                    provenance = Some(v.parse::<AugmentationSpec>().map_err(|e| {
                        Error::Format(format!("manifest line {}: {e}", i + 1))
                    })?);
                }
                continue;
            }
            let (scan, mask) = line.split_once('\t').ok_or_else(|| {
                Error::Format(format!("manifest line {}: expected scan<TAB>mask", i + 1))
            })?;
            entries.push(ManifestEntry {
                scan: scan.into(),
                mask: mask.into(),
            });
        }
        DatasetManifest::new(
            id.unwrap_or_else(|| fallback_id.to_string()),
            base_dir,
            entries,
            provenance,
        )
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".into());
        Self::parse(&text, base, &stem)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}
