//! Writing a phantom dataset to disk.

use std::fs;
use std::path::{Path, PathBuf};

use voxnet_core::phantom::{phantom_volume, region_mask_volume, PhantomParams};
use voxnet_core::Diagnosis;

use crate::config::save_toml;
use crate::error::{Error, Result};
use crate::manifest::{save_manifest, Manifest, ManifestEntry};
use crate::volume_io::save_volume;

pub const MANIFEST_NAME: &str = "manifest.csv";
pub const PARAMS_NAME: &str = "params.toml";

pub fn format_extents(e: [usize; 3]) -> String {
    format!("{}x{}x{}", e[0], e[1], e[2])
}

/// Relative path of `class`'s region mask inside a generated dataset.
pub fn mask_path(class: Diagnosis) -> PathBuf {
    PathBuf::from(format!("masks/mask-{}.vvol", class.name().to_ascii_lowercase()))
}

/// Writes every volume, one region mask per class, the parameters and the
/// manifest into `out_dir`. Files are staged and moved in only on success.
pub fn generate_phantoms(params: &PhantomParams, out_dir: &Path) -> Result<Manifest> {
    params.validate()?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let stage = tempfile::Builder::new()
        .prefix(".staging-")
        .tempdir_in(out_dir)
        .map_err(|e| Error::io(out_dir, e))?;

    let mut manifest = Manifest {
        base_dir: out_dir.to_path_buf(),
        extents: Some(params.extents),
        ..Manifest::default()
    };
    let meta = &mut manifest.metadata;
    meta.insert("generator".into(), "phantom".into());
    meta.insert("extents".into(), format_extents(params.extents));
    meta.insert("seed".into(), params.seed.to_string());
    meta.insert("samples_per_class".into(), params.samples_per_class.to_string());
    meta.insert("params".into(), PARAMS_NAME.into());

    let mut written: Vec<PathBuf> = Vec::new();
    for class in Diagnosis::ALL {
        for i in 0..params.samples_per_class {
            let record = phantom_volume(params, class, i)?;
            let rel = PathBuf::from(format!("volumes/{}.vvol", record.id));
            save_volume(&stage.path().join(&rel), &record)?;
            manifest.records.push(ManifestEntry {
                path: rel.clone(),
                label: Some(class),
                subject: record.id,
                split: None,
                fold: None,
            });
            written.push(rel);
        }
        let rel = mask_path(class);
        save_volume(&stage.path().join(&rel), &region_mask_volume(params, class)?)?;
        manifest
            .metadata
            .insert(format!("mask_{}", class.name()), rel.to_string_lossy().into_owned());
        written.push(rel);
    }
    save_toml(&stage.path().join(PARAMS_NAME), params)?;
    save_manifest(&stage.path().join(MANIFEST_NAME), &manifest)?;
    written.push(PARAMS_NAME.into());
    written.push(MANIFEST_NAME.into());

    for rel in &written {
        let to = out_dir.join(rel);
        if let Some(dir) = to.parent() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        fs::rename(stage.path().join(rel), &to).map_err(|e| Error::io(&to, e))?;
    }
    Ok(manifest)
}
