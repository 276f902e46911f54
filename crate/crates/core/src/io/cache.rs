//! Content-addressed store for field files, keyed by config hash and stage.

use std::path::{Path, PathBuf};

use log::warn;
use sha2::{Digest, Sha256};

use super::config::hex;
use super::field_file::{FieldFile, FieldMeta};
use crate::error::Result;
use crate::field::SpaceTimeField;
use crate::lace::PiExtractor;
use crate::model::ModelParams;

pub const STORE_ENV: &str = "SPREADCP_STORE";

const DATA: &str = "data.csv";
const META: &str = "meta.json";
const DIGEST: &str = "digest";

#[derive(Debug, Clone)]
pub struct Store {
    root: PathBuf,
}

fn sha(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

pub fn cache_key(config_hash: &str, stage: &str) -> String {
    sha(format!("{config_hash}:{stage}").as_bytes())
}

impl Store {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Store { root: root.into() }
    }

    /// Root from `SPREADCP_STORE`, else a directory under the system temp dir.
    pub fn from_env() -> Self {
        match std::env::var_os(STORE_ENV) {
            Some(p) => Store::new(p),
            None => Store::new(std::env::temp_dir().join("spreadcp-store")),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn entry(&self, key: &str) -> PathBuf {
        self.root.join(key)
    }

    /// Writes into a scratch directory and renames it into place.
    pub fn store(&self, key: &str, file: &FieldFile) -> Result<()> {
        std::fs::create_dir_all(&self.root)?;
        let dest = self.entry(key);
        if dest.exists() {
            std::fs::remove_dir_all(&dest)?;
        }
        let tmp = tempdir_in(&self.root)?;
        let csv = file.csv_string();
        let meta = file.meta_string();
        std::fs::write(tmp.join(DATA), &csv)?;
        std::fs::write(tmp.join(META), &meta)?;
        std::fs::write(tmp.join(DIGEST), digest(&csv, &meta))?;
        std::fs::rename(&tmp, &dest)?;
        Ok(())
    }

    /// `None` on a miss; unreadable or inconsistent entries count as misses.
    pub fn lookup(&self, key: &str) -> Option<FieldFile> {
        let dir = self.entry(key);
        if !dir.is_dir() {
            return None;
        }
        match self.read_entry(&dir) {
            Ok(f) => Some(f),
            Err(e) => {
                warn!("cache entry {} unusable, ignoring: {e}", dir.display());
                None
            }
        }
    }

    /// Raw CSV bytes of an entry.
    pub fn lookup_bytes(&self, key: &str) -> Option<Vec<u8>> {
        self.lookup(key)?;
        std::fs::read(self.entry(key).join(DATA)).ok()
    }

    fn read_entry(&self, dir: &Path) -> Result<FieldFile> {
        let csv = std::fs::read_to_string(dir.join(DATA))?;
        let meta = std::fs::read_to_string(dir.join(META))?;
        let want = std::fs::read_to_string(dir.join(DIGEST))?;
        if want.trim() != digest(&csv, &meta) {
            return Err(crate::Error::Mismatch("digest does not match contents".into()));
        }
        let m: FieldMeta = serde_json::from_str(&meta)?;
        FieldFile::parse(&csv, m, &dir.join(DATA))
    }

    /// Removes corrupt entries and leftover scratch directories. Returns
    /// the number removed.
    pub fn gc(&self) -> Result<usize> {
        if !self.root.is_dir() {
            return Ok(0);
        }
        let mut removed = 0;
        for e in std::fs::read_dir(&self.root)? {
            let path = e?.path();
            if !path.is_dir() {
                continue;
            }
            let scratch = path
                .file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with(".tmp"));
            if scratch || self.read_entry(&path).is_err() {
                std::fs::remove_dir_all(&path)?;
                removed += 1;
            }
        }
        Ok(removed)
    }
}

fn digest(csv: &str, meta: &str) -> String {
    sha(format!("{csv}\0{meta}").as_bytes())
}

fn tempdir_in(root: &Path) -> Result<PathBuf> {
    for i in 0u32.. {
        let p = root.join(format!(".tmp-{}-{i}", std::process::id()));
        match std::fs::create_dir(&p) {
            Ok(()) => return Ok(p),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(e.into()),
        }
    }
    unreachable!()
}

/// Routes `pi` extraction through the store, one entry per `lambda`.
pub struct StoreExtractor<'a, E> {
    pub inner: E,
    pub store: &'a Store,
    pub config_hash: String,
}

impl<E: PiExtractor> StoreExtractor<'_, E> {
    fn stage(lambda: f64) -> String {
        format!("pi@{:016x}", lambda.to_bits())
    }
}

impl<E: PiExtractor> PiExtractor for StoreExtractor<'_, E> {
    fn extract(&self, lambda: f64) -> Result<SpaceTimeField> {
        let key = cache_key(&self.config_hash, &Self::stage(lambda));
        if let Some(f) = self.store.lookup(&key) {
            return Ok(f.field);
        }
        let pi = self.inner.extract(lambda)?;
        let p = self.inner.params(lambda)?;
        let meta = FieldMeta {
            d: p.d(),
            range: p.kernel.range(),
            eps: p.eps,
            lambda,
            n_max: p.n_max,
            radius: p.radius,
            seed: None,
            samples: None,
            kind: "pi".into(),
            config_hash: Some(self.config_hash.clone()),
            code_version: Some(super::config::CODE_VERSION.into()),
        };
        self.store.store(&key, &FieldFile::new(meta, pi.clone()))?;
        Ok(pi)
    }

    fn params(&self, lambda: f64) -> Result<ModelParams> {
        self.inner.params(lambda)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::make_uniform_kernel;
    use crate::lace::ExactExtractor;
    use std::sync::atomic::{AtomicUsize, Ordering};

    fn file(lambda: f64) -> FieldFile {
        let meta = FieldMeta {
            d: 1,
            range: 1,
            eps: 1.0,
            lambda,
            n_max: 2,
            radius: 2,
            seed: Some(7),
            samples: None,
            kind: "tau".into(),
            config_hash: None,
            code_version: None,
        };
        let mut f = SpaceTimeField::delta(1, 1.0, 2, 2);
        f.set(1, &[1], lambda / 3.0);
        FieldFile::new(meta, f)
    }

    #[test]
    fn store_then_lookup_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let s = Store::new(dir.path());
        let key = cache_key("abc", "tau");
        assert!(s.lookup(&key).is_none());
        let f = file(0.7);
        s.store(&key, &f).unwrap();
        assert_eq!(s.lookup_bytes(&key).unwrap(), f.csv_string().into_bytes());
        assert_eq!(s.lookup(&key).unwrap().field, f.field);
        assert!(s.lookup(&cache_key("abd", "tau")).is_none());
    }

    #[test]
    fn corrupt_entry_is_a_miss() {
        let dir = tempfile::tempdir().unwrap();
        let s = Store::new(dir.path());
        let key = cache_key("h", "tau");
        s.store(&key, &file(0.5)).unwrap();
        let data = dir.path().join(&key).join(DATA);
        let text = std::fs::read_to_string(&data).unwrap().replace("1,", "2,");
        std::fs::write(&data, text).unwrap();
        assert!(s.lookup(&key).is_none());
        assert_eq!(s.gc().unwrap(), 1);
        assert!(!dir.path().join(&key).exists());
    }

    struct Counting {
        inner: ExactExtractor,
        calls: AtomicUsize,
    }

    impl PiExtractor for Counting {
        fn extract(&self, lambda: f64) -> Result<SpaceTimeField> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            self.inner.extract(lambda)
        }
        fn params(&self, lambda: f64) -> Result<ModelParams> {
            self.inner.params(lambda)
        }
    }

    #[test]
    fn extractions_are_reused_across_processes() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::new(dir.path());
        let base = ModelParams::new(make_uniform_kernel(1, 1).unwrap(), 1.0, 1.0, 3).unwrap();
        let mk = || StoreExtractor {
            inner: Counting {
                inner: ExactExtractor { base: base.clone() },
                calls: AtomicUsize::new(0),
            },
            store: &store,
            config_hash: "cfg".into(),
        };
        let a = mk();
        let first = a.extract(0.9).unwrap();
        assert_eq!(a.inner.calls.load(Ordering::SeqCst), 1);
        let b = mk();
        let again = b.extract(0.9).unwrap();
        assert_eq!(b.inner.calls.load(Ordering::SeqCst), 0);
        assert_eq!(first, again);
    }
}
