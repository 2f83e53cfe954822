//! On-disk cache for [`CountTable`]s.
//!
//! One JSON file per `(schedule, max_q, format version)`, named
//! `counts-v{version}-s{factors joined by _}-q{max_q}.json`:
//!
//! ```json
//! {"format":"huffenum-count-table","format_version":1,"schedule":[2,3],"max_q":30,
//!  "entries":[[q,phase,p,"count"],...]}
//! ```
//!
//! `entries` lists every nonzero `t(p, q, phase)` including the bare root
//! `[1,0,1,"1"]`, sorted by `(q, phase, p)`; counts are decimal strings.
//! The file is written compactly (no whitespace) so the bytes are a function
//! of the table alone. Writes go to a temporary file that is renamed into
//! place.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_bigint::BigUint;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::CountTable;
use crate::model::BranchingSchedule;

pub const FORMAT_NAME: &str = "huffenum-count-table";
pub const FORMAT_VERSION: u32 = 1;
/// Environment variable naming the cache directory.
pub const CACHE_ENV: &str = "HUFFENUM_CACHE_DIR";

#[derive(Debug, Serialize, Deserialize)]
struct CacheFile {
    format: String,
    format_version: u32,
    schedule: Vec<u32>,
    max_q: usize,
    entries: Vec<(usize, usize, usize, String)>,
}

pub fn encode(table: &CountTable) -> Result<Vec<u8>> {
    let mut entries = Vec::new();
    for q in 1..=table.max_q() {
        for phase in 0..table.schedule().period() {
            for (p, v) in table.row(q, phase).iter().enumerate() {
                if !v.is_zero() {
                    entries.push((q, phase, p, v.to_string()));
                }
            }
        }
    }
    let file = CacheFile {
        format: FORMAT_NAME.into(),
        format_version: FORMAT_VERSION,
        schedule: table.schedule().factors().to_vec(),
        max_q: table.max_q(),
        entries,
    };
    Ok(serde_json::to_vec(&file)?)
}

pub fn decode(bytes: &[u8]) -> Result<CountTable> {
    let file: CacheFile = serde_json::from_slice(bytes)?;
    if file.format != FORMAT_NAME {
        return Err(Error::Cache(format!("unexpected format `{}`", file.format)));
    }
    if file.format_version != FORMAT_VERSION {
        return Err(Error::Cache(format!(
            "format version {} is not supported (expected {FORMAT_VERSION})",
            file.format_version
        )));
    }
    let schedule = BranchingSchedule::new(file.schedule)?;
    let period = schedule.period();
    let mut rows: Vec<Vec<Vec<BigUint>>> = vec![vec![Vec::new(); period]; file.max_q + 1];
    for (q, phase, p, count) in file.entries {
        if q > file.max_q || phase >= period || p > q {
            return Err(Error::Cache(format!("entry ({q}, {phase}, {p}) out of range")));
        }
        let v: BigUint = count
            .parse()
            .map_err(|_| Error::Cache(format!("bad count `{count}`")))?;
        let row = &mut rows[q][phase];
        if row.len() <= p {
            row.resize(p + 1, BigUint::zero());
        }
        row[p] = v;
    }
    Ok(CountTable::from_parts(schedule, file.max_q, rows))
}

/// Where cached tables live.
#[derive(Debug, Clone)]
pub struct TableCache {
    dir: PathBuf,
}

impl TableCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    /// Explicit directory, else `$HUFFENUM_CACHE_DIR`, else the platform data
    /// directory (`$XDG_DATA_HOME/huffenum` or `~/.local/share/huffenum`).
    pub fn resolve(explicit: Option<&Path>) -> Option<Self> {
        if let Some(dir) = explicit {
            return Some(Self::new(dir));
        }
        if let Some(dir) = std::env::var_os(CACHE_ENV).filter(|v| !v.is_empty()) {
            return Some(Self::new(dir));
        }
        if let Some(data) = std::env::var_os("XDG_DATA_HOME").filter(|v| !v.is_empty()) {
            return Some(Self::new(PathBuf::from(data).join("huffenum")));
        }
        std::env::var_os("HOME")
            .filter(|v| !v.is_empty())
            .map(|home| Self::new(PathBuf::from(home).join(".local/share/huffenum")))
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, schedule: &BranchingSchedule, max_q: usize) -> PathBuf {
        let tag = schedule
            .factors()
            .iter()
            .map(u32::to_string)
            .collect::<Vec<_>>()
            .join("_");
        self.dir.join(format!("counts-v{FORMAT_VERSION}-s{tag}-q{max_q}.json"))
    }

    pub fn load(&self, schedule: &BranchingSchedule, max_q: usize) -> Result<Option<CountTable>> {
        let path = self.path_for(schedule, max_q);
        match fs::read(&path) {
            Ok(bytes) => {
                let table = decode(&bytes)?;
                if table.schedule() != schedule || table.max_q() != max_q {
                    return Err(Error::Cache(format!("{} holds a different table", path.display())));
                }
                Ok(Some(table))
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    pub fn store(&self, table: &CountTable) -> Result<PathBuf> {
        fs::create_dir_all(&self.dir)?;
        let path = self.path_for(table.schedule(), table.max_q());
        let tmp = path.with_extension(format!("json.tmp{}", std::process::id()));
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(&encode(table)?)?;
            f.sync_all()?;
        }
        fs::rename(&tmp, &path)?;
        Ok(path)
    }

    /// Loads the table if cached, otherwise builds and stores it.
    pub fn load_or_build(&self, schedule: &BranchingSchedule, max_q: usize) -> Result<CountTable> {
        if let Some(t) = self.load(schedule, max_q)? {
            return Ok(t);
        }
        let table = CountTable::build(schedule, max_q);
        self.store(&table)?;
        Ok(table)
    }

    /// Cached table files, sorted by name.
    pub fn list(&self) -> Result<Vec<(PathBuf, u64)>> {
        let mut out = Vec::new();
        let entries = match fs::read_dir(&self.dir) {
            Ok(e) => e,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(out),
            Err(e) => return Err(e.into()),
        };
        for entry in entries {
            let entry = entry?;
            let name = entry.file_name();
            let name = name.to_string_lossy();
            if name.starts_with("counts-v") && name.ends_with(".json") {
                out.push((entry.path(), entry.metadata()?.len()));
            }
        }
        out.sort();
        Ok(out)
    }

    /// Removes every cached table; returns how many were deleted.
    pub fn clear(&self) -> Result<usize> {
        let files = self.list()?;
        for (path, _) in &files {
            fs::remove_file(path)?;
        }
        Ok(files.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        for s in ["2", "3", "2,3"] {
            let schedule: BranchingSchedule = s.parse().unwrap();
            let table = CountTable::build(&schedule, 40);
            let bytes = encode(&table).unwrap();
            let back = decode(&bytes).unwrap();
            assert_eq!(back, table);
            assert_eq!(encode(&back).unwrap(), bytes);
        }
    }

    #[test]
    fn hit_equals_recomputation() {
        let dir = tempfile::tempdir().unwrap();
        let cache = TableCache::new(dir.path());
        let schedule = BranchingSchedule::binary_ternary();
        assert!(cache.load(&schedule, 25).unwrap().is_none());
        let built = cache.load_or_build(&schedule, 25).unwrap();
        let first = fs::read(cache.path_for(&schedule, 25)).unwrap();
        let hit = cache.load(&schedule, 25).unwrap().unwrap();
        assert_eq!(hit, CountTable::build(&schedule, 25));
        assert_eq!(hit, built);
        cache.store(&hit).unwrap();
        assert_eq!(fs::read(cache.path_for(&schedule, 25)).unwrap(), first);
        assert_eq!(cache.list().unwrap().len(), 1);
        assert_eq!(cache.clear().unwrap(), 1);
        assert!(cache.list().unwrap().is_empty());
    }

    #[test]
    fn rejects_other_versions() {
        let table = CountTable::build(&BranchingSchedule::n_ary(2).unwrap(), 5);
        let text = String::from_utf8(encode(&table).unwrap()).unwrap();
        let bumped = text.replace("\"format_version\":1", "\"format_version\":2");
        assert!(matches!(decode(bumped.as_bytes()), Err(Error::Cache(_))));
    }

    #[test]
    fn header_layout() {
        let table = CountTable::build(&BranchingSchedule::n_ary(2).unwrap(), 3);
        let text = String::from_utf8(encode(&table).unwrap()).unwrap();
        assert_eq!(
            text,
            r#"{"format":"huffenum-count-table","format_version":1,"schedule":[2],"max_q":3,"entries":[[1,0,1,"1"],[2,0,2,"1"],[3,0,2,"1"]]}"#
        );
    }
}
