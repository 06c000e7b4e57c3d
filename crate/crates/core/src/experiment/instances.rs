use std::path::{Path, PathBuf};

use super::ExperimentConfig;
use crate::domains::{maze_generate, sokoban_generate, AnyInstance, Domain, MazeGrid, SokobanLevel};
use crate::{Error, Result};

/// Domains the harness can generate from a config.
pub trait Generate: Domain {
    fn generate(config: &ExperimentConfig, seed: u64) -> Result<Self>;
}

impl Generate for MazeGrid {
    fn generate(config: &ExperimentConfig, seed: u64) -> Result<Self> {
        maze_generate(config.maze_size, seed, config.wall_break_rate, config.teleport_pairs)
    }
}

impl Generate for SokobanLevel {
    fn generate(config: &ExperimentConfig, seed: u64) -> Result<Self> {
        sokoban_generate(config.sokoban_size, config.boxes, seed)
    }
}

/// Which generated set an instance belongs to; each draws its seeds from a
/// separate stream so the sets never share an instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

/// Seed of instance `index` of `split` under the master seed.
pub fn instance_seed(master: u64, split: Split, index: usize) -> u64 {
    let stream = match split {
        Split::Train => 0x5851_f42d_4c95_7f2d,
        Split::Test => 0x1405_7b7e_f767_814f,
    };
    let mut z = master ^ stream ^ (index as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    // splitmix64 finalizer
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// An instance with the name it is referred to by (its file path when it
/// was loaded from disk).
#[derive(Debug, Clone)]
pub struct NamedInstance<D> {
    pub name: String,
    pub instance: D,
}

pub fn generate_set<D: Generate>(
    config: &ExperimentConfig,
    split: Split,
    count: usize,
) -> Result<Vec<NamedInstance<D>>> {
    (0..count)
        .map(|i| {
            let instance = D::generate(config, instance_seed(config.seed, split, i))?;
            Ok(NamedInstance { name: format!("{}-{}-{i:04}", D::KIND.name(), split.name()), instance })
        })
        .collect()
}

/// Writes each instance to `dir/<name>.txt` and returns the paths.
pub fn write_set<D: Domain>(dir: &Path, set: &[NamedInstance<D>]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    set.iter()
        .map(|n| {
            let path = dir.join(format!("{}.txt", n.name));
            n.instance.clone().into_any().save(&path)?;
            Ok(path)
        })
        .collect()
}

/// Instance files of a directory in name order.
pub fn list_instance_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| Error::io(dir, err)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|p| p.extension().is_some_and(|e| e == "txt"))
        .collect();
    files.sort();
    Ok(files)
}

pub fn load_set<D: Domain>(paths: &[PathBuf]) -> Result<Vec<NamedInstance<D>>> {
    paths
        .iter()
        .map(|p| {
            Ok(NamedInstance { name: p.to_string_lossy().into_owned(), instance: D::from_any(AnyInstance::load(p)?)? })
        })
        .collect()
}
