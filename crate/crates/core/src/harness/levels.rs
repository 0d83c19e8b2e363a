use std::fs;
use std::path::{Path, PathBuf};

use crate::engine::Composition;

use super::config::{generate, read_map};
use super::HarnessError;

/// Writes `count` distinct random levels for `map` into `out_dir` as
/// `<map stem>_<composition>_<nnn>.lvl`. The map is referenced by its path
/// relative to `out_dir` when both are relative, else by the path as given.
pub fn gen_levels(
    map: &Path,
    composition: &Composition,
    count: usize,
    seed: u64,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, HarnessError> {
    let grid = read_map(map)?;
    let map_ref = map_reference(map, out_dir);
    let levels = generate(&grid, &map_ref, composition, count, seed)?;
    fs::create_dir_all(out_dir).map_err(|source| HarnessError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let stem = map
        .file_stem()
        .map_or("map".into(), |s| s.to_string_lossy());
    let mut paths = Vec::new();
    for (i, level) in levels.iter().enumerate() {
        let path = out_dir.join(format!("{stem}_{composition}_{i:03}.lvl"));
        fs::write(&path, level.to_string()).map_err(|source| HarnessError::Io {
            path: path.clone(),
            source,
        })?;
        paths.push(path);
    }
    Ok(paths)
}

fn map_reference(map: &Path, out_dir: &Path) -> String {
    if map.is_relative() && out_dir.is_relative() {
        let ups = out_dir
            .components()
            .filter(|c| matches!(c, std::path::Component::Normal(_)))
            .count();
        let mut rel = PathBuf::new();
        for _ in 0..ups {
            rel.push("..");
        }
        rel.push(map);
        return rel.to_string_lossy().into_owned();
    }
    map.to_string_lossy().into_owned()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{load_level, GameConfig, Grid};
    use std::sync::Arc;

    fn lake() -> PathBuf {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../maps/lake24.map")
    }

    #[test]
    fn writes_distinct_reproducible_levels() {
        let dir = tempfile::tempdir().unwrap();
        let comp: Composition = "K1W1A1H".parse().unwrap();
        let a = gen_levels(&lake(), &comp, 12, 5, &dir.path().join("a")).unwrap();
        let b = gen_levels(&lake(), &comp, 12, 5, &dir.path().join("b")).unwrap();
        assert_eq!(a.len(), 12);
        let read = |p: &PathBuf| fs::read_to_string(p).unwrap();
        let texts: Vec<String> = a.iter().map(read).collect();
        for i in 0..texts.len() {
            assert_eq!(texts[i], read(&b[i]));
            for j in i + 1..texts.len() {
                assert_ne!(texts[i], texts[j]);
            }
        }
        let grid = Arc::new(read_map(&lake()).unwrap());
        let s = load_level(&texts[0], grid, Arc::new(GameConfig::default())).unwrap();
        assert_eq!(s.units().len(), 8);
    }

    #[test]
    fn large_armies_fit() {
        let dir = tempfile::tempdir().unwrap();
        let comp: Composition = "K10W".parse().unwrap();
        let paths = gen_levels(&lake(), &comp, 2, 1, dir.path()).unwrap();
        let text = fs::read_to_string(&paths[0]).unwrap();
        let level = crate::engine::LevelFile::parse(&text).unwrap();
        for p in 0..2 {
            assert_eq!(
                level.placements.iter().filter(|x| x.player == p).count(),
                11
            );
        }
    }

    #[test]
    fn too_many_units_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let tiny = dir.path().join("tiny.map");
        fs::write(&tiny, Grid::open(2, 2).to_map_text()).unwrap();
        let comp: Composition = "K1W1A1H".parse().unwrap();
        assert!(gen_levels(&tiny, &comp, 1, 0, dir.path()).is_err());
    }

    #[test]
    fn relative_map_reference() {
        assert_eq!(
            map_reference(Path::new("maps/x.map"), Path::new("levels/k")),
            "../../maps/x.map"
        );
    }
}
