#![allow(dead_code)]

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn solarcast(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_solarcast"))
        .args(args)
        .output()
        .expect("spawn solarcast")
}

pub fn describe(out: &Output) -> String {
    format!(
        "status {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    )
}

/// `x[n] = sum phi[k] x[n-1-k] + e[n]` with unit normal innovations, after a
/// burn-in of 1,000 samples.
pub fn ar_process(phi: &[f64], n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let burn = 1000;
    let mut x = vec![0.0; n + burn];
    for i in phi.len()..x.len() {
        let pred: f64 = phi.iter().enumerate().map(|(k, p)| p * x[i - 1 - k]).sum();
        x[i] = pred + noise.sample(&mut rng);
    }
    x.split_off(burn)
}

/// Data lines of a CSV, split on commas, with `#` comments and the column
/// header removed.
pub fn csv_records(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    let header = lines
        .next()
        .map(|h| h.split(',').map(str::to_string).collect())
        .unwrap_or_default();
    let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    (header, rows)
}

/// Parses an SVG file as XML and returns its polyline count.
pub fn svg_polylines(path: &Path) -> Result<usize, String> {
    let text = fs::read_to_string(path).map_err(|e| e.to_string())?;
    let doc = roxmltree::Document::parse(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    let root = doc.root_element();
    if root.tag_name().name() != "svg" {
        return Err(format!("{}: root element is <{}>", path.display(), root.tag_name().name()));
    }
    Ok(root.descendants().filter(|n| n.has_tag_name("polyline")).count())
}

pub fn files_with_extension(dir: &Path, ext: &str) -> Vec<std::path::PathBuf> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == ext))
        .collect();
    out.sort();
    out
}
