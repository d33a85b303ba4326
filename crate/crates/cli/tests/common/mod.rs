#![allow(dead_code)]

use std::path::{Path, PathBuf};

use clap::Parser;
use quickshift_cli::ppm::{encode_ppm, Image};
use quickshift_cli::{Cli, Command};
use quickshift_core::{Dataset, SeedSpec};
use rand::Rng;

pub fn iris() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/iris.csv")
}

pub fn parse(args: &[&str]) -> Command {
    let mut argv = vec!["lsh-quickshift"];
    argv.extend_from_slice(args);
    Cli::try_parse_from(argv).expect("test arguments parse").command
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().expect("temp paths are utf-8")
}

/// Features then, when present, the label as the last column.
pub fn write_csv(data: &Dataset, path: &Path) {
    let mut out = String::new();
    for i in 0..data.len() {
        let row: Vec<String> = data.point(i).iter().map(f64::to_string).collect();
        out.push_str(&row.join(","));
        if let Some(labels) = data.labels() {
            out.push_str(&format!(",{}", labels[i]));
        }
        out.push('\n');
    }
    std::fs::write(path, out).unwrap();
}

pub fn write_image(img: &Image, path: &Path) {
    std::fs::write(path, encode_ppm(img)).unwrap();
}

/// Left half one colour, right half another.
pub fn two_tone(width: usize, height: usize, left: [u8; 3], right: [u8; 3]) -> Image {
    let pixels = (0..width * height)
        .map(|i| if i % width < width / 2 { left } else { right })
        .collect();
    Image::new(width, height, pixels)
}

pub fn noise(width: usize, height: usize, seed: u64) -> Image {
    let mut rng = SeedSpec::new(seed).rng("noise", 0);
    let pixels = (0..width * height)
        .map(|_| [rng.random(), rng.random(), rng.random()])
        .collect();
    Image::new(width, height, pixels)
}
