//! Raster containers and file formats.
//!
//! A [`Scene`] is four little-endian `u16` band planes (red, green, blue,
//! NIR) described by a JSON manifest, plus an optional ground-truth label
//! stored as a binary PGM. Masks are always binary PGM (`P5`, maxval 255)
//! holding only the values 0 and 255.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const BAND_NAMES: [&str; 4] = ["red", "green", "blue", "nir"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Band {
    Red = 0,
    Green = 1,
    Blue = 2,
    Nir = 3,
}

/// Per-pixel plume/background map, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    values: Vec<bool>,
}

impl BinaryMask {
    /// All-background mask.
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            values: vec![false; width * height],
        }
    }

    pub fn from_values(width: usize, height: usize, values: Vec<bool>) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::SizeMismatch(format!(
                "mask {}x{} needs {} values, got {}",
                width,
                height,
                width * height,
                values.len()
            )));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut values = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                values.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            values,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.values[y * self.width + x]
    }

    /// Signed lookup; anything outside the frame reads as background.
    #[inline]
    pub fn get_or_false(&self, x: i64, y: i64) -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < self.width
            && (y as usize) < self.height
            && self.values[y as usize * self.width + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.values[y * self.width + x] = v;
    }

    pub fn count(&self) -> usize {
        self.values.iter().filter(|&&v| v).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.values.iter().any(|&v| v)
    }

    pub fn complement(&self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            values: self.values.iter().map(|v| !v).collect(),
        }
    }

    /// True when every plume pixel of `self` is also plume in `other`.
    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.dims() == other.dims()
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(&a, &b)| !a || b)
    }

    pub fn check_dims(&self, other: (usize, usize)) -> Result<()> {
        if self.dims() != other {
            return Err(Error::DimensionMismatch {
                expected: other,
                actual: self.dims(),
            });
        }
        Ok(())
    }
}

/// Real-valued raster with every value in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedField {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl NormalizedField {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument("field dimensions must be positive".into()));
        }
        if values.len() != width * height {
            return Err(Error::SizeMismatch(format!(
                "field {}x{} needs {} values, got {}",
                width,
                height,
                width * height,
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidArgument(format!("field value {v} outside [0,1]")));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            values: vec![0.0; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Divide by the field maximum. An all-zero field stays all-zero.
    pub(crate) fn from_unnormalized(width: usize, height: usize, mut values: Vec<f64>) -> Self {
        let max = values.iter().copied().fold(0.0, f64::max);
        if max > 0.0 {
            for v in &mut values {
                *v = (*v / max).clamp(0.0, 1.0);
            }
        }
        Self {
            width,
            height,
            values,
        }
    }
}

/// Four-band image plus optional ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    id: String,
    width: usize,
    height: usize,
    bands: [Vec<u16>; 4],
    label: Option<BinaryMask>,
    gsd_m: f64,
}

impl Scene {
    pub fn new(
        id: impl Into<String>,
        width: usize,
        height: usize,
        bands: Vec<Vec<u16>>,
        label: Option<BinaryMask>,
        gsd_m: f64,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument("scene dimensions must be positive".into()));
        }
        if bands.len() != 4 {
            return Err(Error::BandCount(bands.len()));
        }
        for (name, band) in BAND_NAMES.iter().zip(&bands) {
            if band.len() != width * height {
                return Err(Error::SizeMismatch(format!(
                    "band {name} has {} samples, expected {}",
                    band.len(),
                    width * height
                )));
            }
        }
        if let Some(label) = &label {
            label.check_dims((width, height))?;
        }
        let mut it = bands.into_iter();
        let bands = [
            it.next().unwrap(),
            it.next().unwrap(),
            it.next().unwrap(),
            it.next().unwrap(),
        ];
        Ok(Self {
            id: id.into(),
            width,
            height,
            bands,
            label,
            gsd_m,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn band(&self, band: Band) -> &[u16] {
        &self.bands[band as usize]
    }

    pub fn bands(&self) -> &[Vec<u16>; 4] {
        &self.bands
    }

    pub fn label(&self) -> Option<&BinaryMask> {
        self.label.as_ref()
    }

    pub fn require_label(&self) -> Result<&BinaryMask> {
        self.label
            .as_ref()
            .ok_or_else(|| Error::MissingLabel(self.id.clone()))
    }

    pub fn gsd_m(&self) -> f64 {
        self.gsd_m
    }

    pub fn with_label(mut self, label: Option<BinaryMask>) -> Result<Self> {
        if let Some(l) = &label {
            l.check_dims(self.dims())?;
        }
        self.label = label;
        Ok(self)
    }

    /// Normalized `[r, g, b, nir]` features of pixel `idx`.
    #[inline]
    pub fn features(&self, idx: usize) -> [f64; 4] {
        [
            normalize_sample(self.bands[0][idx]),
            normalize_sample(self.bands[1][idx]),
            normalize_sample(self.bands[2][idx]),
            normalize_sample(self.bands[3][idx]),
        ]
    }
}

#[inline]
pub fn normalize_sample(v: u16) -> f64 {
    v as f64 / u16::MAX as f64
}

/// Every band divided by the `u16` maximum.
pub fn normalize(scene: &Scene) -> [NormalizedField; 4] {
    let field = |b: &Vec<u16>| NormalizedField {
        width: scene.width,
        height: scene.height,
        values: b.iter().map(|&v| normalize_sample(v)).collect(),
    };
    [
        field(&scene.bands[0]),
        field(&scene.bands[1]),
        field(&scene.bands[2]),
        field(&scene.bands[3]),
    ]
}

/// Block-mean downsampling by an integer factor. Trailing partial blocks
/// are dropped. Labels are downsampled by majority vote, ties counting as
/// plume.
pub fn downsample(scene: &Scene, factor: usize) -> Result<Scene> {
    if factor < 1 {
        return Err(Error::InvalidArgument("downsample factor must be >= 1".into()));
    }
    let (w, h) = (scene.width / factor, scene.height / factor);
    if w == 0 || h == 0 {
        return Err(Error::InvalidArgument(format!(
            "factor {factor} larger than scene {}x{}",
            scene.width, scene.height
        )));
    }
    let n = (factor * factor) as u64;
    let block_sum = |src: &dyn Fn(usize) -> u64, ox: usize, oy: usize| -> u64 {
        let mut sum = 0u64;
        for y in oy * factor..(oy + 1) * factor {
            for x in ox * factor..(ox + 1) * factor {
                sum += src(y * scene.width + x);
            }
        }
        sum
    };

    let bands = scene
        .bands
        .iter()
        .map(|band| {
            let src = |i: usize| band[i] as u64;
            let mut out = Vec::with_capacity(w * h);
            for oy in 0..h {
                for ox in 0..w {
                    // round half up
                    out.push(((2 * block_sum(&src, ox, oy) + n) / (2 * n)) as u16);
                }
            }
            out
        })
        .collect();

    let label = scene.label.as_ref().map(|label| {
        let src = |i: usize| label.values[i] as u64;
        BinaryMask::from_fn(w, h, |ox, oy| 2 * block_sum(&src, ox, oy) >= n)
    });

    Scene::new(
        scene.id.clone(),
        w,
        h,
        bands,
        label,
        scene.gsd_m * factor as f64,
    )
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BandEntry {
    pub name: String,
    pub file: String,
}

/// On-disk scene manifest. Paths are relative to the manifest's directory.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SceneManifest {
    pub id: String,
    pub width: usize,
    pub height: usize,
    pub dtype: String,
    pub byte_order: String,
    pub bands: Vec<BandEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub gsd_m: f64,
}

fn manifest_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Manifest {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

pub fn load_scene(manifest_path: impl AsRef<Path>) -> Result<Scene> {
    let manifest_path = manifest_path.as_ref();
    let text = fs::read_to_string(manifest_path).map_err(|e| Error::io(manifest_path, e))?;
    let manifest: SceneManifest =
        serde_json::from_str(&text).map_err(|e| manifest_err(manifest_path, e.to_string()))?;
    if manifest.dtype != "u16" {
        return Err(manifest_err(manifest_path, format!("unsupported dtype {}", manifest.dtype)));
    }
    if manifest.byte_order != "little" {
        return Err(manifest_err(
            manifest_path,
            format!("unsupported byte order {}", manifest.byte_order),
        ));
    }
    if manifest.bands.len() != 4 {
        return Err(Error::BandCount(manifest.bands.len()));
    }
    for (entry, expected) in manifest.bands.iter().zip(BAND_NAMES) {
        if entry.name != expected {
            return Err(manifest_err(
                manifest_path,
                format!("band order must be red,green,blue,nir; found {} where {expected} expected", entry.name),
            ));
        }
    }
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let expected_bytes = manifest.width * manifest.height * 2;
    let mut bands = Vec::with_capacity(4);
    for entry in &manifest.bands {
        let path = base.join(&entry.file);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        if bytes.len() != expected_bytes {
            return Err(Error::SizeMismatch(format!(
                "band file {} has {} bytes, manifest declares {}x{} ({} bytes)",
                path.display(),
                bytes.len(),
                manifest.width,
                manifest.height,
                expected_bytes
            )));
        }
        bands.push(
            bytes
                .chunks_exact(2)
                .map(|c| u16::from_le_bytes([c[0], c[1]]))
                .collect(),
        );
    }
    let label = match &manifest.label {
        Some(file) => Some(load_mask(base.join(file))?),
        None => None,
    };
    Scene::new(
        manifest.id,
        manifest.width,
        manifest.height,
        bands,
        label,
        manifest.gsd_m,
    )
}

/// Writes `<dir>/<id>.json` plus one raw plane per band (and a PGM label if
/// present). Returns the manifest path.
pub fn save_scene(scene: &Scene, dir: impl AsRef<Path>) -> Result<PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut entries = Vec::with_capacity(4);
    for (name, band) in BAND_NAMES.iter().zip(&scene.bands) {
        let file = format!("{}_{}.u16", scene.id, name);
        let mut bytes = Vec::with_capacity(band.len() * 2);
        for v in band {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        let path = dir.join(&file);
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        entries.push(BandEntry {
            name: name.to_string(),
            file,
        });
    }
    let label = match &scene.label {
        Some(mask) => {
            let file = format!("{}_label.pgm", scene.id);
            save_mask(mask, dir.join(&file))?;
            Some(file)
        }
        None => None,
    };
    let manifest = SceneManifest {
        id: scene.id.clone(),
        width: scene.width,
        height: scene.height,
        dtype: "u16".into(),
        byte_order: "little".into(),
        bands: entries,
        label,
        gsd_m: scene.gsd_m,
    };
    let path = dir.join(format!("{}.json", scene.id));
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// A list of scene manifests, paths relative to this file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub scenes: Vec<String>,
}

/// Writes `manifest` as `<dir>/<name>`.
pub fn save_dataset_manifest(manifest: &DatasetManifest, dir: impl AsRef<Path>, name: &str) -> Result<PathBuf> {
    let path = dir.as_ref().join(name);
    let text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Loads every scene of a dataset manifest. A plain scene manifest is
/// accepted too and yields one scene.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<Vec<Scene>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::Manifest {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    if value.get("scenes").is_none() {
        return Ok(vec![load_scene(path)?]);
    }
    let manifest: DatasetManifest = serde_json::from_value(value).map_err(|e| Error::Manifest {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    if manifest.scenes.is_empty() {
        return Err(Error::Manifest {
            path: path.to_path_buf(),
            message: "dataset lists no scenes".into(),
        });
    }
    let base = path.parent().unwrap_or(Path::new("."));
    manifest.scenes.iter().map(|s| load_scene(base.join(s))).collect()
}

pub fn encode_pgm(mask: &BinaryMask) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", mask.width, mask.height).into_bytes();
    out.extend(mask.values.iter().map(|&v| if v { 255u8 } else { 0u8 }));
    out
}

pub fn save_mask(mask: &BinaryMask, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&encode_pgm(mask))
        .map_err(|e| Error::io(path, e))
}

pub fn load_mask(path: impl AsRef<Path>) -> Result<BinaryMask> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pgm(&bytes)
}

/// Parses a binary PGM. Header tokens may be separated by any whitespace and
/// `#` comments; exactly one whitespace byte separates maxval from payload.
pub fn decode_pgm(bytes: &[u8]) -> Result<BinaryMask> {
    let mut pos = 0usize;
    let mut tokens = Vec::with_capacity(4);
    while tokens.len() < 4 {
        while pos < bytes.len() {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else if bytes[pos].is_ascii_whitespace() {
                pos += 1;
            } else {
                break;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() && bytes[pos] != b'#' {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Pgm("truncated header".into()));
        }
        tokens.push(
            std::str::from_utf8(&bytes[start..pos])
                .map_err(|_| Error::Pgm("non-ascii header".into()))?
                .to_string(),
        );
    }
    if tokens[0] != "P5" {
        return Err(Error::Pgm(format!("magic must be P5, got {}", tokens[0])));
    }
    let parse = |s: &str, what: &str| -> Result<usize> {
        s.parse::<usize>()
            .map_err(|_| Error::Pgm(format!("bad {what}: {s}")))
    };
    let width = parse(&tokens[1], "width")?;
    let height = parse(&tokens[2], "height")?;
    let maxval = parse(&tokens[3], "maxval")?;
    if maxval != 255 {
        return Err(Error::Pgm(format!("maxval must be 255, got {maxval}")));
    }
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(Error::Pgm("missing separator after maxval".into()));
    }
    pos += 1;
    let payload = &bytes[pos..];
    if payload.len() != width * height {
        return Err(Error::Pgm(format!(
            "payload has {} bytes, header declares {}x{}",
            payload.len(),
            width,
            height
        )));
    }
    let mut values = Vec::with_capacity(payload.len());
    for &b in payload {
        match b {
            0 => values.push(false),
            255 => values.push(true),
            other => return Err(Error::Pgm(format!("pixel value {other} not in {{0,255}}"))),
        }
    }
    BinaryMask::from_values(width, height, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn scene_2x2(bands: usize) -> Vec<Vec<u16>> {
        (0..bands).map(|b| vec![b as u16, 1, 2, 65535]).collect()
    }

    #[test]
    fn smallest_scene_loads() {
        let dir = tempfile::tempdir().unwrap();
        let scene = Scene::new("s", 2, 2, scene_2x2(4), None, 0.5).unwrap();
        let manifest = save_scene(&scene, dir.path()).unwrap();
        for name in BAND_NAMES {
            let len = fs::metadata(dir.path().join(format!("s_{name}.u16"))).unwrap().len();
            assert_eq!(len, 8);
        }
        let loaded = load_scene(&manifest).unwrap();
        assert_eq!((loaded.width(), loaded.height()), (2, 2));
        assert_eq!(loaded, scene);
    }

    #[test]
    fn dataset_manifest_lists_scenes() {
        let dir = tempfile::tempdir().unwrap();
        let a = Scene::new("a", 2, 2, scene_2x2(4), None, 0.5).unwrap();
        let b = Scene::new("b", 2, 2, scene_2x2(4), None, 0.5).unwrap();
        save_scene(&a, dir.path().join("sub")).unwrap();
        save_scene(&b, dir.path()).unwrap();
        let m = DatasetManifest { scenes: vec!["sub/a.json".into(), "b.json".into()] };
        let path = save_dataset_manifest(&m, dir.path(), "set.json").unwrap();
        assert_eq!(load_dataset(&path).unwrap(), vec![a, b.clone()]);
        assert_eq!(load_dataset(dir.path().join("b.json")).unwrap(), vec![b]);
        let empty = save_dataset_manifest(&DatasetManifest { scenes: vec![] }, dir.path(), "e.json").unwrap();
        assert!(matches!(load_dataset(empty), Err(Error::Manifest { .. })));
    }

    #[test]
    fn three_band_manifest_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let scene = Scene::new("s", 2, 2, scene_2x2(4), None, 0.5).unwrap();
        let path = save_scene(&scene, dir.path()).unwrap();
        let mut manifest: SceneManifest =
            serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        manifest.bands.pop();
        fs::write(&path, serde_json::to_string(&manifest).unwrap()).unwrap();
        let err = load_scene(&path).unwrap_err();
        assert!(err.to_string().contains("band count"), "{err}");
        assert!(matches!(
            Scene::new("s", 2, 2, scene_2x2(3), None, 0.5),
            Err(Error::BandCount(3))
        ));
    }

    #[test]
    fn band_size_mismatch_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let scene = Scene::new("s", 2, 2, scene_2x2(4), None, 0.5).unwrap();
        let path = save_scene(&scene, dir.path()).unwrap();
        fs::write(dir.path().join("s_nir.u16"), [0u8; 6]).unwrap();
        assert!(matches!(load_scene(&path), Err(Error::SizeMismatch(_))));
        fs::remove_file(dir.path().join("s_nir.u16")).unwrap();
        assert!(matches!(load_scene(&path), Err(Error::Io { .. })));
    }

    #[test]
    fn scene_round_trip_with_label_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let bands: Vec<Vec<u16>> = (0..4)
            .map(|b| (0..15u32).map(|i| (i * 4099 + b * 17) as u16).collect())
            .collect();
        let label = BinaryMask::from_fn(5, 3, |x, y| (x + y) % 3 == 0);
        let scene = Scene::new("rt", 5, 3, bands, Some(label), 0.5).unwrap();
        let path = save_scene(&scene, dir.path()).unwrap();
        let before: Vec<Vec<u8>> = BAND_NAMES
            .iter()
            .map(|n| fs::read(dir.path().join(format!("rt_{n}.u16"))).unwrap())
            .collect();
        let loaded = load_scene(&path).unwrap();
        assert_eq!(loaded, scene);
        let dir2 = tempfile::tempdir().unwrap();
        save_scene(&loaded, dir2.path()).unwrap();
        for (n, b) in BAND_NAMES.iter().zip(before) {
            assert_eq!(fs::read(dir2.path().join(format!("rt_{n}.u16"))).unwrap(), b);
        }
    }

    #[test]
    fn pgm_encoding() {
        let empty = BinaryMask::new(4, 4);
        let bytes = encode_pgm(&empty);
        let header = b"P5\n4 4\n255\n";
        assert_eq!(&bytes[..header.len()], header);
        assert_eq!(&bytes[header.len()..], &[0u8; 16]);

        let mut one = BinaryMask::new(4, 4);
        one.set(0, 0, true);
        assert_eq!(encode_pgm(&one)[header.len()], 255);
    }

    #[test]
    fn pgm_rejects_bad_input() {
        assert!(decode_pgm(b"P2\n1 1\n255\n\x00").is_err());
        assert!(decode_pgm(b"P5\n1 1\n").is_err());
        assert!(decode_pgm(b"P5\n2 1\n255\n\x00").is_err());
        let err = decode_pgm(b"P5\n1 1\n255\n\x07").unwrap_err();
        assert!(err.to_string().contains("not in"));
        let ok = decode_pgm(b"P5 # comment\n1 1\n255\n\xff").unwrap();
        assert!(ok.get(0, 0));
    }

    #[test]
    fn normalize_endpoints() {
        let scene = Scene::new("n", 3, 1, vec![vec![0, 32768, 65535]; 4], None, 1.0).unwrap();
        let fields = normalize(&scene);
        assert_eq!(fields[0].get(0, 0), 0.0);
        assert_eq!(fields[2].get(2, 0), 1.0);
        assert!((fields[3].get(1, 0) - 32768.0 / 65535.0).abs() < 1e-15);
        assert!((fields[3].get(1, 0) - 0.50001).abs() < 1e-5);
    }

    #[test]
    fn downsample_cases() {
        let scene = Scene::new("d", 2, 2, vec![vec![0, 0, 65535, 65535]; 4], None, 0.5).unwrap();
        let down = downsample(&scene, 2).unwrap();
        assert_eq!(down.dims(), (1, 1));
        assert_eq!(down.band(Band::Blue), &[32768]);
        assert_eq!(downsample(&scene, 1).unwrap(), scene);
        assert!(downsample(&scene, 0).is_err());

        let five = Scene::new("f", 5, 5, vec![vec![7; 25]; 4], None, 0.5).unwrap();
        assert_eq!(downsample(&five, 2).unwrap().dims(), (2, 2));
    }

    #[test]
    fn downsample_label_majority_ties_to_plume() {
        let label = BinaryMask::from_values(2, 2, vec![true, true, false, false]).unwrap();
        let scene = Scene::new("d", 2, 2, vec![vec![1; 4]; 4], Some(label), 0.5).unwrap();
        assert!(downsample(&scene, 2).unwrap().label().unwrap().get(0, 0));
        let label = BinaryMask::from_values(2, 2, vec![true, false, false, false]).unwrap();
        let scene = scene.with_label(Some(label)).unwrap();
        assert!(!downsample(&scene, 2).unwrap().label().unwrap().get(0, 0));
    }

    proptest! {
        #[test]
        fn mask_pgm_round_trip(seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mask = BinaryMask::from_fn(64, 64, |_, _| rng.gen_bool(0.3));
            prop_assert_eq!(decode_pgm(&encode_pgm(&mask)).unwrap(), mask);
        }

        #[test]
        fn normalize_is_monotone(a in any::<u16>(), b in any::<u16>()) {
            let (lo, hi) = (a.min(b), a.max(b));
            prop_assert!(normalize_sample(lo) <= normalize_sample(hi));
        }

        #[test]
        fn downsample_dims_floor(w in 1usize..20, h in 1usize..20, f in 1usize..5) {
            prop_assume!(w >= f && h >= f);
            let scene = Scene::new("p", w, h, vec![vec![3; w * h]; 4], Some(BinaryMask::new(w, h)), 1.0).unwrap();
            let d = downsample(&scene, f).unwrap();
            prop_assert_eq!(d.dims(), (w / f, h / f));
            if f == 1 {
                prop_assert_eq!(d, scene);
            }
        }
    }
}
