//! Latent geometry of published video model configurations.
//!
//! The registry lives in `presets/presets.toml` and is compiled in. Each
//! entry records the video frame count, the temporal compression and the
//! latent height and width; `f` and `s` are derived from those.

use std::sync::OnceLock;

use serde::Deserialize;

use crate::blocksparse::DEFAULT_BLOCK_SIZE;
use crate::error::{Error, Result};
use crate::grid::GridShape;

const REGISTRY: &str = include_str!("../presets/presets.toml");

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Preset {
    pub name: String,
    pub model: String,
    pub resolution: String,
    pub video_frames: usize,
    pub temporal_compression: usize,
    pub latent_height: usize,
    pub latent_width: usize,
}

impl Preset {
    /// `(video_frames - 1) / temporal_compression + 1`.
    pub fn frames(&self) -> usize {
        (self.video_frames - 1) / self.temporal_compression + 1
    }

    pub fn tokens_per_frame(&self) -> usize {
        self.latent_height * self.latent_width
    }

    pub fn shape(&self) -> GridShape {
        GridShape::new(self.frames(), self.tokens_per_frame()).expect("registry entries are validated")
    }

    pub fn block_size(&self) -> usize {
        DEFAULT_BLOCK_SIZE
    }
}

#[derive(Deserialize)]
struct Registry {
    preset: Vec<Preset>,
}

fn parse(text: &str) -> std::result::Result<Vec<Preset>, String> {
    let registry: Registry = toml::from_str(text).map_err(|e| e.to_string())?;
    for p in &registry.preset {
        if p.temporal_compression == 0 || p.video_frames == 0 {
            return Err(format!("{}: zero frame count or compression", p.name));
        }
        if (p.video_frames - 1) % p.temporal_compression != 0 {
            return Err(format!("{}: frame count does not compress evenly", p.name));
        }
        GridShape::new(p.frames(), p.tokens_per_frame()).map_err(|e| format!("{}: {e}", p.name))?;
    }
    Ok(registry.preset)
}

/// Every registered preset, in file order.
pub fn presets() -> &'static [Preset] {
    static CELL: OnceLock<Vec<Preset>> = OnceLock::new();
    CELL.get_or_init(|| parse(REGISTRY).expect("bundled preset registry is valid"))
}

pub fn preset(name: &str) -> Result<&'static Preset> {
    presets()
        .iter()
        .find(|p| p.name.eq_ignore_ascii_case(name))
        .ok_or_else(|| Error::UnknownPreset(name.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_dimensions() {
        let table = [
            ("hunyuan-117", 30, 3840),
            ("hunyuan-253", 64, 3600),
            ("hunyuan-509", 128, 3600),
            ("wan-69", 18, 3840),
            ("wan-161", 41, 3600),
            ("mochi-163", 28, 1590),
            ("mochi-331", 56, 1590),
            ("mochi-667", 112, 1590),
        ];
        assert_eq!(presets().len(), table.len());
        for (name, f, s) in table {
            let p = preset(name).unwrap();
            assert_eq!((p.frames(), p.tokens_per_frame()), (f, s), "{name}");
            assert_eq!(p.block_size(), 128);
        }
    }

    #[test]
    fn about_115k_tokens_at_125_frames() {
        let p = preset("hunyuan-253").unwrap();
        let tokens = ((125 - 1) / p.temporal_compression + 1) * p.tokens_per_frame();
        assert_eq!(tokens, 115_200);
    }

    #[test]
    fn unknown_name() {
        assert_eq!(preset("sora-1"), Err(Error::UnknownPreset("sora-1".into())));
        assert!(preset("WAN-161").is_ok());
    }

    #[test]
    fn rejects_uneven_compression() {
        let text = REGISTRY.replacen("video_frames = 117", "video_frames = 118", 1);
        assert!(parse(&text).unwrap_err().contains("hunyuan-117"));
    }
}
