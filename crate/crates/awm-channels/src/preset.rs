//! Built-in channel presets, embedded from `presets/zcu.toml`.

use crate::gpio::{EmioPreset, GpioPreset};
use crate::model::{ChannelError, ChannelTimingModel};
use crate::rmsg::RmsgModel;
use serde::Deserialize;

const ZCU_PRESETS: &str = include_str!("../presets/zcu.toml");

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresetCatalog {
    #[serde(default)]
    pub dma: Vec<ChannelTimingModel>,
    #[serde(default)]
    pub gpio: Vec<GpioPreset>,
    #[serde(default)]
    pub emio: Vec<EmioPreset>,
    pub rmsg: RmsgModel,
}

impl PresetCatalog {
    /// The presets shipped with the crate.
    pub fn builtin() -> Self {
        Self::from_toml(ZCU_PRESETS).expect("embedded presets are valid")
    }

    pub fn from_toml(text: &str) -> Result<Self, ChannelError> {
        let catalog: PresetCatalog =
            toml::from_str(text).map_err(|e| ChannelError::PresetFile(e.to_string()))?;
        for model in &catalog.dma {
            model.validate()?;
        }
        Ok(catalog)
    }

    pub fn dma(&self, name: &str) -> Result<&ChannelTimingModel, ChannelError> {
        self.dma
            .iter()
            .find(|m| m.name == name)
            .ok_or_else(|| ChannelError::UnknownPreset(name.to_string()))
    }

    pub fn gpio(&self, name: &str) -> Result<&GpioPreset, ChannelError> {
        self.gpio
            .iter()
            .find(|m| m.name == name)
            .ok_or_else(|| ChannelError::UnknownPreset(name.to_string()))
    }

    pub fn emio(&self, name: &str) -> Result<&EmioPreset, ChannelError> {
        self.emio
            .iter()
            .find(|m| m.name == name)
            .ok_or_else(|| ChannelError::UnknownPreset(name.to_string()))
    }

    /// All addressable preset names, for error listings.
    pub fn names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.dma.iter().map(|m| m.name.clone()).collect();
        names.extend(self.gpio.iter().map(|m| m.name.clone()));
        names.extend(self.emio.iter().map(|m| m.name.clone()));
        names.push("rmsg".to_string());
        names
    }
}
