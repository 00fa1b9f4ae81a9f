//! Flat `key = value` configuration documents.
//!
//! ```text
//! preset = "freqaug_st"
//! p = 0.5
//! seed = 7
//! ```
//!
//! Recognized keys: `filter`, `preset`, `p`, `seed`, `band`, `band_t`,
//! `band_s`, `fco_t`, `fco_s`, `random_mask_m`, `gaussian`,
//! `amplitude_mix_eta`. Later layers (command-line flags) override earlier
//! ones key by key with [`ConfigDoc::merge`]. A `[job]` table, as written
//! next to run outputs, is ignored on reading.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::augment::{FilterConfig, FreqAugConfig, Preset};
use crate::baseline::{AmplitudeMixSpec, GaussianDims, GaussianHpfSpec};
use crate::error::{Error, Result};
use crate::filters::{AxisFilter, Band, FilterSpec};

const JOB_TABLE: &str = "job";

/// Application probability when neither the document nor a preset sets one.
pub const DEFAULT_P: f64 = Preset::PROBABILITY;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDoc {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub filter: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub band: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub band_t: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub band_s: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fco_t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fco_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub random_mask_m: Option<usize>,
    /// `"k,sigma,dims"`, e.g. `"3,1.0,3d"`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gaussian: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amplitude_mix_eta: Option<f64>,
}

macro_rules! overlay {
    ($base:ident, $top:ident, $($field:ident),*) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field.clone(); } )*
    };
}

impl ConfigDoc {
    pub fn parse(text: &str) -> Result<Self> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        table.remove(JOB_TABLE);
        table.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("flat document serializes")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    /// The document followed by a `[job]` table describing the run.
    pub fn to_text_with_job<J: Serialize>(&self, job: &J) -> Result<String> {
        let job = toml::to_string(job).map_err(|e| Error::Config(e.to_string()))?;
        let mut text = self.to_text();
        if !text.is_empty() {
            text.push('\n');
        }
        text.push_str(&format!("[{JOB_TABLE}]\n{job}"));
        Ok(text)
    }

    /// Keys set in `top` replace those in `self`.
    pub fn merge(mut self, top: &ConfigDoc) -> Self {
        overlay!(
            self, top, filter, preset, p, seed, band, band_t, band_s, fco_t, fco_s,
            random_mask_m, gaussian, amplitude_mix_eta
        );
        self
    }

    fn filter_kind(&self) -> Result<&str> {
        if let Some(kind) = &self.filter {
            return Ok(kind.as_str());
        }
        Ok(if self.preset.is_some() || self.fco_t.is_some() || self.fco_s.is_some() {
            "ideal"
        } else if self.random_mask_m.is_some() {
            "random_temporal"
        } else if self.gaussian.is_some() {
            "gaussian_hpf"
        } else if self.amplitude_mix_eta.is_some() {
            "amplitude_mix"
        } else {
            return Err(Error::Config(
                "no filter configured: set a preset, a cutoff, random_mask_m, gaussian or amplitude_mix_eta".into(),
            ));
        })
    }

    fn ideal_spec(&self) -> Result<FilterSpec> {
        let preset = self.preset.as_deref().map(str::parse::<Preset>).transpose()?;
        let base = preset.map(Preset::filter_spec);
        let band_for = |specific: &Option<String>, fallback: Option<Band>| -> Result<Band> {
            match specific.as_deref().or(self.band.as_deref()) {
                Some(s) => s.parse(),
                None => Ok(fallback.unwrap_or(Band::HighPass)),
            }
        };
        let base_t = base.and_then(|b| b.temporal());
        let base_s = base.and_then(|b| b.spatial());
        let temporal = match self.fco_t.or(base_t.map(|f| f.cutoff.value())) {
            Some(fco) => Some(AxisFilter::new(band_for(&self.band_t, base_t.map(|f| f.band))?, fco)?),
            None => None,
        };
        let spatial = match self.fco_s.or(base_s.map(|f| f.cutoff.value())) {
            Some(fco) => Some(AxisFilter::new(band_for(&self.band_s, base_s.map(|f| f.band))?, fco)?),
            None => None,
        };
        FilterSpec::new(temporal, spatial)
    }

    /// Builds the operator configuration. A missing seed resolves to 0;
    /// callers that need a seed check [`ConfigDoc::seed`] first.
    pub fn resolve(&self) -> Result<FreqAugConfig> {
        let filter = match self.filter_kind()? {
            "identity" => FilterConfig::Identity,
            "ideal" => FilterConfig::Ideal(self.ideal_spec()?),
            "random_temporal" => FilterConfig::RandomTemporal {
                mask_param: self
                    .random_mask_m
                    .ok_or_else(|| Error::Config("random_temporal needs random_mask_m".into()))?,
            },
            "gaussian_hpf" => FilterConfig::GaussianHpf(parse_gaussian(
                self.gaussian
                    .as_deref()
                    .ok_or_else(|| Error::Config("gaussian_hpf needs gaussian = \"k,sigma,dims\"".into()))?,
            )?),
            "amplitude_mix" => FilterConfig::AmplitudeMix(AmplitudeMixSpec::new(
                self.amplitude_mix_eta
                    .ok_or_else(|| Error::Config("amplitude_mix needs amplitude_mix_eta".into()))?,
            )?),
            other => return Err(Error::Config(format!("unknown filter `{other}`"))),
        };
        FreqAugConfig::new(filter, self.p.unwrap_or(DEFAULT_P), self.seed.unwrap_or(0))
    }

    /// Fully explicit document equivalent to `config`.
    pub fn from_config(config: &FreqAugConfig) -> Self {
        let mut doc = ConfigDoc {
            p: Some(config.p()),
            seed: Some(config.seed),
            ..Default::default()
        };
        match config.filter {
            FilterConfig::Identity => doc.filter = Some("identity".into()),
            FilterConfig::Ideal(spec) => {
                doc.filter = Some("ideal".into());
                if let Some(t) = spec.temporal() {
                    doc.fco_t = Some(t.cutoff.value());
                    doc.band_t = Some(t.band.short_name().into());
                }
                if let Some(s) = spec.spatial() {
                    doc.fco_s = Some(s.cutoff.value());
                    doc.band_s = Some(s.band.short_name().into());
                }
            }
            FilterConfig::RandomTemporal { mask_param } => {
                doc.filter = Some("random_temporal".into());
                doc.random_mask_m = Some(mask_param);
            }
            FilterConfig::GaussianHpf(g) => {
                doc.filter = Some("gaussian_hpf".into());
                let dims = match g.dims() {
                    GaussianDims::Spatiotemporal3d => "3d",
                    GaussianDims::Spatial2d => "2d",
                };
                doc.gaussian = Some(format!("{},{},{dims}", g.kernel_size(), g.sigma()));
            }
            FilterConfig::AmplitudeMix(m) => {
                doc.filter = Some("amplitude_mix".into());
                doc.amplitude_mix_eta = Some(m.eta());
            }
        }
        doc
    }
}

/// Parses `"k,sigma,dims"`.
pub fn parse_gaussian(text: &str) -> Result<GaussianHpfSpec> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let [k, sigma, dims] = parts.as_slice() else {
        return Err(Error::Config(format!("gaussian `{text}`: expected k,sigma,dims")));
    };
    let k = k
        .parse()
        .map_err(|_| Error::Config(format!("gaussian kernel size `{k}`")))?;
    let sigma = sigma
        .parse()
        .map_err(|_| Error::Config(format!("gaussian sigma `{sigma}`")))?;
    GaussianHpfSpec::new(k, sigma, dims.parse()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_document() {
        let cfg = ConfigDoc::parse("preset = \"freqaug_st\"\nseed = 3\n").unwrap().resolve().unwrap();
        assert_eq!(cfg, Preset::FreqAugSt.config(3));
    }

    #[test]
    fn overrides_apply_key_by_key() {
        let base = ConfigDoc::parse("preset = \"freqaug_t\"\np = 0.2").unwrap();
        let top = ConfigDoc {
            fco_t: Some(0.2),
            band: Some("lpf".into()),
            ..Default::default()
        };
        let cfg = base.merge(&top).resolve().unwrap();
        assert_eq!(cfg.p(), 0.2);
        let FilterConfig::Ideal(spec) = cfg.filter else { panic!() };
        let t = spec.temporal().unwrap();
        assert_eq!((t.band, t.cutoff.value()), (Band::LowPass, 0.2));
    }

    #[test]
    fn round_trip_through_text() {
        let configs = [
            Preset::FreqAugSt.config(11),
            FreqAugConfig::new(FilterConfig::RandomTemporal { mask_param: 4 }, 0.3, 5).unwrap(),
            FreqAugConfig::new(
                FilterConfig::GaussianHpf(GaussianHpfSpec::new(3, 1.5, GaussianDims::Spatial2d).unwrap()),
                1.0,
                0,
            )
            .unwrap(),
            FreqAugConfig::new(FilterConfig::AmplitudeMix(AmplitudeMixSpec::new(0.2).unwrap()), 0.5, 9)
                .unwrap(),
            FreqAugConfig::new(FilterConfig::Identity, 1.0, 0).unwrap(),
        ];
        for cfg in configs {
            let text = ConfigDoc::from_config(&cfg).to_text();
            assert_eq!(ConfigDoc::parse(&text).unwrap().resolve().unwrap(), cfg, "{text}");
        }
    }

    #[test]
    fn job_table_is_ignored_on_reading() {
        #[derive(Serialize)]
        struct Job {
            command: &'static str,
            jobs: usize,
        }
        let doc = ConfigDoc::from_config(&Preset::FreqAugT.config(4));
        let text = doc.to_text_with_job(&Job { command: "augment", jobs: 2 }).unwrap();
        assert!(text.contains("[job]"));
        assert_eq!(ConfigDoc::parse(&text).unwrap(), doc);
        let bare = ConfigDoc::default().to_text_with_job(&Job { command: "analyze", jobs: 1 }).unwrap();
        assert_eq!(ConfigDoc::parse(&bare).unwrap(), ConfigDoc::default());
    }

    #[test]
    fn bad_documents() {
        assert!(ConfigDoc::parse("nonsense = 1").is_err());
        assert!(ConfigDoc::default().resolve().is_err());
        assert!(ConfigDoc::parse("fco_t = 0.7").unwrap().resolve().is_err());
        assert!(ConfigDoc::parse("random_mask_m = 1").unwrap().resolve().is_err());
        assert!(parse_gaussian("3,1.0").is_err());
        assert!(parse_gaussian("4,1.0,3d").is_err());
    }
}
