//! Named configurations shipped with the library.

use crate::config::{Bundle, KvConfig};
use crate::error::{Error, Result};

const PRESETS: &[(&str, &str)] = &[
    ("classic_static", include_str!("../presets/classic_static.cfg")),
    ("uES_static", include_str!("../presets/uES_static.cfg")),
    ("uPTES_static", include_str!("../presets/uPTES_static.cfg")),
    ("uES_shading", include_str!("../presets/uES_shading.cfg")),
    ("uES_shading_nofloor", include_str!("../presets/uES_shading_nofloor.cfg")),
    ("desk_uES", include_str!("../presets/desk_uES.cfg")),
    ("desk_classic", include_str!("../presets/desk_classic.cfg")),
    ("race_uPTES", include_str!("../presets/race_uPTES.cfg")),
    ("race_uES", include_str!("../presets/race_uES.cfg")),
    ("race_classic", include_str!("../presets/race_classic.cfg")),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

pub fn source(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn load(name: &str) -> Result<KvConfig> {
    let text = source(name).ok_or_else(|| {
        Error::InvalidParameter(format!("unknown preset `{name}`; available: {}", names().collect::<Vec<_>>().join(", ")))
    })?;
    KvConfig::parse(text, &format!("preset:{name}"))
}

pub fn bundle(name: &str) -> Result<Bundle> {
    Bundle::from_config(&load(name)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::es_controllers::Variant;
    use crate::power_stage::Plant;

    #[test]
    fn every_preset_resolves() {
        for name in names() {
            let b = bundle(name).unwrap_or_else(|e| panic!("{name}: {e}"));
            b.plant.validate().unwrap();
        }
    }

    #[test]
    fn preset_contents() {
        let pt = bundle("uPTES_static").unwrap();
        assert_eq!(pt.controller.variant, Variant::UnbiasedPT);
        assert_eq!(pt.controller.pt_stop_fraction, 5.0 / 6.0);
        let shade = bundle("uES_shading").unwrap();
        assert_eq!(shade.scenario.keyframes.len(), 4);
        assert_eq!(shade.scenario.environment_at(115.0).irradiance, 400.0);
        assert!(matches!(bundle("desk_uES").unwrap().plant, Plant::Quadratic(_)));
        assert!(load("nope").is_err());
    }
}
