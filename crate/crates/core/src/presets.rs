//! Bundled scenarios. All five share the Curtains structure and numbers and
//! differ only in labels.

use crate::scenario::{parse_scenario, ScenarioSpec, SpecError};

const PRESETS: [(&str, &str); 5] = [
    ("curtain", include_str!("../presets/curtain.toml")),
    ("story-prize", include_str!("../presets/story-prize.toml")),
    ("wine-bottle", include_str!("../presets/wine-bottle.toml")),
    ("cupcakes", include_str!("../presets/cupcakes.toml")),
    ("parking", include_str!("../presets/parking.toml")),
];

pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|(name, _)| *name).collect()
}

pub fn preset_source(name: &str) -> Option<&'static str> {
    let name = if name == "curtains" { "curtain" } else { name };
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

pub fn load_preset(name: &str) -> Option<Result<ScenarioSpec, SpecError>> {
    preset_source(name).map(parse_scenario)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn five_presets_parse() {
        assert_eq!(preset_names().len(), 5);
        for name in preset_names() {
            let spec = load_preset(name).unwrap().unwrap();
            assert_eq!(spec.name, name);
        }
    }

    #[test]
    fn curtain_preset_is_the_default() {
        let spec = load_preset("curtains").unwrap().unwrap();
        assert_eq!(spec, ScenarioSpec::default());
        assert_eq!(preset_source("curtain").unwrap(), ScenarioSpec::default().to_toml());
    }
}
