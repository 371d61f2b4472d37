//! Built-in scenarios.

pub const PRESETS: &[(&str, &str)] = &[
    ("fig4-left", include_str!("../presets/fig4-left.toml")),
    ("fig4-right", include_str!("../presets/fig4-right.toml")),
    ("fig5", include_str!("../presets/fig5.toml")),
    ("fig6", include_str!("../presets/fig6.toml")),
    ("fig6-weak", include_str!("../presets/fig6-weak.toml")),
    ("order-check", include_str!("../presets/order-check.toml")),
    ("physical-units", include_str!("../presets/physical-units.toml")),
];

pub fn get(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

/// First `description` line of a preset, for listings.
pub fn summary(text: &str) -> &str {
    text.lines()
        .find_map(|l| l.strip_prefix("description = \""))
        .and_then(|l| l.strip_suffix('"'))
        .unwrap_or("")
}
