//! Bundled experiment files. The text is compiled in from `presets/` so the
//! exact protocol can be printed, inspected and edited.

pub const PRESETS: &[(&str, &str)] = &[
    ("fig2-mlr-mnist-q8", include_str!("../presets/fig2-mlr-mnist-q8.exp")),
    ("fig2-mlr-mnist-q8-desk", include_str!("../presets/fig2-mlr-mnist-q8-desk.exp")),
    ("fig6-gamma-sweep", include_str!("../presets/fig6-gamma-sweep.exp")),
    ("fig6-gamma-sweep-desk", include_str!("../presets/fig6-gamma-sweep-desk.exp")),
    ("quad-convergence", include_str!("../presets/quad-convergence.exp")),
    ("quad-convergence-desk", include_str!("../presets/quad-convergence-desk.exp")),
];

pub fn preset(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

pub fn names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}
