//! Benchmark inputs shared by the criterion benches.

/// `(file name, text)` pairs for the button-plus-blink program.
pub fn blink_button() -> Vec<(String, String)> {
    [
        ("Blink.jun", include_str!("../../core/tests/corpus/Blink.jun")),
        ("ModeButton.jun", include_str!("../../core/tests/corpus/ModeButton.jun")),
        ("BlinkButton.jun", include_str!("../../core/tests/corpus/BlinkButton.jun")),
    ]
    .iter()
    .map(|(f, s)| (f.to_string(), s.to_string()))
    .collect()
}

/// The hourglass skeleton, the largest program in the corpus.
pub fn hourglass() -> Vec<(String, String)> {
    [
        ("Accelerometer.jun", include_str!("../../core/tests/corpus/hourglass/Accelerometer.jun")),
        ("FastLed.jun", include_str!("../../core/tests/corpus/hourglass/FastLed.jun")),
        ("Setting.jun", include_str!("../../core/tests/corpus/hourglass/Setting.jun")),
        ("Timing.jun", include_str!("../../core/tests/corpus/hourglass/Timing.jun")),
        ("Paused.jun", include_str!("../../core/tests/corpus/hourglass/Paused.jun")),
        ("Finale.jun", include_str!("../../core/tests/corpus/hourglass/Finale.jun")),
        ("Hourglass.jun", include_str!("../../core/tests/corpus/hourglass/Hourglass.jun")),
    ]
    .iter()
    .map(|(f, s)| (f.to_string(), s.to_string()))
    .collect()
}

/// Stdlib followed by `files`, as the pipeline would see them.
pub fn with_stdlib(files: &[(String, String)]) -> Vec<(String, String)> {
    let mut all = juniper::stdlib::sources();
    all.extend(files.iter().cloned());
    all
}
