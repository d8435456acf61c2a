#![no_main]

use boxinv_core::config::ProblemConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(cfg) = ProblemConfig::from_toml_str(text) else { return };
    let _ = cfg.blur_config();
    let _ = cfg.grid_spec();
    // No base directory, so `grid_csv` sources are rejected rather than read.
    for spec in [&cfg.g, &cfg.f_true].into_iter().flatten() {
        let _ = spec.build(None);
    }
});
