#![no_main]

use boxinv_core::io::read_grid_csv;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(grid) = read_grid_csv(data) {
        let _ = grid.into_sampled();
    }
});
