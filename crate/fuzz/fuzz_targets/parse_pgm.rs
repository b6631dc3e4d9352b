#![no_main]

use libfuzzer_sys::fuzz_target;
use strokeseg::raster::parse_pgm;

fuzz_target!(|data: &[u8]| {
    if let Ok(img) = parse_pgm(data) {
        assert_eq!(img.pixels.len(), img.width * img.height);
    }
});
