#![no_main]
use libfuzzer_sys::fuzz_target;
use mtl_oracle::features::pair_feature_names;
use mtl_oracle::meta::FeatureMask;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(mask) = FeatureMask::parse(text) {
        let names = pair_feature_names();
        if let Ok(cols) = mask.resolve(&names) {
            assert!(!cols.is_empty());
            assert!(cols.windows(2).all(|w| w[0] < w[1]));
            assert!(cols.iter().all(|&c| c < names.len()));
        }
    }
});
