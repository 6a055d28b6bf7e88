#![no_main]
use libfuzzer_sys::fuzz_target;
use mtl_oracle::meta::MetaDataset;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(meta) = MetaDataset::parse_csv(text) {
        // Normalized output is a fixed point of parse + write.
        let written = meta.to_csv_string();
        let again = MetaDataset::parse_csv(&written).expect("written meta-dataset parses");
        assert_eq!(again.to_csv_string(), written);
    }
});
