#![no_main]
use libfuzzer_sys::fuzz_target;
use mtl_oracle::trainer::GainMatrix;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(gains) = GainMatrix::parse_csv(text) {
        let written = gains.to_csv_string();
        let again = GainMatrix::parse_csv(&written).expect("written matrix parses");
        assert_eq!(again.to_csv_string(), written);
    }
});
