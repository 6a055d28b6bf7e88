#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(sentences) = mtl_oracle::data::parse_conll(text) {
        for s in &sentences {
            assert!(!s.tokens.is_empty());
            assert_eq!(s.tokens.len(), s.labels.len());
        }
    }
});
