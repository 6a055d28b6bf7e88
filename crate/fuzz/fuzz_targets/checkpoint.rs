#![no_main]
use libfuzzer_sys::fuzz_target;
use mtl_oracle::nn::{checkpoint_to_string, parse_checkpoint};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(model) = parse_checkpoint(text) {
        let written = checkpoint_to_string(&model);
        let again = parse_checkpoint(&written).expect("written checkpoint parses");
        assert_eq!(checkpoint_to_string(&again), written);
    }
});
