#![no_main]
use libfuzzer_sys::fuzz_target;
use mtl_oracle::trainer::LossCurve;

fuzz_target!(|data: &[u8]| {
    let Some((&total, rest)) = data.split_first() else {
        return;
    };
    let Ok(text) = std::str::from_utf8(rest) else {
        return;
    };
    let total = usize::from(total) * 10;
    if let Ok(curve) = LossCurve::parse_csv(text, total) {
        let written = curve.to_csv_string();
        let again = LossCurve::parse_csv(&written, total).expect("written curve parses");
        assert_eq!(again.to_csv_string(), written);
    }
});
