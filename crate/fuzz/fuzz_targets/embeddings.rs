#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Some((&dim, rest)) = data.split_first() else {
        return;
    };
    let Ok(text) = std::str::from_utf8(rest) else {
        return;
    };
    let dim = usize::from(dim % 8) + 1;
    if let Ok(table) = mtl_oracle::data::parse_embeddings(text, dim) {
        assert_eq!(table.dim(), dim);
    }
});
