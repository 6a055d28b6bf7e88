#![no_main]
use libfuzzer_sys::fuzz_target;

// `parse` never touches the filesystem.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(config) = mtl_oracle::config::ExperimentConfig::parse(text) {
        let _ = config.train_config(None, None);
        assert_eq!(config.task_names().len(), config.tasks.len());
    }
});
