#![no_main]

use libfuzzer_sys::fuzz_target;
use probecount::config::parse_kv;
use probecount::sim::ScenarioConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(entries) = parse_kv(text) {
        let _ = ScenarioConfig::from_kv(&entries);
    }
});
