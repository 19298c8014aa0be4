#![no_main]

use libfuzzer_sys::fuzz_target;
use probecount::capture::decode_probe_request;
use probecount::capture::pcap::parse_pcap_stream;

// Full capture path: pcap framing, radiotap stripping, 802.11 decode.
// Every outcome must be a structured error, never a panic.
fuzz_target!(|data: &[u8]| {
    if let Ok(stream) = parse_pcap_stream(data) {
        for frame in stream {
            match frame {
                Ok(frame) => {
                    let _ = decode_probe_request(&frame);
                }
                Err(_) => break,
            }
        }
    }
});
