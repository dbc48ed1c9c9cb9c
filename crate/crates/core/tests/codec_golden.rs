use lidarsec_core::datagram::{decode, encode, Datagram, MODEL_HDL32E, MODE_STRONGEST};

const GOLDEN: &[u8] = include_bytes!("fixtures/golden_datagram.bin");

fn golden_datagram() -> Datagram {
    let mut d = Datagram {
        timestamp_us: 123_456_789,
        mode_byte: MODE_STRONGEST,
        model_byte: MODEL_HDL32E,
        ..Datagram::default()
    };
    for (k, b) in d.blocks.iter_mut().enumerate() {
        b.azimuth_raw = 9000 + 20 * k as u16;
        for (j, c) in b.cells.iter_mut().enumerate() {
            c.range_raw = 5000 + 100 * k as u16 + j as u16;
            c.intensity_raw = ((32 * k + j) % 256) as u8;
        }
    }
    d
}

#[test]
fn encode_matches_golden_bytes() {
    assert_eq!(GOLDEN.len(), 1206);
    assert_eq!(encode(&golden_datagram()), GOLDEN);
}

#[test]
fn decode_golden_bytes() {
    let d = decode(GOLDEN).unwrap();
    assert_eq!(d, golden_datagram());
    assert_eq!(d.blocks[0].azimuth_raw, 9000);
    assert_eq!(d.blocks[0].cells[0].range_raw, 5000);
}
