mod common;

use crc::{Crc, CRC_8_SMBUS};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use panelsim::protocol::{crc8, decode, DecodeError, decode_prefix, Command, Frame, FrameDecoder, Magic, MAX_PAYLOAD};

const ORACLE: Crc<u8> = Crc::<u8>::new(&CRC_8_SMBUS);

#[test]
fn crc_vectors_match_fixture_and_reference() {
    let vectors = common::hex_lines("crc_vectors.hex");
    assert!(vectors.len() >= 10);
    for (input, crc) in vectors {
        let data = common::unhex(&input);
        assert_eq!(crc.len(), 1);
        assert_eq!(crc8(&data), crc[0], "{input}");
        assert_eq!(ORACLE.checksum(&data), crc[0], "{input}");
    }
}

#[test]
fn fixture_frames_decode_and_reencode() {
    let frames = common::hex_lines("frames.hex");
    assert_eq!(frames.len(), 20);
    for (name, bytes) in &frames {
        let frame = decode(bytes).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(&frame.encode().unwrap(), bytes, "{name}");
        if frame.magic == Magic::Request {
            let cmd = Command::from_frame(&frame).unwrap_or_else(|s| panic!("{name}: {s}"));
            assert_eq!(&cmd.to_frame().encode().unwrap(), bytes, "{name}");
        }
    }
}

#[test]
fn every_single_bit_flip_is_detected() {
    for (name, bytes) in common::hex_lines("frames.hex") {
        for bit in 0..bytes.len() * 8 {
            let mut bad = bytes.clone();
            bad[bit / 8] ^= 1 << (bit % 8);
            assert!(decode(&bad).is_err(), "{name}: bit {bit} went unnoticed");
        }
    }
}

fn arb_frame() -> impl Strategy<Value = Frame> {
    let payload = prop_oneof![
        8 => prop::collection::vec(any::<u8>(), 0..64),
        1 => prop::collection::vec(any::<u8>(), 0..=MAX_PAYLOAD),
    ];
    (any::<bool>(), any::<u8>(), payload).prop_map(|(req, code, payload)| Frame {
        magic: if req { Magic::Request } else { Magic::Response },
        code,
        payload,
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn round_trip(frame in arb_frame()) {
        let bytes = frame.encode().unwrap();
        prop_assert_eq!(bytes.len(), frame.payload.len() + 5);
        prop_assert_eq!(ORACLE.checksum(&bytes[..bytes.len() - 1]), bytes[bytes.len() - 1]);
        prop_assert_eq!(decode(&bytes), Ok(frame));
    }
}

proptest! {
    #[test]
    fn stream_recovers_frames_between_garbage(
        frames in prop::collection::vec(arb_frame(), 1..6),
        junk in prop::collection::vec(prop::collection::vec(0u8..0xEB, 0..8), 6),
    ) {
        let mut decoder = FrameDecoder::new(Magic::Request);
        let wanted: Vec<Frame> = frames.into_iter().filter(|f| f.magic == Magic::Request).collect();
        for (f, j) in wanted.iter().zip(&junk) {
            decoder.push(j);
            decoder.push(&f.encode().unwrap());
        }
        let mut got = Vec::new();
        while let Some(r) = decoder.next_frame() {
            got.push(r.unwrap());
        }
        prop_assert_eq!(got, wanted);
    }
}

/// 10^5 random and mutated inputs through both decoders; nothing may panic
/// and every successful decode must re-encode to the bytes it came from.
#[test]
fn fuzz_decoders() {
    let corpus: Vec<Vec<u8>> = common::hex_lines("frames.hex").into_iter().map(|(_, b)| b).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut stream = FrameDecoder::new(Magic::Request);
    let mut ok = 0usize;
    for i in 0..100_000 {
        let input: Vec<u8> = if i % 2 == 0 {
            let len = rng.random_range(0..48);
            (0..len).map(|_| rng.random()).collect()
        } else {
            let mut b = corpus[rng.random_range(0..corpus.len())].clone();
            for _ in 0..rng.random_range(1..4) {
                let at = rng.random_range(0..b.len());
                match rng.random_range(0..3) {
                    0 => b[at] = rng.random(),
                    1 => b.truncate(at),
                    _ => b.insert(at, rng.random()),
                }
                if b.is_empty() {
                    break;
                }
            }
            b
        };
        if let Ok(frame) = decode(&input) {
            assert_eq!(frame.encode().unwrap(), input);
            ok += 1;
        }
        if let Ok((frame, used)) = decode_prefix(&input) {
            assert_eq!(frame.encode().unwrap(), input[..used]);
        }
        stream.push(&input);
        while let Some(r) = stream.next_frame() {
            if let Ok(f) = r {
                let _ = Command::from_frame(&f);
            }
        }
        assert!(stream.buffered() <= MAX_PAYLOAD + 5);
    }
    // Mutations occasionally produce valid frames; random bytes almost never do.
    assert!(ok < 100_000);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2_000))]

    #[test]
    fn payload_bit_flip_is_bad_crc(
        frame in arb_frame().prop_filter("non-empty", |f| !f.payload.is_empty()),
        pick in any::<prop::sample::Index>(),
    ) {
        let mut bytes = frame.encode().unwrap();
        let bit = pick.index(frame.payload.len() * 8);
        bytes[4 + bit / 8] ^= 1 << (bit % 8);
        let bad_crc = matches!(decode(&bytes), Err(DecodeError::BadCrc { .. }));
        prop_assert!(bad_crc, "bit {}", bit);
    }
}
