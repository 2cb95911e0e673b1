use hexcollab_core::protocol::{decode, encode, DecodeError, Payload, WireMessage, KINDS};
use hexcollab_core::testkit::MessageGen;
use hexcollab_core::{new_game, GameConfig, Role};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn thousand_messages_per_kind_round_trip() {
    let mut gen = MessageGen::new(17);
    for kind in KINDS {
        for _ in 0..1000 {
            let msg = gen.message(kind);
            assert_eq!(msg.body.kind(), kind);
            let bytes = encode(&msg);
            assert_eq!(decode(&bytes).as_ref(), Ok(&msg), "{kind}");
            assert_eq!(encode(&msg), bytes, "encoding is deterministic");
        }
    }
}

#[test]
fn canonical_writer_matches_sorted_value() {
    let mut gen = MessageGen::new(5);
    for kind in KINDS {
        for _ in 0..50 {
            let msg = gen.message(kind);
            let sorted = serde_json::to_string(&serde_json::to_value(&msg).unwrap()).unwrap();
            assert_eq!(String::from_utf8(encode(&msg)).unwrap(), sorted, "{kind}");
        }
    }
}

#[test]
fn fresh_state_sync_round_trips() {
    let map = hexcollab_core::generate_map(&Default::default()).unwrap();
    let s = new_game(map, GameConfig::default(), 1).unwrap();
    let msg = WireMessage::new(
        1,
        Payload::StateSync {
            observation: Box::new(s.observe(Role::Follower)),
        },
    );
    let bytes = encode(&msg);
    assert_eq!(decode(&bytes).unwrap(), msg);
    let cut = &bytes[..bytes.len() / 2];
    assert!(matches!(decode(cut), Err(DecodeError::Parse(_))));
}

#[test]
fn decoder_survives_random_bytes() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..100_000 {
        let len = rng.random_range(0..64);
        let bytes: Vec<u8> = (0..len).map(|_| rng.random()).collect();
        let _ = decode(&bytes);
    }
}

#[test]
fn decoder_survives_mutated_messages() {
    let mut gen = MessageGen::new(3);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..5_000 {
        let mut bytes = encode(&gen.any_message());
        match rng.random_range(0..3) {
            0 => bytes.truncate(rng.random_range(0..bytes.len())),
            1 => {
                let i = rng.random_range(0..bytes.len());
                bytes[i] = rng.random();
            }
            _ => {
                let i = rng.random_range(0..bytes.len());
                bytes.insert(i, b"{}[],:\"\\"[rng.random_range(0..8)]);
            }
        }
        let _ = decode(&bytes);
    }
}
