use grc_core::codecs::{self, BitString, ZetaModel};
use grc_core::engine::{encode, node_randoms, Encoder};
use grc_core::partition::{HeapIndex, SplitRule};
use grc_core::{Distribution1D, DistributionPair};
use proptest::prelude::*;

fn pair_strategy() -> impl Strategy<Value = DistributionPair> {
    (-1.5f64..1.5, 0.05f64..1.0, -1.0f64..1.0, 0.5f64..2.0).prop_map(|(mq, sq, mp, sp)| {
        DistributionPair::new(
            Distribution1D::gaussian(mq, sq * sp).unwrap(),
            Distribution1D::gaussian(mp, sp).unwrap(),
        )
        .unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn universal_codes_are_prefix_free(ns in prop::collection::vec(1u64..u64::MAX, 100)) {
        let mut stream = BitString::new();
        for &n in &ns {
            codecs::write_gamma(n, &mut stream).unwrap();
            codecs::write_delta(n, &mut stream).unwrap();
        }
        let mut r = stream.reader();
        for &n in &ns {
            prop_assert_eq!(codecs::read_gamma(&mut r).unwrap(), n);
            prop_assert_eq!(codecs::read_delta(&mut r).unwrap(), n);
        }
        prop_assert_eq!(r.remaining(), 0);
    }

    #[test]
    fn zeta_codewords_are_prefix_free(
        lambda in 1.05f64..6.0,
        ns in prop::collection::vec(prop_oneof![1u64..64, 1u64..1_000_000, 1u64..(1u64 << 62)], 100),
    ) {
        let model = ZetaModel::new(lambda).unwrap();
        let mut stream = BitString::new();
        for &n in &ns {
            stream.extend_from(&codecs::zeta_encode(n, &model).unwrap());
        }
        let mut r = stream.reader();
        for &n in &ns {
            prop_assert_eq!(codecs::zeta_decode(&mut r, &model).unwrap(), n);
        }
        prop_assert_eq!(r.remaining(), 0);
    }

    #[test]
    fn rec_codewords_are_prefix_free(pair in pair_strategy(), seeds in prop::collection::vec(any::<u64>(), 100)) {
        let p = pair.proposal();
        for rule in [SplitRule::SampleSplit, SplitRule::Dyadic] {
            let results: Vec<_> = seeds.iter().map(|&s| encode(&pair, rule, s, None).unwrap()).collect();
            let mut bare = BitString::new();
            let mut framed = BitString::new();
            for r in &results {
                bare.extend_from(&codecs::payload(r, p).unwrap());
                framed.extend_from(&codecs::serialize(r, p).unwrap());
            }
            let mut rb = bare.reader();
            let mut rf = framed.reader();
            for (r, &seed) in results.iter().zip(&seeds) {
                let idx = codecs::rec::read_payload(&mut rb, rule, p, seed).unwrap();
                prop_assert_eq!(&idx, &r.heap_index);
                let (got_rule, idx) = codecs::deserialize(&mut rf, p, seed).unwrap();
                prop_assert_eq!(got_rule, rule);
                prop_assert_eq!(&idx, &r.heap_index);
            }
            prop_assert_eq!(rb.remaining(), 0);
            prop_assert_eq!(rf.remaining(), 0);
        }
    }

    #[test]
    fn global_codewords_are_prefix_free(depths in prop::collection::vec(0u64..200, 100)) {
        let mut stream = BitString::new();
        for &d in &depths {
            codecs::write_gamma(d + 1, &mut stream).unwrap();
        }
        let mut r = stream.reader();
        for &d in &depths {
            let idx = codecs::decode_grcg_code(&mut r).unwrap();
            prop_assert_eq!(idx.depth(), d);
            prop_assert_eq!(idx.path_bits(), vec![false; d as usize]);
        }
    }

    #[test]
    fn heap_index_path_round_trip(path in prop::collection::vec(any::<bool>(), 0..150)) {
        let idx = HeapIndex::from_path(&path);
        prop_assert_eq!(idx.depth(), path.len() as u64);
        prop_assert_eq!(idx.path_bits(), path.clone());
        let rebuilt = path.iter().fold(HeapIndex::ROOT, |n, &b| n.child(b));
        prop_assert_eq!(rebuilt, idx);
    }

    #[test]
    fn encoder_state_invariants(pair in pair_strategy(), seed in any::<u64>()) {
        for rule in SplitRule::ALL {
            let mut enc = Encoder::new(&pair, rule, seed, Some(400));
            let mut prev = enc.state().clone();
            loop {
                let done = enc.step().unwrap();
                if done.is_some() {
                    break;
                }
                let s = enc.state();
                prop_assert!(s.interval.is_subset_of(&prev.interval));
                prop_assert!(s.level >= prev.level);
                prop_assert!(s.unaccounted <= prev.unaccounted && s.unaccounted >= 0.0);
                let resid = pair.residual_mass(&s.interval, s.level);
                prop_assert!((s.unaccounted - resid).abs() < 1e-9);
                prev = s.clone();
            }
        }
    }

    #[test]
    fn decoder_reproduces_encoder(pair in pair_strategy(), seed in any::<u64>()) {
        for rule in SplitRule::ALL {
            let r = encode(&pair, rule, seed, None).unwrap();
            let code = codecs::serialize(&r, pair.proposal()).unwrap();
            let (_, idx) = codecs::deserialize(&mut code.reader(), pair.proposal(), seed).unwrap();
            let x = grc_core::decode(pair.proposal(), rule, seed, &idx).unwrap();
            prop_assert_eq!(x.to_bits(), r.sample.to_bits());
        }
    }

    #[test]
    fn node_randoms_lie_in_open_unit_interval(seed in any::<u64>(), n in 1u64..u64::MAX) {
        let r = node_randoms(seed, &HeapIndex::new(n).unwrap());
        for u in [r.u_sample, r.u_accept, r.u_branch] {
            prop_assert!(u > 0.0 && u < 1.0);
        }
    }
}
