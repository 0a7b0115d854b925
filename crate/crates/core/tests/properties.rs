//! Property tests over the library's invariants.

use proptest::prelude::*;

use rdlz_core::codec::container::Container;
use rdlz_core::matcher::{Candidates, Database, SearchOptions};
use rdlz_core::rd::blahut::solve_for_distortion;
use rdlz_core::rd::entropy::binary_entropy;
use rdlz_core::rd::{self, d_max, rate_distortion, rd_curve};
use rdlz_core::source::{sample_block, Sampler};
use rdlz_core::{
    CodecId, CodecParams, DistortionSpec, Limits, Model, Seed, Settings, SourceModel, SymbolBlock,
};

fn pmf(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(1u32..100, len).prop_map(|w| {
        let t: u32 = w.iter().sum();
        w.iter().map(|&x| x as f64 / t as f64).collect()
    })
}

fn integer_matrix(k: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(1u32..4, k * k).prop_map(move |v| {
        (0..k)
            .map(|i| {
                (0..k)
                    .map(|j| if i == j { 0.0 } else { v[i * k + j] as f64 })
                    .collect()
            })
            .collect()
    })
}

fn real_matrix(k: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(0.05f64..2.0, k * k).prop_map(move |v| {
        (0..k)
            .map(|i| {
                (0..k)
                    .map(|j| if i == j { 0.0 } else { v[i * k + j] })
                    .collect()
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn blahut_matches_binary_closed_form(p in 0.05f64..0.5, frac in 0.05f64..0.95) {
        let s = SourceModel::bernoulli(p).unwrap();
        let dist = DistortionSpec::hamming(2).unwrap();
        let d = frac * p;
        let ba = solve_for_distortion(&s, &dist, d, rd::BA_TOL).unwrap();
        let closed = binary_entropy(p) - binary_entropy(d);
        prop_assert!((ba.rate - closed).abs() < 1e-6, "{} vs {}", ba.rate, closed);
        let r = rate_distortion(&s, &dist, d, rd::CLOSED_FORM_TOL).unwrap();
        prop_assert!((r.rate - closed).abs() < 1e-12);
    }

    #[test]
    fn blahut_matches_uniform_closed_form(k in 3usize..6, frac in 0.05f64..0.95) {
        let s = SourceModel::uniform(k).unwrap();
        let dist = DistortionSpec::hamming(k).unwrap();
        let d = frac * (k - 1) as f64 / k as f64;
        let ba = solve_for_distortion(&s, &dist, d, rd::BA_TOL).unwrap();
        let closed = (k as f64).log2() - binary_entropy(d) - d * ((k - 1) as f64).log2();
        prop_assert!((ba.rate - closed).abs() < 1e-6, "{} vs {}", ba.rate, closed);
    }

    #[test]
    fn curves_are_monotone_and_convex(p in pmf(3), rows in integer_matrix(3)) {
        let s = SourceModel::new(p).unwrap();
        let dist = DistortionSpec::new(rows).unwrap();
        let dm = d_max(&s, &dist).unwrap();
        prop_assume!(!dm.is_degenerate());
        let c = rd_curve(&s, &dist, 12, rd::BA_TOL).unwrap();
        prop_assert!(c.is_monotone_convex(1e-6));
        for pt in &c.points {
            prop_assert!(pt.rate >= 0.0 && pt.slope <= 0.0);
            prop_assert!((pt.q_star.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn sampler_random_access_matches_sequential(
        p in pmf(4), seed in any::<u64>(), start in 0u64..10_000, len in 1usize..300,
    ) {
        let s = Sampler::new(&p).unwrap();
        let mut out = vec![0u8; len];
        s.fill(Seed(seed), start, &mut out);
        for (i, &y) in out.iter().enumerate() {
            prop_assert_eq!(y, s.symbol_at(Seed(seed), start + i as u64));
        }
        let prefix = sample_block(&p, start as usize + len, Seed(seed)).unwrap();
        prop_assert_eq!(&prefix.symbols()[start as usize..], &out[..]);
    }

    #[test]
    fn matcher_results_ignore_search_options(
        (k, rows, db, q) in (2usize..5).prop_flat_map(|k| (
            Just(k),
            prop_oneof![integer_matrix(k), real_matrix(k)],
            prop::collection::vec(0..k as u8, 1..150),
            prop::collection::vec(0..k as u8, 1..20),
        )),
        budget in 0.0f64..1.5,
        cap in 1usize..17,
    ) {
        let dist = DistortionSpec::new(rows).unwrap();
        let m = db.len();
        let database = Database::new(SymbolBlock::new(db, k).unwrap(), &dist).unwrap();
        let ell = q.len().min(m);
        let cands = Candidates::Sliding { count: m - ell + 1 };
        let reference = SearchOptions { partitions: 1, early_abandon: false };
        let want_m = database.longest_match(&q, budget, cap, reference).unwrap();
        let want_n = database.nearest_window(&q[..ell], cands, reference).unwrap();
        prop_assert!(want_m.length <= cap);
        if want_m.length > 0 {
            prop_assert!(want_m.distortion <= budget + 1e-12);
        }
        for partitions in [1, 2, 8] {
            let o = SearchOptions { partitions, early_abandon: true };
            prop_assert_eq!(database.longest_match(&q, budget, cap, o).unwrap(), want_m);
            prop_assert_eq!(database.nearest_window(&q[..ell], cands, o).unwrap(), want_n);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn codecs_roundtrip_through_container(
        codec in prop::sample::select(vec![CodecId::Gvw, CodecId::Llz, CodecId::Hyb]),
        p in pmf(3),
        frac in 0.2f64..0.8,
        n in 20usize..300,
        ell in 4usize..10,
        seed in any::<u64>(),
        msg in any::<u64>(),
    ) {
        let model = Model::new(SourceModel::new(p).unwrap(), DistortionSpec::hamming(3).unwrap())
            .unwrap();
        let d = frac * d_max(&model.source, &model.dist).unwrap().value;
        let s = Settings::new(n, ell, d, 0.03, Seed(seed)).unwrap().with_alpha(0.1).unwrap();
        let params = match CodecParams::new(codec, &model, s, Limits::default()) {
            Ok(p) => p,
            // Some operating points are legitimately rejected (e.g. W < 2).
            Err(_) => return Ok(()),
        };
        let x = sample_block(model.source.pmf(), n, Seed(msg)).unwrap();
        let (stream, rep) = params.encode(&x).unwrap();
        prop_assert_eq!(rep.total_bits, stream.bit_length());
        prop_assert!((rep.achieved_distortion
            - model.average_distortion(x.symbols(), rep.reconstruction.symbols())).abs() < 1e-15);
        if codec == CodecId::Llz {
            prop_assert!(rep.achieved_distortion <= params.point().d_bar + 1e-12);
        }
        let c = Container::seal(&params, stream);
        let back = Container::from_bytes(&c.to_bytes()).unwrap();
        prop_assert_eq!(&back, &c);
        let q = back.params(Limits::default(), None).unwrap();
        prop_assert_eq!(q.decode(&back.stream).unwrap(), rep.reconstruction);
    }
}
