use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use fqam_fbmc::fbmc::{transmux_response, FbmcConfig, FilterBank};
use fqam_fbmc::filter::{
    block_deinterleave_with, block_interleave, parse_filter, filter_to_text, phydyas, InterleaveRule,
};
use fqam_fbmc::harness::random_bits;
use fqam_fbmc::metrics::{count_errors, papr_ccdf_from_values, self_sir, FqamPattern, SelfSirMode};
use fqam_fbmc::modulation::{decode_frame, encode_frame, Detection, FqamConfig, GroupLayout, Scheme};
use fqam_fbmc::Grid;

fn complex() -> impl Strategy<Value = Complex64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(re, im)| Complex64::new(re, im))
}

fn grid(symbols: usize, m: usize) -> impl Strategy<Value = Grid> {
    prop::collection::vec(complex(), symbols * m).prop_map(move |d| Grid::from_vec(symbols, m, d).unwrap())
}

fn scheme() -> impl Strategy<Value = Scheme> {
    prop_oneof![
        Just(Scheme::Scheme1),
        Just(Scheme::Scheme2),
        Just(Scheme::PlainFqam),
        Just(Scheme::PlainQam),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn synthesis_is_linear(a in grid(4, 16), b in grid(4, 16), ca in complex(), cb in complex()) {
        let f = phydyas(16, 4).unwrap();
        let bank = FilterBank::new(FbmcConfig::new(vec![f.clone(), block_interleave(&f)]).unwrap());
        let combined = bank.synthesize_fast(&a.combine(ca, &b, cb).unwrap()).unwrap();
        let xa = bank.synthesize_fast(&a).unwrap();
        let xb = bank.synthesize_fast(&b).unwrap();
        for (i, v) in combined.samples.iter().enumerate() {
            prop_assert!((v - (ca * xa.samples[i] + cb * xb.samples[i])).norm() < 1e-10);
        }
    }

    #[test]
    fn isolated_symbol_response_is_the_transmux_table(
        m0 in 0usize..16,
        k0 in 0usize..8,
        value in complex(),
    ) {
        let f = phydyas(16, 4).unwrap();
        let bank = FilterBank::new(FbmcConfig::single(f.clone()));
        let mut g = Grid::zeros(8, 16);
        g.set(k0, m0, value);
        let y = bank.analyze(&bank.synthesize_fast(&g).unwrap().samples, 8).unwrap();
        for k in 0..8 {
            for mp in 0..16 {
                let lag = k as i64 - k0 as i64;
                let expected = if lag.unsigned_abs() <= 4 {
                    value * transmux_response(&f, &f, m0, mp, lag).unwrap()
                } else {
                    Complex64::new(0.0, 0.0)
                };
                prop_assert!(
                    (y.get(k, mp) - expected).norm() < 1e-10,
                    "k={k} m'={mp}: {} vs {}", y.get(k, mp), expected
                );
            }
        }
    }

    #[test]
    fn ccdf_is_monotone_and_shift_equivariant(
        vals in prop::collection::vec(0.0..15.0f64, 100..400),
        shift in -5.0..5.0f64,
    ) {
        let ccdf = papr_ccdf_from_values(&vals, 0.1).unwrap();
        prop_assert!(ccdf.exceed_prob.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(ccdf.exceed_prob.iter().all(|p| (0.0..=1.0).contains(p)));
        // an offset in dB moves the whole curve along the threshold axis
        let moved: Vec<f64> = vals.iter().map(|v| v + shift).collect();
        let ccdf2 = papr_ccdf_from_values(&moved, 0.1).unwrap();
        for t in [2.0, 5.0, 8.0, 11.0] {
            prop_assert_eq!(ccdf.prob_exceeding(t), ccdf2.prob_exceeding(t + shift));
        }
    }

    #[test]
    fn error_count_is_symmetric(
        pair in (1usize..500).prop_flat_map(|n| (
            prop::collection::vec(0u8..2, n),
            prop::collection::vec(0u8..2, n),
        )),
    ) {
        let (a, b) = pair;
        let ab = count_errors(&a, &b).unwrap();
        let ba = count_errors(&b, &a).unwrap();
        prop_assert_eq!(ab, ba);
        prop_assert_eq!(count_errors(&a, &a).unwrap().errors, 0);
        let flipped: Vec<u8> = a.iter().map(|x| x ^ 1).collect();
        prop_assert_eq!(count_errors(&a, &flipped).unwrap().errors, a.len() as u64);
    }

    #[test]
    fn grid_loopback_is_lossless(
        mf_exp in 1u32..4,
        mq in prop_oneof![Just(4usize), Just(16), Just(64)],
        scheme in scheme(),
        seed in any::<u64>(),
    ) {
        let mf = if scheme == Scheme::PlainQam { 1 } else { 1usize << mf_exp };
        let fqam = FqamConfig::new(mf, mq, scheme).unwrap();
        let layout = GroupLayout::new(32, mf).unwrap();
        let symbols = 4;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bits = random_bits(symbols * layout.num_groups() * fqam.max_bits_per_group(), &mut rng);
        let (frame, used) = encode_frame(&bits, &fqam, &layout, symbols).unwrap();
        let decoded = decode_frame(&frame.grid, &fqam, &layout, Detection::Blind).unwrap();
        prop_assert_eq!(decoded.bits(layout.num_groups()), bits[..used].to_vec());
        prop_assert_eq!(&decoded.tones, &frame.tones);
        prop_assert_eq!(&decoded.modes, &frame.modes);
    }

    #[test]
    fn self_sir_modes_are_ordered(group in 0usize..8, local in 1usize..3, interleaved in any::<bool>()) {
        let f = phydyas(32, 4).unwrap();
        let fbmc = if interleaved {
            FbmcConfig::new(vec![f.clone(), block_interleave(&f)]).unwrap()
        } else {
            FbmcConfig::single(f)
        };
        let fqam = FqamConfig::new(4, 4, Scheme::Scheme1).unwrap();
        let reference = group * 4 + local;
        let gamma = |mode| self_sir(&fbmc, &fqam, reference, mode).unwrap().gamma_db;
        let dense = gamma(SelfSirMode::AllActive);
        for pattern in [FqamPattern::NON_EDGE, FqamPattern::UNCONSTRAINED] {
            let avg = gamma(SelfSirMode::FqamAverage(pattern));
            let worst = gamma(SelfSirMode::FqamWorstCase(pattern));
            prop_assert!(avg >= worst - 1e-9, "{pattern:?}: average {avg} < worst {worst}");
            prop_assert!(worst >= dense - 1e-9, "{pattern:?}: worst {worst} < dense {dense}");
        }
    }

    #[test]
    fn interleave_is_a_bijection(overlap in 1usize..6, m in 1usize..40) {
        let perm = InterleaveRule::RowColumn.permutation(overlap, m);
        let mut seen = vec![false; overlap * m];
        for &p in &perm {
            prop_assert!(!seen[p]);
            seen[p] = true;
        }
        prop_assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn interleave_round_trips(m in prop::sample::select(vec![4usize, 8, 16, 32, 100])) {
        let f = phydyas(m, 4).unwrap();
        let back = block_deinterleave_with(&block_interleave(&f), InterleaveRule::RowColumn);
        prop_assert_eq!(back.coeffs(), f.coeffs());
        prop_assert!((block_interleave(&f).energy() - f.energy()).abs() < 1e-12);
    }

    #[test]
    fn filter_text_round_trips(m in prop::sample::select(vec![4usize, 8, 16, 32, 100]), interleaved in any::<bool>()) {
        let base = phydyas(m, 4).unwrap();
        let f = if interleaved { block_interleave(&base) } else { base };
        let back = parse_filter(&filter_to_text(&f), "copy").unwrap();
        prop_assert_eq!(back.overlap(), f.overlap());
        prop_assert_eq!(back.num_subcarriers(), f.num_subcarriers());
        prop_assert_eq!(back.coeffs(), f.coeffs());
    }
}
