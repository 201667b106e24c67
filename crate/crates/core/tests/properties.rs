mod common;

use proptest::prelude::*;
use rand::Rng;
use sctc_core::align::{align_slices, edit_distance};
use sctc_core::ctc::{collapse, min_frames as lib_min_frames};
use sctc_core::decoder::PHONEME_WIDTH;
use sctc_core::inventory::{Attribute, AttributeTable, Phoneme, NUM_PHONEMES};
use sctc_core::mdd::classify_positions;
use sctc_core::sctc::{category_logits, CategoryLayout};
use sctc_core::toy::attribute_layout;
use sctc_core::{
    attribute_level_mdd, brute_force_ctc, ctc_loss, decode_all, greedy_decode_category,
    greedy_decode_phoneme, grouped_softmax, sctc_sb_loss, AnnotatedUtterance, Matrix,
    MultiLabelTarget, TokenSequence,
};

use common::*;

fn layout(n: usize) -> CategoryLayout {
    let names: Vec<String> = (0..n).map(|i| format!("c{i}")).collect();
    CategoryLayout::binary(&names).unwrap()
}

fn multilabel(rng: &mut rand_chacha::ChaCha8Rng, n: usize, frames: usize) -> MultiLabelTarget {
    loop {
        let u = rng.random_range(0..=frames.min(6));
        let t = MultiLabelTarget::new((0..n).map(|_| random_bits(rng, u)).collect()).unwrap();
        if (0..n).all(|i| min_frames(&t.labels(i)) <= frames) {
            return t;
        }
    }
}

fn phoneme_string(p: &[Phoneme]) -> String {
    p.iter().map(|p| p.symbol()).collect::<Vec<_>>().join(" ")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn ctc_matches_brute_force(seed in any::<u64>()) {
        let mut r = rng(seed);
        let frames = r.random_range(1..=6);
        let labels = r.random_range(1..=3);
        let logits = random_logits(&mut r, frames, labels + 1, 4.0);
        let target = random_target(&mut r, labels, 3, frames);
        let fast = ctc_loss(&logits, &target).unwrap();
        let slow = brute_force_ctc(&logits, &target).unwrap();
        prop_assert!((fast.neg_log_likelihood - slow).abs() <= 1e-10);
        prop_assert!(fast.neg_log_likelihood >= 0.0);
        for row in fast.grad.iter_rows() {
            prop_assert!(row.iter().sum::<f64>().abs() <= 1e-9);
        }
    }

    #[test]
    fn ctc_gradient_matches_finite_differences(seed in any::<u64>()) {
        let mut r = rng(seed);
        let frames = r.random_range(1..=15);
        let labels = r.random_range(1..=5);
        let logits = random_logits(&mut r, frames, labels + 1, 3.0);
        let target = random_target(&mut r, labels, 6, frames);
        let res = ctc_loss(&logits, &target).unwrap();
        let err = finite_difference_error(&logits, &res.grad, |l| {
            ctc_loss(l, &target).unwrap().neg_log_likelihood
        });
        prop_assert!(err <= 1e-4, "rel err {err}");
    }

    #[test]
    fn appending_a_frame_keeps_feasibility(seed in any::<u64>()) {
        let mut r = rng(seed);
        let frames = r.random_range(1..=8);
        let logits = random_logits(&mut r, frames, 4, 3.0);
        let target = random_target(&mut r, 3, 5, frames);
        prop_assert!(ctc_loss(&logits, &target).unwrap().neg_log_likelihood.is_finite());
        let mut rows: Vec<Vec<f64>> = logits.iter_rows().map(<[f64]>::to_vec).collect();
        rows.push((0..4).map(|_| r.random_range(-3.0..3.0)).collect());
        let longer = Matrix::from_rows(&rows).unwrap();
        prop_assert!(ctc_loss(&longer, &target).unwrap().neg_log_likelihood.is_finite());
    }

    #[test]
    fn collapse_is_idempotent_and_shrinks(path in prop::collection::vec(0u8..4, 0..20)) {
        let once = collapse(&path, &3);
        prop_assert!(once.len() <= path.len());
        prop_assert!(!once.contains(&3));
        // a collapsed sequence may contain repeats, so only blank-free repeat-free inputs are fixed points
        let clean: Vec<u8> = {
            let mut v: Vec<u8> = path.iter().copied().filter(|&x| x != 3).collect();
            v.dedup();
            v
        };
        prop_assert_eq!(collapse(&clean, &3), clean.clone());
        prop_assert_eq!(collapse(&collapse(&clean, &3), &3), clean);
    }

    #[test]
    fn infeasible_targets_are_infinite_for_the_oracle(seed in any::<u64>()) {
        let mut r = rng(seed);
        let frames = r.random_range(1..=4);
        let logits = random_logits(&mut r, frames, 3, 2.0);
        let target: Vec<usize> = (0..frames + 1).map(|_| r.random_range(0..2)).collect();
        prop_assert!(lib_min_frames(&target) > frames);
        prop_assert_eq!(brute_force_ctc(&logits, &target).unwrap(), f64::INFINITY);
        prop_assert!(ctc_loss(&logits, &target).is_err());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sctc_decomposes_into_independent_categories(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.random_range(1..=6);
        let frames = r.random_range(1..=12);
        let l = layout(n);
        let logits = random_logits(&mut r, frames, l.width(), 3.0);
        let target = multilabel(&mut r, n, frames);
        let res = sctc_sb_loss(&logits, &l, &target).unwrap();
        let mut sum = 0.0;
        for i in 0..n {
            let view = log_softmax(&category_logits(&logits, &l, i));
            let nll = reference_ctc_nll(&view, &target.labels(i));
            prop_assert!((res.per_category_nll[i] - nll).abs() <= 1e-10);
            sum += nll;
        }
        prop_assert!((res.total_neg_log_likelihood - sum).abs() <= 1e-10);
    }

    #[test]
    fn sctc_small_categories_match_brute_force(seed in any::<u64>()) {
        let mut r = rng(seed);
        let frames = r.random_range(1..=5);
        let l = layout(2);
        let logits = random_logits(&mut r, frames, l.width(), 3.0);
        let target = multilabel(&mut r, 2, frames);
        let res = sctc_sb_loss(&logits, &l, &target).unwrap();
        for i in 0..2 {
            let brute = brute_force_ctc(&category_logits(&logits, &l, i), &target.labels(i)).unwrap();
            prop_assert!((res.per_category_nll[i] - brute).abs() <= 1e-10);
        }
    }

    #[test]
    fn sctc_gradient_matches_finite_differences(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.random_range(1..=5);
        let frames = r.random_range(1..=10);
        let l = layout(n);
        let logits = random_logits(&mut r, frames, l.width(), 3.0);
        let target = multilabel(&mut r, n, frames);
        let res = sctc_sb_loss(&logits, &l, &target).unwrap();
        let err = finite_difference_error(&logits, &res.grad, |x| {
            sctc_sb_loss(x, &l, &target).unwrap().total_neg_log_likelihood
        });
        prop_assert!(err <= 1e-4, "rel err {err}");
    }

    #[test]
    fn single_category_reduces_to_plain_ctc(seed in any::<u64>()) {
        let mut r = rng(seed);
        let frames = r.random_range(1..=20);
        let logits = random_logits(&mut r, frames, 3, 3.0);
        let target = multilabel(&mut r, 1, frames);
        let a = sctc_sb_loss(&logits, &layout(1), &target).unwrap();
        let b = ctc_loss(&logits, &target.labels(0)).unwrap();
        prop_assert!((a.total_neg_log_likelihood - b.neg_log_likelihood).abs() <= 1e-12);
        prop_assert!(a.grad.max_abs_diff(&b.grad) <= 1e-12);
    }

    #[test]
    fn grouped_triples_are_distributions(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.random_range(1..=8);
        let frames = r.random_range(1..=10);
        let l = layout(n);
        let logits = random_logits(&mut r, frames, l.width(), 5.0);
        for lp in grouped_softmax(&logits, &l).unwrap() {
            for row in lp.probabilities().iter_rows() {
                prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn blank_couples_categories_but_labels_do_not(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.random_range(2..=5);
        let frames = r.random_range(1..=8);
        let l = layout(n);
        let logits = random_logits(&mut r, frames, l.width(), 2.0);
        let target = multilabel(&mut r, n, frames);
        let base = sctc_sb_loss(&logits, &l, &target).unwrap();
        let t = r.random_range(0..frames);
        let i = r.random_range(0..n);

        let mut plus = logits.clone();
        plus.row_mut(t)[l.triple(i)[0]] += 0.5;
        let moved = sctc_sb_loss(&plus, &l, &target).unwrap();
        for j in 0..n {
            let changed = moved.per_category_nll[j] != base.per_category_nll[j];
            prop_assert_eq!(changed, j == i);
        }

        let mut blank = logits.clone();
        blank.row_mut(t)[l.blank_index()] += 0.5;
        let before = grouped_softmax(&logits, &l).unwrap();
        let after = grouped_softmax(&blank, &l).unwrap();
        for j in 0..n {
            prop_assert!(after[j].get(t, 2) > before[j].get(t, 2));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn full_layout_blank_gradient_is_the_sum_of_categories(seed in any::<u64>()) {
        let mut r = rng(seed);
        let table = AttributeTable::shipped();
        let l = attribute_layout();
        let frames = 50;
        let phonemes = random_phonemes(&mut r, 5, 20);
        let attrs: Vec<Attribute> = Attribute::all().collect();
        let target = MultiLabelTarget::from_phonemes(&table, &attrs, &phonemes);
        for i in 0..35 {
            prop_assert_eq!(target.category(i).len(), phonemes.len());
        }
        let logits = random_logits(&mut r, frames, l.width(), 3.0);
        let res = sctc_sb_loss(&logits, &l, &target).unwrap();
        let mut blank = vec![0.0; frames];
        let mut total = 0.0;
        for i in 0..35 {
            let single = ctc_loss(&category_logits(&logits, &l, i), &target.labels(i)).unwrap();
            total += single.neg_log_likelihood;
            for (t, b) in blank.iter_mut().enumerate() {
                *b += single.grad[(t, 2)];
            }
        }
        prop_assert!((res.total_neg_log_likelihood - total).abs() <= 1e-10);
        for (t, b) in blank.iter().enumerate() {
            prop_assert!((res.grad[(t, 70)] - b).abs() <= 1e-10);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn category_decode_matches_naive_loop(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.random_range(1..=4);
        let frames = r.random_range(1..=6);
        let l = layout(n);
        // coarse integer logits make ties common
        let data = (0..frames * l.width()).map(|_| r.random_range(0..3) as f64).collect();
        let logits = Matrix::from_vec(frames, l.width(), data).unwrap();
        for i in 0..n {
            let [p, m, b] = l.triple(i);
            let want: Vec<bool> = naive_decode(&logits, &[p, m, b], b).into_iter().map(|c| c == p).collect();
            let got = greedy_decode_category(&logits, &l, i).unwrap();
            prop_assert_eq!(got.bits().unwrap(), want);
            prop_assert!(got.len() <= frames);
        }
    }

    #[test]
    fn phoneme_decode_matches_naive_loop(seed in any::<u64>()) {
        let mut r = rng(seed);
        let frames = r.random_range(1..=6);
        let data = (0..frames * PHONEME_WIDTH).map(|_| r.random_range(0..4) as f64).collect();
        let logits = Matrix::from_vec(frames, PHONEME_WIDTH, data).unwrap();
        let cols: Vec<usize> = (0..PHONEME_WIDTH).collect();
        let want: Vec<String> = naive_decode(&logits, &cols, NUM_PHONEMES)
            .into_iter()
            .map(|c| Phoneme::from_index(c).unwrap().symbol().to_string())
            .collect();
        let got = greedy_decode_phoneme(&logits).unwrap();
        prop_assert_eq!(got.tokens(), &want[..]);
    }

    #[test]
    fn decoding_ignores_per_frame_shifts(seed in any::<u64>(), shift in -50.0f64..50.0) {
        let mut r = rng(seed);
        let n = r.random_range(1..=6);
        let frames = r.random_range(1..=10);
        let l = layout(n);
        let logits = random_logits(&mut r, frames, l.width(), 3.0);
        let mut shifted = logits.clone();
        let t = r.random_range(0..frames);
        shifted.row_mut(t).iter_mut().for_each(|v| *v += shift);
        prop_assert_eq!(decode_all(&logits, &l).unwrap(), decode_all(&shifted, &l).unwrap());
    }

    #[test]
    fn alignment_matches_reference_dp(
        a in prop::collection::vec(0u8..4, 0..=12),
        b in prop::collection::vec(0u8..4, 0..=12),
    ) {
        let (_, c) = align_slices(&a, &b);
        prop_assert_eq!(c.distance(), reference_distance(&a, &b));
        prop_assert_eq!(c.matches + c.substitutions + c.deletions, a.len());
        prop_assert_eq!(c.matches + c.substitutions + c.insertions, b.len());
    }

    #[test]
    fn alignment_distance_is_symmetric(
        a in prop::collection::vec(0u8..3, 0..=12),
        b in prop::collection::vec(0u8..3, 0..=12),
    ) {
        let (_, ab) = align_slices(&a, &b);
        let (_, ba) = align_slices(&b, &a);
        prop_assert_eq!(ab.distance(), ba.distance());
        // swapping the roles turns every net deletion into an insertion
        prop_assert_eq!(
            ab.deletions as isize - ab.insertions as isize,
            ba.insertions as isize - ba.deletions as isize
        );
    }

    #[test]
    fn alignment_distance_obeys_triangle_inequality(
        a in prop::collection::vec(0u8..3, 0..=8),
        b in prop::collection::vec(0u8..3, 0..=8),
        c in prop::collection::vec(0u8..3, 0..=8),
    ) {
        prop_assert!(edit_distance(&a, &c) <= edit_distance(&a, &b) + edit_distance(&b, &c));
    }

    #[test]
    fn attribute_mapping_preserves_length_and_signatures(seed in any::<u64>()) {
        let mut r = rng(seed);
        let table = AttributeTable::shipped();
        let phonemes = random_phonemes(&mut r, 0, 15);
        let seq = TokenSequence::phonemes(&phoneme_string(&phonemes)).unwrap();
        let mapped = table.map_all(&seq).unwrap();
        prop_assert_eq!(mapped.len(), 35);
        for m in &mapped {
            prop_assert_eq!(m.len(), phonemes.len());
        }
        // the 35 bits at each position identify the phoneme
        for (k, p) in phonemes.iter().enumerate() {
            let bits: Vec<bool> = mapped.iter().map(|m| m.bits().unwrap()[k]).collect();
            let sig = sctc_core::AttributeSignature::from_bits(&bits).unwrap();
            prop_assert_eq!(table.phoneme_for(sig), Some(*p));
        }
    }

    #[test]
    fn synthesized_logits_decode_to_the_mapping(seed in any::<u64>()) {
        let mut r = rng(seed);
        let table = AttributeTable::shipped();
        let l = attribute_layout();
        let phonemes = random_phonemes(&mut r, 1, 12);
        // one phoneme frame followed by one blank frame, so repeats survive
        let mut rows = Vec::new();
        for p in &phonemes {
            let sig = table.signature(*p);
            let mut row = vec![-5.0; 71];
            for a in Attribute::all() {
                let col = if sig.get(a) { a.index() } else { 35 + a.index() };
                row[col] = 5.0;
            }
            rows.push(row);
            let mut blank = vec![-5.0; 71];
            blank[70] = 5.0;
            rows.push(blank);
        }
        let logits = Matrix::from_rows(&rows).unwrap();
        let seq = TokenSequence::phonemes(&phoneme_string(&phonemes)).unwrap();
        prop_assert_eq!(decode_all(&logits, &l).unwrap(), table.map_all(&seq).unwrap());
    }

    #[test]
    fn correct_annotation_has_no_mispronunciations(seed in any::<u64>()) {
        let mut r = rng(seed);
        let canonical = phoneme_string(&random_phonemes(&mut r, 1, 10));
        let recognized = phoneme_string(&random_phonemes(&mut r, 0, 10));
        let u = AnnotatedUtterance::phonemes(&canonical, &canonical, &recognized).unwrap();
        let c = classify_positions(&u).unwrap();
        prop_assert_eq!(c.false_acceptances + c.correct_diagnoses + c.diagnosis_errors, 0);
    }

    #[test]
    fn every_canonical_position_is_counted_once(seed in any::<u64>()) {
        let mut r = rng(seed);
        let canonical = random_phonemes(&mut r, 1, 10);
        let annotated = random_phonemes(&mut r, 0, 10);
        let recognized = random_phonemes(&mut r, 0, 10);
        let u = AnnotatedUtterance::phonemes(
            &phoneme_string(&canonical),
            &phoneme_string(&annotated),
            &phoneme_string(&recognized),
        )
        .unwrap();
        prop_assert_eq!(classify_positions(&u).unwrap().total(), canonical.len());
        let table = AttributeTable::shipped();
        for a in Attribute::all() {
            prop_assert_eq!(attribute_level_mdd(&table, &u, a, None).unwrap().total(), canonical.len());
        }
    }

    #[test]
    fn substitutions_sharing_a_bit_are_invisible_to_that_attribute(seed in any::<u64>()) {
        let mut r = rng(seed);
        let table = AttributeTable::shipped();
        let canonical = random_phonemes(&mut r, 1, 8);
        let mut annotated = canonical.clone();
        let k = r.random_range(0..canonical.len());
        annotated[k] = random_phonemes(&mut r, 1, 1)[0];
        let u = AnnotatedUtterance::phonemes(
            &phoneme_string(&canonical),
            &phoneme_string(&annotated),
            &phoneme_string(&annotated),
        )
        .unwrap();
        for a in Attribute::all() {
            if table.signature(canonical[k]).get(a) == table.signature(annotated[k]).get(a) {
                prop_assert_eq!(attribute_level_mdd(&table, &u, a, None).unwrap().mispronounced(), 0);
            }
        }
    }
}
