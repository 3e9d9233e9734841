use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use protest_frames::calibrate::{
    cohen_kappa, evaluate, grid_search, split, stratified_sample, AccuracyMode, CalibrateError,
    GridSpec,
};
use protest_frames::model::{Element, FrameLabelSet};
use protest_frames::rules::{classify_video, RuleConfig};
use protest_frames::synth::planted_corpus;

fn planted() -> RuleConfig {
    RuleConfig {
        riot_violence_threshold: 0.6,
        riot_min_run: 4,
        ..RuleConfig::default()
    }
}

#[test]
fn recovers_planted_riot_parameters() {
    let (streams, labeled) = planted_corpus(400, &planted(), 17).unwrap();
    let grid = GridSpec {
        riot_violence_threshold: Some(vec![0.4, 0.5, 0.6, 0.7]),
        riot_min_run: Some(vec![2, 3, 4, 5]),
        target_elements: vec![Element::Riot],
        ..GridSpec::default()
    };
    let cal = grid_search(
        &labeled,
        &streams,
        &grid,
        &RuleConfig::default(),
        AccuracyMode::Plain,
    )
    .unwrap();
    assert_eq!(cal.config, planted());
    assert_eq!(cal.report.riot, 1.0);
    assert_eq!(cal.report.overall, 1.0);
}

#[test]
fn recovers_every_frame_together() {
    let truth = RuleConfig {
        riot_violence_threshold: 0.55,
        riot_min_run: 2,
        confront_police_threshold: 0.8,
        confront_min_run: 3,
        spectacle_crowd_threshold: 100,
        spectacle_min_run: 4,
        debate_max_people: 4,
        debate_area_low: 0.05,
        debate_run_low: 5,
        debate_area_high: 0.25,
        debate_run_high: 2,
        ..RuleConfig::default()
    };
    let (streams, labeled) = planted_corpus(800, &truth, 23).unwrap();
    let grid = GridSpec {
        riot_violence_threshold: Some(vec![0.45, 0.5, 0.55, 0.6]),
        riot_min_run: Some(vec![1, 2, 3]),
        confront_police_threshold: Some(vec![0.75, 0.8, 0.85]),
        confront_min_run: Some(vec![2, 3, 4]),
        spectacle_crowd_threshold: Some(vec![50, 100, 150]),
        spectacle_min_run: Some(vec![3, 4, 5]),
        debate_max_people: Some(vec![4, 5]),
        debate_area_low: Some(vec![0.03, 0.05]),
        debate_run_low: Some(vec![5, 6]),
        debate_area_high: Some(vec![0.2, 0.25]),
        debate_run_high: Some(vec![2, 3]),
        target_elements: Element::FRAMES.to_vec(),
    };
    let cal = grid_search(
        &labeled,
        &streams,
        &grid,
        &RuleConfig::default(),
        AccuracyMode::Plain,
    )
    .unwrap();
    assert_eq!(cal.config, truth);
    assert_eq!(cal.report.overall, 1.0);
}

#[test]
fn single_point_grid_equals_evaluate() {
    let (streams, labeled) = planted_corpus(150, &planted(), 4).unwrap();
    let base = RuleConfig::default();
    let cal = grid_search(
        &labeled,
        &streams,
        &GridSpec::single_point(&base),
        &base,
        AccuracyMode::Plain,
    )
    .unwrap();
    assert_eq!(cal.config, base);
    assert_eq!(
        cal.report,
        evaluate(&base, &labeled, &streams, AccuracyMode::Plain).unwrap()
    );
}

#[test]
fn empty_grid_and_unknown_video_are_errors() {
    let (streams, mut labeled) = planted_corpus(10, &planted(), 4).unwrap();
    let grid = GridSpec {
        riot_violence_threshold: Some(vec![]),
        target_elements: vec![Element::Riot],
        ..GridSpec::default()
    };
    assert!(matches!(
        grid_search(
            &labeled,
            &streams,
            &grid,
            &RuleConfig::default(),
            AccuracyMode::Plain
        ),
        Err(CalibrateError::EmptyGrid(_))
    ));
    labeled[3].video_id = "nowhere".into();
    match evaluate(
        &RuleConfig::default(),
        &labeled,
        &streams,
        AccuracyMode::Plain,
    ) {
        Err(CalibrateError::MissingStream(id)) => assert_eq!(id, "nowhere"),
        other => panic!("{other:?}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn search_never_loses_to_a_base_on_the_grid(seed in any::<u64>(), mode_balanced in any::<bool>()) {
        let mode = if mode_balanced { AccuracyMode::Balanced } else { AccuracyMode::Plain };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let truth = RuleConfig {
            riot_violence_threshold: *[0.4, 0.5, 0.6].choose(&mut rng).unwrap(),
            spectacle_min_run: *[2, 3, 4].choose(&mut rng).unwrap(),
            debate_run_high: *[2, 3].choose(&mut rng).unwrap(),
            ..RuleConfig::default()
        };
        let (streams, labeled) = planted_corpus(60, &truth, seed).unwrap();
        let base = RuleConfig::default();
        let grid = GridSpec {
            riot_violence_threshold: Some(vec![0.3, 0.5, 0.7]),
            riot_min_run: Some(vec![3, 5]),
            spectacle_min_run: Some(vec![1, 3]),
            debate_run_high: Some(vec![3, 4]),
            confront_police_threshold: Some(vec![0.85, 0.95]),
            target_elements: Element::FRAMES.to_vec(),
            ..GridSpec::default()
        };
        let cal = grid_search(&labeled, &streams, &grid, &base, mode).unwrap();
        let before = evaluate(&base, &labeled, &streams, mode).unwrap();
        for e in [Element::Riot, Element::Spectacle, Element::Debate] {
            prop_assert!(cal.report.get(e) >= before.get(e), "{e}: {} < {}", cal.report.get(e), before.get(e));
        }
    }

    #[test]
    fn evaluate_is_permutation_invariant(seed in any::<u64>()) {
        let (streams, mut labeled) = planted_corpus(40, &planted(), seed).unwrap();
        let cfg = RuleConfig::default();
        let a = evaluate(&cfg, &labeled, &streams, AccuracyMode::Plain).unwrap();
        labeled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 1));
        prop_assert_eq!(a, evaluate(&cfg, &labeled, &streams, AccuracyMode::Plain).unwrap());
    }

    #[test]
    fn split_is_disjoint_exhaustive_and_seeded(seed in any::<u64>(), n_train in 1usize..30) {
        let (_, labeled) = planted_corpus(30, &planted(), 2).unwrap();
        prop_assume!(n_train < labeled.len());
        let (train, test) = split(&labeled, n_train, seed).unwrap();
        prop_assert_eq!(train.len(), n_train);
        let a: BTreeSet<_> = train.iter().map(|v| v.video_id.clone()).collect();
        let b: BTreeSet<_> = test.iter().map(|v| v.video_id.clone()).collect();
        prop_assert!(a.is_disjoint(&b));
        prop_assert_eq!(a.len() + b.len(), labeled.len());
        prop_assert_eq!(split(&labeled, n_train, seed).unwrap(), (train, test));
    }

    #[test]
    fn kappa_is_symmetric_and_self_agreement_is_one(bits in proptest::collection::vec((any::<bool>(), any::<bool>()), 2..60)) {
        let a: Vec<bool> = bits.iter().map(|p| p.0).collect();
        let b: Vec<bool> = bits.iter().map(|p| p.1).collect();
        match (cohen_kappa(&a, &b), cohen_kappa(&b, &a)) {
            (Ok(x), Ok(y)) => prop_assert_eq!(x.kappa, y.kappa),
            (Err(_), Err(_)) => {}
            other => prop_assert!(false, "asymmetric outcome {:?}", other),
        }
        if a.contains(&true) && a.contains(&false) {
            prop_assert_eq!(cohen_kappa(&a, &a).unwrap().kappa, 1.0);
        }
    }
}

#[test]
fn kappa_worked_examples() {
    let t = true;
    let f = false;
    let a = [t, t, f, f, t, f, t, t, f, f];
    let b = [t, f, f, f, t, f, t, t, t, f];
    let k = cohen_kappa(&a, &b).unwrap();
    assert!((k.kappa - 0.6).abs() < 1e-12);
    assert_eq!((k.observed_agreement, k.expected_agreement), (0.8, 0.5));
    let inv: Vec<bool> = a.iter().map(|x| !x).collect();
    assert_eq!(cohen_kappa(&a, &inv).unwrap().kappa, -1.0);
    assert_eq!(cohen_kappa(&a, &a).unwrap().kappa, 1.0);
    assert_eq!(cohen_kappa(&[t, t], &[t, t]).unwrap().kappa, 1.0);
    assert!(matches!(
        cohen_kappa(&[t], &[t, f]),
        Err(CalibrateError::LengthMismatch(1, 2))
    ));
}

#[test]
fn stratified_sample_meets_quotas() {
    let (streams, _) = planted_corpus(500, &RuleConfig::default(), 8).unwrap();
    let candidates: Vec<(String, FrameLabelSet)> = streams
        .iter()
        .map(|(id, f)| {
            (
                id.clone(),
                classify_video(f, &RuleConfig::default()).unwrap(),
            )
        })
        .collect();
    let k = 100;
    let ids = stratified_sample(&candidates, k, 0.05, 3).unwrap();
    assert_eq!(ids.len(), k);
    assert_eq!(ids.iter().collect::<BTreeSet<_>>().len(), k);
    for e in Element::ALL {
        let present = candidates
            .iter()
            .filter(|(id, l)| ids.contains(id) && l.get(e))
            .count();
        assert!(present > 5, "{e}: {present}");
    }
    assert_eq!(ids, stratified_sample(&candidates, k, 0.05, 3).unwrap());

    let none: Vec<(String, FrameLabelSet)> = (0..50)
        .map(|i| (format!("v{i}"), FrameLabelSet::default()))
        .collect();
    assert!(matches!(
        stratified_sample(&none, 20, 0.05, 0),
        Err(CalibrateError::Infeasible {
            element: Element::Riot,
            needed_above: 1,
            ..
        })
    ));
}
