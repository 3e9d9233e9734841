mod common;

use std::collections::{BTreeSet, HashSet};

use chrono::NaiveDate;
use proptest::collection::vec;
use proptest::prelude::*;
use proptest::strategy::ValueTree;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use protest_frames::ingest::{
    apply_filter, dedupe, load_corpus, parse_corpus, parse_score_stream, read_score_stream,
    score_stream_lines, to_json_lines, write_corpus, write_score_stream, CorpusFilter, IngestError,
    ScoreStreams,
};
use protest_frames::model::{validate_video_meta, RawVideoMeta, VideoMeta};

const TAGS: [&str; 5] = [
    "blm",
    "blacklivesmatter",
    "georgefloyd",
    "justice",
    "protest",
];

fn raw_meta() -> impl Strategy<Value = RawVideoMeta> {
    (
        "[a-z0-9]{1,6}",
        any::<bool>(),
        (0i64..5_000_000, 1i64..120, 0i64..10_000_000),
        (0i64..100_000, 0i64..10_000, 0i64..10_000),
        proptest::sample::subsequence(TAGS.to_vec(), 0..=3),
        0u32..120,
    )
        .prop_map(
            |(id, verified, (follower, duration, play), (like, comment, share), tags, day)| {
                RawVideoMeta {
                    video_id: id.clone(),
                    author_id: format!("u{id}"),
                    verified,
                    follower_count: follower,
                    duration_s: duration,
                    play_count: play,
                    like_count: like,
                    comment_count: comment,
                    share_count: share,
                    hashtags: tags.into_iter().map(String::from).collect(),
                    posted_at: NaiveDate::from_ymd_opt(2020, 5, 1).unwrap()
                        + chrono::Days::new(u64::from(day)),
                }
            },
        )
}

fn meta() -> impl Strategy<Value = VideoMeta> {
    raw_meta().prop_map(|r| validate_video_meta(r).unwrap())
}

fn any_raw() -> impl Strategy<Value = RawVideoMeta> {
    (
        ".{0,4}",
        any::<i64>(),
        any::<i64>(),
        any::<i64>(),
        vec(".{0,3}", 0..3),
    )
        .prop_map(|(id, a, b, c, tags)| RawVideoMeta {
            video_id: id,
            author_id: "x".into(),
            verified: a % 2 == 0,
            follower_count: a,
            duration_s: b,
            play_count: c,
            like_count: a ^ b,
            comment_count: b ^ c,
            share_count: -a,
            hashtags: tags,
            posted_at: NaiveDate::from_ymd_opt(2020, 6, 1).unwrap(),
        })
}

fn window() -> CorpusFilter {
    CorpusFilter::window(
        NaiveDate::from_ymd_opt(2020, 5, 1).unwrap(),
        NaiveDate::from_ymd_opt(2020, 8, 31).unwrap(),
    )
}

fn ids(v: &[VideoMeta]) -> BTreeSet<String> {
    v.iter().map(|m| m.video_id.clone()).collect()
}

proptest! {
    #[test]
    fn metadata_round_trips(m in meta()) {
        let text = to_json_lines([RawVideoMeta::from(m.clone())]);
        prop_assert_eq!(parse_corpus(text.as_bytes()).unwrap(), vec![m.clone()]);
        let direct: VideoMeta = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        prop_assert_eq!(direct, m);
    }

    #[test]
    fn validation_is_total(raw in any_raw()) {
        let _ = validate_video_meta(raw.clone());
        let text = serde_json::to_string(&raw).unwrap();
        let _ = parse_corpus(text.as_bytes());
    }

    #[test]
    fn parsing_arbitrary_text_never_panics(text in ".{0,200}") {
        let _ = parse_corpus(text.as_bytes());
        let _ = parse_score_stream(text.as_bytes());
    }

    #[test]
    fn dedupe_is_idempotent(records in vec(meta(), 0..60)) {
        let once = dedupe(records);
        prop_assert_eq!(dedupe(once.clone()), once);
    }

    #[test]
    fn filter_monotone_in_top_n(records in vec(meta(), 0..80), k in 1usize..15, tags in proptest::sample::subsequence(TAGS.to_vec(), 0..=2)) {
        let records = dedupe(records);
        let mut f = window();
        f.hashtags_any = tags.into_iter().map(String::from).collect();
        f.top_n_per_hashtag = Some(k);
        let small = ids(&apply_filter(&records, &f));
        f.top_n_per_hashtag = Some(k + 1);
        let large = ids(&apply_filter(&records, &f));
        prop_assert!(small.is_subset(&large));
    }

    #[test]
    fn single_tag_filter_is_sort_then_truncate(records in vec(meta(), 0..80), k in 1usize..20) {
        let records = dedupe(records);
        let mut f = window();
        f.hashtags_any = ["blm".to_string()].into();
        f.top_n_per_hashtag = Some(k);
        let mut expected: Vec<&VideoMeta> = records.iter().filter(|m| m.hashtags.contains("blm")).collect();
        expected.sort_by_key(|m| (std::cmp::Reverse(m.play_count), m.video_id.clone()));
        expected.truncate(k);
        let expected: BTreeSet<String> = expected.iter().map(|m| m.video_id.clone()).collect();
        prop_assert_eq!(ids(&apply_filter(&records, &f)), expected);
    }
}

#[test]
fn dedupe_matches_hash_set_oracle_on_10k_records() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let base = validate_video_meta(RawVideoMeta {
        video_id: "x".into(),
        author_id: "a".into(),
        verified: false,
        follower_count: 0,
        duration_s: 10,
        play_count: 0,
        like_count: 0,
        comment_count: 0,
        share_count: 0,
        hashtags: vec![],
        posted_at: NaiveDate::from_ymd_opt(2020, 6, 1).unwrap(),
    })
    .unwrap();
    let records: Vec<VideoMeta> = (0..10_000)
        .map(|i| VideoMeta {
            video_id: format!("v{}", rng.gen_range(0..4_000)),
            play_count: i,
            ..base.clone()
        })
        .collect();
    let mut seen = HashSet::new();
    let expected: Vec<(String, u64)> = records
        .iter()
        .filter(|r| seen.insert(r.video_id.clone()))
        .map(|r| (r.video_id.clone(), r.play_count))
        .collect();
    let got: Vec<(String, u64)> = dedupe(records)
        .into_iter()
        .map(|r| (r.video_id, r.play_count))
        .collect();
    assert_eq!(got, expected);
}

#[test]
fn corpus_file_round_trip_and_error_lines() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("corpus.jsonl");
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    let records: Vec<VideoMeta> = (0..50)
        .map(|_| meta().new_tree(&mut runner).unwrap().current())
        .collect();
    write_corpus(&path, &records).unwrap();
    assert_eq!(load_corpus(&path).unwrap(), records);

    std::fs::write(&path, "{\"video_id\": \"a\"}\n").unwrap();
    assert!(matches!(
        load_corpus(&path),
        Err(IngestError::Parse { line: 1, .. })
    ));
    match load_corpus(&dir.path().join("absent.jsonl")) {
        Err(IngestError::Io { path, .. }) => assert!(path.ends_with("absent.jsonl")),
        other => panic!("{other:?}"),
    }
}

#[test]
fn score_stream_round_trip_1000_lines() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut streams = ScoreStreams::new();
    let mut lines = 0;
    let mut i = 0;
    while lines < 1_000 {
        let mut s = common::random_stream(&mut rng, 40);
        s.truncate(1_000 - lines);
        if s.is_empty() {
            continue;
        }
        lines += s.len();
        streams.insert(format!("vid{i:03}"), s);
        i += 1;
    }
    assert_eq!(score_stream_lines(&streams).lines().count(), 1_000);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scores.jsonl");
    write_score_stream(&path, &streams).unwrap();
    assert_eq!(read_score_stream(&path).unwrap(), streams);
}

#[test]
fn interleaved_lines_group_by_video() {
    let text = r#"{"video_id":"a","t_index":0,"violence":0.1,"police_conf":0.2,"crowd_count":3,"faces":[]}
{"video_id":"b","t_index":0,"violence":0.9,"police_conf":0.2,"crowd_count":3,"faces":[]}
{"video_id":"a","t_index":1,"violence":0.3,"police_conf":0.2,"crowd_count":3,"faces":[{"head_area_fraction":0.1,"is_black":true}]}
"#;
    let s = parse_score_stream(text.as_bytes()).unwrap();
    assert_eq!(s.len(), 2);
    assert_eq!(s["a"].len(), 2);
    assert_eq!(s["b"][0].violence, 0.9);
    assert!(parse_score_stream("".as_bytes()).unwrap().is_empty());

    let bad = text.replace("\"violence\":0.3", "\"violence\":1.3");
    match parse_score_stream(bad.as_bytes()) {
        Err(IngestError::Field { line, source }) => {
            assert_eq!(line, 3);
            assert_eq!(source.field, "violence");
        }
        other => panic!("{other:?}"),
    }
}
