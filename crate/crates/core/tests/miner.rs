mod common;

use std::io::Write;
use std::time::Duration;

use common::stub::{chat, StubServer};
use common::{fixture, MINER_EXPECTED as EXPECTED};
use mosaic::miner::{
    collect_candidates, extract_count_mentions, extract_relation_mentions, llm_verify, mine_corpus, open_corpus,
    FrequencyTable, LlmEndpoint, MineMode, MineOptions, RelationGroups, Verification,
};

fn corpus() -> Vec<String> {
    std::fs::read_to_string(fixture("captions_40.txt"))
        .unwrap()
        .lines()
        .map(str::to_owned)
        .collect()
}

#[test]
fn every_fixture_line() {
    let groups = RelationGroups::default();
    let classes = groups.classes();
    for (line, (counts, relations)) in corpus().iter().zip(EXPECTED) {
        let got: Vec<(u8, String)> = extract_count_mentions(line)
            .into_iter()
            .map(|m| (m.number, m.noun))
            .collect();
        let want: Vec<(u8, String)> = counts.iter().map(|&(n, s)| (n, s.to_string())).collect();
        assert_eq!(got, want, "{line}");
        let rel = extract_relation_mentions(line, &groups);
        let mut want = vec![0u64; classes.len()];
        for r in relations {
            want[classes.iter().position(|c| c == r).unwrap()] += 1;
        }
        assert_eq!(rel, want, "{line}");
    }
}

#[test]
fn fixture_tables() {
    let groups = RelationGroups::default();
    let text = corpus().join("\n") + "\n";
    let count = mine_corpus(
        text.as_bytes(),
        &MineOptions::new(MineMode::Count, 1.0, 0).unwrap(),
        &groups,
    )
    .unwrap();
    assert_eq!(count.counts, [2, 5, 2, 1, 1, 1, 1, 1, 1, 1]);
    assert_eq!((count.lines, count.sampled, count.matched), (40, 40, 14));
    let rel = mine_corpus(
        text.as_bytes(),
        &MineOptions::new(MineMode::Relation, 1.0, 0).unwrap(),
        &groups,
    )
    .unwrap();
    assert_eq!(
        rel.classes,
        [
            "right-of",
            "left-of",
            "above",
            "below",
            "next-to",
            "behind",
            "in-front-of"
        ]
    );
    assert_eq!(rel.counts, [2, 2, 4, 2, 5, 2, 1]);
}

fn mine_sharded(lines: &[String], shards: usize, opts: &MineOptions, groups: &RelationGroups) -> FrequencyTable {
    let mut total = FrequencyTable::for_mode(opts.mode, groups);
    let per = lines.len().div_ceil(shards);
    for (i, chunk) in lines.chunks(per).enumerate() {
        let text = chunk.join("\n") + "\n";
        let shard_opts = MineOptions {
            first_line: (i * per) as u64,
            ..opts.clone()
        };
        total.merge(&mine_corpus(text.as_bytes(), &shard_opts, groups).unwrap());
    }
    total
}

#[test]
fn shards_merge_to_single_stream() {
    let groups = RelationGroups::default();
    let lines: Vec<String> = (0..25).flat_map(|_| corpus()).collect();
    let text = lines.join("\n") + "\n";
    for mode in [MineMode::Count, MineMode::Relation] {
        for rate in [1.0, 0.3] {
            let opts = MineOptions::new(mode, rate, 17).unwrap();
            let whole = mine_corpus(text.as_bytes(), &opts, &groups).unwrap();
            for shards in [2, 3, 7] {
                assert_eq!(mine_sharded(&lines, shards, &opts, &groups), whole);
            }
            assert_eq!(mine_corpus(text.as_bytes(), &opts, &groups).unwrap(), whole);
        }
    }
}

#[test]
fn gzip_matches_plain() {
    let dir = tempfile::tempdir().unwrap();
    let text = corpus().join("\n") + "\n";
    let plain = dir.path().join("c.txt");
    std::fs::write(&plain, &text).unwrap();
    let gz = dir.path().join("c.txt.gz");
    let mut enc = flate2::write::GzEncoder::new(std::fs::File::create(&gz).unwrap(), flate2::Compression::default());
    enc.write_all(text.as_bytes()).unwrap();
    enc.finish().unwrap();
    let groups = RelationGroups::default();
    let opts = MineOptions::new(MineMode::Count, 1.0, 0).unwrap();
    let a = mine_corpus(open_corpus(&plain).unwrap(), &opts, &groups).unwrap();
    let b = mine_corpus(open_corpus(&gz).unwrap(), &opts, &groups).unwrap();
    assert_eq!(a, b);
}

#[test]
fn groups_can_be_replaced() {
    let groups = RelationGroups::from_json(r#"[{"class":"under","phrases":["under","beneath"]}]"#).unwrap();
    assert_eq!(
        extract_relation_mentions("a cat hidden under the blanket", &groups),
        [1]
    );
    assert!(RelationGroups::from_json(r#"[{"class":"x","phrases":["  "]}]"#).is_err());
}

fn endpoint(url: &str) -> LlmEndpoint {
    let mut e = LlmEndpoint::new(url, "stub-model");
    e.backoff = Duration::from_millis(5);
    e.timeout = Duration::from_secs(5);
    e
}

fn candidates(lines: &[&str]) -> Vec<mosaic::miner::Candidate> {
    let text = lines.join("\n") + "\n";
    collect_candidates(
        text.as_bytes(),
        &MineOptions::new(MineMode::Count, 1.0, 0).unwrap(),
        &RelationGroups::default(),
    )
    .unwrap()
}

#[test]
fn canned_reply_is_verified() {
    let server = StubServer::start(|_, _| (200, chat(r#"{"two": 1}"#)));
    let cands = candidates(&["two dogs playing in a park"]);
    let classes: Vec<String> = (1..=10).map(|n| n.to_string()).collect();
    std::env::set_var("MOSAIC_TEST_KEY_CANNED", "secret");
    let mut e = endpoint(&server.url);
    e.key_env = Some("MOSAIC_TEST_KEY_CANNED".into());
    let report = llm_verify(&cands, MineMode::Count, &classes, &e);
    assert_eq!(report.verified, 1);
    assert_eq!(report.verified_counts[1], 1);
    let reqs = server.requests.lock().unwrap();
    assert_eq!(reqs[0].authorization.as_deref(), Some("Bearer secret"));
    let system = reqs[0].body["messages"][0]["content"].as_str().unwrap();
    assert!(system.starts_with(mosaic::miner::COUNT_PROMPT.trim_end()));
    assert_eq!(reqs[0].body["model"], "stub-model");
}

#[test]
fn server_errors_leave_candidate_unverified() {
    let server = StubServer::start(|_, _| (500, "{}".into()));
    let cands = candidates(&["two dogs playing in a park"]);
    let classes: Vec<String> = (1..=10).map(|n| n.to_string()).collect();
    let report = llm_verify(&cands, MineMode::Count, &classes, &endpoint(&server.url));
    assert!(matches!(report.results[0], Verification::Unverified(_)));
    assert_eq!(report.verified_counts, vec![0; 10]);
    assert_eq!(server.attempts_for("two dogs playing in a park"), 3);
}

#[test]
fn scripted_mixed_batch() {
    let lines = [
        "two dogs playing in a park",    // verified first try
        "three small boxes on a table",  // 500, 500, then verified
        "four tall buildings at sunset", // malformed twice → unverified
        "five kids on side of the road", // malformed once, then verified
        "six apples in a bowl",          // 500 three times → unverified
        "seven ducks next to the pond",  // verified, model says zero
    ];
    let server = StubServer::start(|caption, attempt| match (caption.split(' ').next().unwrap(), attempt) {
        ("two", _) => (200, chat(r#"{"two": 1}"#)),
        ("three", 0 | 1) => (500, "oops".into()),
        ("three", _) => (200, chat(r#"{"three": 1}"#)),
        ("four", _) => (200, chat("I cannot tell")),
        ("five", 0) => (200, "not even json".into()),
        ("five", _) => (
            200,
            chat(
                r#"```json
{"5": 1}
```"#,
            ),
        ),
        ("six", _) => (503, String::new()),
        _ => (200, chat("{}")),
    });
    let cands = candidates(&lines);
    assert_eq!(cands.len(), 6);
    let classes: Vec<String> = (1..=10).map(|n| n.to_string()).collect();
    let mut e = endpoint(&server.url);
    e.max_in_flight = 3;
    let report = llm_verify(&cands, MineMode::Count, &classes, &e);
    let verified: Vec<bool> = report
        .results
        .iter()
        .map(|r| matches!(r, Verification::Verified(_)))
        .collect();
    assert_eq!(verified, [true, true, false, true, false, true]);
    assert_eq!((report.verified, report.unverified), (4, 2));
    assert_eq!(report.verified_counts, [0, 1, 1, 0, 1, 0, 0, 0, 0, 0]);
    assert_eq!(server.attempts_for(lines[1]), 3);
    assert_eq!(server.attempts_for(lines[2]), 2);
    assert_eq!(server.attempts_for(lines[4]), 3);
}
