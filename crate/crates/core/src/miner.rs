//! Count-phrase and relation-phrase frequencies over caption corpora.
//!
//! The rule stage is a cheap, per-line lexical pass. An optional second stage
//! sends candidates to a chat-completion endpoint for verification; its
//! counts are kept apart from the rule-stage table.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::Deserialize;

use crate::error::{MosaicError, Result};

const NUMBER_WORDS: [&str; 10] = [
    "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten",
];

const STOPWORDS: &[&str] = &[
    "a", "an", "the", "of", "and", "or", "but", "in", "on", "at", "to", "for", "from", "by", "with", "without", "is",
    "are", "was", "were", "be", "been", "it", "its", "this", "that", "these", "those", "as", "into", "onto", "than",
    "then", "so", "if", "not", "no", "more", "most", "less", "other", "another", "each", "per", "about", "up", "down",
    "out", "off", "over", "under", "very", "too", "all", "any", "some", "such", "only", "just", "also", "who", "which",
    "what", "where", "when", "how", "my", "your", "his", "her", "our", "their", "we", "you", "they", "he", "she", "i",
    "me", "us", "them", "has", "have", "had", "do", "does", "did", "will", "would", "can", "could", "should", "may",
    "might", "must", "s", "t", "x",
];

/// Modifiers allowed between a number and its noun ("three small boxes").
const MODIFIERS: &[&str] = &[
    "small",
    "little",
    "tiny",
    "large",
    "big",
    "huge",
    "giant",
    "tall",
    "short",
    "long",
    "old",
    "new",
    "young",
    "red",
    "green",
    "blue",
    "yellow",
    "purple",
    "orange",
    "cyan",
    "gray",
    "grey",
    "white",
    "black",
    "brown",
    "pink",
    "golden",
    "silver",
    "wooden",
    "metal",
    "plastic",
    "cute",
    "happy",
    "beautiful",
    "different",
    "identical",
    "matching",
    "separate",
    "vintage",
    "modern",
    "colorful",
    "dark",
    "light",
    "bright",
];

const CURRENCY: &[&str] = &[
    "price", "prices", "usd", "eur", "gbp", "dollar", "dollars", "euro", "euros", "pound", "cent", "cents", "credit",
    "credits", "cost", "costs", "buck", "bucks", "yen", "rs", "inr", "aud", "cad", "sale", "only",
];

const TIME: &[&str] = &[
    "year", "years", "yr", "yrs", "month", "months", "week", "weeks", "day", "days", "hour", "hours", "minute",
    "minutes", "min", "mins", "second", "seconds", "sec", "night", "nights", "time", "times", "decade", "decades",
    "century", "ago", "am", "pm", "oclock",
];

const UNITS: &[&str] = &[
    "inch",
    "inches",
    "in",
    "ft",
    "foot",
    "feet",
    "yard",
    "yards",
    "mile",
    "miles",
    "mm",
    "cm",
    "m",
    "km",
    "meter",
    "meters",
    "metre",
    "metres",
    "kg",
    "g",
    "gram",
    "grams",
    "lb",
    "lbs",
    "pounds",
    "oz",
    "ounce",
    "ounces",
    "ml",
    "l",
    "liter",
    "liters",
    "litre",
    "litres",
    "gallon",
    "gallons",
    "percent",
    "degrees",
    "mph",
    "kmh",
    "gb",
    "mb",
    "tb",
    "ghz",
    "mhz",
    "mp",
    "megapixel",
    "k",
    "x",
    "star",
    "stars",
    "pack",
];

const TECH: &[&str] = &[
    "usb",
    "iphone",
    "ipad",
    "galaxy",
    "pixel",
    "version",
    "ver",
    "v",
    "windows",
    "ios",
    "android",
    "gen",
    "generation",
    "series",
    "model",
    "mk",
    "mark",
    "hdmi",
    "ps",
    "xbox",
    "no",
    "number",
    "page",
    "chapter",
    "part",
    "vol",
    "volume",
    "episode",
    "season",
    "level",
    "grade",
    "size",
    "class",
    "type",
    "step",
    "phase",
    "route",
    "apollo",
    "room",
    "track",
    "act",
    "book",
    "issue",
    "edition",
];

const ABSTRACT: &[&str] = &[
    "idea",
    "ideas",
    "reason",
    "reasons",
    "way",
    "ways",
    "thing",
    "things",
    "thought",
    "thoughts",
    "tip",
    "tips",
    "fact",
    "facts",
    "rule",
    "rules",
    "lesson",
    "lessons",
    "question",
    "questions",
    "answer",
    "answers",
    "step",
    "steps",
    "goal",
    "goals",
    "secret",
    "secrets",
    "mistake",
    "mistakes",
    "option",
    "options",
    "choice",
    "choices",
    "love",
    "life",
    "word",
    "words",
    "point",
    "points",
    "hit",
    "piece",
    "another",
    "direction",
    "directions",
    "minds",
    "mind",
    "world",
    "kind",
    "kinds",
    "type",
    "types",
];

fn in_lexicon(lex: &[&str], word: &str) -> bool {
    lex.contains(&word)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    /// Byte offsets into the original caption.
    pub start: usize,
    pub end: usize,
}

/// Lowercased alphanumeric runs with their byte spans.
pub fn tokenize(caption: &str) -> Vec<Token> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in caption.char_indices().chain(std::iter::once((caption.len(), ' '))) {
        match (ch.is_alphanumeric(), start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push(Token {
                    text: caption[s..i].to_lowercase(),
                    start: s,
                    end: i,
                });
                start = None;
            }
            _ => {}
        }
    }
    out
}

/// Value of a number word or digit form in 1..=10.
pub fn number_value(token: &str) -> Option<u8> {
    if let Some(i) = NUMBER_WORDS.iter().position(|&w| w == token) {
        return Some(i as u8 + 1);
    }
    if token.bytes().all(|b| b.is_ascii_digit()) && !token.starts_with('0') {
        return token.parse::<u8>().ok().filter(|v| (1..=10).contains(v));
    }
    None
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountMention {
    pub number: u8,
    pub noun: String,
    /// Byte offset of the number token in the caption.
    pub offset: usize,
}

/// Digits glued to a decimal point or currency sign, e.g. `3.0`, `$5`, `1.5x`.
fn numeric_context_excluded(caption: &str, tok: &Token) -> bool {
    let bytes = caption.as_bytes();
    let before = caption[..tok.start].chars().next_back();
    if matches!(before, Some('$' | '€' | '£' | '¥' | '#' | '№')) {
        return true;
    }
    // decimal or version pattern on either side: "3.0", "v2.1"
    let after_dot = bytes.get(tok.end) == Some(&b'.') && bytes.get(tok.end + 1).is_some_and(u8::is_ascii_digit);
    let before_dot = tok.start >= 2 && bytes[tok.start - 1] == b'.' && bytes[tok.start - 2].is_ascii_digit();
    if after_dot || before_dot {
        return true;
    }
    matches!(caption[tok.end..].chars().next(), Some('%' | '°' | '$' | '€' | '£'))
}

/// Rule-stage candidates: a number word (or digit 1-10) followed within two
/// tokens by a noun-like token, minus money, dates, specs, ordinals, units
/// and abstract nouns.
pub fn extract_count_mentions(caption: &str) -> Vec<CountMention> {
    let tokens = tokenize(caption);
    let mut out = Vec::new();
    for (i, tok) in tokens.iter().enumerate() {
        let Some(number) = number_value(&tok.text) else {
            continue;
        };
        if numeric_context_excluded(caption, tok) {
            continue;
        }
        if let Some(prev) = i.checked_sub(1).map(|p| tokens[p].text.as_str()) {
            let digit = tok.text.as_bytes()[0].is_ascii_digit();
            if in_lexicon(CURRENCY, prev) || in_lexicon(TECH, prev) || (digit && in_lexicon(TIME, prev)) {
                continue;
            }
        }
        let mut noun = None;
        for next in tokens.iter().skip(i + 1).take(2) {
            let w = next.text.as_str();
            if in_lexicon(MODIFIERS, w) {
                continue;
            }
            let excluded = in_lexicon(STOPWORDS, w)
                || in_lexicon(CURRENCY, w)
                || in_lexicon(TIME, w)
                || in_lexicon(UNITS, w)
                || in_lexicon(ABSTRACT, w)
                || number_value(w).is_some()
                || w.len() < 2
                || !w.chars().all(char::is_alphabetic);
            if !excluded {
                noun = Some(next.text.clone());
            }
            break;
        }
        if let Some(noun) = noun {
            out.push(CountMention {
                number,
                noun,
                offset: tok.start,
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct RelationGroup {
    pub class: String,
    pub phrases: Vec<String>,
}

/// Relation classes with their phrase lists, in output order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationGroups {
    groups: Vec<RelationGroup>,
    /// (tokenized phrase, group index), longest phrases first.
    patterns: Vec<(Vec<String>, usize)>,
}

const DEFAULT_GROUPS: &str = include_str!("../data/relation_groups.json");

impl RelationGroups {
    pub fn from_json(json: &str) -> Result<Self> {
        let groups: Vec<RelationGroup> = serde_json::from_str(json)?;
        let mut patterns = Vec::new();
        for (g, group) in groups.iter().enumerate() {
            for phrase in &group.phrases {
                let toks: Vec<String> = tokenize(phrase).into_iter().map(|t| t.text).collect();
                if toks.is_empty() {
                    return Err(MosaicError::Validation(format!(
                        "empty phrase in group {}",
                        group.class
                    )));
                }
                patterns.push((toks, g));
            }
        }
        patterns.sort_by_key(|p| std::cmp::Reverse(p.0.len()));
        Ok(Self { groups, patterns })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn classes(&self) -> Vec<String> {
        self.groups.iter().map(|g| g.class.clone()).collect()
    }
}

impl Default for RelationGroups {
    fn default() -> Self {
        Self::from_json(DEFAULT_GROUPS).expect("bundled relation groups parse")
    }
}

/// Phrase occurrences per relation class, aligned with `groups.classes()`.
/// Matching is whole-word and case-insensitive; at each position the longest
/// phrase wins and its tokens are consumed.
pub fn extract_relation_mentions(caption: &str, groups: &RelationGroups) -> Vec<u64> {
    let tokens: Vec<String> = tokenize(caption).into_iter().map(|t| t.text).collect();
    let mut counts = vec![0; groups.groups.len()];
    let mut i = 0;
    while i < tokens.len() {
        let hit = groups
            .patterns
            .iter()
            .find(|(p, _)| tokens.len() - i >= p.len() && tokens[i..i + p.len()] == p[..]);
        match hit {
            Some((p, g)) => {
                counts[*g] += 1;
                i += p.len();
            }
            None => i += 1,
        }
    }
    counts
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MineMode {
    Count,
    Relation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyTable {
    pub classes: Vec<String>,
    pub counts: Vec<u64>,
    pub lines: u64,
    pub sampled: u64,
    /// Sampled lines with at least one match.
    pub matched: u64,
    pub unreadable: u64,
}

impl FrequencyTable {
    pub fn empty(classes: Vec<String>) -> Self {
        let n = classes.len();
        Self {
            classes,
            counts: vec![0; n],
            lines: 0,
            sampled: 0,
            matched: 0,
            unreadable: 0,
        }
    }

    pub fn for_mode(mode: MineMode, groups: &RelationGroups) -> Self {
        match mode {
            MineMode::Count => Self::empty((1..=10).map(|n| n.to_string()).collect()),
            MineMode::Relation => Self::empty(groups.classes()),
        }
    }

    pub fn merge(&mut self, other: &FrequencyTable) {
        assert_eq!(self.classes, other.classes, "merging tables over different classes");
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.lines += other.lines;
        self.sampled += other.sampled;
        self.matched += other.matched;
        self.unreadable += other.unreadable;
    }

    pub fn get(&self, class: &str) -> u64 {
        self.classes
            .iter()
            .position(|c| c == class)
            .map_or(0, |i| self.counts[i])
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("class,count\n");
        for (c, n) in self.classes.iter().zip(&self.counts) {
            out.push_str(&format!("{c},{n}\n"));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = File::create(path)?;
        f.write_all(self.to_csv().as_bytes())?;
        Ok(())
    }
}

/// Deterministic Bernoulli draw for `line` under `seed`.
pub fn keep_line(seed: u64, line: u64, rate: f64) -> bool {
    if rate >= 1.0 {
        return true;
    }
    // splitmix64 finalizer
    let mut z = seed ^ line.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    ((z >> 11) as f64) / ((1u64 << 53) as f64) < rate
}

#[derive(Debug, Clone)]
pub struct MineOptions {
    pub mode: MineMode,
    pub sample_rate: f64,
    pub seed: u64,
    /// Global number of the first line, for sharded runs.
    pub first_line: u64,
}

impl MineOptions {
    pub fn new(mode: MineMode, sample_rate: f64, seed: u64) -> Result<Self> {
        if !(sample_rate > 0.0 && sample_rate <= 1.0) {
            return Err(MosaicError::Argument(format!(
                "sample rate {sample_rate} outside (0, 1]"
            )));
        }
        Ok(Self {
            mode,
            sample_rate,
            seed,
            first_line: 0,
        })
    }
}

/// Rule-stage counts for one caption, aligned with the table's classes.
pub fn line_counts(caption: &str, mode: MineMode, groups: &RelationGroups) -> Vec<u64> {
    match mode {
        MineMode::Count => {
            let mut counts = vec![0; 10];
            for m in extract_count_mentions(caption) {
                counts[usize::from(m.number) - 1] += 1;
            }
            counts
        }
        MineMode::Relation => extract_relation_mentions(caption, groups),
    }
}

const CHUNK_LINES: usize = 16_384;

fn mine_chunk(chunk: &[(u64, Vec<u8>)], opts: &MineOptions, groups: &RelationGroups) -> FrequencyTable {
    let mut table = FrequencyTable::for_mode(opts.mode, groups);
    for (line_no, raw) in chunk {
        table.lines += 1;
        if !keep_line(opts.seed, *line_no, opts.sample_rate) {
            continue;
        }
        let Ok(text) = std::str::from_utf8(raw) else {
            table.unreadable += 1;
            continue;
        };
        table.sampled += 1;
        let counts = line_counts(text.trim_end_matches(['\r', '\n']), opts.mode, groups);
        if counts.iter().any(|&c| c > 0) {
            table.matched += 1;
        }
        for (a, b) in table.counts.iter_mut().zip(counts) {
            *a += b;
        }
    }
    table
}

/// Single pass over `input`, one caption per line. Invalid UTF-8 lines are
/// counted as unreadable and skipped.
pub fn mine_corpus<R: BufRead>(mut input: R, opts: &MineOptions, groups: &RelationGroups) -> Result<FrequencyTable> {
    let mut total = FrequencyTable::for_mode(opts.mode, groups);
    let mut line_no = opts.first_line;
    loop {
        let mut chunk = Vec::with_capacity(CHUNK_LINES);
        while chunk.len() < CHUNK_LINES {
            let mut buf = Vec::new();
            if input.read_until(b'\n', &mut buf)? == 0 {
                break;
            }
            chunk.push((line_no, buf));
            line_no += 1;
        }
        if chunk.is_empty() {
            break;
        }
        #[cfg(feature = "parallel")]
        let part = {
            use rayon::prelude::*;
            chunk.par_chunks(1024).map(|c| mine_chunk(c, opts, groups)).reduce(
                || FrequencyTable::for_mode(opts.mode, groups),
                |mut a, b| {
                    a.merge(&b);
                    a
                },
            )
        };
        #[cfg(not(feature = "parallel"))]
        let part = mine_chunk(&chunk, opts, groups);
        total.merge(&part);
    }
    Ok(total)
}

/// Opens a plain or gzip-compressed corpus, sniffing the gzip magic bytes.
pub fn open_corpus(path: &Path) -> Result<Box<dyn BufRead>> {
    let mut reader = BufReader::new(File::open(path)?);
    let magic = reader.fill_buf()?;
    if magic.starts_with(&[0x1f, 0x8b]) {
        Ok(Box::new(BufReader::new(flate2::read::MultiGzDecoder::new(reader))))
    } else {
        Ok(Box::new(reader))
    }
}

/// Sampled lines that produced at least one rule-stage match.
pub fn collect_candidates<R: BufRead>(
    mut input: R,
    opts: &MineOptions,
    groups: &RelationGroups,
) -> Result<Vec<Candidate>> {
    let mut out = Vec::new();
    let mut line_no = opts.first_line;
    let mut buf = Vec::new();
    loop {
        buf.clear();
        if input.read_until(b'\n', &mut buf)? == 0 {
            break;
        }
        let this = line_no;
        line_no += 1;
        if !keep_line(opts.seed, this, opts.sample_rate) {
            continue;
        }
        let Ok(text) = std::str::from_utf8(&buf) else { continue };
        let text = text.trim_end_matches(['\r', '\n']);
        let counts = line_counts(text, opts.mode, groups);
        if counts.iter().any(|&c| c > 0) {
            out.push(Candidate {
                line: this,
                caption: text.to_string(),
                rule_counts: counts,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub line: u64,
    pub caption: String,
    pub rule_counts: Vec<u64>,
}

pub const COUNT_PROMPT: &str = include_str!("../data/prompt_count.txt");
pub const RELATION_PROMPT: &str = include_str!("../data/prompt_relation.txt");

/// System prompt for `mode`, with the reply format the parser expects.
pub fn verification_prompt(mode: MineMode, classes: &[String]) -> String {
    let base = match mode {
        MineMode::Count => COUNT_PROMPT,
        MineMode::Relation => RELATION_PROMPT,
    };
    format!(
        "{}\n\nReply with a single JSON object mapping each of these keys to an integer count: {}.",
        base.trim_end(),
        classes.join(", ")
    )
}

/// Parses the model's reply into counts aligned with `classes`. Number words
/// are accepted as keys in count mode.
pub fn parse_verification(content: &str, classes: &[String]) -> Option<Vec<u64>> {
    let start = content.find('{')?;
    let end = content.rfind('}')?;
    let obj: BTreeMap<String, serde_json::Value> = serde_json::from_str(content.get(start..=end)?).ok()?;
    let mut counts = vec![0; classes.len()];
    for (key, value) in obj {
        let key = key.trim().to_lowercase();
        let idx = classes
            .iter()
            .position(|c| *c == key)
            .or_else(|| number_value(&key).and_then(|n| classes.iter().position(|c| *c == n.to_string())))?;
        counts[idx] = value.as_u64()?;
    }
    Some(counts)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verification {
    Verified(Vec<u64>),
    Unverified(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub results: Vec<Verification>,
    /// Sum of verified counts per class.
    pub verified_counts: Vec<u64>,
    pub verified: usize,
    pub unverified: usize,
}

#[cfg(feature = "llm")]
pub use llm::{llm_verify, LlmEndpoint};

#[cfg(feature = "llm")]
mod llm {
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Mutex;
    use std::time::Duration;

    use serde_json::json;

    use super::{parse_verification, verification_prompt, Candidate, MineMode, Verification, VerifyReport};

    #[derive(Debug, Clone)]
    pub struct LlmEndpoint {
        pub url: String,
        pub model: String,
        /// Environment variable holding the bearer token.
        pub key_env: Option<String>,
        pub max_in_flight: usize,
        pub http_attempts: u32,
        pub backoff: Duration,
        pub timeout: Duration,
    }

    impl LlmEndpoint {
        pub fn new(url: impl Into<String>, model: impl Into<String>) -> Self {
            Self {
                url: url.into(),
                model: model.into(),
                key_env: None,
                max_in_flight: 4,
                http_attempts: 3,
                backoff: Duration::from_millis(500),
                timeout: Duration::from_secs(60),
            }
        }
    }

    enum Reply {
        Content(String),
        Failed(String),
    }

    fn request(agent: &ureq::Agent, endpoint: &LlmEndpoint, body: &str) -> Reply {
        let mut req = agent.post(&endpoint.url).set("Content-Type", "application/json");
        if let Some(var) = &endpoint.key_env {
            if let Ok(key) = std::env::var(var) {
                req = req.set("Authorization", &format!("Bearer {key}"));
            }
        }
        let resp = match req.send_string(body) {
            Ok(r) => r,
            Err(e) => return Reply::Failed(e.to_string()),
        };
        let text = match resp.into_string() {
            Ok(t) => t,
            Err(e) => return Reply::Failed(e.to_string()),
        };
        let content = serde_json::from_str::<serde_json::Value>(&text)
            .ok()
            .and_then(|v| v["choices"][0]["message"]["content"].as_str().map(str::to_owned));
        // a 200 without the chat shape is a malformed reply, not a transport failure
        Reply::Content(content.unwrap_or(text))
    }

    fn verify_one(
        agent: &ureq::Agent,
        endpoint: &LlmEndpoint,
        prompt: &str,
        classes: &[String],
        c: &Candidate,
    ) -> Verification {
        let body = json!({
            "model": endpoint.model,
            "temperature": 0,
            "messages": [
                {"role": "system", "content": prompt},
                {"role": "user", "content": c.caption},
            ],
        })
        .to_string();
        let mut http_failures = 0;
        let mut parse_failures = 0;
        loop {
            match request(agent, endpoint, &body) {
                Reply::Failed(e) => {
                    http_failures += 1;
                    if http_failures >= endpoint.http_attempts {
                        return Verification::Unverified(format!("http: {e}"));
                    }
                    std::thread::sleep(endpoint.backoff * 2u32.pow(http_failures - 1));
                }
                Reply::Content(content) => match parse_verification(&content, classes) {
                    Some(counts) => return Verification::Verified(counts),
                    None => {
                        parse_failures += 1;
                        if parse_failures >= 2 {
                            return Verification::Unverified("malformed reply".into());
                        }
                    }
                },
            }
        }
    }

    /// Verifies each candidate against the endpoint with at most
    /// `max_in_flight` concurrent requests. Results keep candidate order.
    pub fn llm_verify(
        candidates: &[Candidate],
        mode: MineMode,
        classes: &[String],
        endpoint: &LlmEndpoint,
    ) -> VerifyReport {
        let agent = ureq::AgentBuilder::new().timeout(endpoint.timeout).build();
        let prompt = verification_prompt(mode, classes);
        let slots: Vec<Mutex<Option<Verification>>> = candidates.iter().map(|_| Mutex::new(None)).collect();
        let next = AtomicUsize::new(0);
        std::thread::scope(|s| {
            for _ in 0..endpoint.max_in_flight.max(1).min(candidates.len().max(1)) {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(c) = candidates.get(i) else { break };
                    let v = verify_one(&agent, endpoint, &prompt, classes, c);
                    *slots[i].lock().unwrap() = Some(v);
                });
            }
        });
        let results: Vec<Verification> = slots
            .into_iter()
            .map(|m| m.into_inner().unwrap().expect("every candidate visited"))
            .collect();
        let mut verified_counts = vec![0; classes.len()];
        let mut verified = 0;
        for r in &results {
            if let Verification::Verified(counts) = r {
                verified += 1;
                for (a, b) in verified_counts.iter_mut().zip(counts) {
                    *a += b;
                }
            }
        }
        VerifyReport {
            unverified: results.len() - verified,
            results,
            verified_counts,
            verified,
        }
    }
}
