//! One PASS/FAIL line per acceptance criterion; exits non-zero on any FAIL.

mod common;

use std::collections::{BTreeMap, HashMap};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use codemix::cache::CacheMode;
use codemix::config::{ProviderConfig, Session};
use codemix_core::cg::{plan_replacements, score_entries, Cmd, ScoredEntry};
use codemix_core::game::{self, GameOptions, Gate, HomonymDictionary};
use codemix_core::inflect_hi::{
    added_word, analyze_suffix, apply_hindi_inflection, Context, RuleTable, SuffixAnalysis,
};
use codemix_core::metrics::{corpus_bleu_best_pair, group_stddev, sentence_bleu, BleuGroup, Smoothing, StddevMode};
use codemix_core::providers::mock::{
    Fallback, MockEmbedder, MockLid, MockLlm, MockTagger, MockTranslator, MockTransliterator,
};
use codemix_core::providers::VerbVoice;
use codemix_core::vocab::{score_entry, Scoring};
use codemix_core::{preprocess, FrequencyVocab, LanguagePair, Providers, Score, WordEntry};
use common::{fixture, fx, generate_args, run, with};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

type Outcome = Result<String, String>;
type Check<'a> = Box<dyn Fn() -> Outcome + 'a>;
type ArgsFor<'a> = Box<dyn Fn(&str) -> Vec<String> + 'a>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if $cond {
        } else {
            return Err(format!($($fmt)+));
        }
    };
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    if elapsed < limit {
        Ok(())
    } else {
        Err(format!("took {elapsed:?}, limit {limit:?}"))
    }
}

fn entry(eng: &str, variants: [&str; 3]) -> WordEntry {
    WordEntry {
        eng: eng.into(),
        base_eng: eng.into(),
        pos_tag: "NN".into(),
        matrix_word: eng.into(),
        roman_variants: variants.map(String::from),
        base_matrix: None,
        verb_voice: None,
        anchored: true,
    }
}

fn c1_score_formula() -> Outcome {
    let mut vocab = FrequencyVocab::new(Some(LanguagePair::hindi()));
    for (w, n) in [
        ("impossible", 15),
        ("asambhav", 1),
        ("water", 28),
        ("pani", 89),
        ("paani", 101),
    ] {
        vocab.add_count(w, n).unwrap();
    }
    let (a, b) = (
        entry("impossible", ["asambhav", "asambhav", "asambhaw"]),
        entry("water", ["pani", "paani", "pani"]),
    );
    let impossible = score_entry(&a, &vocab);
    let water = score_entry(&b, &vocab);
    // Mean over repeated calls so one scheduler hiccup does not decide it.
    let start = Instant::now();
    for _ in 0..100 {
        std::hint::black_box((score_entry(&a, &vocab), score_entry(&b, &vocab)));
    }
    let elapsed = start.elapsed() / 100;
    ensure!(
        matches!(impossible, Score::Finite(v) if v == 15.0),
        "impossible: {impossible:?}"
    );
    let expected = 28.0 / 190.0;
    ensure!((water.value() - expected).abs() < 1e-12, "water: {water:?}");
    within(elapsed, Duration::from_millis(1))?;
    Ok(format!("15.0 and {:.12}, {elapsed:?}", water.value()))
}

fn c2_questions(dir: &Path) -> Outcome {
    let cache = dir.join("questions.jsonl");
    let rec = run(&generate_args("questions.txt", "0.7", &cache, "record"));
    ensure!(rec.code == 0, "record failed: {}", rec.stderr);
    let start = Instant::now();
    let rep = run(&generate_args("questions.txt", "0.7", &cache, "replay"));
    let elapsed = start.elapsed();
    ensure!(
        rep.stdout == "questions chaar types ke hote hain\n",
        "got {:?} {}",
        rep.stdout,
        rep.stderr
    );
    within(elapsed, Duration::from_secs(1))?;
    Ok(format!("byte-exact in {elapsed:?}"))
}

fn scored(i: usize, score: Option<u8>) -> ScoredEntry {
    ScoredEntry {
        entry: entry(&format!("w{i}"), ["a", "b", "c"]),
        score: score.map_or(Score::Infinite, |s| Score::Finite(f64::from(s))),
        frequencies: None,
        anchor: None,
    }
}

/// Smallest-index subset of size `k` whose every member scores at least as
/// high as every non-member.
fn brute_force_top_k(scores: &[f64], k: usize) -> Vec<usize> {
    let n = scores.len();
    let mut best: Option<Vec<usize>> = None;
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != k {
            continue;
        }
        let inside: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let lo = inside.iter().map(|&i| scores[i]).fold(f64::INFINITY, f64::min);
        let hi = (0..n)
            .filter(|i| mask & (1 << i) == 0)
            .map(|i| scores[i])
            .fold(f64::NEG_INFINITY, f64::max);
        if lo >= hi && best.as_ref().is_none_or(|b| inside < *b) {
            best = Some(inside);
        }
    }
    best.unwrap_or_default()
}

fn c3_budget_law() -> Outcome {
    let strategy = (
        prop::collection::vec(prop::option::weighted(0.8, 0u8..6), 0..=10),
        prop_oneof![(0u32..=20).prop_map(|k| f64::from(k) / 20.0), 0.0..=1.0f64],
    );
    let mut runner = TestRunner::new(Config {
        cases: 1000,
        failure_persistence: None,
        ..Config::default()
    });
    let start = Instant::now();
    runner
        .run(&strategy, |(raw, cmd)| {
            let n = raw.len();
            let entries: Vec<ScoredEntry> = raw.iter().enumerate().map(|(i, s)| scored(i, *s)).collect();
            let plan = plan_replacements(entries, Cmd::new(cmd).unwrap());
            let infinite = raw.iter().filter(|s| s.is_none()).count();
            let expected = if cmd == 0.0 {
                0
            } else {
                infinite.max((cmd * n as f64).floor() as usize)
            };
            prop_assert_eq!(plan.n_replaced, expected);
            let mut got: Vec<usize> = plan.replaced().map(|e| e.entry.eng[1..].parse().unwrap()).collect();
            got.sort_unstable();
            let values: Vec<f64> = raw.iter().map(|s| s.map_or(f64::INFINITY, f64::from)).collect();
            prop_assert_eq!(got, brute_force_top_k(&values, expected));
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(5))?;
    Ok(format!("1000 sets in {elapsed:?}"))
}

fn c4_infinite_floor(dir: &Path) -> Outcome {
    let cache = dir.join("dawn.jsonl");
    let out = run(&generate_args("dawn.txt", "sweep 0.1:0.3:0.1", &cache, "record"));
    ensure!(out.code == 0, "{}", out.stderr);
    let texts: Vec<&str> = out.stdout.lines().map(|l| l.split_once('\t').unwrap().1).collect();
    ensure!(texts.len() == 3, "{:?}", out.stdout);
    ensure!(texts.iter().all(|t| *t == texts[0]), "outputs differ: {texts:?}");
    for word in ["dawn", "rays", "sleepy"] {
        ensure!(
            texts[0].split(' ').any(|w| w == word),
            "`{word}` not switched: {}",
            texts[0]
        );
    }
    Ok(texts[0].to_string())
}

fn c5_english_matrix(dir: &Path) -> Outcome {
    let cache = dir.join("english-matrix.jsonl");
    let args = with(
        generate_args("questions.txt", "0.5:1.0:0.1", &cache, "record"),
        &["--matrix", "en"],
    );
    let out = run(&args);
    let rows: BTreeMap<&str, &str> = out.stdout.lines().filter_map(|l| l.split_once('\t')).collect();
    for (cmd, expected) in [
        ("0.5", "The questions are of char types."),
        ("0.7", "The questions are of char prakar."),
        ("1", "The prashan are of char prakar."),
    ] {
        ensure!(rows.get(cmd) == Some(&expected), "cmd {cmd}: {:?}", rows.get(cmd));
    }
    Ok("0.5, 0.7, 1.0 exact".into())
}

fn c6_hindi_rules(dir: &Path) -> Outcome {
    use VerbVoice::{Active, Passive};
    let start = Instant::now();
    let add = |word: &str, base: &str, voice, next: Option<&str>, end| {
        added_word(&analyze_suffix(word, base).unwrap(), Some(voice), next, end).unwrap()
    };
    let cases = [
        (add("खेलना", "खेलना", Active, None, true), "करना"),
        (add("खेलता", "खेलना", Active, Some("है"), false), "करता"),
        (add("बदलने", "बदलना", Passive, Some("के"), false), "होने"),
        (add("खेल", "खेलना", Active, Some("सकता"), false), "कर"),
        (add("बदला", "बदलना", Passive, Some("गया"), false), "किया"),
        (add("चुनें", "चुनना", Active, None, true), "करें"),
        (add("बदली", "बदलना", Passive, Some("है"), false), "हुई"),
    ];
    for (i, (got, want)) in cases.iter().enumerate() {
        ensure!(got == want, "case {i}: {got} != {want}");
    }

    let sentence = "रेखा को उलटने के लिए चुनें";
    let verb = |eng: &str, word: &str, base: &str| WordEntry {
        base_eng: eng.to_lowercase(),
        pos_tag: "VB".into(),
        matrix_word: word.into(),
        base_matrix: Some(base.into()),
        verb_voice: Some(Active),
        ..entry(eng, ["a", "b", "c"])
    };
    let entries = vec![
        WordEntry {
            base_eng: "Line".into(),
            pos_tag: "NN".into(),
            verb_voice: Some(VerbVoice::NotApplicable),
            ..verb("Line", "रेखा", "रेखा")
        },
        verb("invert", "उलटने", "उलटना"),
        verb("Select", "चुनें", "चुनना"),
    ];
    let plan = plan_replacements(
        score_entries(entries, sentence, |e| &e.matrix_word, &Scoring::Uniform),
        Cmd::ONE,
    );
    let rules = RuleTable::builtin();
    let out = apply_hindi_inflection(sentence, &plan, &rules);
    ensure!(out == "Line को invert करने के लिए select करें", "got {out}");

    let mut nexts: Vec<Option<&str>> = rules.trigger_words().into_iter().map(Some).collect();
    nexts.extend([None, Some("है"), Some("x")]);
    let mut grid = 0;
    for suffix in rules.suffixes() {
        let analysis = SuffixAnalysis {
            stem: "बदल".into(),
            suffix: suffix.into(),
            base_ends_na: true,
        };
        for voice in [None, Some(Active), Some(Passive), Some(VerbVoice::NotApplicable)] {
            for next in &nexts {
                for sentence_end in [false, true] {
                    let ctx = Context {
                        voice,
                        next_word: *next,
                        sentence_end,
                    };
                    ensure!(rules.inflect(&analysis, &ctx).is_ok(), "unhandled {suffix} {ctx:?}");
                    grid += 1;
                }
            }
        }
    }
    let elapsed = start.elapsed();

    let cli = run(&with(
        vec![
            "generate".into(),
            "--input".into(),
            fx("select.txt"),
            "--pair".into(),
            "en-hi".into(),
            "--cmd".into(),
            "1".into(),
            "--uniform".into(),
            "--hindi-rules".into(),
            "--providers".into(),
            fx("providers.json"),
            "--cache".into(),
            dir.join("select.jsonl").to_string_lossy().into_owned(),
            "--mode".into(),
            "record".into(),
        ],
        &[],
    ));
    ensure!(
        cli.stdout == "line ko invert karne ke liye select karen\n",
        "cli: {:?} {}",
        cli.stdout,
        cli.stderr
    );
    within(elapsed, Duration::from_secs(1))?;
    Ok(format!("{} rule cases, {grid} grid cells, {elapsed:?}", cases.len()))
}

fn replay_session(config: &ProviderConfig, cache: &Path) -> Session {
    Session::open(config, Some(cache), CacheMode::Replay).unwrap()
}

fn c7_perfect_reconstruction(dir: &Path) -> Outcome {
    let cache = dir.join("fact.jsonl");
    let args = |mode: &str| {
        let cache = cache.to_string_lossy().into_owned();
        let mut a: Vec<String> = [
            "evaluate",
            "--pairs",
            &fx("fact.jsonl"),
            "--pair",
            "en-hi",
            "--providers",
            &fx("providers.json"),
        ]
        .map(String::from)
        .to_vec();
        a.extend(["--cache".into(), cache, "--mode".into(), mode.into()]);
        a
    };
    let rec = run(&args("record"));
    ensure!(rec.code == 0, "{}", rec.stderr);
    let rep = run(&args("replay"));
    ensure!(rep.stdout.starts_with("fact\t100.00\n"), "cli: {:?}", rep.stdout);

    let config = ProviderConfig::load(&fixture("providers.json")).unwrap();
    let session = replay_session(&config, &cache);
    let hi = LanguagePair::hindi();
    let trace = game::evaluate(
        "This fact is based on possibility.",
        "Yeh fact possibility par based hai.",
        &hi,
        &session.providers(),
        &HomonymDictionary::defaults(&hi),
        &GameOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    ensure!((trace.q - 1.0).abs() < 1e-6, "q = {}", trace.q);
    ensure!(trace.display == 100.0, "display = {}", trace.display);
    ensure!(
        session.offline_calls() == 0,
        "{} provider calls escaped",
        session.offline_calls()
    );
    Ok(format!("q = {}, display {:.2}", trace.q, trace.display))
}

struct GateMocks {
    llm: MockLlm,
    translator: MockTranslator,
    transliterator: MockTransliterator,
    lid: MockLid,
    tagger: MockTagger,
    embedder: MockEmbedder,
}

impl GateMocks {
    fn new() -> Self {
        let words = [
            ("yeh", "यह"),
            ("tathya", "तथ्य"),
            ("sambhavna", "संभावना"),
            ("par", "पर"),
            ("adharit", "आधारित"),
            ("hai", "है"),
        ];
        GateMocks {
            llm: MockLlm::new(),
            translator: MockTranslator::new(Fallback::Identity),
            transliterator: words.iter().fold(MockTransliterator::new(), |t, (r, n)| t.word(r, n)),
            lid: MockLid::new(["fact", "possibility", "based"]),
            tagger: MockTagger::new(Some("NN")),
            embedder: MockEmbedder::hashed(64),
        }
    }

    fn providers(&self) -> Providers<'_> {
        Providers {
            llm: &self.llm,
            translator: &self.translator,
            transliterator: &self.transliterator,
            lid: &self.lid,
            tagger: &self.tagger,
            embedder: &self.embedder,
        }
    }
}

fn gate_grid() -> Vec<(String, Gate)> {
    let mut cases = Vec::new();
    let bases = [
        "yeh fact possibility par based hai",
        "fact par based",
        "yeh tathya fact hai",
        "possibility hai",
        "based par yeh",
    ];
    let foreign = ["यह", "факт", "γεγονός", "حقيقة", "factу"];
    for (i, base) in bases.iter().enumerate() {
        for (j, word) in foreign.iter().enumerate() {
            let mut tokens: Vec<&str> = base.split(' ').collect();
            tokens.insert((i + j) % (tokens.len() + 1), word);
            cases.push((tokens.join(" "), Gate::NonRoman));
        }
    }
    let matrix = ["yeh", "tathya", "sambhavna", "par", "adharit", "hai"];
    for mask in 1u32..14 {
        let words: Vec<&str> = (0..6).filter(|i| mask & (1 << i) != 0).map(|i| matrix[i]).collect();
        cases.push((words.join(" "), Gate::NotCodeMixed));
    }
    let english = ["fact", "possibility", "based"];
    let orders: [&[usize]; 12] = [
        &[0],
        &[1],
        &[2],
        &[0, 1],
        &[1, 0],
        &[0, 2],
        &[2, 0],
        &[1, 2],
        &[2, 1],
        &[0, 1, 2],
        &[2, 1, 0],
        &[1, 2, 0],
    ];
    for order in orders {
        let words: Vec<&str> = order.iter().map(|&i| english[i]).collect();
        cases.push((words.join(" "), Gate::NotCodeMixed));
    }
    cases
}

fn c8_gates() -> Outcome {
    let mocks = GateMocks::new();
    let hi = LanguagePair::hindi();
    let homonyms = HomonymDictionary::defaults(&hi);
    let grid = gate_grid();
    ensure!(grid.len() == 50, "grid has {} cases", grid.len());
    for (candidate, gate) in &grid {
        let trace = game::evaluate(
            "This fact is based on possibility.",
            candidate,
            &hi,
            &mocks.providers(),
            &homonyms,
            &GameOptions::default(),
        )
        .map_err(|e| format!("{candidate}: {e}"))?;
        ensure!(
            trace.q == 0.0 && trace.gate == *gate,
            "{candidate}: gate {:?}, q {}",
            trace.gate,
            trace.q
        );
        if *gate == Gate::NotCodeMixed {
            let n = preprocess(candidate).tokens.len();
            ensure!(
                trace.ctr == 0 || trace.ctr == n,
                "{candidate}: ctr {} of {n}",
                trace.ctr
            );
        }
    }
    Ok("50 cases gated to 0".into())
}

fn c9_robustness() -> Outcome {
    // Published BLEU and GAME columns for five variants of one sentence;
    // expected values from Python's statistics.pstdev / statistics.stdev.
    let game_col = [97.39, 91.25, 91.25, 97.39, 97.39];
    let bleu_col = [47.85, 74.27, 82.08, 63.68, 54.56];
    let g = group_stddev(&game_col, StddevMode::Population).unwrap();
    let b = group_stddev(&bleu_col, StddevMode::Population).unwrap();
    ensure!((g.stddev - 3.007973404137743).abs() < 1e-9, "game pstdev {}", g.stddev);
    ensure!((b.stddev - 12.499656635284024).abs() < 1e-9, "bleu pstdev {}", b.stddev);
    let gs = group_stddev(&game_col, StddevMode::Sample).unwrap();
    let bs = group_stddev(&bleu_col, StddevMode::Sample).unwrap();
    ensure!(
        (gs.stddev - 3.3630165030817203).abs() < 1e-9,
        "game stdev {}",
        gs.stddev
    );
    ensure!(
        (bs.stddev - 13.975040965950688).abs() < 1e-9,
        "bleu stdev {}",
        bs.stddev
    );
    ensure!(g.stddev < b.stddev, "game not below bleu");

    let out = run(&compare_args(None));
    ensure!(out.code == 0, "{}", out.stderr);
    let averages: HashMap<&str, f64> = out
        .stdout
        .lines()
        .filter_map(|l| l.strip_prefix("average\t"))
        .map(|l| {
            let f: Vec<&str> = l.split('\t').collect();
            (f[0], f[3].parse().unwrap())
        })
        .collect();
    let (game_avg, bleu_avg) = (averages["game"], averages["bleu"]);
    ensure!(game_avg < bleu_avg, "10 groups: game {game_avg} vs bleu {bleu_avg}");
    Ok(format!(
        "columns {:.4} < {:.4}; 10 groups {game_avg:.2} < {bleu_avg:.2}",
        g.stddev, b.stddev
    ))
}

/// Independent sentence BLEU: clipped counts, add-one above unigrams,
/// orders without n-grams left out of the product as a factor of one.
fn oracle_bleu(reference: &[String], hypothesis: &[String]) -> f64 {
    let grams = |toks: &[String], n: usize| {
        let mut m: HashMap<Vec<String>, usize> = HashMap::new();
        for w in toks.windows(n) {
            *m.entry(w.to_vec()).or_default() += 1;
        }
        m
    };
    let mut log_sum = 0.0;
    for n in 1..=4 {
        let (h, r) = (grams(hypothesis, n), grams(reference, n));
        let total: usize = h.values().sum();
        if total == 0 {
            continue;
        }
        let matched: usize = h.iter().map(|(g, c)| (*c).min(r.get(g).copied().unwrap_or(0))).sum();
        let p = if n == 1 {
            matched as f64 / total as f64
        } else {
            (matched as f64 + 1.0) / (total as f64 + 1.0)
        };
        if p == 0.0 {
            return 0.0;
        }
        log_sum += p.ln();
    }
    let (c, r) = (hypothesis.len() as f64, reference.len() as f64);
    let bp = if c < r { (1.0 - r / c).exp() } else { 1.0 };
    bp * (log_sum / 4.0).exp()
}

fn c10_bleu() -> Outcome {
    let word = prop::sample::select(vec!["a", "b", "c", "d", "e", "f"]).prop_map(String::from);
    let mut runner = TestRunner::new(Config {
        cases: 100,
        failure_persistence: None,
        ..Config::default()
    });
    runner
        .run(&prop::collection::vec(word.clone(), 1..30), |x| {
            for smoothing in [Smoothing::None, Smoothing::Add1, Smoothing::Epsilon] {
                let v = sentence_bleu(&x, &x, smoothing).unwrap().value;
                prop_assert!((v - 1.0).abs() < 1e-12, "{:?} {:?}: {}", smoothing, x, v);
            }
            Ok(())
        })
        .map_err(|e| format!("self-BLEU: {e}"))?;

    // p1 = 2/2, p2 = 1/1, no longer n-grams; BP = exp(1 - 3/2).
    let hand = (-0.5f64).exp();
    let cat = sentence_bleu(&["the", "cat", "sat"], &["the", "cat"], Smoothing::None)
        .unwrap()
        .value;
    ensure!((cat - hand).abs() < 1e-9, "the cat: {cat} vs {hand}");

    let sentence = prop::collection::vec(word, 2..8);
    let group = (
        prop::collection::vec(sentence.clone(), 3),
        prop::collection::vec(sentence, 3),
    );
    let mut runner = TestRunner::new(Config {
        cases: 20,
        failure_persistence: None,
        ..Config::default()
    });
    runner
        .run(&prop::collection::vec(group, 20), |groups| {
            let bleu_groups: Vec<BleuGroup> = groups
                .iter()
                .map(|(r, h)| BleuGroup {
                    references: r.clone(),
                    hypotheses: h.clone(),
                })
                .collect();
            let best = corpus_bleu_best_pair(&bleu_groups, Smoothing::Add1).unwrap();
            for ((refs, hyps), &(i, j)) in groups.iter().zip(&best.selections) {
                let mut all = Vec::new();
                for r in refs {
                    for h in hyps {
                        all.push(oracle_bleu(r, h));
                    }
                }
                let max = all.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let first = all.iter().position(|&v| v >= max - 1e-12).unwrap();
                prop_assert_eq!((i, j), (first / 3, first % 3));
            }
            Ok(())
        })
        .map_err(|e| format!("best pair: {e}"))?;
    Ok(format!("self-BLEU x100, the cat = {cat:.12}, 20 groups x 3x3"))
}

fn compare_args(cache: Option<(&Path, &str)>) -> Vec<String> {
    let mut args: Vec<String> = [
        "compare",
        "--groups",
        &fx("groups_es.jsonl"),
        "--pair",
        "en-es",
        "--metrics",
        "game,bleu",
        "--providers",
        &fx("providers.json"),
    ]
    .map(String::from)
    .to_vec();
    if let Some((path, mode)) = cache {
        args.extend([
            "--cache".into(),
            path.to_string_lossy().into_owned(),
            "--mode".into(),
            mode.into(),
        ]);
    }
    args
}

fn c11_determinism(dir: &Path) -> Outcome {
    let cache = dir.join("determinism.jsonl");
    let evaluate = |mode: &str| {
        let mut a: Vec<String> = [
            "evaluate",
            "--pairs",
            &fx("report_es.jsonl"),
            "--pair",
            "en-es",
            "--providers",
            &fx("providers.json"),
        ]
        .map(String::from)
        .to_vec();
        a.extend([
            "--cache".into(),
            cache.to_string_lossy().into_owned(),
            "--mode".into(),
            mode.into(),
        ]);
        a
    };
    let commands: [(&str, ArgsFor<'_>); 3] = [
        (
            "generate",
            Box::new(|mode: &str| generate_args("questions.txt", "sweep 0:1:0.1", &cache, mode)),
        ),
        ("evaluate", Box::new(evaluate)),
        ("compare", Box::new(|mode: &str| compare_args(Some((&cache, mode))))),
    ];
    for (name, args) in &commands {
        let rec = run(&args("record"));
        ensure!(rec.code == 0, "{name} record: {}", rec.stderr);
        let a = run(&args("replay"));
        let b = run(&args("replay"));
        ensure!(a.code == 0 && !a.stdout.is_empty(), "{name} replay: {}", a.stderr);
        ensure!(a.stdout == b.stdout, "{name} replays differ");
        ensure!(a.stdout == rec.stdout, "{name} replay differs from recording");
    }

    let config = ProviderConfig::load(&fixture("providers.json")).unwrap();
    let session = replay_session(&config, &cache);
    let es = LanguagePair::spanish();
    let trace = game::evaluate(
        "We voted against the report for the following reasons.",
        "hemos votado en contra del report por los siguientes reasons",
        &es,
        &session.providers(),
        &HomonymDictionary::defaults(&es),
        &GameOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    ensure!(trace.display == 100.0, "replayed display {}", trace.display);
    ensure!(
        session.offline_calls() == 0,
        "{} calls reached the network",
        session.offline_calls()
    );
    Ok("3 commands byte-identical, 0 network calls".into())
}

fn c12_throughput(dir: &Path) -> Outcome {
    let pairs = dir.join("hundred.jsonl");
    let groups = std::fs::read_to_string(fixture("groups_es.jsonl")).unwrap();
    let mut lines = String::new();
    for (k, g) in groups.lines().enumerate() {
        let g: serde_json::Value = serde_json::from_str(g).unwrap();
        for (v, candidate) in g["variants"].as_array().unwrap().iter().enumerate() {
            for prefix in ["", "Indeed, "] {
                let reference = format!("{prefix}{}", g["english"].as_str().unwrap());
                let row = serde_json::json!({"id": format!("{k}-{v}-{}", prefix.len()), "reference": reference, "candidate": candidate});
                lines.push_str(&row.to_string());
                lines.push('\n');
            }
        }
    }
    std::fs::write(&pairs, lines).unwrap();
    let cache = dir.join("hundred-cache.jsonl");
    let args = |mode: &str| {
        [
            "evaluate",
            "--pairs",
            &pairs.to_string_lossy(),
            "--pair",
            "en-es",
            "--providers",
            &fx("providers.json"),
            "--cache",
            &cache.to_string_lossy(),
            "--mode",
            mode,
        ]
        .map(String::from)
        .to_vec()
    };
    let rec = run(&args("record"));
    ensure!(rec.code == 0, "{}", rec.stderr);
    let start = Instant::now();
    let rep = run(&args("replay"));
    let elapsed = start.elapsed();
    ensure!(rep.code == 0, "{}", rep.stderr);
    let scored = rep.stdout.lines().filter(|l| !l.starts_with("mean")).count();
    ensure!(scored == 100, "{scored} evaluations");
    ensure!(
        rep.stdout.ends_with("100 scored\t0 skipped\n"),
        "{}",
        rep.stdout.lines().last().unwrap_or("")
    );
    within(elapsed, Duration::from_secs(5))?;
    Ok(format!("100 evaluations in {elapsed:?}"))
}

fn main() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let criteria: Vec<(&str, Check<'_>)> = vec![
        ("score formula", Box::new(c1_score_formula)),
        ("questions sentence end to end", Box::new(|| c2_questions(d))),
        ("budget law", Box::new(c3_budget_law)),
        ("infinite floor", Box::new(|| c4_infinite_floor(d))),
        ("english matrix", Box::new(|| c5_english_matrix(d))),
        ("hindi inflection", Box::new(|| c6_hindi_rules(d))),
        ("game perfect reconstruction", Box::new(|| c7_perfect_reconstruction(d))),
        ("game gates", Box::new(c8_gates)),
        ("robustness", Box::new(c9_robustness)),
        ("bleu", Box::new(c10_bleu)),
        ("determinism", Box::new(|| c11_determinism(d))),
        ("throughput", Box::new(|| c12_throughput(d))),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
