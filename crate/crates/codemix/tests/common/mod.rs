#![allow(dead_code)]

use std::path::{Path, PathBuf};

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn fx(name: &str) -> String {
    fixture(name).to_string_lossy().into_owned()
}

pub struct Output {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Runs the CLI in process.
pub fn run<S: AsRef<str>>(args: &[S]) -> Output {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let argv = std::iter::once("codemix").chain(args.iter().map(AsRef::as_ref));
    let code = codemix::cli::run(argv, &mut out, &mut err);
    Output {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

pub fn generate_args(input: &str, cmd: &str, cache: &Path, mode: &str) -> Vec<String> {
    [
        "generate",
        "--input",
        &fx(input),
        "--pair",
        "en-hi",
        "--cmd",
        cmd,
        "--vocab",
        &fx("vocab.jsonl"),
        "--providers",
        &fx("providers.json"),
        "--cache",
        &cache.to_string_lossy(),
        "--mode",
        mode,
    ]
    .map(String::from)
    .to_vec()
}

pub fn with(mut args: Vec<String>, extra: &[&str]) -> Vec<String> {
    args.extend(extra.iter().map(|s| s.to_string()));
    args
}

/// Records a cache for `args` against the mock backend, then replays it.
pub fn record_then_replay(args: impl Fn(&str) -> Vec<String>) -> (Output, Output) {
    let recorded = run(&args("record"));
    let replayed = run(&args("replay"));
    (recorded, replayed)
}
