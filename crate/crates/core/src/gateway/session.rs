//! Resumable recording sessions.

use std::collections::HashSet;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::Path;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::Instant;

use super::{
    prompt_hash, read_jsonl, CompletionProvider, CompletionRecord, GatewayError, ModelConfig,
};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PromptJob {
    pub program_id: String,
    pub prompt: String,
}

#[derive(Debug, Default)]
pub struct SessionSummary {
    /// Every record for the submitted jobs, sorted by program id.
    pub records: Vec<CompletionRecord>,
    /// Jobs answered by an earlier, interrupted session.
    pub skipped: usize,
    /// Provider calls made during this session.
    pub requests: usize,
    pub failures: Vec<(String, GatewayError)>,
}

pub fn read_records(path: &Path) -> Result<Vec<CompletionRecord>, GatewayError> {
    read_jsonl(path)
}

/// Atomically replaces `path` with `records`, one JSON object per line.
pub fn write_records(path: &Path, records: &[CompletionRecord]) -> Result<(), GatewayError> {
    let persist = |source| GatewayError::Persistence {
        path: path.to_path_buf(),
        source,
    };
    let mut text = String::new();
    for r in records {
        text.push_str(&serde_json::to_string(r).expect("records serialize"));
        text.push('\n');
    }
    let tmp = path.with_extension("jsonl.tmp");
    fs::write(&tmp, text).map_err(persist)?;
    fs::rename(&tmp, path).map_err(persist)
}

/// Sends every job that has no record yet in `store`, appending each
/// response as it arrives. The store is rewritten sorted by program id once
/// all workers finish. A credential failure stops the remaining jobs.
pub fn record_session(
    jobs: &[PromptJob],
    provider: &dyn CompletionProvider,
    cfg: &ModelConfig,
    store: &Path,
) -> Result<SessionSummary, GatewayError> {
    cfg.validate()?;
    let wanted: HashSet<(&str, String)> = jobs
        .iter()
        .map(|j| (j.program_id.as_str(), prompt_hash(&j.prompt)))
        .collect();
    let mut done: Vec<CompletionRecord> = read_records(store)?
        .into_iter()
        .filter(|r| wanted.contains(&(r.program_id.as_str(), r.prompt_hash.clone())))
        .collect();
    let answered: HashSet<String> = done.iter().map(|r| r.program_id.clone()).collect();
    let pending: Vec<&PromptJob> = jobs
        .iter()
        .filter(|j| !answered.contains(&j.program_id))
        .collect();
    let skipped = jobs.len() - pending.len();

    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(store)
        .map_err(|source| GatewayError::Persistence {
            path: store.to_path_buf(),
            source,
        })?;
    let writer = Mutex::new(file);
    let next = AtomicUsize::new(0);
    let requests = AtomicUsize::new(0);
    let abort = AtomicBool::new(false);
    let results: Mutex<Vec<CompletionRecord>> = Mutex::new(Vec::new());
    let failures: Mutex<Vec<(String, GatewayError)>> = Mutex::new(Vec::new());

    let workers = cfg.concurrency.min(pending.len());
    thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                if abort.load(Ordering::SeqCst) {
                    break;
                }
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(job) = pending.get(i) else { break };
                requests.fetch_add(1, Ordering::SeqCst);
                let started = Instant::now();
                match provider.complete(&job.prompt, cfg) {
                    Ok(c) => {
                        let record = CompletionRecord {
                            program_id: job.program_id.clone(),
                            prompt_hash: prompt_hash(&job.prompt),
                            model: cfg.name.clone(),
                            response: c.text,
                            latency_ms: started.elapsed().as_millis() as u64,
                            attempts: c.attempts,
                            timestamp: chrono::Utc::now().to_rfc3339(),
                            truncated: c.truncated,
                        };
                        let line = serde_json::to_string(&record).expect("records serialize");
                        let written = {
                            let mut f = writer.lock().unwrap();
                            writeln!(f, "{line}").and_then(|_| f.flush())
                        };
                        match written {
                            Ok(()) => results.lock().unwrap().push(record),
                            Err(source) => {
                                abort.store(true, Ordering::SeqCst);
                                failures.lock().unwrap().push((
                                    job.program_id.clone(),
                                    GatewayError::Persistence {
                                        path: store.to_path_buf(),
                                        source,
                                    },
                                ));
                            }
                        }
                    }
                    Err(e) => {
                        if matches!(e, GatewayError::Credential(_)) {
                            abort.store(true, Ordering::SeqCst);
                        }
                        failures.lock().unwrap().push((job.program_id.clone(), e));
                    }
                }
            });
        }
    });

    done.extend(results.into_inner().unwrap());
    done.sort_by(|a, b| a.program_id.cmp(&b.program_id));
    write_records(store, &done)?;
    let mut failures = failures.into_inner().unwrap();
    failures.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(SessionSummary {
        records: done,
        skipped,
        requests: requests.into_inner(),
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{Completion, ReplayProvider};
    use std::sync::atomic::AtomicUsize;

    struct Echo {
        calls: AtomicUsize,
        in_flight: AtomicUsize,
        peak: AtomicUsize,
    }

    impl Echo {
        fn new() -> Echo {
            Echo {
                calls: AtomicUsize::new(0),
                in_flight: AtomicUsize::new(0),
                peak: AtomicUsize::new(0),
            }
        }
    }

    impl CompletionProvider for Echo {
        fn complete(&self, prompt: &str, _cfg: &ModelConfig) -> Result<Completion, GatewayError> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            let now = self.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
            self.peak.fetch_max(now, Ordering::SeqCst);
            thread::sleep(std::time::Duration::from_millis(5));
            self.in_flight.fetch_sub(1, Ordering::SeqCst);
            Ok(Completion {
                text: format!("echo {prompt}"),
                truncated: false,
                attempts: 1,
            })
        }
    }

    fn jobs(n: usize) -> Vec<PromptJob> {
        (0..n)
            .map(|i| PromptJob {
                program_id: format!("p{i:02}"),
                prompt: format!("prompt {i}"),
            })
            .collect()
    }

    #[test]
    fn bounded_concurrency_and_request_count() {
        let dir = tempfile::tempdir().unwrap();
        let store = dir.path().join("r.jsonl");
        let echo = Echo::new();
        let cfg = ModelConfig {
            concurrency: 3,
            ..ModelConfig::default()
        };
        let s = record_session(&jobs(12), &echo, &cfg, &store).unwrap();
        assert_eq!(s.requests, 12);
        assert_eq!(echo.calls.load(Ordering::SeqCst), 12);
        assert!(echo.peak.load(Ordering::SeqCst) <= 3);
        let ids: Vec<_> = read_records(&store)
            .unwrap()
            .into_iter()
            .map(|r| r.program_id)
            .collect();
        assert_eq!(ids, (0..12).map(|i| format!("p{i:02}")).collect::<Vec<_>>());
    }

    #[test]
    fn resumes_and_replays() {
        let dir = tempfile::tempdir().unwrap();
        let store = dir.path().join("r.jsonl");
        let all = jobs(5);
        let cfg = ModelConfig::default();
        record_session(&all[..2], &Echo::new(), &cfg, &store).unwrap();
        // An interrupted append leaves a partial final line behind.
        let mut f = OpenOptions::new().append(true).open(&store).unwrap();
        write!(f, "{{\"program_id\":\"p0").unwrap();
        drop(f);
        let echo = Echo::new();
        let s = record_session(&all, &echo, &cfg, &store).unwrap();
        assert_eq!((s.skipped, s.requests), (2, 3));
        assert_eq!(s.records.len(), 5);

        let replay = ReplayProvider::load(&store).unwrap();
        let again = record_session(&all, &replay, &cfg, &dir.path().join("b.jsonl")).unwrap();
        let strip = |v: &[CompletionRecord]| {
            v.iter()
                .map(CompletionRecord::without_timing)
                .collect::<Vec<_>>()
        };
        assert_eq!(strip(&again.records), strip(&s.records));
    }

    #[test]
    fn unwritable_store_is_a_persistence_error() {
        let dir = tempfile::tempdir().unwrap();
        let store = dir.path().join("missing").join("r.jsonl");
        let err =
            record_session(&jobs(1), &Echo::new(), &ModelConfig::default(), &store).unwrap_err();
        assert!(matches!(err, GatewayError::Persistence { .. }));
    }
}
