//! `judge`: assemble evaluation prompts over four labeled descriptions per
//! request, query the judge (live endpoint or offline fixtures), parse the
//! scores, and aggregate per-model means.

use std::path::{Path, PathBuf};

use clap::Args;
use dualtok::evalkit::{
    aggregate_scores, build_judge_prompt, judge_all, EvalError, HttpTransport, JudgeClient,
    JudgeRequest, MODEL_KEYS,
};

use crate::manifest::{Manifest, OutputDir};
use crate::{CliError, DEFAULT_SEED};

#[derive(Debug, Args)]
pub struct JudgeArgs {
    /// Directory of descriptions: either A.txt..D.txt directly, or one
    /// subdirectory per request each holding A.txt..D.txt.
    #[arg(long)]
    pub descriptions: PathBuf,
    /// Use canned fixture responses instead of a live endpoint.
    #[arg(long)]
    pub offline: bool,
    /// Fixture directory (one <request-id>.txt per request) for --offline.
    #[arg(long)]
    pub fixtures: Option<PathBuf>,
    /// Judge endpoint URL (live mode). API key comes from DUALTOK_JUDGE_API_KEY.
    #[arg(long, default_value = "https://api.openai.com/v1/chat/completions")]
    pub endpoint: String,
    /// Judge model name (live mode).
    #[arg(long, default_value = "gpt-4.1-mini")]
    pub model: String,
    /// Maximum in-flight requests.
    #[arg(long, default_value_t = 4)]
    pub parallel: usize,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

fn read_descriptions(dir: &Path) -> Result<[(char, String); 4], CliError> {
    let mut out = Vec::with_capacity(4);
    for key in MODEL_KEYS {
        let path = dir.join(format!("{key}.txt"));
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        out.push((key, text.trim_end().to_string()));
    }
    Ok(out.try_into().expect("four descriptions"))
}

fn collect_requests(root: &Path) -> Result<Vec<JudgeRequest>, CliError> {
    let direct = MODEL_KEYS.iter().all(|k| root.join(format!("{k}.txt")).is_file());
    let mut requests = Vec::new();
    if direct {
        let descriptions = read_descriptions(root)?;
        let borrowed: [(char, &str); 4] = [
            ('A', descriptions[0].1.as_str()),
            ('B', descriptions[1].1.as_str()),
            ('C', descriptions[2].1.as_str()),
            ('D', descriptions[3].1.as_str()),
        ];
        let prompt = build_judge_prompt(&borrowed).map_err(|e| CliError::Usage(e.to_string()))?;
        let id = root
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "request".to_string());
        requests.push(JudgeRequest {
            question_id: id,
            prompt,
        });
        return Ok(requests);
    }
    let mut subdirs: Vec<PathBuf> = std::fs::read_dir(root)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", root.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    subdirs.sort();
    for dir in subdirs {
        let descriptions = read_descriptions(&dir)?;
        let borrowed: [(char, &str); 4] = [
            ('A', descriptions[0].1.as_str()),
            ('B', descriptions[1].1.as_str()),
            ('C', descriptions[2].1.as_str()),
            ('D', descriptions[3].1.as_str()),
        ];
        let prompt = build_judge_prompt(&borrowed).map_err(|e| CliError::Usage(e.to_string()))?;
        requests.push(JudgeRequest {
            question_id: dir.file_name().unwrap().to_string_lossy().into_owned(),
            prompt,
        });
    }
    if requests.is_empty() {
        return Err(CliError::Usage(format!(
            "{} holds neither A.txt..D.txt nor request subdirectories",
            root.display()
        )));
    }
    Ok(requests)
}

pub fn execute(args: &JudgeArgs) -> Result<(), CliError> {
    let requests = collect_requests(&args.descriptions)?;
    let client = if args.offline {
        let fixtures = args
            .fixtures
            .clone()
            .ok_or_else(|| CliError::Usage("--offline requires --fixtures".into()))?;
        JudgeClient::offline(fixtures)
    } else {
        let transport = HttpTransport::from_env(args.endpoint.clone(), args.model.clone())
            .map_err(|e| CliError::Usage(e.to_string()))?;
        JudgeClient::new(Box::new(transport))
    };

    let scored = judge_all(&client, requests, args.parallel).map_err(|e| match e {
        EvalError::Transport(_) | EvalError::Service { .. } => CliError::External(e.to_string()),
        other => CliError::Runtime(other.to_string()),
    })?;
    let aggregate =
        aggregate_scores(&scored.iter().map(|(_, s)| *s).collect::<Vec<_>>())
            .map_err(|e| CliError::Runtime(e.to_string()))?;

    println!("judged {} requests", aggregate.count);
    for key in MODEL_KEYS {
        println!("model {key}: mean score {:.4}", aggregate.mean(key));
    }

    let mut scores_jsonl = String::new();
    for (id, scores) in &scored {
        scores_jsonl.push_str(
            &serde_json::to_string(&serde_json::json!({
                "question_id": id,
                "A": scores.a, "B": scores.b, "C": scores.c, "D": scores.d,
            }))
            .expect("scores serialize"),
        );
        scores_jsonl.push('\n');
    }
    let mut audit = Vec::new();
    client
        .write_audit_log(&mut audit)
        .map_err(|e| CliError::Runtime(e.to_string()))?;

    let mut manifest = Manifest::new("judge", DEFAULT_SEED, None);
    manifest
        .setting("requests", aggregate.count)
        .setting("offline", args.offline)
        .setting("parallel", args.parallel);
    let mut out = OutputDir::create(&args.out, manifest)?;
    out.write("scores.jsonl", scores_jsonl.as_bytes())?;
    out.write("aggregate.csv", aggregate.to_csv().as_bytes())?;
    out.write("audit.jsonl", &audit)?;
    out.finish()?;
    Ok(())
}
