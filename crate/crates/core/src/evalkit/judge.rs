//! External-judge workflow: prompt assembly over four labeled descriptions,
//! a retrying transport client (HTTP or offline fixtures), strict score
//! parsing from the final fenced block, and arithmetic aggregation.

use std::collections::VecDeque;
use std::io::Write;
use std::path::PathBuf;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::EvalError;

pub const MODEL_KEYS: [char; 4] = ['A', 'B', 'C', 'D'];

/// Environment variable holding the judge service API key.
pub const JUDGE_API_KEY_ENV: &str = "DUALTOK_JUDGE_API_KEY";

const PROMPT_HEADER: &str = "The following are detailed descriptions of the same video, generated by four different Vision-Language Large Models (VLLMs). These models will be referred to as Model A, Model B, Model C, and Model D.

Your task is to critically evaluate and score the output from each of these VLLMs. The scoring scale is from 0 (minimum) to 10 (maximum).

Please ensure your evaluation addresses at least the following dimensions for each model's description:

1.  Richness of Detail: How comprehensive and specific are the details provided about the video's content?
2.  Accuracy: How accurately does the description reflect the presumed events, objects, and context within the video?
3.  Organization/Coherence : How logically structured, clear, and easy to follow is the description? Is there a coherent narrative or flow?
4.  Language Fluency: How natural, grammatically correct, and well-phrased is the language used?
5.  Information Redundancy or Repetition: Does the description contain unnecessary repetition of information or superfluous content?

After providing your detailed textual evaluation for each model, discussing its performance across these dimensions, please conclude by returning only the final scores in the precise JSON format exemplified below.

```json
{
  \"A\": <score_for_model_A>,
  \"B\": <score_for_model_B>,
  \"C\": <score_for_model_C>,
  \"D\": <score_for_model_D>
}
```
";

/// Assemble the evaluation prompt: the fixed five-dimension rubric, the
/// fenced score-format block, then the four labeled description sections.
/// Byte-identical output for identical inputs.
pub fn build_judge_prompt(descriptions: &[(char, &str); 4]) -> Result<String, EvalError> {
    for (expected, (key, text)) in MODEL_KEYS.iter().zip(descriptions.iter()) {
        if key != expected {
            return Err(EvalError::InputError(format!(
                "descriptions must be labeled A, B, C, D in order; got {key}"
            )));
        }
        if text.trim().is_empty() {
            return Err(EvalError::InputError(format!(
                "description {key} is empty"
            )));
        }
    }
    let mut prompt = String::from(PROMPT_HEADER);
    for (key, text) in descriptions {
        prompt.push_str(&format!("\n[{key}]\n\n{text}\n"));
    }
    Ok(prompt)
}

/// Scores for the four labeled models, each in 0..=10.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgeScores {
    pub a: u8,
    pub b: u8,
    pub c: u8,
    pub d: u8,
}

impl JudgeScores {
    pub fn get(&self, key: char) -> u8 {
        match key {
            'A' => self.a,
            'B' => self.b,
            'C' => self.c,
            'D' => self.d,
            _ => panic!("unknown model key {key}"),
        }
    }
}

/// The last complete ``` fenced block of `text`, without the fence lines.
fn last_fenced_block(text: &str) -> Option<String> {
    let mut blocks = Vec::new();
    let mut current: Option<String> = None;
    for line in text.lines() {
        if line.trim_start().starts_with("```") {
            match current.take() {
                Some(block) => blocks.push(block),
                None => current = Some(String::new()),
            }
            continue;
        }
        if let Some(block) = current.as_mut() {
            block.push_str(line);
            block.push('\n');
        }
    }
    blocks.pop()
}

/// Extract integer scores for A-D from the last fenced block of a judge
/// response. Reasoning prose before the block is ignored. Out-of-range or
/// non-integer values are errors, never clamped.
pub fn parse_judge_scores(response_text: &str) -> Result<JudgeScores, EvalError> {
    let block = last_fenced_block(response_text).ok_or(EvalError::MissingScoreBlock)?;
    let value: serde_json::Value =
        serde_json::from_str(block.trim()).map_err(|e| EvalError::ScoreBlockInvalid(e.to_string()))?;
    let object = value
        .as_object()
        .ok_or_else(|| EvalError::ScoreBlockInvalid("score block is not an object".into()))?;
    let mut scores = [0u8; 4];
    for (i, key) in MODEL_KEYS.iter().enumerate() {
        let raw = object
            .get(&key.to_string())
            .ok_or(EvalError::MissingScoreKey(*key))?;
        let integer = raw.as_i64().ok_or_else(|| EvalError::NonIntegerScore {
            key: *key,
            value: raw.to_string(),
        })?;
        if !(0..=10).contains(&integer) {
            return Err(EvalError::ScoreOutOfRange {
                key: *key,
                value: integer,
            });
        }
        scores[i] = integer as u8;
    }
    Ok(JudgeScores {
        a: scores[0],
        b: scores[1],
        c: scores[2],
        d: scores[3],
    })
}

/// Per-model arithmetic means over many judged responses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeAggregate {
    pub count: usize,
    pub mean_a: f64,
    pub mean_b: f64,
    pub mean_c: f64,
    pub mean_d: f64,
}

impl JudgeAggregate {
    pub fn mean(&self, key: char) -> f64 {
        match key {
            'A' => self.mean_a,
            'B' => self.mean_b,
            'C' => self.mean_c,
            'D' => self.mean_d,
            _ => panic!("unknown model key {key}"),
        }
    }

    pub fn to_csv(&self) -> String {
        format!(
            "model,mean_score\nA,{}\nB,{}\nC,{}\nD,{}\n",
            self.mean_a, self.mean_b, self.mean_c, self.mean_d
        )
    }
}

pub fn aggregate_scores(scores: &[JudgeScores]) -> Result<JudgeAggregate, EvalError> {
    if scores.is_empty() {
        return Err(EvalError::EmptyRecordSet);
    }
    let n = scores.len() as f64;
    Ok(JudgeAggregate {
        count: scores.len(),
        mean_a: scores.iter().map(|s| s.a as f64).sum::<f64>() / n,
        mean_b: scores.iter().map(|s| s.b as f64).sum::<f64>() / n,
        mean_c: scores.iter().map(|s| s.c as f64).sum::<f64>() / n,
        mean_d: scores.iter().map(|s| s.d as f64).sum::<f64>() / n,
    })
}

/// One request to the judge: an id for fixtures/audit plus the full prompt.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JudgeRequest {
    pub question_id: String,
    pub prompt: String,
}

pub trait JudgeTransport: Send + Sync {
    fn send(&self, request: &JudgeRequest) -> Result<String, EvalError>;
}

/// Live HTTP transport: POST a chat-style JSON body, bearer-authenticated.
/// When the response parses as a chat-completion envelope the assistant
/// content is returned; otherwise the raw body passes through.
pub struct HttpTransport {
    pub endpoint: String,
    pub model: String,
    pub api_key: String,
    pub timeout: Duration,
}

impl HttpTransport {
    pub fn from_env(endpoint: String, model: String) -> Result<Self, EvalError> {
        let api_key = std::env::var(JUDGE_API_KEY_ENV)
            .map_err(|_| EvalError::MissingApiKey(JUDGE_API_KEY_ENV.to_string()))?;
        Ok(Self {
            endpoint,
            model,
            api_key,
            timeout: Duration::from_secs(60),
        })
    }
}

impl JudgeTransport for HttpTransport {
    fn send(&self, request: &JudgeRequest) -> Result<String, EvalError> {
        let body = serde_json::json!({
            "model": self.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": 0,
        });
        let client = reqwest::blocking::Client::builder()
            .timeout(self.timeout)
            .build()
            .map_err(|e| EvalError::Transport(e.to_string()))?;
        let response = client
            .post(&self.endpoint)
            .bearer_auth(&self.api_key)
            .json(&body)
            .send()
            .map_err(|e| EvalError::Transport(e.to_string()))?;
        let status = response.status();
        let text = response
            .text()
            .map_err(|e| EvalError::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(EvalError::Service {
                status: status.as_u16(),
                body_excerpt: text.chars().take(200).collect(),
            });
        }
        if let Ok(envelope) = serde_json::from_str::<serde_json::Value>(&text) {
            if let Some(content) = envelope
                .pointer("/choices/0/message/content")
                .and_then(|v| v.as_str())
            {
                return Ok(content.to_string());
            }
        }
        Ok(text)
    }
}

/// Offline transport: reads `<dir>/<question_id>.txt` and returns the bytes
/// unchanged.
pub struct FixtureTransport {
    pub dir: PathBuf,
}

impl JudgeTransport for FixtureTransport {
    fn send(&self, request: &JudgeRequest) -> Result<String, EvalError> {
        let path = self.dir.join(format!("{}.txt", request.question_id));
        std::fs::read_to_string(&path).map_err(|e| EvalError::Transport(format!(
            "fixture {} unreadable: {e}",
            path.display()
        )))
    }
}

/// Transport wrapper with retry (3 attempts, exponential backoff) and a full
/// request/response audit trail.
pub struct JudgeClient {
    transport: Box<dyn JudgeTransport>,
    pub max_attempts: usize,
    pub backoff_base: Duration,
    audit: Mutex<Vec<AuditEntry>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AuditEntry {
    pub question_id: String,
    pub attempt: usize,
    pub prompt: String,
    pub outcome: Result<String, String>,
}

impl JudgeClient {
    pub fn new(transport: Box<dyn JudgeTransport>) -> Self {
        Self {
            transport,
            max_attempts: 3,
            backoff_base: Duration::from_millis(250),
            audit: Mutex::new(Vec::new()),
        }
    }

    pub fn offline(dir: PathBuf) -> Self {
        let mut client = Self::new(Box::new(FixtureTransport { dir }));
        client.backoff_base = Duration::ZERO;
        client
    }

    /// Raw response text for one request, retrying transient failures.
    pub fn request(&self, request: &JudgeRequest) -> Result<String, EvalError> {
        let mut last_error = None;
        for attempt in 1..=self.max_attempts {
            match self.transport.send(request) {
                Ok(text) => {
                    self.audit.lock().unwrap().push(AuditEntry {
                        question_id: request.question_id.clone(),
                        attempt,
                        prompt: request.prompt.clone(),
                        outcome: Ok(text.clone()),
                    });
                    return Ok(text);
                }
                Err(e) => {
                    self.audit.lock().unwrap().push(AuditEntry {
                        question_id: request.question_id.clone(),
                        attempt,
                        prompt: request.prompt.clone(),
                        outcome: Err(e.to_string()),
                    });
                    last_error = Some(e);
                    if attempt < self.max_attempts {
                        std::thread::sleep(self.backoff_base * 2u32.pow(attempt as u32 - 1));
                    }
                }
            }
        }
        Err(last_error.expect("at least one attempt"))
    }

    /// Write the audit trail as JSON lines.
    pub fn write_audit_log<W: Write>(&self, mut writer: W) -> Result<(), EvalError> {
        for entry in self.audit.lock().unwrap().iter() {
            serde_json::to_writer(&mut writer, entry)
                .map_err(|e| EvalError::InputError(e.to_string()))?;
            writer.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Judge many requests with bounded parallelism, returning parsed scores
/// sorted by question id (deterministic aggregation order).
pub fn judge_all(
    client: &JudgeClient,
    requests: Vec<JudgeRequest>,
    parallelism: usize,
) -> Result<Vec<(String, JudgeScores)>, EvalError> {
    let parallelism = parallelism.max(1);
    let queue = Mutex::new(VecDeque::from(requests));
    let results: Mutex<Vec<Result<(String, JudgeScores), EvalError>>> = Mutex::new(Vec::new());
    std::thread::scope(|scope| {
        for _ in 0..parallelism {
            scope.spawn(|| loop {
                let Some(request) = queue.lock().unwrap().pop_front() else {
                    break;
                };
                let outcome = client
                    .request(&request)
                    .and_then(|text| parse_judge_scores(&text))
                    .map(|scores| (request.question_id.clone(), scores));
                results.lock().unwrap().push(outcome);
            });
        }
    });
    let mut scored = Vec::new();
    for outcome in results.into_inner().unwrap() {
        scored.push(outcome?);
    }
    scored.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(scored)
}
