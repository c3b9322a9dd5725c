use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::Mutex;
use std::time::Duration;

use stochform::pipeline::{
    extract_code, placeholders, render, run_agentic, run_method, template, templates, ChatClient, ChatMessage,
    ChatRequest, ChatResponse, ClientError, FixtureStore, LiveClient, LiveConfig, Method, MethodConfig, PipelineError,
    ProblemPrompt, RecordingClient, ReplayClient, Role,
};

const GOLDEN: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/golden");

fn golden_bindings() -> BTreeMap<&'static str, String> {
    BTreeMap::from([
        ("problem_description", "Ship goods from one depot to two shops at least cost.".to_string()),
        ("code_example", "import gurobipy as gp\nm = gp.Model()".into()),
        ("instructions", "min c^T x s.t. A x >= b, x >= 0".into()),
        ("extraction_output", "Sets: shops {1, 2}".into()),
        ("code_formulation_output_1", "m.setObjective(x, GRB.MINIMIZE)".into()),
        ("current_code", "m.setObjective(x, GRB.MINIMIZE)".into()),
        ("reviewers_feedback", "Reviewer 1:\nno issues".into()),
    ])
}

#[test]
fn every_template_matches_its_golden_file() {
    let b = golden_bindings();
    assert_eq!(templates().len(), 12);
    for t in templates() {
        let path = format!("{GOLDEN}/{}.txt", t.id.replace('/', "__"));
        let golden = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"));
        assert_eq!(render(t, &b).unwrap() + "\n", golden, "{}", t.id);
    }
}

#[test]
fn anchor_sentences_are_verbatim() {
    let anchors: &[(Method, Role, &[&str])] = &[
        (Method::StandardS, Role::Single, &["Give your Python code directly.", "Here is a starter code:"]),
        (
            Method::CotS,
            Role::Single,
            &[
                "Let's analyse the problem step by step, and then give your Python code directly.",
                "In particular, define the objective function inside .setObjective function.",
            ],
        ),
        (
            Method::CotS2,
            Role::ExtensiveForm,
            &[
                "Enumerate all possible scenarios, associating each with its corresponding probability.",
                "Let's analyse the problem step by step, then give your final Python code.",
            ],
        ),
        (
            Method::CotSInstructions,
            Role::ExtractElements,
            &[
                "Your extraction will serve as the foundation for subsequent code implementation.",
                "Please also learn the following instructions to guide you further:",
            ],
        ),
        (Method::CotSInstructions, Role::ExtensiveForm, &["Please also see the instruction below for further guidance:"]),
        (Method::Agentic, Role::Reviewer, &["Provide concise and precise feedback."]),
        (Method::Agentic, Role::Updater, &["Return the updated final code.", "Do not include any additional text."]),
    ];
    for (m, r, sentences) in anchors {
        let body = &template(*m, *r).body;
        for s in *sentences {
            assert!(body.contains(s), "{m}/{}: missing `{s}`", r.as_str());
        }
    }
    // Plain CoT stages carry no instruction block.
    for r in Method::CotS2.roles() {
        assert!(!placeholders(&template(Method::CotS2, *r).body).contains(&"instructions"));
    }
}

#[test]
fn render_substitutes_and_reports_unbound() {
    let mut b = golden_bindings();
    let out = render(template(Method::StandardS, Role::Single), &b).unwrap();
    assert!(out.contains(&b["problem_description"]));
    assert!(out.contains(&b["code_example"]));
    b.remove("code_example");
    let err = render(template(Method::StandardS, Role::Single), &b).unwrap_err();
    assert_eq!(err, PipelineError::UnboundPlaceholder { template: "standard_s/single".into(), name: "code_example".into() });
}

/// Answers by role, recognized from the first line of the prompt.
struct Scripted {
    log: Mutex<Vec<ChatRequest>>,
    fail_on_reviewer: Option<usize>,
}

impl Scripted {
    fn new() -> Self {
        Self { log: Mutex::new(Vec::new()), fail_on_reviewer: None }
    }

    fn role_of(prompt: &str) -> Role {
        templates()
            .iter()
            .filter(|t| t.method == Method::Agentic || t.method == Method::CotS2 || t.method == Method::CotS)
            .find(|t| prompt.lines().next() == t.body.lines().next())
            .map(|t| t.role)
            .unwrap_or(Role::Single)
    }
}

impl ChatClient for Scripted {
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, ClientError> {
        self.log.lock().unwrap().push(req.clone());
        let prompt = &req.messages.last().unwrap().content;
        let role = Self::role_of(prompt);
        if role == Role::Reviewer && self.fail_on_reviewer == Some(req.sample as usize) {
            return Err(ClientError::Status { status: 503, body: "overloaded".into() });
        }
        let text = match role {
            Role::Reviewer => "no issues".to_string(),
            Role::Updater => format!("```python\n# updated\n{}```", prompt.split("Current Code:\n").nth(1).unwrap().split("Feedback").next().unwrap()),
            r => format!("{} output\n```python\nstage = '{}'\n```", r.as_str(), r.as_str()),
        };
        Ok(ChatResponse { text, usage: None, latency: 0.0 })
    }
}

fn problem() -> ProblemPrompt {
    ProblemPrompt { description: "Two stores, normal demand.".into(), instructions: "Use quantiles.".into() }
}

#[test]
fn staged_chain_feeds_prior_outputs_forward() {
    let client = Scripted::new();
    let (code, t) = run_method(Method::CotS2, &problem(), &client, &MethodConfig::new("m")).unwrap();
    assert_eq!(t.roles(), [Role::ExtractElements, Role::FormulateModel, Role::ExtensiveForm]);
    assert_eq!(code, "stage = 'extensive_form'\n");
    let log = client.log.lock().unwrap();
    let lens: Vec<usize> = log.iter().map(|r| r.messages.len()).collect();
    assert_eq!(lens, [1, 3, 5]);
    assert_eq!(log[2].messages[1], ChatMessage::assistant(t.exchanges[0].response.clone()));
    assert!(log.iter().all(|r| r.temperature == 0.0));

    let (_, t) = run_method(Method::CotSInstructions, &problem(), &Scripted::new(), &MethodConfig::new("m")).unwrap();
    assert!(t.exchanges[0].prompt.contains("Use quantiles."));
    assert!(!t.exchanges[1].prompt.contains("Use quantiles."));
    assert!(t.exchanges[2].prompt.contains("Use quantiles."));

    let (_, t) = run_method(Method::StandardS, &problem(), &Scripted::new(), &MethodConfig::new("m")).unwrap();
    assert_eq!(t.exchanges.len(), 1);
}

#[test]
fn agentic_topology_and_unconditional_update() {
    for n in [1, 4, 6] {
        let client = Scripted::new();
        let (code, t) = run_agentic(&problem(), &client, n, &MethodConfig::new("m")).unwrap();
        let mut expected = vec![Role::Extractor, Role::Formulator];
        expected.extend(std::iter::repeat_n(Role::Reviewer, n));
        expected.push(Role::Updater);
        assert_eq!(t.roles(), expected);
        assert_eq!(t.reviewers, Some(n));
        assert_eq!(t.exchanges.len(), 3 + n);
        // Every reviewer said "no issues"; the updater still ran and its code is final.
        assert!(code.starts_with("# updated\nstage = 'formulator'"));
        let updater = &t.exchanges.last().unwrap().prompt;
        assert!(updater.contains(&format!("Reviewer {n}:\nno issues")));
        // Reviewers see the formulator's code, never each other's feedback.
        for e in t.exchanges.iter().filter(|e| e.role == Role::Reviewer) {
            assert!(e.prompt.contains("stage = 'formulator'"));
            assert!(!e.prompt.contains("no issues"));
        }
        let samples: Vec<u32> = {
            let mut s: Vec<u32> =
                client.log.lock().unwrap().iter().filter(|r| Scripted::role_of(&r.messages[0].content) == Role::Reviewer).map(|r| r.sample).collect();
            s.sort();
            s
        };
        assert_eq!(samples, (0..n as u32).collect::<Vec<_>>());
    }
    let (_, t) = run_method(Method::Agentic, &problem(), &Scripted::new(), &MethodConfig::new("m")).unwrap();
    assert_eq!(t.exchanges.len(), 7);
}

#[test]
fn reviewer_failure_fails_the_cell() {
    let client = Scripted { fail_on_reviewer: Some(1), ..Scripted::new() };
    let err = run_agentic(&problem(), &client, 4, &MethodConfig::new("m")).unwrap_err();
    assert!(matches!(err, PipelineError::Client { ref role, source: ClientError::Status { status: 503, .. } } if role == "reviewer"));
    assert!(matches!(run_agentic(&problem(), &client, 0, &MethodConfig::new("m")), Err(PipelineError::Config(_))));
}

#[test]
fn empty_completion_is_an_error() {
    struct Blank;
    impl ChatClient for Blank {
        fn complete(&self, _: &ChatRequest) -> Result<ChatResponse, ClientError> {
            Ok(ChatResponse { text: "  \n".into(), usage: None, latency: 0.0 })
        }
    }
    let err = run_method(Method::CotS, &problem(), &Blank, &MethodConfig::new("m")).unwrap_err();
    assert_eq!(err, PipelineError::EmptyCompletion { role: "single".into() });
}

#[test]
fn code_extraction_takes_last_block() {
    assert_eq!(extract_code("a\n```python\nfirst()\n```\nb\n```python\nsecond()\n```\n"), "second()\n");
    assert_eq!(extract_code("no fences here"), "no fences here");
}

#[test]
fn replay_miss_and_record_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let store = FixtureStore::new(dir.path());
    let err = run_method(Method::StandardS, &problem(), &ReplayClient::new(store.clone()), &MethodConfig::new("m")).unwrap_err();
    assert!(matches!(err, PipelineError::Client { source: ClientError::FixtureMiss { .. }, .. }));

    let recorder = RecordingClient::new(Scripted::new(), store.clone());
    let cfg = MethodConfig::new("m");
    let recorded = run_method(Method::Agentic, &problem(), &recorder, &cfg).unwrap();
    let replay = ReplayClient::new(store.clone());
    let first = run_method(Method::Agentic, &problem(), &replay, &cfg).unwrap();
    let second = run_method(Method::Agentic, &problem(), &replay, &cfg).unwrap();
    assert_eq!(recorded, first);
    assert_eq!(first, second);
    assert_eq!(serde_json::to_string(&first.1).unwrap(), serde_json::to_string(&second.1).unwrap());
}

/// Minimal HTTP server answering each connection with the next scripted reply.
fn serve(replies: Vec<(u16, String)>) -> (String, std::thread::JoinHandle<Vec<String>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
    let handle = std::thread::spawn(move || {
        let mut auth = Vec::new();
        for (status, body) in replies {
            let (mut stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut len = 0;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                let lower = line.to_ascii_lowercase();
                if let Some(v) = lower.strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
                if let Some(v) = line.strip_prefix("authorization:").or_else(|| line.strip_prefix("Authorization:")) {
                    auth.push(v.trim().to_string());
                }
                if line == "\r\n" || line.is_empty() {
                    break;
                }
            }
            let mut body_in = vec![0; len];
            reader.read_exact(&mut body_in).unwrap();
            let reply = format!(
                "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                body.len()
            );
            stream.write_all(reply.as_bytes()).unwrap();
        }
        auth
    });
    (url, handle)
}

fn live(url: &str) -> LiveClient {
    LiveClient::new(LiveConfig {
        endpoint: url.into(),
        api_key: "sk-test".into(),
        attempts: 3,
        backoff: Duration::from_millis(10),
        request_timeout: Duration::from_secs(10),
        requests_per_minute: 6000,
    })
}

fn request() -> ChatRequest {
    ChatRequest { model: "m".into(), messages: vec![ChatMessage::user("hi")], temperature: 0.0, max_tokens: None, sample: 0 }
}

#[test]
fn live_client_retries_then_succeeds() {
    let ok = r#"{"choices":[{"message":{"role":"assistant","content":"hello"}}],"usage":{"prompt_tokens":3,"completion_tokens":1}}"#;
    let (url, server) = serve(vec![(500, "{}".into()), (429, "{}".into()), (200, ok.into())]);
    let resp = live(&url).complete(&request()).unwrap();
    assert_eq!(resp.text, "hello");
    assert_eq!(resp.usage.unwrap().completion_tokens, 1);
    assert_eq!(server.join().unwrap(), vec!["Bearer sk-test"; 3]);
}

#[test]
fn live_client_surfaces_auth_failure() {
    let (url, server) = serve(vec![(401, r#"{"error":"bad key"}"#.into())]);
    let err = live(&url).complete(&request()).unwrap_err();
    assert_eq!(err, ClientError::Status { status: 401, body: r#"{"error":"bad key"}"#.into() });
    assert_eq!(server.join().unwrap().len(), 1);
}

#[test]
fn live_client_gives_up_after_three_attempts() {
    let (url, server) = serve(vec![(503, "a".into()), (503, "b".into()), (503, "c".into())]);
    let err = live(&url).complete(&request()).unwrap_err();
    assert_eq!(err, ClientError::Status { status: 503, body: "c".into() });
    server.join().unwrap();
}

#[test]
fn missing_api_key_is_a_config_error() {
    let err = LiveConfig::from_env("http://localhost", "STOCHFORM_TEST_UNSET_KEY_VAR").unwrap_err();
    assert!(matches!(err, ClientError::Config(_)));
}
