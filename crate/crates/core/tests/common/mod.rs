//! A minimal OpenAI-style completions server for exercising the HTTP backend.
//!
//! Echo requests are tokenized with the mock tokenizer; every token seen
//! earlier in the prompt gets -1.0, every fresh token -4.0, and the first token
//! gets `null` as real servers do. Generation requests return `completion`.

#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::{Arc, Mutex};
use std::thread;

use ctxprune::text::MockTokenizer;
use serde_json::{json, Value};

/// Header lines and JSON body of every request received.
pub type RequestLog = Arc<Mutex<Vec<(Vec<String>, Value)>>>;

pub struct StubServer {
    pub url: String,
    pub requests: RequestLog,
}

pub fn spawn_stub(completion: &'static str) -> StubServer {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/completions", listener.local_addr().unwrap());
    let requests = Arc::new(Mutex::new(Vec::new()));
    let log = Arc::clone(&requests);
    thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(stream) = stream else { break };
            let log = Arc::clone(&log);
            thread::spawn(move || {
                let _ = handle(stream, completion, &log);
            });
        }
    });
    StubServer { url, requests }
}

fn handle(stream: TcpStream, completion: &str, log: &Mutex<Vec<(Vec<String>, Value)>>) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    loop {
        let mut headers = Vec::new();
        let mut content_length = 0usize;
        loop {
            let mut line = String::new();
            if reader.read_line(&mut line)? == 0 {
                return Ok(());
            }
            let line = line.trim_end().to_string();
            if line.is_empty() {
                break;
            }
            if let Some((k, v)) = line.split_once(':') {
                if k.eq_ignore_ascii_case("content-length") {
                    content_length = v.trim().parse().unwrap_or(0);
                }
            }
            headers.push(line);
        }
        let mut body = vec![0u8; content_length];
        reader.read_exact(&mut body)?;
        let request: Value = serde_json::from_slice(&body).unwrap_or(Value::Null);
        log.lock().unwrap().push((headers, request.clone()));
        let response = respond(&request, completion);
        let payload = response.to_string();
        let mut out = stream.try_clone()?;
        write!(
            out,
            "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\n\r\n{}",
            payload.len(),
            payload
        )?;
        out.flush()?;
    }
}

fn respond(request: &Value, completion: &str) -> Value {
    let prompt = request["prompt"].as_str().unwrap_or("");
    if request["echo"].as_bool() == Some(true) {
        let spans = MockTokenizer::spans(prompt);
        let mut seen = std::collections::HashSet::new();
        let mut logprobs = Vec::new();
        let mut offsets = Vec::new();
        for (i, s) in spans.iter().enumerate() {
            offsets.push(prompt[..s.start].chars().count());
            if i == 0 {
                logprobs.push(Value::Null);
            } else if seen.contains(&s.text) {
                logprobs.push(json!(-1.0));
            } else {
                logprobs.push(json!(-4.0));
            }
            seen.insert(s.text.clone());
        }
        json!({"choices": [{"text": prompt, "logprobs": {"token_logprobs": logprobs, "text_offset": offsets}}]})
    } else {
        json!({"choices": [{"text": completion}]})
    }
}
