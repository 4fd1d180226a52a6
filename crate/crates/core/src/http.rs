//! Small HTTP helpers shared by the LLM gateway and the metric adapters.

use std::time::Duration;

/// Navigate a dot path like `choices.0.message.content` through a JSON
/// value; numeric segments index arrays.
pub(crate) fn json_path<'a>(
    value: &'a serde_json::Value,
    path: &str,
) -> Option<&'a serde_json::Value> {
    let mut current = value;
    for segment in path.split('.') {
        current = match segment.parse::<usize>() {
            Ok(index) => current.get(index)?,
            Err(_) => current.get(segment)?,
        };
    }
    Some(current)
}

/// Single-attempt JSON POST. Returns the parsed body, or the HTTP status
/// code when the server answered with an error status.
pub(crate) fn post_json(
    url: &str,
    auth_token: Option<&str>,
    body: &serde_json::Value,
    timeout: Duration,
) -> std::result::Result<serde_json::Value, HttpFailure> {
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(timeout))
        .build()
        .into();
    let mut request = agent.post(url);
    if let Some(token) = auth_token {
        request = request.header("authorization", &format!("Bearer {token}"));
    }
    match request.send_json(body) {
        Ok(mut response) => response
            .body_mut()
            .read_json::<serde_json::Value>()
            .map_err(|e| HttpFailure::Transport(e.to_string())),
        Err(ureq::Error::StatusCode(code)) => Err(HttpFailure::Status(code)),
        Err(e) => Err(HttpFailure::Transport(e.to_string())),
    }
}

#[derive(Debug)]
pub(crate) enum HttpFailure {
    Status(u16),
    Transport(String),
}

impl std::fmt::Display for HttpFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            HttpFailure::Status(code) => write!(f, "http status {code}"),
            HttpFailure::Transport(msg) => write!(f, "transport: {msg}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn json_path_walks_objects_and_arrays() {
        let v = json!({"choices": [{"message": {"content": "hi"}}]});
        assert_eq!(
            json_path(&v, "choices.0.message.content"),
            Some(&json!("hi"))
        );
        assert_eq!(json_path(&v, "choices.1.message"), None);
        assert_eq!(json_path(&v, "missing"), None);
    }
}
