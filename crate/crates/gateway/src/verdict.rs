use serde_json::Value;

use numprobe_core::corpus::VeracityLabel;

fn strip_think_blocks(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(i) = rest.find("<think>") {
        out.push_str(&rest[..i]);
        match rest[i..].find("</think>") {
            Some(j) => rest = &rest[i + j + "</think>".len()..],
            None => {
                rest = "";
                break;
            }
        }
    }
    out.push_str(rest);
    out
}

fn label_in(v: &Value) -> Option<bool> {
    match v {
        Value::Object(map) => match map.get("label") {
            Some(Value::Bool(b)) => Some(*b),
            _ => map.values().find_map(label_in),
        },
        _ => None,
    }
}

/// Extract the verdict from a model response.
///
/// Any JSON object carrying a boolean `label` counts, wherever it sits in
/// the text; code fences and `<think>` blocks are ignored. With several
/// such objects the last one wins. `None` means the output is invalid.
pub fn parse_verdict(raw: &str) -> Option<VeracityLabel> {
    let text = strip_think_blocks(raw);
    let mut found = None;
    let mut pos = 0;
    while let Some(off) = text[pos..].find('{') {
        let start = pos + off;
        let mut stream = serde_json::Deserializer::from_str(&text[start..]).into_iter::<Value>();
        match stream.next() {
            Some(Ok(v)) => {
                if let Some(b) = label_in(&v) {
                    found = Some(VeracityLabel::from_bool(b));
                }
                pos = start + stream.byte_offset().max(1);
            }
            _ => pos = start + 1,
        }
    }
    found
}
