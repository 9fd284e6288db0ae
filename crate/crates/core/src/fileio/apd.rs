use crate::error::Result;
use crate::fileio::kv::{self, Value};

pub type ApdValue = Value;

/// Algorithm-problem design: fixed settings forwarded to the tuned algorithm.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Apd {
    entries: Vec<(String, ApdValue)>,
}

impl Apd {
    pub fn get(&self, key: &str) -> Option<&ApdValue> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    pub fn get_f64(&self, key: &str) -> Option<f64> {
        self.get(key).and_then(Value::as_f64)
    }

    pub fn get_vec(&self, key: &str) -> Option<Vec<f64>> {
        self.get(key).and_then(Value::as_vec)
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.get(key).and_then(Value::as_str)
    }

    /// Insert or replace, keeping the original position of existing keys.
    pub fn set(&mut self, key: impl Into<String>, value: ApdValue) {
        let key = key.into();
        match self.entries.iter_mut().find(|(k, _)| *k == key) {
            Some(slot) => slot.1 = value,
            None => self.entries.push((key, value)),
        }
    }

    pub fn entries(&self) -> &[(String, ApdValue)] {
        &self.entries
    }

    pub fn to_text(&self) -> String {
        self.entries
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}

pub fn parse_apd(text: &str) -> Result<Apd> {
    let mut apd = Apd::default();
    for (_, k, v) in kv::parse_lines(text)? {
        apd.set(k, v);
    }
    Ok(apd)
}
