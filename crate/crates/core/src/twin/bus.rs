//! Revisioned JSON document store shared by all services.

use std::collections::BTreeMap;

use parking_lot::Mutex;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BusDoc {
    pub topic: String,
    pub key: String,
    pub payload: serde_json::Value,
    pub revision: u64,
}

#[derive(Debug, Default)]
pub struct Bus {
    docs: Mutex<BTreeMap<(String, String), BusDoc>>,
}

impl Bus {
    pub fn new() -> Self {
        Self::default()
    }

    /// Stores `payload` under the next revision of `(topic, key)`.
    pub fn publish(&self, topic: &str, key: &str, payload: serde_json::Value) -> u64 {
        let mut docs = self.docs.lock();
        let k = (topic.to_string(), key.to_string());
        let revision = docs.get(&k).map_or(1, |d| d.revision + 1);
        docs.insert(
            k,
            BusDoc {
                topic: topic.into(),
                key: key.into(),
                payload,
                revision,
            },
        );
        revision
    }

    pub fn retrieve(&self, topic: &str, key: &str) -> Option<BusDoc> {
        self.docs.lock().get(&(topic.to_string(), key.to_string())).cloned()
    }

    /// All documents in (topic, key) order.
    pub fn dump(&self) -> Vec<BusDoc> {
        self.docs.lock().values().cloned().collect()
    }
}
