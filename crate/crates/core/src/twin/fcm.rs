//! Schema-checked envelopes for documents exchanged between services.

use std::collections::BTreeMap;

use jsonschema::JSONSchema;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const FCM_VERSION: u32 = 1;

const SCHEMAS: [(&str, &str); 3] = [
    ("assembly_info", include_str!("../../schemas/assembly_info.json")),
    ("bus_doc", include_str!("../../schemas/bus_doc.json")),
    ("scene", include_str!("../../schemas/scene.json")),
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FcmError {
    #[error("unknown schema `{0}`")]
    UnknownSchema(String),
    #[error("schema `{schema}` version {got} unsupported (have {want})")]
    Version { schema: String, got: u32, want: u32 },
    #[error("payload fails schema `{schema}`: {message}")]
    Invalid { schema: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FcmEnvelope {
    pub schema_id: String,
    pub version: u32,
    pub payload: serde_json::Value,
}

pub struct Fcm {
    schemas: BTreeMap<&'static str, JSONSchema>,
}

impl std::fmt::Debug for Fcm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fcm").field("schemas", &self.schemas.keys()).finish()
    }
}

impl Default for Fcm {
    fn default() -> Self {
        Self::new()
    }
}

impl Fcm {
    pub fn new() -> Self {
        let schemas = SCHEMAS
            .iter()
            .map(|(id, text)| {
                let v: serde_json::Value = serde_json::from_str(text).expect("shipped schema is JSON");
                (*id, JSONSchema::compile(&v).expect("shipped schema compiles"))
            })
            .collect();
        Fcm { schemas }
    }

    pub fn schema_ids(&self) -> Vec<&'static str> {
        self.schemas.keys().copied().collect()
    }

    pub fn check(&self, e: &FcmEnvelope) -> Result<(), FcmError> {
        let s = self
            .schemas
            .get(e.schema_id.as_str())
            .ok_or_else(|| FcmError::UnknownSchema(e.schema_id.clone()))?;
        if e.version != FCM_VERSION {
            return Err(FcmError::Version {
                schema: e.schema_id.clone(),
                got: e.version,
                want: FCM_VERSION,
            });
        }
        if let Err(errs) = s.validate(&e.payload) {
            let message = errs
                .map(|e| format!("{} at {}", e, e.instance_path))
                .collect::<Vec<_>>()
                .join("; ");
            return Err(FcmError::Invalid {
                schema: e.schema_id.clone(),
                message,
            });
        }
        Ok(())
    }

    /// Wraps and checks `payload`.
    pub fn seal(&self, schema_id: &str, payload: serde_json::Value) -> Result<FcmEnvelope, FcmError> {
        let e = FcmEnvelope {
            schema_id: schema_id.into(),
            version: FCM_VERSION,
            payload,
        };
        self.check(&e)?;
        Ok(e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn bus_doc_round() {
        let f = Fcm::new();
        assert_eq!(f.schema_ids(), vec!["assembly_info", "bus_doc", "scene"]);
        f.seal(
            "bus_doc",
            json!({"topic": "t", "key": "k", "payload": [1], "revision": 1}),
        )
        .unwrap();
        assert!(matches!(
            f.seal(
                "bus_doc",
                json!({"topic": "t", "key": "k", "payload": 1, "revision": 0})
            ),
            Err(FcmError::Invalid { .. })
        ));
        assert!(matches!(f.seal("nope", json!({})), Err(FcmError::UnknownSchema(_))));
        let mut e = f
            .seal(
                "bus_doc",
                json!({"topic": "t", "key": "k", "payload": null, "revision": 3}),
            )
            .unwrap();
        e.version = 9;
        assert!(matches!(f.check(&e), Err(FcmError::Version { .. })));
    }

    #[test]
    fn assembly_info_shapes() {
        let f = Fcm::new();
        let pose = json!({"q": [1, 0, 0, 0], "t": [0, 0, 0]});
        f.seal(
            "assembly_info",
            json!({"part_id": "A", "model_id": "m", "target_pose": pose}),
        )
        .unwrap();
        f.seal(
            "assembly_info",
            json!({"joint_id": "J", "kind": "fastener", "part_a": "A", "part_b": "B",
                   "axis": [0, 0, -1], "origin": [0, 0, 0], "target_point": [0, 0, 0], "screw_type": "M5x12"}),
        )
        .unwrap();
        assert!(f.seal("assembly_info", json!({"part_id": "A"})).is_err());
    }
}
