use std::sync::OnceLock;

use sha2::{Digest, Sha256};

const CLASS_FILE: &str = include_str!("../../data/classes.txt");

/// Label of the silence class, always last.
pub const SILENCE: &str = "sil";

/// The 45 output classes in model order: 44 phones, then silence.
pub fn class_names() -> &'static [&'static str] {
    static NAMES: OnceLock<Vec<&'static str>> = OnceLock::new();
    NAMES.get_or_init(|| {
        CLASS_FILE
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .collect()
    })
}

pub fn class_index(name: &str) -> Option<usize> {
    class_names().iter().position(|&c| c == name)
}

/// Short hash of the class list, folded into cache keys so containers built
/// against a different ordering are never reused.
pub fn class_list_hash() -> String {
    let digest = Sha256::digest(CLASS_FILE.as_bytes());
    hex::encode(&digest[..8])
}
