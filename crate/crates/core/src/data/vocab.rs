use std::collections::HashMap;

/// Id reserved for padding in token vocabularies.
pub const PAD_ID: usize = 0;
/// Id every out-of-vocabulary token maps to.
pub const UNK_ID: usize = 1;

const PAD: &str = "<pad>";
const UNK: &str = "<unk>";

/// Dense string ↔ id mapping, ids assigned in first-seen order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocab {
    ids: HashMap<String, usize>,
    words: Vec<String>,
    reserved: usize,
}

impl Vocab {
    /// An empty vocabulary with no reserved entries (used for labels).
    pub fn new() -> Self {
        Self::default()
    }

    /// A token vocabulary with padding at id 0 and unknown at id 1.
    pub fn for_tokens() -> Self {
        let mut v = Self::new();
        v.insert(PAD);
        v.insert(UNK);
        v.reserved = 2;
        v
    }

    pub fn insert(&mut self, word: &str) -> usize {
        if let Some(&id) = self.ids.get(word) {
            return id;
        }
        let id = self.words.len();
        self.ids.insert(word.to_string(), id);
        self.words.push(word.to_string());
        id
    }

    pub fn get(&self, word: &str) -> Option<usize> {
        self.ids.get(word).copied()
    }

    /// Token lookup: unseen and reserved spellings fall back to [`UNK_ID`].
    pub fn token_id(&self, word: &str) -> usize {
        match self.ids.get(word) {
            Some(&id) if id >= self.reserved => id,
            _ => UNK_ID,
        }
    }

    pub fn word(&self, id: usize) -> Option<&str> {
        self.words.get(id).map(String::as_str)
    }

    /// Total size including reserved entries.
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Non-reserved entries in id order.
    pub fn entries(&self) -> impl Iterator<Item = &str> {
        self.words[self.reserved..].iter().map(String::as_str)
    }
}

/// The only token normalization applied anywhere: lowercasing.
pub fn normalize_token(token: &str) -> String {
    token.to_lowercase()
}
