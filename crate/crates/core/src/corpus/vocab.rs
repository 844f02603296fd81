use std::collections::HashMap;

/// String interner with dense ids assigned in first-seen order and an
/// occurrence count per entry.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Vocab {
    entries: Vec<String>,
    index: HashMap<String, u32>,
    counts: Vec<u64>,
}

impl Vocab {
    pub fn new() -> Self {
        Self::default()
    }

    /// Interns `token` and bumps its count, returning the id.
    pub fn add(&mut self, token: &str) -> u32 {
        let id = self.intern(token);
        self.counts[id as usize] += 1;
        id
    }

    /// Interns `token` without counting an occurrence.
    pub fn intern(&mut self, token: &str) -> u32 {
        if let Some(&id) = self.index.get(token) {
            return id;
        }
        let id = self.entries.len() as u32;
        self.entries.push(token.to_owned());
        self.index.insert(token.to_owned(), id);
        self.counts.push(0);
        id
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: u32) -> &str {
        &self.entries[id as usize]
    }

    pub fn count(&self, id: u32) -> u64 {
        self.counts[id as usize]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn entries(&self) -> &[String] {
        &self.entries
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub(crate) fn add_existing(&mut self, id: u32) {
        self.counts[id as usize] += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_first_seen_ids() {
        let mut v = Vocab::new();
        assert_eq!(v.add("case"), 0);
        assert_eq!(v.add("great"), 1);
        assert_eq!(v.add("case"), 0);
        assert_eq!(v.count(0), 2);
        assert_eq!(v.count(1), 1);
        assert_eq!(v.id("great"), Some(1));
        assert_eq!(v.token(1), "great");
        assert_eq!(v.total(), 3);
    }
}
