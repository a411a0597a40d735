use crate::error::{Error, Result};

const APOSTROPHES: [char; 2] = ['\'', '\u{2019}'];

/// Punctuation outside ASCII that is still split into its own token.
const EXTRA_PUNCTUATION: [char; 12] = [
    '\u{2018}', '\u{2019}', '\u{201C}', '\u{201D}', '\u{2026}', '\u{2013}', '\u{2014}', '\u{00AB}', '\u{00BB}',
    '\u{00BF}', '\u{00A1}', '\u{00B7}',
];

/// Splitting rules for comment text.
///
/// Text is split on whitespace, then every punctuation character becomes its
/// own token, except for apostrophes and hyphens between two alphanumerics and
/// `.`/`,` between two digits, which stay inside the word. A word ending in
/// `n't` or in one of the apostrophe suffixes is split before the suffix
/// (`doesn't` → `does` `n't`, `it's` → `it` `'s`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TokenizerRules {
    /// Suffixes that start with an apostrophe, lowercase, without it: `s`, `re`, ...
    pub apostrophe_suffixes: Vec<String>,
    /// Whether `n't` is split off as its own token.
    pub split_negation: bool,
    pub extra_punctuation: Vec<char>,
}

impl Default for TokenizerRules {
    fn default() -> Self {
        TokenizerRules {
            apostrophe_suffixes: ["s", "re", "ve", "ll", "d", "m"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            split_negation: true,
            extra_punctuation: EXTRA_PUNCTUATION.to_vec(),
        }
    }
}

impl TokenizerRules {
    fn is_punct(&self, c: char) -> bool {
        c.is_ascii_punctuation() || self.extra_punctuation.contains(&c)
    }

    /// True when the punctuation character at `i` stays inside the current word.
    fn joins_word(&self, chars: &[char], i: usize) -> bool {
        let (Some(&prev), Some(&next)) = (i.checked_sub(1).and_then(|p| chars.get(p)), chars.get(i + 1)) else {
            return false;
        };
        let c = chars[i];
        if APOSTROPHES.contains(&c) || c == '-' {
            prev.is_alphanumeric() && next.is_alphanumeric()
        } else if c == '.' || c == ',' {
            prev.is_ascii_digit() && next.is_ascii_digit()
        } else {
            false
        }
    }

    pub fn tokenize(&self, text: &str) -> Result<Vec<String>> {
        if text.trim().is_empty() {
            return Err(Error::EmptyComment);
        }
        let mut tokens = Vec::new();
        for chunk in text.split_whitespace() {
            let chars: Vec<char> = chunk.chars().collect();
            let mut word = String::new();
            for (i, &c) in chars.iter().enumerate() {
                if self.is_punct(c) && !self.joins_word(&chars, i) {
                    self.push_word(&mut word, &mut tokens);
                    tokens.push(c.to_string());
                } else {
                    word.push(c);
                }
            }
            self.push_word(&mut word, &mut tokens);
        }
        Ok(tokens)
    }

    fn push_word(&self, word: &mut String, tokens: &mut Vec<String>) {
        if word.is_empty() {
            return;
        }
        let w = std::mem::take(word);
        match self.contraction_split(&w) {
            Some(at) => {
                tokens.push(w[..at].to_string());
                tokens.push(w[at..].to_string());
            }
            None => tokens.push(w),
        }
    }

    /// Byte offset where a contraction suffix starts, if any.
    fn contraction_split(&self, word: &str) -> Option<usize> {
        let lower = word.to_lowercase();
        // Lowercasing can change byte lengths outside ASCII; only match when it doesn't.
        if lower.len() != word.len() {
            return None;
        }
        if self.split_negation {
            for apos in APOSTROPHES {
                let suffix = format!("n{apos}t");
                if lower.ends_with(&suffix) && lower.len() > suffix.len() {
                    return Some(word.len() - suffix.len());
                }
            }
        }
        let (at, apos) = word.char_indices().rev().find(|(_, c)| APOSTROPHES.contains(c))?;
        let rest = &lower[at + apos.len_utf8()..];
        (at > 0 && self.apostrophe_suffixes.iter().any(|s| s == rest)).then_some(at)
    }
}

/// Tokenizes with the default rules.
pub fn tokenize(text: &str) -> Result<Vec<String>> {
    TokenizerRules::default().tokenize(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(s: &str) -> Vec<String> {
        tokenize(s).unwrap()
    }

    #[test]
    fn golden_examples() {
        assert_eq!(toks("Great idea!"), ["Great", "idea", "!"]);
        assert_eq!(toks("doesn't"), ["does", "n't"]);
        assert_eq!(toks("lol woops!"), ["lol", "woops", "!"]);
    }

    #[test]
    fn contraction_suffixes() {
        assert_eq!(toks("It's"), ["It", "'s"]);
        assert_eq!(
            toks("they're we've I'll he'd I'm"),
            ["they", "'re", "we", "'ve", "I", "'ll", "he", "'d", "I", "'m"]
        );
        assert_eq!(toks("recipe's"), ["recipe", "'s"]);
        assert_eq!(toks("DOESN'T"), ["DOES", "N'T"]);
        assert_eq!(toks("can't"), ["ca", "n't"]);
        assert_eq!(toks("don\u{2019}t"), ["do", "n\u{2019}t"]);
    }

    #[test]
    fn apostrophes_that_are_not_contractions() {
        assert_eq!(toks("o'clock"), ["o'clock"]);
        assert_eq!(toks("'quoted'"), ["'", "quoted", "'"]);
        assert_eq!(toks("James'"), ["James", "'"]);
    }

    #[test]
    fn punctuation_is_split_per_character() {
        assert_eq!(toks("What a hardship!?"), ["What", "a", "hardship", "!", "?"]);
        assert_eq!(toks("wait..."), ["wait", ".", ".", "."]);
        assert_eq!(toks("(yes)"), ["(", "yes", ")"]);
        assert_eq!(toks("jobs. /s"), ["jobs", ".", "/", "s"]);
    }

    #[test]
    fn numbers_and_hyphens_stay_whole() {
        assert_eq!(toks("3.5 1,000 well-known"), ["3.5", "1,000", "well-known"]);
        assert_eq!(toks("end-"), ["end", "-"]);
    }

    #[test]
    fn full_sentence() {
        assert_eq!(
            toks("Such a deep confession, and it doesn't sound like the guy who wrote it is an asshole at all."),
            [
                "Such",
                "a",
                "deep",
                "confession",
                ",",
                "and",
                "it",
                "does",
                "n't",
                "sound",
                "like",
                "the",
                "guy",
                "who",
                "wrote",
                "it",
                "is",
                "an",
                "asshole",
                "at",
                "all",
                "."
            ]
        );
    }

    #[test]
    fn empty_text_is_an_error() {
        assert!(matches!(tokenize(""), Err(Error::EmptyComment)));
        assert!(matches!(tokenize("  \t\n "), Err(Error::EmptyComment)));
    }

    proptest! {
        #[test]
        fn tokens_restore_all_non_whitespace(text in "[a-zA-Z0-9 '.,!?\\-\u{2019}é]{1,40}") {
            prop_assume!(!text.trim().is_empty());
            let tokens = tokenize(&text).unwrap();
            let joined: String = tokens.concat();
            let stripped: String = text.chars().filter(|c| !c.is_whitespace()).collect();
            prop_assert_eq!(joined, stripped);
            prop_assert!(tokens.iter().all(|t| !t.is_empty() && !t.contains(char::is_whitespace)));
            prop_assert_eq!(tokenize(&text).unwrap(), tokens);
        }
    }
}
