use std::sync::OnceLock;

use regex::Regex;

use super::{Token, TokenKind, EMAIL_TAG, URL_TAG, USER_TAG};

/// Western emoticons kept as single tokens. Entries starting with a letter or
/// digit are left out so that ordinary words are never swallowed.
pub const EMOTICONS: &[&str] = &[
    ":-)", ":)", ":-))", ":))", ":-(", ":(", ":-((", ":((", ";-)", ";)", ":-D", ":D", ";-D", ";D",
    ":-P", ":P", ":-p", ":p", ";-P", ";P", ";-p", ";p", ":-O", ":O", ":-o", ":o", ":-|", ":|",
    ":-/", ":/", ":-\\", ":\\", ":-*", ":*", ":-x", ":x", ":-X", ":X", ":-S", ":S", ":-$", ":$",
    ":-@", ":@", ":'(", ":'-(", ":')", ":'-)", ":-[", ":[", ":-]", ":]", ":-}", ":}", ":-{", ":{",
    "=)", "=(", "=D", "=P", "=p", "=/", "=|", "=]", "=[", ";-(", ";(", ">:(", ">:-(", ">:)",
    ">:-)", ">:D", ">:O", ">:P", "<3", "</3", "<33", "^_^", "^^", "^.^", "-_-", "-.-", "o_O",
    "O_o", "T_T", ";_;", "(:", "):", "(-:", ")-:", ":-#", ":#", ":-&", ":&", "%-)", "%)", "|-)",
    "|)", "B-)", "*_*", "<(^_^)>", "\\o/", "\\m/", ":3", ":-3", ">.<", ">_<", ":-c", ":c",
];

struct Patterns {
    tag: Regex,
    url: Regex,
    email: Regex,
    mention: Regex,
    hashtag: Regex,
    date: Regex,
    currency: Regex,
    number: Regex,
    acronym: Regex,
    censored: Regex,
    word: Regex,
    emoticons: Vec<String>,
}

fn patterns() -> &'static Patterns {
    static P: OnceLock<Patterns> = OnceLock::new();
    P.get_or_init(|| {
        let mut emoticons: Vec<String> = EMOTICONS.iter().map(|e| e.to_string()).collect();
        emoticons.sort_by(|a, b| b.len().cmp(&a.len()).then(a.cmp(b)));
        emoticons.dedup();
        Patterns {
            tag: Regex::new(r"^<(?:url|email|user)>").unwrap(),
            url: Regex::new(r"^(?i:https?://|www\.)[^\s]+").unwrap(),
            email: Regex::new(r"^[\w.+-]+@[\w-]+(?:\.[\w-]+)+").unwrap(),
            mention: Regex::new(r"^@\w+").unwrap(),
            hashtag: Regex::new(r"^#\w+").unwrap(),
            date: Regex::new(r"^\d{1,4}[/-]\d{1,2}[/-]\d{1,4}\b").unwrap(),
            currency: Regex::new(r"^[$€£¥]\d+(?:[.,]\d+)*").unwrap(),
            number: Regex::new(r"^\d+(?:[.,:]\d+)+").unwrap(),
            acronym: Regex::new(r"^(?:\p{L}\.){2,}").unwrap(),
            censored: Regex::new(r"^\p{L}+\*+[\p{L}*]*").unwrap(),
            word: Regex::new(r"^[\p{L}\p{N}]+(?:['’\-][\p{L}\p{N}]+)*").unwrap(),
            emoticons,
        }
    })
}

/// Codepoints treated as emoji.
pub fn is_emoji(c: char) -> bool {
    matches!(c as u32,
        0x1F000..=0x1FAFF | 0x2600..=0x27BF | 0x2B00..=0x2BFF | 0x3030 | 0x303D
            | 0x3297 | 0x3299 | 0x2190..=0x21FF | 0x2300..=0x23FF)
}

fn is_emoji_modifier(c: char) -> bool {
    matches!(c as u32, 0xFE0E | 0xFE0F | 0x1F3FB..=0x1F3FF | 0x20E3 | 0xE0020..=0xE007F)
}

/// Byte length of an emoji sequence starting at the head of `s`, including
/// modifiers and zero-width-joined continuations.
fn emoji_len(s: &str) -> Option<usize> {
    let mut chars = s.char_indices().peekable();
    let (_, first) = chars.next()?;
    if !is_emoji(first) {
        return None;
    }
    let mut end = first.len_utf8();
    while let Some(&(i, c)) = chars.peek() {
        if is_emoji_modifier(c) {
            end = i + c.len_utf8();
            chars.next();
        } else if c == '\u{200D}' {
            chars.next();
            match chars.next() {
                Some((j, d)) if is_emoji(d) => end = j + d.len_utf8(),
                _ => break,
            }
        } else {
            break;
        }
    }
    Some(end)
}

fn emoticon_len(rest: &str, prev: Option<char>) -> Option<usize> {
    let p = patterns();
    for e in &p.emoticons {
        if let Some(tail) = rest.strip_prefix(e.as_str()) {
            let last = e.chars().last().unwrap();
            if last.is_alphanumeric() && tail.chars().next().is_some_and(char::is_alphanumeric) {
                continue;
            }
            // "(:" and friends glued to a word are more likely punctuation.
            if e.starts_with(['(', ')']) && prev.is_some_and(char::is_alphanumeric) {
                continue;
            }
            return Some(e.len());
        }
    }
    None
}

const URL_TRAILING: &[char] = &['.', ',', '!', '?', ';', ':', ')', ']', '"', '\''];

/// Splits social-media text into lowercased tokens. URLs, e-mail addresses
/// and mentions are replaced by designated tags; emoticons, emoji, censored
/// words, dates, currency amounts and acronyms stay whole. Hashtags come out
/// as `Word` tokens that keep their leading `#`.
pub fn tokenize(text: &str) -> Vec<Token> {
    let p = patterns();
    let mut out = Vec::new();
    let mut i = 0;
    let mut prev: Option<char> = None;
    while i < text.len() {
        let rest = &text[i..];
        let c = rest.chars().next().unwrap();
        if c.is_whitespace() {
            i += c.len_utf8();
            prev = Some(c);
            continue;
        }

        let (len, token) = if let Some(m) = p.tag.find(rest) {
            (m.end(), Token::new(m.as_str(), TokenKind::Tag))
        } else if let Some(m) = p.url.find(rest) {
            let trimmed = m.as_str().trim_end_matches(URL_TRAILING);
            (trimmed.len(), Token::new(URL_TAG, TokenKind::Tag))
        } else if let Some(m) = p.email.find(rest) {
            (m.end(), Token::new(EMAIL_TAG, TokenKind::Tag))
        } else if let Some(m) = p.mention.find(rest) {
            (m.end(), Token::new(USER_TAG, TokenKind::Tag))
        } else if let Some(m) = p.hashtag.find(rest) {
            (m.end(), Token::new(&m.as_str().to_lowercase(), TokenKind::Word))
        } else if let Some(len) = emoticon_len(rest, prev) {
            (len, Token::new(&rest[..len], TokenKind::Emoticon))
        } else if let Some(len) = emoji_len(rest) {
            (len, Token::new(&rest[..len], TokenKind::Emoticon))
        } else if let Some(m) = p
            .date
            .find(rest)
            .or_else(|| p.currency.find(rest))
            .or_else(|| p.number.find(rest))
            .or_else(|| p.acronym.find(rest))
        {
            (m.end(), Token::new(&m.as_str().to_lowercase(), TokenKind::Word))
        } else if let Some(m) = p.censored.find(rest) {
            (m.end(), Token::new(&m.as_str().to_lowercase(), TokenKind::Censored))
        } else if let Some(m) = p.word.find(rest) {
            (m.end(), Token::new(&m.as_str().to_lowercase(), TokenKind::Word))
        } else {
            // Runs of one punctuation character ("...", "!!!") stay together.
            let len = rest.chars().take_while(|&d| d == c).map(char::len_utf8).sum();
            (len, Token::new(&rest[..len], TokenKind::Punct))
        };

        prev = text[..i + len].chars().last();
        i += len;
        out.push(token);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn surfaces(text: &str) -> Vec<String> {
        tokenize(text).into_iter().map(|t| t.surface).collect()
    }

    #[test]
    fn simple_sentence() {
        assert_eq!(surfaces("He harassed me."), ["he", "harassed", "me", "."]);
    }

    #[test]
    fn designated_tags_and_emoji() {
        let toks = tokenize("see https://x.co 😊 @ann");
        let s: Vec<_> = toks.iter().map(|t| t.surface.as_str()).collect();
        assert_eq!(s, ["see", "<url>", "😊", "<user>"]);
        assert_eq!(toks[1].kind, TokenKind::Tag);
        assert_eq!(toks[2].kind, TokenKind::Emoticon);
        assert_eq!(toks[3].kind, TokenKind::Tag);
    }

    #[test]
    fn censored_and_emoticon_survive() {
        let toks = tokenize("that's s**t :-)");
        let s: Vec<_> = toks.iter().map(|t| t.surface.as_str()).collect();
        assert_eq!(s, ["that's", "s**t", ":-)"]);
        assert_eq!(toks[1].kind, TokenKind::Censored);
        assert_eq!(toks[2].kind, TokenKind::Emoticon);
    }

    #[test]
    fn email_and_url_punctuation() {
        assert_eq!(
            surfaces("mail me@x.org or see www.x.com/a."),
            ["mail", "<email>", "or", "see", "<url>", "."]
        );
    }

    #[test]
    fn keeps_expressions_intact() {
        assert_eq!(
            surfaces("On 10/16/2017 I paid $5.50 in the U.S. lol!!!"),
            ["on", "10/16/2017", "i", "paid", "$5.50", "in", "the", "u.s.", "lol", "!!!"]
        );
    }

    #[test]
    fn hashtag_is_one_word() {
        let toks = tokenize("#MeToo now");
        assert_eq!(toks[0], Token::new("#metoo", TokenKind::Word));
    }

    #[test]
    fn zwj_emoji_sequence_is_one_token() {
        let toks = tokenize("👩\u{200D}💻 ok 👍🏽");
        assert_eq!(toks.len(), 3);
        assert_eq!(toks[0].kind, TokenKind::Emoticon);
        assert_eq!(toks[2].surface, "👍🏽");
    }

    #[test]
    fn tag_literals_round_trip() {
        let toks = tokenize("<url> <user> <email>");
        assert!(toks.iter().all(|t| t.kind == TokenKind::Tag));
    }

    #[test]
    fn empty_text() {
        assert!(tokenize("").is_empty());
        assert!(tokenize("   \n").is_empty());
    }
}
