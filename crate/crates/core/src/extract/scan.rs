//! Small lexical helpers shared by the LaTeX passes.

/// Given `text[open_at]` == `open`, return the byte range of the group's
/// interior and the index just past the closing delimiter. Braces escaped
/// with a backslash do not count.
pub(crate) fn balanced_group(
    text: &str,
    open_at: usize,
    open: u8,
    close: u8,
) -> Option<(std::ops::Range<usize>, usize)> {
    let bytes = text.as_bytes();
    if bytes.get(open_at) != Some(&open) {
        return None;
    }
    let mut depth = 0usize;
    let mut i = open_at;
    while i < bytes.len() {
        let b = bytes[i];
        if b == b'\\' {
            i += 2;
            continue;
        }
        if b == open {
            depth += 1;
        } else if b == close {
            depth -= 1;
            if depth == 0 {
                return Some((open_at + 1..i, i + 1));
            }
        }
        i += 1;
    }
    None
}

pub(crate) fn skip_ws(text: &str, mut at: usize) -> usize {
    let bytes = text.as_bytes();
    while at < bytes.len() && bytes[at].is_ascii_whitespace() {
        at += 1;
    }
    at
}

/// Length of the ASCII-letter run starting at `at`.
pub(crate) fn letters_len(text: &str, at: usize) -> usize {
    text.as_bytes()[at.min(text.len())..]
        .iter()
        .take_while(|b| b.is_ascii_alphabetic())
        .count()
}

/// Remove `%` comments up to (not including) the end of line. A `%`
/// preceded by an odd number of backslashes is a literal percent sign.
pub(crate) fn strip_comments(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for (n, line) in text.split('\n').enumerate() {
        if n > 0 {
            out.push('\n');
        }
        out.push_str(&line[..comment_start(line).unwrap_or(line.len())]);
    }
    out
}

fn comment_start(line: &str) -> Option<usize> {
    let bytes = line.as_bytes();
    let mut backslashes = 0usize;
    for (i, &b) in bytes.iter().enumerate() {
        match b {
            b'\\' => backslashes += 1,
            b'%' if backslashes.is_multiple_of(2) => return Some(i),
            _ => backslashes = 0,
        }
        if b != b'\\' {
            backslashes = 0;
        }
    }
    None
}
