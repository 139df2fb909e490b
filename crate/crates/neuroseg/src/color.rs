//! Color-scheme text files: `<id> <name> <R> <G> <B> <A>` per line.

use std::collections::BTreeSet;

use neuroseg_core::{ColorScheme, Error as CoreError};

use crate::error::Result;

fn invalid(line: usize, msg: impl std::fmt::Display) -> crate::error::Error {
    CoreError::Validation(format!("color scheme line {line}: {msg}")).into()
}

/// Names may contain spaces; the last four tokens are the channels.
pub fn parse_color_scheme(text: &str) -> Result<ColorScheme> {
    let mut scheme = ColorScheme::empty();
    let mut seen = BTreeSet::new();
    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() < 6 {
            return Err(invalid(line_no, "expected `<id> <name> <R> <G> <B> <A>`"));
        }
        let id: u16 = tokens[0]
            .parse()
            .map_err(|_| invalid(line_no, format!("label id {:?} is not an integer in 0..=65535", tokens[0])))?;
        if !seen.insert(id) {
            return Err(invalid(line_no, format!("duplicate label id {id}")));
        }
        let k = tokens.len();
        let mut rgba = [0u8; 4];
        for (c, tok) in tokens[k - 4..].iter().enumerate() {
            rgba[c] = tok
                .parse()
                .map_err(|_| invalid(line_no, format!("channel {tok:?} outside [0, 255]")))?;
        }
        scheme.insert(id, &tokens[1..k - 4].join(" "), rgba);
    }
    Ok(scheme)
}

pub fn format_color_scheme(scheme: &ColorScheme) -> String {
    let mut out = String::new();
    for (id, e) in scheme.iter() {
        let [r, g, b, a] = e.rgba;
        out.push_str(&format!("{id} {} {r} {g} {b} {a}\n", e.name));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn one_entry_plus_background() {
        let s = parse_color_scheme("1 WM 255 255 255 255").unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.get(1).unwrap().rgba, [255; 4]);
        assert_eq!(s.get(0).unwrap().rgba[3], 0);
    }

    #[test]
    fn empty_and_comments() {
        let s = parse_color_scheme("# nothing here\n\n   \n").unwrap();
        assert_eq!(s.len(), 1);
        assert!(s.contains(0));
        let s = parse_color_scheme("2 gray matter 10 20 30 40 # cortex\n").unwrap();
        assert_eq!(s.get(2).unwrap().name, "gray matter");
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse_color_scheme("1 a 0 0 0 0\n1 b 0 0 0 0\n").unwrap_err();
        assert!(matches!(&e, Error::Core(CoreError::Validation(m)) if m.contains("line 2") && m.contains("duplicate")));
        assert!(parse_color_scheme("1 a 0 0 256 0").is_err());
        assert!(parse_color_scheme("-1 a 0 0 0 0").is_err());
        assert!(parse_color_scheme("1 a 0 0 0").is_err());
    }

    #[test]
    fn format_round_trips() {
        let s = ColorScheme::standard();
        assert_eq!(parse_color_scheme(&format_color_scheme(&s)).unwrap(), s);
    }
}
