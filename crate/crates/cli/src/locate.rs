//! Maps a path inside a JSON document back to a line and column of its text.

/// One step of a path: an object key or an array index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Seg {
    Key(String),
    Index(usize),
}

impl From<&str> for Seg {
    fn from(k: &str) -> Self {
        Seg::Key(k.to_string())
    }
}

impl From<usize> for Seg {
    fn from(i: usize) -> Self {
        Seg::Index(i)
    }
}

pub fn render(path: &[Seg]) -> String {
    let mut s = String::new();
    for seg in path {
        match seg {
            Seg::Key(k) => {
                s.push('/');
                s.push_str(k);
            }
            Seg::Index(i) => {
                s.push('/');
                s.push_str(&i.to_string());
            }
        }
    }
    if s.is_empty() {
        s.push('/');
    }
    s
}

struct Scanner<'a> {
    b: &'a [u8],
    pos: usize,
}

impl Scanner<'_> {
    fn ws(&mut self) {
        while self.pos < self.b.len() && self.b[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn string(&mut self) -> Option<String> {
        if self.b.get(self.pos) != Some(&b'"') {
            return None;
        }
        let start = self.pos;
        self.pos += 1;
        while self.pos < self.b.len() {
            match self.b[self.pos] {
                b'\\' => self.pos += 2,
                b'"' => {
                    self.pos += 1;
                    let raw = std::str::from_utf8(&self.b[start..self.pos]).ok()?;
                    return serde_json::from_str(raw).ok();
                }
                _ => self.pos += 1,
            }
        }
        None
    }

    fn skip_value(&mut self) -> Option<()> {
        self.ws();
        match *self.b.get(self.pos)? {
            b'"' => self.string().map(|_| ()),
            b'{' | b'[' => {
                let close = if self.b[self.pos] == b'{' { b'}' } else { b']' };
                self.pos += 1;
                loop {
                    self.ws();
                    match *self.b.get(self.pos)? {
                        c if c == close => {
                            self.pos += 1;
                            return Some(());
                        }
                        b',' | b':' => self.pos += 1,
                        _ => self.skip_value()?,
                    }
                }
            }
            _ => {
                while self.pos < self.b.len() && !b",]}".contains(&self.b[self.pos]) && !self.b[self.pos].is_ascii_whitespace() {
                    self.pos += 1;
                }
                Some(())
            }
        }
    }

    /// Offset of the value at `path`, starting from the value at `pos`.
    fn find(&mut self, path: &[Seg]) -> Option<usize> {
        self.ws();
        let Some((seg, rest)) = path.split_first() else {
            return Some(self.pos);
        };
        match (seg, *self.b.get(self.pos)?) {
            (Seg::Key(key), b'{') => {
                self.pos += 1;
                loop {
                    self.ws();
                    if *self.b.get(self.pos)? == b'}' {
                        return None;
                    }
                    let k = self.string()?;
                    self.ws();
                    self.pos += 1; // ':'
                    if &k == key {
                        return self.find(rest);
                    }
                    self.skip_value()?;
                    self.ws();
                    if self.b.get(self.pos) == Some(&b',') {
                        self.pos += 1;
                    }
                }
            }
            (Seg::Index(i), b'[') => {
                self.pos += 1;
                for _ in 0..*i {
                    self.skip_value()?;
                    self.ws();
                    if *self.b.get(self.pos)? != b',' {
                        return None;
                    }
                    self.pos += 1;
                }
                self.ws();
                if self.b.get(self.pos) == Some(&b']') {
                    return None;
                }
                self.find(rest)
            }
            _ => None,
        }
    }
}

/// 1-based line and column of the value at `path`, falling back to the
/// deepest prefix that exists.
pub fn locate(text: &str, path: &[Seg]) -> (usize, usize) {
    let offset = (0..=path.len())
        .rev()
        .find_map(|l| Scanner { b: text.as_bytes(), pos: 0 }.find(&path[..l]))
        .unwrap_or(0);
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |s| s.chars().count()) + 1;
    (line, column)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_nested_values() {
        let text = "{\n  \"a\": [1, {\"b\": \"x\"}],\n  \"c\": 2\n}";
        assert_eq!(locate(text, &["c".into()]), (3, 8));
        assert_eq!(locate(text, &["a".into(), 1.into(), "b".into()]), (2, 18));
        assert_eq!(locate(text, &["a".into(), 7.into()]), (2, 8));
        assert_eq!(render(&["a".into(), 1.into()]), "/a/1");
    }
}
