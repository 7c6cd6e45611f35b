use std::ops::Range;

/// Splits question text into vocabulary tokens, returned as byte ranges.
pub trait Segmenter {
    fn segment(&self, text: &str) -> Vec<Range<usize>>;

    fn tokens<'a>(&self, text: &'a str) -> Vec<&'a str> {
        self.segment(text).into_iter().map(|r| &text[r]).collect()
    }
}

/// Whitespace-separated runs for Latin script; every CJK character
/// (ideographs and CJK punctuation) stands alone.
#[derive(Debug, Clone, Copy, Default)]
pub struct DefaultSegmenter;

pub fn is_cjk(c: char) -> bool {
    matches!(c as u32,
        0x3000..=0x303F
        | 0x3400..=0x4DBF
        | 0x4E00..=0x9FFF
        | 0xF900..=0xFAFF
        | 0xFF00..=0xFFEF
        | 0x20000..=0x2A6DF)
}

impl Segmenter for DefaultSegmenter {
    fn segment(&self, text: &str) -> Vec<Range<usize>> {
        let mut out = Vec::new();
        let mut run: Option<usize> = None;
        for (i, c) in text.char_indices() {
            if c.is_whitespace() || is_cjk(c) {
                if let Some(start) = run.take() {
                    out.push(start..i);
                }
                if !c.is_whitespace() {
                    out.push(i..i + c.len_utf8());
                }
            } else if run.is_none() {
                run = Some(i);
            }
        }
        if let Some(start) = run {
            out.push(start..text.len());
        }
        out
    }
}
