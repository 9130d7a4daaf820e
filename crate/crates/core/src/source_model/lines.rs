//! Physical line classification.
//!
//! Every byte of a compilation unit is either code, comment or whitespace.
//! MLOC and the coverage checks only ever look at code bytes, so comments and
//! blank lines never change a line count.

use std::ops::Range;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LineKind {
    Blank,
    Comment,
    Code,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineMap {
    /// Byte offset of the first byte of each line.
    line_starts: Vec<usize>,
    /// One flag per source byte: true for non-whitespace bytes outside comments.
    code: Vec<bool>,
    kinds: Vec<LineKind>,
}

impl LineMap {
    /// Builds the map from the source text and the byte ranges of its comments.
    pub fn new(source: &str, comments: &[Range<usize>]) -> Self {
        let bytes = source.as_bytes();
        let mut in_comment = vec![false; bytes.len()];
        for range in comments {
            for flag in &mut in_comment[range.clone()] {
                *flag = true;
            }
        }
        let code: Vec<bool> = bytes
            .iter()
            .zip(&in_comment)
            .map(|(b, c)| !c && !b.is_ascii_whitespace())
            .collect();

        let mut line_starts = vec![0];
        line_starts.extend(
            bytes
                .iter()
                .enumerate()
                .filter(|(_, b)| **b == b'\n')
                .map(|(i, _)| i + 1),
        );
        // A trailing newline does not open a new line.
        if line_starts.len() > 1 && *line_starts.last().unwrap() == bytes.len() {
            line_starts.pop();
        }

        let mut kinds = Vec::with_capacity(line_starts.len());
        for (idx, &start) in line_starts.iter().enumerate() {
            let end = line_starts.get(idx + 1).copied().unwrap_or(bytes.len());
            let kind = if code[start..end].iter().any(|c| *c) {
                LineKind::Code
            } else if in_comment[start..end].iter().any(|c| *c) {
                LineKind::Comment
            } else {
                LineKind::Blank
            };
            kinds.push(kind);
        }

        LineMap {
            line_starts,
            code,
            kinds,
        }
    }

    pub fn line_count(&self) -> usize {
        self.line_starts.len()
    }

    /// Classification of a 1-based line number.
    pub fn kind(&self, line: usize) -> Option<LineKind> {
        self.kinds.get(line.checked_sub(1)?).copied()
    }

    /// 1-based line containing `offset`.
    pub fn line_of(&self, offset: usize) -> usize {
        match self.line_starts.binary_search(&offset) {
            Ok(idx) => idx + 1,
            Err(idx) => idx,
        }
    }

    /// Byte offset of the start of a 1-based line.
    pub fn line_start(&self, line: usize) -> usize {
        self.line_starts[line - 1]
    }

    /// Number of distinct lines holding at least one code byte inside `range`.
    pub fn code_lines_in(&self, range: Range<usize>) -> usize {
        let end = range.end.min(self.code.len());
        let start = range.start.min(end);
        if start == end {
            return 0;
        }
        let first = self.line_of(start);
        let last = self.line_of(end - 1);
        (first..=last)
            .filter(|&line| {
                let ls = self.line_starts[line - 1].max(start);
                let le = self
                    .line_starts
                    .get(line)
                    .copied()
                    .unwrap_or(self.code.len())
                    .min(end);
                ls < le && self.code[ls..le].iter().any(|c| *c)
            })
            .count()
    }

    /// Lines holding code inside `range`, in ascending order.
    pub fn code_line_numbers_in(&self, range: Range<usize>) -> Vec<usize> {
        let end = range.end.min(self.code.len());
        let start = range.start.min(end);
        if start == end {
            return Vec::new();
        }
        (self.line_of(start)..=self.line_of(end - 1))
            .filter(|&line| {
                let ls = self.line_starts[line - 1].max(start);
                let le = self
                    .line_starts
                    .get(line)
                    .copied()
                    .unwrap_or(self.code.len())
                    .min(end);
                ls < le && self.code[ls..le].iter().any(|c| *c)
            })
            .collect()
    }
}
