//! Horizontal band segmentation from the black-pixel row profile.
//!
//! Rows are labelled against the profile mean, grouped into maximal runs,
//! short runs are absorbed by their heavier neighbour and the survivors are
//! reduced to exactly three bands. When fewer than three runs survive the
//! raster is cut into equal thirds and the split is flagged.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::raster::{BinaryRaster, RgbImage, COLS, ROWS};

/// Minimum band height in rows.
pub const DEFAULT_MIN_HEIGHT: usize = 35;

/// Cut rows of the equal-thirds fallback (bands of 86, 85 and 85 rows).
pub const FALLBACK_CUTS: [usize; 2] = [86, 171];

/// Overlay colour for cut rows.
pub const CUT_COLOR: [u8; 3] = [255, 0, 0];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RowHistogram {
    counts: Vec<u32>,
    total: u64,
}

impl RowHistogram {
    /// Builds a histogram from explicit counts (one per raster row).
    pub fn from_counts(counts: Vec<u32>) -> Self {
        let total = counts.iter().map(|&c| c as u64).sum();
        Self { counts, total }
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn mean(&self) -> f64 {
        self.total as f64 / self.counts.len() as f64
    }

    /// `counts[row] >= mean`, evaluated exactly in integers.
    pub fn is_above(&self, row: usize) -> bool {
        self.counts[row] as u64 * self.counts.len() as u64 >= self.total
    }
}

pub fn row_histogram(r: &BinaryRaster) -> RowHistogram {
    RowHistogram::from_counts(
        (0..ROWS)
            .map(|row| r.row(row).iter().filter(|&&b| b).count() as u32)
            .collect(),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunLabel {
    Above,
    Below,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Run {
    pub start: usize,
    pub len: usize,
    pub label: RunLabel,
}

impl Run {
    pub fn end(&self) -> usize {
        self.start + self.len
    }
}

/// Maximal runs of rows sharing the same above/below-mean label, in row
/// order. Rows equal to the mean count as above.
pub fn label_runs(h: &RowHistogram) -> Vec<Run> {
    let mut runs: Vec<Run> = Vec::new();
    for row in 0..h.counts().len() {
        let label = if h.is_above(row) {
            RunLabel::Above
        } else {
            RunLabel::Below
        };
        match runs.last_mut() {
            Some(last) if last.label == label => last.len += 1,
            _ => runs.push(Run {
                start: row,
                len: 1,
                label,
            }),
        }
    }
    runs
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BandSplit {
    pub cuts: [usize; 2],
    pub fallback: bool,
}

impl BandSplit {
    pub fn fallback() -> Self {
        Self {
            cuts: FALLBACK_CUTS,
            fallback: true,
        }
    }

    pub fn bands(&self) -> [Range<usize>; 3] {
        let [i, j] = self.cuts;
        [0..i, i..j, j..ROWS]
    }

    pub fn heights(&self) -> [usize; 3] {
        let [i, j] = self.cuts;
        [i, j - i, ROWS - j]
    }
}

// Working segment during merging: row range plus black-pixel mass.
#[derive(Clone, Copy, Debug)]
struct Segment {
    start: usize,
    end: usize,
    mass: u64,
}

impl Segment {
    fn len(&self) -> usize {
        self.end - self.start
    }
}

fn mass_of(h: &RowHistogram, rows: Range<usize>) -> u64 {
    h.counts()[rows].iter().map(|&c| c as u64).sum()
}

/// Splits a raster into exactly three horizontal bands.
///
/// 1. Label rows against the mean and group them into runs.
/// 2. While some run is shorter than `min_height` (and more than one run is
///    left), merge the shortest such run (topmost on ties) into the
///    neighbour with the larger black mass; equal masses go to the preceding
///    run.
/// 3. While more than three runs remain, merge the adjacent pair with the
///    smallest combined mass (topmost pair on ties).
/// 4. Fewer than three runs: equal-thirds fallback.
pub fn segment(r: &BinaryRaster, min_height: usize) -> BandSplit {
    segment_histogram(&row_histogram(r), min_height)
}

pub fn segment_histogram(h: &RowHistogram, min_height: usize) -> BandSplit {
    let min_height = min_height.max(1);
    let mut segs: Vec<Segment> = label_runs(h)
        .into_iter()
        .map(|run| Segment {
            start: run.start,
            end: run.end(),
            mass: mass_of(h, run.start..run.end()),
        })
        .collect();

    while segs.len() > 1 {
        let Some((idx, _)) = segs
            .iter()
            .enumerate()
            .filter(|(_, s)| s.len() < min_height)
            .min_by_key(|(i, s)| (s.len(), *i))
        else {
            break;
        };
        let into_prev = match (idx.checked_sub(1).map(|p| segs[p]), segs.get(idx + 1)) {
            (Some(prev), Some(next)) => prev.mass >= next.mass,
            (Some(_), None) => true,
            (None, _) => false,
        };
        let target = if into_prev { idx - 1 } else { idx };
        merge_with_next(&mut segs, target);
    }

    while segs.len() > 3 {
        let target = (0..segs.len() - 1)
            .min_by_key(|&i| (segs[i].mass + segs[i + 1].mass, i))
            .expect("at least two segments");
        merge_with_next(&mut segs, target);
    }

    if segs.len() < 3 {
        return BandSplit::fallback();
    }
    BandSplit {
        cuts: [segs[1].start, segs[2].start],
        fallback: false,
    }
}

fn merge_with_next(segs: &mut Vec<Segment>, idx: usize) {
    let next = segs.remove(idx + 1);
    let seg = &mut segs[idx];
    seg.end = next.end;
    seg.mass += next.mass;
}

/// Copy of the raster with both cut rows painted in [`CUT_COLOR`].
pub fn render_overlay(r: &BinaryRaster, split: &BandSplit) -> RgbImage {
    let mut pixels = Vec::with_capacity(ROWS * COLS);
    for row in 0..ROWS {
        let is_cut = split.cuts.contains(&row);
        for col in 0..COLS {
            pixels.push(if is_cut {
                CUT_COLOR
            } else if r.is_black(row, col) {
                [0, 0, 0]
            } else {
                [255, 255, 255]
            });
        }
    }
    RgbImage {
        width: COLS,
        height: ROWS,
        pixels,
    }
}
