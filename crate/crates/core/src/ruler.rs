//! Integer sparse rulers on `{0..D}`.
//!
//! A mark set `R` is a ruler for `D` when every distance `s ∈ 0..=D` is realized
//! as `|j − k|` for some marks `j, k`. Pair classes group the unordered mark
//! pairs by their distance; the diagonal class `s = 0` holds the singletons
//! `{j, j}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RulerJson")]
pub struct Ruler {
    #[serde(rename = "D")]
    diameter: usize,
    marks: Vec<usize>,
}

#[derive(Deserialize)]
struct RulerJson {
    #[serde(rename = "D")]
    diameter: usize,
    marks: Vec<usize>,
}

impl TryFrom<RulerJson> for Ruler {
    type Error = Error;

    fn try_from(raw: RulerJson) -> Result<Self> {
        Ruler::new(raw.marks, raw.diameter)
    }
}

impl Ruler {
    /// Validates `marks` as a ruler for `diameter`. Marks are sorted and
    /// deduplicated.
    pub fn new(mut marks: Vec<usize>, diameter: usize) -> Result<Self> {
        marks.sort_unstable();
        marks.dedup();
        if !is_ruler(&marks, diameter)? {
            return Err(Error::NotARuler(format!(
                "marks {marks:?} do not cover every distance in 0..={diameter}"
            )));
        }
        Ok(Self { diameter, marks })
    }

    /// The complete ruler `{0..D}`.
    pub fn complete(diameter: usize) -> Self {
        Self {
            diameter,
            marks: (0..=diameter).collect(),
        }
    }

    pub fn diameter(&self) -> usize {
        self.diameter
    }

    pub fn marks(&self) -> &[usize] {
        &self.marks
    }

    pub fn len(&self) -> usize {
        self.marks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.marks.is_empty()
    }
}

/// Integer ceiling of `√n`.
pub fn ceil_sqrt(n: usize) -> usize {
    let mut r = (n as f64).sqrt() as usize;
    while r * r > n {
        r -= 1;
    }
    while r * r < n {
        r += 1;
    }
    r
}

/// The two-block construction `{0, 1, …, m} ∪ {D − k·m : k = 0..m−2}` with
/// `m = ⌈√D⌉`, verified before returning.
pub fn ruler_prop31(diameter: usize) -> Ruler {
    let marks = match diameter {
        0 => vec![0],
        1 => vec![0, 1],
        d => {
            let m = ceil_sqrt(d);
            let mut marks: Vec<usize> = (0..=m).collect();
            marks.extend((0..m.saturating_sub(1)).map(|k| d - k * m));
            marks
        }
    };
    Ruler::new(marks, diameter).expect("two-block construction must be a ruler")
}

/// True iff every `s ∈ 0..=D` is a difference of two marks.
pub fn is_ruler(marks: &[usize], diameter: usize) -> Result<bool> {
    if let Some(&bad) = marks.iter().find(|&&m| m > diameter) {
        return Err(Error::InvalidArgument(format!(
            "mark {bad} outside 0..={diameter}"
        )));
    }
    if marks.is_empty() {
        return Ok(false);
    }
    let mut seen = vec![false; diameter + 1];
    for (i, &j) in marks.iter().enumerate() {
        for &k in &marks[i..] {
            seen[j.abs_diff(k)] = true;
        }
    }
    Ok(seen.into_iter().all(|b| b))
}

/// Per-distance unordered mark pairs `R_s`, each sorted lexicographically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairClasses {
    classes: Vec<Vec<(usize, usize)>>,
}

impl PairClasses {
    pub fn class(&self, s: usize) -> &[(usize, usize)] {
        &self.classes[s]
    }

    pub fn classes(&self) -> &[Vec<(usize, usize)>] {
        &self.classes
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.classes.iter().map(Vec::len).collect()
    }
}

pub fn pair_classes(r: &Ruler) -> PairClasses {
    let mut classes = vec![Vec::new(); r.diameter + 1];
    let marks = &r.marks;
    for (i, &j) in marks.iter().enumerate() {
        for &k in &marks[i..] {
            classes[k - j].push((j, k));
        }
    }
    for c in &mut classes {
        c.sort_unstable();
    }
    PairClasses { classes }
}

/// `Δ(R) = Σ_s 1/|R_s|` under the unordered-pair convention.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoverageDeficiency(pub f64);

pub fn coverage_deficiency(pc: &PairClasses) -> Result<CoverageDeficiency> {
    let mut delta = 0.0;
    for (s, c) in pc.classes.iter().enumerate() {
        if c.is_empty() {
            return Err(Error::NotARuler(format!("distance {s} has no mark pair")));
        }
        delta += 1.0 / c.len() as f64;
    }
    Ok(CoverageDeficiency(delta))
}
