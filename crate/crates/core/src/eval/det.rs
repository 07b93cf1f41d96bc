use std::fmt::Write as _;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetPoint {
    /// Scores at or above the threshold are accepted.
    pub threshold: f64,
    pub far: f64,
    pub frr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetCurve {
    /// Ascending thresholds, ending at `+inf` where nothing is accepted.
    pub points: Vec<DetPoint>,
    pub eer: f64,
}

impl DetCurve {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("threshold\tfar\tfrr\n");
        for p in &self.points {
            let _ = writeln!(out, "{}\t{}\t{}", p.threshold, p.far, p.frr);
        }
        out
    }
}

/// DET curve over every distinct score and the equal error rate, linearly
/// interpolated between the two thresholds where FAR - FRR changes sign.
pub fn eer(scores: &[(f64, bool)]) -> Result<DetCurve> {
    if scores.iter().any(|s| s.0.is_nan()) {
        return Err(Error::InvalidArgument("NaN score".into()));
    }
    let positives = scores.iter().filter(|s| s.1).count();
    let negatives = scores.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::DegenerateDet);
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));

    // Walking thresholds upward, everything below the current score is rejected.
    let mut points = Vec::new();
    let (mut rejected_pos, mut rejected_neg) = (0usize, 0usize);
    let mut i = 0;
    let rates = |rp: usize, rn: usize| {
        (
            (negatives - rn) as f64 / negatives as f64,
            rp as f64 / positives as f64,
        )
    };
    while i < sorted.len() {
        let threshold = sorted[i].0;
        let (far, frr) = rates(rejected_pos, rejected_neg);
        points.push(DetPoint { threshold, far, frr });
        while i < sorted.len() && sorted[i].0 == threshold {
            if sorted[i].1 {
                rejected_pos += 1;
            } else {
                rejected_neg += 1;
            }
            i += 1;
        }
    }
    points.push(DetPoint {
        threshold: f64::INFINITY,
        far: 0.0,
        frr: 1.0,
    });

    let eer = crossing(&points);
    Ok(DetCurve { points, eer })
}

fn crossing(points: &[DetPoint]) -> f64 {
    for w in points.windows(2) {
        let d0 = w[0].far - w[0].frr;
        let d1 = w[1].far - w[1].frr;
        if d0 == 0.0 {
            return w[0].far;
        }
        if d1 <= 0.0 {
            let t = d0 / (d0 - d1);
            return w[0].far + t * (w[1].far - w[0].far);
        }
    }
    // The last point always has FAR - FRR = -1.
    unreachable!("DET curve without a crossing")
}
