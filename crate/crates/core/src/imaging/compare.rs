use std::fmt::Write as _;

use super::homography::{Correspondence, Homography};
use super::image::BinaryMask;
use crate::error::{Error, Result};
use crate::minima::MinimaSet;

/// Rasterized minima and the number of points that mapped to infinity.
#[derive(Clone, Debug, PartialEq)]
pub struct Projection {
    pub mask: BinaryMask,
    pub skipped: usize,
}

fn stamp_disk(mask: &mut BinaryMask, c: [f64; 2], radius: f64) {
    let (w, h) = (mask.width() as f64, mask.height() as f64);
    let x0 = (c[0] - radius).ceil().max(0.0);
    let x1 = (c[0] + radius).floor().min(w - 1.0);
    let y0 = (c[1] - radius).ceil().max(0.0);
    let y1 = (c[1] + radius).floor().min(h - 1.0);
    if x0 > x1 || y0 > y1 {
        return;
    }
    let r2 = radius * radius;
    for y in y0 as usize..=y1 as usize {
        for x in x0 as usize..=x1 as usize {
            let dx = x as f64 - c[0];
            let dy = y as f64 - c[1];
            if dx * dx + dy * dy <= r2 {
                mask.set(x, y, true);
            }
        }
    }
}

/// Maps physical points through `h` to pixel coordinates (pixel `(i, j)`
/// centred at `(i, j)`) and draws a filled disk of `radius` pixels at each.
pub fn project_points(
    h: &Homography,
    points: &[[f64; 2]],
    width: usize,
    height: usize,
    radius: f64,
) -> Result<Projection> {
    if !(radius.is_finite() && radius >= 1.0) {
        return Err(Error::Validation(format!("marker radius must be at least 1, got {radius}")));
    }
    let mut mask = BinaryMask::empty(width, height);
    let mut skipped = 0;
    for p in points {
        match h.apply(*p) {
            Some(c) => stamp_disk(&mut mask, c, radius),
            None => skipped += 1,
        }
    }
    Ok(Projection { mask, skipped })
}

/// Rasterizes the minima of a 2D set; see [`project_points`].
pub fn project_minima(
    h: &Homography,
    minima: &MinimaSet,
    width: usize,
    height: usize,
    radius: f64,
) -> Result<Projection> {
    let pts: Vec<[f64; 2]> = minima
        .points
        .iter()
        .map(|m| match m.location.as_slice() {
            [x, y] => Ok([*x, *y]),
            _ => Err(Error::UnsupportedDimension(m.location.len())),
        })
        .collect::<Result<_>>()?;
    project_points(h, &pts, width, height, radius)
}

/// Evaluation circle in pixel coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Circle {
    pub center: [f64; 2],
    pub diameter: f64,
}

impl Circle {
    fn contains(&self, x: usize, y: usize) -> bool {
        let r = 0.5 * self.diameter;
        let dx = x as f64 - self.center[0];
        let dy = y as f64 - self.center[1];
        dx * dx + dy * dy <= r * r
    }
}

/// Share of simulated pixels inside the experimental mask.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Overlap {
    Percent(f64),
    /// No simulated pixel inside the circle.
    Undefined,
}

impl Overlap {
    pub fn percent(&self) -> Option<f64> {
        match self {
            Overlap::Percent(p) => Some(*p),
            Overlap::Undefined => None,
        }
    }
}

/// `100 |sim and exp| / |sim|` over the pixels inside `circle`.
pub fn overlap_fraction(sim: &BinaryMask, exp: &BinaryMask, circle: &Circle) -> Result<Overlap> {
    if sim.width() != exp.width() || sim.height() != exp.height() {
        return Err(Error::Validation(format!(
            "mask sizes differ: {}x{} vs {}x{}",
            sim.width(),
            sim.height(),
            exp.width(),
            exp.height()
        )));
    }
    let (w, h) = (sim.width(), sim.height());
    let r = 0.5 * circle.diameter;
    if !(r.is_finite() && r > 0.0) || w == 0 || h == 0 {
        return Err(Error::Validation("evaluation circle must have a positive diameter".into()));
    }
    let nx = circle.center[0].clamp(0.0, (w - 1) as f64);
    let ny = circle.center[1].clamp(0.0, (h - 1) as f64);
    if (nx - circle.center[0]).hypot(ny - circle.center[1]) > r {
        return Err(Error::Validation("evaluation circle does not intersect the canvas".into()));
    }
    let x0 = (circle.center[0] - r).floor().max(0.0) as usize;
    let x1 = ((circle.center[0] + r).ceil().max(0.0) as usize).min(w - 1);
    let y0 = (circle.center[1] - r).floor().max(0.0) as usize;
    let y1 = ((circle.center[1] + r).ceil().max(0.0) as usize).min(h - 1);
    let (mut both, mut total) = (0usize, 0usize);
    for y in y0..=y1 {
        for x in x0..=x1 {
            if sim.get(x, y) && circle.contains(x, y) {
                total += 1;
                if exp.get(x, y) {
                    both += 1;
                }
            }
        }
    }
    if total == 0 {
        return Ok(Overlap::Undefined);
    }
    Ok(Overlap::Percent(100.0 * both as f64 / total as f64))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AgreementPoint {
    /// Diameter as a multiple of the reference width `D`.
    pub alpha: f64,
    pub diameter_px: f64,
    pub agreement: Overlap,
}

/// Overlap inside circles of diameter `alpha * d_px` about `center`.
pub fn agreement_curve(
    sim: &BinaryMask,
    exp: &BinaryMask,
    center: [f64; 2],
    d_px: f64,
    alphas: &[f64],
) -> Result<Vec<AgreementPoint>> {
    if !(d_px.is_finite() && d_px > 0.0) {
        return Err(Error::Validation(format!("reference diameter must be positive, got {d_px}")));
    }
    alphas
        .iter()
        .map(|&alpha| {
            if !(0.5..=1.0).contains(&alpha) {
                return Err(Error::Validation(format!(
                    "circle fraction {alpha} is outside [0.5, 1]"
                )));
            }
            let circle = Circle {
                center,
                diameter: alpha * d_px,
            };
            Ok(AgreementPoint {
                alpha,
                diameter_px: circle.diameter,
                agreement: overlap_fraction(sim, exp, &circle)?,
            })
        })
        .collect()
}

/// `alpha,diameter_px,agreement_pct` rows, `undefined` for empty circles.
pub fn format_curve_csv(points: &[AgreementPoint]) -> String {
    let mut out = String::from("alpha,diameter_px,agreement_pct\n");
    for p in points {
        let agreement = match p.agreement {
            Overlap::Percent(v) => v.to_string(),
            Overlap::Undefined => "undefined".to_string(),
        };
        let _ = writeln!(out, "{},{},{}", p.alpha, p.diameter_px, agreement);
    }
    out
}

/// Parses `sx sy tx ty` lines; `#` starts a comment.
pub fn parse_correspondences(text: &str) -> Result<Vec<Correspondence>> {
    let mut out = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("");
        if line.trim().is_empty() {
            continue;
        }
        let mut vals = [0.0; 4];
        let mut count = 0;
        let mut col = 0;
        for tok in line.split_whitespace() {
            let pos = raw[col..].find(tok).map(|p| p + col).unwrap_or(col);
            col = pos + tok.len();
            if count == 4 {
                return Err(Error::Parse {
                    line: ln + 1,
                    column: pos + 1,
                    message: "expected exactly four numbers".into(),
                });
            }
            vals[count] = tok.parse().map_err(|_| Error::Parse {
                line: ln + 1,
                column: pos + 1,
                message: format!("invalid number {tok:?}"),
            })?;
            count += 1;
        }
        if count != 4 {
            return Err(Error::Parse {
                line: ln + 1,
                column: line.len() + 1,
                message: format!("expected four numbers, found {count}"),
            });
        }
        out.push(Correspondence {
            source: [vals[0], vals[1]],
            target: [vals[2], vals[3]],
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radius_two_disk_has_thirteen_pixels() {
        // integer points with x^2 + y^2 <= 4
        let oracle = (-2i32..=2)
            .flat_map(|x| (-2i32..=2).map(move |y| (x, y)))
            .filter(|(x, y)| x * x + y * y <= 4)
            .count();
        let p = project_points(&Homography::identity(), &[[5.0, 5.0]], 11, 11, 2.0).unwrap();
        assert_eq!(p.mask.count(), oracle);
        assert_eq!(oracle, 13);
    }

    #[test]
    fn empty_input_gives_empty_mask() {
        let p = project_points(&Homography::identity(), &[], 8, 8, 1.0).unwrap();
        assert_eq!(p.mask.count(), 0);
        assert!(project_points(&Homography::identity(), &[], 8, 8, 0.5).is_err());
    }

    #[test]
    fn overlap_edge_cases() {
        let mut a = BinaryMask::empty(10, 10);
        let mut b = BinaryMask::empty(10, 10);
        a.set(2, 2, true);
        b.set(7, 7, true);
        let c = Circle {
            center: [5.0, 5.0],
            diameter: 20.0,
        };
        assert_eq!(overlap_fraction(&a, &a, &c).unwrap(), Overlap::Percent(100.0));
        assert_eq!(overlap_fraction(&a, &b, &c).unwrap(), Overlap::Percent(0.0));
        let empty = BinaryMask::empty(10, 10);
        assert_eq!(overlap_fraction(&empty, &b, &c).unwrap(), Overlap::Undefined);
        assert!(overlap_fraction(&a, &BinaryMask::empty(9, 10), &c).is_err());
        let far = Circle {
            center: [100.0, 100.0],
            diameter: 4.0,
        };
        assert!(overlap_fraction(&a, &b, &far).is_err());
    }

    #[test]
    fn correspondence_parsing() {
        let text = "# header\n1 2 3 4\n\n  5.5 6 7 8 # trailing\n";
        let pairs = parse_correspondences(text).unwrap();
        assert_eq!(pairs.len(), 2);
        assert_eq!(pairs[1].source, [5.5, 6.0]);
        match parse_correspondences("1 2 x 4\n") {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (1, 5)),
            other => panic!("{other:?}"),
        }
        assert!(parse_correspondences("1 2 3\n").is_err());
    }

    #[test]
    fn curve_csv_marks_undefined() {
        let pts = [
            AgreementPoint {
                alpha: 0.5,
                diameter_px: 10.0,
                agreement: Overlap::Percent(100.0),
            },
            AgreementPoint {
                alpha: 1.0,
                diameter_px: 20.0,
                agreement: Overlap::Undefined,
            },
        ];
        assert_eq!(
            format_curve_csv(&pts),
            "alpha,diameter_px,agreement_pct\n0.5,10,100\n1,20,undefined\n"
        );
    }
}
