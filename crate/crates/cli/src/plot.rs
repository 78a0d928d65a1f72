//! Graph of the rearrangement split into martingale regions and contractive
//! parts, emitted as SVG polylines with a companion CSV.

use serde::Serialize;
use wmr_core::io::sci;
use wmr_core::wmr::map_decomposition;
use wmr_core::{Interval, MonotoneMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Class {
    Martingale,
    Contractive,
}

impl Class {
    fn name(self) -> &'static str {
        match self {
            Class::Martingale => "martingale",
            Class::Contractive => "contractive",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Piece {
    pub class: Class,
    /// irreducible interval index, for martingale pieces
    pub component: Option<usize>,
    pub points: Vec<(f64, f64)>,
}

/// Unit-slope stretches whose images lie in an irreducible interval of
/// `(T(μ), ν)` are martingale pieces; everything else is contractive.
/// Knots mapped strictly inside an interval but not covered by such a
/// stretch become single-point martingale pieces.
pub fn partition(map: &MonotoneMap, irreducibles: &[Interval], tol: f64) -> Vec<Piece> {
    let dec = map_decomposition(map, tol);
    let on_unit_slope = |x0: f64, x1: f64| dec.slope1.iter().any(|r| r.lo <= x0 && x1 <= r.hi);
    let mut raw: Vec<Piece> = Vec::new();
    let mut push = |class, component, a: (f64, f64), b: (f64, f64)| match raw.last_mut() {
        Some(p) if p.class == class && p.component == component && p.points.last() == Some(&a) => p.points.push(b),
        _ => raw.push(Piece { class, component, points: vec![a, b] }),
    };
    for w in map.knots().windows(2) {
        let ((x0, t0), (x1, t1)) = (w[0], w[1]);
        if !on_unit_slope(x0, x1) {
            push(Class::Contractive, None, (x0, t0), (x1, t1));
            continue;
        }
        // cut points where the image crosses an interval endpoint
        let mut cuts = vec![x0, x1];
        for iv in irreducibles {
            for e in [iv.lo, iv.hi] {
                if e > t0 && e < t1 {
                    cuts.push(x0 + (e - t0));
                }
            }
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        for c in cuts.windows(2) {
            let (a, b) = (c[0], c[1]);
            let pa = (a, t0 + (a - x0));
            let pb = (b, t0 + (b - x0));
            let mid = 0.5 * (pa.1 + pb.1);
            match irreducibles.iter().position(|iv| iv.lo < mid && mid < iv.hi) {
                Some(k) => push(Class::Martingale, Some(k), pa, pb),
                None => push(Class::Contractive, None, pa, pb),
            }
        }
    }
    for &(x, t) in map.knots() {
        let Some(k) = irreducibles.iter().position(|iv| iv.contains_strictly(t, tol)) else { continue };
        let covered = raw.iter().any(|p| p.component == Some(k) && p.points.contains(&(x, t)));
        if !covered {
            raw.push(Piece { class: Class::Martingale, component: Some(k), points: vec![(x, t)] });
        }
    }
    if map.len() == 1 && raw.is_empty() {
        raw.push(Piece { class: Class::Contractive, component: None, points: vec![map.knots()[0]] });
    }
    raw.sort_by(|a, b| a.points[0].0.total_cmp(&b.points[0].0));
    raw
}

pub fn to_csv(pieces: &[Piece]) -> String {
    let mut s = String::from("piece,class,component,x0,t0,x1,t1\n");
    for (k, p) in pieces.iter().enumerate() {
        let comp = p.component.map_or(String::new(), |c| c.to_string());
        let segs: Vec<((f64, f64), (f64, f64))> = if p.points.len() == 1 {
            vec![(p.points[0], p.points[0])]
        } else {
            p.points.windows(2).map(|w| (w[0], w[1])).collect()
        };
        for (a, b) in segs {
            s.push_str(&format!("{k},{},{comp},{},{},{},{}\n", p.class.name(), sci(a.0), sci(a.1), sci(b.0), sci(b.1)));
        }
    }
    s
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 40.0;

pub fn to_svg(pieces: &[Piece], title: &str) -> String {
    let pts = pieces.iter().flat_map(|p| p.points.iter().copied());
    let (mut xmin, mut xmax, mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (x, t) in pts {
        xmin = xmin.min(x);
        xmax = xmax.max(x);
        ymin = ymin.min(t);
        ymax = ymax.max(t);
    }
    let pad = |lo: f64, hi: f64| if hi > lo { (lo, hi) } else { (lo - 1.0, hi + 1.0) };
    let (xmin, xmax) = pad(xmin, xmax);
    let (ymin, ymax) = pad(ymin, ymax);
    let px = |x: f64| MARGIN + (x - xmin) / (xmax - xmin) * (WIDTH - 2.0 * MARGIN);
    let py = |t: f64| HEIGHT - MARGIN - (t - ymin) / (ymax - ymin) * (HEIGHT - 2.0 * MARGIN);
    let num = |v: f64| format!("{v:.4e}");

    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n",
        w = WIDTH,
        h = HEIGHT
    ));
    s.push_str("<style>\n  .martingale { stroke: #7b3294; stroke-width: 3; fill: none; }\n  circle.martingale { fill: #7b3294; }\n  .contractive { stroke: #2166ac; stroke-width: 3; fill: none; }\n  circle.contractive { fill: #2166ac; }\n  .axis { stroke: #999; stroke-width: 1; }\n</style>\n");
    s.push_str(&format!("<title>{}</title>\n", escape(title)));
    s.push_str(&format!(
        "<line class=\"axis\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"/>\n",
        num(MARGIN),
        num(HEIGHT - MARGIN),
        num(WIDTH - MARGIN),
        num(HEIGHT - MARGIN)
    ));
    s.push_str(&format!(
        "<line class=\"axis\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"/>\n",
        num(MARGIN),
        num(MARGIN),
        num(MARGIN),
        num(HEIGHT - MARGIN)
    ));
    for p in pieces {
        let comp = p.component.map_or(String::new(), |c| format!(" data-component=\"{c}\""));
        if p.points.len() == 1 {
            let (x, t) = p.points[0];
            s.push_str(&format!(
                "<circle class=\"{}\"{comp} cx=\"{}\" cy=\"{}\" r=\"4\"/>\n",
                p.class.name(),
                num(px(x)),
                num(py(t))
            ));
        } else {
            let coords: Vec<String> = p.points.iter().map(|&(x, t)| format!("{},{}", num(px(x)), num(py(t)))).collect();
            s.push_str(&format!("<polyline class=\"{}\"{comp} points=\"{}\"/>\n", p.class.name(), coords.join(" ")));
        }
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_split_by_components() {
        let map = MonotoneMap::identity(&[-2.0, 2.0]).unwrap();
        let comps = [Interval { lo: -3.0, hi: -1.0 }, Interval { lo: 1.0, hi: 3.0 }];
        let p = partition(&map, &comps, 1e-12);
        let classes: Vec<_> = p.iter().map(|p| (p.class, p.component)).collect();
        assert_eq!(
            classes,
            vec![(Class::Martingale, Some(0)), (Class::Contractive, None), (Class::Martingale, Some(1))]
        );
        assert_eq!(p[0].points, vec![(-2.0, -2.0), (-1.0, -1.0)]);
        assert_eq!(p[2].points, vec![(1.0, 1.0), (2.0, 2.0)]);
    }

    #[test]
    fn contraction_has_no_martingale_piece() {
        let map = MonotoneMap::new(vec![(-2.0, -1.0), (2.0, 1.0)]).unwrap();
        let p = partition(&map, &[], 1e-12);
        assert!(p.iter().all(|p| p.class == Class::Contractive));
        assert!(to_svg(&p, "t").contains("class=\"contractive\""));
        assert_eq!(to_csv(&p).lines().count(), 2);
    }

    #[test]
    fn isolated_image_in_component_is_a_point() {
        let map = MonotoneMap::new(vec![(-2.0, 0.0), (2.0, 0.0)]).unwrap();
        let p = partition(&map, &[Interval { lo: -1.0, hi: 1.0 }], 1e-12);
        assert_eq!(p.iter().filter(|p| p.class == Class::Martingale).count(), 2);
    }
}
