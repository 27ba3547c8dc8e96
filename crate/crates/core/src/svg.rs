//! Wagon-wheel charts as standalone SVG.

use std::fmt::Write;

use crate::pose::{FieldRegion, ShotLabel};
use crate::weak::RegionDistribution;

/// Eight sector percentages in [`FieldRegion::WHEEL_ORDER`].
#[derive(Clone, Debug, PartialEq)]
pub struct WagonWheel {
    pub sectors: [f64; 8],
    pub title: String,
    pub class: ShotLabel,
}

impl WagonWheel {
    pub fn new(dist: &RegionDistribution, title: impl Into<String>, class: ShotLabel) -> Self {
        WagonWheel {
            sectors: FieldRegion::WHEEL_ORDER.map(|r| dist.share(r)),
            title: title.into(),
            class,
        }
    }

    pub fn render(&self) -> String {
        render_sectors(&self.sectors, &self.title, self.class)
    }
}

const SIZE: f64 = 400.0;
const CX: f64 = 200.0;
const CY: f64 = 210.0;
const RADIUS: f64 = 150.0;
const LEGEND_X: f64 = 420.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Point at `radius` and `deg` degrees clockwise from the top.
fn polar(radius: f64, deg: f64) -> (f64, f64) {
    let t = deg.to_radians();
    (CX + radius * t.sin(), CY - radius * t.cos())
}

fn fill(class: ShotLabel) -> &'static str {
    match class {
        ShotLabel::High => "#d95f02",
        ShotLabel::Low => "#1b9e77",
    }
}

/// Sector radius is proportional to its percentage; 100% fills the wheel.
pub fn render_wagon_wheel(dist: &RegionDistribution, title: &str, class: ShotLabel) -> String {
    WagonWheel::new(dist, title, class).render()
}

fn render_sectors(sectors: &[f64; 8], title: &str, class: ShotLabel) -> String {
    let mut s = String::new();
    let width = LEGEND_X + 180.0;
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{SIZE:.0}" viewBox="0 0 {width:.0} {SIZE:.0}">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(
        s,
        r#"<text x="{CX:.0}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#,
        escape(title)
    )
    .unwrap();
    writeln!(
        s,
        r##"<circle cx="{CX:.3}" cy="{CY:.3}" r="{RADIUS:.3}" fill="none" stroke="#999" stroke-width="1"/>"##
    )
    .unwrap();
    for (k, (&pct, region)) in sectors.iter().zip(FieldRegion::WHEEL_ORDER).enumerate() {
        let (a0, a1) = (45.0 * k as f64, 45.0 * (k + 1) as f64);
        let r = RADIUS * pct / 100.0;
        let (x0, y0) = polar(r, a0);
        let (x1, y1) = polar(r, a1);
        writeln!(
            s,
            r##"<path d="M {CX:.3} {CY:.3} L {x0:.3} {y0:.3} A {r:.3} {r:.3} 0 0 1 {x1:.3} {y1:.3} Z" fill="{}" fill-opacity="0.8" stroke="#333" stroke-width="0.5"><title>{}: {pct:.1}%</title></path>"##,
            fill(class),
            region.name()
        )
        .unwrap();
        let (ex, ey) = polar(RADIUS, a0);
        writeln!(
            s,
            r##"<line x1="{CX:.3}" y1="{CY:.3}" x2="{ex:.3}" y2="{ey:.3}" stroke="#ccc" stroke-width="0.5"/>"##
        )
        .unwrap();
        let (lx, ly) = polar(RADIUS + 18.0, (a0 + a1) / 2.0);
        writeln!(
            s,
            r#"<text x="{lx:.3}" y="{ly:.3}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#,
            region.name()
        )
        .unwrap();
    }
    writeln!(
        s,
        r#"<text x="{LEGEND_X:.0}" y="60" font-family="sans-serif" font-size="13" font-weight="bold">{} energy</text>"#,
        class.as_str()
    )
    .unwrap();
    for (k, (&pct, region)) in sectors.iter().zip(FieldRegion::WHEEL_ORDER).enumerate() {
        let y = 84.0 + 20.0 * k as f64;
        writeln!(
            s,
            r#"<text x="{LEGEND_X:.0}" y="{y:.0}" font-family="sans-serif" font-size="12">{}: {pct:.1}%</text>"#,
            region.name()
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}
