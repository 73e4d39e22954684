//! Writes SVG phase portraits of a field JSON file, in the `w` plane and
//! beside the polar view at infinity.
//!
//! ```text
//! cargo run --release --example render_portrait -- data/fields/cubic.json /tmp/cubic
//! ```

use sphere_flows::cli::render::{render_svg, RenderSpec, View};
use sphere_flows::field::{Mode, RationalField};
use sphere_flows::flow::IntegratorConfig;
use sphere_flows::separatrix::{trace_all, trace_boundary_separatrices, SeparatrixConfig};

fn main() {
    let mut args = std::env::args().skip(1);
    let input = args.next().unwrap_or_else(|| "data/fields/cubic.json".into());
    let stem = args.next().unwrap_or_else(|| "portrait".into());
    let f: RationalField = serde_json::from_str(&std::fs::read_to_string(&input).unwrap()).unwrap();
    let cfg = SeparatrixConfig::default();
    let seps = match f.mode() {
        Mode::Polynomial | Mode::AntiPolynomial => trace_boundary_separatrices(&f, &cfg),
        _ => trace_all(&f, &cfg),
    }
    .unwrap_or_default();
    for (suffix, view) in [("w", View::Stereographic), ("charts", View::Charts)] {
        let spec = RenderSpec {
            view,
            ..RenderSpec::default()
        };
        let path = format!("{stem}-{suffix}.svg");
        std::fs::write(&path, render_svg(&f, &seps, &IntegratorConfig::default(), &spec)).unwrap();
        println!("wrote {path}");
    }
}
