//! Grid probe of the zooming-continuity quotient near the maximiser.

use atb::env::{make_pathological, make_power, zooming_ratio_probe, PathologicalKind};

fn main() -> atb::Result<()> {
    let schedule = [0.3, 0.1, 0.03, 0.01];
    let cases = [
        ("quadratic", make_power(&[2.0], None, None)?),
        ("log-peak", make_pathological(PathologicalKind::LogPeak)),
        ("exp-flat", make_pathological(PathologicalKind::ExpFlat)),
        ("mixed-exponent", make_pathological(PathologicalKind::MixedExponent)),
    ];
    println!("function eps ratio witness");
    for (name, f) in &cases {
        for p in zooming_ratio_probe(f, &[0.5], &schedule)? {
            println!("{name} {} {:.4} {:.4}", p.epsilon, p.ratio, p.witness_ratio);
        }
    }
    Ok(())
}
