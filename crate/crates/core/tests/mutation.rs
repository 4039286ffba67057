//! The suite must catch a corrupted evaluator and shrink the witness.

use torscalc::bundles::{BundlePair, Handle};
use torscalc::chern::{ChernRoot, VirtualBundle};
use torscalc::cli;
use torscalc::torsion::{Evaluator, Mutation};
use torscalc::verify::{check, minimize, minimize_by, run_suite_with, standard_theories, Ctx, ExprSpec, Status, VerifyError};

fn line(r: &str) -> VirtualBundle {
    VirtualBundle::line(ChernRoot::new(r).unwrap())
}

/// Depth 4, with a Morse bundle buried under doubling and a product.
fn deep() -> BundlePair {
    let m = BundlePair::morse(
        Some(BundlePair::disk(VirtualBundle::trivial(1))),
        vec![Handle::new(2, line("x"), VirtualBundle::zero()), Handle::new(1, VirtualBundle::trivial(1), VirtualBundle::trivial(1))],
    );
    BundlePair::double(BundlePair::product(m, BundlePair::sphere(line("y"), 1)))
}

#[test]
fn morse_sign_bug_shrinks_to_depth_two() {
    let theories = standard_theories(5, 1, 3);
    let ctx = Ctx::new(Evaluator::new(Some(Mutation::MorseSign)), &theories, ChernRoot::new("x").unwrap());
    let c = check("relative-additivity").unwrap();
    let e = deep();
    assert_eq!(e.depth(), 4);
    assert!(c.run(&ctx, &e).is_err());
    let small = minimize(&e, &c, &ctx).unwrap();
    assert!(small.depth() <= 2, "{small}");
    assert!(c.run(&ctx, &small).is_err());

    let honest = Ctx::new(Evaluator::default(), &theories, ChernRoot::new("x").unwrap());
    assert!(c.run(&honest, &e).is_ok());
    assert_eq!(minimize(&e, &c, &honest), Err(VerifyError::InvalidMinimizeCall));
}

#[test]
fn suite_reports_a_replayable_counterexample() {
    let theories = standard_theories(9, 1, 2);
    let spec = ExprSpec::new(9, 4);
    let reports = run_suite_with(Evaluator::new(Some(Mutation::MorseSign)), &spec, 80, &theories);
    let failing: Vec<_> = reports.iter().filter(|r| r.status == Status::Fail).map(|r| r.name.as_str()).collect();
    assert!(failing.contains(&"relative-additivity"), "{failing:?}");
    assert!(failing.contains(&"morse-theorem"), "{failing:?}");
    for r in reports.iter().filter(|r| r.status == Status::Fail) {
        let c = r.counterexample.as_ref().unwrap();
        let script = cli::parse(&c.script).unwrap_or_else(|e| panic!("{e}\n{}", c.script));
        cli::run(&script).unwrap();
        // checks on closed fibers need a union around the Morse piece
        if r.name == "relative-additivity" || r.name == "morse-theorem" {
            assert!(r.minimized.as_ref().unwrap().depth() <= 2, "{}: {}", r.name, c.expression);
        }
    }
}

#[test]
fn minimize_reaches_a_fixed_point() {
    let ev = Evaluator::default();
    let contains_sphere = |e: &BundlePair| e.subexpressions().iter().any(|n| matches!(n, BundlePair::Sphere { .. }));
    let small = minimize_by(&deep(), &ev, contains_sphere).unwrap();
    assert_eq!(small, BundlePair::sphere(line("y"), 1));
}
