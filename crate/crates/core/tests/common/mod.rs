//! Random scripts built from generated expressions.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use torscalc::verify::{random_theories, ExprSpec, Generator};

/// A semantically valid script with a few definitions and queries, laid out
/// with random separators, spacing and comments.
pub fn random_script(seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = Generator::new(ExprSpec::new(seed, rng.gen_range(1..=4)));
    let k = rng.gen_range(1..=2);
    let mut lines = vec!["root x, y, w".to_string()];

    let rank = rng.gen_range(0..=4);
    lines.push(format!("vb b = {}", g.bundle(rank)));
    let theory = match rng.gen_range(0..3) {
        0 => format!("fr({k})"),
        1 => format!("mmm({k})"),
        _ => random_theories(seed, k, 1)[0].to_string(),
    };
    lines.push(format!("theory T = {theory}"));

    let e = g.next_expr();
    lines.push(format!("E = {e}"));
    lines.push("F = union(E, E)".into());
    lines.push(format!("D = disk(b + {})", g.bundle(2)));

    let queries = [
        "tau(T, E)".to_string(),
        "tau_even(T, F)".into(),
        "tau_odd(T, dv(D))".into(),
        format!("m2k(E, {k})"),
        "chi(prod(E, D))".into(),
        format!("tau(fr({k}), double(E))"),
        "transfer(E, 1/2*x^2 + -3*z3*y^2)".into(),
        format!("tau(custom({k}, 1/2*z{}, 3 + -1*z5), glue(D, prod(reldisk(trivial(0)), disk(b + trivial(2)))))", 2 * k + 1),
    ];
    for q in queries.choose_multiple(&mut rng, 4) {
        lines.push(format!("query {q}"));
    }

    let mut out = String::new();
    for line in lines {
        if rng.gen_bool(0.2) {
            out.push_str("# note\n");
        }
        let line = if rng.gen_bool(0.3) { line.replace(", ", ",").replace(" = ", "=") } else { line };
        out.push_str(&line);
        out.push_str(if rng.gen_bool(0.3) { " ; " } else { "\n" });
    }
    out
}
