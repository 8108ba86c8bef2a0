//! Property tests against brute-force enumeration.

use bitblast::fixedpoint::{self, FixedPointFormat, OverflowPolicy};
use bitblast::library::{self, PieceKind, PieceSpec};
use bitblast::{Bdd, BitVectorDist, InferenceContext, LevelHint, NodeRef, VarLabel, WeightMap};
use proptest::prelude::*;

const VARS: usize = 5;

#[derive(Debug, Clone)]
enum Formula {
    Var(usize),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Xor(Box<Formula>, Box<Formula>),
    Ite(Box<Formula>, Box<Formula>, Box<Formula>),
}

fn formula() -> impl Strategy<Value = Formula> {
    let leaf = (0..VARS).prop_map(Formula::Var);
    leaf.prop_recursive(5, 40, 3, |inner| {
        prop_oneof![
            inner.clone().prop_map(|a| Formula::Not(Box::new(a))),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| Formula::And(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::Or(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| Formula::Xor(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone(), inner).prop_map(|(a, b, c)| Formula::Ite(
                Box::new(a),
                Box::new(b),
                Box::new(c)
            )),
        ]
    })
}

fn truth(f: &Formula, env: &[bool]) -> bool {
    match f {
        Formula::Var(i) => env[*i],
        Formula::Not(a) => !truth(a, env),
        Formula::And(a, b) => truth(a, env) && truth(b, env),
        Formula::Or(a, b) => truth(a, env) || truth(b, env),
        Formula::Xor(a, b) => truth(a, env) ^ truth(b, env),
        Formula::Ite(c, t, e) => {
            if truth(c, env) {
                truth(t, env)
            } else {
                truth(e, env)
            }
        }
    }
}

fn build(bdd: &mut Bdd, vars: &[VarLabel], f: &Formula) -> NodeRef {
    match f {
        Formula::Var(i) => bdd.var(vars[*i]),
        Formula::Not(a) => {
            let a = build(bdd, vars, a);
            bdd.not(a)
        }
        Formula::And(a, b) => {
            let (a, b) = (build(bdd, vars, a), build(bdd, vars, b));
            bdd.and(a, b)
        }
        Formula::Or(a, b) => {
            let (a, b) = (build(bdd, vars, a), build(bdd, vars, b));
            bdd.or(a, b)
        }
        Formula::Xor(a, b) => {
            let (a, b) = (build(bdd, vars, a), build(bdd, vars, b));
            bdd.xor(a, b)
        }
        Formula::Ite(c, t, e) => {
            let (c, t, e) = (
                build(bdd, vars, c),
                build(bdd, vars, t),
                build(bdd, vars, e),
            );
            bdd.ite(c, t, e)
        }
    }
}

/// De Morgan rewrite pushing every negation to the leaves.
fn nnf(f: &Formula, negate: bool) -> Formula {
    use Formula::*;
    match (f, negate) {
        (Var(i), false) => Var(*i),
        (Var(i), true) => Not(Box::new(Var(*i))),
        (Not(a), n) => nnf(a, !n),
        (And(a, b), false) => And(Box::new(nnf(a, false)), Box::new(nnf(b, false))),
        (And(a, b), true) => Or(Box::new(nnf(a, true)), Box::new(nnf(b, true))),
        (Or(a, b), false) => Or(Box::new(nnf(a, false)), Box::new(nnf(b, false))),
        (Or(a, b), true) => And(Box::new(nnf(a, true)), Box::new(nnf(b, true))),
        (Xor(a, b), n) => Xor(Box::new(nnf(a, n)), Box::new(nnf(b, false))),
        (Ite(c, t, e), n) => Ite(
            Box::new(nnf(c, false)),
            Box::new(nnf(t, n)),
            Box::new(nnf(e, n)),
        ),
    }
}

fn assignments() -> impl Iterator<Item = Vec<bool>> {
    (0..1u32 << VARS).map(|m| (0..VARS).map(|i| m >> i & 1 == 1).collect())
}

fn brute_wmc(f: &Formula, theta: &[f64]) -> f64 {
    assignments()
        .filter(|env| truth(f, env))
        .map(|env| {
            env.iter()
                .zip(theta)
                .map(|(&v, &p)| if v { p } else { 1.0 - p })
                .product::<f64>()
        })
        .sum()
}

fn store(order: &[usize], theta: &[f64]) -> (Bdd, Vec<VarLabel>, WeightMap) {
    let mut bdd = Bdd::new();
    let mut vars = vec![None; VARS];
    for &i in order {
        vars[i] = Some(bdd.fresh_var(LevelHint::Append).unwrap());
    }
    let vars: Vec<VarLabel> = vars.into_iter().map(Option::unwrap).collect();
    let mut w = WeightMap::new();
    for (v, &p) in vars.iter().zip(theta) {
        w.set(*v, p).unwrap();
    }
    (bdd, vars, w)
}

proptest! {
    #[test]
    fn diagram_agrees_with_truth_table(f in formula()) {
        let (mut bdd, vars, _) = store(&[0, 1, 2, 3, 4], &[0.5; VARS]);
        let n = build(&mut bdd, &vars, &f);
        for env in assignments() {
            let by_id: Vec<bool> = {
                let mut a = vec![false; VARS];
                for (i, v) in vars.iter().enumerate() {
                    a[v.id() as usize] = env[i];
                }
                a
            };
            prop_assert_eq!(bdd.eval(n, &by_id), truth(&f, &env));
        }
    }

    #[test]
    fn equivalent_formulas_share_a_node(f in formula()) {
        let (mut bdd, vars, _) = store(&[0, 1, 2, 3, 4], &[0.5; VARS]);
        let a = build(&mut bdd, &vars, &f);
        let b = build(&mut bdd, &vars, &nnf(&f, false));
        prop_assert_eq!(a, b);
        let not_a = bdd.not(a);
        let c = build(&mut bdd, &vars, &nnf(&f, true));
        prop_assert_eq!(not_a, c);
    }

    #[test]
    fn wmc_matches_enumeration(
        f in formula(),
        g in formula(),
        theta in prop::collection::vec(0.0f64..=1.0, VARS),
    ) {
        let (mut bdd, vars, w) = store(&[0, 1, 2, 3, 4], &theta);
        let nf = build(&mut bdd, &vars, &f);
        let ng = build(&mut bdd, &vars, &g);
        let p = bdd.wmc(nf, &w).unwrap();
        prop_assert!((p - brute_wmc(&f, &theta)).abs() < 1e-12);
        let not_f = bdd.not(nf);
        prop_assert!((p + bdd.wmc(not_f, &w).unwrap() - 1.0).abs() < 1e-12);
        let both = bdd.and(nf, ng);
        let fused = bdd.wmc_and(nf, ng, &w).unwrap();
        prop_assert!((fused - bdd.wmc(both, &w).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn wmc_does_not_depend_on_order(
        f in formula(),
        order in Just(vec![0usize, 1, 2, 3, 4]).prop_shuffle(),
        theta in prop::collection::vec(0.0f64..=1.0, VARS),
    ) {
        let (mut b1, v1, w1) = store(&[0, 1, 2, 3, 4], &theta);
        let (mut b2, v2, w2) = store(&order, &theta);
        let n1 = build(&mut b1, &v1, &f);
        let n2 = build(&mut b2, &v2, &f);
        prop_assert!((b1.wmc(n1, &w1).unwrap() - b2.wmc(n2, &w2).unwrap()).abs() < 1e-12);
    }
}

/// Two independent symbolic operands covering every raw value of `f`.
fn operands(f: FixedPointFormat) -> (InferenceContext, BitVectorDist, BitVectorDist) {
    let mut ctx = InferenceContext::new();
    let n = f.total_bits as usize;
    let xs = (0..n)
        .map(|_| ctx.flip_at(0.5, LevelHint::Append).unwrap())
        .collect();
    let ys = (0..n)
        .map(|_| ctx.flip_at(0.5, LevelHint::Append).unwrap())
        .collect();
    let x = BitVectorDist::from_bits(&ctx, xs, f).unwrap();
    let y = BitVectorDist::from_bits(&ctx, ys, f).unwrap();
    (ctx, x, y)
}

/// Assignment to the operand flips (vars `0..n` then `n..2n`) encoding `rx, ry`.
fn encode(f: FixedPointFormat, rx: i128, ry: i128) -> Vec<bool> {
    let mut a = f.bits_of_raw(rx);
    a.extend(f.bits_of_raw(ry));
    a
}

fn decode(ctx: &InferenceContext, z: &BitVectorDist, env: &[bool]) -> i128 {
    let bits: Vec<bool> = z.bits().iter().map(|&b| ctx.bdd().eval(b, env)).collect();
    z.format().raw_of_bits(&bits)
}

fn wrap(f: FixedPointFormat, raw: i128) -> i128 {
    let m = 1i128 << f.total_bits;
    (raw - f.min_raw()).rem_euclid(m) + f.min_raw()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn circuits_match_integer_arithmetic(total in 1u32..=4, frac_seed in 0u32..8, signed: bool) {
        let f = FixedPointFormat::new(total, frac_seed % (total + 1), signed).unwrap();
        let (mut ctx, x, y) = operands(f);
        let sum = fixedpoint::add(&mut ctx, &x, &y, OverflowPolicy::Wraparound).unwrap();
        let diff = fixedpoint::sub(&mut ctx, &x, &y, OverflowPolicy::Wraparound).unwrap();
        let lt = fixedpoint::less_than(&mut ctx, &x, &y).unwrap();
        let eq = fixedpoint::equals(&mut ctx, &x, &y).unwrap();
        for rx in f.min_raw()..=f.max_raw() {
            for ry in f.min_raw()..=f.max_raw() {
                let env = encode(f, rx, ry);
                prop_assert_eq!(decode(&ctx, &x, &env), rx);
                prop_assert_eq!(decode(&ctx, &sum, &env), wrap(f, rx + ry));
                prop_assert_eq!(decode(&ctx, &diff, &env), wrap(f, rx - ry));
                prop_assert_eq!(ctx.bdd().eval(lt.node(), &env), rx < ry);
                prop_assert_eq!(ctx.bdd().eval(eq.node(), &env), rx == ry);
            }
        }
    }

    #[test]
    fn raw_value_round_trip(total in 1u32..=12, frac_seed in 0u32..16, signed: bool, pick in 0.0f64..1.0) {
        let f = FixedPointFormat::new(total, frac_seed % (total + 1), signed).unwrap();
        let span = (f.max_raw() - f.min_raw()) as f64;
        let raw = f.min_raw() + (pick * span).round() as i128;
        let v = f.value_of_raw(raw);
        prop_assert_eq!(f.raw_of(v).unwrap(), raw);
        prop_assert_eq!(f.raw_of_bits(&f.bits_of_raw(raw)), raw);
        prop_assert!(f.raw_of(v + f.step() / 2.0).is_err());
    }

    #[test]
    fn piece_weights_form_a_distribution(
        mu in -2.0f64..2.0,
        sigma in 0.3f64..3.0,
        log_pieces in 0u32..5,
        linear: bool,
    ) {
        let kind = if linear { PieceKind::Linear } else { PieceKind::Exponential };
        let density = library::gaussian_density(mu, sigma, -16.0, 16.0).unwrap();
        let spec = PieceSpec::new(1 << log_pieces, kind);
        let fits = library::fit_pieces(&density, 7, spec).unwrap();
        let total: f64 = fits.iter().map(|p| p.weight).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        let mut ctx = InferenceContext::new();
        let x = library::bitblast(&mut ctx, 7, &density, spec).unwrap();
        let t = bitblast::query::pr(&mut ctx, &x).unwrap();
        prop_assert!((t.total() - 1.0).abs() < 1e-9);
        prop_assert!(t.entries().iter().all(|&(_, p)| p >= 0.0));
    }
}
