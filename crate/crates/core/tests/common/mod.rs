#![allow(dead_code)]

use rand::Rng;
use rlcap::{ConstrainedSystem, LabelSet, RunLengthSet, Weight};

pub fn w(n: u64) -> Weight {
    Weight::integer(n)
}

pub fn sys(runs: RunLengthSet, m: usize) -> ConstrainedSystem {
    ConstrainedSystem::new(runs, LabelSet::numbered(m).unwrap())
}

pub fn explicit(ws: &[u64]) -> RunLengthSet {
    RunLengthSet::explicit(ws.iter().map(|&n| w(n)).collect()).unwrap()
}

/// Named systems with an exact rational grid.
pub fn grid_fixtures() -> Vec<(&'static str, ConstrainedSystem)> {
    vec![
        ("rll2", ConstrainedSystem::rll(2).unwrap()),
        ("rll3", ConstrainedSystem::rll(3).unwrap()),
        ("naturals/2", sys(RunLengthSet::naturals(), 2)),
        ("unit/3", sys(explicit(&[1]), 3)),
        ("pair/3", sys(explicit(&[1, 2]), 3)),
        (
            "async xi=2",
            ConstrainedSystem::asynchronous(w(2), 2).unwrap(),
        ),
        (
            "halves",
            sys(
                RunLengthSet::explicit(vec![
                    Weight::ratio(1, 2).unwrap(),
                    Weight::ratio(3, 2).unwrap(),
                ])
                .unwrap(),
                2,
            ),
        ),
        (
            "odd",
            sys(
                RunLengthSet::union(vec![explicit(&[1]), RunLengthSet::arithmetic(w(3), w(2))])
                    .unwrap(),
                2,
            ),
        ),
    ]
}

/// Grid fixtures plus systems with irrational run lengths.
pub fn all_fixtures() -> Vec<(&'static str, ConstrainedSystem)> {
    let mut out = grid_fixtures();
    out.push((
        "one-two-pi",
        sys(
            RunLengthSet::explicit(vec![w(1), w(2), Weight::pi()]).unwrap(),
            2,
        ),
    ));
    out.push((
        "async xi=2, m=3",
        ConstrainedSystem::asynchronous(w(2), 3).unwrap(),
    ));
    out
}

fn small_rational<R: Rng>(rng: &mut R, max: u64) -> Weight {
    let den = rng.gen_range(1..=3u64);
    let num = rng.gen_range(den..=max * den);
    Weight::ratio(num, den).unwrap()
}

/// A random run-length set of one of the supported shapes.
pub fn random_runs<R: Rng>(rng: &mut R) -> RunLengthSet {
    match rng.gen_range(0..5) {
        0 => {
            let n = rng.gen_range(1..=5);
            let mut ws: Vec<Weight> = (0..n).map(|_| small_rational(rng, 6)).collect();
            ws.sort();
            ws.dedup();
            RunLengthSet::explicit(ws).unwrap()
        }
        1 => RunLengthSet::arithmetic(small_rational(rng, 4), small_rational(rng, 3)),
        2 => {
            let ratio = [Weight::ratio(3, 2).unwrap(), w(2), w(3)][rng.gen_range(0..3)].clone();
            RunLengthSet::geometric(small_rational(rng, 3), ratio).unwrap()
        }
        3 => {
            // a real-valued member next to exact ones
            let x = rng.gen_range(1.0..4.0);
            let mut ws = vec![Weight::real(x).unwrap(), w(5), Weight::pi()];
            ws.sort();
            ws.dedup();
            RunLengthSet::explicit(ws).unwrap()
        }
        _ => {
            // members of the arithmetic part have denominators divisible by 5
            let head = RunLengthSet::explicit(vec![Weight::ratio(1, 2).unwrap(), w(1)]).unwrap();
            let first = &small_rational(rng, 3) + &Weight::ratio(2, 5).unwrap();
            RunLengthSet::union(vec![head, RunLengthSet::arithmetic(first, w(1))]).unwrap()
        }
    }
}

/// A random system with `m` in `[2, 6]`.
pub fn random_system<R: Rng>(rng: &mut R) -> ConstrainedSystem {
    let runs = random_runs(rng);
    sys(runs, rng.gen_range(2..=6))
}

/// A random system with positive capacity.
pub fn random_nondegenerate<R: Rng>(rng: &mut R) -> ConstrainedSystem {
    loop {
        let s = random_system(rng);
        if !(s.m() == 2 && s.runs().len() == Some(1)) {
            return s;
        }
    }
}
