//! Every environment against a straight-from-the-equations oracle written
//! with std math and an independent formulation of each system.

use std::f64::consts::PI;

use rsurf_core::env::{make_env, Action, EnvName, EnvSpec, Environment};
use rsurf_core::rng::Rng;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * b.abs().max(1.0)
}

fn assert_state(name: &str, got: &[f64], want: &[f64]) {
    assert_eq!(got.len(), want.len());
    for (k, (g, w)) in got.iter().zip(want).enumerate() {
        assert!(close(*g, *w), "{name}: component {k}: {g} vs {w}");
    }
}

struct Outcome {
    state: Vec<f64>,
    reward: f64,
    terminal: bool,
}

fn cartpole(s: &[f64], action: usize) -> Outcome {
    let (g, mc, mp, l, tau) = (9.8, 1.0, 0.1, 0.5, 0.02);
    let f = if action == 1 { 10.0 } else { -10.0 };
    let (x, xd, th, thd) = (s[0], s[1], s[2], s[3]);
    // Solve the coupled linear equations for (x_acc, th_acc) directly:
    //   (mc + mp) x_acc + mp l cos th_acc = f + mp l thd^2 sin
    //   cos x_acc + (4/3) l th_acc = g sin
    let (c, sn) = (th.cos(), th.sin());
    let (a11, a12, b1) = (mc + mp, mp * l * c, f + mp * l * thd * thd * sn);
    let (a21, a22, b2) = (c, 4.0 / 3.0 * l, g * sn);
    let det = a11 * a22 - a12 * a21;
    let xacc = (b1 * a22 - a12 * b2) / det;
    let thacc = (a11 * b2 - a21 * b1) / det;
    let next = vec![x + tau * xd, xd + tau * xacc, th + tau * thd, thd + tau * thacc];
    let limit = 12.0 * 2.0 * PI / 360.0;
    let terminal = next[0].abs() > 2.4 || next[2].abs() > limit;
    Outcome { state: next, reward: 1.0, terminal }
}

fn acrobot_accel(s: [f64; 4], tau: f64) -> [f64; 4] {
    // Mass-matrix form M(q) q'' + h(q, q') + G(q) = [0, tau], solved by
    // Cramer's rule.
    let (m1, m2, l1, lc1, lc2, i1, i2, g) = (1.0, 1.0, 1.0, 0.5, 0.5, 1.0, 1.0, 9.8);
    let [t1, t2, w1, w2] = s;
    let m11 = m1 * lc1 * lc1 + m2 * (l1 * l1 + lc2 * lc2 + 2.0 * l1 * lc2 * t2.cos()) + i1 + i2;
    let m12 = m2 * (lc2 * lc2 + l1 * lc2 * t2.cos()) + i2;
    let m22 = m2 * lc2 * lc2 + i2;
    let g2 = m2 * lc2 * g * (t1 + t2 - PI / 2.0).cos();
    let g1 = (m1 * lc1 + m2 * l1) * g * (t1 - PI / 2.0).cos() + g2;
    let h1 = -m2 * l1 * lc2 * t2.sin() * (w2 * w2 + 2.0 * w1 * w2);
    let h2 = m2 * l1 * lc2 * w1 * w1 * t2.sin();
    let r1 = -(h1 + g1);
    let r2 = tau - h2 - g2;
    let det = m11 * m22 - m12 * m12;
    [w1, w2, (r1 * m22 - m12 * r2) / det, (m11 * r2 - m12 * r1) / det]
}

fn acrobot(s: &[f64], action: usize) -> Outcome {
    let tau = action as f64 - 1.0;
    let h = 0.2;
    let y = [s[0], s[1], s[2], s[3]];
    let shift = |k: [f64; 4], c: f64| -> [f64; 4] { std::array::from_fn(|i| y[i] + c * k[i]) };
    let k1 = acrobot_accel(y, tau);
    let k2 = acrobot_accel(shift(k1, h / 2.0), tau);
    let k3 = acrobot_accel(shift(k2, h / 2.0), tau);
    let k4 = acrobot_accel(shift(k3, h), tau);
    let n: [f64; 4] = std::array::from_fn(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
    let wrap = |mut a: f64| {
        while a > PI {
            a -= 2.0 * PI;
        }
        while a < -PI {
            a += 2.0 * PI;
        }
        a
    };
    let next = vec![wrap(n[0]), wrap(n[1]), n[2].clamp(-4.0 * PI, 4.0 * PI), n[3].clamp(-9.0 * PI, 9.0 * PI)];
    let terminal = -next[0].cos() - (next[1] + next[0]).cos() > 1.0;
    Outcome { state: next, reward: if terminal { 0.0 } else { -1.0 }, terminal }
}

fn mountain_car(s: &[f64], accel: f64) -> (f64, f64) {
    let mut v = s[1] + accel;
    v = v.max(-0.07).min(0.07);
    let mut p = s[0] + v;
    p = p.max(-1.2).min(0.6);
    if p == -1.2 && v < 0.0 {
        v = 0.0;
    }
    (p, v)
}

fn mountain_car_discrete(s: &[f64], action: usize) -> Outcome {
    let (p, v) = mountain_car(s, (action as f64 - 1.0) * 0.001 - 0.0025 * (3.0 * s[0]).cos());
    Outcome { state: vec![p, v], reward: -1.0, terminal: p >= 0.5 && v >= 0.0 }
}

fn mountain_car_continuous(s: &[f64], u: f64) -> Outcome {
    let u = u.max(-1.0).min(1.0);
    let (p, v) = mountain_car(s, 0.0015 * u - 0.0025 * (3.0 * s[0]).cos());
    let terminal = p >= 0.45 && v >= 0.0;
    let reward = if terminal { 100.0 } else { 0.0 } - 0.1 * u * u;
    Outcome { state: vec![p, v], reward, terminal }
}

fn pendulum(s: &[f64], u: f64) -> Outcome {
    let (th, thd) = (s[0], s[1]);
    let u = u.max(-2.0).min(2.0);
    let wrapped = th.sin().atan2(th.cos());
    let cost = wrapped * wrapped + 0.1 * thd * thd + 0.001 * u * u;
    // theta'' = -(3g / 2l) sin(theta + pi) + 3u / (m l^2) = (3g / 2l) sin(theta) + 3u
    let thdd = 15.0 * th.sin() + 3.0 * u;
    let new_thd = thd + 0.05 * thdd;
    let new_th = th + 0.05 * new_thd;
    Outcome { state: vec![new_th, new_thd.max(-8.0).min(8.0)], reward: -cost, terminal: false }
}

fn check(name: EnvName, state: impl Fn(&mut Rng) -> Vec<f64>, action: impl Fn(&mut Rng) -> Action) {
    let spec = EnvSpec::of(name);
    let mut rng = Rng::new(2024 + name as u64);
    let mut env = make_env(spec, 0);
    for _ in 0..100 {
        let s = state(&mut rng);
        let a = action(&mut rng);
        env.set_state(&s);
        let t = env.step(&a).unwrap();
        let want = match (name, &a) {
            (EnvName::CartPole, Action::Discrete(k)) => cartpole(&s, *k),
            (EnvName::Acrobot, Action::Discrete(k)) => acrobot(&s, *k),
            (EnvName::MountainCar, Action::Discrete(k)) => mountain_car_discrete(&s, *k),
            (EnvName::MountainCarContinuous, Action::Continuous(u)) => mountain_car_continuous(&s, u[0]),
            (EnvName::Pendulum, Action::Continuous(u)) => pendulum(&s, u[0]),
            _ => unreachable!(),
        };
        assert_state(name.as_str(), &env.state(), &want.state);
        assert!(close(t.reward, want.reward), "{}: reward {} vs {}", name.as_str(), t.reward, want.reward);
        assert_eq!(t.done && !t.truncated, want.terminal, "{}: terminal flag", name.as_str());
    }
}

#[test]
fn cartpole_matches_oracle() {
    check(
        EnvName::CartPole,
        |r| vec![r.uniform_range(-2.4, 2.4), r.uniform_range(-3.0, 3.0), r.uniform_range(-0.2, 0.2), r.uniform_range(-3.0, 3.0)],
        |r| Action::Discrete(r.below(2)),
    );
}

#[test]
fn acrobot_matches_oracle() {
    check(
        EnvName::Acrobot,
        |r| {
            vec![
                r.uniform_range(-PI, PI),
                r.uniform_range(-PI, PI),
                r.uniform_range(-4.0 * PI, 4.0 * PI),
                r.uniform_range(-9.0 * PI, 9.0 * PI),
            ]
        },
        |r| Action::Discrete(r.below(3)),
    );
}

#[test]
fn mountain_car_matches_oracle() {
    check(
        EnvName::MountainCar,
        |r| vec![r.uniform_range(-1.2, 0.6), r.uniform_range(-0.07, 0.07)],
        |r| Action::Discrete(r.below(3)),
    );
}

#[test]
fn mountain_car_continuous_matches_oracle() {
    check(
        EnvName::MountainCarContinuous,
        |r| vec![r.uniform_range(-1.2, 0.6), r.uniform_range(-0.07, 0.07)],
        |r| Action::Continuous(vec![r.uniform_range(-1.0, 1.0)]),
    );
}

#[test]
fn pendulum_matches_oracle() {
    check(
        EnvName::Pendulum,
        |r| vec![r.uniform_range(-PI, PI), r.uniform_range(-8.0, 8.0)],
        |r| Action::Continuous(vec![r.uniform_range(-2.0, 2.0)]),
    );
}

#[test]
fn cartpole_single_push_right() {
    let mut env = make_env(EnvSpec::of(EnvName::CartPole), 0);
    env.set_state(&[0.0; 4]);
    let t = env.step(&Action::Discrete(1)).unwrap();
    assert_eq!(t.reward, 1.0);
    let s = env.state();
    assert_eq!(s[0], 0.0);
    assert!((s[1] - 0.195122).abs() < 1e-6, "{}", s[1]);
    assert_eq!(s[2], 0.0);
    assert!((s[3] + 0.292683).abs() < 1e-6, "{}", s[3]);
}

#[test]
fn pendulum_upright_at_rest_costs_nothing() {
    let mut env = make_env(EnvSpec::of(EnvName::Pendulum), 0);
    env.set_state(&[0.0, 0.0]);
    assert_eq!(env.step(&Action::Continuous(vec![0.0])).unwrap().reward, 0.0);
}

#[test]
fn mountain_car_non_goal_steps_cost_one() {
    let mut env = make_env(EnvSpec::of(EnvName::MountainCar), 5);
    env.reset();
    for k in 0..200 {
        let t = env.step(&Action::Discrete(k % 3)).unwrap();
        if !(t.done && !t.truncated) {
            assert_eq!(t.reward, -1.0);
        }
        if t.done {
            break;
        }
    }
}

#[test]
fn resets_follow_canonical_ranges() {
    let mut cp = make_env(EnvSpec::of(EnvName::CartPole), 11);
    let mut pd = make_env(EnvSpec::of(EnvName::Pendulum), 11);
    for _ in 0..200 {
        assert!(cp.reset().iter().all(|v| v.abs() <= 0.05));
        let o = pd.reset();
        let th = o[1].atan2(o[0]);
        assert!((o[0] * o[0] + o[1] * o[1] - 1.0).abs() < 1e-12);
        assert!((-PI..=PI).contains(&th));
        assert!(o[2].abs() <= 1.0);
    }
}

#[test]
fn episodes_end_within_limit_and_truncate() {
    for name in EnvName::ALL {
        let spec = EnvSpec::of(name);
        let mut env = make_env(spec, 3);
        let mut rng = Rng::new(9);
        env.reset();
        let mut n = 0;
        loop {
            let a = match spec.action_space {
                rsurf_core::env::ActionSpace::Discrete(k) => Action::Discrete(rng.below(k)),
                rsurf_core::env::ActionSpace::Box { low, high, .. } => Action::Continuous(vec![rng.uniform_range(low, high)]),
            };
            let t = env.step(&a).unwrap();
            n += 1;
            assert!(t.reward.is_finite());
            if t.done {
                assert!(n <= spec.max_episode_steps);
                if t.truncated {
                    assert_eq!(n, spec.max_episode_steps);
                }
                break;
            }
        }
        assert!(env.step(&Action::Discrete(0)).is_err(), "{} allows stepping after done", name.as_str());
    }
}
