#![allow(dead_code)]

use std::path::{Path, PathBuf};

use rsurf::checkpoint::Checkpoint;
use rsurf::run::{train, RunDirectory};
use rsurf_core::env::{EnvName, EnvSpec};
use rsurf_core::nn::{Architecture, ParameterVector};
use rsurf_core::rng::Rng;
use rsurf_core::train::{Algo, TrainConfig};

pub fn small_arch(env: EnvName) -> Architecture {
    Architecture::with_hidden(&EnvSpec::of(env), vec![8, 8])
}

pub fn small_config(total_steps: u64, interval: u64, seed: u64) -> TrainConfig {
    let mut c = TrainConfig::for_algo(Algo::Ppo);
    c.total_steps = total_steps;
    c.checkpoint_interval = interval;
    c.n_steps = 128;
    c.seed = seed;
    c
}

pub fn small_run(root: &Path, seed: u64) -> RunDirectory {
    train(EnvName::CartPole, small_arch(EnvName::CartPole), small_config(512, 256, seed), root).unwrap()
}

pub fn random_checkpoint(env: EnvName, seed: u64) -> Checkpoint {
    let architecture = small_arch(env);
    let mut params = ParameterVector::zeros(&architecture);
    let mut rng = Rng::new(seed);
    for v in params.values_mut() {
        *v = 0.5 * rng.normal();
    }
    Checkpoint { env, algo: Algo::Ppo, train_step: 7, seed, architecture, params }
}

pub fn saved_checkpoint(dir: &Path, env: EnvName, seed: u64) -> PathBuf {
    let path = dir.join(format!("ckpt_{seed}.json"));
    random_checkpoint(env, seed).save(&path).unwrap();
    path
}

pub fn cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = rsurf::cli::run(std::iter::once("rsurf").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}
