// scratch calibration for the desk-scale learning scenario
use uavnet_core::agent::{epsilon_schedule, AgentVariant, DdqnAgent};
use uavnet_core::config::WorldConfig;
use uavnet_core::harness::{build_environment, run_episode};
use uavnet_core::metrics::episode_metrics;
use uavnet_core::mobility::{ClusterSpec, ScenarioKind, ScenarioSpec};
use std::time::Instant;

fn desk_config() -> WorldConfig {
    let mut cfg = WorldConfig::default();
    cfg.n_uavs = 2;
    cfg.area.x_max_m = 500.0;
    cfg.area.y_max_m = 500.0;
    cfg.episodes = 300;
    cfg.max_steps = 200;
    cfg.learning.batch_size = 64;
    cfg.learning.comm_range_m = 1000.0;
    cfg.scenario = ScenarioSpec {
        kind: ScenarioKind::StaticClusters,
        n_vehicles: 20,
        clusters: vec![
            ClusterSpec { x_m: 125.0, y_m: 125.0, radius_m: 50.0, weight: 0.5 },
            ClusterSpec { x_m: 375.0, y_m: 375.0, radius_m: 50.0, weight: 0.5 },
        ],
        ..ScenarioSpec::default()
    };
    cfg.validate().unwrap();
    cfg
}

fn greedy_eval(env: &mut uavnet_core::env::Environment, agents: &mut [DdqnAgent]) -> (f64, f64, f64) {
    let logs = run_episode(env, agents, 0.0, false).unwrap();
    let m = episode_metrics(0, &logs, 1.0, 0.0);
    (m.cdr, m.ee_bits_per_joule, m.total_energy_j / 1000.0)
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let seed: u64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let episodes: u32 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(300);
    let lr: f64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(1.0e-4);
    let replay: usize = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(10_000);
    let sync: u32 = args.get(5).and_then(|s| s.parse().ok()).unwrap_or(500);
    let start_on_clusters: bool = args.get(6).map(|s| s == "clusters").unwrap_or(false);

    let mut cfg = desk_config();
    cfg.learning.learning_rate = lr;
    cfg.learning.replay_capacity = replay;
    cfg.learning.target_sync_period = sync;
    if start_on_clusters {
        cfg.initial_uav_positions = Some(vec![[125.0, 125.0], [375.0, 375.0]]);
    }
    cfg.validate().unwrap();
    println!("seed {seed} ep {episodes} lr {lr} replay {replay} sync {sync} start_on_clusters {start_on_clusters}");

    let started = Instant::now();
    let mut env = build_environment(&cfg, seed).unwrap();
    let mut agents: Vec<DdqnAgent> = (0..cfg.n_uavs)
        .map(|i| DdqnAgent::new(&cfg, AgentVariant::Dacemad, i, seed))
        .collect();
    for ep in 0..episodes {
        let eps = epsilon_schedule(&cfg.learning, ep);
        let logs = run_episode(&mut env, &mut agents, eps, true).unwrap();
        let m = episode_metrics(ep, &logs, cfg.step_duration_s, 0.0);
        if ep % 25 == 0 || ep == episodes - 1 {
            let (gc, ge, gkj) = greedy_eval(&mut env, &mut agents);
            println!(
                "ep {ep:3} eps {eps:.2} train cdr {:.3} | greedy cdr {gc:.3} ee {ge:8.1} energy {gkj:6.1}kJ",
                m.cdr
            );
        }
    }
    let (gc, ge, _) = greedy_eval(&mut env, &mut agents);
    let mut rng_agents: Vec<DdqnAgent> = (0..cfg.n_uavs)
        .map(|i| DdqnAgent::new(&cfg, AgentVariant::Random, i, seed))
        .collect();
    let (rc, re, _) = greedy_eval(&mut env, &mut rng_agents);
    println!("final greedy cdr {gc:.3} ee {ge:.1} | random cdr {rc:.3} ee {re:.1} | ratio {:.2}", ge / re);
    println!("total wall: {:.1}s", started.elapsed().as_secs_f64());
}
