mod common;

use common::random_scene;
use infoseek::domain::{Answer, AttributeSchema, Query};
use infoseek::env::{generate_scene, oracle_answer, read_records, write_records, Episode, GameConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn target_position_is_uniform() {
    let cfg = GameConfig {
        n_objects: 4,
        ..GameConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    let n = 10_000;
    let mut counts = [0usize; 4];
    for _ in 0..n {
        counts[generate_scene(&cfg, &mut rng).unwrap().target_index] += 1;
    }
    let expected = n as f64 / 4.0;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    // 99th percentile of chi-squared with 3 degrees of freedom
    assert!(chi2 < 11.345, "chi2 = {chi2}, counts {counts:?}");
}

#[test]
fn seeded_scenes_repeat_and_targets_are_unique() {
    let cfg = GameConfig::default();
    let a = generate_scene(&cfg, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    let b = generate_scene(&cfg, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    assert_eq!(a, b);
    let mut rng = ChaCha8Rng::seed_from_u64(62);
    for _ in 0..1000 {
        let s = generate_scene(&cfg, &mut rng).unwrap();
        let t = &s.target().attribute_values;
        let same = s.objects.iter().filter(|o| &o.attribute_values == t).count();
        assert_eq!(same, 1);
    }
}

#[test]
fn half_noise_oracle_is_a_fair_coin() {
    let schema = AttributeSchema::default_game();
    let mut rng = ChaCha8Rng::seed_from_u64(63);
    let n = 10_000;
    let mut yes = 0;
    for _ in 0..n {
        let scene = random_scene(&schema, 5, &mut rng);
        let q = common::random_query(&schema, &mut rng);
        match oracle_answer(&scene, q, &mut rng, 0.5) {
            Answer::Yes => yes += 1,
            Answer::No => {}
            Answer::NA => panic!("oracle never answers NA"),
        }
    }
    let sd = (n as f64 * 0.25).sqrt();
    assert!((yes as f64 - n as f64 / 2.0).abs() <= 3.0 * sd, "{yes} yes of {n}");
}

/// Shortest query sequence whose truthful answers rule out every other
/// object, by breadth-first enumeration.
fn disambiguating(scene: &infoseek::domain::Scene, budget: usize) -> Option<Vec<Query>> {
    let schema = &scene.schema;
    let target = scene.target();
    let mut frontier: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..=budget {
        for seq in &frontier {
            let alive = scene
                .objects
                .iter()
                .filter(|o| {
                    seq.iter().all(|&t| {
                        let q = schema.query_of_token(t).unwrap();
                        o.has(q) == target.has(q)
                    })
                })
                .count();
            if alive == 1 {
                return Some(seq.iter().map(|&t| schema.query_of_token(t).unwrap()).collect());
            }
        }
        frontier = frontier
            .iter()
            .flat_map(|s| {
                (0..schema.vocab_size()).map(move |t| {
                    let mut n = s.clone();
                    n.push(t);
                    n
                })
            })
            .collect();
    }
    None
}

#[test]
fn disambiguating_sequence_earns_full_reward() {
    let cfg = GameConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(64);
    let mut checked = 0;
    while checked < 100 {
        let scene = generate_scene(&cfg, &mut rng).unwrap();
        let Some(mut seq) = disambiguating(&scene, 3) else { continue };
        // pad the remaining budget with a repeat, which cannot revive anything
        while seq.len() < cfg.t_max {
            seq.push(seq.first().copied().unwrap_or(Query { attribute: 0, value: 0 }));
        }
        let mut ep = Episode::new(scene);
        let mut total = 0.0;
        for (i, q) in seq.iter().enumerate() {
            let out = ep.step(&cfg, *q, &mut rng).unwrap();
            assert_eq!(out.done, i + 1 == cfg.t_max);
            if !out.done {
                assert_eq!(out.reward, 0.0);
            }
            total += out.reward;
        }
        assert_eq!(total, 1.0);
        assert!(ep.success());
        assert!(ep.step(&cfg, seq[0], &mut rng).is_err());
        checked += 1;
    }
}

#[test]
fn random_questions_beat_chance() {
    let cfg = GameConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(65);
    let n = 2000;
    let mut wins = 0;
    for _ in 0..n {
        let mut ep = Episode::new(generate_scene(&cfg, &mut rng).unwrap());
        while !ep.done {
            let q = common::random_query(&cfg.schema, &mut rng);
            ep.step(&cfg, q, &mut rng).unwrap();
        }
        wins += ep.success() as usize;
    }
    assert!(wins as f64 / n as f64 >= 1.0 / cfg.n_objects as f64);
}

#[test]
fn episode_log_round_trips_and_replays() {
    let cfg = GameConfig {
        oracle_noise: 0.2,
        ..GameConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(66);
    let records: Vec<_> = (0..20)
        .map(|_| {
            let mut ep = Episode::new(generate_scene(&cfg, &mut rng).unwrap());
            while !ep.done {
                let q = common::random_query(&cfg.schema, &mut rng);
                ep.step(&cfg, q, &mut rng).unwrap();
            }
            ep.record()
        })
        .collect();
    let mut buf = Vec::new();
    write_records(&mut buf, &records).unwrap();
    assert_eq!(buf.iter().filter(|&&b| b == b'\n').count(), records.len());
    let back = read_records(&buf[..]).unwrap();
    assert_eq!(back, records);
    for r in &back {
        let check = r.replay().unwrap();
        assert!(check.matches_log);
        assert_eq!(check.success, r.success);
    }
    assert!(read_records(&b"{not json}\n"[..]).is_err());
}
