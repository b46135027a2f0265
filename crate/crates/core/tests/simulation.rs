use std::collections::HashSet;

use rand::RngCore;

use licm_core::{
    load_idx, make_synthetic_quadratic, run, seed_worker, write_idx, Attack, Config, Data, Purpose, RngStream, Rule,
    StepSchedule, WorkerRoster,
};

fn quadratic(m: usize, q: usize, attack: Option<Attack>, rule: Rule, iterations: usize) -> Config {
    let task = make_synthetic_quadratic(10, 5.0, 0.1, 4).unwrap();
    let roster = WorkerRoster::last_q(m, q, attack).unwrap();
    let schedule = StepSchedule::polynomial(0.5, 50.0, 0.6).unwrap();
    let mut c = Config::new(task, roster, rule, schedule, iterations);
    c.master_seed = 21;
    c.eval_every = 100;
    c
}

#[test]
fn honest_mean_converges() {
    let r = run(&quadratic(10, 0, None, Rule::Mean, 2000)).unwrap();
    assert!(!r.diverged());
    let g = r.last_grad_norm().unwrap();
    assert!(g < 0.05, "final gradient norm {g}");
}

#[test]
fn mean_breaks_under_omniscient_attack() {
    let r = run(&quadratic(16, 7, Some(Attack::Omniscient { factor: 100.0 }), Rule::Mean, 2000)).unwrap();
    let g0 = r.rows[0].grad_norm.unwrap();
    assert!(
        r.diverged() || r.last_grad_norm().unwrap() > 10.0 * g0,
        "neither diverged nor grew: {:?} vs {g0}",
        r.last_grad_norm()
    );
}

#[test]
fn identical_configs_give_identical_runs() {
    for rule in [Rule::Licm { gamma: 10.0, delta: 1e-12 }, Rule::Krum { q: 3 }, Rule::Mean] {
        let c = quadratic(12, 3, Some(Attack::Gaussian { std: 200.0 }), rule, 300);
        let a = run(&c).unwrap();
        let b = run(&c).unwrap();
        assert_eq!(a.rows, b.rows, "{rule}");
        assert_eq!(a.final_w, b.final_w, "{rule}");
    }
}

#[test]
fn selection_counts_add_up() {
    let c = quadratic(16, 7, Some(Attack::Omniscient { factor: 100.0 }), Rule::Licm { gamma: 10.0, delta: 1e-12 }, 200);
    let r = run(&c).unwrap();
    for row in &r.rows[..200] {
        let (n, b, z) = (row.selected_count.unwrap(), row.selected_benign.unwrap(), row.selected_byzantine.unwrap());
        assert_eq!(b + z, n);
        assert!(z <= 7);
    }
}

#[test]
fn worker_streams_do_not_collide() {
    let mut seen = HashSet::new();
    for id in 0..1000 {
        for purpose in [Purpose::Data, Purpose::Attack] {
            let mut rng = seed_worker(99, id, purpose);
            let first = [rng.next_u64(), rng.next_u64()];
            assert!(seen.insert(first), "stream collision at worker {id}, {purpose:?}");
        }
    }
}

#[test]
fn idx_round_trip() {
    let mut rng = RngStream::new(3, 0);
    let (n, rows, cols) = (17, 3, 4);
    let features: Vec<f64> = (0..n * rows * cols).map(|_| rng.index(256) as f64 / 255.0).collect();
    let mut labels: Vec<usize> = (0..n).map(|_| rng.index(10)).collect();
    labels[0] = 9;
    let ds = Data::new(features, labels, rows * cols, 10).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let (img, lbl) = (dir.path().join("img"), dir.path().join("lbl"));
    write_idx(&ds, rows, cols, &img, &lbl).unwrap();
    assert_eq!(load_idx::<f64>(&img, &lbl).unwrap(), ds);
}
