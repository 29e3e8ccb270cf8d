use epn_core::presets::table1;
use epn_core::sim::{joint_state_check, run, run_with, SimConfig, SimModel, SimStation};
use epn_core::NetworkConfig;
use epn_core::{stationary_state, Allocation, BatchDistribution, Execution, StationPair};
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn station(lambda: f64, w: f64, delta: f64, u: f64) -> SimStation {
    SimStation {
        lambda,
        w,
        delta,
        batch: BatchDistribution::Geometric { u },
    }
}

fn within(mean: f64, stderr: f64, reference: f64, z: f64) -> bool {
    (mean - reference).abs() <= z * stderr.max(1e-12)
}

#[test]
fn no_jobs_means_every_packet_is_lost() {
    let model = SimModel {
        gamma: 40.0,
        stations: vec![station(0.0, 60.0, 5.0, 0.2), station(0.0, 30.0, 2.0, 0.4)],
    };
    let est =
        run(&SimConfig::from_model(model, vec![0.6, 0.4], 2_000.0).with_replications(6)).unwrap();
    for q in &est.q1 {
        assert_eq!(q.mean, 0.0);
    }
    assert_eq!(est.response_time.mean, 0.0);
    assert!(
        within(est.energy_loss.mean, est.energy_loss.stderr, 40.0, 4.0),
        "{:?}",
        est.energy_loss
    );
    assert!(est.useful_delivery_rate.iter().all(|r| r.mean == 0.0));
}

#[test]
fn no_harvest_means_no_energy_and_growing_queues() {
    let model = SimModel {
        gamma: 0.0,
        stations: vec![station(5.0, 60.0, 5.0, 0.2)],
    };
    let est = run(&SimConfig::from_model(model, vec![1.0], 500.0).with_replications(4)).unwrap();
    assert_eq!(est.q2[0].mean, 0.0);
    assert_eq!(est.energy_loss.mean, 0.0);
    assert_eq!(est.job_throughput.mean, 0.0);
    assert!(est.non_stationary);
    assert_eq!(est.non_stationary_replications, 4);
}

#[test]
fn stable_run_is_not_flagged() {
    let sim =
        SimConfig::new(&table1(), &Allocation::pair(0.4572).unwrap(), 5_000.0).with_replications(4);
    assert!(!run(&sim).unwrap().non_stationary);
}

#[test]
fn results_depend_only_on_seed() {
    let sim = SimConfig::new(&table1(), &Allocation::pair(0.46).unwrap(), 300.0)
        .with_replications(5)
        .with_seed(42);
    let a = run_with(&sim, Execution::Sequential).unwrap();
    let b = run_with(&sim, Execution::Parallel).unwrap();
    let c = run_with(&sim, Execution::Sequential).unwrap();
    assert_eq!(a, b);
    assert_eq!(a, c);
    let d = run_with(&sim.clone().with_seed(43), Execution::Sequential).unwrap();
    assert_ne!(a.response_time, d.response_time);
}

#[test]
fn flows_balance_in_steady_state() {
    let config = table1();
    let sim =
        SimConfig::new(&config, &Allocation::pair(0.4572).unwrap(), 10_000.0).with_replications(6);
    let est = run(&sim).unwrap();
    let z = 5.0;
    assert!(
        within(
            est.job_throughput.mean,
            est.job_throughput.stderr,
            config.lambda_plus(),
            z
        ),
        "{:?}",
        est.job_throughput
    );
    assert!(
        within(
            est.harvest_rate.mean,
            est.harvest_rate.stderr,
            config.gamma,
            z
        ),
        "{:?}",
        est.harvest_rate
    );
    // every harvested packet leaks, hits an idle workstation or serves jobs
    let useful: f64 = est.useful_delivery_rate.iter().map(|s| s.mean).sum();
    let spent = est.energy_loss.mean + useful;
    assert!(
        (spent - est.harvest_rate.mean).abs() < 1e-3 * config.gamma,
        "{spent} vs {}",
        est.harvest_rate.mean
    );
}

#[test]
fn energy_loss_is_sum_of_components() {
    let sim =
        SimConfig::new(&table1(), &Allocation::pair(0.5).unwrap(), 500.0).with_replications(3);
    let est = run(&sim).unwrap();
    let parts: f64 = est
        .leak_rate
        .iter()
        .chain(&est.idle_delivery_rate)
        .map(|s| s.mean)
        .sum();
    assert!((est.energy_loss.mean - parts).abs() < 1e-9);
}

#[test]
fn utilizations_match_product_form() {
    let config = table1();
    let alloc = Allocation::pair(0.4572).unwrap();
    let state = stationary_state(&config, &alloc).unwrap();
    let est = run(&SimConfig::new(&config, &alloc, 20_000.0).with_replications(8)).unwrap();
    for i in 0..2 {
        assert!(
            within(est.q1[i].mean, est.q1[i].stderr, state.q1[i], 5.0),
            "q1[{i}] {:?} vs {}",
            est.q1[i],
            state.q1[i]
        );
        assert!(
            within(est.q2[i].mean, est.q2[i].stderr, state.q2[i], 5.0),
            "q2[{i}] {:?} vs {}",
            est.q2[i],
            state.q2[i]
        );
    }
}

#[test]
fn removal_sizes_follow_the_batch_law() {
    // heavily loaded single pair so that most deliveries find a deep queue
    let u = 0.5;
    let model = SimModel {
        gamma: 6.0,
        stations: vec![station(10.0, 12.0, 0.0, u)],
    };
    let sim = SimConfig::from_model(model, vec![1.0], 20_000.0).with_replications(4);
    let est = run(&sim).unwrap();
    let hist = &est.deep_removals[0];
    let deep = est.deep_queue as usize;
    // sizes below the queue depth are exact draws; larger ones are censored
    let mut observed: Vec<f64> = hist[..deep - 1].iter().map(|&c| c as f64).collect();
    observed.push(hist[deep - 1..].iter().sum::<u64>() as f64);
    let total: f64 = observed.iter().sum();
    assert!(total > 10_000.0, "{total}");
    let mut expected: Vec<f64> = (1..deep)
        .map(|s| total * (1.0 - u) * u.powi(s as i32 - 1))
        .collect();
    expected.push(total * u.powi(deep as i32 - 1));
    let chi2: f64 = observed
        .iter()
        .zip(&expected)
        .map(|(o, e)| (o - e).powi(2) / e)
        .sum();
    let p_value = 1.0
        - ChiSquared::new((observed.len() - 1) as f64)
            .unwrap()
            .cdf(chi2);
    assert!(p_value > 0.05, "chi2 = {chi2}, p = {p_value}");
}

#[test]
fn single_pair_joint_distribution() {
    let network = NetworkConfig::new(
        5.0,
        vec![StationPair::geometric(1.0, 10.0, 1.0, 0.5).unwrap()],
    )
    .unwrap();
    let alloc = Allocation::new(vec![1.0]).unwrap();
    let sim = SimConfig::new(&network, &alloc, 20_000.0).with_replications(8);
    let report = joint_state_check(&sim, 3).unwrap();
    assert_eq!(report.states.len(), 16);
    let empty = &report.states[0];
    assert_eq!(
        (empty.k.as_slice(), empty.b.as_slice()),
        (&[0][..], &[0][..])
    );
    let q2: f64 = 5.0 / 11.0;
    let q1 = 1.0 / (0.5 + q2 * 10.0);
    assert!((empty.pfs - (1.0 - q1) * (1.0 - q2)).abs() < 1e-12);
    assert!(empty.z.abs() < 4.0, "{empty:?}");
    assert!(
        report.fraction_within_3 >= 0.85,
        "{}",
        report.fraction_within_3
    );
    assert!(report.max_abs_deviation < 0.01);
}

#[test]
fn zero_cap_tracks_only_the_empty_state() {
    let sim = SimConfig::new(&table1(), &Allocation::pair(0.46).unwrap(), 500.0)
        .with_replications(2)
        .with_state_cap(0);
    let est = run(&sim).unwrap();
    assert_eq!(est.state_cap, Some(0));
    assert!(est.state_freq.len() <= 1);
    for f in &est.state_freq {
        assert_eq!(f.k, vec![0, 0]);
        assert_eq!(f.b, vec![0, 0]);
        assert!(f.fraction.mean > 0.0 && f.fraction.mean < 1.0);
    }
}

#[test]
fn joint_check_needs_an_analytic_model() {
    let model = SimModel {
        gamma: 0.0,
        stations: vec![station(5.0, 60.0, 5.0, 0.2)],
    };
    let sim = SimConfig::from_model(model, vec![1.0], 10.0);
    assert!(joint_state_check(&sim, 2).is_err());
}
