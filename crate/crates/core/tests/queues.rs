mod common;

use airport_sim::engine::run;
use common::{random_setup, replay_queues, scenario_rng};

/// Per-agent waiting time from the engine equals the replay of the event
/// log through an independent single-server FIFO calculator.
#[test]
fn queue_wait_matches_replay_on_random_scenarios() {
    let mut rng = scenario_rng(7);
    let mut customers = 0;
    let mut waited = 0;
    for i in 0..50 {
        let p = random_setup(&mut rng);
        let r = run(&p).unwrap();
        let replay = replay_queues(&r);
        assert_eq!(replay.fifo_violations, 0, "scenario {i}");
        for log in &r.logs {
            assert_eq!(
                log.queue_wait, replay.waits[&log.aid],
                "scenario {i}, agent {}",
                log.aid
            );
        }
        customers += replay.customers;
        waited += r.logs.iter().filter(|l| l.queue_wait > 0).count();
    }
    // The scenarios actually exercise queues.
    assert!(customers > 500, "{customers}");
    assert!(waited > 20, "{waited}");
}

/// Crowded single-counter scenario where flights are missed while queued.
#[test]
fn removal_while_queued_is_replayed() {
    let mut rng = scenario_rng(70);
    let mut missed = 0;
    for _ in 0..10 {
        let p = airport_sim::SetupParameters {
            outgoing_nonami: 8,
            outgoing_ami: 8,
            ingoing_nonami: 0,
            ingoing_ami: 0,
            checkin_counters: 1,
            passport_controls: 1,
            flights: 1,
            flight_deadline: 60,
            arrival_window: 0,
            ..random_setup(&mut rng)
        };
        let r = run(&p).unwrap();
        let replay = replay_queues(&r);
        assert_eq!(replay.fifo_violations, 0);
        for log in &r.logs {
            assert_eq!(log.queue_wait, replay.waits[&log.aid], "agent {}", log.aid);
        }
        missed += r.logs.iter().filter(|l| l.missed_flight).count();
    }
    assert!(missed > 0);
}
