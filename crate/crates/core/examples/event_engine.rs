//! Schedules a few events, cancels one, and drains the queue in time order.

use dtnsim::engine::Scheduler;
use dtnsim::SimTime;

fn main() -> dtnsim::Result<()> {
    let mut sched = Scheduler::new();
    sched.schedule(SimTime::from_millis(300), "third")?;
    sched.schedule(SimTime::from_millis(100), "first")?;
    let doomed = sched.schedule(SimTime::from_millis(200), "cancelled")?;
    // same instant as "first": insertion order breaks the tie
    sched.schedule(SimTime::from_millis(100), "second")?;
    sched.cancel(doomed);

    while let Some(ev) = sched.pop_next(SimTime::from_secs(1)) {
        println!("{} {}", ev.fire_at, ev.payload);
    }

    match sched.schedule(SimTime::ZERO, "too late") {
        Err(e) => println!("rejected: {e}"),
        Ok(_) => unreachable!("the clock only moves forward"),
    }
    Ok(())
}
