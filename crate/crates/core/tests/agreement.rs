use gnlab::analytic::{ber_16qam, ser_16qam};
use gnlab::channel::ChannelModel;
use gnlab::modem::Constellation;
use gnlab::montecarlo::{binomial_sigma, run_ber_ser, SimPlan};
use gnlab::{PowerDbm, SystemParams};

#[test]
fn simulation_within_three_sigma_for_most_seeds() {
    let noise = SystemParams::default().noise();
    for (memory, dbm) in [(1, -2.0), (5, 2.0)] {
        let p = PowerDbm(dbm).watts();
        let (ber, ser) = (ber_16qam(p, memory, &noise), ser_16qam(p, memory, &noise));
        let seeds = 20;
        let mut inside = 0;
        for seed in 0..seeds {
            let plan = SimPlan::new(
                Constellation::qam16_with_power(p),
                ChannelModel::finite_memory(memory, noise),
                25_000,
                4,
                1000 + seed,
            );
            let c = run_ber_ser(&plan).unwrap();
            // sigma of the analytic value at this sample size
            let ok_ber = (c.ber() - ber).abs() <= 3.0 * binomial_sigma(ber, c.bits);
            let ok_ser = (c.ser() - ser).abs() <= 3.0 * binomial_sigma(ser, c.symbols);
            inside += (ok_ber && ok_ser) as u32;
        }
        assert!(inside as f64 >= 0.95 * seeds as f64, "N={memory}: {inside}/{seeds}");
    }
}
