mod common;

use uwsched::baselines::{build_fdm_spec, hits_primary, threshold_rule, BandPlan, SubChannel};
use uwsched::channel::Band;
use uwsched::harness::sweep::run_single;
use uwsched::harness::{ScenarioConfig, Scheme};

#[test]
fn default_band_plan_fits_the_system_band() {
    let band = Band::new(32.0, 4.0).unwrap();
    BandPlan::three_way().validate(&band).unwrap();
    let narrow = Band::new(32.0, 3.0).unwrap();
    assert!(BandPlan::three_way().validate(&narrow).is_err());
}

#[test]
fn band_plan_rejects_bad_layouts() {
    let band = Band::new(32.0, 4.0).unwrap();
    let ch = |center_khz, bandwidth_khz| SubChannel {
        center_khz,
        bandwidth_khz,
        bit_rate_kbps: 1.0,
    };
    let two = BandPlan {
        channels: vec![ch(31.0, 1.0), ch(33.0, 1.0)],
        guard_khz: 0.1,
    };
    assert!(two.validate(&band).is_err());
    let crowded = BandPlan {
        channels: vec![ch(31.0, 1.0), ch(31.9, 1.0), ch(33.2, 1.0)],
        guard_khz: 0.2,
    };
    assert!(crowded.validate(&band).is_err());
    let empty = BandPlan {
        channels: vec![],
        guard_khz: 0.0,
    };
    assert!(empty.validate(&band).is_err());
}

#[test]
fn fdm_spec_assigns_channels_and_refits_packets() {
    let config = ScenarioConfig::default();
    let spec = config.network_spec().unwrap();
    let fdm = build_fdm_spec(&spec, &config.band_plan, &config.band().unwrap()).unwrap();
    assert_eq!(fdm.carriers.len(), 3);
    assert_eq!(fdm.pu_carrier, vec![0, 1, 2, 0]);
    assert_eq!(fdm.su_carrier, vec![0, 1, 2, 0]);
    let c = config.environment.sound_speed;
    let network = common::fdm_network(&config);
    for hop in &network.hops {
        let rate = fdm.carriers[hop.carrier].bit_rate_kbps * 1e3;
        assert!(hop.packet_bits % 8 == 0 && hop.packet_bits <= 12_000);
        assert!(hop.length / c + hop.packet_bits as f64 / rate <= config.slotting.slot_length + 1e-9);
        // One more byte would not fit.
        assert!(hop.length / c + (hop.packet_bits + 8) as f64 / rate > config.slotting.slot_length);
    }
    // Hops on different sub-channels never interfere.
    for e in network.overlap.entries() {
        assert_eq!(network.hops[e.interferer].carrier, network.hops[e.victim].carrier);
    }
}

#[test]
fn threshold_rule_needs_both_conditions() {
    assert!(threshold_rule(0.2, 0.05, 0.9));
    assert!(!threshold_rule(0.2, 0.15, 0.9));
    assert!(!threshold_rule(0.8, 0.05, 0.9));
    assert!(!threshold_rule(0.0, 0.0, 1.0));
}

#[test]
fn alignment_never_overlaps_primary_receptions() {
    let mut config = ScenarioConfig::default();
    config.slotting.horizon = 120;
    config.runs = 4;
    let point = run_single(config, &[Scheme::Ia]).unwrap();
    let result = &point.results[0];
    assert!(result.summary.su.mean > 0.0);
    for r in &result.runs {
        assert_eq!(r.su_overlap_bits, 0);
    }
}

#[test]
fn hits_primary_follows_the_overlap_table() {
    let network = common::network(&ScenarioConfig::default());
    for i in 0..network.n_su {
        assert!(!hits_primary(&network, i, 0));
        for j in 0..network.n_pu {
            let listed = network.overlap.entry(network.su_hop(i), network.pu_hop(j)).is_some();
            assert_eq!(hits_primary(&network, i, 1 << j), listed);
        }
    }
}

#[test]
fn threshold_schemes_respect_reuse_and_channels() {
    let mut config = ScenarioConfig::default();
    config.slotting.horizon = 90;
    config.runs = 3;
    config.beta = 0.5;
    let point = run_single(config, &[Scheme::Ctdm, Scheme::Cfdm]).unwrap();
    for r in &point.results {
        assert!(r.summary.pu_ratio.mean > 0.5, "{}", r.scheme);
    }
}
