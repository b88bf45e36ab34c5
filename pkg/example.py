import logging

import minicity
import numpy as np

logging.basicConfig(level=logging.DEBUG)


@minicity.timing
def crash_experiment(name, trials):
    cfg = minicity.Parser(name).parse()
    summary = minicity.run_batch(cfg, trials)
    print(name, minicity.format_mean_std(*summary.crash_rate))

    return summary


@minicity.timing
def stopping(trials):
    cfg = minicity.Parser('tableV_stopping').parse()
    table = minicity.stopping_experiment(cfg, trials_per_cell=trials)
    print(minicity.stopping_table(table))

    return table


@minicity.timing
def mapping(loops, seed):
    layout, drive, cfg = minicity.parse_drive('mapping_drive')
    drive.update(loops=loops, seed=seed)
    records = minicity.mapping_drive(layout, **drive)
    gt = minicity.build_city(layout, cfg.resolution)
    est = minicity.ParticleFilter(cfg, gt, records[0].pose, np.random.default_rng(seed)).run(records)
    print(minicity.map_report(minicity.evaluate_maps(gt, est)))

    return est


# Crash rates with and without the infrastructure warnings
crash_experiment('tableIII_commA', 20)
crash_experiment('tableIII_commB', 20)

# Stopping distance per approach and intersection scale
stopping(5)

# One lap of the mapping drive, then the filter
mapping(1, 0)
