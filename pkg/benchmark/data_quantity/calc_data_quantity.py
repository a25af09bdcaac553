# ----------------------------------------------------------------------

import numpy as np

# ----------------------------------------------------------------------

from spikeclr.event_core import synth_moving_shapes
from spikeclr.config import TrainConfig, SplitSpec
from spikeclr.train_eval import run_data_quantity, aggregate, write_summary, write_results

# ----------------------------------------------------------------------
if __name__ == '__main__':

    pool = synth_moving_shapes(3, 67, sensor=(16, 16), seed=0)
    test = synth_moving_shapes(3, 20, sensor=(16, 16), seed=10007, name='shapes0-test')

    fractions = [0.25, 1.0]
    #fractions = [0.05, 0.1, 0.25, 0.5, 1.0] # full sweep
    cfg = TrainConfig(epochs=20, T=8)

    accuracies = {f: [] for f in fractions}
    all_reports = []
    for seed in range(5):
        spec = SplitSpec(k_per_class=5, num_splits=1, seed=seed)
        reports = run_data_quantity(pool, fractions, cfg.alter(seed=seed), spec,
                                    downstream=cfg.alter(epochs=30, seed=seed), test=test)
        for f, r in zip(fractions, reports):
            accuracies[f].extend(r.accuracies)
            print(f'--> seed {seed} fraction {f:5.2f} ({r.pretrain_dataset}): {r.accuracies[0]:.3f}')
        all_reports.extend(reports)

    for f in fractions:
        print(f'--> fraction {f:5.2f}: {np.mean(accuracies[f]):.3f} +- {np.std(accuracies[f], ddof=1):.3f}')

    write_summary([aggregate([r]) for r in all_reports], 'data_data_quantity_summary.csv')
    write_results(all_reports, 'data_data_quantity_results.csv')

    full, quarter = np.mean(accuracies[1.0]), np.mean(accuracies[0.25])
    assert full >= quarter, f'full pool {full:.3f} below quarter pool {quarter:.3f}'
