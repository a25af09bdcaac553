# ----------------------------------------------------------------------

import numpy as np

# ----------------------------------------------------------------------

from spikeclr.event_core import synth_moving_shapes
from spikeclr.config import TrainConfig, SplitSpec
from spikeclr.train_eval import pretrain, run_few_shot, combine_reports, aggregate
from spikeclr.train_eval import initial_models, write_summary

# ----------------------------------------------------------------------
if __name__ == '__main__':

    # ------------------------------------------------------------------
    # -- Data

    sensor = (16, 16)
    pool = synth_moving_shapes(3, 67, sensor=sensor, seed=0)
    test = synth_moving_shapes(3, 20, sensor=sensor, seed=10007, name='shapes0-test')

    # ------------------------------------------------------------------
    # -- Stages

    pre_cfg = TrainConfig(epochs=20)
    down_cfg = pre_cfg.alter(epochs=30)
    #down_cfg = pre_cfg.alter(epochs=5) # quick look

    seeds = range(5)
    runs = dict(supervised=[], linear_probe=[], fine_tune=[], random=[])
    for seed in seeds:
        print('--> seed', seed)
        encoder, report = pretrain(pool, pre_cfg.alter(seed=seed))
        print('--> final loss', report.loss_curve[-1])
        random_encoder = initial_models(pool, pre_cfg.alter(seed=seed), head=False)[0]

        spec = SplitSpec(k_per_class=5, num_splits=1, seed=seed)
        cfg = down_cfg.alter(seed=seed)
        runs['supervised'].append(run_few_shot('supervised', pool, spec, cfg, test=test))
        runs['linear_probe'].append(run_few_shot('linear_probe', pool, spec, cfg, encoder=encoder,
                                                 test=test, pretrain_dataset=pool.name))
        runs['fine_tune'].append(run_few_shot('fine_tune', pool, spec, cfg, encoder=encoder,
                                              test=test, pretrain_dataset=pool.name))
        runs['random'].append(run_few_shot('fine_tune', pool, spec, cfg, encoder=random_encoder,
                                           test=test, pretrain_dataset='random'))

    summaries = []
    for name, reports in runs.items():
        s = aggregate([combine_reports(reports, config=name)])
        print(f'{name:14s} {s.mean_acc:.3f} +- {s.std_acc:.3f}  '
              + ' '.join(f'{a:.3f}' for r in reports for a in r.accuracies))
        summaries.append(s)

    # -- Store to disk

    write_summary(summaries, 'data_few_shot_vs_supervised.csv')

    fine = [a for r in runs['fine_tune'] for a in r.accuracies]
    supervised = [a for r in runs['supervised'] for a in r.accuracies]
    probe = [a for r in runs['linear_probe'] for a in r.accuracies]
    assert np.mean(fine) > np.mean(supervised), \
        f'fine-tune {np.mean(fine):.3f} does not beat supervised {np.mean(supervised):.3f}'
    assert min(probe) > 1. / 3., f'linear probe at or below chance on a seed: {probe}'
