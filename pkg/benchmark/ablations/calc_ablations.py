
# ----------------------------------------------------------------------

from spikeclr.event_core import synth_moving_shapes
from spikeclr.config import TrainConfig, SplitSpec
from spikeclr.augment import FAMILIES
from spikeclr.train_eval import run_augment_ablation, run_loss_ablation, aggregate
from spikeclr.train_eval import write_summary

# ----------------------------------------------------------------------
if __name__ == '__main__':

    pool = synth_moving_shapes(3, 40, sensor=(16, 16), seed=0)
    test = synth_moving_shapes(3, 20, sensor=(16, 16), seed=10007, name='shapes0-test')

    cfg = TrainConfig(epochs=40, T=8)
    down = cfg.alter(epochs=30)
    spec = SplitSpec(k_per_class=5, num_splits=5)

    family_sets = [('spatial',), ('polarity',), ('temporal',),
                   ('spatial', 'polarity'), ('spatial', 'temporal'), FAMILIES]

    print('--> augmentation families')
    reports = run_augment_ablation(pool, family_sets, cfg, spec, down, test, threads=4)

    print('--> loss aggregation')
    reports += run_loss_ablation(pool, ['mean', 'temporal'], cfg, spec, down, test, threads=4)

    summaries = [aggregate([r]) for r in reports]
    for s in summaries:
        print(f'{s.pretrain_dataset:28s} {s.mean_acc:.3f} +- {s.std_acc:.3f}')
    write_summary(summaries, 'data_ablations.csv')
