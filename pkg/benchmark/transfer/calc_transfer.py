
# ----------------------------------------------------------------------

from spikeclr.event_core import synth_moving_shapes
from spikeclr.config import TrainConfig, SplitSpec
from spikeclr.train_eval import run_transfer, run_few_shot, pretrain, aggregate
from spikeclr.train_eval import write_summary

# ----------------------------------------------------------------------
if __name__ == '__main__':

    # -- Source shapes at twice the target resolution, disjoint classes

    source = synth_moving_shapes(4, 40, sensor=(32, 32), seed=1, class_offset=3)
    target = synth_moving_shapes(3, 40, sensor=(16, 16), seed=0)
    test = synth_moving_shapes(3, 20, sensor=(16, 16), seed=10007, name='shapes0-test')

    cfg = TrainConfig(epochs=40, T=8)
    down = cfg.alter(epochs=30)

    summaries = []
    for k in [1, 5]:
        spec = SplitSpec(k_per_class=k, num_splits=5)

        print('--> transfer, k =', k)
        transfer = run_transfer(source, target, cfg, spec, downstream=down, test=test)

        print('--> in-domain, k =', k)
        encoder, _ = pretrain(target, cfg)
        in_domain = run_few_shot('fine_tune', target, spec, down, encoder=encoder, test=test,
                                 pretrain_dataset=target.name)

        for r in [transfer, in_domain]:
            s = aggregate([r])
            print(f'{s.pretrain_dataset:12s} -> {s.dataset:12s} {s.mean_acc:.3f} +- {s.std_acc:.3f}')
            summaries.append(s)

    write_summary(summaries, 'data_transfer.csv')
