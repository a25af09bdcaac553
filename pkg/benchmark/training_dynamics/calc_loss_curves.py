# ----------------------------------------------------------------------

import sys
import numpy as np

# ----------------------------------------------------------------------

from spikeclr.event_core import synth_moving_shapes
from spikeclr.config import TrainConfig
from spikeclr.train_eval import ContrastiveTrainer, pretrain

# ----------------------------------------------------------------------
if __name__ == '__main__':

    pool = synth_moving_shapes(3, 67, sensor=(16, 16), seed=0)
    print('-->', pool.name, len(pool), 'samples')

    # -- Default configuration, 20 epochs

    trainer = ContrastiveTrainer(pool, TrainConfig(epochs=20))
    _, report = trainer.run()
    curve = np.array(report.loss_curve)
    ratio = curve.min() / curve[0]

    print('--> loss', curve[0], '->', curve.min(), 'ratio', ratio)
    print('--> similarity', trainer.similarity_curve[0], '->', trainer.similarity_curve[-1])
    print('--> spread', trainer.spread_curve[0], '->', trainer.spread_curve[-1])
    print('--> firing rates', trainer.rate_curve[-1])

    np.savez('data_default_curve.npz', loss=curve, similarity=trainer.similarity_curve,
             spread=trainer.spread_curve, dead=report.dead_embeddings)

    assert ratio <= 0.8, f'loss only fell to {ratio:.3f} of its first epoch value'

    # -- Temperature and number of time bins

    if '--scan' in sys.argv:
        scan = [dict(tau=tau) for tau in [0.1, 0.2, 0.5, 1.0]]
        scan += [dict(T=T) for T in [2, 4, 16]]

        curves, dead = [], []
        for kwargs in scan:
            cfg = TrainConfig(epochs=20, **kwargs)
            print('--> pretrain', kwargs)
            _, report = pretrain(pool, cfg)
            curves.append(report.loss_curve)
            dead.append(report.dead_embeddings)
            print('--> loss', report.loss_curve[0], '->', report.loss_curve[-1],
                  'dead embeddings', report.dead_embeddings)

        np.savez('data_loss_curves.npz', labels=[str(s) for s in scan],
                 curves=np.array(curves), dead=np.array(dead))
