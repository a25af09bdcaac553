# ----------------------------------------------------------------------

import csv
import numpy as np
import matplotlib.pyplot as plt

# ----------------------------------------------------------------------
if __name__ == '__main__':

    with open('data_few_shot_vs_supervised.csv', newline='') as fd:
        rows = list(csv.DictReader(fd))

    # one row per protocol, in the order of ``labels``
    labels = ['supervised', 'linear_probe', 'fine_tune', 'fine_tune\n(random init)']
    mean = np.array([float(r['mean_acc']) for r in rows])
    std = np.array([float(r['std_acc']) for r in rows])

    x = np.arange(len(rows))
    plt.figure(figsize=(4, 3))
    plt.bar(x, mean, yerr=std, capsize=3, color='C0')
    plt.axhline(1. / 3., color='k', ls='--', lw=0.8, label='chance')
    plt.xticks(x, labels[:len(rows)], fontsize=7)
    plt.ylabel(f'test accuracy, k = {rows[0]["k"]}')
    plt.legend(loc='best', fontsize=7)
    plt.tight_layout()
    plt.savefig('figure_few_shot.pdf')
    plt.show()
