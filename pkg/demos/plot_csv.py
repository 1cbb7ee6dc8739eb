"""Plot every numeric column of a CLI result CSV against its first column.

    python demos/plot_csv.py results/convert-ghz-to-w.csv [out.png]

Needs matplotlib, which the package itself does not depend on.
"""
import csv
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def main(path, out=None):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    names, units, data = rows[0], rows[1], np.array(rows[2:], dtype=float)
    fig, ax = plt.subplots(figsize=(7, 4))
    for k in range(1, len(names)):
        ax.plot(data[:, 0], data[:, k], label=names[k])
    ax.set_xlabel(f"{names[0]} [{units[0]}]")
    ax.legend(fontsize="small")
    fig.tight_layout()
    out = out or path.rsplit(".", 1)[0] + ".png"
    fig.savefig(out, dpi=120)
    print(out)


if __name__ == "__main__":
    main(*sys.argv[1:3])
