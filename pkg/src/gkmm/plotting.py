"""Static SVG plots for scenario results. Decorative only."""
import os

import numpy as np


def _figure():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "gkmm"
    return plt


def _save(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None})


def plot_scenario(result, outdir) -> list:
    plt = _figure()
    paths = []
    X = np.vstack(result.train_blocks)
    w = np.concatenate(result.weights)
    Xte = result.test.stacked()
    if X.shape[1] == 2:
        panels = [("G-KMM", w)]
        if result.kmm_weights is not None:
            panels.append(("KMM", np.concatenate(result.kmm_weights)))
        fig, axes = plt.subplots(1, len(panels), figsize=(5 * len(panels), 4.5), squeeze=False)
        for ax, (name, wts) in zip(axes[0], panels):
            ax.scatter(Xte[:, 0], Xte[:, 1], s=4, c="0.75", label="test")
            sc = ax.scatter(X[:, 0], X[:, 1], s=6, c=wts, cmap="viridis", label="train")
            fig.colorbar(sc, ax=ax)
            ax.set_title(f"{name} weights")
        path = os.path.join(outdir, "weights.svg")
        _save(fig, path)
        plt.close(fig)
        return [path]

    fig, (left, right) = plt.subplots(1, 2, figsize=(10, 4))
    bins = np.linspace(min(X.min(), Xte.min()), max(X.max(), Xte.max()), 50)
    left.hist(X[:, 0], bins=bins, density=True, alpha=0.4, label="train")
    left.hist(X[:, 0], bins=bins, weights=w, density=True, alpha=0.4, label="weighted train")
    left.hist(Xte[:, 0], bins=bins, density=True, alpha=0.4, label="test")
    left.legend()
    if result.targets:
        right.scatter(X[:, 0], result.targets["train"], s=3, c="0.6", label="train")
        right.scatter(Xte[:, 0], result.targets["test"], s=5, c="C3", label="test")
        right.set_title(f"MAE weighted {result.mae_weighted:.4f}, unweighted {result.mae_unweighted:.4f}")
        right.legend()
    path = os.path.join(outdir, "scenario.svg")
    _save(fig, path)
    plt.close(fig)
    paths.append(path)
    return paths
