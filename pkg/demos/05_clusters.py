# Four 2-D clusters: G-KMM against classical KMM, with an SVG of the weights.
import os
import sys

import numpy as np

from gkmm import default_config, run_scenario

out = sys.argv[1] if len(sys.argv) > 1 else "clusters_out"
res = run_scenario(default_config("clusters", seed=0))
paths = res.write(out, plot=True)

X = np.vstack(res.train_blocks)
w = np.concatenate(res.weights)
kmm = np.concatenate(res.kmm_weights)
near = np.abs(X[:, 0]) < 1.0
print("median weight, all train points  :", round(float(np.median(w)), 4))
print("median weight, near the boundary :", round(float(np.median(w[near])), 4))
print("median classical KMM weight      :", round(float(np.median(kmm)), 4))
print("wrote", ", ".join(os.path.basename(p) for p in paths), "to", out)
