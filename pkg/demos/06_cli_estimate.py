# Drive `gkmm estimate` from CSV files, the way a shell user would.
import json
import os
import subprocess
import sys
import tempfile

import numpy as np

work = tempfile.mkdtemp(prefix="gkmm_")
rng = np.random.default_rng(0)
np.savetxt(os.path.join(work, "train_a.csv"), rng.normal(0, 1, (80, 2)), delimiter=",")
np.savetxt(os.path.join(work, "train_b.csv"), rng.normal(2, 1, (40, 2)), delimiter=",")
np.savetxt(os.path.join(work, "test.csv"), rng.normal(1, 0.7, (60, 2)), delimiter=",")

job = {
    "version": 1,
    "train": {"paths": ["train_a.csv", "train_b.csv"], "weights": [0.5, 0.5]},
    "test": {"paths": ["test.csv"]},
    "kernel": {"family": "rbf", "sigma": 0.5},
}
with open(os.path.join(work, "job.json"), "w") as fh:
    json.dump(job, fh, indent=1)

cmd = [sys.executable, "-m", "gkmm", "estimate", "--config", os.path.join(work, "job.json"),
       "--output", os.path.join(work, "out")]
proc = subprocess.run(cmd, capture_output=True, text=True)
print("exit", proc.returncode, proc.stderr.strip())
print(sorted(os.listdir(os.path.join(work, "out"))))
summary = json.load(open(os.path.join(work, "out", "summary.json")))
print("solver:", summary["solver"]["status"], "loss", round(summary["loss_fitted"], 3))

# a broken job fails before any data is read
job["train"]["weights"] = [0.6, 0.5]
with open(os.path.join(work, "bad.json"), "w") as fh:
    json.dump(job, fh)
proc = subprocess.run(cmd[:5] + [os.path.join(work, "bad.json")] + cmd[6:], capture_output=True, text=True)
print("exit", proc.returncode, proc.stderr.strip())
