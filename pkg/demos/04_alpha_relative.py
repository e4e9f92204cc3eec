# Relative density ratio: the test pool joins the train mixture with weight alpha.
import numpy as np

from gkmm import KernelConfig, PartitionedData, alpha_relative_config, assemble, fit_gkmm

rng = np.random.default_rng(3)
train_blocks = [rng.normal(m, 0.2, (n, 1)) for m, n in ((-0.5, 60), (0.5, 40), (1.5, 20))]
test = PartitionedData.from_blocks([rng.normal(0.8, 0.4, (50, 1))])

for alpha in (0.0, 0.25, 0.5):
    gamma = (1 - alpha) * np.array([0.5, 0.4, 0.1]) / 1.0
    train = alpha_relative_config(train_blocks, gamma, test.stacked(), alpha)
    rep = fit_gkmm(train, test, KernelConfig("rbf", 2.0))
    top = max(w.max() for w in rep.train_weights)
    print(f"alpha={alpha}: {train.n_blocks} blocks, weights {np.round(train.weights, 3)}, max r_hat {top:.2f}")

# the pipeline is nothing more than an extra block
alpha = 0.25
a = assemble(alpha_relative_config(train_blocks, [0.375, 0.3, 0.075], test.stacked(), alpha), test, KernelConfig())
b = assemble(PartitionedData.from_blocks(train_blocks + [test.stacked()], [0.375, 0.3, 0.075, alpha]),
             test, KernelConfig())
print("identical programs:", np.array_equal(a.P, b.P) and np.array_equal(a.q, b.q))
