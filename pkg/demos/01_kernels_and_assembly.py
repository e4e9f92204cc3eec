# Walk through the pieces of the quadratic program on a tiny 1-D case.
import numpy as np

from gkmm import KernelConfig, PartitionedData, assemble, block_coefficients, gram

train = PartitionedData.from_blocks([np.array([[0.0], [1.0]])])
test = PartitionedData.from_blocks([np.array([[0.0]])])
rbf = KernelConfig("rbf", 1.0)

# K = exp(-sigma |x - y|^2); sigma is an inverse squared length scale
print("gram(train, test):\n", gram(train.stacked(), test.stacked(), rbf))

prob = assemble(train, test, rbf)
print("P =", prob.P, " q =", prob.q, " xi =", prob.xi)
print("expected P = (1 + 3e^-2)/2 =", 0.5 * (1 + 3 * np.exp(-2)))

# the same program built block by block
coef = block_coefficients(train, test, rbf)
P, q = coef.reduce()
print("block form agrees:", np.allclose(P, prob.P), np.allclose(q, prob.q))

# two train partitions with unequal mixing weights
rng = np.random.default_rng(0)
train2 = PartitionedData.from_blocks([rng.normal(-1, 0.5, (30, 1)), rng.normal(1, 0.5, (10, 1))], [0.3, 0.7])
prob2 = assemble(train2, test, KernelConfig())
print("b =", prob2.size, "eps =", round(prob2.eps, 4), "default sigma =", prob2.kernel.sigma)
