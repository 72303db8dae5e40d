"""One node's local learner: init, mini-batch SGD with momentum, evaluation.

Run: python3 demos/03_local_training.py
"""
import numpy as np

from decavg import (Batch, NodeState, OptimizerState, Shard, evaluate, gen_synthetic,
                    init_mlp, loss_and_grad, train_epochs)

full = gen_synthetic(classes=4, dims=8, per_class=100, spread=0.08, seed=2)
# samples are grouped by class; take the first 50 of each class for training
train_idx = np.concatenate([np.arange(c * 100, c * 100 + 50) for c in range(4)])
test_idx = np.concatenate([np.arange(c * 100 + 50, (c + 1) * 100) for c in range(4)])
ds = full

params = init_mlp([8, 32, 16, 4], seed=0)
print(f"MLP {params.layer_sizes}: {params.n_params} parameters "
      f"(the full-scale default [784,512,256,128,10] has 567,434)")

batch = Batch(ds.features[train_idx[:64]], ds.labels[train_idx[:64]])
loss, grads = loss_and_grad(params, batch)
print(f"initial batch loss {loss:.4f} (ln 4 = {np.log(4):.4f} for uniform predictions)")

opt = OptimizerState.for_params(params, lr=0.05, momentum=0.5)
shard = Shard.build(0, train_idx, ds)
node = NodeState.create(0, params, opt, shard, ds, rng=np.random.default_rng(0))

test = ds.subset(test_idx)
for epoch in range(0, 21, 5):
    acc, confusion = evaluate(node.params, test)
    print(f"after {epoch:2d} epochs: test accuracy {acc:.3f}")
    train_epochs(node, epochs=5, batch_size=32)

acc, confusion = evaluate(node.params, test)
print(f"final confusion matrix (rows = true class):\n{confusion}")
