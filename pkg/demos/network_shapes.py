"""Walk the default convolutional network layer by layer.

Run: python3 demos/network_shapes.py
"""

import numpy as np

from ghho.network import default_spec, forward, init_weights, shape_chain, weight_layout

spec = default_spec()
for name, shape in shape_chain(spec):
    print(f"{name:<18} {shape}")

# parameter blocks; the optimiser searches only the last dense layer
layout = weight_layout(spec)
for block in layout:
    print(f"{block.name:<28} {str(block.shape):<20} {block.size:>8}")
weights = init_weights(spec, seed=0)
head = weights.head_slice()
print("total parameters", len(weights), "searched head", head.stop - head.start)

# one forward pass on a random 143x143 image plus three side features
record = []
probs = forward(spec, weights, np.random.default_rng(0).random((1, 143, 143)), [0.2, 0.4, 0.6],
                record=record)
print("recorded", dict(record)["conv1"], dict(record)["conv2"])
print("class probabilities", np.round(probs, 4))
