"""Why the dimension-raising block needs its nonlinearities.

A 10-class simplex needs 9 feature dimensions.  Starting from 4-D inputs,
the augmentation block (dense 4->9, ReLU, dense 9->9, ReLU) produces
features whose numerical rank genuinely exceeds 4.  Remove the activations
and the block collapses to one affine map: the output rank can never beat
the input dimension (plus the bias offset), no matter the width.
"""

import numpy as np

from simplexnet import DamBlock, NetworkModel, init_parameters


def numerical_rank(matrix, rel_threshold=1e-8):
    sigma = np.linalg.svd(matrix, compute_uv=False)
    return int(np.sum(sigma > rel_threshold * sigma[0]))


def main():
    print(f"{'seed':>4s} {'rank with ReLU':>15s} {'rank ablated':>13s}")
    with_relu, ablated = [], []
    for seed in range(10):
        x = np.random.default_rng(1000 + seed).standard_normal((200, 4))
        active = init_parameters(NetworkModel([DamBlock(4, 9, activations=True)]), seed=seed)
        linear = init_parameters(NetworkModel([DamBlock(4, 9, activations=False)]), seed=seed)
        r_active = numerical_rank(active.forward(x))
        r_linear = numerical_rank(linear.forward(x))
        with_relu.append(r_active)
        ablated.append(r_linear)
        print(f"{seed:>4d} {r_active:>15d} {r_linear:>13d}")
    print(f"\nReLU block: min rank {min(with_relu)} (inputs are 4-D, outputs 9-D)")
    print(f"affine-only block: max rank {max(ablated)} (can never exceed 4 + bias)")


if __name__ == "__main__":
    main()
