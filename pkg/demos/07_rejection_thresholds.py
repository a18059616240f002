"""Turning unknown scores into accept/reject decisions.

Trains on known classes, then picks the rejection threshold as a percentile
of the known validation scores: by construction that fraction of known
samples is accepted, and everything scoring above is rejected as unknown.
"""

import numpy as np

from simplexnet import (
    REJECT,
    LossSpec,
    TrainConfig,
    build_centers,
    build_mlp,
    classify_with_rejection,
    gen_blobs,
    init_parameters,
    make_open_split,
    materialize_split,
    open_set_scores,
    train,
)


def main():
    full = gen_blobs(10, 16, 120, spread=1.0, seed=13)
    split = make_open_split(full, num_known=6, trial_seed=3)
    trial = materialize_split(full, split)

    model = init_parameters(build_mlp([16, 64, 8]), seed=1)
    centers = build_centers(6, 8, 64.0)
    config = TrainConfig(epochs=50, batch_size=64, optimizer="adam", lr=0.05,
                         seed=2, loss=LossSpec("dsc"))
    model, _ = train(model, trial.train, centers, config)

    feats = model.forward(trial.test_samples)
    known = trial.test_labels >= 0
    known_scores = open_set_scores(feats[known], centers)

    print(f"{'percentile':>10s} {'threshold':>12s} {'known kept':>11s} {'unknown rejected':>17s}")
    for pct in (90, 95, 99):
        tau = float(np.percentile(known_scores, pct))
        decisions = np.array(
            [classify_with_rejection(f, centers, tau).label for f in feats]
        )
        kept = float(np.mean(decisions[known] != REJECT))
        rejected = float(np.mean(decisions[~known] == REJECT))
        print(f"{pct:>10d} {tau:>12.1f} {kept:>11.3f} {rejected:>17.3f}")


if __name__ == "__main__":
    main()
