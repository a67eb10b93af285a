"""
No-reference quality scoring: MSCN, distribution fits, SVR score
================================================================

Walks the quality metric bottom-up: normalize a mock-generated image into
MSCN coefficients, fit the symmetric and asymmetric distributions, assemble
the 36-feature vector, and score it with the bundled toy regression model.
"""

from importlib import resources

import numpy as np

from bannerforge.brisque import (brisque_features, compute_mscn, fit_aggd, fit_ggd,
                                 paired_products, to_luminance)
from bannerforge.clients import MockImageGenClient
from bannerforge.generation import GenParams
from bannerforge.svr import brisque_score, parse_svr_model

image_bytes = MockImageGenClient().generate(
    "plush dog bed in a sunlit living room", GenParams(width=256, height=192, steps=2))
gray = to_luminance(image_bytes)
print(f"luminance: shape {gray.shape}, range [{gray.min():.1f}, {gray.max():.1f}]")

mscn = compute_mscn(gray)
print(f"MSCN: mean {mscn.mean():+.4f}, std {mscn.std():.4f} "
      "(roughly centered, unit-ish spread)")

ggd = fit_ggd(mscn)
print(f"\nGGD fit of MSCN: alpha {ggd.alpha:.3f}, sigma^2 {ggd.sigma_sq:.4f}")
for name, pairs in zip(("H", "V", "D1", "D2"), paired_products(mscn)):
    aggd = fit_aggd(pairs)
    print(f"AGGD {name}: nu {aggd.nu:.3f}, mean {aggd.mean_feature:+.4f}, "
          f"sigma_l^2 {aggd.sigma_l_sq:.4f}, sigma_r^2 {aggd.sigma_r_sq:.4f}")

# Sanity landmarks: the fitter recovers known shapes from raw samples.
rng = np.random.default_rng(0)
print(f"\nfit on 10^6 Gaussian samples: alpha {fit_ggd(rng.normal(size=10**6)).alpha:.3f}")
print(f"fit on 10^6 Laplace  samples: alpha {fit_ggd(rng.laplace(size=10**6)).alpha:.3f}")

features = brisque_features(gray)
data_dir = resources.files("bannerforge").joinpath("data")
with resources.as_file(data_dir.joinpath("toy_svr_model.txt")) as model_path, \
        resources.as_file(data_dir.joinpath("toy_svr_range.txt")) as range_path:
    model = parse_svr_model(model_path, range_path)
score = brisque_score(features, model)
print(f"\n36-feature vector -> toy SVR score: {score:.2f} (lower is better)")
