"""
Clip encoder and decoder geometry
=================================

The 3-D convolutional backbone maps a clip (T, H, W, C) to a compact
bottleneck (T', H', W', d) and, for the reconstruction family, mirrors
it back.  This demo walks the named presets, runs a toy clip through
encoder and decoder, and shows where the one-class feature comes from.
"""
import numpy as np

from vadkit import backbone as bb

###############################################################################
# Named presets
# -------------
# "full" is the full-scale geometry (and "full_capacity" its doubled
# bottleneck variant); the toy presets keep the same architecture at
# desk-scale sizes, and "tiny" exists for finite-difference tests.

for name in ("full", "full_capacity", "toy", "toy_train", "tiny"):
    cfg = bb.get_preset(name)
    print(f"{name:15s} {str(cfg.input_shape):>20s} -> {cfg.bottleneck_shape}, "
          f"z_dim {cfg.z_dim}")

###############################################################################
# Encoding a clip
# ---------------
# Stages are strided convolutions with ReLU; every stride divides one
# or more axes exactly, so the bottleneck shape is checked at config
# construction, not discovered at run time.

rng = np.random.default_rng(0)
cfg = bb.get_preset("toy_train")
enc = bb.build_encoder(cfg, rng)
x = rng.uniform(-1, 1, size=(2, *cfg.input_shape))
h = bb.encode(enc, x, cfg)
print(f"\nencoded {x.shape} -> {h.shape}")

###############################################################################
# Decoding back to pixels
# -----------------------
# The decoder mirrors the encoder with transposed convolutions and ends
# in tanh, so reconstructions live in the same [-1, 1] range as inputs.

dec = bb.build_decoder(cfg, rng)
xhat = bb.decode(dec, h, cfg)
print(f"decoded {h.shape} -> {xhat.shape}, "
      f"output range [{xhat.min():.3f}, {xhat.max():.3f}]")

###############################################################################
# The one-class feature
# ---------------------
# For the one-class family the bottleneck is pooled over (T', H', W')
# and projected to a Z-dimensional vector; training pulls these vectors
# toward a fixed center.

head = bb.OcHead(cfg.feature_dim, cfg.z_dim, rng)
z = head.forward(h)
print(f"one-class features: {h.shape} -> {z.shape}")

###############################################################################
# Parameter budget
# ----------------

n_enc = sum(p.value.size for p in enc.params())
n_dec = sum(p.value.size for p in dec.params())
print(f"\nencoder parameters: {n_enc:,}; decoder parameters: {n_dec:,}")
