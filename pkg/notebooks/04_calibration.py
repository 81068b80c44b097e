# %% [markdown]
# # Fitting EM-equivalent sizes
# Synthetic landmarks: T1 at mid-link, T2 at four points between mid-link and
# RX, both with c = 0.25 m and h = 1.35 m. The least-squares surface is
# rippled along h (the head-top edge moves through successive Fresnel zones),
# so the fit only reaches the true sizes from a start inside their basin.

# %%
import numpy as np

from kedfl import LandmarkMeasurement, ScenarioGeometry, calibrate
from kedfl.calibration import predicted_shift, residuals

geom = ScenarioGeometry.from_frequency(5.0, 0.9, 2.486e9)
truth = [(0.25, 1.35)] * 2
places = [((2.5, 0.0), (x, 0.0)) for x in (3.0, 3.5, 4.0, 4.5)]
shift = predicted_shift(geom, [LandmarkMeasurement(p, 0.0) for p in places], truth, "pmbm")
landmarks = [LandmarkMeasurement(p, -50.0 + s) for p, s in zip(places, shift)]

# %%
hs = np.arange(1.0, 1.81, 0.05)
cost = [float(np.sum(residuals(geom, landmarks, [(0.25, h)] * 2, "pmbm", mu0=-50.0) ** 2)) for h in hs]
for h, v in zip(hs, cost):
    print(f"h = {h:4.2f}  cost = {v:8.3f} dB^2")

# %%
for init in [(0.4, 1.7), (0.27, 1.38)]:
    fit = calibrate(geom, landmarks, [init] * 2, "pmbm", mu0=-50.0, shared=True)
    print(f"init {init}: c = {fit.c[0]:.4f}, h = {fit.h[0]:.4f}, residual {fit.rss:.2e} dB^2, {fit.iterations} it")
