"""Walk through the propagation stack: two-slope pathloss, blockage
classification, and a full channel draw for one user drop.

Run:  python3 demos/pathloss_and_channels.py
"""

import numpy as np

from risalloc import (breakpoint_distance, desk_config, deploy, is_blocked,
                      pathloss_umi_los, pathloss_umi_nlos, synth_channels)

cfg = desk_config()
fc = cfg.carrier_freq          # GHz
h_bs, h_ue = cfg.bs_height, cfg.ue_height

print("== two-slope line-of-sight law ==")
bp = breakpoint_distance(h_bs, h_ue, fc * 1e9)
print(f"breakpoint at {bp:.1f} m for a {h_bs:.0f} m mast, {h_ue:.1f} m terminal, {fc:.0f} GHz")

for d in (10, 50, 100, 500, 1000, 2000, 4000):
    d3d = float(np.hypot(d, h_bs - h_ue))
    los = pathloss_umi_los(d, d3d, fc, h_bs, h_ue)
    nlos = pathloss_umi_nlos(d, d3d, fc, h_bs, h_ue)
    slope = "near" if d <= bp else "far "
    print(f"  d2d={d:5d} m ({slope} slope)  LOS {los:7.2f} dB   NLOS {nlos:7.2f} dB")

# the NLOS law is a max with the LOS branch, so it can never be kinder
assert all(
    pathloss_umi_nlos(d, d, fc, h_bs, h_ue) >= pathloss_umi_los(d, d, fc, h_bs, h_ue)
    for d in (15, 150, 1500)
)

print()
print("== blockage test on a street segment ==")
walls = np.array([[35.0, 0.0, 1.0, 8.0, 0.0]])   # cx, cy, len, wid, angle
a = np.array([0.0, 0.0, h_bs])
b = np.array([70.0, 0.0, h_ue])
print(f"segment (0,0) -> (70,0) vs a wall at x=35: blocked = {is_blocked(a, b, walls)}")
print(f"same wall, path shifted to y=30:          blocked = "
      f"{is_blocked(np.array([0., 30., h_bs]), np.array([70., 30., h_ue]), walls)}")

print()
print("== one full channel draw ==")
dep = deploy(cfg, seed=3)
ch = synth_channels(cfg, dep, seed=5)
print(f"{cfg.num_ues} users, {cfg.n_bs_antennas} antennas, "
      f"{cfg.ris_side}x{cfg.ris_side} surface")
print(f"h_direct {ch.h_direct.shape}, g_ris {ch.g_ris.shape}, h_rb {ch.h_rb.shape}")
print("per-user link state (direct, via-surface):")
for k in range(cfg.num_ues):
    d_amp = float(np.abs(ch.h_direct[k, 0]))
    r_amp = float(np.abs(ch.g_ris[k, 0]))
    los_d = "LOS " if ch.los_flags[k, 0] else "NLOS"
    los_r = "LOS " if ch.los_flags[k, 1] else "NLOS"
    print(f"  user {k}: direct {los_d} |h|~{d_amp:.2e}   surface {los_r} |g|~{r_amp:.2e}")
print(f"feeder link amplitude |h_rb| ~ {float(np.abs(ch.h_rb[0, 0])):.2e} "
      f"(always line of sight)")
