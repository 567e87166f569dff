#!/usr/bin/env python3
"""High-precision reference evaluation of the shadowing and frequency formulas.

Independent of the C++ implementation: uses mpmath at 50 significant digits
and straight-line arithmetic in mixed units (mm for geometry, nm for resist
and widths). Prints every golden value the C++ tests freeze; with --check it
compares against the frozen constants below and exits non-zero on mismatch.
"""
import sys
from mpmath import mp, mpf, cos, sin, sqrt, radians

mp.dps = 50

D_PRIME = mpf(650)       # mm
R_PIVOT = mpf("62.5")    # mm
H = mpf(600)             # nm
T_B = mpf(35)            # nm
DW = mpf(25)             # nm


def source_distance(alpha_deg, d_prime=D_PRIME, r=R_PIVOT):
    return d_prime * cos(radians(alpha_deg)) - r


def crucible(alpha_deg):
    return (mpf(0), D_PRIME * sin(radians(alpha_deg)), source_distance(alpha_deg))


def dist_to_crucible(alpha_deg, x, y):
    cx, cy, cz = crucible(alpha_deg)
    return sqrt((x - cx) ** 2 + (y - cy) ** 2 + cz ** 2)


def width_vertical(w, x, alpha_deg=35):
    return w + DW - abs(x) * H / source_distance(alpha_deg)


def bottom_thickness(x, y, alpha_deg=35):
    d = source_distance(alpha_deg)
    return T_B * (D_PRIME - R_PIVOT) ** 2 * d / dist_to_crucible(alpha_deg, x, y) ** 3


def lip_width(x, y, alpha_deg=35):
    ys = D_PRIME * sin(radians(alpha_deg))
    return -T_B * (D_PRIME - R_PIVOT) ** 2 * (ys - y) / dist_to_crucible(alpha_deg, x, y) ** 3


def lip_height(wt, y, alpha_deg=35):
    ys = D_PRIME * sin(radians(alpha_deg))
    return source_distance(alpha_deg) * wt / (ys - y)


def top_width_full(wt, x, y, alpha_deg=35):
    d = source_distance(alpha_deg)
    dh = bottom_thickness(x, y, alpha_deg)
    hp = H + dh
    hlip = lip_height(wt, y, alpha_deg) + dh
    wl = lip_width(x, y, alpha_deg)
    if y >= 0:
        loss = wl + hp * abs(y) / d
    else:
        loss = max(hp * abs(y) / d, wl + hlip * abs(y) / d)
    return wt + DW - loss


def frequency(g_us, fc=mpf(270), m=mpf(134)):
    # M in GHz/mS equals MHz/uS
    return sqrt(8 * fc * m * g_us) - fc


GOLDEN = {
    "source_distance_35": source_distance(35),
    "source_distance_0": source_distance(0),
    "width_200_x50": width_vertical(200, 50),
    "bottom_thickness_O": bottom_thickness(0, 0),
    "bottom_thickness_O_alpha0": bottom_thickness(0, 0, 0),
    "bottom_thickness_p50": bottom_thickness(0, 50),
    "bottom_thickness_m50": bottom_thickness(0, -50),
    "lip_width_O": lip_width(0, 0),
    "lip_width_p30": lip_width(0, 30),
    "lip_width_m30": lip_width(0, -30),
    "lip_height_O_200": lip_height(200, 0),
    "top_width_full_O_200": top_width_full(200, 0, 0),
    "top_width_full_m40_200": top_width_full(200, 0, -40),
    "top_width_full_p40_200": top_width_full(200, 0, 40),
    "area_basic_O": width_vertical(200, 0) ** 2 / 10 ** 6,
    "area_sidewall_O": (width_vertical(200, 0) + 2 * bottom_thickness(0, 0)) * width_vertical(200, 0) / 10 ** 6,
    "area_ratio_x50": width_vertical(200, 50) / width_vertical(200, 0),
    "area_ratio_x34": width_vertical(200, 34) / width_vertical(200, 0),
    "frequency_100": frequency(100),
    "frequency_0": frequency(0),
}

# Frozen copies of the values above, as asserted in the C++ tests.
FROZEN = {
    "source_distance_35": 469.948828787845,
    "source_distance_0": 587.5,
    "width_200_x50": 161.163262546307,
    "bottom_thickness_O": 26.299762841746,
    "bottom_thickness_O_alpha0": 35.0,
    "bottom_thickness_p50": 30.6318815640632,
    "bottom_thickness_m50": 22.4720644081808,
    "lip_width_O": -20.8644008886265,
    "lip_width_p30": -21.0400883927469,
    "lip_width_m30": -20.5209876208454,
    "lip_height_O_200": 252.101778355709,
    "top_width_full_O_200": 245.864400888627,
    "top_width_full_m40_200": 171.956284509539,
    "top_width_full_p40_200": 192.454073863829,
    "area_basic_O": 0.050625,
    "area_sidewall_O": 0.0624598932787857,
    "area_ratio_x50": 0.716281166872477,
    "area_ratio_x34": 0.807071193473284,
    "frequency_100": 5109.96282515037,
    "frequency_0": -270.0,
}


def main():
    for k, v in GOLDEN.items():
        print(f"{k} = {mp.nstr(v, 15)}")
    if "--check" in sys.argv:
        bad = []
        for k, v in FROZEN.items():
            if abs(GOLDEN[k] - v) > mpf("1e-12") * max(1, abs(v)):
                bad.append((k, GOLDEN[k], v))
        for k, got, want in bad:
            print(f"MISMATCH {k}: oracle {mp.nstr(got, 12)} frozen {want}")
        return 1 if bad else 0
    return 0


if __name__ == "__main__":
    sys.exit(main())
