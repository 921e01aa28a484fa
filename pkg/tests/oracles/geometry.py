"""Independent geometry oracle.

Written against textbook formulas only (rotation matrices for the orbit,
the Earth-central-angle visibility test) and used to freeze golden values
in ``golden.json``.  Nothing here imports the package.
"""

import math

MU = 3.986004418e14
R = 6378137.0
OMEGA = 7.2921159e-5
C = 299792458.0


def period(altitude):
    return 2 * math.pi * math.sqrt((R + altitude) ** 3 / MU)


def _rz(a, v):
    c, s = math.cos(a), math.sin(a)
    return (c * v[0] - s * v[1], s * v[0] + c * v[1], v[2])


def _rx(a, v):
    c, s = math.cos(a), math.sin(a)
    return (v[0], c * v[1] - s * v[2], s * v[1] + c * v[2])


def sat_eci(planes, spp, inc_deg, alt, p, i, t, phasing=0.0):
    r = R + alt
    n = 2 * math.pi / period(alt)
    u = 2 * math.pi * (i + phasing * p) / spp + n * t
    v = (r * math.cos(u), r * math.sin(u), 0.0)
    v = _rx(math.radians(inc_deg), v)
    return _rz(2 * math.pi * p / planes, v)


def site_ecef_unit(lat, lon):
    la, lo = math.radians(lat), math.radians(lon)
    return (math.cos(la) * math.cos(lo), math.cos(la) * math.sin(lo), math.sin(la))


def visible_count(planes, spp, inc_deg, alt, lat, lon, mask_deg, t):
    """Count satellites whose Earth-central angle to the site is within the coverage half-angle."""
    eps = math.radians(mask_deg)
    lam = math.acos(R * math.cos(eps) / (R + alt)) - eps
    s = site_ecef_unit(lat, lon)
    count = 0
    for p in range(planes):
        for i in range(spp):
            x = _rz(-OMEGA * t, sat_eci(planes, spp, inc_deg, alt, p, i, t))
            norm = math.sqrt(sum(c * c for c in x))
            cosg = sum(a * b / norm for a, b in zip(x, s))
            if math.acos(max(-1.0, min(1.0, cosg))) <= lam:
                count += 1
    return count


def generate():
    alt = 550e3
    T = period(alt)
    times = [k * T / 60 for k in range(60)]
    counts = [visible_count(72, 22, 53.0, alt, 42.0, -8.687812, 25.0, t) for t in times]
    return {
        "period_550km": T,
        "zenith_delay_550km_s": alt / C,
        "visible_times": times,
        "visible_counts_42N_25deg": counts,
    }


if __name__ == "__main__":
    import json
    import pathlib

    out = pathlib.Path(__file__).with_name("golden.json")
    out.write_text(json.dumps(generate(), indent=1) + "\n")
