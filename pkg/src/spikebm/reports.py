"""Delimited and JSON report files with embedded provenance.

Every file carries {seed, config_hash, version}: JSON documents under a
"provenance" key, CSV files as leading comment lines.  Data sections are
byte-identical across reruns of the same inputs, so no timestamps or other
environment-dependent values belong here.
"""

from __future__ import annotations

import hashlib
import json

import numpy as np

from . import __version__


def config_hash(doc) -> str:
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def provenance(seed, config_doc) -> dict:
    return {"seed": int(seed), "config_hash": config_hash(config_doc),
            "version": __version__}


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path, header, rows, prov: dict):
    with open(path, "w") as fh:
        for key, val in prov.items():
            fh.write(f"# {key}={val}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def write_json(path, doc: dict, prov: dict):
    out = {"provenance": prov, **doc}
    with open(path, "w") as fh:
        json.dump(out, fh, indent=2, sort_keys=True)
        fh.write("\n")


def trajectory_rows(traj):
    """Rows (t, unit, channel, theta, phi, x); x empty when no sample."""
    for t in range(traj.steps):
        for k, (unit, sym) in enumerate(traj.channels):
            x = traj.x[t, k]
            yield (t + 1, unit, sym, traj.theta[t, k], traj.phi[t, k],
                   "" if x < 0 else int(x))


def write_trajectory_csv(traj, path, prov: dict):
    write_csv(path, ("t", "unit", "channel", "theta", "phi", "x"),
              trajectory_rows(traj), prov)


def write_raster_csv(sim, path, prov: dict):
    rows = ((t + 1, i, int(sim.raster[t, i]))
            for t in range(sim.steps) for i in range(sim.net_n))
    write_csv(path, ("t", "neuron", "spike"), rows, prov)


def write_trace_csv(sim, path, prov: dict):
    """Simulator traces in the trajectory schema (theta=trace, phi=rate)."""
    rows = ((t + 1, i, "-", sim.traces[t, i], sim.rates[t, i],
             int(sim.raster[t, i]))
            for t in range(sim.steps) for i in range(sim.net_n))
    write_csv(path, ("t", "unit", "channel", "theta", "phi", "x"), rows, prov)


def write_field_csv(field, path, prov: dict):
    write_csv(path, ("y1", "y2", "sqnorm", "v1", "v2"), field, prov)


def write_pairs_csv(channels, pairs, path, prov: dict):
    names = [f"{unit}" if sym == "-" else f"{unit}:{sym}"
             for unit, sym in channels]
    rows = ((name, p[0], p[1]) for name, p in zip(names, pairs))
    write_csv(path, ("channel", "x", "y"), rows, prov)


def write_hist_csv(hist_rows, path, prov: dict):
    rows = ((lo, hi, int(count)) for lo, hi, count in hist_rows)
    write_csv(path, ("bin_lo", "bin_hi", "count"), rows, prov)
