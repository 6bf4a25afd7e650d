"""CSV / JSON / NDJSON serialization for data, parameters, and samples.

Long CSV formats (UTF-8, '.' decimal separator, 0-based time, 1-based ids):

    network     header ``t,i,j,y``; unlisted off-diagonal pairs are treated
                as missing unless loaded with dense_zero=True
    attributes  header ``t,i,k,x``
    dyad covariates   header ``i,j,s1,...,sq`` (one row per pair)
    node covariates   header ``i,s1,...,sq``

JSON parameter/prior files and NDJSON sample streams flatten matrices
column-major (vec of H is [H11, H21, ..., H12, ...]); vectors are plain
lists and scalars may be given for constant-filled blocks.
"""

from __future__ import annotations

import csv
import json

import numpy as np

from .data import (
    AttributeSeries,
    CovariateSpec,
    DataFormatError,
    McrParams,
    ModelMode,
    NetworkSeries,
    ValidationError,
)
from .gibbs import PosteriorSamples, PriorSpec


def _parse_rows(path, expected_header, n_numeric):
    """Yield (line_number, fields) from a long CSV, with strict checks."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path}: empty file")
        header = [h.strip() for h in header]
        if expected_header is not None and header != expected_header:
            raise DataFormatError(
                f"{path}: expected header {','.join(expected_header)}, "
                f"got {','.join(header)}"
            )
        for ln, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if n_numeric is not None and len(row) != n_numeric:
                raise DataFormatError(
                    f"{path}:{ln}: expected {n_numeric} fields, got {len(row)}"
                )
            try:
                vals = [float(x) for x in row]
            except ValueError as exc:
                raise DataFormatError(f"{path}:{ln}: {exc}") from exc
            yield ln, vals
    if expected_header is None:
        return


def load_network_csv(path, directed=False, dense_zero=False):
    """Read a ``t,i,j,y`` long file into a NetworkSeries.

    Node count and time range are inferred. Unlisted off-diagonal entries
    become missing (or 0 with ``dense_zero``); duplicate or conflicting
    rows are rejected with their line numbers.
    """
    rows = []
    max_t, max_id = -1, 0
    for ln, (t, i, j, y) in _parse_rows(path, ["t", "i", "j", "y"], 4):
        ti, ni, nj = int(t), int(i), int(j)
        if ti != t or ni != i or nj != j:
            raise DataFormatError(f"{path}:{ln}: t, i, j must be integers")
        if ti < 0:
            raise DataFormatError(f"{path}:{ln}: time {ti} is negative")
        if ni < 1 or nj < 1:
            raise DataFormatError(
                f"{path}:{ln}: node ids are 1-based, got ({ni},{nj})"
            )
        if ni == nj:
            raise DataFormatError(
                f"{path}:{ln}: diagonal entry ({ni},{ni}) is undefined"
            )
        rows.append((ln, ti, ni - 1, nj - 1, y))
        max_t = max(max_t, ti)
        max_id = max(max_id, ni, nj)
    if max_t < 0:
        raise DataFormatError(f"{path}: no data rows")
    m, T = max_id, max_t + 1
    values = np.zeros((T, m, m))
    seen = np.zeros((T, m, m), dtype=bool)
    listed = {}
    for ln, t, i, j, y in rows:
        if (t, i, j) in listed:
            raise DataFormatError(
                f"{path}:{ln}: duplicate entry (t={t}, i={i + 1}, j={j + 1}); "
                f"first seen at line {listed[(t, i, j)]}"
            )
        if not directed and (t, j, i) in listed:
            if values[t, j, i] != y:
                raise DataFormatError(
                    f"{path}:{ln}: undirected value conflicts with line "
                    f"{listed[(t, j, i)]} for pair ({j + 1},{i + 1})"
                )
            listed[(t, i, j)] = ln
            continue  # redundant but consistent mirror listing
        values[t, i, j] = y
        seen[t, i, j] = True
        listed[(t, i, j)] = ln
        if not directed:
            values[t, j, i] = y
            seen[t, j, i] = True
    offdiag = ~np.eye(m, dtype=bool)
    missing = ~seen & offdiag[None, :, :]
    if dense_zero:
        missing = None
    elif not missing.any():
        missing = None
    return NetworkSeries(values, directed=directed, missing=missing)


def load_attributes_csv(path):
    """Read a ``t,i,k,x`` long file into an AttributeSeries."""
    rows = []
    max_t = max_i = max_k = -1
    for ln, (t, i, k, x) in _parse_rows(path, ["t", "i", "k", "x"], 4):
        ti, ni, nk = int(t), int(i), int(k)
        if ti < 0 or ni < 1 or nk < 1:
            raise DataFormatError(
                f"{path}:{ln}: need t >= 0 and 1-based i, k"
            )
        rows.append((ln, ti, ni - 1, nk - 1, x))
        max_t, max_i, max_k = max(max_t, ti), max(max_i, ni - 1), max(max_k, nk - 1)
    if max_t < 0:
        raise DataFormatError(f"{path}: no data rows")
    values = np.zeros((max_t + 1, max_i + 1, max_k + 1))
    seen = np.zeros(values.shape, dtype=bool)
    first_line = {}
    for ln, t, i, k, x in rows:
        if seen[t, i, k]:
            raise DataFormatError(
                f"{path}:{ln}: duplicate entry (t={t}, i={i + 1}, k={k + 1}); "
                f"first seen at line {first_line[(t, i, k)]}"
            )
        values[t, i, k] = x
        seen[t, i, k] = True
        first_line[(t, i, k)] = ln
    missing = None if seen.all() else ~seen
    return AttributeSeries(values, missing=missing)


def load_dyad_covariates_csv(path, m, directed=False):
    """Read ``i,j,s1..sq`` rows into an (m, m, q) tensor (complete pairs)."""
    with open(path, newline="", encoding="utf-8") as fh:
        header = next(csv.reader(fh))
    q = len(header) - 2
    if q < 1 or [h.strip() for h in header[:2]] != ["i", "j"]:
        raise DataFormatError(
            f"{path}: expected header i,j,s1..sq, got {','.join(header)}"
        )
    out = np.zeros((m, m, q))
    seen = np.zeros((m, m), dtype=bool)
    for ln, vals in _parse_rows(path, None, 2 + q):
        i, j = int(vals[0]) - 1, int(vals[1]) - 1
        if not (0 <= i < m and 0 <= j < m) or i == j:
            raise DataFormatError(
                f"{path}:{ln}: pair ({int(vals[0])},{int(vals[1])}) out of "
                f"range for m={m}"
            )
        if seen[i, j]:
            raise DataFormatError(f"{path}:{ln}: duplicate pair")
        out[i, j] = vals[2:]
        seen[i, j] = True
        if not directed:
            out[j, i] = vals[2:]
            seen[j, i] = True
    offdiag = ~np.eye(m, dtype=bool)
    if not seen[offdiag].all():
        n_miss = int((~seen[offdiag]).sum())
        raise DataFormatError(
            f"{path}: covariates must cover every pair; {n_miss} missing"
        )
    return out


def load_node_covariates_csv(path, m):
    """Read ``i,s1..sq`` rows into an (m, q) matrix (complete nodes)."""
    with open(path, newline="", encoding="utf-8") as fh:
        header = next(csv.reader(fh))
    q = len(header) - 1
    if q < 1 or header[0].strip() != "i":
        raise DataFormatError(
            f"{path}: expected header i,s1..sq, got {','.join(header)}"
        )
    out = np.zeros((m, q))
    seen = np.zeros(m, dtype=bool)
    for ln, vals in _parse_rows(path, None, 1 + q):
        i = int(vals[0]) - 1
        if not 0 <= i < m:
            raise DataFormatError(f"{path}:{ln}: node id out of range for m={m}")
        if seen[i]:
            raise DataFormatError(f"{path}:{ln}: duplicate node")
        out[i] = vals[1:]
        seen[i] = True
    if not seen.all():
        raise DataFormatError(
            f"{path}: covariates must cover every node; "
            f"{int((~seen).sum())} missing"
        )
    return out


def write_network_csv(path, network):
    """Write the observed entries (each undirected dyad once)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "i", "j", "y"])
        m = network.m
        for t in range(network.n_plus_1):
            for i in range(m):
                start = 0 if network.directed else i + 1
                for j in range(start, m):
                    if i == j:
                        continue
                    if network.missing is not None and network.missing[t, i, j]:
                        continue
                    w.writerow([t, i + 1, j + 1, repr(float(network.values[t, i, j]))])


def write_attributes_csv(path, attributes):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "i", "k", "x"])
        for t in range(attributes.n_plus_1):
            for i in range(attributes.m):
                for k in range(attributes.p):
                    if attributes.missing is not None \
                            and attributes.missing[t, i, k]:
                        continue
                    w.writerow([t, i + 1, k + 1, repr(float(attributes.values[t, i, k]))])


def _mat_to_json(M):
    return np.asarray(M, dtype=float).flatten(order="F").tolist()


def _mat_from_json(value, rows, cols, name):
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return np.full((rows, cols), float(arr))
    if arr.ndim == 1:
        if arr.size != rows * cols:
            raise ValidationError(
                f"{name}: expected {rows * cols} entries, got {arr.size}"
            )
        return arr.reshape(rows, cols, order="F")
    if arr.shape != (rows, cols):
        raise ValidationError(f"{name}: expected shape ({rows},{cols})")
    return arr


def _vec_from_json(value, length, name):
    arr = np.asarray(value, dtype=float).ravel()
    if arr.size == 1 and length != 1:
        return np.full(length, float(arr[0]))
    if arr.size != length:
        raise ValidationError(f"{name}: expected {length} entries, got {arr.size}")
    return arr


def params_to_dict(params, mode=None):
    out = {
        "p": params.p,
        "q_dyad": params.q_dyad,
        "q_node": params.q_node,
        "directed": params.directed,
        "gamma": params.gamma.tolist(),
        "alpha1": params.alpha1,
        "alpha2": params.alpha2,
        "H": _mat_to_json(params.H),
        "Gamma": _mat_to_json(params.Gamma),
        "A": _mat_to_json(params.A),
        "C1": _mat_to_json(params.C1),
        "C2": None if params.C2 is None else _mat_to_json(params.C2),
        "sigma2": params.sigma2,
        "Sigma": _mat_to_json(params.Sigma),
    }
    return out


def params_from_dict(d, m=None, directed=None):
    """Build McrParams from a JSON dict (scalars broadcast to blocks)."""
    if directed is None:
        directed = bool(d.get("directed", d.get("alpha2") is not None))
    p = int(d.get("p", 0))
    from .data import n_dyads

    q_dyad = int(d.get("q_dyad", n_dyads(m, directed) if m else 1))
    q_node = int(d.get("q_node", m if m else 1))
    kwargs = dict(
        gamma=_vec_from_json(d.get("gamma", 0.0), q_dyad, "gamma"),
        alpha1=float(d.get("alpha1", 0.0)),
        H=_mat_from_json(d.get("H", 0.0), p, p, "H"),
        Gamma=_mat_from_json(d.get("Gamma", 0.0), p, q_node, "Gamma"),
        A=_mat_from_json(d.get("A", 0.0), p, p, "A"),
        C1=_mat_from_json(d.get("C1", 0.0), p, p, "C1"),
        sigma2=float(d.get("sigma2", 1.0)),
        Sigma=_mat_from_json(d["Sigma"], p, p, "Sigma")
        if "Sigma" in d and d["Sigma"] is not None else None,
    )
    if directed:
        kwargs["alpha2"] = float(d.get("alpha2") or 0.0)
        kwargs["C2"] = _mat_from_json(d.get("C2", 0.0), p, p, "C2")
    return McrParams(**kwargs)


def load_params_json(path, m=None):
    with open(path, encoding="utf-8") as fh:
        d = json.load(fh)
    return params_from_dict(d, m=m), d


def load_prior_json(path):
    with open(path, encoding="utf-8") as fh:
        d = json.load(fh)
    known = {
        "v_beta", "v_b", "nu0", "sigma0_sq", "s0", "eta0", "z_prior_mean",
        "z_prior_var", "cut_prior_mean", "cut_prior_var", "v_init",
    }
    unknown = set(d) - known
    if unknown:
        raise ValidationError(
            f"{path}: unknown prior fields {sorted(unknown)}"
        )
    if "s0" in d and d["s0"] is not None:
        s0 = np.asarray(d["s0"], dtype=float)
        if s0.ndim == 1:
            n = int(round(np.sqrt(s0.size)))
            s0 = s0.reshape(n, n, order="F")
        d["s0"] = s0
    return PriorSpec(**d)


def dump_json(obj, path):
    """Deterministic JSON writing (sorted keys, fixed float repr)."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2, allow_nan=False)
        fh.write("\n")


def samples_to_ndjson(samples, path):
    """One JSON object per retained draw; matrices column-major."""
    d = samples.draws
    with open(path, "w", encoding="utf-8") as fh:
        for s in range(samples.n_draws):
            rec = {
                "chain": int(samples.chain_id[s])
                if samples.chain_id is not None else 0,
                "gamma": d["gamma"][s].tolist(),
                "alpha1": float(d["alpha1"][s]),
                "alpha2": float(d["alpha2"][s]) if "alpha2" in d else None,
                "H": _mat_to_json(d["H"][s]),
                "Gamma": _mat_to_json(d["Gamma"][s]),
                "A": _mat_to_json(d["A"][s]),
                "C1": _mat_to_json(d["C1"][s]),
                "C2": _mat_to_json(d["C2"][s]) if "C2" in d else None,
                "sigma2": float(d["sigma2"][s]),
                "Sigma": _mat_to_json(d["Sigma"][s]),
            }
            for key, arr in samples.extras.items():
                a = np.asarray(arr[s])
                rec[key] = float(a) if a.ndim == 0 else \
                    a.flatten(order="F").tolist()
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def samples_from_ndjson(path):
    """Rebuild a PosteriorSamples from an NDJSON stream.

    Shapes are inferred: p from A, q_dyad from gamma, q_node from Gamma;
    extra keys (thresholds, initial-state blocks) are kept 1-d per draw.
    """
    records = []
    with open(path, encoding="utf-8") as fh:
        for ln, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise DataFormatError(f"{path}:{ln}: {exc}") from exc
    if not records:
        raise DataFormatError(f"{path}: no draws")
    first = records[0]
    p = int(round(np.sqrt(len(first["A"])))) if first["A"] else 0
    q_dyad = len(first["gamma"])
    q_node = len(first["Gamma"]) // p if p else 1
    directed = first.get("alpha2") is not None
    S = len(records)
    draws = {
        "gamma": np.empty((S, q_dyad)),
        "alpha1": np.empty(S),
        "H": np.empty((S, p, p)),
        "Gamma": np.empty((S, p, q_node)),
        "A": np.empty((S, p, p)),
        "C1": np.empty((S, p, p)),
        "sigma2": np.empty(S),
        "Sigma": np.empty((S, p, p)),
    }
    if directed:
        draws["alpha2"] = np.empty(S)
        draws["C2"] = np.empty((S, p, p))
    core = set(draws) | {"chain", "alpha2", "C2"}
    extras = {k: [] for k in first if k not in core}
    chain_id = np.zeros(S, dtype=int)
    for s, rec in enumerate(records):
        chain_id[s] = int(rec.get("chain", 0))
        draws["gamma"][s] = rec["gamma"]
        draws["alpha1"][s] = rec["alpha1"]
        draws["sigma2"][s] = rec["sigma2"]
        for name in ("H", "A", "C1", "Sigma"):
            draws[name][s] = np.asarray(rec[name]).reshape(p, p, order="F")
        draws["Gamma"][s] = np.asarray(rec["Gamma"]).reshape(p, q_node,
                                                             order="F")
        if directed:
            draws["alpha2"][s] = rec["alpha2"]
            draws["C2"][s] = np.asarray(rec["C2"]).reshape(p, p, order="F")
        for k in extras:
            extras[k].append(rec[k])
    extras = {k: np.asarray(v) for k, v in extras.items()}
    mode = ModelMode(direction="directed" if directed else "undirected")
    return PosteriorSamples(
        draws=draws, burn_in=0, thin=1, seed=0, mode=mode,
        chains=int(chain_id.max()) + 1, chain_id=chain_id, extras=extras,
    )


def write_latent_trajectories_csv(path, latent_mean):
    """Aligned posterior-mean latent trajectories as ``t,i,k,xhat`` rows."""
    T, m, p = latent_mean.shape
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "i", "k", "xhat"])
        for t in range(T):
            for i in range(m):
                for k in range(p):
                    w.writerow([t, i + 1, k + 1, repr(float(latent_mean[t, i, k]))])
