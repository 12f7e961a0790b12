"""Seeded synthetic data: overlapping Gaussian clusters and labeled conn.log text."""

from __future__ import annotations

import numpy as np

from cascadeids.core import Dataset, rng_for

CONN_LOG_FIELDS = (
    "ts", "uid", "id.orig_h", "id.orig_p", "id.resp_h", "id.resp_p", "proto", "service",
    "duration", "orig_bytes", "resp_bytes", "conn_state", "local_orig", "local_resp",
    "missed_bytes", "history", "orig_pkts", "orig_ip_bytes", "resp_pkts", "resp_ip_bytes",
    "tunnel_parents", "label", "detailed-label",
)


def make_overlapping_clusters(
    n_benign: int = 5000,
    n_malicious: int = 100,
    n_features: int = 6,
    separation: float = 2.5,
    seed: int = 0,
) -> Dataset:
    """Benign rows from one wide Gaussian, malicious rows from two tighter ones.

    The malicious clusters sit ``separation`` standard deviations from the
    benign mean along different axes, so the classes overlap.
    """
    rng = rng_for(seed, 0xC1)
    benign = rng.normal(0.0, 1.0, size=(n_benign, n_features))
    centers = np.zeros((2, n_features))
    centers[0, 0] = separation
    centers[1, 1 % n_features] = -separation
    if n_features > 2:
        centers[1, 2] = separation / 2
    which = rng.integers(0, 2, size=n_malicious)
    malicious = centers[which] + rng.normal(0.0, 0.6, size=(n_malicious, n_features))
    X = np.vstack([benign, malicious])
    y = np.concatenate([np.zeros(n_benign, np.int64), np.ones(n_malicious, np.int64)])
    perm = rng.permutation(X.shape[0])
    return Dataset(X[perm], y[perm], tuple(f"x{j}" for j in range(n_features)))


def _fmt(value) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def make_conn_log(n_rows: int = 200, malicious_fraction: float = 0.2, seed: int = 0, start_ts: float = 1545403816.0) -> str:
    """Labeled Zeek conn.log text in the IoT-23 layout.

    Malicious flows are mostly telnet scans and IRC-like beacons, benign
    flows DNS/HTTP/NTP chatter; a share of each class borrows the other's
    shape so the problem is not trivially separable.
    """
    rng = rng_for(seed, 0xF10)
    lines = [
        "#separator \\x09",
        "#set_separator\t,",
        "#empty_field\t(empty)",
        "#unset_field\t-",
        "#path\tconn",
        "#fields\t" + "\t".join(CONN_LOG_FIELDS),
        "#types\ttime\tstring\taddr\tport\taddr\tport\tenum\tstring\tinterval\tcount\tcount\tstring\tbool\tbool"
        "\tcount\tstring\tcount\tcount\tcount\tcount\tset[string]\tstring\tstring",
    ]
    hosts = [f"192.168.1.{k}" for k in (132, 195, 200, 210)]
    ts = start_ts
    for i in range(n_rows):
        ts += float(rng.exponential(45.0))
        malicious = rng.random() < malicious_fraction
        shape = malicious if rng.random() > 0.1 else not malicious
        orig = hosts[int(rng.integers(0, len(hosts)))]
        detail = "C&C-HeartBeat"
        if shape:
            kind = rng.random()
            if kind < 0.7:
                detail = "PartOfAHorizontalPortScan"
                resp = f"{rng.integers(1, 224)}.{rng.integers(0, 256)}.{rng.integers(0, 256)}.{rng.integers(1, 255)}"
                resp_port = int(rng.choice([23, 2323, 22]))
                proto, service = "tcp", None
                duration = None if rng.random() < 0.7 else float(rng.exponential(3.0))
                ob, rb = (None, None) if duration is None else (0, 0)
                state, history = ("S0", "S") if duration is None else ("REJ", "Sr")
                opk, rpk = int(rng.integers(1, 3)), 0 if state == "S0" else 1
            else:
                resp = "185.244.25.235"
                detail = "C&C"
                resp_port = int(rng.choice([6667, 8080]))
                proto, service = "tcp", "irc" if resp_port == 6667 else None
                duration = float(rng.exponential(20.0))
                ob, rb = int(rng.integers(20, 400)), int(rng.integers(0, 300))
                state, history = "SF", "ShAdDaFf"
                opk, rpk = int(rng.integers(3, 12)), int(rng.integers(2, 10))
        else:
            kind = rng.random()
            if kind < 0.5:
                resp, resp_port, proto, service = "192.168.1.1", 53, "udp", "dns"
                duration = float(rng.exponential(0.05))
                ob, rb = int(rng.integers(30, 80)), int(rng.integers(60, 300))
                state, history = "SF", "Dd"
                opk, rpk = 1, 1
            elif kind < 0.8:
                resp = f"104.{rng.integers(16, 32)}.{rng.integers(0, 256)}.{rng.integers(1, 255)}"
                resp_port, proto = int(rng.choice([80, 443])), "tcp"
                service = "http" if resp_port == 80 else "ssl"
                duration = float(rng.exponential(2.0))
                ob, rb = int(rng.integers(200, 2000)), int(rng.integers(500, 40000))
                state, history = "SF", "ShADadFf"
                opk, rpk = int(rng.integers(5, 30)), int(rng.integers(5, 60))
            else:
                resp, resp_port, proto, service = "147.231.100.5", 123, "udp", None
                duration = float(rng.exponential(0.1))
                ob, rb = 48, 48
                state, history = "SF", "Dd"
                opk, rpk = 1, 1
        orig_port = int(rng.integers(1024, 65536))
        oib = None if opk is None else opk * 40 + (ob or 0)
        rib = None if rpk is None else rpk * 40 + (rb or 0)
        label = "Malicious" if malicious else "Benign"
        if not malicious:
            detail = "-"
        row = [
            f"{ts:.6f}", f"C{i:07d}", orig, orig_port, resp, resp_port, proto, service,
            duration, ob, rb, state, "-", "-", 0, history, opk, oib, rpk, rib, "(empty)", label, detail,
        ]
        lines.append("\t".join(_fmt(v) for v in row))
    lines.append("#close\t2019-01-01-00-00-00")
    return "\n".join(lines) + "\n"
