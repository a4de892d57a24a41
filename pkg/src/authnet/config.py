"""Run configuration: a TOML file plus command-line overrides (flags win)."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from datetime import datetime
from pathlib import Path
from typing import Any

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from authnet.errors import ConfigError
from authnet.ingest.countermeasures import Countermeasure
from authnet.ingest.records import (
    IngestInputs,
    Protections,
    load_access_records,
    load_accounts,
    load_session_events,
    load_systems,
    parse_ts,
)
from authnet.outliers import DbscanParams

INPUT_FILES = {
    "access_records": "access_records.jsonl",
    "accounts": "accounts.jsonl",
    "session_events": "session_events.jsonl",
    "systems": "systems.jsonl",
}


@dataclass
class RunConfig:
    data_dir: Path | None = None
    paths: dict[str, Path] = field(default_factory=dict)
    window: tuple[datetime, datetime] | None = None
    tier_order: list[str] = field(default_factory=list)
    protections: Protections = Protections()
    countermeasures: list[Countermeasure] = field(default_factory=list)
    detect_prob: float = 0.1
    dbscan: DbscanParams = DbscanParams()
    seed: int = 0
    threads: int = 1
    out_dir: Path | None = None
    cluster: bool = False
    top_k: int = 20

    def input_path(self, key: str) -> Path | None:
        if key in self.paths:
            return self.paths[key]
        if self.data_dir is not None:
            return self.data_dir / INPUT_FILES[key]
        return None

    def load_inputs(self) -> IngestInputs:
        required = ("access_records", "accounts")
        found: dict[str, Path | None] = {}
        for key in INPUT_FILES:
            p = self.input_path(key)
            if p is not None and not p.is_file():
                if key in required or key in self.paths:
                    raise ConfigError(f"input file not found: {p}")
                p = None
            found[key] = p
        if found["access_records"] is None or found["accounts"] is None:
            raise ConfigError("no input data: pass --data DIR or set [inputs] in the config file")
        return IngestInputs(
            records=load_access_records(found["access_records"]),
            accounts=load_accounts(found["accounts"]),
            events=load_session_events(found["session_events"]) if found["session_events"] else [],
            systems=load_systems(found["systems"]) if found["systems"] else [],
            window=self.window,
            protections=self.protections,
        )


def _get(table: dict, key: str, kind: type, where: str):
    value = table.get(key)
    if value is None:
        return None
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind) or (kind is int and isinstance(value, bool)):
        raise ConfigError(f"[{where}] {key} must be {kind.__name__}")
    return value


def _epsilon(value: Any) -> float | str:
    if isinstance(value, str):
        if value != "auto":
            try:
                return float(value)
            except ValueError:
                raise ConfigError(f"epsilon must be a number or 'auto', got {value!r}") from None
        return value
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    raise ConfigError(f"epsilon must be a number or 'auto', got {value!r}")


def load_config(path: str | Path | None) -> RunConfig:
    cfg = RunConfig()
    if path is None:
        return cfg
    p = Path(path)
    try:
        doc = tomllib.loads(p.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {p}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{p}: {exc}") from None
    base = p.parent

    inputs = doc.get("inputs", {})
    if "data" in inputs:
        cfg.data_dir = (base / str(inputs["data"])).resolve()
    for key in INPUT_FILES:
        if key in inputs:
            cfg.paths[key] = (base / str(inputs[key])).resolve()

    win = doc.get("window", {})
    if win:
        try:
            cfg.window = (parse_ts(str(win["start"])), parse_ts(str(win["end"])))
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"[window] needs RFC 3339 start and end: {exc}") from None
        if not cfg.window[0] < cfg.window[1]:
            raise ConfigError("[window] start must precede end")

    tiers = doc.get("tiers", {}).get("order", [])
    if not isinstance(tiers, list) or not all(isinstance(t, str) for t in tiers):
        raise ConfigError("[tiers] order must be a list of labels, highest first")
    if len(set(tiers)) != len(tiers):
        raise ConfigError("[tiers] order has duplicate labels")
    cfg.tier_order = tiers

    prot = doc.get("protections", {})
    cfg.protections = Protections(
        wcg_all=bool(prot.get("wcg_all", False)),
        wcg_hosts=frozenset(prot.get("wcg_hosts", [])),
        protected_users=frozenset(prot.get("protected_users", [])),
        restricted_admin_hosts=frozenset(prot.get("restricted_admin_hosts", [])),
        no_domain_caching_hosts=frozenset(prot.get("no_domain_caching_hosts", [])),
    )

    cfg.countermeasures = [Countermeasure.parse(str(m)) for m in doc.get("countermeasures", {}).get("apply", [])]

    db = doc.get("dbscan", {})
    min_pts = _get(db, "min_pts", int, "dbscan")
    eps = _epsilon(db["epsilon"]) if "epsilon" in db else "auto"
    cfg.dbscan = DbscanParams(min_pts if min_pts is not None else 20, eps)

    det = doc.get("detection", {})
    dp = _get(det, "detect_prob", float, "detection")
    if dp is not None:
        cfg.detect_prob = dp

    run = doc.get("run", {})
    for key, kind in (("seed", int), ("threads", int), ("top_k", int)):
        val = _get(run, key, kind, "run")
        if val is not None:
            setattr(cfg, key, val)
    if "out" in run:
        cfg.out_dir = (base / str(run["out"])).resolve()
    if "cluster" in run:
        cfg.cluster = bool(run["cluster"])
    return cfg


def with_overrides(cfg: RunConfig, **flags: Any) -> RunConfig:
    """Apply command-line values that were actually given (not None)."""
    upd: dict[str, Any] = {}
    if flags.get("data") is not None:
        upd["data_dir"] = Path(flags["data"])
        # explicit file paths from the config would shadow the directory
        upd["paths"] = {}
    if flags.get("out") is not None:
        upd["out_dir"] = Path(flags["out"])
    for key in ("seed", "threads", "detect_prob", "top_k"):
        if flags.get(key) is not None:
            upd[key] = flags[key]
    if flags.get("cluster"):
        upd["cluster"] = True
    if flags.get("minpts") is not None or flags.get("epsilon") is not None:
        min_pts = flags["minpts"] if flags.get("minpts") is not None else cfg.dbscan.min_pts
        eps = _epsilon(flags["epsilon"]) if flags.get("epsilon") is not None else cfg.dbscan.epsilon
        upd["dbscan"] = DbscanParams(min_pts, eps)
    if flags.get("tiers"):
        upd["tier_order"] = [t.strip() for t in flags["tiers"].split(",") if t.strip()]
    if upd.get("threads") is not None and upd["threads"] < 1:
        raise ConfigError("--threads must be >= 1")
    return replace(cfg, **upd)
