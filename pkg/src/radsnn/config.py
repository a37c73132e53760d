"""Flat key=value configuration files.

Lines are ``key = value``; blank lines and ``#`` comments are ignored.
Known keys and their meanings are documented in the README. Unknown keys
are rejected with a list of all offending lines so typos surface at once.
"""

from __future__ import annotations

from pathlib import Path

from .dumptools import FluenceLedger, LedgerEntry
from .faultsim import SCOPES, FaultModel
from .network import NetworkConfig
from .plasticity import SdspParams


class ConfigError(ValueError):
    pass


def _to_bool(s: str) -> bool:
    low = s.strip().lower()
    if low in ("1", "true", "on", "yes"):
        return True
    if low in ("0", "false", "off", "no"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


_KEY_TYPES = {
    "net.n_pre": int, "net.n_post": int, "net.n_inputs": int,
    "net.n_outputs": int, "net.theta_v": int, "net.leak_v": int,
    "net.refractory": int, "net.t_steps": int, "net.r_max": float,
    "sdsp.theta_up": int, "sdsp.ca1": int, "sdsp.ca2": int, "sdsp.ca3": int,
    "sdsp.ca_max": int, "sdsp.ca_leak_period": int, "sdsp.w_min": int,
    "sdsp.w_max": int, "sdsp.teacher_current": int, "sdsp.enabled": _to_bool,
    "fault.sigma": float, "fault.flux": float, "fault.eta": float,
    "fault.scope": str, "fault.seed": int, "fault.mttu_s": float,
    "campaign.period_hours": float, "campaign.n_periods": int,
    "campaign.n_seeds": int, "campaign.base_seed": int,
    "campaign.learning": _to_bool, "campaign.tmr": _to_bool,
    "campaign.schedule": str, "campaign.eval_size": int,
    "campaign.epoch_size": int, "campaign.workers": int,
    "pretrain.passes": int, "pretrain.train_size": int, "pretrain.seed": int,
    "data.dir": str,
}


class Config:
    """Parsed configuration with typed lookups."""

    def __init__(self, values: dict[str, object] | None = None):
        self.values: dict[str, object] = dict(values or {})

    @classmethod
    def parse(cls, text: str, source: str = "<config>") -> "Config":
        values: dict[str, object] = {}
        problems = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                problems.append(f"{source}:{lineno}: missing '=' in {raw.strip()!r}")
                continue
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if key.startswith("ledger."):
                leaf = key.rsplit(".", 1)[-1]
                if leaf not in ("runtime_s", "fluence"):
                    problems.append(f"{source}:{lineno}: unknown ledger field {key!r}")
                    continue
                caster = float
            elif key in _KEY_TYPES:
                caster = _KEY_TYPES[key]
            else:
                problems.append(f"{source}:{lineno}: unknown key {key!r}")
                continue
            try:
                values[key] = caster(value)
            except ValueError as exc:
                problems.append(f"{source}:{lineno}: bad value for {key}: {exc}")
        if problems:
            raise ConfigError("\n".join(problems))
        return cls(values)

    @classmethod
    def load(cls, path: str | Path) -> "Config":
        return cls.parse(Path(path).read_text(), source=str(path))

    def get(self, key: str, default=None):
        return self.values.get(key, default)

    # -- typed builders --------------------------------------------------------

    def network_config(self) -> NetworkConfig:
        g = self.get
        return NetworkConfig(
            n_pre=g("net.n_pre", 256), n_post=g("net.n_post", 256),
            n_inputs=g("net.n_inputs", 256), n_outputs=g("net.n_outputs", 10),
            theta_v=g("net.theta_v", 64), leak_v=g("net.leak_v", 1),
            refractory=g("net.refractory", 2), t_steps=g("net.t_steps", 64),
            r_max=g("net.r_max", 0.5),
        )

    def sdsp_params(self) -> SdspParams:
        g = self.get
        d = SdspParams()
        return SdspParams(
            theta_up=g("sdsp.theta_up", d.theta_up),
            ca1=g("sdsp.ca1", d.ca1), ca2=g("sdsp.ca2", d.ca2),
            ca3=g("sdsp.ca3", d.ca3), ca_max=g("sdsp.ca_max", d.ca_max),
            ca_leak_period=g("sdsp.ca_leak_period", d.ca_leak_period),
            w_min=g("sdsp.w_min", d.w_min), w_max=g("sdsp.w_max", d.w_max),
            teacher_current=g("sdsp.teacher_current", d.teacher_current),
            enabled=g("sdsp.enabled", d.enabled),
        )

    def fault_model(self) -> FaultModel:
        scope = self.get("fault.scope", "relevant_bits")
        if scope not in SCOPES:
            raise ConfigError(f"fault.scope must be one of {SCOPES}, got {scope!r}")
        seed = self.get("fault.seed", 0)
        mttu = self.get("fault.mttu_s")
        defaults = FaultModel()
        eta = self.get("fault.eta", defaults.eta)
        if mttu is not None:
            return FaultModel.from_mttu(mttu, scope=scope, eta=eta, seed=seed)
        return FaultModel(
            sigma=self.get("fault.sigma", defaults.sigma),
            flux=self.get("fault.flux", 0.0),
            eta=eta, scope=scope, seed=seed,
        )

    def ledger(self) -> FluenceLedger | None:
        names = []
        for key in self.values:
            if key.startswith("ledger."):
                name = key.split(".")[1]
                if name not in names:
                    names.append(name)
        if not names:
            return None
        entries = []
        for name in names:
            runtime = self.get(f"ledger.{name}.runtime_s")
            fluence = self.get(f"ledger.{name}.fluence")
            if runtime is None or fluence is None:
                raise ConfigError(
                    f"ledger entry {name!r} needs both runtime_s and fluence"
                )
            entries.append(LedgerEntry(name, runtime, fluence))
        return FluenceLedger(entries)
