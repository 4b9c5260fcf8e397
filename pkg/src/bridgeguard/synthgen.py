"""Synthetic labeled corpora of bridge transactions.

Templates follow the documented call-chain patterns: a full deposit chain
(user -> router.deposit -> token.transferFrom -> vault, with Lock and
Deposit events), its withdrawal mirror, a source-chain attack that skips
the token-transfer subcall while still emitting the deposit event, and a
target-chain attack that deploys a contract, drives the router mint path,
and self-destructs. Benign noise calls (price oracles, fee collectors) are
attached so classes are not separable by vertex count alone.

Everything is a pure function of (config, seed): addresses, amounts, noise
placement, and the final corpus order all derive from the seed. Bridge
contract addresses stay fixed per corpus, mirroring real deployments.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidConfig
from .features import DEPOSIT_EVENT, LOCK_EVENT, UNLOCK_EVENT, WITHDRAWAL_EVENT
from .hashing import derive_seed, event_topic, selector
from .ingest import (
    DatasetManifest,
    ManifestEntry,
    TxRecord,
    record_from_document,
    save_manifest,
    save_trace_file,
)

NOISE_OFF = (0.0, 0)

SOURCE_CHAIN_ID = 1
TARGET_CHAIN_ID = 56

SEL_DEPOSIT = selector("deposit(address,uint256)")
SEL_WITHDRAW = selector("withdraw(address,uint256)")
SEL_TRANSFER_FROM = selector("transferFrom(address,address,uint256)")
SEL_TRANSFER = selector("transfer(address,uint256)")
SEL_MINT = selector("mint(address,uint256)")

TOPIC_LOCK = event_topic(LOCK_EVENT)
TOPIC_DEPOSIT = event_topic(DEPOSIT_EVENT)
TOPIC_UNLOCK = event_topic(UNLOCK_EVENT)
TOPIC_WITHDRAWAL = event_topic(WITHDRAWAL_EVENT)


@dataclass
class GenConfig:
    n_normal: int = 4000
    attack_rate: float = 0.005
    src_tgt_ratio: float = 0.5  # fraction of attacks on the source chain
    noise: tuple[float, int] = (0.5, 3)  # (extra benign call probability, depth jitter)
    seed: int = 0

    def validate(self) -> None:
        if self.n_normal < 0:
            raise InvalidConfig("n_normal must be >= 0")
        if not 0.0 < self.attack_rate < 1.0:
            raise InvalidConfig("attack_rate must be in (0, 1)")
        if not 0.0 <= self.src_tgt_ratio <= 1.0:
            raise InvalidConfig("src_tgt_ratio must be in [0, 1]")
        prob, jitter = self.noise
        if not 0.0 <= prob <= 1.0 or jitter < 0:
            raise InvalidConfig("noise must be (probability, non-negative jitter)")


@dataclass
class SynthTx:
    record: TxRecord
    label: str
    template_id: str


def _addr(*parts: object) -> str:
    h = hashlib.blake2b("|".join(str(p) for p in parts).encode(), digest_size=20)
    return "0x" + h.hexdigest()


def _tx_hash(*parts: object) -> str:
    h = hashlib.blake2b("|".join(str(p) for p in parts).encode(), digest_size=32)
    return "0x" + h.hexdigest()


@dataclass(frozen=True)
class BridgeEnv:
    """Per-corpus fixed contract deployment."""
    router: str
    token: str
    vault: str
    noise_pool: tuple[tuple[str, str, str], ...]  # (kind, address, input)

    @classmethod
    def from_seed(cls, seed: int) -> "BridgeEnv":
        oracles = [("STATICCALL", _addr(seed, "oracle", i),
                    "0x" + selector("latestAnswer()")) for i in range(3)]
        collectors = [("CALL", _addr(seed, "collector", i),
                       "0x" + selector("collectFee(address)")) for i in range(2)]
        registry = [("STATICCALL", _addr(seed, "registry"), "0x")]
        return cls(
            router=_addr(seed, "router"),
            token=_addr(seed, "token"),
            vault=_addr(seed, "vault"),
            noise_pool=tuple(oracles + collectors + registry),
        )


def _node(kind: str, frm: str, to: str, input_hex: str = "0x",
          value: int = 0, calls: list | None = None) -> dict:
    return {"type": kind, "from": frm, "to": to, "input": input_hex,
            "value": hex(value), "calls": calls if calls is not None else []}


def _log(emitter: str, topic0: str, index: int, amount: int) -> dict:
    return {"address": emitter, "topics": [topic0],
            "data": "0x" + format(amount, "064x"), "logIndex": index}


def _calldata(sel: str, *words: int) -> str:
    return "0x" + sel + "".join(format(w % (1 << 256), "064x") for w in words)


def _walk(node: dict, depth: int = 0):
    yield node, depth
    for child in node["calls"]:
        yield from _walk(child, depth + 1)


def _apply_noise(trace: dict, rng: np.random.Generator,
                 noise: tuple[float, int], env: BridgeEnv) -> None:
    prob, jitter = noise
    if prob <= 0.0:
        return
    extra = int(rng.binomial(len(env.noise_pool), prob))
    for _ in range(extra):
        hosts = [node for node, depth in _walk(trace)
                 if depth <= jitter and node["type"] != "SELFDESTRUCT"]
        host = hosts[int(rng.integers(len(hosts)))]
        kind, target, input_hex = env.noise_pool[int(rng.integers(len(env.noise_pool)))]
        value = int(rng.integers(0, 10**15)) if kind == "CALL" else 0
        child = _node(kind, host["to"], target, input_hex, value)
        host["calls"].insert(int(rng.integers(len(host["calls"]) + 1)), child)


def _finish(trace: dict, logs: list[dict], label: str, template_id: str,
            seed: int, chain_id: int, noise: tuple[float, int],
            env: BridgeEnv) -> SynthTx:
    rng = np.random.default_rng(derive_seed(seed, "noise"))
    _apply_noise(trace, rng, noise, env)
    doc = {
        "tx_hash": _tx_hash(seed, "tx"),
        "chain_id": chain_id,
        "block_number": int(rng.integers(15_000_000, 20_000_000)),
        "sender": trace["from"],
        "trace": trace,
        "logs": logs,
    }
    return SynthTx(record=record_from_document(doc), label=label, template_id=template_id)


def gen_normal_deposit(seed: int, noise: tuple[float, int] = NOISE_OFF,
                       env: BridgeEnv | None = None) -> SynthTx:
    """Source-chain deposit: full lock chain plus Lock and Deposit events."""
    env = env or BridgeEnv.from_seed(derive_seed(seed, "env"))
    rng = np.random.default_rng(derive_seed(seed, "amounts"))
    user = _addr(seed, "eoa")
    amount = int(rng.integers(1, 10**9)) * 10**9
    vault_leg = _node("CALL", env.token, env.vault, "0x", amount)
    token_leg = _node("CALL", env.router, env.token,
                      _calldata(SEL_TRANSFER_FROM, 1, 2, amount), 0, [vault_leg])
    trace = _node("CALL", user, env.router, _calldata(SEL_DEPOSIT, 1, amount),
                  0, [token_leg])
    logs = [_log(env.token, TOPIC_LOCK, 0, amount),
            _log(env.router, TOPIC_DEPOSIT, 1, amount)]
    return _finish(trace, logs, "Normal", "normal_deposit", seed,
                   SOURCE_CHAIN_ID, noise, env)


def gen_normal_withdrawal(seed: int, noise: tuple[float, int] = NOISE_OFF,
                          env: BridgeEnv | None = None) -> SynthTx:
    """Target-chain withdrawal: release chain plus Unlock and Withdrawal events."""
    env = env or BridgeEnv.from_seed(derive_seed(seed, "env"))
    rng = np.random.default_rng(derive_seed(seed, "amounts"))
    relayer = _addr(seed, "eoa")
    recipient = _addr(seed, "recipient")
    amount = int(rng.integers(1, 10**9)) * 10**9
    payout = _node("CALL", env.token, recipient, "0x", amount)
    token_leg = _node("CALL", env.router, env.token,
                      _calldata(SEL_TRANSFER, 1, amount), 0, [payout])
    trace = _node("CALL", relayer, env.router, _calldata(SEL_WITHDRAW, 1, amount),
                  0, [token_leg])
    logs = [_log(env.token, TOPIC_UNLOCK, 0, amount),
            _log(env.router, TOPIC_WITHDRAWAL, 1, amount)]
    return _finish(trace, logs, "Normal", "normal_withdrawal", seed,
                   TARGET_CHAIN_ID, noise, env)


def gen_attack_src(seed: int, noise: tuple[float, int] = NOISE_OFF,
                   env: BridgeEnv | None = None) -> SynthTx:
    """Source-chain attack: deposit event without the token-transfer subcall."""
    env = env or BridgeEnv.from_seed(derive_seed(seed, "env"))
    rng = np.random.default_rng(derive_seed(seed, "amounts"))
    attacker = _addr(seed, "eoa")
    amount = int(rng.integers(1, 10**9)) * 10**9
    trace = _node("CALL", attacker, env.router, _calldata(SEL_DEPOSIT, 1, amount))
    logs = [_log(env.router, TOPIC_DEPOSIT, 0, amount)]
    return _finish(trace, logs, "AttackSrc", "attack_src", seed,
                   SOURCE_CHAIN_ID, noise, env)


def gen_attack_tgt(seed: int, noise: tuple[float, int] = NOISE_OFF,
                   env: BridgeEnv | None = None) -> SynthTx:
    """Target-chain attack: contract creation, forced mint, self-destruct."""
    env = env or BridgeEnv.from_seed(derive_seed(seed, "env"))
    rng = np.random.default_rng(derive_seed(seed, "amounts"))
    attacker = _addr(seed, "eoa")
    attack_contract = _addr(seed, "attack-contract")
    amount = int(rng.integers(1, 10**9)) * 10**9
    mint_leg = _node("CALL", env.router, env.token, _calldata(SEL_MINT, 1, amount))
    router_leg = _node("CALL", attack_contract, env.router,
                       _calldata(SEL_WITHDRAW, 1, amount), 0, [mint_leg])
    destruct = _node("SELFDESTRUCT", attack_contract, attacker)
    trace = _node("CREATE", attacker, attack_contract, "0x", 0,
                  [router_leg, destruct])
    logs = [_log(env.token, TOPIC_UNLOCK, 0, amount)]
    return _finish(trace, logs, "AttackTgt", "attack_tgt", seed,
                   TARGET_CHAIN_ID, noise, env)


def gen_dataset(cfg: GenConfig) -> tuple[list[SynthTx], DatasetManifest]:
    """Exact per-config counts, seeded shuffle, manifest over trace filenames."""
    cfg.validate()
    env = BridgeEnv.from_seed(derive_seed(cfg.seed, "corpus-env"))
    n_attack = round(cfg.n_normal * cfg.attack_rate)
    n_src = round(n_attack * cfg.src_tgt_ratio)
    n_tgt = n_attack - n_src

    samples: list[SynthTx] = []
    for i in range(cfg.n_normal):
        gen = gen_normal_deposit if i % 2 == 0 else gen_normal_withdrawal
        samples.append(gen(derive_seed(cfg.seed, "normal", i), cfg.noise, env))
    for i in range(n_src):
        samples.append(gen_attack_src(derive_seed(cfg.seed, "attack-src", i),
                                      cfg.noise, env))
    for i in range(n_tgt):
        samples.append(gen_attack_tgt(derive_seed(cfg.seed, "attack-tgt", i),
                                      cfg.noise, env))

    rng = np.random.default_rng(derive_seed(cfg.seed, "shuffle"))
    order = rng.permutation(len(samples))
    samples = [samples[i] for i in order]
    manifest = DatasetManifest(entries=[
        ManifestEntry(
            source=f"traces/{tx.record.tx_hash}.json",
            label=tx.label,
            chain_id=tx.record.chain_id,
        ) for tx in samples
    ])
    return samples, manifest


def gen_config_hash(cfg: GenConfig) -> str:
    canonical = json.dumps(_sidecar(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.blake2b(canonical.encode(), digest_size=8).hexdigest()


def _sidecar(cfg: GenConfig) -> dict:
    return {
        "n_normal": cfg.n_normal,
        "attack_rate": cfg.attack_rate,
        "src_tgt_ratio": cfg.src_tgt_ratio,
        "noise": list(cfg.noise),
        "seed": cfg.seed,
    }


def write_corpus(samples: list[SynthTx], manifest: DatasetManifest,
                 out_dir: str | Path, cfg: GenConfig) -> Path:
    """Write trace files, manifest.jsonl, and the reproducibility sidecar."""
    out_dir = Path(out_dir)
    (out_dir / "traces").mkdir(parents=True, exist_ok=True)
    for tx in samples:
        save_trace_file(tx.record, out_dir / "traces" / f"{tx.record.tx_hash}.json")
    save_manifest(manifest, out_dir / "manifest.jsonl")
    sidecar = dict(_sidecar(cfg), config_hash=gen_config_hash(cfg))
    with open(out_dir / "gen_config.json", "w") as f:
        json.dump(sidecar, f, indent=1, sort_keys=True)
        f.write("\n")
    return out_dir / "manifest.jsonl"
