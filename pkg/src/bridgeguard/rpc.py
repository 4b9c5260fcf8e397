"""Ethereum-style RPC ingestion: call-tracer traces + receipt logs.

Raw responses are normalized into the same document shape the file loader
accepts, and cached to disk keyed by (chain_id, tx_hash) so repeated runs
replay offline.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import requests

from .errors import RpcUnavailable, TraceUnsupported, TxNotFound
from .ingest import TxRecord, record_from_document

_METHOD_NOT_FOUND = -32601


class RpcClient:
    """Minimal JSON-RPC client for trace-by-hash and receipt retrieval.

    `session` only needs a requests-compatible ``post``; tests inject fakes.
    """

    def __init__(self, endpoint: str, cache_dir: str | Path | None = None,
                 session=None, timeout: float = 30.0):
        self.endpoint = endpoint
        self.cache_dir = Path(cache_dir) if cache_dir else None
        self.session = session if session is not None else requests.Session()
        self.timeout = timeout
        self._chain_id: int | None = None
        self._next_id = 0

    def _post(self, method: str, params: list) -> object:
        self._next_id += 1
        payload = {"jsonrpc": "2.0", "id": self._next_id,
                   "method": method, "params": params}
        try:
            response = self.session.post(self.endpoint, json=payload, timeout=self.timeout)
        except Exception as exc:
            raise RpcUnavailable(f"{self.endpoint}: {exc}") from exc
        if getattr(response, "status_code", 200) >= 500:
            raise RpcUnavailable(f"{self.endpoint}: HTTP {response.status_code}")
        body = response.json()
        if "error" in body and body["error"]:
            err = body["error"]
            if err.get("code") == _METHOD_NOT_FOUND:
                raise TraceUnsupported(f"node lacks {method}")
            raise RpcUnavailable(f"{method}: {err.get('message', err)}")
        return body.get("result")

    def chain_id(self) -> int:
        if self._chain_id is None:
            result = self._post("eth_chainId", [])
            self._chain_id = int(result, 16) if isinstance(result, str) else int(result)
        return self._chain_id

    def _cache_path(self, chain_id: int, tx_hash: str) -> Path | None:
        if self.cache_dir is None:
            return None
        return self.cache_dir / str(chain_id) / f"{tx_hash.lower()}.json"

    def fetch_tx_record(self, tx_hash: str) -> TxRecord:
        tx_hash = tx_hash.lower()
        chain_id = self.chain_id()
        cache_path = self._cache_path(chain_id, tx_hash)
        if cache_path is not None and cache_path.exists():
            with open(cache_path) as f:
                return record_from_document(json.load(f))

        receipt = self._post("eth_getTransactionReceipt", [tx_hash])
        if receipt is None:
            raise TxNotFound(tx_hash)
        trace = self._post("debug_traceTransaction", [tx_hash, {"tracer": "callTracer"}])
        if trace is None:
            raise TraceUnsupported("trace method returned no result")

        doc = {
            "tx_hash": tx_hash,
            "chain_id": chain_id,
            "block_number": receipt.get("blockNumber", "0x0"),
            "trace": trace,
            "logs": receipt.get("logs", []),
        }
        record = record_from_document(doc)

        if cache_path is not None:
            cache_path.parent.mkdir(parents=True, exist_ok=True)
            with open(cache_path, "w") as f:
                json.dump(doc, f)
        return record

    def fetch_many(self, tx_hashes: list[str], workers: int = 4) -> list[TxRecord]:
        """Fetch with a bounded number of concurrent requests."""
        self.chain_id()  # resolve once before fanning out
        if workers <= 1:
            return [self.fetch_tx_record(h) for h in tx_hashes]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(self.fetch_tx_record, tx_hashes))


def fetch_trace_rpc(endpoint: str, tx_hash: str,
                    cache_dir: str | Path | None = None, session=None) -> TxRecord:
    """One-shot fetch of a normalized TxRecord from an RPC endpoint."""
    return RpcClient(endpoint, cache_dir=cache_dir, session=session).fetch_tx_record(tx_hash)
