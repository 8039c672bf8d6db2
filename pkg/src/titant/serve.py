"""Low-latency scoring server over the feature store.

A request names a transaction; the server fetches the transferor's basic
features and embedding from the latest store version, assembles the same
feature layout offline training used, scores it with the active model,
and answers allow/interrupt against the alert threshold. Scoring is pure
and read-only, so any number of handler threads can share one immutable
(model, threshold) snapshot; a model reload swaps that snapshot
atomically and never disturbs in-flight requests.

Failure policy is fail-open: if the store cannot serve features, the
response carries decision=allow plus an error code rather than blocking
payments on infrastructure trouble.

Wire protocol: one JSON object per line over TCP, field names exactly as
in ScoreRequest/ScoreResponse. One structured log line per request:
`timestamp txn_id probability decision latency_micros`.
"""

from __future__ import annotations

import json
import logging
import socket
import socketserver
import threading
import time
from dataclasses import dataclass, field

import numpy as np

from .detect import DetectorModel, load_model as _load_artifact
from .ingest import N_BASIC_FEATURES
from .store import FeatureStore, StoreError

log = logging.getLogger("titant.serve")
request_log = logging.getLogger("titant.serve.requests")


@dataclass(frozen=True)
class ScoreRequest:
    txn_id: str
    transferor: str
    transferee: str
    amount: float
    timestamp: int
    basic_features: tuple | None = None   # optional inline override, length 52

    @classmethod
    def from_json(cls, line: str) -> "ScoreRequest":
        obj = json.loads(line)
        feats = obj.get("basic_features")
        if feats is not None:
            if len(feats) != N_BASIC_FEATURES:
                raise ValueError(f"basic_features override must have length {N_BASIC_FEATURES}")
            feats = tuple(float(v) for v in feats)
        return cls(
            txn_id=str(obj["txn_id"]), transferor=str(obj["transferor"]),
            transferee=str(obj["transferee"]), amount=float(obj["amount"]),
            timestamp=int(obj["timestamp"]), basic_features=feats,
        )

    def to_json(self) -> str:
        obj = {"txn_id": self.txn_id, "transferor": self.transferor,
               "transferee": self.transferee, "amount": self.amount,
               "timestamp": self.timestamp}
        if self.basic_features is not None:
            obj["basic_features"] = list(self.basic_features)
        return json.dumps(obj)


@dataclass(frozen=True)
class ScoreResponse:
    txn_id: str
    fraud_probability: float
    decision: str                  # "allow" | "interrupt"
    model_version: str
    feature_version: str
    cold_start: bool
    latency_micros: int
    error: str | None = None

    def to_json(self) -> str:
        obj = {
            "txn_id": self.txn_id, "fraud_probability": self.fraud_probability,
            "decision": self.decision, "model_version": self.model_version,
            "feature_version": self.feature_version, "cold_start": self.cold_start,
            "latency_micros": self.latency_micros,
        }
        if self.error is not None:
            obj["error"] = self.error
        return json.dumps(obj)

    @classmethod
    def from_json(cls, line: str) -> "ScoreResponse":
        obj = json.loads(line)
        return cls(**obj)


@dataclass(frozen=True)
class _Snapshot:
    model: DetectorModel
    threshold: float
    version: str


class ModelServer:
    """Holds the store handle and the swappable (model, threshold) snapshot."""

    def __init__(self, store: FeatureStore, model_path=None, threshold: float = 0.5):
        self.store = store
        self._snapshot: _Snapshot | None = None
        self._default_threshold = threshold
        if model_path is not None:
            self.load_model(model_path, threshold=threshold)

    # -- model lifecycle ------------------------------------------------------

    def load_model(self, artifact_path, threshold: float | None = None) -> str:
        """Parse, validate arity against the store, swap atomically.

        On any failure the previous model keeps serving and the error is
        re-raised for the caller.
        """
        model = _load_artifact(artifact_path)
        expected = N_BASIC_FEATURES + self.store.dim
        if model.feature_arity != expected:
            raise ValueError(
                f"model arity {model.feature_arity} does not match "
                f"store layout {expected} (52 basic + {self.store.dim} embedding)")
        version = model.version_date.isoformat() if model.version_date else "unversioned"
        thr = self._default_threshold if threshold is None else threshold
        self._snapshot = _Snapshot(model=model, threshold=thr, version=version)
        log.info("model %s loaded (threshold %.3f)", version, thr)
        return version

    @property
    def model_version(self) -> str:
        snap = self._snapshot
        return snap.version if snap else "none"

    # -- request path ---------------------------------------------------------

    def score(self, request: ScoreRequest) -> ScoreResponse:
        start = time.perf_counter()
        snap = self._snapshot
        if snap is None:
            raise RuntimeError("no model loaded")
        try:
            fetched = self.store.get_latest(request.transferor)
            feature_version = self.store.latest_date().isoformat()
        except StoreError as exc:
            return self._respond(request, 0.0, "allow", snap.version, "unavailable",
                                 cold_start=True, start=start, error=f"store: {exc}")
        cold_start = fetched is None
        if fetched is None:
            basic = np.zeros(N_BASIC_FEATURES)
            embedding = np.zeros(self.store.dim)
        else:
            basic, embedding, _ = fetched
        if request.basic_features is not None:
            basic = np.asarray(request.basic_features, dtype=np.float64)
        x = np.concatenate([basic, np.asarray(embedding, dtype=np.float64)])
        probability = float(snap.model.predict_scores(x))
        decision = "interrupt" if probability >= snap.threshold else "allow"
        return self._respond(request, probability, decision, snap.version,
                             feature_version, cold_start, start)

    def _respond(self, request, probability, decision, model_version,
                 feature_version, cold_start, start, error=None) -> ScoreResponse:
        latency = int((time.perf_counter() - start) * 1e6)
        resp = ScoreResponse(
            txn_id=request.txn_id, fraud_probability=probability, decision=decision,
            model_version=model_version, feature_version=feature_version,
            cold_start=cold_start, latency_micros=latency, error=error,
        )
        request_log.info("%d %s %.6f %s %d", request.timestamp, request.txn_id,
                         probability, decision, latency)
        return resp


class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        while True:
            line = self.rfile.readline()
            if not line:
                return
            line = line.strip()
            if not line:
                continue
            try:
                request = ScoreRequest.from_json(line.decode("utf-8"))
                response = self.server.model_server.score(request)
            except Exception as exc:  # malformed request: answer, keep serving
                response = ScoreResponse(
                    txn_id="?", fraud_probability=0.0, decision="allow",
                    model_version=self.server.model_server.model_version,
                    feature_version="unavailable", cold_start=True,
                    latency_micros=0, error=f"bad request: {exc}")
            self.wfile.write(response.to_json().encode("utf-8") + b"\n")


class _Server(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = False  # graceful shutdown drains in-flight handlers


def serve_loop(model_server: ModelServer, bind_address=("127.0.0.1", 7447),
               ready: threading.Event | None = None):
    """Serve until shutdown() is called on the returned server object."""
    server = _Server(bind_address, _Handler)
    server.model_server = model_server
    if ready is not None:
        server_thread = threading.Thread(target=server.serve_forever, daemon=True)
        server_thread.start()
        ready.set()
        return server
    log.info("serving on %s:%d", *server.server_address)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.shutdown()
        server.server_close()
    return server


def request_once(address, request: ScoreRequest, timeout: float = 10.0) -> ScoreResponse:
    """Client helper: one request/response over a fresh connection."""
    with socket.create_connection(address, timeout=timeout) as sock:
        sock.sendall(request.to_json().encode("utf-8") + b"\n")
        buf = b""
        while not buf.endswith(b"\n"):
            chunk = sock.recv(65536)
            if not chunk:
                break
            buf += chunk
    return ScoreResponse.from_json(buf.decode("utf-8"))
