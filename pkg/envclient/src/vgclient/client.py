"""Gym-like remote environment over the vgenv/1 protocol."""

from __future__ import annotations

import base64
import json
import socket

import numpy as np

PROTOCOL = "vgenv/1"


class ProtocolViolation(RuntimeError):
    """Server answered with an error message; `code` mirrors the wire code."""

    def __init__(self, code: str, message: str = ""):
        self.code = code
        super().__init__(f"{code}: {message}" if message else code)


class VersionMismatch(ProtocolViolation):
    def __init__(self, got: str):
        super().__init__("version_mismatch", f"server speaks {got!r}, client {PROTOCOL!r}")


class NoEpisode(ProtocolViolation):
    pass


class EpisodeDone(ProtocolViolation):
    pass


_ERROR_CLASSES = {
    "no_episode": NoEpisode,
    "episode_done": EpisodeDone,
}


def encode_line(msg: dict) -> str:
    return json.dumps(msg, sort_keys=True, separators=(",", ":")) + "\n"


def decode_frames(payload: str, shape) -> np.ndarray:
    """Base64 class-id bytes to a (stack, rows, cols) uint8 array."""
    raw = base64.b64decode(payload)
    expected = shape[0] * shape[1] * shape[2]
    if len(raw) != expected:
        raise ProtocolViolation(
            "bad_payload", f"expected {expected} observation bytes, got {len(raw)}"
        )
    return np.frombuffer(raw, dtype=np.uint8).reshape(shape)


class SocketTransport:
    """Line transport over TCP."""

    def __init__(self, host: str, port: int, timeout: float = 120.0):
        self._sock = socket.create_connection((host, port), timeout=timeout)
        self._file = self._sock.makefile("rw", encoding="utf-8", newline="\n")

    def request(self, line: str) -> str:
        self._file.write(line)
        self._file.flush()
        resp = self._file.readline()
        if not resp:
            raise ProtocolViolation("connection_closed", "server hung up")
        return resp

    def close(self) -> None:
        try:
            self._file.close()
        finally:
            self._sock.close()


class RemoteEnv:
    """One environment session; one episode at a time.

    reset() and step() return decoded numpy observations. Server-side
    error responses raise ProtocolViolation subclasses keyed by code.
    """

    def __init__(self, transport):
        self._transport = transport
        self._next_id = 0
        self.spec = self._handshake()
        self.observation_shape = tuple(self.spec["observation_shape"])
        self.actions = [a["name"] for a in self.spec["actions"]]
        self.palette = {c["id"]: tuple(c["color"]) for c in self.spec["classes"]}

    def _call(self, msg: dict) -> dict:
        self._next_id += 1
        msg = dict(msg, id=self._next_id)
        resp = json.loads(self._transport.request(encode_line(msg)))
        if resp.get("id") != self._next_id:
            raise ProtocolViolation("bad_id", f"expected id {self._next_id}, got {resp.get('id')}")
        if resp.get("kind") == "error":
            code = resp.get("code", "error")
            raise _ERROR_CLASSES.get(code, ProtocolViolation)(code, resp.get("message", ""))
        return resp

    def _handshake(self) -> dict:
        spec = self._call({"kind": "hello"})
        if spec.get("kind") != "spec":
            raise ProtocolViolation("bad_handshake", f"expected spec, got {spec.get('kind')}")
        if spec.get("protocol") != PROTOCOL:
            raise VersionMismatch(spec.get("protocol"))
        return spec

    def _observation(self, resp: dict):
        obs = decode_frames(resp["frames"], self.observation_shape)
        info = {
            "t": resp.get("t"),
            "outcome": resp.get("outcome"),
            "hybrid_vector": resp.get("hybrid_vector"),
            "reward_terms": resp.get("reward"),
        }
        return obs, info

    def reset(self, seed: int | None = None, overrides: dict | None = None):
        msg = {"kind": "reset"}
        if seed is not None:
            msg["seed"] = seed
        if overrides:
            msg["overrides"] = overrides
        resp = self._call(msg)
        return self._observation(resp)

    def step(self, action: str | int):
        resp = self._call({"kind": "step", "action": action})
        obs, info = self._observation(resp)
        reward = resp["reward"]["total"]
        terminal = bool(resp["terminal"])
        return obs, reward, terminal, info

    def render(self, fmt: str = "ppm") -> bytes:
        resp = self._call({"kind": "render", "format": fmt})
        key = "image" if fmt == "ppm" else "frames"
        return base64.b64decode(resp[key])

    def close(self) -> None:
        try:
            self._call({"kind": "close"})
        finally:
            self._transport.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def connect(host: str, port: int, timeout: float = 120.0) -> RemoteEnv:
    """Open a session and perform the hello handshake."""
    return RemoteEnv(SocketTransport(host, port, timeout))
