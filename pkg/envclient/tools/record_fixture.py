"""Regenerate the protocol-conformance transcript.

Drives a real RemoteEnv against the in-process simulator server and saves
every (request, response) line pair. Needs the vgnav package installed;
the committed fixture lets client tests run without it.
"""

import json
import sys
from pathlib import Path

from vgnav.envserver import Session, decode_message, encode_message, handle
from vgnav.episode import EpisodeConfig
from vgnav.world import load_map_doc

from vgclient.client import EpisodeDone, NoEpisode, RemoteEnv


class RecordingLoopback:
    """Transport that answers from an in-process session and records."""

    def __init__(self):
        doc = {
            "version": "vgmap/1",
            "cell_size": 2.0,
            "width": 40,
            "height": 5,
            "classes": {"encoding": "rle", "data": [["road", 200]]},
            "named_points": {"a": [3.0, 5.0], "b": [77.0, 5.0]},
        }
        self.session = Session(
            cmap=load_map_doc(doc),
            base_config=EpisodeConfig(route=("a", "b"), horizon=40),
        )
        self.records = []

    def request(self, line: str) -> str:
        resp = encode_message(handle(decode_message(line), self.session))
        self.records.append({"send": line.rstrip("\n"), "recv": resp.rstrip("\n")})
        return resp

    def close(self) -> None:
        pass


def main(out_path: Path) -> None:
    transport = RecordingLoopback()
    env = RemoteEnv(transport)

    try:
        env.step("noop")
    except NoEpisode:
        pass

    obs, info = env.reset(seed=5, overrides={"horizon": 5, "scheme": "hybrid"})
    assert obs.shape == (3, 84, 180)
    terminal = False
    while not terminal:
        obs, reward, terminal, info = env.step("left")

    try:
        env.step("noop")
    except EpisodeDone:
        pass

    env.close()

    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w", encoding="utf-8") as f:
        for record in transport.records:
            f.write(json.dumps(record, sort_keys=True) + "\n")
    print(f"{len(transport.records)} exchanges -> {out_path}")


if __name__ == "__main__":
    target = Path(sys.argv[1]) if len(sys.argv) > 1 else \
        Path(__file__).resolve().parent.parent / "fixtures" / "session.jsonl"
    main(target)
