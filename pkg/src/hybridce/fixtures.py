"""Lossless JSON fixtures for channels, pilots, codebooks and quantizers.

Complex arrays are stored as ``{"shape": [...], "real": [...], "imag": [...]}``
with flattened C-order float lists; Python's float repr round-trips exactly.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .channel_model import ChannelKind, ChannelRealization, PathSet
from .frontend import AnalogCodebook, PilotBook
from .quantization import Codebook

FORMAT_VERSION = 1


def encode_array(a: np.ndarray) -> dict:
    a = np.asarray(a)
    out = {"shape": list(a.shape), "real": a.real.ravel().tolist()}
    if np.iscomplexobj(a):
        out["imag"] = a.imag.ravel().tolist()
    return out


def decode_array(d: dict) -> np.ndarray:
    real = np.asarray(d["real"], dtype=float)
    if "imag" in d:
        return (real + 1j * np.asarray(d["imag"], dtype=float)).reshape(d["shape"])
    return real.reshape(d["shape"])


def channel_to_dict(channel: ChannelRealization) -> dict:
    d = {
        "version": FORMAT_VERSION,
        "type": "channel",
        "kind": channel.kind.value,
        "n_r": channel.n_r,
        "n_t": channel.n_t,
        "num_taps": channel.taps.shape[0],
        "num_subcarriers": channel.num_subcarriers,
        "taps": encode_array(channel.taps),
        "freq_responses": encode_array(channel.freq_responses),
    }
    if channel.paths is not None:
        p = channel.paths
        d["paths"] = {
            "gains": encode_array(p.gains),
            "delays": p.delays.tolist(),
            "aoa_cosines": p.aoa_cosines.tolist(),
            "aod_cosines": p.aod_cosines.tolist(),
        }
    return d


def channel_from_dict(d: dict) -> ChannelRealization:
    paths = None
    if "paths" in d:
        p = d["paths"]
        paths = PathSet(
            gains=decode_array(p["gains"]),
            delays=p["delays"],
            aoa_cosines=p["aoa_cosines"],
            aod_cosines=p["aod_cosines"],
        )
    return ChannelRealization(
        taps=decode_array(d["taps"]),
        freq_responses=decode_array(d["freq_responses"]),
        kind=ChannelKind(d["kind"]),
        paths=paths,
    )


def pilots_to_dict(pilots: PilotBook) -> dict:
    return {"version": FORMAT_VERSION, "type": "pilots", "pilots": encode_array(pilots.pilots)}


def pilots_from_dict(d: dict) -> PilotBook:
    return PilotBook(decode_array(d["pilots"]))


def codebook_to_dict(codebook: AnalogCodebook) -> dict:
    return {
        "version": FORMAT_VERSION,
        "type": "analog_codebook",
        "precoders": encode_array(codebook.precoders),
        "combiners": encode_array(codebook.combiners),
    }


def codebook_from_dict(d: dict) -> AnalogCodebook:
    return AnalogCodebook(precoders=decode_array(d["precoders"]), combiners=decode_array(d["combiners"]))


def quantizer_to_dict(codebook: Codebook) -> dict:
    return {"version": FORMAT_VERSION, "type": "quantizer", **codebook.to_dict()}


_DECODERS = {
    "channel": channel_from_dict,
    "pilots": pilots_from_dict,
    "analog_codebook": codebook_from_dict,
}


def dump(obj_dict: dict, path) -> None:
    Path(path).write_text(json.dumps(obj_dict, indent=1) + "\n")


def load(path):
    """Load any fixture written by :func:`dump`, dispatching on its ``type``."""
    d = json.loads(Path(path).read_text())
    return _DECODERS[d["type"]](d)
