"""Model checkpoints as a single JSON document.

See ``docs/checkpoint_format.md`` for the field reference.
"""

import json
import os
import tempfile

import numpy as np

from .model import DecoderWeights, EncoderParams, Model
from .trainer import TrainConfig

FORMAT_NAME = "paenmf-checkpoint"
FORMAT_VERSION = 1


class CheckpointError(ValueError):
    pass


def _tolist(a):
    return np.asarray(a, dtype=np.float64).tolist()


def to_document(model, config, extra=None):
    enc = model.encoder
    doc = {
        "format": FORMAT_NAME,
        "format_version": FORMAT_VERSION,
        "config": config.to_dict(),
        "shapes": {"m": enc.m, "p": enc.p, "r": enc.r},
        "encoder": {name: _tolist(a) for name, a in enc.arrays().items()},
        "decoder": {"W_f": _tolist(model.decoder.W_f)},
    }
    if extra:
        doc["extra"] = extra
    return doc


def atomic_write_text(path, text):
    """Write ``text`` to ``path`` via a temporary file and rename."""
    path = os.fspath(path)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path) or ".", prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_checkpoint(path, model, config, extra=None):
    text = json.dumps(to_document(model, config, extra), indent=1, sort_keys=True)
    atomic_write_text(path, text + "\n")


def from_document(doc):
    if doc.get("format") != FORMAT_NAME:
        raise CheckpointError(f"not a {FORMAT_NAME} document")
    if doc.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(
            f"unsupported format_version {doc.get('format_version')!r}, expected {FORMAT_VERSION}"
        )
    try:
        config = TrainConfig.from_dict(doc["config"])
        encoder = EncoderParams(**doc["encoder"])
        decoder = DecoderWeights(doc["decoder"]["W_f"])
        shapes = doc["shapes"]
    except (KeyError, TypeError) as exc:
        raise CheckpointError(f"malformed checkpoint: {exc}") from exc
    got = {"m": encoder.m, "p": encoder.p, "r": encoder.r}
    if got != shapes or decoder.W_f.shape != (encoder.m, encoder.r):
        raise CheckpointError(f"checkpoint shapes {shapes} do not match arrays {got}")
    return Model(encoder, decoder), config


def load_checkpoint(path):
    """Return ``(model, config)`` stored at ``path``."""
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"{path}: invalid JSON: {exc}") from exc
    return from_document(doc)
