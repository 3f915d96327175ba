"""Step-side helpers that write flor events to $FLOR_EVENTS.

Without FLOR_EVENTS every call is a pass-through, so steps also run under
plain make.
"""

import contextlib
import json
import os

_stream = None
_args = json.loads(os.environ.get("FLOR_ARGS") or "{}")
_depth = 0
_restored = False
_checkpointed = {}


def _emit(kind, name, value, hint=None):
    global _stream
    path = os.environ.get("FLOR_EVENTS")
    if not path:
        return
    if _stream is None:
        _stream = open(path, "a", encoding="utf-8")
    rec = {"k": kind, "n": name, "v": value}
    if hint is not None:
        rec["t"] = hint
    _stream.write(json.dumps(rec, ensure_ascii=False, separators=(",", ":")) + "\n")
    _stream.flush()


def _encode(value):
    if isinstance(value, bool):
        return ("true" if value else "false"), None
    if isinstance(value, int):
        return str(value), 1
    if isinstance(value, float):
        return repr(value), 2
    if isinstance(value, str):
        return value, None
    return json.dumps(value, sort_keys=True), None


def replaying():
    return os.environ.get("FLOR_REPLAY") == "1"


def restored():
    """True inside an outer iteration whose state came from a checkpoint."""
    return _restored


def log(name, value):
    text, hint = _encode(value)
    _emit("log", name, text, hint)
    return value


def arg(name, default=None):
    text, _ = _encode(default)
    _emit("arg", name, text)
    if name not in _args:
        return default
    raw = _args[name]
    if isinstance(default, bool):
        return raw == "true"
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    return raw


def _ckpt_dir():
    return os.environ.get("FLOR_CKPT_DIR") or ".flor-ckpt"


def _resume():
    path = os.path.join(_ckpt_dir(), "resume.json")
    if not replaying() or not os.path.exists(path):
        return None
    with open(path, encoding="utf-8") as f:
        return json.load(f)


def _restore(loop_name, iteration):
    base = os.path.join(_ckpt_dir(), loop_name, str(iteration))
    for name, obj in _checkpointed.items():
        with open(os.path.join(base, name), encoding="utf-8") as f:
            state = json.load(f)
        obj.clear()
        obj.update(state)


def _save(loop_name, iteration):
    out = os.path.join(_ckpt_dir(), "out")
    os.makedirs(out, exist_ok=True)
    for name, obj in _checkpointed.items():
        path = os.path.abspath(os.path.join(out, "%s-%s-%d.json" % (name, loop_name, iteration)))
        with open(path, "w", encoding="utf-8") as f:
            json.dump(obj, f, sort_keys=True)
        _emit("ckpt", name, path)


@contextlib.contextmanager
def checkpointing(**objs):
    """Registers dict-like objects saved at outer loop iteration boundaries."""
    _checkpointed.update(objs)
    try:
        yield
    finally:
        for name in objs:
            _checkpointed.pop(name, None)


def loop(name, vals):
    global _depth, _restored
    _emit("loop_begin", name, "")
    _depth += 1
    outer = _depth == 1
    resume = _resume() if outer and _checkpointed else None
    try:
        for i, v in enumerate(vals):
            _emit("iter_begin", name, str(v))
            if resume is not None and resume.get("loop") == name and i < resume["iteration"]:
                _restore(name, i)
                _restored = True
            elif outer:
                _restored = False
            yield v
            if outer and _checkpointed and not replaying():
                _save(name, i)
            _emit("iter_end", name, "")
    finally:
        _depth -= 1
        if outer:
            _restored = False
    _emit("loop_end", name, "")
