from __future__ import annotations

import asyncio
import sys
from dataclasses import dataclass
from typing import Optional

_SENTINEL = object()


@dataclass
class _Sink:
    loop: asyncio.AbstractEventLoop
    queue: asyncio.Queue[object]
    task: asyncio.Task[None]


_sink: Optional[_Sink] = None


async def start_log_worker() -> None:
    global _sink
    if _sink is not None and not _sink.task.done():
        return
    queue: asyncio.Queue[object] = asyncio.Queue()
    _sink = _Sink(asyncio.get_running_loop(), queue, asyncio.create_task(_drain(queue)))


async def stop_log_worker() -> None:
    global _sink
    sink, _sink = _sink, None
    if sink is None:
        return
    sink.queue.put_nowait(_SENTINEL)
    try:
        await asyncio.wait_for(sink.task, timeout=2.0)
    except Exception:
        sink.task.cancel()
        try:
            await sink.task
        except Exception:
            pass


async def _drain(queue: asyncio.Queue[object]) -> None:
    while (item := await queue.get()) is not _SENTINEL:
        print(item, file=sys.stderr, flush=True)


def log(message: str) -> None:
    # stderr keeps stdout free for data lines.
    sink = _sink
    if sink is None or sink.loop.is_closed():
        print(message, file=sys.stderr)
        return
    try:
        if asyncio.get_running_loop() is sink.loop:
            sink.queue.put_nowait(message)
            return
    except RuntimeError:
        # Sweep rows and batches run on worker threads.
        pass
    sink.loop.call_soon_threadsafe(sink.queue.put_nowait, message)


def _render(value: object) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    if isinstance(value, bool):
        return str(value).lower()
    return str(value)


def log_fields(tag: str, message: str = "", /, **fields: object) -> None:
    """Log ``[tag] message key=value ...``; floats keep 6 significant digits."""
    parts = [f"[{tag}]"]
    if message:
        parts.append(message)
    parts.extend(f"{key}={_render(value)}" for key, value in fields.items())
    log(" ".join(parts))
