"""Extraction of ``<think>``/``<answer>`` blocks from model output."""
from __future__ import annotations

import ast
import json
import re
from dataclasses import dataclass
from typing import Any, Optional

_ANSWER = re.compile(r"<answer>(.*?)</answer>", re.DOTALL)


@dataclass(frozen=True)
class ParsedResponse:
    think_text: str
    answer_text: str
    format_ok: bool


def parse_response(text: str) -> ParsedResponse:
    """Never raises. The leading ``<think>`` may be missing because the
    prompt already ends with it; ``</think>`` must precede the first
    ``<answer>...</answer>`` pair, and the answer must be nonempty."""
    if not isinstance(text, str):
        return ParsedResponse("", "", False)
    m = _ANSWER.search(text)
    answer = m.group(1).strip() if m else ""
    head = text[: m.start()] if m else text
    close = head.find("</think>")
    if close < 0:
        return ParsedResponse("", answer, False)
    think = head[:close]
    opener = think.find("<think>")
    if opener >= 0:
        if think[:opener].strip():
            return ParsedResponse("", answer, False)
        think = think[opener + len("<think>"):]
    if "<think>" in think or "<answer>" in think or "</answer>" in think:
        return ParsedResponse(think.strip(), answer, False)
    ok = m is not None and bool(answer) and not head[close + len("</think>"):].strip()
    return ParsedResponse(think.strip(), answer, ok)


def parse_answer_object(answer_text: str) -> Optional[dict[str, Any]]:
    """Read the card-game answer object. JSON first, then Python literal
    syntax, which covers the single-quoted formula and trailing comma the
    prompt's own example uses. Returns None if neither yields a dict."""
    text = answer_text.strip()
    if text.startswith("```"):
        text = text.strip("`")
        if text.startswith("json"):
            text = text[4:]
    try:
        obj = json.loads(text)
    except ValueError:
        try:
            obj = ast.literal_eval(text)
        except (ValueError, TypeError, SyntaxError, MemoryError, RecursionError):
            return None
    return obj if isinstance(obj, dict) else None
