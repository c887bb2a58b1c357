"""Cognition backends: direction choice, re-evaluation, verification, ray pick.

Two interchangeable backends implement the same contract. The scripted
backend is a pure deterministic function of (request, seed) and emulates
object-room priors with a small co-occurrence table; it also receives
ground-truth access for target verification, modeling the close second look
that defeats texture artifacts. The remote backend talks to any
chat-completion-style HTTP endpoint and falls back to the scripted policy
when the endpoint misbehaves, so episodes always run to completion.
"""

from __future__ import annotations

import json
import os
import re
import threading
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np
import requests

from .geometry import angular_deviation, bearing_deg, normalize_yaw
from .perception import DirectionalView, Observation, OracleConfig, VIEW_YAWS, visible_objects
from .scene import Scene


class Mode(Enum):
    DECIDE = "decide"
    RETHINK_A = "rethink_a"
    VERIFY_B = "verify_b"
    PICK_RAY = "pick_ray"


class AdvisorError(RuntimeError):
    """Advisor backend failure (network, protocol, or exhausted retries)."""


class ResponseParseError(AdvisorError):
    """Backend output could not be parsed into a valid response."""

    def __init__(self, message: str, raw: str) -> None:
        super().__init__(f"{message}; raw payload: {raw[:500]!r}")
        self.raw = raw


@dataclass(frozen=True)
class StructuredResponse:
    """The four-element decision record: direction, target flag, reasoning, description."""

    a_dir: float
    f_goal: bool
    explanation: str
    description: str

    def __post_init__(self) -> None:
        if self.a_dir not in VIEW_YAWS:
            raise ValueError(f"a_dir must be one of {VIEW_YAWS}, got {self.a_dir}")
        if not isinstance(self.f_goal, bool):
            raise ValueError("f_goal must be a bool")
        if not self.description:
            raise ValueError("description must be non-empty")


@dataclass(frozen=True)
class AdvisorRequest:
    target_category: str
    observation: Observation
    mode: Mode
    injected_history: str | None = None

    def __post_init__(self) -> None:
        if (self.injected_history is not None) != (self.mode is Mode.RETHINK_A):
            raise ValueError("injected_history is required exactly when mode is RETHINK_A")


@dataclass(frozen=True)
class OracleAccess:
    """Ground-truth handles granted to backends for target verification."""

    scene: Scene
    oracle: OracleConfig
    hfov_deg: float


def parse_structured_response(text: str) -> StructuredResponse:
    """Parse a strict-JSON decision payload, tolerating markdown code fences."""
    body = text.strip()
    fence = re.search(r"```(?:json)?\s*(.*?)```", body, re.DOTALL)
    if fence:
        body = fence.group(1).strip()
    try:
        data = json.loads(body)
    except json.JSONDecodeError as exc:
        raise ResponseParseError(f"invalid JSON ({exc})", text) from exc
    if not isinstance(data, dict):
        raise ResponseParseError("payload is not a JSON object", text)
    missing = {"a_dir", "f_goal", "explanation", "description"} - set(data)
    if missing:
        raise ResponseParseError(f"missing keys {sorted(missing)}", text)
    a_dir = data["a_dir"]
    if not isinstance(a_dir, (int, float)) or float(a_dir) not in VIEW_YAWS:
        raise ResponseParseError(f"a_dir {a_dir!r} not one of {VIEW_YAWS}", text)
    if not isinstance(data["f_goal"], bool):
        raise ResponseParseError("f_goal is not a boolean", text)
    try:
        return StructuredResponse(
            a_dir=float(a_dir),
            f_goal=data["f_goal"],
            explanation=str(data["explanation"]),
            description=str(data["description"]),
        )
    except ValueError as exc:
        raise ResponseParseError(str(exc), text) from exc


def semantic_prior_text(obs: Observation) -> str:
    """Per-view label summary in the structured 'Angle N: ...' form."""
    parts = []
    for view in obs.views:
        labels = ", ".join(sorted(view.labels)) if view.labels else "none"
        parts.append(f"Angle {int(view.view_yaw)}: {labels}")
    return "; ".join(parts)


def describe_observation(obs: Observation) -> str:
    """Deterministic panoramic description: pose anchor plus per-view labels."""
    return f"At ({obs.pose.x:.2f}, {obs.pose.y:.2f}). {semantic_prior_text(obs)}"


_POSITION_RE = re.compile(r"At \((-?\d+(?:\.\d+)?), (-?\d+(?:\.\d+)?)\)")


# Categories that tend to share a room with the key, used to emulate
# object-room priors when the target itself is not in view.
COOCCURRENCE: dict[str, tuple[str, ...]] = {
    "sofa": ("tv", "table", "lamp", "cushion", "carpet", "armchair"),
    "bed": ("wardrobe", "nightstand", "lamp", "mirror"),
    "toilet": ("sink", "shower", "towel", "mirror"),
    "tv": ("sofa", "table", "lamp", "cushion"),
    "plant": ("window", "table"),
    "chair": ("table", "desk", "lamp"),
}


def cooccurring_categories(target: str) -> frozenset[str]:
    related = set(COOCCURRENCE.get(target, ()))
    related.update(cat for cat, vals in COOCCURRENCE.items() if target in vals)
    return frozenset(related)


def _view_range(view: DirectionalView) -> float:
    """Openness statistic for a view: the deepest visible column."""
    return float(view.column_depth.max())


class Advisor:
    """Backend contract shared by the scripted and remote implementations."""

    def decide(self, request: AdvisorRequest) -> StructuredResponse:
        raise NotImplementedError

    def rethink(self, request: AdvisorRequest, original: StructuredResponse) -> StructuredResponse:
        raise NotImplementedError

    def verify(
        self, request: AdvisorRequest, claimed_view: DirectionalView, access: OracleAccess
    ) -> bool:
        raise NotImplementedError

    def pick_ray(self, rays: Sequence, direction_world: float) -> int:
        raise NotImplementedError


class ScriptedAdvisor(Advisor):
    """Deterministic rule-table policy.

    decide: if the target label is visible, choose the view where it is
    nearest and set the goal flag; otherwise score every view by the number
    of co-occurring labels plus its normalized openness and take the argmax
    (seeded tie-break).

    rethink: a view counts as already explored when its non-target labels
    appear in the injected history, or when the history position lies in its
    sector. If the chosen direction is not explored the history is deemed
    irrelevant and the direction is kept; otherwise the most open unexplored
    view wins, falling back to pure openness when everything is explored.

    verify: confirms only when a non-decoy instance of the target is truly
    visible in the claimed view (ground-truth access models the close look).

    pick_ray: smallest angular deviation from the chosen direction, ties to
    the longer ray, then the lower index.
    """

    def __init__(self, seed: int = 0) -> None:
        self.seed = seed

    def decide(self, request: AdvisorRequest) -> StructuredResponse:
        obs = request.observation
        target = request.target_category
        description = describe_observation(obs)

        seen = [v for v in obs.views if target in v.labels]
        if seen:
            best = min(seen, key=lambda v: (v.label_ranges[target], v.view_yaw))
            return StructuredResponse(
                a_dir=best.view_yaw,
                f_goal=True,
                explanation=(
                    f"'{target}' labeled at angle {int(best.view_yaw)} "
                    f"(range {best.label_ranges[target]:.2f} m)"
                ),
                description=description,
            )

        related = cooccurring_categories(target)
        ranges = [_view_range(v) for v in obs.views]
        max_range = max(ranges) or 1.0
        scores = [
            len(view.labels & related) + rng / max_range
            for view, rng in zip(obs.views, ranges)
        ]
        best_score = max(scores)
        tied = [i for i, s in enumerate(scores) if s == best_score]
        if len(tied) > 1:
            rng_stream = np.random.default_rng([self.seed & 0x7FFFFFFF, obs.step, 101])
            choice = tied[int(rng_stream.integers(len(tied)))]
        else:
            choice = tied[0]
        view = obs.views[choice]
        return StructuredResponse(
            a_dir=view.view_yaw,
            f_goal=False,
            explanation=(
                f"no '{target}' in view; best prior score {best_score:.3f} "
                f"at angle {int(view.view_yaw)}"
            ),
            description=description,
        )

    def rethink(self, request: AdvisorRequest, original: StructuredResponse) -> StructuredResponse:
        obs = request.observation
        history = request.injected_history or ""
        target = request.target_category
        description = describe_observation(obs)

        history_pos = None
        m = _POSITION_RE.search(history)
        if m:
            history_pos = (float(m.group(1)), float(m.group(2)))

        def explored(view: DirectionalView) -> bool:
            lowered = history.lower()
            for label in view.labels:
                if label == target:
                    continue
                if label.lower() in lowered:
                    return True
            if history_pos is not None:
                bearing = bearing_deg((obs.pose.x, obs.pose.y), history_pos)
                center = normalize_yaw(obs.pose.yaw + view.view_yaw)
                if angular_deviation(bearing, center) <= 30.0:
                    return True
            return False

        chosen = obs.view_at(original.a_dir)
        if not explored(chosen):
            return StructuredResponse(
                a_dir=original.a_dir,
                f_goal=False,
                explanation="history does not cover the chosen direction; keeping it",
                description=description,
            )
        fresh = [v for v in obs.views if not explored(v)]
        pool = fresh if fresh else list(obs.views)
        best = max(pool, key=lambda v: (_view_range(v), -v.view_yaw))
        reason = "most open unexplored direction" if fresh else "all directions explored; most open"
        return StructuredResponse(
            a_dir=best.view_yaw,
            f_goal=False,
            explanation=f"{reason} at angle {int(best.view_yaw)}",
            description=description,
        )

    def verify(
        self, request: AdvisorRequest, claimed_view: DirectionalView, access: OracleAccess
    ) -> bool:
        pose = request.observation.pose
        center = normalize_yaw(pose.yaw + claimed_view.view_yaw)
        for _, obj, _ in visible_objects(
            access.scene, pose, center, access.hfov_deg, access.oracle.max_label_range
        ):
            if obj.decoy_of is None and obj.category == request.target_category:
                return True
        return False

    def pick_ray(self, rays: Sequence, direction_world: float) -> int:
        if not rays:
            raise ValueError("candidate ray list must be non-empty")
        return min(
            range(len(rays)),
            key=lambda i: (
                angular_deviation(rays[i].heading, direction_world),
                -rays[i].length,
                i,
            ),
        )


@dataclass(frozen=True)
class RemoteAdvisorConfig:
    base_url: str
    model: str
    api_key_env: str = "MEMNAV_API_KEY"
    timeout_s: float = 30.0
    temperature: float = 0.0
    max_in_flight: int = 4
    max_tokens: int = 512


_DECIDE_SYSTEM = (
    "You are the navigation brain of an indoor robot looking for a target "
    "object. You see six directions at relative yaw angles 30, 90, 150, 210, "
    "270 and 330 degrees. Respond with strict JSON only: "
    '{"a_dir": <one of 30|90|150|210|270|330>, "f_goal": <true|false>, '
    '"explanation": "<why>", "description": "<panoramic room description>"}. '
    "Set f_goal true only if the target itself is visible in direction a_dir."
)

_REPAIR_PROMPT = (
    "Your previous reply was not valid JSON with the required keys. Reply "
    "again with exactly one JSON object and nothing else."
)


class RemoteAdvisor(Advisor):
    """Chat-completion HTTP backend with retry, parse repair, and fallback.

    Every malformed or failed exchange is retried once with a repair prompt;
    if the second attempt also fails, the scripted policy substitutes for
    that call and the substitution is counted in `substitutions`. Target
    verification is the exception: its failures surface as AdvisorError so
    the caller can treat the step's verification as failed.
    """

    def __init__(self, config: RemoteAdvisorConfig, fallback: ScriptedAdvisor | None = None) -> None:
        api_key = os.environ.get(config.api_key_env)
        if not api_key:
            raise AdvisorError(
                f"remote advisor requires an API key: set the {config.api_key_env} "
                "environment variable"
            )
        self.config = config
        self._api_key = api_key
        self._fallback = fallback or ScriptedAdvisor()
        self._gate = threading.Semaphore(config.max_in_flight)
        self._lock = threading.Lock()
        self.substitutions = 0

    # -- wire helpers ------------------------------------------------------

    def _post_chat(self, messages: list[dict]) -> str:
        url = self.config.base_url.rstrip("/") + "/chat/completions"
        payload = {
            "model": self.config.model,
            "messages": messages,
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_tokens,
        }
        headers = {"Authorization": f"Bearer {self._api_key}"}
        with self._gate:
            try:
                resp = requests.post(
                    url, json=payload, headers=headers, timeout=self.config.timeout_s
                )
                resp.raise_for_status()
                data = resp.json()
                return data["choices"][0]["message"]["content"]
            except (requests.RequestException, KeyError, IndexError, ValueError) as exc:
                raise AdvisorError(f"chat completion failed: {exc}") from exc

    def _ask_json(self, system: str, user: str) -> dict:
        """One exchange with a single repair retry; raises AdvisorError."""
        messages = [
            {"role": "system", "content": system},
            {"role": "user", "content": user},
        ]
        last_exc: Exception | None = None
        for attempt in range(2):
            try:
                content = self._post_chat(messages)
            except AdvisorError as exc:
                last_exc = exc
                continue
            body = content.strip()
            fence = re.search(r"```(?:json)?\s*(.*?)```", body, re.DOTALL)
            if fence:
                body = fence.group(1).strip()
            try:
                data = json.loads(body)
                if isinstance(data, dict):
                    return data
                last_exc = ResponseParseError("payload is not a JSON object", content)
            except json.JSONDecodeError as exc:
                last_exc = ResponseParseError(f"invalid JSON ({exc})", content)
            if attempt == 0:
                messages.append({"role": "assistant", "content": content})
                messages.append({"role": "user", "content": _REPAIR_PROMPT})
        raise AdvisorError(f"remote advisor failed after retry: {last_exc}")

    def _substituted(self) -> None:
        with self._lock:
            self.substitutions += 1

    # -- contract ----------------------------------------------------------

    def decide(self, request: AdvisorRequest) -> StructuredResponse:
        prior = semantic_prior_text(request.observation)
        user = (
            f"Target object: {request.target_category}.\n"
            f"Detected labels per direction: {prior}.\n"
            "Choose the most promising direction."
        )
        try:
            data = self._ask_json(_DECIDE_SYSTEM, user)
            return parse_structured_response(json.dumps(data))
        except AdvisorError:
            self._substituted()
            return self._fallback.decide(request)

    def rethink(self, request: AdvisorRequest, original: StructuredResponse) -> StructuredResponse:
        prior = semantic_prior_text(request.observation)
        user = (
            f"Target object: {request.target_category}.\n"
            f"Detected labels per direction: {prior}.\n"
            f"You previously chose direction {int(original.a_dir)}, but it points "
            f"into terrain you already explored. Your earlier notes from there: "
            f"{request.injected_history}\n"
            "Weigh exploring old areas against new ones and choose a direction."
        )
        try:
            data = self._ask_json(_DECIDE_SYSTEM, user)
            return parse_structured_response(json.dumps(data))
        except AdvisorError:
            self._substituted()
            return self._fallback.rethink(request, original)

    def verify(
        self, request: AdvisorRequest, claimed_view: DirectionalView, access: OracleAccess
    ) -> bool:
        labels = ", ".join(sorted(claimed_view.labels)) or "none"
        user = (
            f"Look again carefully at the single view at angle "
            f"{int(claimed_view.view_yaw)} where you believed a "
            f"'{request.target_category}' is visible. Detected labels there: "
            f"{labels}. Could this be a reflection or texture artifact? "
            'Respond with strict JSON: {"confirmed": true|false}.'
        )
        data = self._ask_json(_DECIDE_SYSTEM, user)
        if "confirmed" not in data or not isinstance(data["confirmed"], bool):
            raise AdvisorError(f"verification reply missing boolean 'confirmed': {data!r}")
        return data["confirmed"]

    def pick_ray(self, rays: Sequence, direction_world: float) -> int:
        listing = "; ".join(
            f"ray {i}: heading {r.heading:.1f} deg, length {r.length:.2f} m"
            for i, r in enumerate(rays)
        )
        user = (
            f"Candidate motion rays: {listing}. The chosen exploration heading "
            f"is {direction_world:.1f} deg. Pick the best ray. Respond with "
            'strict JSON: {"ray_index": <int>}.'
        )
        try:
            data = self._ask_json(_DECIDE_SYSTEM, user)
            idx = data.get("ray_index")
            if not isinstance(idx, int) or not (0 <= idx < len(rays)):
                raise AdvisorError(f"ray_index {idx!r} out of range")
            return idx
        except AdvisorError:
            self._substituted()
            return self._fallback.pick_ray(rays, direction_world)
