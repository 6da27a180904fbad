"""Perception backends: ground truth, seeded noise, and an external wire-protocol bridge."""

from __future__ import annotations

import itertools
import json
import subprocess
import urllib.error
import urllib.request
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..pddl.core import Atom
from ..scenegraph import SceneGraph
from ..worldsim.geometry import DIRECTIONS
from ..worldsim.world import Observation
from .templates import (
    GOAL_PARSING_PROMPT,
    PREDICATE_QUERY_PROMPT,
    VIEW_SUFFICIENCY_PROMPT,
    VIEWPOINT_SELECTION_PROMPT,
    canonical_question,
    spoken,
)
from .voting import flip_probability

DEFAULT_SUFFICIENCY = 0.7


class BackendError(RuntimeError):
    """The backend could not produce an answer."""


class BackendUnavailable(BackendError):
    pass


class ProtocolError(BackendError):
    """The backend replied with something outside the protocol."""


@dataclass(frozen=True)
class Question:
    text: str
    atom: Atom | None = None
    kind: str = "predicate"  # predicate | success | affordance
    truth: bool | None = None  # ground truth for action-level questions, set by the executor


class PerceptionBackend(ABC):
    """Answers yes/no questions about an observation and suggests viewpoints."""

    @abstractmethod
    def answer(self, obs: Observation, question: Question) -> bool: ...

    @abstractmethod
    def sufficiency(self, obs: Observation, atom: Atom) -> bool: ...

    @abstractmethod
    def viewpoint(self, obs: Observation, atom: Atom) -> list[str]:
        """Directions ranked best first; the head is the suggestion."""

    def parse_goal(self, text: str, objects: Sequence[str], predicates: Sequence[str]) -> str:
        raise BackendError(f"{type(self).__name__} cannot parse natural-language goals")

    def close(self) -> None:
        pass


def _world(obs: Observation):
    if obs.world is None:
        raise BackendError("simulated backends need observations produced by a World")
    return obs.world


def _camera(obs: Observation) -> np.ndarray:
    return np.asarray(obs.viewpoint[1], dtype=float)


class GroundTruthBackend(PerceptionBackend):
    """Always answers with the simulator's truth; sufficiency still follows view quality."""

    def __init__(self, sufficiency_threshold: float = DEFAULT_SUFFICIENCY):
        self.threshold = sufficiency_threshold

    def _truth(self, obs: Observation, q: Question) -> bool:
        if q.kind == "predicate":
            return _world(obs).ground_truth_eval(q.atom)
        if q.truth is None:
            raise BackendError(f"action-level question without ground truth: {q.text!r}")
        return q.truth

    def answer(self, obs, question):
        return self._truth(obs, question)

    def quality(self, obs: Observation, atom: Atom) -> float:
        return _world(obs).atom_quality(atom, _camera(obs))

    def sufficiency(self, obs, atom):
        return self.quality(obs, atom) >= self.threshold

    def viewpoint(self, obs, atom):
        return _world(obs).suggest_directions(atom)


class NoisyBackend(GroundTruthBackend):
    """Truth flipped at ``eps_p`` (predicates, degraded by view quality) or ``eps_a`` (actions)."""

    def __init__(
        self,
        rng: np.random.Generator,
        eps_p: float = 0.1,
        eps_a: float = 0.2,
        sufficiency_threshold: float = DEFAULT_SUFFICIENCY,
    ):
        super().__init__(sufficiency_threshold)
        flip_probability(1.0, eps_p)
        flip_probability(1.0, eps_a)
        self.rng = rng
        self.eps_p = eps_p
        self.eps_a = eps_a

    def answer(self, obs, question):
        truth = self._truth(obs, question)
        if question.kind == "predicate":
            p = flip_probability(self.quality(obs, question.atom), self.eps_p)
        else:
            p = self.eps_a
        return truth != bool(self.rng.random() < p)


# -- external wire protocol -------------------------------------------------


def observation_payload(obs: Observation) -> dict:
    """What a remote backend sees: measured geometry plus viewpoint metadata."""
    graph = SceneGraph.build(obs.objects)
    return {
        "viewpoint": {"room": obs.viewpoint[0], "camera": list(obs.viewpoint[1])},
        "target": obs.target,
        "visible": sorted(obs.visible),
        "held": sorted(obs.held),
        "quality": {k: obs.quality[k] for k in sorted(obs.quality)},
        "scene_graph": graph.to_dict(),
        "image_path": None,
    }


class Transport(ABC):
    @abstractmethod
    def request(self, message: dict) -> dict: ...

    def close(self) -> None:
        pass


class StdioTransport(Transport):
    """Newline-delimited JSON to a child process's stdin, one reply line per request."""

    def __init__(self, command: Sequence[str] | str, timeout: float = 30.0):
        self.command = command
        self.timeout = timeout
        try:
            self.proc = subprocess.Popen(
                command, shell=isinstance(command, str), stdin=subprocess.PIPE,
                stdout=subprocess.PIPE, text=True, bufsize=1,
            )
        except OSError as e:
            raise BackendUnavailable(f"cannot start backend {command!r}: {e}") from None

    def request(self, message):
        if self.proc.poll() is not None:
            raise BackendUnavailable(f"backend exited with code {self.proc.returncode}")
        try:
            self.proc.stdin.write(json.dumps(message) + "\n")
            self.proc.stdin.flush()
            line = self.proc.stdout.readline()
        except (BrokenPipeError, OSError) as e:
            raise BackendUnavailable(f"backend pipe failed: {e}") from None
        if not line:
            raise BackendUnavailable("backend closed its output")
        try:
            reply = json.loads(line)
        except json.JSONDecodeError:
            raise ProtocolError(f"reply is not JSON: {line.strip()[:200]!r}") from None
        if not isinstance(reply, dict):
            raise ProtocolError(f"reply must be an object, got {type(reply).__name__}")
        return reply

    def close(self):
        if self.proc.poll() is None:
            self.proc.stdin.close()
            try:
                self.proc.wait(timeout=self.timeout)
            except subprocess.TimeoutExpired:
                self.proc.kill()


class HttpTransport(Transport):
    """One JSON POST per request."""

    def __init__(self, url: str, timeout: float = 30.0):
        self.url = url
        self.timeout = timeout

    def request(self, message):
        body = json.dumps(message).encode()
        req = urllib.request.Request(
            self.url, data=body, headers={"Content-Type": "application/json"}, method="POST"
        )
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                raw = resp.read()
        except (urllib.error.URLError, OSError) as e:
            raise BackendUnavailable(f"{self.url}: {e}") from None
        try:
            reply = json.loads(raw)
        except json.JSONDecodeError:
            raise ProtocolError(f"reply is not JSON: {raw[:200]!r}") from None
        if not isinstance(reply, dict):
            raise ProtocolError(f"reply must be an object, got {type(reply).__name__}")
        return reply


def transport_for(endpoint: str) -> Transport:
    """``http(s)://...`` posts JSON; anything else is a command speaking the protocol on stdio."""
    if endpoint.startswith(("http://", "https://")):
        return HttpTransport(endpoint)
    return StdioTransport(endpoint)


_session_ids = itertools.count(1)


class ExternalBackend(PerceptionBackend):
    """Forwards every query, with its prompt rendered, to an external model bridge.

    Requests carry ``type``, ``session``, ``prompt`` and ``observation``.
    Predicate queries also carry ``question_kind`` (predicate, success or
    affordance). Replies are ``{"answer": "yes"|"no"}``, ``{"direction": d}``
    or ``{"directions": [...]}``, and ``{"goal": "pred(a, b), ..."}``.
    """

    def __init__(self, transport: Transport | str, session: str | None = None):
        self.transport = transport_for(transport) if isinstance(transport, str) else transport
        self.session = session or f"s{next(_session_ids)}"

    def _send(self, kind: str, prompt: str, obs: Observation | None, **extra) -> dict:
        msg = {"type": kind, "session": self.session, "prompt": prompt, **extra}
        if obs is not None:
            msg["observation"] = observation_payload(obs)
        reply = self.transport.request(msg)
        if "error" in reply:
            raise BackendError(f"backend error: {reply['error']}")
        return reply

    @staticmethod
    def _yes_no(reply: dict) -> bool:
        ans = reply.get("answer")
        if not isinstance(ans, str) or ans.strip().lower().rstrip(".") not in ("yes", "no"):
            raise ProtocolError(f"expected answer yes/no, got {ans!r}")
        return ans.strip().lower().startswith("yes")

    def answer(self, obs, question):
        prompt = PREDICATE_QUERY_PROMPT.format(paraphrased_question=question.text)
        return self._yes_no(
            self._send("predicate_query", prompt, obs, question=question.text, question_kind=question.kind)
        )

    def sufficiency(self, obs, atom):
        q = canonical_question(atom)
        prompt = VIEW_SUFFICIENCY_PROMPT.format(predicate_question=q)
        return self._yes_no(self._send("sufficiency", prompt, obs, question=q))

    def viewpoint(self, obs, atom):
        q = canonical_question(atom)
        target = next((x for x in atom.args if x != "robot"), "scene")
        prompt = VIEWPOINT_SELECTION_PROMPT.format(predicate_question=q, target_object=spoken(target))
        reply = self._send("viewpoint", prompt, obs, question=q, target=target)
        if "directions" in reply:
            dirs = reply["directions"]
        elif "direction" in reply:
            dirs = [reply["direction"]]
        else:
            raise ProtocolError("viewpoint reply needs 'direction' or 'directions'")
        if not isinstance(dirs, list) or not dirs:
            raise ProtocolError(f"bad directions {dirs!r}")
        out = []
        for d in dirs:
            d = str(d).strip().lower()
            if d not in DIRECTIONS:
                raise ProtocolError(f"direction {d!r} not one of {', '.join(DIRECTIONS)}")
            out.append(d)
        return out

    def parse_goal(self, text, objects, predicates):
        prompt = GOAL_PARSING_PROMPT.format(
            instruction=text, object_list=", ".join(objects), predicate_list=", ".join(predicates)
        )
        reply = self._send("goal_parse", prompt, None, instruction=text)
        goal = reply.get("goal")
        if isinstance(goal, list):
            goal = ", ".join(map(str, goal))
        if not isinstance(goal, str):
            raise ProtocolError(f"goal_parse reply needs a 'goal' string, got {goal!r}")
        return goal

    def close(self):
        self.transport.close()
