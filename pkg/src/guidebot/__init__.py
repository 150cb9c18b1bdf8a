"""Headless engine for a gaze-and-speech virtual guide character.

Subpackages cover the interaction state machine (fsm), the spatial anchor
registry (anchors), the domain chatbot with sentiment (dialogue), response
performance composition (composer), simulated recognition backends (vision),
the per-query orchestrator (engine), the discrete-event study harness
(simulation), and an HTTP session service (service).
"""

__version__ = "0.1.0"
