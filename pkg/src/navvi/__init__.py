"""navvi: deterministic warehouse teleoperation simulator.

A human (or scripted policy) steers a differential-drive robot through a
dynamic warehouse while the system plans obstacle-avoiding routes over a
navigation mesh and emits synchronized haptic, audio, and visual guidance.
Every interaction event is logged for later analysis.
"""

__version__ = "0.1.0"

SCENE_FORMAT_VERSION = "navvi-scene/1"
WIRE_FORMAT_VERSION = "navvi-wire/1"
