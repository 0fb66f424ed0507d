"""Synthetic skeletons and sinusoidal clips for tests, demos and experiments."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .mocap_io import AnimationClip, Bone, Skeleton

ROT = ("Zrotation", "Xrotation", "Yrotation")


def demo_skeleton() -> Skeleton:
    """A small legged figure: root, spine and two 2-bone legs (18 angles)."""
    pos = ("Xposition", "Yposition", "Zposition")
    bones = [
        Bone("Hips", None, (0.0, 0.0, 0.0), pos + ROT),
        Bone("Spine", 0, (0.0, 1.0, 0.0), ROT),
        Bone("Head", 1, (0.0, 1.0, 0.0), (), True),
        Bone("LeftUpLeg", 0, (0.3, -0.1, 0.0), ROT),
        Bone("LeftLeg", 3, (0.0, -1.0, 0.0), ROT),
        Bone("LeftFoot", 4, (0.0, -1.0, 0.0), (), True),
        Bone("RightUpLeg", 0, (-0.3, -0.1, 0.0), ROT),
        Bone("RightLeg", 6, (0.0, -1.0, 0.0), ROT),
        Bone("RightFoot", 7, (0.0, -1.0, 0.0), (), True),
    ]
    return Skeleton(bones)


@dataclass(frozen=True)
class Gait:
    """Per-channel sinusoid parameters: theta_j(t) = bias + amp sin(2 pi cycles t / T + phase)."""

    amplitudes: np.ndarray
    phases: np.ndarray
    bias: np.ndarray
    cycles: float = 1.0


def random_gait(n: int, rng: np.random.Generator, cycles: float = 1.0,
                amplitude: tuple = (0.2, 0.8)) -> Gait:
    return Gait(rng.uniform(*amplitude, n), rng.uniform(0, 2 * math.pi, n),
                rng.uniform(-0.3, 0.3, n), cycles)


def gait_clip(skeleton: Skeleton, gait: Gait, frames: int = 128, duration: float = 2.0,
              period_fraction: float = 1.0, phase_shift: float = 0.0,
              stride: Optional[Sequence[float]] = None) -> AnimationClip:
    """Clip sampling ``gait`` over ``period_fraction`` of its full time span.

    ``phase_shift`` is a fraction of one cycle.  ``stride`` adds a constant
    root velocity (units per clip) on top of a small bounce.
    """
    t = np.linspace(0.0, period_fraction, frames)[:, None]
    arg = 2 * math.pi * (gait.cycles * t + phase_shift) + gait.phases
    angles = gait.bias + gait.amplitudes * np.sin(arg)
    root = np.zeros((frames, 3))
    root[:, 1] = 2.0 + 0.05 * np.sin(2 * math.pi * 2 * gait.cycles * (t[:, 0] + phase_shift / gait.cycles))
    if stride is not None:
        root += t * np.asarray(stride, dtype=float)
    return AnimationClip(skeleton, angles, root, duration * period_fraction / (frames - 1))


def corpus(skeleton: Optional[Skeleton] = None, classes: int = 3, variants: int = 5,
           frames: int = 128, seed: int = 0, amplitude_noise: float = 0.03,
           phase_shift: bool = True) -> tuple[list[AnimationClip], list[str], np.ndarray]:
    """Labelled synthetic corpus: class c repeats its own joint pattern c + 1 times.

    Variants differ by a random cyclic phase shift (when ``phase_shift``) and
    small multiplicative amplitude noise.  Returns clips, labels and class ids.
    """
    skeleton = skeleton or demo_skeleton()
    rng = np.random.default_rng(seed)
    n = skeleton.n
    clips, labels, ids = [], [], []
    for c in range(classes):
        base = random_gait(n, rng, cycles=c + 1)
        for v in range(variants):
            amps = base.amplitudes * (1 + amplitude_noise * rng.standard_normal(n))
            g = Gait(amps, base.phases, base.bias, base.cycles)
            shift = float(rng.uniform(0, 1)) if phase_shift else 0.0
            clips.append(gait_clip(skeleton, g, frames, phase_shift=shift))
            labels.append(f"class{c}_v{v}")
            ids.append(c)
    return clips, labels, np.array(ids)


def variant(gait: Gait, rng: np.random.Generator, amplitude_scale=(0.7, 1.5),
            phase_sigma: float = 0.5, bias_shift: float = 0.0) -> Gait:
    """A related gait: amplitudes scaled per channel, phases jittered, bias shifted."""
    n = len(gait.amplitudes)
    if np.isscalar(amplitude_scale):
        scale = np.full(n, float(amplitude_scale))
    else:
        scale = rng.uniform(*amplitude_scale, n)
    return Gait(gait.amplitudes * scale, gait.phases + phase_sigma * rng.standard_normal(n),
                gait.bias + bias_shift, gait.cycles)


def truncated_clip(seed: int = 0, fraction: float = 0.95, frames: int = 128,
                   skeleton: Optional[Skeleton] = None) -> AnimationClip:
    """One gait cycle cut short at ``fraction`` of its period, so it almost loops."""
    skeleton = skeleton or demo_skeleton()
    g = random_gait(skeleton.n, np.random.default_rng(seed))
    return gait_clip(skeleton, g, frames, period_fraction=fraction)


def walk_run_pair(seed: int = 0, frames: int = 128,
                  skeleton: Optional[Skeleton] = None) -> tuple[AnimationClip, AnimationClip]:
    """A looping walk and a larger, slightly retimed run on the same skeleton."""
    skeleton = skeleton or demo_skeleton()
    rng = np.random.default_rng(seed)
    walk = random_gait(skeleton.n, rng)
    run = variant(walk, rng, amplitude_scale=1.6, phase_sigma=0.3, bias_shift=0.1)
    return gait_clip(skeleton, walk, frames), gait_clip(skeleton, run, frames)


def tempo_pair(seed: int = 0, skeleton: Optional[Skeleton] = None) -> tuple[AnimationClip, AnimationClip]:
    """One cycle of a 1 Hz gait (61 frames over 1 s) and of a related 1.5 Hz gait
    (41 frames over 2/3 s), both sampled at 60 frames per second."""
    skeleton = skeleton or demo_skeleton()
    rng = np.random.default_rng(seed)
    slow = random_gait(skeleton.n, rng)
    fast = variant(slow, rng)
    return (gait_clip(skeleton, slow, 61, duration=1.0),
            gait_clip(skeleton, fast, 41, duration=2.0 / 3.0))
