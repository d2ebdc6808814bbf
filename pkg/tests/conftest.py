from collections import deque

import numpy as np
import pytest


class ScriptedRNG:
    """Stand-in generator that replays fixed uniform and normal draws."""

    def __init__(self, uniforms=(), normals=(), integer=0):
        self.uniforms = deque(float(u) for u in uniforms)
        self.normals = deque(float(v) for v in normals)
        self.integer = integer

    def random(self, size=None):
        if size is None:
            return self.uniforms.popleft()
        return np.array([self.uniforms.popleft() for _ in range(int(np.prod(size)))]).reshape(size)

    def standard_normal(self, size=None):
        if size is None:
            return self.normals.popleft()
        return np.array([self.normals.popleft() for _ in range(int(np.prod(size)))]).reshape(size)

    def integers(self, n):
        return self.integer


class CountingFitness:
    def __init__(self, fn):
        self.fn = fn
        self.calls = 0
        self.points = []

    def __call__(self, x):
        self.calls += 1
        self.points.append(np.array(x, dtype=float))
        return self.fn(x)


@pytest.fixture
def scripted():
    return ScriptedRNG
