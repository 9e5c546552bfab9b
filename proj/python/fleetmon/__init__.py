"""Unsupervised fleet fault detection: HELM ensembles, MMD similarity and
adversarial feature alignment (UFAN) over multivariate sensor streams."""

from fleetmon._core import *  # noqa: F401,F403
from fleetmon._core import __doc__ as _core_doc  # noqa: F401

__all__ = [name for name in dir() if not name.startswith("_")]
