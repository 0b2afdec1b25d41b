"""Rate-limited closed-loop sensing and control simulator."""

import json
from pathlib import Path

from . import _ratelink
from ._ratelink import (
    CheckpointError,
    Codec,
    LqrSolution,
    NumericalError,
    PlantModel,
    cholesky,
    identity_codec,
    load_codec,
    make_double_integrator,
    make_plant,
    pca_fit,
    solve_dare,
    solve_spd,
    steady_state_covariance,
    sym_eig,
)

__all__ = [
    "CheckpointError", "Codec", "LqrSolution", "NumericalError", "PlantModel",
    "ae_train", "cholesky", "collect_dataset", "evaluate_online", "identity_codec",
    "load_codec", "make_double_integrator", "make_plant", "pca_fit", "run_sweep",
    "scenario", "solve_dare", "solve_spd", "steady_state_covariance", "sym_eig",
]


def _as_json(doc):
    if isinstance(doc, (str, Path)) and Path(doc).is_file():
        return Path(doc).read_text()
    if isinstance(doc, str):
        return doc
    return json.dumps(doc)


def scenario(doc):
    """Strictly parse a scenario (dict, JSON text or path); returns a dict with defaults."""
    return json.loads(_ratelink.normalize_scenario(_as_json(doc)))


def collect_dataset(doc, rounds=0, test=False):
    """Per-sensor observation arrays (rows = samples) from the uncompressed loop."""
    return _ratelink.collect_dataset(_as_json(doc), rounds, test)


def evaluate_online(doc, codecs=()):
    return _ratelink.evaluate_online(_as_json(doc), list(codecs))


def ae_train(samples, latent_dim, **training):
    """Train an autoencoder codec; keyword args follow the scenario's training block."""
    return _ratelink.ae_train(samples, latent_dim, json.dumps(training))


def run_sweep(doc, cache_dir="", jobs=1, out_dir=""):
    return _ratelink.run_sweep(_as_json(doc), str(cache_dir), jobs, str(out_dir))
